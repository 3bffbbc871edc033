#include "cipherner/ner.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cipherner/digest.hpp"

namespace cipherner::ner {

TaggedSequences from_corpus(const corpus::Corpus& corpus) {
  TaggedSequences out;
  out.tokens.reserve(corpus.sentences.size());
  out.labels.reserve(corpus.sentences.size());
  for (const auto& sentence : corpus.sentences) {
    out.tokens.push_back(corpus::tokens_of(sentence));
    out.labels.push_back(corpus::labels_of(sentence));
  }
  return out;
}

TaggedSequences from_bundle(const cipher::EncryptedBundle& bundle) {
  cipher::validate_bundle(bundle);
  TaggedSequences out;
  out.tokens = bundle.text1;
  out.labels = bundle.text2;
  out.fingerprint = bundle.codebook_fingerprint;
  return out;
}

std::vector<std::string> build_tagset(const TaggedSequences& data) {
  std::vector<std::string> types;
  std::set<std::string> seen;
  for (const auto& sentence : data.labels) {
    for (const auto& label : sentence) {
      if (!corpus::is_valid_label(label)) {
        throw Error(ErrorCode::InvalidLabel, "label '" + label + "'");
      }
      auto [head, type] = corpus::split_label(label);
      if (head != 'O' && seen.insert(type).second) types.push_back(type);
    }
  }
  std::vector<std::string> tagset = {"O"};
  for (const auto& type : types) {
    tagset.push_back("B-" + type);
    tagset.push_back("I-" + type);
    tagset.push_back("E-" + type);
    tagset.push_back("S-" + type);
  }
  return tagset;
}

std::vector<uint8_t> build_constraint_mask(const std::vector<std::string>& tagset) {
  size_t k = tagset.size();
  // Completeness: O present, and all four of B/I/E/S per type.
  std::map<std::string, std::set<char>> heads_by_type;
  bool has_o = false;
  for (const auto& tag : tagset) {
    if (!corpus::is_valid_label(tag)) {
      throw Error(ErrorCode::InvalidLabel, "tag '" + tag + "'");
    }
    auto [head, type] = corpus::split_label(tag);
    if (head == 'O') {
      has_o = true;
    } else {
      heads_by_type[type].insert(head);
    }
  }
  if (!has_o) throw Error(ErrorCode::IncompleteTagset, "missing O");
  for (const auto& [type, heads] : heads_by_type) {
    if (heads.size() != 4) {
      throw Error(ErrorCode::IncompleteTagset, "type " + type + " lacks B/I/E/S tags");
    }
  }

  size_t n = k + 2;
  size_t start = k, stop = k + 1;
  std::vector<uint8_t> mask(n * n, 0);
  auto allow = [&](size_t from, size_t to) { mask[from * n + to] = 1; };

  auto head_of = [&](size_t idx) { return corpus::split_label(tagset[idx]).first; };
  auto type_of = [&](size_t idx) { return corpus::split_label(tagset[idx]).second; };

  for (size_t i = 0; i < k; ++i) {
    char hi = head_of(i);
    std::string ti = type_of(i);
    // Sentence-final: an open run (B/I) may not end.
    if (hi == 'O' || hi == 'E' || hi == 'S') allow(i, stop);
    for (size_t j = 0; j < k; ++j) {
      char hj = head_of(j);
      std::string tj = type_of(j);
      bool ok;
      if (hi == 'B' || hi == 'I') {
        ok = (hj == 'I' || hj == 'E') && tj == ti;
      } else {  // O, E, S all close the current span
        ok = (hj == 'O' || hj == 'B' || hj == 'S');
      }
      if (ok) allow(i, j);
    }
  }
  for (size_t j = 0; j < k; ++j) {
    char hj = head_of(j);
    if (hj == 'O' || hj == 'B' || hj == 'S') allow(start, j);
  }
  return mask;
}

corpus::Vocabulary build_vocab(const TaggedSequences& data, VocabMode mode) {
  corpus::Vocabulary vocab;
  if (mode == VocabMode::FirstOccurrence) {
    for (const auto& sentence : data.tokens) {
      for (const auto& token : sentence) vocab.add(token);
    }
  } else {
    std::set<std::string> sorted;
    for (const auto& sentence : data.tokens) {
      for (const auto& token : sentence) sorted.insert(token);
    }
    for (const auto& token : sorted) vocab.add(token);
  }
  return vocab;
}

namespace {

std::vector<size_t> token_ids(const corpus::Vocabulary& vocab,
                              const std::vector<std::string>& tokens) {
  std::vector<size_t> ids;
  ids.reserve(tokens.size());
  for (const auto& token : tokens) ids.push_back(vocab.id_of(token));
  return ids;
}

std::vector<size_t> label_ids(const std::map<std::string, size_t>& tag_index,
                              const std::vector<std::string>& labels) {
  std::vector<size_t> ids;
  ids.reserve(labels.size());
  for (const auto& label : labels) {
    auto it = tag_index.find(label);
    if (it == tag_index.end()) {
      throw Error(ErrorCode::InvalidLabel, "label '" + label + "' not in tagset");
    }
    ids.push_back(it->second);
  }
  return ids;
}

}  // namespace

TrainedModel train(const TaggedSequences& data, const TaggedSequences* dev,
                   const TrainConfig& config) {
  if (data.size() == 0) throw Error(ErrorCode::EmptyCorpus, "no training sentences");
  if (config.epochs < 1) throw Error(ErrorCode::ConfigInvalid, "epochs must be >= 1");

  TrainedModel model;
  model.config = config;
  model.fingerprint = data.fingerprint;
  model.vocab = build_vocab(data, config.vocab_mode);
  model.tagset = build_tagset(data);

  std::map<std::string, size_t> tag_index;
  for (size_t i = 0; i < model.tagset.size(); ++i) tag_index[model.tagset[i]] = i;

  nn::ModelDims dims;
  dims.embed_dim = config.embed_dim;
  dims.hidden_dim = config.hidden_dim;
  dims.vocab_size = model.vocab.size();
  dims.num_tags = model.tagset.size();
  auto mask = build_constraint_mask(model.tagset);
  model.params = nn::init_params(dims, mask, config.seed);

  std::vector<std::vector<size_t>> xs, ys;
  xs.reserve(data.size());
  ys.reserve(data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    if (data.tokens[i].empty()) {
      throw Error(ErrorCode::EmptyCorpus, "empty sentence " + std::to_string(i));
    }
    xs.push_back(token_ids(model.vocab, data.tokens[i]));
    ys.push_back(label_ids(tag_index, data.labels[i]));
  }

  nn::ModelGrads grads = nn::make_grads(dims);
  nn::SequenceTrace trace;
  double best_dev_f1 = -1.0;
  nn::ModelParams best_params;

  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double total_nll = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
      nn::model_forward(model.params, xs[i], trace);
      grads.zero();
      total_nll += nn::model_nll_backward(model.params, trace, ys[i], grads);
      nn::sgd_step(model.params, grads, config.lr, config.clip);
    }
    model.loss_history.push_back(total_nll / xs.size());

    if (config.dev_selection && dev != nullptr && dev->size() > 0) {
      double f1 = evaluate(model, *dev).f1;
      if (f1 > best_dev_f1) {
        best_dev_f1 = f1;
        best_params = model.params;
      }
    }
  }
  if (config.dev_selection && best_dev_f1 >= 0.0) {
    model.params = best_params;
  }
  return model;
}

std::vector<std::string> predict(const TrainedModel& model,
                                 const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw Error(ErrorCode::EmptyInput, "no tokens");
  auto ids = token_ids(model.vocab, tokens);
  auto emissions = nn::bilstm_encode(model.params, ids);
  auto result = nn::viterbi(emissions, model.params.crf);
  std::vector<std::string> labels;
  labels.reserve(result.path.size());
  for (size_t tag : result.path) labels.push_back(model.tagset[tag]);
  return labels;
}

corpus::Metrics evaluate(const TrainedModel& model, const TaggedSequences& test) {
  if (model.fingerprint && test.fingerprint && *model.fingerprint != *test.fingerprint) {
    throw Error(ErrorCode::SchemeMismatch,
                "test bundle was encrypted with a different codebook");
  }
  if (!model.fingerprint && test.fingerprint) {
    throw Error(ErrorCode::SchemeMismatch,
                "plaintext-trained model evaluated on an encrypted bundle");
  }
  std::vector<std::vector<std::string>> preds;
  preds.reserve(test.size());
  for (const auto& sentence : test.tokens) preds.push_back(predict(model, sentence));
  return corpus::span_f1(test.labels, preds);
}

void save_model(const TrainedModel& model, const std::string& prefix) {
  auto bytes = nn::save_checkpoint(model.params, model.config.seed,
                                   static_cast<uint32_t>(model.config.epochs));
  std::ofstream ckpt(prefix + ".ner1", std::ios::binary);
  if (!ckpt) throw Error(ErrorCode::IoError, "cannot write " + prefix + ".ner1");
  ckpt.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  ckpt.close();
  if (!ckpt) throw Error(ErrorCode::IoError, "write failed: " + prefix + ".ner1");

  nlohmann::json meta;
  meta["tagset"] = model.tagset;
  meta["vocab"] = model.vocab.surfaces();
  meta["config"] = {
      {"embed_dim", model.config.embed_dim},
      {"hidden_dim", model.config.hidden_dim},
      {"epochs", model.config.epochs},
      {"lr", model.config.lr},
      {"clip", model.config.clip},
      {"seed", model.config.seed},
      {"vocab_mode",
       model.config.vocab_mode == VocabMode::FirstOccurrence ? "first" : "lex"},
      {"dev_selection", model.config.dev_selection},
  };
  meta["loss_history"] = model.loss_history;
  if (model.fingerprint) {
    meta["codebook_fingerprint"] = digest::to_hex(*model.fingerprint);
  }
  std::ofstream mf(prefix + ".meta.json");
  if (!mf) throw Error(ErrorCode::IoError, "cannot write " + prefix + ".meta.json");
  mf << meta.dump(2) << "\n";
}

TrainedModel load_model(const std::string& prefix) {
  std::ifstream ckpt(prefix + ".ner1", std::ios::binary);
  if (!ckpt) throw Error(ErrorCode::IoError, "cannot read " + prefix + ".ner1");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(ckpt)),
                             std::istreambuf_iterator<char>());
  auto loaded = nn::load_checkpoint(bytes);

  std::ifstream mf(prefix + ".meta.json");
  if (!mf) throw Error(ErrorCode::IoError, "cannot read " + prefix + ".meta.json");
  nlohmann::json meta;
  try {
    mf >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("bad model meta: ") + e.what());
  }

  TrainedModel model;
  model.params = std::move(loaded.params);
  model.tagset = meta.at("tagset").get<std::vector<std::string>>();
  for (const auto& surface : meta.at("vocab").get<std::vector<std::string>>()) {
    model.vocab.add(surface);
  }
  const auto& cfg = meta.at("config");
  model.config.embed_dim = cfg.at("embed_dim").get<size_t>();
  model.config.hidden_dim = cfg.at("hidden_dim").get<size_t>();
  model.config.epochs = cfg.at("epochs").get<size_t>();
  model.config.lr = cfg.at("lr").get<double>();
  model.config.clip = cfg.at("clip").get<double>();
  model.config.seed = cfg.at("seed").get<uint64_t>();
  model.config.vocab_mode = cfg.at("vocab_mode").get<std::string>() == "lex"
                                ? VocabMode::Lexicographic
                                : VocabMode::FirstOccurrence;
  model.config.dev_selection = cfg.at("dev_selection").get<bool>();
  if (meta.contains("loss_history")) {
    model.loss_history = meta.at("loss_history").get<std::vector<double>>();
  }
  if (meta.contains("codebook_fingerprint")) {
    std::array<uint8_t, 32> fp{};
    auto hex = meta.at("codebook_fingerprint").get<std::string>();
    if (hex.size() != 64) throw Error(ErrorCode::IoError, "bad fingerprint in meta");
    for (size_t i = 0; i < 32; ++i) {
      fp[i] = static_cast<uint8_t>(std::stoul(hex.substr(2 * i, 2), nullptr, 16));
    }
    model.fingerprint = fp;
  }

  if (model.tagset.size() != model.params.dims.num_tags ||
      model.vocab.size() != model.params.dims.vocab_size) {
    throw Error(ErrorCode::IoError, "model meta does not match checkpoint dims");
  }
  model.params.crf.mask = build_constraint_mask(model.tagset);
  return model;
}

}  // namespace cipherner::ner
