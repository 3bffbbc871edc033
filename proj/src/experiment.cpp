#include "cipherner/experiment.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <sstream>

#include "cipherner/digest.hpp"

namespace cipherner::experiment {

std::vector<cipher::CipherScheme> parity_schemes() {
  return {
      cipher::CipherScheme::parse("shift:3"),
      cipher::CipherScheme::parse("base64"),
      cipher::CipherScheme::parse("md5"),
      cipher::CipherScheme::parse("sha256b64"),
  };
}

ParityReport run_parity(const ParityConfig& config_in) {
  ParityConfig config = config_in;
  config.train.seed = config.seed;
  if (config.n_train + config.n_dev + config.n_test != config.synth.n_sentences) {
    throw Error(ErrorCode::ConfigInvalid, "split counts must add up to n_sentences");
  }

  corpus::Corpus full = corpus::generate_synthetic(config.synth, config.seed);
  auto parts = corpus::split_counts(full, config.n_train, config.n_dev, config.seed);
  const corpus::Corpus& train_c = parts[0];
  const corpus::Corpus& dev_c = parts[1];
  const corpus::Corpus& test_c = parts[2];

  // The provider encrypts the whole dataset with one codebook, so train and
  // test tokens of one type share one image.
  corpus::Vocabulary full_vocab;
  for (const auto& part : parts) {
    for (const auto& sentence : part.sentences) {
      for (const auto& tok : sentence.tokens) full_vocab.add(tok.surface);
    }
  }

  ParityReport report;
  report.config = config;

  auto run_variant = [&](const std::string& name, const ner::TaggedSequences& tr,
                         const ner::TaggedSequences* dev, const ner::TaggedSequences& te) {
    VariantResult row;
    row.scheme = name;
    auto t0 = std::chrono::steady_clock::now();
    ner::TrainedModel model = ner::train(tr, dev, config.train);
    row.metrics = ner::evaluate(model, te);
    auto t1 = std::chrono::steady_clock::now();
    row.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    row.checkpoint = nn::save_checkpoint(model.params, config.train.seed,
                                         static_cast<uint32_t>(config.train.epochs));
    report.rows.push_back(std::move(row));
  };

  {
    auto tr = ner::from_corpus(train_c);
    auto dv = ner::from_corpus(dev_c);
    auto te = ner::from_corpus(test_c);
    run_variant("plaintext", tr, dev_c.sentences.empty() ? nullptr : &dv, te);
  }
  for (const auto& scheme : parity_schemes()) {
    auto codebook = cipher::build_codebook(full_vocab, scheme);
    auto tr = ner::from_bundle(cipher::encrypt_corpus(train_c, codebook, /*strict=*/true));
    auto dv = dev_c.sentences.empty()
                  ? ner::TaggedSequences{}
                  : ner::from_bundle(cipher::encrypt_corpus(dev_c, codebook, true));
    auto te = ner::from_bundle(cipher::encrypt_corpus(test_c, codebook, true));
    run_variant(scheme.name(), tr, dev_c.sentences.empty() ? nullptr : &dv, te);
  }

  double base_f1 = report.rows[0].metrics.f1;
  for (size_t i = 0; i < report.rows.size(); ++i) {
    report.rows[i].delta_f1 = (i == 0) ? 0.0 : report.rows[i].metrics.f1 - base_f1;
  }
  return report;
}

std::string render_report(const ParityReport& report) {
  const auto& cfg = report.config;
  std::ostringstream out;
  char line[256];

  std::string types;
  for (size_t i = 0; i < cfg.synth.entity_types.size(); ++i) {
    if (i) types += ',';
    types += cfg.synth.entity_types[i];
  }
  out << "parity experiment: plaintext vs four cipher variants, one split, one seed\n";
  std::snprintf(line, sizeof line,
                "  seed=%llu vocab_mode=%s epochs=%zu lr=%g clip=%g embed=%zu hidden=%zu\n",
                static_cast<unsigned long long>(cfg.seed),
                cfg.train.vocab_mode == ner::VocabMode::FirstOccurrence ? "first" : "lex",
                cfg.train.epochs, cfg.train.lr, cfg.train.clip, cfg.train.embed_dim,
                cfg.train.hidden_dim);
  out << line;
  std::snprintf(line, sizeof line,
                "  train=%zu dev=%zu test=%zu entity_types=%s vocab_size=%zu max_len=%zu\n\n",
                cfg.n_train, cfg.n_dev, cfg.n_test, types.c_str(), cfg.synth.vocab_size,
                cfg.synth.max_len);
  out << line;

  std::snprintf(line, sizeof line, "%-11s %-8s %-8s %-8s %-9s %s\n", "scheme", "P", "R",
                "F1", "dF1", "wall_s");
  out << line;
  for (const auto& row : report.rows) {
    std::snprintf(line, sizeof line, "%-11s %-8.4f %-8.4f %-8.4f %+-9.4f %.2f\n",
                  row.scheme.c_str(), row.metrics.precision, row.metrics.recall,
                  row.metrics.f1, row.delta_f1, row.wall_seconds);
    out << line;
  }

  out << "\ncontext: reported LSTM-CRF F1 under this five-variant protocol on a\n"
         "clinical-domain character-level Chinese NER benchmark: plaintext 87.90,\n"
         "serial 88.18, base64 87.88, md5 88.07, sha256+base64 87.61 (max |dF1| 0.29).\n";

  out << "\n";
  std::snprintf(line, sizeof line, "parity.seed=%llu\n",
                static_cast<unsigned long long>(cfg.seed));
  out << line;
  out << "parity.vocab_mode="
      << (cfg.train.vocab_mode == ner::VocabMode::FirstOccurrence ? "first" : "lex")
      << "\n";
  std::snprintf(line, sizeof line, "parity.epochs=%zu\n", cfg.train.epochs);
  out << line;
  for (size_t i = 0; i < report.rows.size(); ++i) {
    const auto& row = report.rows[i];
    std::array<uint8_t, 32> ckpt_digest =
        digest::Sha256::of(std::string_view(reinterpret_cast<const char*>(row.checkpoint.data()),
                                            row.checkpoint.size()));
    std::snprintf(line, sizeof line, "parity.row.%zu.scheme=%s\n", i, row.scheme.c_str());
    out << line;
    std::snprintf(line, sizeof line, "parity.row.%zu.precision=%.17g\n", i,
                  row.metrics.precision);
    out << line;
    std::snprintf(line, sizeof line, "parity.row.%zu.recall=%.17g\n", i, row.metrics.recall);
    out << line;
    std::snprintf(line, sizeof line, "parity.row.%zu.f1=%.17g\n", i, row.metrics.f1);
    out << line;
    std::snprintf(line, sizeof line, "parity.row.%zu.delta_f1=%.17g\n", i, row.delta_f1);
    out << line;
    std::snprintf(line, sizeof line, "parity.row.%zu.checkpoint_sha256=%s\n", i,
                  digest::to_hex(ckpt_digest).c_str());
    out << line;
  }
  return out.str();
}

ParityConfig parse_parity_config(std::string_view text) {
  ParityConfig config;
  auto kv = corpus::parse_kv_file(text);

  auto u64 = [&](const std::string& value, const char* key) {
    uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      throw Error(ErrorCode::ConfigInvalid, std::string("bad integer for ") + key);
    }
    return out;
  };
  auto f64 = [&](const std::string& value, const char* key) {
    try {
      size_t used = 0;
      double out = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(key);
      return out;
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigInvalid, std::string("bad number for ") + key);
    }
  };

  for (const auto& [key, value] : kv) {
    if (key == "n_sentences") {
      config.synth.n_sentences = u64(value, key.c_str());
    } else if (key == "vocab_size") {
      config.synth.vocab_size = u64(value, key.c_str());
    } else if (key == "max_len") {
      config.synth.max_len = u64(value, key.c_str());
    } else if (key == "entity_types") {
      config.synth.entity_types.clear();
      std::stringstream ss{value};
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) config.synth.entity_types.push_back(item);
      }
    } else if (key == "seed") {
      config.seed = u64(value, key.c_str());
    } else if (key == "n_train") {
      config.n_train = u64(value, key.c_str());
    } else if (key == "n_dev") {
      config.n_dev = u64(value, key.c_str());
    } else if (key == "n_test") {
      config.n_test = u64(value, key.c_str());
    } else if (key == "epochs") {
      config.train.epochs = u64(value, key.c_str());
    } else if (key == "lr") {
      config.train.lr = f64(value, key.c_str());
    } else if (key == "clip") {
      config.train.clip = f64(value, key.c_str());
    } else if (key == "embed_dim") {
      config.train.embed_dim = u64(value, key.c_str());
    } else if (key == "hidden_dim") {
      config.train.hidden_dim = u64(value, key.c_str());
    } else if (key == "vocab_mode") {
      if (value == "first") {
        config.train.vocab_mode = ner::VocabMode::FirstOccurrence;
      } else if (value == "lex") {
        config.train.vocab_mode = ner::VocabMode::Lexicographic;
      } else {
        throw Error(ErrorCode::ConfigInvalid, "vocab_mode must be first or lex");
      }
    } else {
      throw Error(ErrorCode::ConfigInvalid, "unknown config key '" + key + "'");
    }
  }

  if (config.n_train + config.n_dev + config.n_test != config.synth.n_sentences) {
    throw Error(ErrorCode::ConfigInvalid, "split counts must add up to n_sentences");
  }
  return config;
}

}  // namespace cipherner::experiment
