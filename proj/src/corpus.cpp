#include "cipherner/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "cipherner/rng.hpp"
#include "cipherner/utf8.hpp"

namespace cipherner::corpus {

namespace {

bool is_upper_ident(std::string_view s) {
  if (s.empty()) return false;
  if (s[0] < 'A' || s[0] > 'Z') return false;
  for (char c : s) {
    if (!((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_')) return false;
  }
  return true;
}

bool has_whitespace(std::string_view s) {
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') return true;
  }
  return false;
}

}  // namespace

bool is_valid_label(std::string_view label) {
  if (label == "O") return true;
  if (label.size() < 3 || label[1] != '-') return false;
  char head = label[0];
  if (head != 'B' && head != 'I' && head != 'E' && head != 'S') return false;
  return is_upper_ident(label.substr(2));
}

std::pair<char, std::string> split_label(std::string_view label) {
  if (label == "O") return {'O', ""};
  return {label[0], std::string(label.substr(2))};
}

bool is_valid_bioes_sequence(const std::vector<std::string>& labels) {
  std::string open_type;  // non-empty while inside a B..E run
  for (const auto& label : labels) {
    if (!is_valid_label(label)) return false;
    auto [head, type] = split_label(label);
    if (open_type.empty()) {
      if (head == 'I' || head == 'E') return false;
      if (head == 'B') open_type = type;
    } else {
      if (head != 'I' && head != 'E') return false;
      if (type != open_type) return false;
      if (head == 'E') open_type.clear();
    }
  }
  return open_type.empty();
}

std::vector<std::string> bio_to_bioes(const std::vector<std::string>& labels) {
  std::vector<std::string> out(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    const auto& label = labels[i];
    auto [head, type] = split_label(label);
    if (head == 'O') {
      out[i] = "O";
      continue;
    }
    bool next_continues = false;
    if (i + 1 < labels.size()) {
      auto [nh, nt] = split_label(labels[i + 1]);
      next_continues = (nh == 'I' && nt == type);
    }
    if (head == 'B') {
      out[i] = (next_continues ? "B-" : "S-") + type;
    } else {  // I
      out[i] = (next_continues ? "I-" : "E-") + type;
    }
  }
  return out;
}

Corpus parse_conll(std::string_view text, const ParseOptions& options) {
  if (text.empty()) throw Error(ErrorCode::EmptyCorpus, "empty input");

  Corpus corpus;
  std::vector<std::string> surfaces;
  std::vector<std::string> labels;
  size_t line_no = 0;

  auto close_sentence = [&]() {
    if (surfaces.empty()) return;
    if (surfaces.size() > options.max_sentence_len) {
      throw Error(ErrorCode::MalformedLine,
                  "sentence exceeds " + std::to_string(options.max_sentence_len) + " tokens");
    }
    std::vector<std::string> final_labels =
        options.bio_input ? bio_to_bioes(labels) : labels;
    if (options.strict_transitions && !is_valid_bioes_sequence(final_labels)) {
      throw Error(ErrorCode::InvalidTransition,
                  "BIOES-invalid sequence ending at line " + std::to_string(line_no));
    }
    Sentence sentence;
    sentence.tokens.reserve(surfaces.size());
    for (size_t i = 0; i < surfaces.size(); ++i) {
      sentence.tokens.push_back({std::move(surfaces[i]), std::move(final_labels[i])});
    }
    corpus.sentences.push_back(std::move(sentence));
    surfaces.clear();
    labels.clear();
  };

  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string_view line = (eol == std::string_view::npos)
                                ? text.substr(pos)
                                : text.substr(pos, eol - pos);
    if (eol == std::string_view::npos && line.empty()) break;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty()) {
      close_sentence();
    } else {
      size_t tab = line.find('\t');
      if (tab == std::string_view::npos) {
        throw Error(ErrorCode::MalformedLine, "no TAB on line " + std::to_string(line_no));
      }
      std::string_view token = line.substr(0, tab);
      std::string_view label = line.substr(tab + 1);
      if (token.empty() || has_whitespace(token)) {
        throw Error(ErrorCode::MalformedLine, "bad token on line " + std::to_string(line_no));
      }
      bool label_ok = options.bio_input
                          ? (label == "O" ||
                             (label.size() >= 3 && (label[0] == 'B' || label[0] == 'I') &&
                              label[1] == '-' && is_upper_ident(label.substr(2))))
                          : is_valid_label(label);
      if (!label_ok) {
        throw Error(ErrorCode::InvalidLabel,
                    "label '" + std::string(label) + "' on line " + std::to_string(line_no));
      }
      surfaces.emplace_back(token);
      labels.emplace_back(label);
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  close_sentence();

  if (corpus.sentences.empty()) throw Error(ErrorCode::EmptyCorpus, "no sentences");
  return corpus;
}

std::string write_conll(const Corpus& corpus) {
  std::string out;
  for (const auto& sentence : corpus.sentences) {
    for (const auto& tok : sentence.tokens) {
      out += tok.surface;
      out += '\t';
      out += tok.label;
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

std::vector<EntitySpan> extract_spans(const std::vector<std::string>& labels, bool strict) {
  if (strict && !is_valid_bioes_sequence(labels)) {
    throw Error(ErrorCode::InvalidTransition, "BIOES-invalid label sequence");
  }
  std::vector<EntitySpan> spans;
  std::string open_type;
  size_t open_start = 0;

  auto close_open = [&](size_t end) {
    spans.push_back({open_start, end, open_type});
    open_type.clear();
  };

  for (size_t i = 0; i < labels.size(); ++i) {
    auto [head, type] = split_label(labels[i]);
    switch (head) {
      case 'O':
        if (!open_type.empty()) close_open(i - 1);
        break;
      case 'B':
        if (!open_type.empty()) close_open(i - 1);
        open_type = type;
        open_start = i;
        break;
      case 'S':
        if (!open_type.empty()) close_open(i - 1);
        spans.push_back({i, i, type});
        break;
      case 'I':
        if (open_type.empty() || open_type != type) {
          if (!open_type.empty()) close_open(i - 1);
          open_type = type;  // tolerant: treat stray I as a span start
          open_start = i;
        }
        break;
      case 'E':
        if (open_type == type) {
          close_open(i);
        } else {
          if (!open_type.empty()) close_open(i - 1);
          spans.push_back({i, i, type});
        }
        break;
      default:
        throw Error(ErrorCode::InvalidLabel, "label '" + labels[i] + "'");
    }
  }
  if (!open_type.empty()) close_open(labels.size() - 1);
  return spans;
}

std::vector<std::string> spans_to_bioes(const std::vector<EntitySpan>& spans, size_t len) {
  std::vector<std::string> labels(len, "O");
  for (const auto& span : spans) {
    if (span.end >= len || span.start > span.end) {
      throw Error(ErrorCode::ShapeMismatch, "span out of range");
    }
    if (span.start == span.end) {
      labels[span.start] = "S-" + span.entity_type;
    } else {
      labels[span.start] = "B-" + span.entity_type;
      for (size_t i = span.start + 1; i < span.end; ++i) labels[i] = "I-" + span.entity_type;
      labels[span.end] = "E-" + span.entity_type;
    }
  }
  return labels;
}

Metrics span_f1(const std::vector<std::vector<std::string>>& gold,
                const std::vector<std::vector<std::string>>& pred) {
  if (gold.size() != pred.size()) {
    throw Error(ErrorCode::ShapeMismatch, "sentence count mismatch");
  }
  Metrics m;
  for (size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].size() != pred[i].size()) {
      throw Error(ErrorCode::ShapeMismatch,
                  "length mismatch in sentence " + std::to_string(i));
    }
    auto gs = extract_spans(gold[i]);
    auto ps = extract_spans(pred[i]);
    std::set<EntitySpan> gold_set(gs.begin(), gs.end());
    uint64_t matched = 0;
    for (const auto& span : ps) {
      if (gold_set.count(span)) ++matched;
    }
    m.tp += matched;
    m.fp += ps.size() - matched;
    m.fn += gs.size() - matched;
  }
  // Empty denominators follow the CoNLL-eval convention: perfect when the
  // other side is empty too, zero otherwise.
  m.precision = (m.tp + m.fp > 0) ? static_cast<double>(m.tp) / (m.tp + m.fp)
                                  : (m.fn == 0 ? 1.0 : 0.0);
  m.recall = (m.tp + m.fn > 0) ? static_cast<double>(m.tp) / (m.tp + m.fn)
                               : (m.fp == 0 ? 1.0 : 0.0);
  m.f1 = (m.precision + m.recall > 0)
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

Metrics span_f1(const Corpus& gold, const std::vector<std::vector<std::string>>& pred) {
  std::vector<std::vector<std::string>> gold_labels;
  gold_labels.reserve(gold.sentences.size());
  for (const auto& s : gold.sentences) gold_labels.push_back(labels_of(s));
  return span_f1(gold_labels, pred);
}

std::vector<std::string> labels_of(const Sentence& sentence) {
  std::vector<std::string> out;
  out.reserve(sentence.tokens.size());
  for (const auto& tok : sentence.tokens) out.push_back(tok.label);
  return out;
}

std::vector<std::string> tokens_of(const Sentence& sentence) {
  std::vector<std::string> out;
  out.reserve(sentence.tokens.size());
  for (const auto& tok : sentence.tokens) out.push_back(tok.surface);
  return out;
}

namespace {

constexpr char32_t kSurfaceBase = 0x4E00;  // CJK Unified Ideographs
constexpr double kNoiseRate = 0.10;

struct SynthPools {
  std::vector<std::string> context;
  std::vector<std::vector<std::string>> per_type;
  std::vector<std::string> noise;
};

SynthPools build_pools(const SynthConfig& config) {
  size_t n = config.vocab_size;
  size_t k = config.entity_types.size();
  size_t n_noise = std::max<size_t>(1, n / 10);
  size_t remaining = n - n_noise;
  size_t n_context = std::max<size_t>(1, remaining * 2 / 5);
  if (remaining < n_context || (remaining - n_context) < k) {
    throw Error(ErrorCode::ConfigInvalid,
                "vocab_size too small for " + std::to_string(k) + " entity types");
  }
  size_t per_type = (remaining - n_context) / k;
  n_context = remaining - per_type * k;  // leftovers go to context

  SynthPools pools;
  size_t next = 0;
  auto take = [&](size_t count) {
    std::vector<std::string> out;
    out.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      std::string s;
      utf8::append(s, kSurfaceBase + static_cast<char32_t>(next++));
      out.push_back(std::move(s));
    }
    return out;
  };
  pools.context = take(n_context);
  for (size_t t = 0; t < k; ++t) pools.per_type.push_back(take(per_type));
  pools.noise = take(n_noise);
  return pools;
}

void validate_synth_config(const SynthConfig& config) {
  if (config.n_sentences < 1) throw Error(ErrorCode::ConfigInvalid, "n_sentences < 1");
  if (config.vocab_size < 16) throw Error(ErrorCode::ConfigInvalid, "vocab_size < 16");
  if (config.vocab_size > 20992) {
    throw Error(ErrorCode::ConfigInvalid, "vocab_size exceeds the CJK surface pool");
  }
  if (config.max_len < 8 || config.max_len > kMaxSentenceLen) {
    throw Error(ErrorCode::ConfigInvalid, "max_len must be in [8, 512]");
  }
  if (config.entity_types.empty()) throw Error(ErrorCode::ConfigInvalid, "no entity types");
  std::set<std::string> seen;
  for (const auto& t : config.entity_types) {
    if (!is_upper_ident(t)) {
      throw Error(ErrorCode::ConfigInvalid, "bad entity type '" + t + "'");
    }
    if (!seen.insert(t).second) {
      throw Error(ErrorCode::ConfigInvalid, "duplicate entity type '" + t + "'");
    }
  }
}

}  // namespace

Corpus generate_synthetic(const SynthConfig& config, uint64_t seed) {
  validate_synth_config(config);
  SynthPools pools = build_pools(config);
  size_t k = config.entity_types.size();
  Rng rng(seed);

  auto draw = [&](const std::vector<std::string>& pool) {
    return pool[rng.below(pool.size())];
  };
  auto draw_mixed = [&](const std::vector<std::string>& pool) {
    return rng.chance(kNoiseRate) ? draw(pools.noise) : draw(pool);
  };

  Corpus corpus;
  corpus.sentences.reserve(config.n_sentences);
  size_t entity_counter = 0;

  for (size_t s = 0; s < config.n_sentences; ++s) {
    Sentence sentence;
    size_t n_entities = 1 + rng.below(3);
    for (size_t e = 0; e < n_entities; ++e) {
      size_t run_len = 1 + rng.below(3);
      size_t ent_len = 1 + rng.below(4);
      // The first entity always fits (max_len >= 8); later ones are dropped
      // once the sentence would overflow.
      if (e > 0 && sentence.tokens.size() + run_len + ent_len + 1 > config.max_len) break;

      size_t type_idx = entity_counter < k ? entity_counter : rng.below(k);
      ++entity_counter;
      const auto& type = config.entity_types[type_idx];

      for (size_t i = 0; i < run_len; ++i) {
        sentence.tokens.push_back({draw_mixed(pools.context), "O"});
      }
      for (size_t i = 0; i < ent_len; ++i) {
        std::string label;
        if (ent_len == 1) {
          label = "S-" + type;
        } else if (i == 0) {
          label = "B-" + type;
        } else if (i + 1 == ent_len) {
          label = "E-" + type;
        } else {
          label = "I-" + type;
        }
        sentence.tokens.push_back({draw_mixed(pools.per_type[type_idx]), std::move(label)});
      }
    }
    size_t tail = 1 + rng.below(3);
    for (size_t i = 0; i < tail && sentence.tokens.size() < config.max_len; ++i) {
      sentence.tokens.push_back({draw_mixed(pools.context), "O"});
    }
    corpus.sentences.push_back(std::move(sentence));
  }
  return corpus;
}

std::array<Corpus, 3> split(const Corpus& corpus, std::array<double, 3> ratios,
                            uint64_t seed) {
  double sum = ratios[0] + ratios[1] + ratios[2];
  for (double r : ratios) {
    if (r < 0.0) throw Error(ErrorCode::ConfigInvalid, "negative split ratio");
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::ConfigInvalid, "split ratios must sum to 1");
  }
  size_t n = corpus.sentences.size();
  size_t n_train = static_cast<size_t>(std::llround(ratios[0] * n));
  size_t n_dev = static_cast<size_t>(std::llround(ratios[1] * n));
  n_train = std::min(n_train, n);
  n_dev = std::min(n_dev, n - n_train);
  return split_counts(corpus, n_train, n_dev, seed);
}

std::array<Corpus, 3> split_counts(const Corpus& corpus, size_t n_train,
                                   size_t n_dev, uint64_t seed) {
  size_t n = corpus.sentences.size();
  if (n_train + n_dev > n) throw Error(ErrorCode::ConfigInvalid, "split counts exceed corpus");

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  std::array<std::vector<size_t>, 3> parts;
  parts[0].assign(order.begin(), order.begin() + n_train);
  parts[1].assign(order.begin() + n_train, order.begin() + n_train + n_dev);
  parts[2].assign(order.begin() + n_train + n_dev, order.end());

  std::array<Corpus, 3> out;
  for (size_t p = 0; p < 3; ++p) {
    std::sort(parts[p].begin(), parts[p].end());
    out[p].scheme = corpus.scheme;
    out[p].sentences.reserve(parts[p].size());
    for (size_t idx : parts[p]) out[p].sentences.push_back(corpus.sentences[idx]);
  }
  return out;
}

std::map<std::string, std::string> parse_kv_file(std::string_view text) {
  std::map<std::string, std::string> kv;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string_view line = (eol == std::string_view::npos)
                                ? text.substr(pos)
                                : text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
    if (!line.empty() && line[0] != '#') {
      size_t eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw Error(ErrorCode::ConfigInvalid, "config line without '=': " + std::string(line));
      }
      kv[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 1));
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return kv;
}

namespace {

uint64_t parse_u64(const std::string& key, const std::string& value) {
  uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(ErrorCode::ConfigInvalid, "bad integer for " + key + ": '" + value + "'");
  }
  return out;
}

}  // namespace

std::pair<SynthConfig, std::optional<uint64_t>> parse_synth_config(std::string_view text) {
  SynthConfig config;
  std::optional<uint64_t> seed;
  for (const auto& [key, value] : parse_kv_file(text)) {
    if (key == "n_sentences") {
      config.n_sentences = parse_u64(key, value);
    } else if (key == "vocab_size") {
      config.vocab_size = parse_u64(key, value);
    } else if (key == "max_len") {
      config.max_len = parse_u64(key, value);
    } else if (key == "seed") {
      seed = parse_u64(key, value);
    } else if (key == "entity_types") {
      config.entity_types.clear();
      std::stringstream ss{value};
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) config.entity_types.push_back(item);
      }
    } else {
      throw Error(ErrorCode::ConfigInvalid, "unknown config key '" + key + "'");
    }
  }
  return {config, seed};
}

}  // namespace cipherner::corpus
