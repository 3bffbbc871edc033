// Test-only reference implementations, kept independent of the library code
// paths they check.
#ifndef CIPHERNER_TESTS_ORACLES_HPP
#define CIPHERNER_TESTS_ORACLES_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cipherner/error.hpp"
#include "cipherner/nn.hpp"

namespace oracles {

// True iff fn throws a cipherner::Error with exactly this code.
template <typename Fn>
bool throws_code(Fn&& fn, cipherner::ErrorCode code) {
  try {
    fn();
  } catch (const cipherner::Error& e) {
    return e.code() == code;
  } catch (...) {
    return false;
  }
  return false;
}

// Bit-string Base64: collect bits, emit 6 at a time. Deliberately different
// construction from the library's 24-bit word encoder.
inline std::string reference_base64(const std::vector<uint8_t>& data) {
  static const char* kAlphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::vector<int> bits;
  bits.reserve(data.size() * 8);
  for (uint8_t byte : data) {
    for (int i = 7; i >= 0; --i) bits.push_back((byte >> i) & 1);
  }
  std::string out;
  for (size_t i = 0; i < bits.size(); i += 6) {
    int v = 0;
    for (size_t j = i; j < i + 6; ++j) {
      v = (v << 1) | (j < bits.size() ? bits[j] : 0);
    }
    out.push_back(kAlphabet[v]);
  }
  while (out.size() % 4 != 0) out.push_back('=');
  return out;
}

// Scores one label path with the same masked-transition convention the
// library's forward algorithm uses.
inline double path_score(const cipherner::nn::Matrix& emissions,
                         const cipherner::nn::CrfParams& crf,
                         const std::vector<size_t>& path) {
  double score = crf.score(crf.start(), path[0]) + emissions.at(0, path[0]);
  for (size_t t = 1; t < path.size(); ++t) {
    score += crf.score(path[t - 1], path[t]) + emissions.at(t, path[t]);
  }
  return score + crf.score(path.back(), crf.stop());
}

// Enumerates all K^T paths.
inline std::vector<std::vector<size_t>> all_paths(size_t t_len, size_t k) {
  std::vector<std::vector<size_t>> paths;
  std::vector<size_t> current(t_len, 0);
  for (;;) {
    paths.push_back(current);
    size_t pos = 0;
    while (pos < t_len && ++current[pos] == k) {
      current[pos] = 0;
      ++pos;
    }
    if (pos == t_len) break;
  }
  return paths;
}

inline double brute_force_log_partition(const cipherner::nn::Matrix& emissions,
                                        const cipherner::nn::CrfParams& crf) {
  auto paths = all_paths(emissions.rows, crf.num_tags);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> scores;
  scores.reserve(paths.size());
  for (const auto& path : paths) {
    double s = path_score(emissions, crf, path);
    scores.push_back(s);
    best = std::max(best, s);
  }
  double acc = 0.0;
  for (double s : scores) acc += std::exp(s - best);
  return best + std::log(acc);
}

// Max over feasible paths, hard-rejecting masked transitions, raw scores.
// Returns (score, path); score is -inf when no path is feasible.
inline std::pair<double, std::vector<size_t>> brute_force_viterbi(
    const cipherner::nn::Matrix& emissions, const cipherner::nn::CrfParams& crf) {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<size_t> best_path;
  for (const auto& path : all_paths(emissions.rows, crf.num_tags)) {
    if (!crf.allowed(crf.start(), path[0])) continue;
    bool ok = crf.allowed(path.back(), crf.stop());
    double score = crf.transitions.at(crf.start(), path[0]) + emissions.at(0, path[0]);
    for (size_t t = 1; ok && t < path.size(); ++t) {
      if (!crf.allowed(path[t - 1], path[t])) {
        ok = false;
        break;
      }
      score += crf.transitions.at(path[t - 1], path[t]) + emissions.at(t, path[t]);
    }
    if (!ok) continue;
    score += crf.transitions.at(path.back(), crf.stop());
    if (score > best) {
      best = score;
      best_path = path;
    }
  }
  return {best, best_path};
}

// Independent BIOES validity check, written as one explicit pass over
// (head, type) pairs rather than the library's open-run state machine.
inline bool bioes_valid(const std::vector<std::string>& labels) {
  auto head = [](const std::string& s) { return s[0]; };
  auto type = [](const std::string& s) { return s.size() > 2 ? s.substr(2) : std::string(); };
  for (size_t i = 0; i < labels.size(); ++i) {
    char h = head(labels[i]);
    if (h == 'I' || h == 'E') {
      if (i == 0) return false;
      char prev = head(labels[i - 1]);
      if (!(prev == 'B' || prev == 'I')) return false;
      if (type(labels[i - 1]) != type(labels[i])) return false;
    }
    if (h == 'B' || h == 'I') {
      if (i + 1 == labels.size()) return false;
      char next = head(labels[i + 1]);
      if (!(next == 'I' || next == 'E')) return false;
      if (type(labels[i + 1]) != type(labels[i])) return false;
    }
  }
  return true;
}

// Relative error with an absolute floor for near-zero pairs.
inline double rel_err(double a, double b) {
  double scale = std::max(std::abs(a), std::abs(b));
  if (scale < 1e-10) return 0.0;
  return std::abs(a - b) / scale;
}

}  // namespace oracles

#endif  // CIPHERNER_TESTS_ORACLES_HPP
