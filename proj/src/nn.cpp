#include "cipherner/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace cipherner::nn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_finite(const Vector& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::NonFiniteInput, std::string("non-finite value in ") + what);
    }
  }
}

void append_u32_le(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void append_u64_le(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void append_f64_le(std::vector<uint8_t>& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  append_u64_le(out, bits);
}

struct LeReader {
  const std::vector<uint8_t>& bytes;
  size_t pos = 0;

  void need(size_t n) {
    if (pos + n > bytes.size()) {
      throw Error(ErrorCode::IoError, "truncated checkpoint");
    }
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[pos + i];
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[pos + i];
    pos += 8;
    return v;
  }
  double f64() {
    uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
};

}  // namespace

void matvec_add(const Matrix& w, const double* x, double* y) {
  for (size_t i = 0; i < w.rows; ++i) {
    const double* row = w.row(i);
    double acc = 0.0;
    for (size_t j = 0; j < w.cols; ++j) acc += row[j] * x[j];
    y[i] += acc;
  }
}

void matvec_t_add(const Matrix& w, const double* d, double* y) {
  for (size_t i = 0; i < w.rows; ++i) {
    const double* row = w.row(i);
    double di = d[i];
    for (size_t j = 0; j < w.cols; ++j) y[j] += row[j] * di;
  }
}

void outer_add(Matrix& w, const double* d, const double* x) {
  for (size_t i = 0; i < w.rows; ++i) {
    double* row = w.row(i);
    double di = d[i];
    for (size_t j = 0; j < w.cols; ++j) row[j] += di * x[j];
  }
}

double log_sum_exp(const double* v, size_t n) {
  double m = kNegInf;
  for (size_t i = 0; i < n; ++i) m = std::max(m, v[i]);
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += std::exp(v[i] - m);
  return m + std::log(acc);
}

void LstmParams::zero() {
  for (size_t g = 0; g < kNumGates; ++g) {
    w_alpha[g].zero();
    w_beta[g].zero();
    std::fill(bias[g].begin(), bias[g].end(), 0.0);
  }
}

void lstm_cell(const LstmParams& params, const Vector& x, const Vector& h_prev,
               const Vector& c_prev, LstmStepCache& out) {
  size_t h = params.hidden_dim();
  if (x.size() != params.input_dim() || h_prev.size() != h || c_prev.size() != h) {
    throw Error(ErrorCode::ShapeMismatch, "lstm_cell input shapes");
  }
  check_finite(x, "x");
  check_finite(h_prev, "h_prev");
  check_finite(c_prev, "c_prev");

  out.x = x;
  out.h_prev = h_prev;
  out.c_prev = c_prev;
  for (size_t g = 0; g < kNumGates; ++g) {
    Vector pre = params.bias[g];
    matvec_add(params.w_alpha[g], x.data(), pre.data());
    matvec_add(params.w_beta[g], h_prev.data(), pre.data());
    out.gate[g].resize(h);
    if (g == kCell) {
      for (size_t i = 0; i < h; ++i) out.gate[g][i] = std::tanh(pre[i]);
    } else {
      for (size_t i = 0; i < h; ++i) out.gate[g][i] = sigmoid(pre[i]);
    }
  }

  out.c.resize(h);
  out.tanh_c.resize(h);
  out.h.resize(h);
  for (size_t i = 0; i < h; ++i) {
    out.c[i] = out.gate[kForget][i] * c_prev[i] + out.gate[kInput][i] * out.gate[kCell][i];
    out.tanh_c[i] = std::tanh(out.c[i]);
    out.h[i] = out.gate[kOutput][i] * out.tanh_c[i];
  }
}

void lstm_cell_backward(const LstmParams& params, const LstmStepCache& cache,
                        const Vector& dh, const Vector& dc, LstmParams& grads,
                        Vector& dx, Vector& dh_prev, Vector& dc_prev) {
  size_t h = params.hidden_dim();
  size_t d = params.input_dim();

  Vector dpre[kNumGates];
  for (size_t g = 0; g < kNumGates; ++g) dpre[g].assign(h, 0.0);
  dc_prev.assign(h, 0.0);

  for (size_t i = 0; i < h; ++i) {
    double o = cache.gate[kOutput][i];
    double f = cache.gate[kForget][i];
    double in = cache.gate[kInput][i];
    double g = cache.gate[kCell][i];
    double tc = cache.tanh_c[i];

    double d_o = dh[i] * tc;
    double dct = dc[i] + dh[i] * o * (1.0 - tc * tc);

    dpre[kOutput][i] = d_o * o * (1.0 - o);
    dpre[kForget][i] = dct * cache.c_prev[i] * f * (1.0 - f);
    dpre[kInput][i] = dct * g * in * (1.0 - in);
    dpre[kCell][i] = dct * in * (1.0 - g * g);
    dc_prev[i] = dct * f;
  }

  dx.assign(d, 0.0);
  dh_prev.assign(h, 0.0);
  for (size_t g = 0; g < kNumGates; ++g) {
    outer_add(grads.w_alpha[g], dpre[g].data(), cache.x.data());
    outer_add(grads.w_beta[g], dpre[g].data(), cache.h_prev.data());
    for (size_t i = 0; i < h; ++i) grads.bias[g][i] += dpre[g][i];
    matvec_t_add(params.w_alpha[g], dpre[g].data(), dx.data());
    matvec_t_add(params.w_beta[g], dpre[g].data(), dh_prev.data());
  }
}

double crf_log_partition(const Matrix& emissions, const CrfParams& crf) {
  size_t t_len = emissions.rows;
  size_t k = crf.num_tags;
  if (t_len == 0 || emissions.cols != k) {
    throw Error(ErrorCode::ShapeMismatch, "emission shape");
  }
  Vector alpha(k), next(k), scores(k);
  for (size_t j = 0; j < k; ++j) alpha[j] = crf.score(crf.start(), j) + emissions.at(0, j);
  for (size_t t = 1; t < t_len; ++t) {
    for (size_t j = 0; j < k; ++j) {
      for (size_t i = 0; i < k; ++i) scores[i] = alpha[i] + crf.score(i, j);
      next[j] = log_sum_exp(scores.data(), k) + emissions.at(t, j);
    }
    alpha.swap(next);
  }
  for (size_t j = 0; j < k; ++j) scores[j] = alpha[j] + crf.score(j, crf.stop());
  return log_sum_exp(scores.data(), k);
}

double crf_gold_score(const Matrix& emissions, const CrfParams& crf,
                      const std::vector<size_t>& path) {
  size_t t_len = emissions.rows;
  size_t k = crf.num_tags;
  if (path.size() != t_len) throw Error(ErrorCode::ShapeMismatch, "gold path length");
  for (size_t y : path) {
    if (y >= k) throw Error(ErrorCode::IndexOutOfRange, "gold tag index");
  }
  if (!crf.allowed(crf.start(), path[0])) {
    throw Error(ErrorCode::GoldViolatesConstraints, "START transition");
  }
  double score = crf.score(crf.start(), path[0]) + emissions.at(0, path[0]);
  for (size_t t = 1; t < t_len; ++t) {
    if (!crf.allowed(path[t - 1], path[t])) {
      throw Error(ErrorCode::GoldViolatesConstraints,
                  "transition at position " + std::to_string(t));
    }
    score += crf.score(path[t - 1], path[t]) + emissions.at(t, path[t]);
  }
  if (!crf.allowed(path[t_len - 1], crf.stop())) {
    throw Error(ErrorCode::GoldViolatesConstraints, "STOP transition");
  }
  return score + crf.score(path[t_len - 1], crf.stop());
}

double crf_nll(const Matrix& emissions, const CrfParams& crf,
               const std::vector<size_t>& gold) {
  return crf_log_partition(emissions, crf) - crf_gold_score(emissions, crf, gold);
}

double crf_nll_backward(const Matrix& emissions, const CrfParams& crf,
                        const std::vector<size_t>& gold, Matrix& d_emissions,
                        Matrix& d_transitions) {
  size_t t_len = emissions.rows;
  size_t k = crf.num_tags;
  double gold_score = crf_gold_score(emissions, crf, gold);

  Matrix alpha(t_len, k), beta(t_len, k);
  Vector scores(k);
  for (size_t j = 0; j < k; ++j) alpha.at(0, j) = crf.score(crf.start(), j) + emissions.at(0, j);
  for (size_t t = 1; t < t_len; ++t) {
    for (size_t j = 0; j < k; ++j) {
      for (size_t i = 0; i < k; ++i) scores[i] = alpha.at(t - 1, i) + crf.score(i, j);
      alpha.at(t, j) = log_sum_exp(scores.data(), k) + emissions.at(t, j);
    }
  }
  for (size_t i = 0; i < k; ++i) beta.at(t_len - 1, i) = crf.score(i, crf.stop());
  for (size_t t = t_len - 1; t-- > 0;) {
    for (size_t i = 0; i < k; ++i) {
      for (size_t j = 0; j < k; ++j) {
        scores[j] = crf.score(i, j) + emissions.at(t + 1, j) + beta.at(t + 1, j);
      }
      beta.at(t, i) = log_sum_exp(scores.data(), k);
    }
  }
  for (size_t j = 0; j < k; ++j) scores[j] = alpha.at(t_len - 1, j) + crf.score(j, crf.stop());
  double log_z = log_sum_exp(scores.data(), k);

  // Unary marginals into emission grads; gold indicators subtracted.
  for (size_t t = 0; t < t_len; ++t) {
    for (size_t j = 0; j < k; ++j) {
      double m = std::exp(alpha.at(t, j) + beta.at(t, j) - log_z);
      d_emissions.at(t, j) += m - (gold[t] == j ? 1.0 : 0.0);
    }
  }

  // Transition marginals. Masked entries are never read by the scorer, so
  // they receive no gradient.
  for (size_t j = 0; j < k; ++j) {
    if (!crf.allowed(crf.start(), j)) continue;
    double m = std::exp(alpha.at(0, j) + beta.at(0, j) - log_z);
    d_transitions.at(crf.start(), j) += m - (gold[0] == j ? 1.0 : 0.0);
  }
  for (size_t t = 0; t + 1 < t_len; ++t) {
    for (size_t i = 0; i < k; ++i) {
      for (size_t j = 0; j < k; ++j) {
        if (!crf.allowed(i, j)) continue;
        double m = std::exp(alpha.at(t, i) + crf.score(i, j) + emissions.at(t + 1, j) +
                            beta.at(t + 1, j) - log_z);
        double ind = (gold[t] == i && gold[t + 1] == j) ? 1.0 : 0.0;
        d_transitions.at(i, j) += m - ind;
      }
    }
  }
  for (size_t i = 0; i < k; ++i) {
    if (!crf.allowed(i, crf.stop())) continue;
    double m = std::exp(alpha.at(t_len - 1, i) + beta.at(t_len - 1, i) - log_z);
    d_transitions.at(i, crf.stop()) += m - (gold[t_len - 1] == i ? 1.0 : 0.0);
  }

  return log_z - gold_score;
}

ViterbiResult viterbi(const Matrix& emissions, const CrfParams& crf) {
  size_t t_len = emissions.rows;
  size_t k = crf.num_tags;
  if (t_len == 0 || emissions.cols != k) {
    throw Error(ErrorCode::ShapeMismatch, "emission shape");
  }

  Matrix dp(t_len, k);
  std::vector<std::vector<size_t>> back(t_len, std::vector<size_t>(k, 0));
  for (size_t j = 0; j < k; ++j) {
    dp.at(0, j) = crf.allowed(crf.start(), j)
                      ? crf.transitions.at(crf.start(), j) + emissions.at(0, j)
                      : kNegInf;
  }
  for (size_t t = 1; t < t_len; ++t) {
    for (size_t j = 0; j < k; ++j) {
      double best = kNegInf;
      size_t best_i = 0;
      for (size_t i = 0; i < k; ++i) {
        if (dp.at(t - 1, i) == kNegInf || !crf.allowed(i, j)) continue;
        double cand = dp.at(t - 1, i) + crf.transitions.at(i, j);
        if (cand > best) {
          best = cand;
          best_i = i;
        }
      }
      dp.at(t, j) = best == kNegInf ? kNegInf : best + emissions.at(t, j);
      back[t][j] = best_i;
    }
  }

  double best = kNegInf;
  size_t best_j = 0;
  for (size_t j = 0; j < k; ++j) {
    if (dp.at(t_len - 1, j) == kNegInf || !crf.allowed(j, crf.stop())) continue;
    double cand = dp.at(t_len - 1, j) + crf.transitions.at(j, crf.stop());
    if (cand > best) {
      best = cand;
      best_j = j;
    }
  }
  if (best == kNegInf) {
    throw Error(ErrorCode::NoFeasiblePath, "all label paths are masked");
  }

  ViterbiResult result;
  result.score = best;
  result.path.resize(t_len);
  result.path[t_len - 1] = best_j;
  for (size_t t = t_len - 1; t > 0; --t) {
    result.path[t - 1] = back[t][result.path[t]];
  }
  return result;
}

namespace {

void init_lstm(LstmParams& lstm, size_t hidden, size_t input, Rng& rng) {
  for (size_t g = 0; g < kNumGates; ++g) {
    lstm.w_alpha[g] = Matrix(hidden, input);
    for (auto& v : lstm.w_alpha[g].a) v = rng.uniform(-0.1, 0.1);
    lstm.w_beta[g] = Matrix(hidden, hidden);
    for (auto& v : lstm.w_beta[g].a) v = rng.uniform(-0.1, 0.1);
    lstm.bias[g].resize(hidden);
    for (auto& v : lstm.bias[g]) v = rng.uniform(-0.1, 0.1);
  }
}

void zero_lstm_like(LstmParams& lstm, const ModelDims& dims, size_t input) {
  for (size_t g = 0; g < kNumGates; ++g) {
    lstm.w_alpha[g] = Matrix(dims.hidden_dim, input);
    lstm.w_beta[g] = Matrix(dims.hidden_dim, dims.hidden_dim);
    lstm.bias[g].assign(dims.hidden_dim, 0.0);
  }
}

}  // namespace

ModelParams init_params(const ModelDims& dims, const std::vector<uint8_t>& mask,
                        uint64_t seed) {
  Rng rng(seed);
  ModelParams params;
  params.dims = dims;
  params.embeddings = Matrix(dims.vocab_size, dims.embed_dim);
  for (auto& v : params.embeddings.a) v = rng.uniform(-0.1, 0.1);
  init_lstm(params.forward, dims.hidden_dim, dims.embed_dim, rng);
  init_lstm(params.backward, dims.hidden_dim, dims.embed_dim, rng);
  params.proj_w = Matrix(dims.num_tags, 2 * dims.hidden_dim);
  for (auto& v : params.proj_w.a) v = rng.uniform(-0.1, 0.1);
  params.proj_b.resize(dims.num_tags);
  for (auto& v : params.proj_b) v = rng.uniform(-0.1, 0.1);
  params.crf.num_tags = dims.num_tags;
  params.crf.transitions = Matrix(dims.num_tags + 2, dims.num_tags + 2);
  for (auto& v : params.crf.transitions.a) v = rng.uniform(-0.1, 0.1);
  params.crf.mask = mask;
  return params;
}

ModelGrads make_grads(const ModelDims& dims) {
  ModelGrads grads;
  grads.embeddings = Matrix(dims.vocab_size, dims.embed_dim);
  zero_lstm_like(grads.forward, dims, dims.embed_dim);
  zero_lstm_like(grads.backward, dims, dims.embed_dim);
  grads.proj_w = Matrix(dims.num_tags, 2 * dims.hidden_dim);
  grads.proj_b.assign(dims.num_tags, 0.0);
  grads.transitions = Matrix(dims.num_tags + 2, dims.num_tags + 2);
  return grads;
}

void ModelGrads::zero() {
  embeddings.zero();
  forward.zero();
  backward.zero();
  proj_w.zero();
  std::fill(proj_b.begin(), proj_b.end(), 0.0);
  transitions.zero();
}

void model_forward(const ModelParams& params, const std::vector<size_t>& tokens,
                   SequenceTrace& trace) {
  size_t t_len = tokens.size();
  if (t_len == 0) throw Error(ErrorCode::EmptyInput, "empty token sequence");
  size_t h = params.dims.hidden_dim;
  size_t d = params.dims.embed_dim;
  size_t k = params.dims.num_tags;
  for (size_t id : tokens) {
    if (id >= params.dims.vocab_size) {
      throw Error(ErrorCode::IndexOutOfRange, "token id " + std::to_string(id));
    }
  }

  trace.tokens = tokens;
  trace.fw_steps.assign(t_len, {});
  trace.bw_steps.assign(t_len, {});
  trace.h_cat.assign(t_len, Vector(2 * h, 0.0));
  trace.emissions = Matrix(t_len, k);

  Vector x(d);
  Vector h_state(h, 0.0), c_state(h, 0.0);
  for (size_t t = 0; t < t_len; ++t) {
    const double* e = params.embeddings.row(tokens[t]);
    std::copy(e, e + d, x.begin());
    lstm_cell(params.forward, x, h_state, c_state, trace.fw_steps[t]);
    h_state = trace.fw_steps[t].h;
    c_state = trace.fw_steps[t].c;
    std::copy(h_state.begin(), h_state.end(), trace.h_cat[t].begin());
  }

  h_state.assign(h, 0.0);
  c_state.assign(h, 0.0);
  for (size_t t = t_len; t-- > 0;) {
    const double* e = params.embeddings.row(tokens[t]);
    std::copy(e, e + d, x.begin());
    lstm_cell(params.backward, x, h_state, c_state, trace.bw_steps[t]);
    h_state = trace.bw_steps[t].h;
    c_state = trace.bw_steps[t].c;
    std::copy(h_state.begin(), h_state.end(), trace.h_cat[t].begin() + h);
  }

  for (size_t t = 0; t < t_len; ++t) {
    double* row = trace.emissions.row(t);
    std::copy(params.proj_b.begin(), params.proj_b.end(), row);
    matvec_add(params.proj_w, trace.h_cat[t].data(), row);
  }
}

Matrix bilstm_encode(const ModelParams& params, const std::vector<size_t>& tokens) {
  SequenceTrace trace;
  model_forward(params, tokens, trace);
  return trace.emissions;
}

double model_nll_backward(const ModelParams& params, const SequenceTrace& trace,
                          const std::vector<size_t>& gold, ModelGrads& grads) {
  size_t t_len = trace.tokens.size();
  size_t h = params.dims.hidden_dim;
  if (gold.size() != t_len) throw Error(ErrorCode::ShapeMismatch, "gold length");

  Matrix d_emissions(t_len, params.dims.num_tags);
  double nll = crf_nll_backward(trace.emissions, params.crf, gold, d_emissions,
                                grads.transitions);

  std::vector<Vector> dh_cat(t_len, Vector(2 * h, 0.0));
  for (size_t t = 0; t < t_len; ++t) {
    const double* de = d_emissions.row(t);
    outer_add(grads.proj_w, de, trace.h_cat[t].data());
    for (size_t j = 0; j < params.dims.num_tags; ++j) grads.proj_b[j] += de[j];
    matvec_t_add(params.proj_w, de, dh_cat[t].data());
  }

  Vector dh(h), dc(h, 0.0), dx, dh_prev, dc_prev;
  // Forward direction: walk time backwards.
  std::fill(dc.begin(), dc.end(), 0.0);
  Vector dh_carry(h, 0.0);
  for (size_t t = t_len; t-- > 0;) {
    for (size_t i = 0; i < h; ++i) dh[i] = dh_cat[t][i] + dh_carry[i];
    lstm_cell_backward(params.forward, trace.fw_steps[t], dh, dc, grads.forward, dx,
                       dh_prev, dc_prev);
    double* erow = grads.embeddings.row(trace.tokens[t]);
    for (size_t i = 0; i < dx.size(); ++i) erow[i] += dx[i];
    dh_carry = dh_prev;
    dc = dc_prev;
  }
  // Backward direction: its first processed step is t = T-1, so gradients
  // walk forward in t.
  std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
  std::fill(dc.begin(), dc.end(), 0.0);
  for (size_t t = 0; t < t_len; ++t) {
    for (size_t i = 0; i < h; ++i) dh[i] = dh_cat[t][h + i] + dh_carry[i];
    lstm_cell_backward(params.backward, trace.bw_steps[t], dh, dc, grads.backward, dx,
                       dh_prev, dc_prev);
    double* erow = grads.embeddings.row(trace.tokens[t]);
    for (size_t i = 0; i < dx.size(); ++i) erow[i] += dx[i];
    dh_carry = dh_prev;
    dc = dc_prev;
  }
  return nll;
}

namespace {

template <typename Fn>
void for_each_tensor(const ModelGrads& grads, Fn&& fn) {
  fn(grads.embeddings.a);
  for (size_t g = 0; g < kNumGates; ++g) {
    fn(grads.forward.w_alpha[g].a);
    fn(grads.forward.w_beta[g].a);
    fn(grads.forward.bias[g]);
  }
  for (size_t g = 0; g < kNumGates; ++g) {
    fn(grads.backward.w_alpha[g].a);
    fn(grads.backward.w_beta[g].a);
    fn(grads.backward.bias[g]);
  }
  fn(grads.proj_w.a);
  fn(grads.proj_b);
  fn(grads.transitions.a);
}

template <typename Fn>
void for_each_tensor_pair(ModelParams& params, const ModelGrads& grads, Fn&& fn) {
  fn(params.embeddings.a, grads.embeddings.a);
  for (size_t g = 0; g < kNumGates; ++g) {
    fn(params.forward.w_alpha[g].a, grads.forward.w_alpha[g].a);
    fn(params.forward.w_beta[g].a, grads.forward.w_beta[g].a);
    fn(params.forward.bias[g], grads.forward.bias[g]);
  }
  for (size_t g = 0; g < kNumGates; ++g) {
    fn(params.backward.w_alpha[g].a, grads.backward.w_alpha[g].a);
    fn(params.backward.w_beta[g].a, grads.backward.w_beta[g].a);
    fn(params.backward.bias[g], grads.backward.bias[g]);
  }
  fn(params.proj_w.a, grads.proj_w.a);
  fn(params.proj_b, grads.proj_b);
  fn(params.crf.transitions.a, grads.transitions.a);
}

}  // namespace

double global_grad_norm(const ModelGrads& grads) {
  double sum = 0.0;
  for_each_tensor(grads, [&](const std::vector<double>& t) {
    for (double v : t) sum += v * v;
  });
  return std::sqrt(sum);
}

void sgd_step(ModelParams& params, const ModelGrads& grads, double lr, double clip) {
  if (lr <= 0.0) throw Error(ErrorCode::ConfigInvalid, "learning rate must be positive");
  double scale = 1.0;
  if (std::isfinite(clip) && clip > 0.0) {
    double norm = global_grad_norm(grads);
    if (norm > clip) scale = clip / norm;
  }
  double step = lr * scale;
  for_each_tensor_pair(params, grads,
                       [&](std::vector<double>& p, const std::vector<double>& g) {
                         for (size_t i = 0; i < p.size(); ++i) p[i] -= step * g[i];
                       });
}

std::vector<uint8_t> save_checkpoint(const ModelParams& params, uint64_t seed,
                                     uint32_t epoch) {
  std::vector<uint8_t> out = {'N', 'E', 'R', '1'};
  append_u32_le(out, 1);  // version
  append_u32_le(out, static_cast<uint32_t>(params.dims.embed_dim));
  append_u32_le(out, static_cast<uint32_t>(params.dims.hidden_dim));
  append_u32_le(out, static_cast<uint32_t>(params.dims.vocab_size));
  append_u32_le(out, static_cast<uint32_t>(params.dims.num_tags));
  append_u64_le(out, seed);
  append_u32_le(out, epoch);

  auto dump = [&](const std::vector<double>& t) {
    for (double v : t) append_f64_le(out, v);
  };
  dump(params.embeddings.a);
  for (size_t g = 0; g < kNumGates; ++g) {
    dump(params.forward.w_alpha[g].a);
    dump(params.forward.w_beta[g].a);
    dump(params.forward.bias[g]);
  }
  for (size_t g = 0; g < kNumGates; ++g) {
    dump(params.backward.w_alpha[g].a);
    dump(params.backward.w_beta[g].a);
    dump(params.backward.bias[g]);
  }
  dump(params.proj_w.a);
  dump(params.proj_b);
  dump(params.crf.transitions.a);
  return out;
}

Checkpoint load_checkpoint(const std::vector<uint8_t>& bytes) {
  LeReader reader{bytes};
  reader.need(4);
  if (!(bytes[0] == 'N' && bytes[1] == 'E' && bytes[2] == 'R' && bytes[3] == '1')) {
    throw Error(ErrorCode::IoError, "bad checkpoint magic");
  }
  reader.pos = 4;
  uint32_t version = reader.u32();
  if (version != 1) throw Error(ErrorCode::IoError, "unknown checkpoint version");

  Checkpoint ckpt;
  ModelDims dims;
  dims.embed_dim = reader.u32();
  dims.hidden_dim = reader.u32();
  dims.vocab_size = reader.u32();
  dims.num_tags = reader.u32();
  ckpt.seed = reader.u64();
  ckpt.epoch = reader.u32();

  ckpt.params.dims = dims;
  ckpt.params.embeddings = Matrix(dims.vocab_size, dims.embed_dim);
  zero_lstm_like(ckpt.params.forward, dims, dims.embed_dim);
  zero_lstm_like(ckpt.params.backward, dims, dims.embed_dim);
  ckpt.params.proj_w = Matrix(dims.num_tags, 2 * dims.hidden_dim);
  ckpt.params.proj_b.assign(dims.num_tags, 0.0);
  ckpt.params.crf.num_tags = dims.num_tags;
  ckpt.params.crf.transitions = Matrix(dims.num_tags + 2, dims.num_tags + 2);

  auto fill = [&](std::vector<double>& t) {
    for (auto& v : t) v = reader.f64();
  };
  fill(ckpt.params.embeddings.a);
  for (size_t g = 0; g < kNumGates; ++g) {
    fill(ckpt.params.forward.w_alpha[g].a);
    fill(ckpt.params.forward.w_beta[g].a);
    fill(ckpt.params.forward.bias[g]);
  }
  for (size_t g = 0; g < kNumGates; ++g) {
    fill(ckpt.params.backward.w_alpha[g].a);
    fill(ckpt.params.backward.w_beta[g].a);
    fill(ckpt.params.backward.bias[g]);
  }
  fill(ckpt.params.proj_w.a);
  fill(ckpt.params.proj_b);
  fill(ckpt.params.crf.transitions.a);
  if (reader.pos != bytes.size()) {
    throw Error(ErrorCode::IoError, "trailing checkpoint bytes");
  }
  return ckpt;
}

}  // namespace cipherner::nn
