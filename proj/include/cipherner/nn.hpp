#ifndef CIPHERNER_NN_HPP
#define CIPHERNER_NN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cipherner/error.hpp"
#include "cipherner/rng.hpp"

namespace cipherner::nn {

// All computation is in 64-bit floats and strictly deterministic: fixed loop
// orders, no threading, no fast-math. Bit-identical training runs are a
// contract, not an accident.

struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(size_t r, size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& at(size_t i, size_t j) { return a[i * cols + j]; }
  double at(size_t i, size_t j) const { return a[i * cols + j]; }
  double* row(size_t i) { return a.data() + i * cols; }
  const double* row(size_t i) const { return a.data() + i * cols; }
  void zero() { std::fill(a.begin(), a.end(), 0.0); }
};

using Vector = std::vector<double>;

// y += W x
void matvec_add(const Matrix& w, const double* x, double* y);
// y += W^T d
void matvec_t_add(const Matrix& w, const double* d, double* y);
// W += d x^T
void outer_add(Matrix& w, const double* d, const double* x);

double log_sum_exp(const double* v, size_t n);

// Gate order used throughout: forget, input, output, cell candidate.
enum GateIndex { kForget = 0, kInput = 1, kOutput = 2, kCell = 3 };
inline constexpr size_t kNumGates = 4;

struct LstmParams {
  Matrix w_alpha[kNumGates];  // hidden x input
  Matrix w_beta[kNumGates];   // hidden x hidden
  Vector bias[kNumGates];     // hidden

  size_t hidden_dim() const { return bias[0].size(); }
  size_t input_dim() const { return w_alpha[0].cols; }
  void zero();
};

// Forward activations kept for backprop.
struct LstmStepCache {
  Vector x, h_prev, c_prev;
  Vector gate[kNumGates];  // post-activation: sigma for F/I/O, tanh for C
  Vector c, tanh_c, h;
};

//   F = sigma(Wf_a x + Wf_b h_prev + Bf)     I, O analogous
//   g = tanh(Wc_a x + Wc_b h_prev + Bc)
//   c = F . c_prev + I . g
//   h = O . tanh(c)
void lstm_cell(const LstmParams& params, const Vector& x, const Vector& h_prev,
               const Vector& c_prev, LstmStepCache& out);

// Accumulates parameter gradients and returns input gradients.
void lstm_cell_backward(const LstmParams& params, const LstmStepCache& cache,
                        const Vector& dh, const Vector& dc, LstmParams& grads,
                        Vector& dx, Vector& dh_prev, Vector& dc_prev);

// Forbidden transitions score kMaskedScore when scoring and are hard-rejected
// when decoding; the magnitude is large enough to zero their probability in
// doubles while keeping gradients finite.
inline constexpr double kMaskedScore = -1e4;

struct CrfParams {
  size_t num_tags = 0;
  Matrix transitions;          // (K+2) x (K+2), row = from, col = to
  std::vector<uint8_t> mask;   // same shape, 1 = allowed; empty = all allowed

  size_t start() const { return num_tags; }
  size_t stop() const { return num_tags + 1; }
  bool allowed(size_t from, size_t to) const {
    return mask.empty() || mask[from * (num_tags + 2) + to] != 0;
  }
  double score(size_t from, size_t to) const {
    return allowed(from, to) ? transitions.at(from, to) : kMaskedScore;
  }
};

double crf_log_partition(const Matrix& emissions, const CrfParams& crf);

double crf_gold_score(const Matrix& emissions, const CrfParams& crf,
                      const std::vector<size_t>& path);

// log_partition - gold score; GoldViolatesConstraints if the gold path uses
// a masked transition.
double crf_nll(const Matrix& emissions, const CrfParams& crf,
               const std::vector<size_t>& gold);

// Returns the NLL and accumulates d(nll)/d(emissions) and
// d(nll)/d(transitions) (marginals minus gold indicators).
double crf_nll_backward(const Matrix& emissions, const CrfParams& crf,
                        const std::vector<size_t>& gold, Matrix& d_emissions,
                        Matrix& d_transitions);

struct ViterbiResult {
  std::vector<size_t> path;
  double score = 0.0;
};

// Max-score path; masked transitions are never traversed; ties break toward
// the lowest tag index.
ViterbiResult viterbi(const Matrix& emissions, const CrfParams& crf);

struct ModelDims {
  size_t embed_dim = 32;
  size_t hidden_dim = 64;
  size_t vocab_size = 0;  // includes the unknown id 0
  size_t num_tags = 0;
};

struct ModelParams {
  ModelDims dims;
  Matrix embeddings;  // V x d
  LstmParams forward, backward;
  Matrix proj_w;      // K x 2h
  Vector proj_b;      // K
  CrfParams crf;
};

struct ModelGrads {
  Matrix embeddings;
  LstmParams forward, backward;
  Matrix proj_w;
  Vector proj_b;
  Matrix transitions;

  void zero();
};

// Uniform(-0.1, 0.1) everywhere, drawn from an xoshiro256** stream seeded
// with splitmix64(seed); tensor order: embeddings, forward LSTM gates
// (alpha, beta, bias per gate F,I,O,C), backward LSTM, projection, projection
// bias, transitions.
ModelParams init_params(const ModelDims& dims, const std::vector<uint8_t>& mask,
                        uint64_t seed);
ModelGrads make_grads(const ModelDims& dims);

struct SequenceTrace {
  std::vector<size_t> tokens;
  std::vector<LstmStepCache> fw_steps, bw_steps;
  std::vector<Vector> h_cat;  // per step, 2h
  Matrix emissions;           // T x K
};

// Embeds, runs both LSTM directions, projects to emission scores.
void model_forward(const ModelParams& params, const std::vector<size_t>& tokens,
                   SequenceTrace& trace);

// Convenience wrapper returning only the emission matrix.
Matrix bilstm_encode(const ModelParams& params, const std::vector<size_t>& tokens);

// Full backward pass of crf_nll through projection, both LSTMs, and the
// embedding table. Returns the NLL.
double model_nll_backward(const ModelParams& params, const SequenceTrace& trace,
                          const std::vector<size_t>& gold, ModelGrads& grads);

double global_grad_norm(const ModelGrads& grads);

// Global-norm clip then p -= lr * g. Masked transition entries receive no
// gradient by construction.
void sgd_step(ModelParams& params, const ModelGrads& grads, double lr, double clip);

// Checkpoint container: magic `NER1`, little-endian header
// (u32 version, u32 embed_dim, u32 hidden_dim, u32 vocab_size, u32 num_tags,
// u64 seed, u32 epoch), then raw little-endian f64 tensors in init order.
// The constraint mask is not stored; callers rebuild it from the tagset.
std::vector<uint8_t> save_checkpoint(const ModelParams& params, uint64_t seed,
                                     uint32_t epoch);
struct Checkpoint {
  ModelParams params;
  uint64_t seed = 0;
  uint32_t epoch = 0;
};
Checkpoint load_checkpoint(const std::vector<uint8_t>& bytes);

}  // namespace cipherner::nn

#endif  // CIPHERNER_NN_HPP
