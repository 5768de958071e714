#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ecpe/rng.hpp"
#include "ecpe/tensor.hpp"

namespace ecpe {

// A named tensor with a gradient buffer of the same shape.
struct Param {
  std::string name;
  Mat value;
  Mat grad;

  Param() = default;
  Param(std::string n, std::size_t rows, std::size_t cols)
      : name(std::move(n)), value(rows, cols), grad(rows, cols) {}

  std::size_t size() const { return value.size(); }
  void zero_grad() { grad.zero(); }
};

void init_uniform(Param& p, Rng& rng, double lo = -0.01, double hi = 0.01);
void zero_grads(const std::vector<Param*>& params);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// One LSTM direction. Gates are stacked input, forget, candidate, output:
// wx is 4h x in, wh is 4h x h, b is 1 x 4h.
struct LstmDir {
  Param wx, wh, b;
};

struct BiLstm {
  int in_dim = 0;
  int h = 0;
  LstmDir fwd, bwd;

  void init(const std::string& prefix, int in, int hidden, Rng& rng);
  void collect(std::vector<Param*>& out);
};

// Per-direction activations for the processed steps, in processing order
// (forward direction: t = 0..V-1; backward direction: t = V-1..0).
struct LstmDirCache {
  Mat i, f, g, o, c, tc, h;  // each V x h; tc = tanh(c)
};

struct BiLstmCache {
  Mat x;    // T x in, copy of the input
  int T = 0;
  int V = 0;
  LstmDirCache fw, bw;
  Mat out;  // T x 2h; rows at and beyond V stay zero
};

// out row t is [forward state after inputs 0..t, backward state after
// inputs V-1..t]. valid_len = 0 is an error.
void bilstm_forward(const BiLstm& p, const Mat& x, int valid_len, BiLstmCache& cache);

// dout is T x 2h; parameter gradients accumulate, input gradients add into
// dx (T x in, caller-zeroed or carrying other contributions).
void bilstm_backward(BiLstm& p, const BiLstmCache& cache, const Mat& dout, Mat& dx);

// Additive scoring over a sequence of dim-vectors:
// score_t = u . tanh(w h_t + b), alpha = masked softmax, s = sum alpha_t h_t.
struct Attention {
  int dim = 0;
  Param w, b, u;  // w: dim x dim, b: 1 x dim, u: 1 x dim

  void init(const std::string& prefix, int d, Rng& rng);
  void collect(std::vector<Param*>& out);
};

struct AttentionCache {
  Mat ta;     // V x dim, tanh(w h_t + b)
  Vec alpha;  // V
  Vec s;      // dim
};

void attention_forward(const Attention& p, const Mat& h, int valid_len,
                       AttentionCache& cache);
void attention_backward(Attention& p, const AttentionCache& cache, const Mat& h,
                        int valid_len, const double* ds, Mat& dh);

// Affine map to n_out logits followed by softmax.
struct Head {
  int in_dim = 0;
  int n_out = 0;
  Param w, b;  // w: n_out x in, b: 1 x n_out

  void init(const std::string& prefix, int in, int out, Rng& rng);
  void collect(std::vector<Param*>& out);
};

void softmax_head(const Head& p, const double* r, double* probs);

// Backward through softmax + affine. ce_weight scales the cross-entropy
// term for class `gold` (pass 0 weight to skip it); dp_ext, when non-null,
// is an extra gradient arriving at the probabilities themselves. Parameter
// gradients accumulate; input gradient adds into dr.
void softmax_head_backward(Head& p, const double* r, const double* probs, int gold,
                           double ce_weight, const double* dp_ext, double* dr);

// -log(probs[gold]) with the probability clamped to >= 1e-12.
double cross_entropy(const double* probs, int n, int gold);

// Inverted dropout: kept entries are scaled by 1/keep_prob so inference
// needs no rescaling. keep_prob = 1 leaves x untouched.
void dropout_mask(Mat& mask, double keep_prob, Rng& rng);

struct Adam {
  double lr = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double l2 = 0.0;
  std::int64_t step = 0;

  // first/second moment per parameter name
  std::unordered_map<std::string, std::pair<Vec, Vec>> moments;

  // One update over all params (step counter advances once). Throws
  // NumericError naming the parameter on a non-finite gradient.
  void update(const std::vector<Param*>& params);
};

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
};

// Central finite differences of `loss` (a pure forward pass under the
// current parameter values) against the analytic gradients already stored
// in each param's grad buffer. Entries where both gradients are below 1e-8
// count as matching, and the relative-error denominator is floored at 1e-6
// so sub-resolution entries are judged on their absolute difference.
GradCheckResult grad_check(const std::function<double()>& loss,
                           const std::vector<Param*>& params, double eps = 1e-5);

}  // namespace ecpe
