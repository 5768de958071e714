#include "ecpe/neural.hpp"

#include <algorithm>
#include <cstring>

#include "ecpe/error.hpp"
#include "ecpe/kernels.hpp"

namespace ecpe {

using kernels::active;

void init_uniform(Param& p, Rng& rng, double lo, double hi) {
  fill_uniform(p.value, lo, hi, rng);
}

void zero_grads(const std::vector<Param*>& params) {
  for (Param* p : params) p->zero_grad();
}

void BiLstm::init(const std::string& prefix, int in, int hidden, Rng& rng) {
  in_dim = in;
  h = hidden;
  for (auto [dir, tag] : {std::pair{&fwd, "f"}, std::pair{&bwd, "b"}}) {
    dir->wx = Param(prefix + "_wx_" + tag, 4 * static_cast<std::size_t>(h), in_dim);
    dir->wh = Param(prefix + "_wh_" + tag, 4 * static_cast<std::size_t>(h), h);
    dir->b = Param(prefix + "_b_" + tag, 1, 4 * static_cast<std::size_t>(h));
    init_uniform(dir->wx, rng);
    init_uniform(dir->wh, rng);
    init_uniform(dir->b, rng);
  }
}

void BiLstm::collect(std::vector<Param*>& out) {
  for (LstmDir* dir : {&fwd, &bwd}) {
    out.push_back(&dir->wx);
    out.push_back(&dir->wh);
    out.push_back(&dir->b);
  }
}

namespace {

// One direction over steps `order[0..V)` of cache.x; writes the hidden state
// of processed step k into dircache row k and into out[order[k]] at column
// offset out_col.
void lstm_dir_forward(const LstmDir& p, int h, const Mat& x,
                      const std::vector<int>& order, LstmDirCache& dc, Mat& out,
                      std::size_t out_col) {
  const int V = static_cast<int>(order.size());
  const std::size_t hs = static_cast<std::size_t>(h);
  dc.i = Mat(V, hs);
  dc.f = Mat(V, hs);
  dc.g = Mat(V, hs);
  dc.o = Mat(V, hs);
  dc.c = Mat(V, hs);
  dc.tc = Mat(V, hs);
  dc.h = Mat(V, hs);

  Vec z(4 * hs);
  Vec h_prev(hs, 0.0), c_prev(hs, 0.0);
  const auto& ops = active();
  for (int k = 0; k < V; ++k) {
    const double* xt = x.row(order[static_cast<std::size_t>(k)]);
    std::memcpy(z.data(), p.b.value.data(), 4 * hs * sizeof(double));
    ops.gemv_acc(p.wx.value.data(), 4 * hs, p.wx.value.cols, xt, z.data());
    ops.gemv_acc(p.wh.value.data(), 4 * hs, hs, h_prev.data(), z.data());

    double* gi = dc.i.row(k);
    double* gf = dc.f.row(k);
    double* gg = dc.g.row(k);
    double* go = dc.o.row(k);
    double* c = dc.c.row(k);
    double* tc = dc.tc.row(k);
    double* ht = dc.h.row(k);
    for (std::size_t j = 0; j < hs; ++j) {
      gi[j] = sigmoid(z[j]);
      gf[j] = sigmoid(z[hs + j]);
      gg[j] = std::tanh(z[2 * hs + j]);
      go[j] = sigmoid(z[3 * hs + j]);
      c[j] = gf[j] * c_prev[j] + gi[j] * gg[j];
      tc[j] = std::tanh(c[j]);
      ht[j] = go[j] * tc[j];
    }
    std::memcpy(out.row(order[static_cast<std::size_t>(k)]) + out_col, ht,
                hs * sizeof(double));
    std::memcpy(h_prev.data(), ht, hs * sizeof(double));
    std::memcpy(c_prev.data(), c, hs * sizeof(double));
  }
}

void lstm_dir_backward(LstmDir& p, int h, const Mat& x,
                       const std::vector<int>& order, const LstmDirCache& dc,
                       const Mat& dout, std::size_t out_col, Mat& dx) {
  const int V = static_cast<int>(order.size());
  const std::size_t hs = static_cast<std::size_t>(h);
  const auto& ops = active();

  Vec dh_next(hs, 0.0), dc_next(hs, 0.0);
  Vec dh(hs), dz(4 * hs);
  for (int k = V - 1; k >= 0; --k) {
    const int t = order[static_cast<std::size_t>(k)];
    const double* drow = dout.row(t) + out_col;
    for (std::size_t j = 0; j < hs; ++j) dh[j] = drow[j] + dh_next[j];

    const double* gi = dc.i.row(k);
    const double* gf = dc.f.row(k);
    const double* gg = dc.g.row(k);
    const double* go = dc.o.row(k);
    const double* tc = dc.tc.row(k);
    const double* c_prev_row = (k > 0) ? dc.c.row(k - 1) : nullptr;
    for (std::size_t j = 0; j < hs; ++j) {
      const double d_o = dh[j] * tc[j];
      const double d_c = dh[j] * go[j] * (1.0 - tc[j] * tc[j]) + dc_next[j];
      const double cp = c_prev_row ? c_prev_row[j] : 0.0;
      const double d_i = d_c * gg[j];
      const double d_f = d_c * cp;
      const double d_g = d_c * gi[j];
      dc_next[j] = d_c * gf[j];
      dz[j] = d_i * gi[j] * (1.0 - gi[j]);
      dz[hs + j] = d_f * gf[j] * (1.0 - gf[j]);
      dz[2 * hs + j] = d_g * (1.0 - gg[j] * gg[j]);
      dz[3 * hs + j] = d_o * go[j] * (1.0 - go[j]);
    }

    const double* xt = x.row(t);
    const double* h_prev = (k > 0) ? dc.h.row(k - 1) : nullptr;
    ops.ger_acc(1.0, dz.data(), xt, p.wx.grad.data(), 4 * hs, p.wx.value.cols);
    if (h_prev) ops.ger_acc(1.0, dz.data(), h_prev, p.wh.grad.data(), 4 * hs, hs);
    ops.axpy(1.0, dz.data(), p.b.grad.data(), 4 * hs);
    ops.gemv_t_acc(p.wx.value.data(), 4 * hs, p.wx.value.cols, dz.data(), dx.row(t));
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    ops.gemv_t_acc(p.wh.value.data(), 4 * hs, hs, dz.data(), dh_next.data());
  }
}

std::vector<int> forward_order(int valid_len) {
  std::vector<int> order(static_cast<std::size_t>(valid_len));
  for (int t = 0; t < valid_len; ++t) order[static_cast<std::size_t>(t)] = t;
  return order;
}

std::vector<int> backward_order(int valid_len) {
  std::vector<int> order(static_cast<std::size_t>(valid_len));
  for (int t = 0; t < valid_len; ++t)
    order[static_cast<std::size_t>(t)] = valid_len - 1 - t;
  return order;
}

}  // namespace

void bilstm_forward(const BiLstm& p, const Mat& x, int valid_len, BiLstmCache& cache) {
  if (valid_len < 1) throw NumericError("bilstm_forward: empty sequence");
  if (static_cast<std::size_t>(valid_len) > x.rows)
    throw NumericError("bilstm_forward: valid_len exceeds sequence length");
  cache.x = x;
  cache.T = static_cast<int>(x.rows);
  cache.V = valid_len;
  cache.out = Mat(x.rows, 2 * static_cast<std::size_t>(p.h));
  lstm_dir_forward(p.fwd, p.h, cache.x, forward_order(valid_len), cache.fw,
                   cache.out, 0);
  lstm_dir_forward(p.bwd, p.h, cache.x, backward_order(valid_len), cache.bw,
                   cache.out, static_cast<std::size_t>(p.h));
}

void bilstm_backward(BiLstm& p, const BiLstmCache& cache, const Mat& dout, Mat& dx) {
  lstm_dir_backward(p.fwd, p.h, cache.x, forward_order(cache.V), cache.fw, dout,
                    0, dx);
  lstm_dir_backward(p.bwd, p.h, cache.x, backward_order(cache.V), cache.bw, dout,
                    static_cast<std::size_t>(p.h), dx);
}

void Attention::init(const std::string& prefix, int d, Rng& rng) {
  dim = d;
  w = Param(prefix + "_w", d, d);
  b = Param(prefix + "_b", 1, d);
  u = Param(prefix + "_u", 1, d);
  init_uniform(w, rng);
  init_uniform(b, rng);
  init_uniform(u, rng);
}

void Attention::collect(std::vector<Param*>& out) {
  out.push_back(&w);
  out.push_back(&b);
  out.push_back(&u);
}

void attention_forward(const Attention& p, const Mat& h, int valid_len,
                       AttentionCache& cache) {
  if (valid_len < 1) throw NumericError("attention_forward: empty sequence");
  const std::size_t d = static_cast<std::size_t>(p.dim);
  const auto& ops = active();
  cache.ta = Mat(valid_len, d);
  cache.alpha.assign(static_cast<std::size_t>(valid_len), 0.0);
  cache.s.assign(d, 0.0);

  Vec scores(static_cast<std::size_t>(valid_len));
  for (int t = 0; t < valid_len; ++t) {
    double* ta = cache.ta.row(t);
    std::memcpy(ta, p.b.value.data(), d * sizeof(double));
    ops.gemv_acc(p.w.value.data(), d, d, h.row(t), ta);
    for (std::size_t j = 0; j < d; ++j) ta[j] = std::tanh(ta[j]);
    scores[static_cast<std::size_t>(t)] = ops.dot(p.u.value.data(), ta, d);
  }

  const double mx = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (std::size_t t = 0; t < scores.size(); ++t) {
    cache.alpha[t] = std::exp(scores[t] - mx);
    z += cache.alpha[t];
  }
  for (std::size_t t = 0; t < scores.size(); ++t) {
    cache.alpha[t] /= z;
    ops.axpy(cache.alpha[t], h.row(static_cast<int>(t)), cache.s.data(), d);
  }
}

void attention_backward(Attention& p, const AttentionCache& cache, const Mat& h,
                        int valid_len, const double* ds, Mat& dh) {
  const std::size_t d = static_cast<std::size_t>(p.dim);
  const auto& ops = active();

  Vec dalpha(static_cast<std::size_t>(valid_len));
  for (int t = 0; t < valid_len; ++t) {
    dalpha[static_cast<std::size_t>(t)] = ops.dot(ds, h.row(t), d);
    ops.axpy(cache.alpha[static_cast<std::size_t>(t)], ds, dh.row(t), d);
  }

  double dot_ad = 0.0;
  for (int t = 0; t < valid_len; ++t)
    dot_ad += cache.alpha[static_cast<std::size_t>(t)] * dalpha[static_cast<std::size_t>(t)];

  Vec da(d);
  for (int t = 0; t < valid_len; ++t) {
    const double dscore =
        cache.alpha[static_cast<std::size_t>(t)] * (dalpha[static_cast<std::size_t>(t)] - dot_ad);
    const double* ta = cache.ta.row(t);
    ops.axpy(dscore, ta, p.u.grad.data(), d);
    for (std::size_t j = 0; j < d; ++j)
      da[j] = dscore * p.u.value.data()[j] * (1.0 - ta[j] * ta[j]);
    ops.ger_acc(1.0, da.data(), h.row(t), p.w.grad.data(), d, d);
    ops.axpy(1.0, da.data(), p.b.grad.data(), d);
    ops.gemv_t_acc(p.w.value.data(), d, d, da.data(), dh.row(t));
  }
}

void Head::init(const std::string& prefix, int in, int out, Rng& rng) {
  in_dim = in;
  n_out = out;
  w = Param(prefix + "_w", out, in);
  b = Param(prefix + "_b", 1, out);
  init_uniform(w, rng);
  init_uniform(b, rng);
}

void Head::collect(std::vector<Param*>& out) {
  out.push_back(&w);
  out.push_back(&b);
}

void softmax_head(const Head& p, const double* r, double* probs) {
  const std::size_t n = static_cast<std::size_t>(p.n_out);
  const auto& ops = active();
  std::memcpy(probs, p.b.value.data(), n * sizeof(double));
  ops.gemv_acc(p.w.value.data(), n, p.w.value.cols, r, probs);
  const double mx = *std::max_element(probs, probs + n);
  double z = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    probs[k] = std::exp(probs[k] - mx);
    z += probs[k];
  }
  for (std::size_t k = 0; k < n; ++k) probs[k] /= z;
}

void softmax_head_backward(Head& p, const double* r, const double* probs, int gold,
                           double ce_weight, const double* dp_ext, double* dr) {
  const std::size_t n = static_cast<std::size_t>(p.n_out);
  const auto& ops = active();
  Vec dlogits(n, 0.0);
  if (ce_weight != 0.0) {
    for (std::size_t k = 0; k < n; ++k) dlogits[k] = ce_weight * probs[k];
    dlogits[static_cast<std::size_t>(gold)] -= ce_weight;
  }
  if (dp_ext) {
    double mix = 0.0;
    for (std::size_t k = 0; k < n; ++k) mix += dp_ext[k] * probs[k];
    for (std::size_t k = 0; k < n; ++k) dlogits[k] += probs[k] * (dp_ext[k] - mix);
  }
  ops.ger_acc(1.0, dlogits.data(), r, p.w.grad.data(), n, p.w.value.cols);
  ops.axpy(1.0, dlogits.data(), p.b.grad.data(), n);
  ops.gemv_t_acc(p.w.value.data(), n, p.w.value.cols, dlogits.data(), dr);
}

double cross_entropy(const double* probs, int n, int gold) {
  if (gold < 0 || gold >= n) throw NumericError("cross_entropy: gold class out of range");
  return -std::log(std::max(probs[gold], 1e-12));
}

void dropout_mask(Mat& mask, double keep_prob, Rng& rng) {
  if (keep_prob >= 1.0) {
    std::fill(mask.a.begin(), mask.a.end(), 1.0);
    return;
  }
  const double inv = 1.0 / keep_prob;
  for (double& m : mask.a) m = rng.uniform01() < keep_prob ? inv : 0.0;
}

void Adam::update(const std::vector<Param*>& params) {
  ++step;
  const double bias1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bias2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  const auto& ops = active();
  for (Param* p : params) {
    if (!all_finite(p->grad.data(), p->grad.size()))
      throw NumericError("non-finite gradient in parameter '" + p->name + "'");
    auto& [m, v] = moments[p->name];
    if (m.size() != p->size()) {
      m.assign(p->size(), 0.0);
      v.assign(p->size(), 0.0);
    }
    ops.adam(p->value.data(), m.data(), v.data(), p->grad.data(), p->size(), lr,
             beta1, beta2, eps, bias1, bias2, l2);
  }
}

GradCheckResult grad_check(const std::function<double()>& loss,
                           const std::vector<Param*>& params, double eps) {
  GradCheckResult res;
  for (Param* p : params) {
    for (std::size_t idx = 0; idx < p->size(); ++idx) {
      double& x = p->value.a[idx];
      const double saved = x;
      x = saved + eps;
      const double up = loss();
      x = saved - eps;
      const double down = loss();
      x = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = p->grad.a[idx];
      if (std::abs(numeric) < 1e-8 && std::abs(analytic) < 1e-8) continue;
      // the floor matches what central differences can resolve: ~1e-11
      // absolute at unit-scale losses, so entries near 1e-8 would otherwise
      // drown in roundoff even when exactly right
      const double rel = std::abs(analytic - numeric) /
                         std::max(std::abs(analytic) + std::abs(numeric), 1e-6);
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_param = p->name;
        res.worst_index = idx;
      }
    }
  }
  return res;
}

}  // namespace ecpe
