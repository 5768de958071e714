#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ecpe/error.hpp"
#include "ecpe/neural.hpp"
#include "ecpe/rng.hpp"
#include "ecpe/tensor.hpp"

using namespace ecpe;

namespace {

Mat random_mat(std::size_t rows, std::size_t cols, Rng& rng, double scale = 0.5) {
  Mat m(rows, cols);
  fill_uniform(m, -scale, scale, rng);
  return m;
}

// one LSTM direction, every gate written out longhand
void naive_dir(const LstmDir& p, const Mat& x, const std::vector<int>& order,
               int h, Mat& out, int out_col) {
  const int in = static_cast<int>(x.cols);
  std::vector<double> hp(h, 0.0), cp(h, 0.0), z(4 * h);
  for (int t : order) {
    for (int r = 0; r < 4 * h; ++r) {
      double acc = p.b.value.at(0, r);
      for (int c = 0; c < in; ++c) acc += p.wx.value.at(r, c) * x.at(t, c);
      for (int c = 0; c < h; ++c) acc += p.wh.value.at(r, c) * hp[c];
      z[r] = acc;
    }
    for (int j = 0; j < h; ++j) {
      const double ig = sigmoid(z[j]);
      const double fg = sigmoid(z[h + j]);
      const double gg = std::tanh(z[2 * h + j]);
      const double og = sigmoid(z[3 * h + j]);
      cp[j] = fg * cp[j] + ig * gg;
      hp[j] = og * std::tanh(cp[j]);
      out.at(t, out_col + j) = hp[j];
    }
  }
}

}  // namespace

TEST_CASE("bilstm forward matches a longhand reference") {
  Rng rng(21);
  const int in = 3, h = 2, V = 4, T = 5;
  BiLstm p;
  p.init("ref", in, h, rng);
  const Mat x = random_mat(T, in, rng);

  BiLstmCache cache;
  bilstm_forward(p, x, V, cache);

  Mat want(T, 2 * h);
  std::vector<int> fwd_order, bwd_order;
  for (int t = 0; t < V; ++t) fwd_order.push_back(t);
  for (int t = V - 1; t >= 0; --t) bwd_order.push_back(t);
  naive_dir(p.fwd, x, fwd_order, h, want, 0);
  naive_dir(p.bwd, x, bwd_order, h, want, h);

  for (int t = 0; t < V; ++t)
    for (int j = 0; j < 2 * h; ++j)
      CHECK(cache.out.at(t, j) == doctest::Approx(want.at(t, j)).epsilon(1e-12));
  // padded rows stay zero
  for (int j = 0; j < 2 * h; ++j) CHECK(cache.out.at(V, j) == 0.0);
}

TEST_CASE("bilstm valid_len edge cases") {
  Rng rng(22);
  BiLstm p;
  p.init("edge", 2, 3, rng);
  // tie the directions together so a one-step sequence must agree
  p.bwd.wx.value = p.fwd.wx.value;
  p.bwd.wh.value = p.fwd.wh.value;
  p.bwd.b.value = p.fwd.b.value;
  const Mat x = random_mat(4, 2, rng);

  BiLstmCache one;
  bilstm_forward(p, x, 1, one);
  for (int j = 0; j < 3; ++j)
    CHECK(one.out.at(0, j) == doctest::Approx(one.out.at(0, 3 + j)).epsilon(1e-12));

  BiLstmCache bad;
  CHECK_THROWS_AS(bilstm_forward(p, x, 0, bad), NumericError);
  CHECK_THROWS_AS(bilstm_forward(p, x, 5, bad), NumericError);
}

TEST_CASE("bilstm gradients pass finite differences") {
  Rng rng(23);
  const int in = 3, h = 2, V = 3;
  BiLstm p;
  p.init("g", in, h, rng);
  Param x("x", V, in);
  init_uniform(x, rng, -0.5, 0.5);
  const Mat r = random_mat(V, 2 * h, rng);

  auto loss = [&] {
    BiLstmCache cache;
    bilstm_forward(p, x.value, V, cache);
    double acc = 0.0;
    for (std::size_t i = 0; i < cache.out.size(); ++i)
      acc += cache.out.a[i] * r.a[i];
    return acc;
  };

  std::vector<Param*> params;
  p.collect(params);
  params.push_back(&x);
  zero_grads(params);

  BiLstmCache cache;
  bilstm_forward(p, x.value, V, cache);
  bilstm_backward(p, cache, r, x.grad);

  const GradCheckResult res = grad_check(loss, params);
  CHECK(res.max_rel_err < 1e-7);
}

TEST_CASE("attention: single state passes through") {
  Rng rng(24);
  Attention p;
  p.init("a1", 4, rng);
  const Mat h = random_mat(3, 4, rng);
  AttentionCache cache;
  attention_forward(p, h, 1, cache);
  CHECK(cache.alpha.size() == 1);
  CHECK(cache.alpha[0] == 1.0);
  for (int j = 0; j < 4; ++j)
    CHECK(cache.s[j] == doctest::Approx(h.at(0, j)).epsilon(1e-15));
}

TEST_CASE("attention: identical states get uniform weights") {
  Rng rng(25);
  Attention p;
  p.init("a2", 3, rng);
  Mat h(4, 3);
  for (int t = 0; t < 4; ++t)
    for (int j = 0; j < 3; ++j) h.at(t, j) = 0.3 * j - 0.1;
  AttentionCache cache;
  attention_forward(p, h, 4, cache);
  for (double a : cache.alpha) CHECK(a == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("attention forward matches a longhand reference") {
  Rng rng(26);
  const int dim = 3, V = 4;
  Attention p;
  p.init("a3", dim, rng);
  const Mat h = random_mat(V + 1, dim, rng);

  AttentionCache cache;
  attention_forward(p, h, V, cache);

  std::vector<double> score(V);
  for (int t = 0; t < V; ++t) {
    double acc = 0.0;
    for (int r = 0; r < dim; ++r) {
      double pre = p.b.value.at(0, r);
      for (int c = 0; c < dim; ++c) pre += p.w.value.at(r, c) * h.at(t, c);
      acc += p.u.value.at(0, r) * std::tanh(pre);
    }
    score[t] = acc;
  }
  double mx = score[0];
  for (double v : score) mx = std::max(mx, v);
  double zsum = 0.0;
  std::vector<double> alpha(V);
  for (int t = 0; t < V; ++t) zsum += alpha[t] = std::exp(score[t] - mx);
  double asum = 0.0;
  for (int t = 0; t < V; ++t) {
    alpha[t] /= zsum;
    CHECK(cache.alpha[t] == doctest::Approx(alpha[t]).epsilon(1e-12));
    asum += cache.alpha[t];
  }
  CHECK(asum == doctest::Approx(1.0).epsilon(1e-12));
  for (int j = 0; j < dim; ++j) {
    double sj = 0.0;
    for (int t = 0; t < V; ++t) sj += alpha[t] * h.at(t, j);
    CHECK(cache.s[j] == doctest::Approx(sj).epsilon(1e-12));
  }
}

TEST_CASE("attention gradients pass finite differences") {
  Rng rng(27);
  const int dim = 3, V = 4;
  Attention p;
  p.init("a4", dim, rng);
  Param h("h", V, dim);
  init_uniform(h, rng, -0.5, 0.5);
  Vec r(dim);
  for (double& v : r) v = rng.uniform(-1, 1);

  auto loss = [&] {
    AttentionCache cache;
    attention_forward(p, h.value, V, cache);
    double acc = 0.0;
    for (int j = 0; j < dim; ++j) acc += cache.s[j] * r[j];
    return acc;
  };

  std::vector<Param*> params;
  p.collect(params);
  params.push_back(&h);
  zero_grads(params);

  AttentionCache cache;
  attention_forward(p, h.value, V, cache);
  attention_backward(p, cache, h.value, V, r.data(), h.grad);

  // some entries here are ~1e-4, so the checker's roundoff floor at
  // eps = 1e-5 sits near 1e-6 relative
  CHECK(grad_check(loss, params).max_rel_err < 1e-6);
}

TEST_CASE("softmax head: normalization, oracle, saturation") {
  Rng rng(28);
  Head p;
  p.init("s1", 3, 2, rng);
  Vec r{0.4, -0.2, 0.9};
  double probs[2];
  softmax_head(p, r.data(), probs);
  CHECK(probs[0] + probs[1] == doctest::Approx(1.0).epsilon(1e-12));

  double logits[2];
  for (int k = 0; k < 2; ++k) {
    logits[k] = p.b.value.at(0, k);
    for (int j = 0; j < 3; ++j) logits[k] += p.w.value.at(k, j) * r[j];
  }
  const double mx = std::max(logits[0], logits[1]);
  const double z = std::exp(logits[0] - mx) + std::exp(logits[1] - mx);
  CHECK(probs[0] == doctest::Approx(std::exp(logits[0] - mx) / z).epsilon(1e-12));

  // huge logits must not overflow
  Head big;
  big.init("s2", 1, 2, rng);
  big.w.value.at(0, 0) = 500.0;
  big.w.value.at(1, 0) = -500.0;
  big.b.value.zero();
  Vec one{2.0};
  double p2[2];
  softmax_head(big, one.data(), p2);
  CHECK(std::isfinite(p2[0]));
  CHECK(p2[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p2[1] >= 0.0);
}

TEST_CASE("softmax head gradients: cross-entropy path") {
  Rng rng(29);
  const int in = 4;
  Head p;
  p.init("s3", in, 2, rng);
  Param r("r", 1, in);
  init_uniform(r, rng, -0.5, 0.5);
  const int gold = 1;

  auto loss = [&] {
    double probs[2];
    softmax_head(p, r.value.row(0), probs);
    return cross_entropy(probs, 2, gold);
  };

  std::vector<Param*> params;
  p.collect(params);
  params.push_back(&r);
  zero_grads(params);
  double probs[2];
  softmax_head(p, r.value.row(0), probs);
  softmax_head_backward(p, r.value.row(0), probs, gold, 1.0, nullptr, r.grad.row(0));

  CHECK(grad_check(loss, params).max_rel_err < 1e-7);
}

TEST_CASE("softmax head gradients: external probability path") {
  Rng rng(30);
  const int in = 3;
  Head p;
  p.init("s4", in, 2, rng);
  Param r("r", 1, in);
  init_uniform(r, rng, -0.5, 0.5);
  const Vec ext{0.7, -1.3};  // loss = ext . probs

  auto loss = [&] {
    double probs[2];
    softmax_head(p, r.value.row(0), probs);
    return ext[0] * probs[0] + ext[1] * probs[1];
  };

  std::vector<Param*> params;
  p.collect(params);
  params.push_back(&r);
  zero_grads(params);
  double probs[2];
  softmax_head(p, r.value.row(0), probs);
  softmax_head_backward(p, r.value.row(0), probs, 0, 0.0, ext.data(), r.grad.row(0));

  CHECK(grad_check(loss, params).max_rel_err < 1e-7);
}

TEST_CASE("cross_entropy values and clamp") {
  double probs[2] = {0.25, 0.75};
  CHECK(cross_entropy(probs, 2, 0) == doctest::Approx(-std::log(0.25)).epsilon(1e-12));
  CHECK(cross_entropy(probs, 2, 1) == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
  double zero[2] = {0.0, 1.0};
  CHECK(cross_entropy(zero, 2, 0) == doctest::Approx(-std::log(1e-12)).epsilon(1e-9));
}

TEST_CASE("dropout mask") {
  Rng rng(31);
  Mat ones(5, 6);
  dropout_mask(ones, 1.0, rng);
  for (double v : ones.a) CHECK(v == 1.0);

  Mat half(40, 25);
  dropout_mask(half, 0.8, rng);
  double sum = 0.0;
  for (double v : half.a) {
    CHECK((v == 0.0 || v == doctest::Approx(1.25).epsilon(1e-15)));
    sum += v;
  }
  // inverted scaling keeps the mean near one
  CHECK(sum / static_cast<double>(half.size()) == doctest::Approx(1.0).epsilon(0.05));

  Rng ra(7), rb(7);
  Mat ma(3, 3), mb(3, 3);
  dropout_mask(ma, 0.5, ra);
  dropout_mask(mb, 0.5, rb);
  CHECK(ma.a == mb.a);
}

TEST_CASE("adam leaves parameters alone on zero gradients") {
  Rng rng(32);
  Param p("p", 2, 3);
  init_uniform(p, rng, -1, 1);
  const Vec before = p.value.a;
  Adam opt;
  opt.update({&p});
  opt.update({&p});
  CHECK(p.value.a == before);
  CHECK(opt.step == 2);
}

TEST_CASE("adam single step matches the formula at the param level") {
  Param p("w", 1, 1);
  p.value.at(0, 0) = 1.0;
  p.grad.at(0, 0) = 0.5;
  Adam opt;
  opt.lr = 0.1;
  opt.update({&p});
  const double mhat = 0.5;  // m / (1 - 0.9)
  const double vhat = 0.25;
  CHECK(p.value.at(0, 0) ==
        doctest::Approx(1.0 - 0.1 * mhat / (std::sqrt(vhat) + 1e-8)).epsilon(1e-12));
}

TEST_CASE("adam rejects non-finite gradients by name") {
  Param p("poisoned", 1, 2);
  p.grad.at(0, 1) = std::numeric_limits<double>::quiet_NaN();
  Adam opt;
  try {
    opt.update({&p});
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("poisoned") != std::string::npos);
  }
}

TEST_CASE("grad_check accepts a correct affine gradient") {
  Rng rng(33);
  Param w("w", 2, 3), b("b", 1, 2);
  init_uniform(w, rng, -1, 1);
  init_uniform(b, rng, -1, 1);
  const Vec x{0.3, -0.7, 1.1};
  const Vec y{0.2, -0.4};

  auto residual = [&](int k) {
    double acc = b.value.at(0, k) - y[k];
    for (int j = 0; j < 3; ++j) acc += w.value.at(k, j) * x[j];
    return acc;
  };
  auto loss = [&] {
    return 0.5 * (residual(0) * residual(0) + residual(1) * residual(1));
  };

  zero_grads({&w, &b});
  for (int k = 0; k < 2; ++k) {
    const double rk = residual(k);
    b.grad.at(0, k) = rk;
    for (int j = 0; j < 3; ++j) w.grad.at(k, j) = rk * x[j];
  }
  CHECK(grad_check(loss, {&w, &b}).max_rel_err < 1e-7);
}

TEST_CASE("grad_check flags a planted fault") {
  Rng rng(34);
  Param w("w", 1, 3);
  init_uniform(w, rng, -1, 1);
  const Vec x{0.5, -1.0, 2.0};
  auto loss = [&] {
    double acc = 0.0;
    for (int j = 0; j < 3; ++j) acc += w.value.at(0, j) * x[j];
    return acc * acc;
  };
  zero_grads({&w});
  double dot = 0.0;
  for (int j = 0; j < 3; ++j) dot += w.value.at(0, j) * x[j];
  for (int j = 0; j < 3; ++j) w.grad.at(0, j) = 2.0 * dot * x[j];
  w.grad.at(0, 2) += 0.5;  // the fault

  const GradCheckResult res = grad_check(loss, {&w});
  CHECK(res.max_rel_err > 1e-2);
  CHECK(res.worst_param == "w");
  CHECK(res.worst_index == 2);
}
