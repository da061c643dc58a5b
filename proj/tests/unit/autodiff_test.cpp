// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "sstg/autodiff/grad_check.hpp"
#include "sstg/autodiff/ops.hpp"
#include "sstg/errors.hpp"
#include "tiny.hpp"

using namespace sstg;
using namespace sstg::ad;
using fixture::random_tensor;

namespace {

std::vector<double> vals(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

Tensor weighted_sum(Tape& tape, const Tensor& y, std::uint64_t seed) {
  // Random projection so every output entry carries a distinct upstream grad.
  Tensor w = random_tensor(y.shape(), seed);
  return sum(tape, mul(tape, y, w));
}

}  // namespace

TEST(TensorInit, ZerosAndConstant) {
  EXPECT_EQ(vals(Tensor::zeros({2, 2})), (std::vector<double>{0, 0, 0, 0}));
  EXPECT_EQ(vals(Tensor::constant({3}, 1.5)), (std::vector<double>{1.5, 1.5, 1.5}));
}

TEST(TensorInit, FanInVariance) {
  // 64 x 3 repeated until 10k draws; fan_in = 3.
  std::vector<double> draws;
  for (std::uint64_t s = 0; draws.size() < 10000; ++s) {
    auto t = Tensor::init({64, 3}, Init::fan_in_scaled(7 + s * 1000));
    draws.insert(draws.end(), t.values().begin(), t.values().end());
  }
  const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / draws.size();
  double var = 0;
  for (double d : draws) var += (d - mean) * (d - mean);
  var /= draws.size() - 1;
  EXPECT_NEAR(var, 2.0 / 3.0, 0.3 * 2.0 / 3.0);
  EXPECT_NEAR(mean, 0.0, 0.05);
}

TEST(TensorInit, Deterministic) {
  auto a = Tensor::init({16, 4}, Init::fan_in_scaled(7));
  auto b = Tensor::init({16, 4}, Init::fan_in_scaled(7));
  EXPECT_EQ(vals(a), vals(b));
}

TEST(TensorInit, ZeroExtentRejected) {
  EXPECT_THROW(Tensor::zeros({3, 0}), InvalidShape);
  EXPECT_THROW(Tensor::zeros({}), InvalidShape);
}

TEST(Tensor, NonFiniteRejected) {
  EXPECT_THROW(Tensor({2}, {1.0, std::nan("")}), NonFiniteValue);
  EXPECT_THROW(Tensor({1}, {INFINITY}), NonFiniteValue);
}

TEST(Matmul, HandCases) {
  Tape tape;
  Tensor eye({2, 2}, {1, 0, 0, 1});
  Tensor m({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(vals(matmul(tape, eye, m)), (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(vals(matmul(tape, Tensor({1, 2}, {1, 2}), Tensor({2, 1}, {3, 4}))), (std::vector<double>{11}));
  EXPECT_THROW(matmul(tape, Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ShapeError);
}

TEST(Matmul, GradCheck) {
  Tensor a = random_tensor({4, 5}, 1), b = random_tensor({5, 3}, 2);
  double err = grad_check([&](Tape& t) { return weighted_sum(t, matmul(t, a, b), 3); }, {a, b});
  EXPECT_LT(err, 1e-6);
}

TEST(Conv1d, HandCases) {
  Tape tape;
  Tensor y = conv1d(tape, Tensor({1, 3}, {1, 2, 3}), Tensor({1, 1, 3}, {1, 0, -1}), Tensor::zeros({1}), 1, 0);
  EXPECT_EQ(vals(y), (std::vector<double>{-2}));
  y = conv1d(tape, Tensor({1, 5}, {1, 2, 3, 4, 5}), Tensor({1, 1, 2}, {1, 1}), Tensor({1}, {1}), 2, 0);
  EXPECT_EQ(vals(y), (std::vector<double>{4, 8}));
  EXPECT_THROW(conv1d(tape, Tensor::zeros({1, 2}), Tensor::zeros({1, 1, 5}), Tensor::zeros({1}), 1, 1),
               ShapeError);
}

TEST(Conv1d, MatchesDirectSum) {
  for (std::size_t stride : {1, 2, 3}) {
    for (std::size_t pad : {0, 1, 3}) {
      Tensor x = random_tensor({3, 17}, 10 + stride), w = random_tensor({4, 3, 5}, 20 + pad);
      Tensor b = random_tensor({4}, 30);
      Tape tape;
      Tensor y = conv1d(tape, x, w, b, stride, pad);
      auto ref = oracle::conv1d(vals(x), 3, 17, vals(w), 4, 5, vals(b), stride, pad);
      ASSERT_EQ(y.numel(), ref.size());
      for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-12);
    }
  }
}

TEST(Conv1d, BatchedEqualsPerSample) {
  Tensor x = random_tensor({3, 2, 11}, 4), w = random_tensor({3, 2, 3}, 5), b = random_tensor({3}, 6);
  Tape tape;
  Tensor yb = conv1d(tape, x, w, b, 2, 1);
  for (std::size_t n = 0; n < 3; ++n) {
    Tensor xn({2, 11}, std::vector<double>(x.values().begin() + n * 22, x.values().begin() + (n + 1) * 22));
    Tensor yn = conv1d(tape, xn, w, b, 2, 1);
    for (std::size_t i = 0; i < yn.numel(); ++i) EXPECT_NEAR(yb[n * yn.numel() + i], yn[i], 1e-12);
  }
}

TEST(Conv1d, GradCheck) {
  Tensor x = random_tensor({2, 16}, 1), w = random_tensor({3, 2, 5}, 2), b = random_tensor({3}, 3);
  EXPECT_LT(grad_check([&](Tape& t) { return weighted_sum(t, conv1d(t, x, w, b, 1, 0), 4); }, {x, w, b}), 1e-6);
  Tensor xb = random_tensor({2, 2, 16}, 5);
  EXPECT_LT(grad_check([&](Tape& t) { return weighted_sum(t, conv1d(t, xb, w, b, 2, 2), 6); }, {xb, w, b}),
            1e-6);
}

TEST(BatchNorm, AlreadyNormalized) {
  // Per-channel mean 0, biased variance 1.
  Tensor x({1, 2, 4}, {1, -1, 1, -1, 2, 0, -2, 0});
  std::vector<double> v = vals(x);
  v[4] = std::sqrt(2.0);
  v[6] = -std::sqrt(2.0);
  x = Tensor({1, 2, 4}, v);
  auto state = BatchNormState::fresh(2);
  Tape tape;
  Tensor y = batchnorm1d(tape, x, Tensor::constant({2}, 1.0), Tensor::zeros({2}), state, NormMode::train);
  for (std::size_t i = 0; i < y.numel(); ++i) EXPECT_NEAR(y[i], x[i], 1e-5);
}

TEST(BatchNorm, ZeroGammaGivesBeta) {
  auto state = BatchNormState::fresh(2);
  Tape tape;
  Tensor y = batchnorm1d(tape, random_tensor({3, 2, 5}, 9), Tensor::zeros({2}), Tensor({2}, {0.5, -2}), state,
                         NormMode::train);
  for (std::size_t n = 0; n < 3; ++n)
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t t = 0; t < 5; ++t) EXPECT_EQ(y[(n * 2 + c) * 5 + t], c == 0 ? 0.5 : -2.0);
}

TEST(BatchNorm, BatchStatistics) {
  auto state = BatchNormState::fresh(3);
  Tape tape;
  Tensor y = batchnorm1d(tape, random_tensor({4, 3, 6}, 11, 3.0), Tensor::constant({3}, 1.0), Tensor::zeros({3}),
                         state, NormMode::train);
  for (std::size_t c = 0; c < 3; ++c) {
    double m = 0, q = 0;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t t = 0; t < 6; ++t) m += y[(n * 3 + c) * 6 + t];
    m /= 24;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t t = 0; t < 6; ++t) q += std::pow(y[(n * 3 + c) * 6 + t] - m, 2);
    q /= 24;
    EXPECT_LT(std::abs(m), 1e-10);
    EXPECT_LT(std::abs(q - 1.0), 1e-3);  // var/(var+eps)
  }
  EXPECT_TRUE(state.initialized);
}

TEST(BatchNorm, EvalBeforeTrainThrows) {
  auto state = BatchNormState::fresh(2);
  Tape tape;
  EXPECT_THROW(batchnorm1d(tape, Tensor::zeros({2, 4}), Tensor::constant({2}, 1.0), Tensor::zeros({2}), state,
                           NormMode::eval),
               UninitializedState);
}

TEST(BatchNorm, GradCheck) {
  Tensor x = random_tensor({3, 2, 5}, 1), g = random_tensor({2}, 2), b = random_tensor({2}, 3);
  auto state = BatchNormState::fresh(2);
  double err = grad_check(
      [&](Tape& t) { return weighted_sum(t, batchnorm1d(t, x, g, b, state, NormMode::train), 4); }, {x, g, b});
  EXPECT_LT(err, 1e-6);
}

TEST(Activation, FixedPoints) {
  Tape tape;
  EXPECT_EQ(sigmoid(tape, Tensor::scalar(0)).item(), 0.5);
  EXPECT_EQ(ad::tanh(tape, Tensor::scalar(0)).item(), 0.0);
  EXPECT_EQ(relu(tape, Tensor::scalar(-3)).item(), 0.0);
  Tensor ls = log_softmax(tape, Tensor::zeros({5}), 0);
  for (double v : ls.values()) EXPECT_NEAR(v, std::log(0.2), 1e-15);
  EXPECT_NEAR(ls[0], -1.6094, 1e-4);
}

TEST(Activation, LogSoftmaxNormalizes) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    Tape tape;
    Tensor x = random_tensor({4, 5}, s, 30.0);
    Tensor y = log_softmax(tape, x, 1);
    for (std::size_t r = 0; r < 4; ++r) {
      double total = 0;
      for (std::size_t c = 0; c < 5; ++c) total += std::exp(y[r * 5 + c]);
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(Activation, GradCheck) {
  Tensor x = random_tensor({3, 5}, 7);
  // Keep relu away from its kink.
  for (auto& v : x.mutable_values())
    if (std::abs(v) < 0.05) v += 0.2;
  for (auto kind : {Activation::relu, Activation::sigmoid, Activation::tanh}) {
    EXPECT_LT(grad_check([&](Tape& t) { return weighted_sum(t, activation(t, x, kind), 8); }, {x}), 1e-6);
  }
  EXPECT_LT(grad_check([&](Tape& t) { return weighted_sum(t, log_softmax(t, x, 1), 8); }, {x}), 1e-6);
  EXPECT_LT(grad_check([&](Tape& t) { return weighted_sum(t, log_softmax(t, x, 0), 8); }, {x}), 1e-6);
}

TEST(Pool, HandCases) {
  Tape tape;
  EXPECT_EQ(vals(global_avg_pool(tape, Tensor({2, 3}, {1, 2, 3, 4, 5, 6}))), (std::vector<double>{2, 5}));
  EXPECT_EQ(vals(max_pool1d(tape, Tensor({1, 4}, {1, 3, 2, 5}), 2, 2)), (std::vector<double>{3, 5}));
  EXPECT_THROW(max_pool1d(tape, Tensor::zeros({1, 2}), 3, 1), ShapeError);
}

TEST(Pool, MaxTieGoesToFirst) {
  Tensor x = Tensor({1, 4}, {2, 2, 1, 1}).set_requires_grad(true);
  Tape tape;
  Tensor y = max_pool1d(tape, x, 4, 1);
  tape.backward(sum(tape, y));
  EXPECT_EQ(x.grad(), (std::vector<double>{1, 0, 0, 0}));
}

TEST(Pool, GradCheck) {
  Tensor x = random_tensor({2, 3, 9}, 3);  // continuous draws: no ties
  EXPECT_LT(grad_check([&](Tape& t) { return weighted_sum(t, global_avg_pool(t, x), 1); }, {x}), 1e-6);
  EXPECT_LT(grad_check([&](Tape& t) { return weighted_sum(t, max_pool1d(t, x, 3, 2), 1); }, {x}), 1e-6);
}

TEST(Elementwise, GradCheck) {
  Tensor a = random_tensor({2, 3}, 1), b = random_tensor({2, 3}, 2);
  Tensor s = random_tensor({2}, 3);
  EXPECT_LT(grad_check([&](Tape& t) { return weighted_sum(t, add(t, a, b), 9); }, {a, b}), 1e-6);
  EXPECT_LT(grad_check([&](Tape& t) { return weighted_sum(t, sub(t, a, b), 9); }, {a, b}), 1e-6);
  EXPECT_LT(grad_check([&](Tape& t) { return weighted_sum(t, mul(t, a, b), 9); }, {a, b}), 1e-6);
  EXPECT_LT(grad_check([&](Tape& t) { return weighted_sum(t, scale(t, a, -2.5), 9); }, {a}), 1e-6);
  EXPECT_LT(grad_check([&](Tape& t) { return mean(t, mul(t, a, a)); }, {a}), 1e-6);
  EXPECT_LT(grad_check([&](Tape& t) { return weighted_sum(t, channel_scale(t, a, s), 9); }, {a, s}), 1e-6);
  Tensor w = random_tensor({4, 3}, 4), bias = random_tensor({4}, 5);
  EXPECT_LT(grad_check([&](Tape& t) { return weighted_sum(t, linear(t, a, w, bias), 9); }, {a, w, bias}), 1e-6);
}

TEST(Structural, GradCheck) {
  Tensor a = random_tensor({3, 2}, 1), b = random_tensor({1, 2}, 2);
  EXPECT_LT(grad_check([&](Tape& t) { return weighted_sum(t, concat(t, {a, b, a}, 0), 3); }, {a, b}), 1e-6);
  EXPECT_LT(grad_check([&](Tape& t) { return weighted_sum(t, reshape(t, a, {6}), 3); }, {a}), 1e-6);
  std::vector<std::size_t> idx{2, 0, 2, 1};
  EXPECT_LT(grad_check([&](Tape& t) { return weighted_sum(t, gather_rows(t, a, idx), 3); }, {a}), 1e-6);
  EXPECT_LT(grad_check([&](Tape& t) { return mul(t, element(t, a, 3), element(t, a, 3)); }, {a}), 1e-6);
}

TEST(NllLoss, Values) {
  Tape tape;
  std::vector<double> p{0.7, 0.2, 0.05, 0.03, 0.02};
  std::vector<double> lp;
  for (double v : p) lp.push_back(std::log(v));
  std::vector<std::size_t> target{0};
  EXPECT_NEAR(nll_loss(tape, Tensor({1, 5}, lp), target).item(), 0.35667, 1e-5);
  std::vector<double> sure{0, -50, -50, -50, -50};
  EXPECT_NEAR(nll_loss(tape, Tensor({1, 5}, sure), target).item(), 0.0, 1e-15);
  std::vector<std::size_t> bad{5};
  EXPECT_THROW(nll_loss(tape, Tensor({1, 5}, lp), bad), InvalidLabel);
}

TEST(NllLoss, GradCheck) {
  Tensor x = random_tensor({4, 5}, 2);
  std::vector<std::size_t> targets{0, 3, 4, 3};
  EXPECT_LT(grad_check([&](Tape& t) { return nll_loss(t, log_softmax(t, x, 1), targets); }, {x}), 1e-7);
}

TEST(Backward, LinearAndQuadratic) {
  Tensor x = Tensor({3}, {1, 2, 3}).set_requires_grad(true);
  {
    Tape tape;
    tape.backward(sum(tape, x));
  }
  EXPECT_EQ(x.grad(), (std::vector<double>{1, 1, 1}));
  Tensor y = Tensor({2}, {1, 2}).set_requires_grad(true);
  Tape tape;
  tape.backward(sum(tape, mul(tape, y, y)));
  EXPECT_EQ(y.grad(), (std::vector<double>{2, 4}));
}

TEST(Backward, NonScalarLossThrows) {
  Tensor x = Tensor({3}, {1, 2, 3}).set_requires_grad(true);
  Tape tape;
  Tensor y = scale(tape, x, 2.0);
  EXPECT_THROW(tape.backward(y), ContractViolation);
}

TEST(Backward, FanOutAccumulates) {
  // loss = sum(a*x + b*x) must equal the expanded single-use form sum((a+b)*x).
  Tensor x = Tensor({3}, {0.5, -1, 2}).set_requires_grad(true);
  Tensor a({3}, {1, 2, 3}), b({3}, {-4, 0.5, 1});
  {
    Tape tape;
    tape.backward(sum(tape, add(tape, mul(tape, a, x), mul(tape, b, x))));
  }
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(x.grad()[i], a[i] + b[i]);
  // Second pass accumulates on top of the first.
  {
    Tape tape;
    tape.backward(sum(tape, x));
  }
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(x.grad()[i], a[i] + b[i] + 1);
}

TEST(Forward, Deterministic) {
  Tensor x = random_tensor({2, 3, 20}, 1), w = random_tensor({4, 3, 5}, 2), b = random_tensor({4}, 3);
  Tape t1, t2;
  EXPECT_EQ(vals(conv1d(t1, x, w, b, 2, 2)), vals(conv1d(t2, x, w, b, 2, 2)));
}

TEST(GradCheck, SumIsExact) {
  Tensor x = random_tensor({7}, 5);
  EXPECT_LT(grad_check([&](Tape& t) { return sum(t, x); }, {x}), 1e-10);
}

TEST(GradCheck, SigmoidSum) {
  Tensor x = random_tensor({7}, 5);
  EXPECT_LT(grad_check([&](Tape& t) { return sum(t, sigmoid(t, x)); }, {x}), 1e-7);
}

TEST(GradCheck, NonScalarThrows) {
  Tensor x = random_tensor({3}, 5);
  EXPECT_THROW(grad_check([&](Tape& t) { return scale(t, x, 2.0); }, {x}), ContractViolation);
}

TEST(GradCheck, AgreesWithIndependentDifferences) {
  // Reverse-mode grads of tanh(W x) summed, against a plain-double FD oracle.
  Tensor w = random_tensor({3, 4}, 1), x = random_tensor({4}, 2);
  w.set_requires_grad(true);
  {
    Tape tape;
    tape.backward(sum(tape, ad::tanh(tape, linear(tape, x, w, Tensor()))));
  }
  auto f = [&](const std::vector<double>& wv) {
    double s = 0;
    for (std::size_t r = 0; r < 3; ++r) {
      double z = 0;
      for (std::size_t c = 0; c < 4; ++c) z += wv[r * 4 + c] * x[c];
      s += std::tanh(z);
    }
    return s;
  };
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_LT(oracle::rel_err(w.grad()[i], oracle::central_diff(f, vals(w), i)), 1e-8);
  }
}

TEST(Tape, InferenceRecordsNothing) {
  Tensor x = Tensor({2}, {1, 2}).set_requires_grad(true);
  Tape tape = Tape::inference();
  Tensor y = mul(tape, x, x);
  EXPECT_EQ(tape.size(), 0u);
  EXPECT_FALSE(y.requires_grad());
}

TEST(Tape, FrozenTensorGetsNoGrad) {
  Tensor w = Tensor({2}, {1, 2}).set_requires_grad(true);
  Tensor x = Tensor({2}, {3, 4}).set_requires_grad(true);
  Tape tape;
  tape.freeze(w);
  tape.backward(sum(tape, mul(tape, w, x)));
  EXPECT_FALSE(w.has_grad());
  EXPECT_EQ(x.grad(), (std::vector<double>{1, 2}));
}
