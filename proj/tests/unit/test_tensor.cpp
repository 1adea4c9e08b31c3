#include <gtest/gtest.h>

#include <cmath>

#include "rearrange/adam.hpp"
#include "rearrange/error.hpp"
#include "rearrange/rng.hpp"
#include "rearrange/tensor.hpp"

using namespace rearrange;
using namespace rearrange::ad;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = scale * standard_normal(rng);
  return t;
}

// Central differences of a scalar function of `params` against the tape.
double max_rel_error(std::vector<Tensor> params, const std::function<Var(Tape&, std::span<const Var>)>& f,
                     double h = 1e-5) {
  Tape tape;
  std::vector<Var> leaves;
  for (const Tensor& p : params) leaves.push_back(tape.leaf(p));
  tape.backward(f(tape, leaves));
  std::vector<Tensor> grads;
  for (const Var& v : leaves) grads.push_back(v.grad());

  auto eval = [&](const std::vector<Tensor>& ps) {
    Tape t;
    std::vector<Var> ls;
    for (const Tensor& p : ps) ls.push_back(t.leaf(p));
    return f(t, ls).value()[0];
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double orig = params[k][i];
      params[k][i] = orig + h;
      const double up = eval(params);
      params[k][i] = orig - h;
      const double down = eval(params);
      params[k][i] = orig;
      const double fd = (up - down) / (2 * h);
      const double err = std::abs(fd - grads[k][i]) / std::max(1.0, std::abs(fd));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace

TEST(Tensor, ShapesAndConstruction) {
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_EQ(t.at(1, 2), 1.5);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ValidationError);
  EXPECT_EQ(shape_to_string({2, 3}), "[2,3]");
  EXPECT_EQ(Tensor::matrix({{1, 2}, {3, 4}}).shape(), (Shape{2, 2}));
}

TEST(Primitives, SiluOfZero) {
  Tape tape;
  Var y = silu(tape.constant(Tensor::vector({0.0})));
  EXPECT_EQ(y.value()[0], 0.0);
}

TEST(Primitives, IdentityMatmul) {
  Tape tape;
  Tensor a = Tensor::matrix({{1, 2}, {3, 4}, {5, 6}});
  Var y = matmul(tape.constant(Tensor::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}})), tape.constant(a));
  EXPECT_EQ(y.value(), a);
  EXPECT_THROW(matmul(tape.constant(a), tape.constant(a)), ValidationError);
}

TEST(Primitives, MeanOverAxis) {
  Tape tape;
  Var m = mean_axis(tape.constant(Tensor::matrix({{1, 3}, {5, 7}})), 0);
  EXPECT_EQ(m.value(), Tensor::vector({3, 5}));
  Var r = mean_axis(tape.constant(Tensor::matrix({{1, 3}, {5, 7}})), 1);
  EXPECT_EQ(r.value(), Tensor::vector({2, 6}));
}

TEST(Primitives, ConcatAndScale) {
  Tape tape;
  Var a = tape.constant(Tensor::matrix({{1}, {2}}));
  Var b = tape.constant(Tensor::matrix({{3, 4}, {5, 6}}));
  const Var parts[] = {a, b};
  EXPECT_EQ(concat(parts).value(), Tensor::matrix({{1, 3, 4}, {2, 5, 6}}));
  EXPECT_EQ(scale(b, 2.0).value(), Tensor::matrix({{6, 8}, {10, 12}}));
  EXPECT_THROW(add(a, b), ValidationError);
}

TEST(Primitives, NonFiniteIsTrapped) {
  Tape tape;
  Var a = tape.constant(Tensor::vector({1e300}));
  EXPECT_THROW(scale(a, 1e300), NumericError);
}

TEST(Backward, SumOfSquares) {
  Tape tape;
  Var w = tape.leaf(Tensor::vector({1, 2}));
  tape.backward(sum_squares(w));
  EXPECT_EQ(w.grad(), Tensor::vector({2, 4}));
}

TEST(Backward, UnusedParameterHasZeroGrad) {
  Tape tape;
  Var w = tape.leaf(Tensor::vector({1, 2}));
  Var u = tape.leaf(Tensor::vector({3}));
  tape.backward(sum_squares(w));
  EXPECT_EQ(u.grad(), Tensor::vector({0}));
}

TEST(Backward, NonScalarLossRejected) {
  Tape tape;
  Var w = tape.leaf(Tensor::vector({1, 2}));
  EXPECT_THROW(tape.backward(scale(w, 2.0)), ValidationError);
}

TEST(Backward, TwoLayerNetworkMatchesFiniteDifferences) {
  Rng rng = make_rng(1);
  Tensor x = random_tensor({5, 4}, rng);
  std::vector<Tensor> params = {random_tensor({4, 6}, rng, 0.5), random_tensor({6}, rng, 0.1),
                                random_tensor({6, 3}, rng, 0.5), random_tensor({3}, rng, 0.1)};
  auto net = [&x](Tape& tape, std::span<const Var> p) {
    Var h = silu(add_bias(matmul(tape.constant(x), p[0]), p[1]));
    Var y = add_bias(matmul(h, p[2]), p[3]);
    return scale(sum_squares(y), 0.2);
  };
  EXPECT_LT(max_rel_error(params, net), 1e-5);
}

TEST(Backward, EveryPrimitiveMatchesFiniteDifferences) {
  Rng rng = make_rng(2);
  std::vector<Tensor> params = {random_tensor({6, 3}, rng), random_tensor({6, 3}, rng), random_tensor({3}, rng),
                                random_tensor({6, 2}, rng)};
  auto f = [](Tape&, std::span<const Var> p) {
    Var pairs = pairwise_sum(p[0], p[1], 3);
    Var e = mean_axis(reshape(silu(add_bias(pairs, p[2])), {6, 3, 3}), 1);
    const Var parts[] = {e, p[3]};
    Var c = concat(parts);
    Var s = add(c, scale(c, 0.5));
    return sum_squares(mean_axis(s, 0));
  };
  EXPECT_LT(max_rel_error(params, f), 1e-5);
}

TEST(Backward, FusedEdgeOpMatchesComposition) {
  Rng rng = make_rng(3);
  const Tensor a = random_tensor({8, 5}, rng), b = random_tensor({8, 5}, rng), bias = random_tensor({5}, rng);
  Tape t1, t2;
  Var a1 = t1.leaf(a), b1 = t1.leaf(b), c1 = t1.leaf(bias);
  Var fused = edge_mean_silu(a1, b1, c1, 4);
  Var a2 = t2.leaf(a), b2 = t2.leaf(b), c2 = t2.leaf(bias);
  Var composed = mean_axis(reshape(silu(add_bias(pairwise_sum(a2, b2, 4), c2)), {8, 4, 5}), 1);
  ASSERT_EQ(fused.shape(), composed.shape());
  for (std::size_t i = 0; i < fused.value().size(); ++i) EXPECT_NEAR(fused.value()[i], composed.value()[i], 1e-14);
  t1.backward(sum_squares(fused));
  t2.backward(sum_squares(composed));
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a1.grad()[i], a2.grad()[i], 1e-13);
    EXPECT_NEAR(b1.grad()[i], b2.grad()[i], 1e-13);
  }
  for (std::size_t i = 0; i < bias.size(); ++i) EXPECT_NEAR(c1.grad()[i], c2.grad()[i], 1e-13);
  EXPECT_LT(max_rel_error({a, b, bias},
                          [](Tape&, std::span<const Var> p) { return sum_squares(edge_mean_silu(p[0], p[1], p[2], 4)); }),
            1e-5);
}

TEST(Backward, ResetDropsNodes) {
  Tape tape;
  tape.leaf(Tensor::vector({1}));
  EXPECT_EQ(tape.size(), 1u);
  tape.reset();
  EXPECT_EQ(tape.size(), 0u);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<Tensor> p = {Tensor::vector({1, -2, 3})};
  AdamState st(p);
  std::vector<Tensor> g = {Tensor({3}, 0.0)};
  adam_step(p, g, st);
  EXPECT_EQ(p[0], Tensor::vector({1, -2, 3}));
  EXPECT_EQ(st.step_count(), 1);
}

TEST(Adam, FirstStepIsSignTimesRate) {
  std::vector<Tensor> p = {Tensor::vector({1, -2, 3})};
  AdamState st(p, AdamConfig{0.01});
  std::vector<Tensor> g = {Tensor::vector({0.5, -7, 1e-3})};
  adam_step(p, g, st);
  EXPECT_NEAR(p[0][0], 1 - 0.01, 1e-7);
  EXPECT_NEAR(p[0][1], -2 + 0.01, 1e-7);
  EXPECT_NEAR(p[0][2], 3 - 0.01, 1e-4);
}

TEST(Adam, Errors) {
  std::vector<Tensor> p = {Tensor::vector({1, 2})};
  AdamState st(p);
  std::vector<Tensor> bad_shape = {Tensor::vector({1, 2, 3})};
  EXPECT_THROW(adam_step(p, bad_shape, st), ValidationError);
  std::vector<Tensor> nan = {Tensor::vector({std::nan(""), 0.0})};
  EXPECT_THROW(adam_step(p, nan, st), NumericError);
  EXPECT_EQ(p[0], Tensor::vector({1, 2}));
}
