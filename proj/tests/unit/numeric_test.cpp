#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "ufin/error.hpp"
#include "ufin/numeric/adam.hpp"
#include "ufin/numeric/ops.hpp"
#include "ufin/numeric/random.hpp"

namespace ufin {
namespace {

using testing::check_gradients;
using testing::random_tensor;

TEST(Tensor, ShapeAndValues) {
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_FALSE(t.tracked());
  t.enable_grad();
  EXPECT_EQ(t.grad().size(), 6u);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST(Ops, MatmulHandArithmetic) {
  Tape tape;
  Var a = tape.constant(Tensor({2, 2}, {1, 2, 3, 4}));
  Var b = tape.constant(Tensor({2, 1}, {1, 1}));
  const Tensor& c = matmul(a, b).value();
  ASSERT_EQ(c.shape(), (Shape{2, 1}));
  EXPECT_EQ(c[0], 3.0);
  EXPECT_EQ(c[1], 7.0);
}

TEST(Ops, MatmulShapeMismatchNamesBothShapes) {
  Tape tape;
  Var a = tape.constant(Tensor({2, 3}));
  Var b = tape.constant(Tensor({2, 2}));
  try {
    matmul(a, b);
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("[2,3]"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("[2,2]"), std::string::npos) << e.what();
  }
  EXPECT_THROW(add(a, b), ShapeError);
}

TEST(Ops, AddZerosIsIdentity) {
  Tape tape;
  const Tensor x = random_tensor({3, 4}, 1);
  Var y = add(tape.constant(x), tape.constant(Tensor({3, 4})));
  EXPECT_TRUE(y.value().same_values(x));
}

TEST(Ops, GradOfSumOfSquares) {
  Tensor x({2}, {1, 2});
  x.enable_grad();
  Tape tape;
  Var v = tape.param(x);
  tape.backward(sum(mul(v, v)));
  EXPECT_EQ(x.grad()[0], 2.0);
  EXPECT_EQ(x.grad()[1], 4.0);
}

TEST(Ops, LayerNormConstantRowIsZero) {
  Tape tape;
  Var x = tape.constant(Tensor({1, 3}, {1, 1, 1}));
  Var y = layer_norm(x, tape.constant(Tensor({3}, 1.0)), tape.constant(Tensor({3})), 3);
  for (double v : y.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(Ops, LayerNormAlreadyNormalised) {
  Tape tape;
  Var x = tape.constant(Tensor({1, 2}, {1, -1}));
  Var y = layer_norm(x, tape.constant(Tensor({2}, 1.0)), tape.constant(Tensor({2})), 2);
  EXPECT_NEAR(y.value()[0], 1.0, 1e-5);
  EXPECT_NEAR(y.value()[1], -1.0, 1e-5);
}

TEST(Ops, LayerNormRejectsSingleColumnGroups) {
  Tape tape;
  Var x = tape.constant(Tensor({1, 1}, {3.0}));
  EXPECT_THROW(layer_norm(x, tape.constant(Tensor({1}, 1.0)), tape.constant(Tensor({1})), 1),
               ShapeError);
}

TEST(Ops, LayerNormPreAffineMoments) {
  Tape tape;
  Var x = tape.constant(random_tensor({5, 12}, 3, 4.0));
  Var y = layer_norm(x, tape.constant(Tensor({12}, 1.0)), tape.constant(Tensor({12})), 4);
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t g = 0; g < 3; ++g) {
      double mean = 0.0, var = 0.0;
      for (std::size_t c = 0; c < 4; ++c) mean += y.value().at(r, g * 4 + c);
      mean /= 4.0;
      for (std::size_t c = 0; c < 4; ++c) var += std::pow(y.value().at(r, g * 4 + c) - mean, 2);
      EXPECT_LT(std::abs(mean), 1e-9);
      EXPECT_NEAR(var / 4.0, 1.0, 1e-3);
    }
  }
}

TEST(Ops, SoftmaxExamples) {
  Tape tape;
  Var a = softmax_rows(tape.constant(Tensor({1, 3}, {0, 0, 0})));
  for (double v : a.value().values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  Var b = softmax_rows(tape.constant(Tensor({1, 3}, {2, 1, 0})));
  EXPECT_NEAR(b.value()[0], 0.6652, 5e-5);
  EXPECT_NEAR(b.value()[1], 0.2447, 5e-5);
  EXPECT_NEAR(b.value()[2], 0.0900, 5e-5);
  Var c = softmax_rows(tape.constant(Tensor({1, 2}, {1000, 0})));
  EXPECT_NEAR(c.value()[0], 1.0, 1e-12);
  EXPECT_NEAR(c.value()[1], 0.0, 1e-12);
  EXPECT_TRUE(std::isfinite(c.value()[1]));
}

TEST(Ops, SoftmaxIsProbabilityVector) {
  Tape tape;
  Var p = softmax_rows(tape.constant(random_tensor({20, 7}, 9, 5.0)));
  for (std::size_t r = 0; r < 20; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 7; ++c) {
      EXPECT_GT(p.value().at(r, c), 0.0);
      s += p.value().at(r, c);
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(Ops, ScalarFunctions) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(softplus(0.0), std::numbers::ln2, 1e-15);
  Rng rng(4);
  std::normal_distribution<double> n(0.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    const double x = n(rng);
    EXPECT_NEAR(sigmoid(x) + sigmoid(-x), 1.0, 1e-15);
  }
  EXPECT_NEAR(softplus(inverse_softplus(1.0)), 1.0, 1e-14);
}

TEST(Ops, LogRejectsNonPositive) {
  Tape tape;
  EXPECT_THROW(log(tape.constant(Tensor({2}, {1.0, 0.0}))), std::domain_error);
  EXPECT_THROW(log(tape.constant(Tensor({1}, {-2.0}))), std::domain_error);
}

TEST(Ops, GatherRowsUnseenIsZero) {
  Tensor table({3, 2}, {1, 2, 3, 4, 5, 6});
  table.enable_grad();
  Tape tape;
  const std::vector<std::int64_t> idx{2, -1, 0, 2};
  Var g = gather_rows(tape.param(table), idx);
  EXPECT_EQ(g.value().at(1, 0), 0.0);
  EXPECT_EQ(g.value().at(0, 1), 6.0);
  tape.backward(sum(g));
  EXPECT_EQ(table.grad()[4], 2.0);
  EXPECT_EQ(table.grad()[2], 0.0);
}

// Each op at several random points.
struct GradCase {
  const char* name;
  std::vector<Shape> shapes;
  testing::GradFn fn;
  double stddev = 1.0;
  bool positive = false;
};

std::vector<GradCase> grad_cases() {
  return {
      {"matmul", {{3, 4}, {4, 2}}, [](Tape&, std::span<const Var> v) { return matmul(v[0], v[1]); }},
      {"linear", {{3, 4}, {4, 2}, {2}},
       [](Tape&, std::span<const Var> v) { return linear(v[0], v[1], v[2]); }},
      {"add", {{2, 3}, {2, 3}}, [](Tape&, std::span<const Var> v) { return add(v[0], v[1]); }},
      {"sub", {{2, 3}, {2, 3}}, [](Tape&, std::span<const Var> v) { return sub(v[0], v[1]); }},
      {"mul", {{2, 3}, {2, 3}}, [](Tape&, std::span<const Var> v) { return mul(v[0], v[1]); }},
      {"scale", {{2, 3}}, [](Tape&, std::span<const Var> v) { return scale(v[0], -1.7); }},
      {"sum", {{2, 3}}, [](Tape&, std::span<const Var> v) { return sum(v[0]); }},
      {"concat", {{2, 3}, {2, 1}},
       [](Tape&, std::span<const Var> v) { return concat_cols(v); }},
      {"column", {{3, 4}}, [](Tape&, std::span<const Var> v) { return column(v[0], 2); }},
      {"scale_rows", {{3, 4}, {3, 1}},
       [](Tape&, std::span<const Var> v) { return scale_rows(v[0], v[1]); }},
      {"weighted_sum", {{3, 4}, {3, 4}, {3, 2}},
       [](Tape&, std::span<const Var> v) {
         const Var items[] = {v[0], v[1]};
         return weighted_sum(items, v[2]);
       }},
      {"layer_norm", {{3, 6}, {6}, {6}},
       [](Tape&, std::span<const Var> v) { return layer_norm(v[0], v[1], v[2], 3); }},
      {"softmax", {{3, 5}}, [](Tape&, std::span<const Var> v) { return softmax_rows(v[0]); }},
      {"sigmoid", {{3, 4}}, [](Tape&, std::span<const Var> v) { return sigmoid(v[0]); }},
      {"softplus", {{3, 4}}, [](Tape&, std::span<const Var> v) { return softplus(v[0]); }},
      {"relu", {{3, 4}}, [](Tape&, std::span<const Var> v) { return relu(v[0]); }},
      {"exp", {{3, 4}}, [](Tape&, std::span<const Var> v) { return exp(v[0]); }},
      {"log", {{3, 4}}, [](Tape&, std::span<const Var> v) { return log(v[0]); }, 1.0, true},
  };
}

TEST(Gradients, EveryOpMatchesCentralDifferences) {
  for (const GradCase& c : grad_cases()) {
    for (std::uint64_t point = 0; point < 5; ++point) {
      std::vector<Tensor> inputs;
      for (std::size_t i = 0; i < c.shapes.size(); ++i) {
        Tensor t = random_tensor(c.shapes[i], point * 131 + i, c.stddev);
        if (c.positive)
          for (double& x : t.values()) x = std::abs(x) + 0.5;
        inputs.push_back(std::move(t));
      }
      const auto r = check_gradients(c.fn, inputs, point);
      EXPECT_LT(r.max_rel_error, 1e-4) << c.name << " point " << point << " input " << r.worst_input;
    }
  }
}

TEST(Adam, ZeroGradZeroDecayLeavesParams) {
  Tensor p = random_tensor({3}, 5);
  const Tensor before = p.detached();
  p.enable_grad();
  Adam adam({0.1, 0.9, 0.999, 1e-8, 0.0});
  std::vector<ParamRef> params{{"p", &p}};
  for (int i = 0; i < 3; ++i) adam.step(params);
  EXPECT_TRUE(p.same_values(before));
  EXPECT_EQ(adam.steps(), 3u);
}

TEST(Adam, FirstStepMagnitudeIsLr) {
  Tensor p({1}, {0.0});
  p.enable_grad();
  p.grad()[0] = 1.0;
  Adam adam({0.1});
  std::vector<ParamRef> params{{"p", &p}};
  adam.step(params);
  EXPECT_NEAR(p[0], -0.1, 1e-6);
}

TEST(Adam, WeightDecayIsAddedToGradient) {
  Tensor p({1}, {2.0});
  p.enable_grad();
  Adam adam({0.1, 0.9, 0.999, 1e-8, 0.5});
  std::vector<ParamRef> params{{"p", &p}};
  adam.step(params);
  // g = 0 + 0.5 * 2 > 0, so the first step moves by about -lr.
  EXPECT_NEAR(p[0], 1.9, 1e-6);
}

TEST(Adam, MissingGradientRejected) {
  Tensor p({2});
  Adam adam;
  std::vector<ParamRef> params{{"p", &p}};
  EXPECT_THROW(adam.step(params), std::invalid_argument);
}

TEST(Adam, DeterministicTrajectory) {
  auto run = [] {
    Tensor w = random_tensor({4, 1}, 11);
    w.enable_grad();
    const Tensor x = random_tensor({8, 4}, 12);
    Adam adam({0.01});
    std::vector<ParamRef> params{{"w", &w}};
    for (int step = 0; step < 50; ++step) {
      zero_grads(params);
      Tape tape;
      Var y = matmul(tape.constant(x), tape.param(w));
      tape.backward(sum(mul(y, y)));
      adam.step(params);
    }
    return w.detached();
  };
  EXPECT_TRUE(run().same_values(run()));
}

TEST(Random, DeriveSeedSeparatesStages) {
  EXPECT_EQ(derive_seed(42, "a"), derive_seed(42, "a"));
  EXPECT_NE(derive_seed(42, "a"), derive_seed(42, "b"));
  EXPECT_NE(derive_seed(42, "a"), derive_seed(43, "a"));
}

TEST(Forward, BitwiseDeterministic) {
  auto run = [] {
    Tape tape;
    Var x = tape.constant(random_tensor({4, 6}, 21));
    Var w = tape.constant(random_tensor({6, 6}, 22));
    return softmax_rows(relu(matmul(x, w))).value();
  };
  EXPECT_TRUE(run().same_values(run()));
}

}  // namespace
}  // namespace ufin
