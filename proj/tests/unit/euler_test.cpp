#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "ufin/error.hpp"
#include "ufin/interaction/euler.hpp"
#include "ufin/numeric/ops.hpp"

namespace ufin {
namespace {

std::complex<double> single(double lambda, double theta, double order) {
  const auto c = testing::euler_components(Tensor({1, 1}, {theta}), Tensor({1, 1}, {order}),
                                           Tensor({1, 1}, {inverse_softplus(lambda)}));
  return c[0][0][0];
}

TEST(Euler, PowerOfTwo) {
  const auto z = single(2.0, 0.0, 3.0);
  EXPECT_NEAR(z.real(), 8.0, 1e-12);
  EXPECT_NEAR(z.imag(), 0.0, 1e-12);
}

TEST(Euler, EulerIdentity) {
  const auto z = single(1.0, std::numbers::pi / 2, 2.0);
  EXPECT_NEAR(z.real(), -1.0, 1e-12);
  EXPECT_NEAR(z.imag(), 0.0, 1e-12);
}

TEST(Euler, FractionalAndNegativeOrders) {
  // 4^{1/2} and 2^{-1}, both on the real axis.
  EXPECT_NEAR(single(4.0, 0.0, 0.5).real(), 2.0, 1e-12);
  EXPECT_NEAR(single(2.0, 0.0, -1.0).real(), 0.5, 1e-12);
}

TEST(Euler, MatchesComplexProductOracle) {
  Rng rng(2024);
  std::uniform_int_distribution<int> order(0, 4), dim(1, 3), fields(1, 4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n_u = fields(rng), d = dim(rng), n_o = 3, batch = 2;
    std::vector<std::vector<int>> orders(n_o, std::vector<int>(n_u));
    Tensor orders_t({n_o, n_u});
    for (std::size_t k = 0; k < n_o; ++k)
      for (std::size_t j = 0; j < n_u; ++j) orders_t.at(k, j) = orders[k][j] = order(rng);
    Tensor mu = testing::random_tensor({n_u, d}, trial, 0.5);
    Tensor lambda({n_u, d});
    for (std::size_t i = 0; i < mu.size(); ++i) lambda[i] = softplus(mu[i]);
    const Tensor theta = testing::random_tensor({batch, n_u * d}, 1000 + trial);
    const auto expected = testing::euler_brute_force(theta, orders, lambda);
    const auto got = testing::euler_components(theta, orders_t, mu);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t k = 0; k < n_o; ++k)
        for (std::size_t c = 0; c < d; ++c) {
          const double scale = std::max(std::abs(expected[b][k][c]), 1e-300);
          EXPECT_LT(std::abs(got[b][k][c] - expected[b][k][c]) / scale, 1e-9);
        }
  }
}

TEST(Euler, OverflowNamesOrderVector) {
  Tensor orders({2, 1}, {0.0, 2000.0});
  try {
    Tape tape;
    euler_interaction(tape.constant(Tensor({1, 1}, {0.0})), tape.constant(orders),
                      tape.constant(Tensor({1, 1}, {inverse_softplus(2.0)})),
                      tape.constant(Tensor({2, 1})), tape.constant(Tensor({2, 1})),
                      tape.constant(Tensor({1})));
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("k=1"), std::string::npos) << e.what();
  }
}

TEST(Euler, ShapeChecks) {
  Tape tape;
  auto c = [&](Shape s) { return tape.constant(Tensor(std::move(s))); };
  EXPECT_THROW(euler_interaction(c({2, 5}), c({3, 2}), c({2, 3}), c({3, 3}), c({3, 3}), c({1})),
               ShapeError);
  EXPECT_THROW(euler_interaction(c({2, 6}), c({3, 2}), c({2, 3}), c({3, 2}), c({3, 3}), c({1})),
               ShapeError);
}

TEST(Euler, GradientsIncludingOrders) {
  for (std::uint64_t point = 0; point < 5; ++point) {
    std::vector<Tensor> inputs{
        testing::random_tensor({3, 4 * 2}, point * 10 + 1),   // theta
        testing::random_tensor({3, 4}, point * 10 + 2, 0.5),  // orders
        testing::random_tensor({4, 2}, point * 10 + 3),       // mu
        testing::random_tensor({3, 2}, point * 10 + 4),       // w_re
        testing::random_tensor({3, 2}, point * 10 + 5),       // w_im
        testing::random_tensor({1}, point * 10 + 6)};         // bias
    auto fn = [](Tape&, std::span<const Var> v) {
      return euler_interaction(v[0], v[1], v[2], v[3], v[4], v[5]);
    };
    const auto r = testing::check_gradients(fn, inputs, point);
    EXPECT_LT(r.max_rel_error, 1e-4) << "input " << r.worst_input;
  }
}

TEST(EulerExpert, Initialisation) {
  Rng rng(3);
  EulerExpert e(7, 7, 16, rng);
  EXPECT_EQ(e.orders.shape(), (Shape{7, 7}));
  for (double m : e.mu.values()) EXPECT_NEAR(softplus(m), 1.0, 1e-12);
  double sq = 0.0;
  for (double a : e.orders.values()) sq += a * a;
  EXPECT_NEAR(std::sqrt(sq / 49.0), 0.1, 0.03);
  EXPECT_EQ(e.bias[0], 0.0);
  std::vector<ParamRef> params;
  e.append_parameters(params, "x/");
  ASSERT_EQ(params.size(), 5u);
  EXPECT_EQ(params[0].name, "x/orders");
}

}  // namespace
}  // namespace ufin
