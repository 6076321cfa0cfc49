#include <cmath>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "ufin/error.hpp"
#include "ufin/eval/metrics.hpp"
#include "ufin/training/losses.hpp"

namespace ufin {
namespace {

double kd_value(std::vector<double> student, std::vector<double> teacher) {
  Tape tape;
  const std::size_t n = student.size();
  return kd_loss(tape.constant(Tensor({n, 1}, std::move(student))), teacher).value()[0];
}

double ctr_value(std::vector<double> preds, std::vector<int> labels) {
  Tape tape;
  const std::size_t n = preds.size();
  return ctr_loss(tape.constant(Tensor({n, 1}, std::move(preds))), labels).value()[0];
}

TEST(KdLoss, Examples) {
  EXPECT_DOUBLE_EQ(kd_value({0.3, -1.2}, {0.3, -1.2}), 0.0);
  EXPECT_DOUBLE_EQ(kd_value({0.0}, {1.0}), 1.0);
  EXPECT_DOUBLE_EQ(kd_value({0.0, 1.0}, {1.0, 3.0}), 5.0);
}

TEST(KdLoss, GradientIsTwiceTheGap) {
  Tensor student({3, 1}, {0.5, -1.0, 2.0});
  student.enable_grad();
  const std::vector<double> teacher{1.0, 1.0, 1.0};
  Tape tape;
  tape.backward(kd_loss(tape.param(student), teacher));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(student.grad()[i], 2.0 * (student[i] - teacher[i]));
  std::vector<Tensor> in{testing::random_tensor({5, 1}, 1)};
  const std::vector<double> t5{0.1, 0.2, -0.3, 0.4, 0.5};
  auto fn = [&](Tape&, std::span<const Var> v) { return kd_loss(v[0], t5); };
  EXPECT_LT(testing::check_gradients(fn, in, 2).max_rel_error, 1e-6);
}

TEST(KdLoss, LengthMismatch) {
  Tape tape;
  const std::vector<double> teacher{1.0};
  EXPECT_THROW(kd_loss(tape.constant(Tensor({2, 1})), teacher), ShapeError);
}

TEST(CtrLoss, Examples) {
  EXPECT_NEAR(ctr_value({0.5}, {1}), std::log(2.0), 1e-12);
  EXPECT_NEAR(ctr_value({1.0 - 1e-12}, {1}), 0.0, 1e-6);
  EXPECT_NEAR(ctr_value({0.0}, {1}), -std::log(1e-7), 1e-9);
  EXPECT_NEAR(ctr_value({0.0}, {1}), 16.118, 1e-3);
  EXPECT_NEAR(ctr_value({1.0}, {0}), -std::log(1e-7), 1e-6);
  EXPECT_NEAR(ctr_value({0.2}, {0}), -std::log(0.8), 1e-12);
}

TEST(CtrLoss, NonNegativeAndFinite) {
  for (double p : {0.0, 1e-12, 0.3, 0.999, 1.0}) {
    for (int y : {0, 1}) {
      const double v = ctr_value({p}, {y});
      EXPECT_GE(v, 0.0);
      EXPECT_TRUE(std::isfinite(v));
    }
  }
}

TEST(CtrLoss, RejectsBadLabels) {
  Tape tape;
  const std::vector<int> bad{2};
  EXPECT_THROW(ctr_loss(tape.constant(Tensor({1, 1}, {0.5})), bad), DataError);
  const std::vector<int> two{0, 1};
  EXPECT_THROW(ctr_loss(tape.constant(Tensor({1, 1}, {0.5})), two), ShapeError);
}

TEST(CtrLoss, MatchesLogLossTimesN) {
  const std::vector<double> p{0.1, 0.7, 0.4, 0.95};
  const std::vector<int> y{0, 1, 1, 0};
  EXPECT_NEAR(ctr_value(p, y) / 4.0, logloss(y, p), 1e-12);
}

TEST(CtrLoss, Gradients) {
  std::vector<Tensor> in{Tensor({4, 1}, {0.1, 0.7, 0.4, 0.95})};
  const std::vector<int> y{0, 1, 1, 0};
  auto fn = [&](Tape&, std::span<const Var> v) { return ctr_loss(v[0], y); };
  EXPECT_LT(testing::check_gradients(fn, in, 3, 1e-7).max_rel_error, 1e-4);
}

TEST(CtrLoss, ClampedEntriesPassNoGradient) {
  Tensor p({2, 1}, {0.0, 0.5});
  p.enable_grad();
  const std::vector<int> y{1, 1};
  Tape tape;
  tape.backward(ctr_loss(tape.param(p), y));
  EXPECT_EQ(p.grad()[0], 0.0);
  EXPECT_NEAR(p.grad()[1], -2.0, 1e-12);
}

TEST(TotalLoss, SumsBothTerms) {
  Tape tape;
  EXPECT_DOUBLE_EQ(total_loss(tape.constant(Tensor::scalar(0.5)), tape.constant(Tensor::scalar(0.3)))
                       .value()[0],
                   0.8);
  EXPECT_DOUBLE_EQ(total_loss(tape.constant(Tensor::scalar(0.0)), tape.constant(Tensor::scalar(1.7)))
                       .value()[0],
                   1.7);
  Tensor a = Tensor::scalar(0.5), b = Tensor::scalar(0.3);
  a.enable_grad();
  b.enable_grad();
  Tape t2;
  t2.backward(total_loss(t2.param(a), t2.param(b)));
  EXPECT_EQ(a.grad()[0], 1.0);
  EXPECT_EQ(b.grad()[0], 1.0);
}

}  // namespace
}  // namespace ufin
