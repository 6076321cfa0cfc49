#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "ufin/numeric/ops.hpp"
#include "ufin/numeric/random.hpp"

namespace ufin::testing {

namespace {

double projected(const GradFn& fn, std::vector<Tensor>& inputs, const Tensor& direction) {
  Tape tape;
  tape.set_grad_enabled(false);
  std::vector<Var> leaves;
  for (Tensor& t : inputs) leaves.push_back(tape.constant_ref(t));
  const Tensor& out = fn(tape, leaves).value();
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * direction[i];
  return s;
}

}  // namespace

Tensor random_tensor(Shape shape, std::uint64_t seed, double stddev) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  fill_normal(t, rng, stddev);
  return t;
}

GradCheck check_gradients(const GradFn& fn, std::vector<Tensor>& inputs, std::uint64_t seed,
                          double step) {
  Tensor direction;
  std::vector<std::vector<double>> analytic;
  {
    for (Tensor& t : inputs) {
      t.enable_grad();
      t.zero_grad();
    }
    Tape tape;
    std::vector<Var> leaves;
    for (Tensor& t : inputs) leaves.push_back(tape.param(t));
    Var out = fn(tape, leaves);
    direction = random_tensor(out.shape(), seed ^ 0x9e3779b97f4a7c15ULL);
    Var loss = sum(mul(out, tape.constant(direction)));
    tape.backward(loss);
    for (Tensor& t : inputs) analytic.emplace_back(t.grad().begin(), t.grad().end());
  }
  GradCheck result;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor& t = inputs[k];
    double diff = 0.0, norm_a = 0.0, norm_n = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + step;
      const double up = projected(fn, inputs, direction);
      t[i] = saved - step;
      const double down = projected(fn, inputs, direction);
      t[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      diff += (numeric - analytic[k][i]) * (numeric - analytic[k][i]);
      norm_a += analytic[k][i] * analytic[k][i];
      norm_n += numeric * numeric;
    }
    const double scale = std::max({std::sqrt(norm_a), std::sqrt(norm_n), 1e-8});
    const double rel = std::sqrt(diff) / scale;
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_input = k;
    }
  }
  return result;
}

GradCheck check_parameter_gradients(const ModuleFn& fn, std::span<const ParamRef> params,
                                    std::uint64_t seed, double step) {
  Tensor direction;
  std::vector<std::vector<double>> analytic;
  {
    for (const ParamRef& p : params) {
      p.tensor->enable_grad();
      p.tensor->zero_grad();
    }
    Tape tape;
    Var out = fn(tape);
    direction = random_tensor(out.shape(), seed ^ 0x9e3779b97f4a7c15ULL);
    tape.backward(sum(mul(out, tape.constant(direction))));
    for (const ParamRef& p : params) analytic.emplace_back(p.tensor->grad().begin(), p.tensor->grad().end());
  }
  auto evaluate = [&] {
    Tape tape;
    tape.set_grad_enabled(false);
    const Tensor& out = fn(tape).value();
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * direction[i];
    return s;
  };
  GradCheck result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& t = *params[k].tensor;
    double diff = 0.0, norm_a = 0.0, norm_n = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + step;
      const double up = evaluate();
      t[i] = saved - step;
      const double down = evaluate();
      t[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      diff += (numeric - analytic[k][i]) * (numeric - analytic[k][i]);
      norm_a += analytic[k][i] * analytic[k][i];
      norm_n += numeric * numeric;
    }
    const double rel = std::sqrt(diff) / std::max({std::sqrt(norm_a), std::sqrt(norm_n), 1e-8});
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_input = k;
    }
  }
  return result;
}

}  // namespace ufin::testing
