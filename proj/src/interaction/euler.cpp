#include "ufin/interaction/euler.hpp"

#include <cmath>
#include <memory>

#include "ufin/error.hpp"

namespace ufin {

namespace {

void require_shape(const char* what, Var v, const Shape& want) {
  if (v.shape() != want) {
    throw ShapeError(std::string("euler_interaction: ") + what + " is " + shape_string(v.shape()) +
                     ", expected " + shape_string(want));
  }
}

}  // namespace

Var euler_interaction(Var theta, Var orders, Var mu, Var w_re, Var w_im, Var bias) {
  const Tensor& ov = orders.value();
  if (ov.rank() != 2) throw ShapeError("euler_interaction: orders must be 2-D, got " +
                                       shape_string(ov.shape()));
  const std::size_t n_o = ov.rows(), n_u = ov.cols();
  const Tensor& muv = mu.value();
  if (muv.rank() != 2 || muv.rows() != n_u) {
    throw ShapeError("euler_interaction: mu " + shape_string(muv.shape()) + " does not match orders " +
                     shape_string(ov.shape()));
  }
  const std::size_t d = muv.cols();
  const Tensor& tv = theta.value();
  const std::size_t batch = tv.rows();
  if (tv.cols() != n_u * d) {
    throw ShapeError("euler_interaction: theta " + shape_string(tv.shape()) + " does not hold " +
                     std::to_string(n_u) + " fields of width " + std::to_string(d));
  }
  require_shape("w_re", w_re, {n_o, d});
  require_shape("w_im", w_im, {n_o, d});
  require_shape("bias", bias, {1});

  const std::size_t nd = n_o * d;
  auto log_lambda = std::make_shared<std::vector<double>>(n_u * d);
  for (std::size_t i = 0; i < n_u * d; ++i) {
    const double lam = softplus(muv[i]);
    if (!(lam > 0.0)) throw NumericError("euler_interaction: modulus underflow at mu=" +
                                         std::to_string(muv[i]));
    (*log_lambda)[i] = std::log(lam);
  }
  // Log-modulus does not depend on the row.
  auto modulus = std::make_shared<std::vector<double>>(nd);
  for (std::size_t k = 0; k < n_o; ++k) {
    for (std::size_t c = 0; c < d; ++c) {
      double l = 0.0;
      for (std::size_t j = 0; j < n_u; ++j) l += ov.at(k, j) * (*log_lambda)[j * d + c];
      if (!(l <= kMaxLogModulus)) {
        throw NumericError("euler_interaction: order vector k=" + std::to_string(k) +
                           " has log-modulus " + std::to_string(l) + " (overflow)");
      }
      (*modulus)[k * d + c] = std::exp(l);
    }
  }
  auto re = std::make_shared<std::vector<double>>(batch * nd);
  auto im = std::make_shared<std::vector<double>>(batch * nd);
  const Tensor& wr = w_re.value();
  const Tensor& wi = w_im.value();
  Tensor out({batch, 1});
  std::vector<double> phi(nd);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* th = tv.data() + b * n_u * d;
    std::fill(phi.begin(), phi.end(), 0.0);
    for (std::size_t k = 0; k < n_o; ++k) {
      double* pk = phi.data() + k * d;
      for (std::size_t j = 0; j < n_u; ++j) {
        const double a = ov.at(k, j);
        const double* tj = th + j * d;
        for (std::size_t c = 0; c < d; ++c) pk[c] += a * tj[c];
      }
    }
    double acc = bias.value()[0];
    double* rb = re->data() + b * nd;
    double* mb = im->data() + b * nd;
    for (std::size_t i = 0; i < nd; ++i) {
      rb[i] = (*modulus)[i] * std::cos(phi[i]);
      mb[i] = (*modulus)[i] * std::sin(phi[i]);
      acc += wr[i] * rb[i] + wi[i] * mb[i];
    }
    out[b] = acc;
  }

  return theta.tape().record(
      std::move(out), {theta, orders, mu, w_re, w_im, bias},
      [theta, orders, mu, w_re, w_im, bias, batch, n_o, n_u, d, nd, log_lambda, re, im](
          Tape& t, Var self) {
        const auto g = t.grad(self);
        const Tensor& tv = t.value(theta);
        const Tensor& ov = t.value(orders);
        const Tensor& wr = t.value(w_re);
        const Tensor& wi = t.value(w_im);
        auto g_theta = t.grad(theta);
        auto g_orders = t.grad(orders);
        auto g_mu = t.grad(mu);
        auto g_wre = t.grad(w_re);
        auto g_wim = t.grad(w_im);
        auto g_bias = t.grad(bias);
        std::vector<double> dl(nd, 0.0);
        std::vector<double> dphi(nd);
        for (std::size_t b = 0; b < batch; ++b) {
          const double gb = g[b];
          if (gb == 0.0) continue;
          const double* rb = re->data() + b * nd;
          const double* mb = im->data() + b * nd;
          for (std::size_t i = 0; i < nd; ++i) {
            dl[i] += gb * (wr[i] * rb[i] + wi[i] * mb[i]);
            dphi[i] = gb * (wi[i] * rb[i] - wr[i] * mb[i]);
          }
          if (!g_wre.empty())
            for (std::size_t i = 0; i < nd; ++i) g_wre[i] += gb * rb[i];
          if (!g_wim.empty())
            for (std::size_t i = 0; i < nd; ++i) g_wim[i] += gb * mb[i];
          if (!g_bias.empty()) g_bias[0] += gb;
          const double* th = tv.data() + b * n_u * d;
          for (std::size_t k = 0; k < n_o; ++k) {
            const double* dk = dphi.data() + k * d;
            for (std::size_t j = 0; j < n_u; ++j) {
              if (!g_orders.empty()) {
                const double* tj = th + j * d;
                double acc = 0.0;
                for (std::size_t c = 0; c < d; ++c) acc += dk[c] * tj[c];
                g_orders[k * n_u + j] += acc;
              }
              if (!g_theta.empty()) {
                const double a = ov.at(k, j);
                double* gt = g_theta.data() + b * n_u * d + j * d;
                for (std::size_t c = 0; c < d; ++c) gt[c] += a * dk[c];
              }
            }
          }
        }
        if (!g_orders.empty()) {
          for (std::size_t k = 0; k < n_o; ++k)
            for (std::size_t j = 0; j < n_u; ++j) {
              double acc = 0.0;
              for (std::size_t c = 0; c < d; ++c) acc += dl[k * d + c] * (*log_lambda)[j * d + c];
              g_orders[k * n_u + j] += acc;
            }
        }
        if (!g_mu.empty()) {
          const Tensor& muv = t.value(mu);
          for (std::size_t j = 0; j < n_u; ++j)
            for (std::size_t c = 0; c < d; ++c) {
              double acc = 0.0;
              for (std::size_t k = 0; k < n_o; ++k) acc += ov.at(k, j) * dl[k * d + c];
              const double m = muv[j * d + c];
              g_mu[j * d + c] += acc * sigmoid(m) / softplus(m);
            }
        }
      });
}

namespace {

Tensor tracked(Shape shape, double fill = 0.0) {
  Tensor t(std::move(shape), fill);
  t.enable_grad();
  return t;
}

}  // namespace

EulerExpert::EulerExpert(std::size_t n_u, std::size_t n_o, std::size_t d, Rng& rng)
    : orders(tracked({n_o, n_u})),
      mu(tracked({n_u, d}, inverse_softplus(1.0))),
      w_re(tracked({n_o, d})),
      w_im(tracked({n_o, d})),
      bias(tracked({1})) {
  if (n_u == 0 || n_o == 0 || d == 0) throw ConfigError("euler expert: dimensions must be positive");
  fill_normal(orders, rng, 0.1);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(n_o * d));
  fill_normal(w_re, rng, stddev);
  fill_normal(w_im, rng, stddev);
}

Var EulerExpert::forward(Var universal) {
  Tape& t = universal.tape();
  return euler_interaction(universal, t.param(orders), t.param(mu), t.param(w_re), t.param(w_im),
                           t.param(bias));
}

void EulerExpert::append_parameters(std::vector<ParamRef>& out, const std::string& prefix) {
  out.push_back({prefix + "orders", &orders});
  out.push_back({prefix + "mu", &mu});
  out.push_back({prefix + "w_re", &w_re});
  out.push_back({prefix + "w_im", &w_im});
  out.push_back({prefix + "bias", &bias});
}

}  // namespace ufin
