#include "ufin/numeric/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "ufin/error.hpp"

namespace ufin {

namespace {

void require_same_shape(const char* op, Var a, Var b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

std::size_t rows_of(Var v) { return v.value().rows(); }
std::size_t cols_of(Var v) { return v.value().cols(); }

// C[m,n] += A[m,k] * B[k,n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m,k] += G[m,n] * B[k,n]^T. B is transposed first so the inner loop stays
// a contiguous axpy.
void gemm_nt(const double* g, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  std::vector<double> bt(n * k);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
  gemm_nn(g, bt.data(), c, m, n, k);
}

// C[k,n] += A[m,k]^T * G[m,n]
void gemm_tn(const double* a, const double* g, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* grow = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      double* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * grow[j];
    }
  }
}

// Elementwise op whose derivative is expressed through input x and output y.
template <class Fwd, class Deriv>
Var unary(Var x, Fwd fwd, Deriv deriv) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
  return x.tape().record(std::move(out), {x}, [x, deriv](Tape& t, Var self) {
    auto gx = t.grad(x);
    const auto gy = t.grad(self);
    const Tensor& xv = t.value(x);
    const Tensor& yv = t.value(self);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * deriv(xv[i], yv[i]);
  });
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double inverse_softplus(double y) {
  if (!(y > 0.0)) throw std::domain_error("inverse_softplus: argument must be positive");
  return y > 30.0 ? y + std::log(-std::expm1(-y)) : std::log(std::expm1(y));
}

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  if (bv.rows() != k || (bv.rank() == 1 && k != 1)) {
    throw ShapeError("matmul: inner dims differ " + shape_string(av.shape()) + " x " +
                     shape_string(bv.shape()));
  }
  Tensor out({m, n});
  gemm_nn(av.data(), bv.data(), out.data(), m, k, n);
  return a.tape().record(std::move(out), {a, b}, [a, b, m, k, n](Tape& t, Var self) {
    const auto g = t.grad(self);
    if (auto ga = t.grad(a); !ga.empty()) gemm_nt(g.data(), t.value(b).data(), ga.data(), m, k, n);
    if (auto gb = t.grad(b); !gb.empty()) gemm_tn(t.value(a).data(), g.data(), gb.data(), m, k, n);
  });
}

Var linear(Var x, Var weight, Var bias) {
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  const std::size_t batch = xv.rows(), in = xv.cols();
  if (wv.rank() != 2 || wv.shape()[0] != in) {
    throw ShapeError("linear: input " + shape_string(xv.shape()) + " incompatible with weight " +
                     shape_string(wv.shape()));
  }
  const std::size_t out_dim = wv.shape()[1];
  if (bias.valid() && bias.value().size() != out_dim) {
    throw ShapeError("linear: bias " + shape_string(bias.value().shape()) +
                     " does not match weight " + shape_string(wv.shape()));
  }
  Tensor out({batch, out_dim});
  if (bias.valid()) {
    const Tensor& bv = bias.value();
    for (std::size_t r = 0; r < batch; ++r)
      std::copy(bv.data(), bv.data() + out_dim, out.data() + r * out_dim);
  }
  gemm_nn(xv.data(), wv.data(), out.data(), batch, in, out_dim);
  std::vector<Var> inputs{x, weight};
  if (bias.valid()) inputs.push_back(bias);
  return x.tape().record(std::move(out), inputs,
                         [x, weight, bias, batch, in, out_dim](Tape& t, Var self) {
                           const auto g = t.grad(self);
                           if (auto gx = t.grad(x); !gx.empty())
                             gemm_nt(g.data(), t.value(weight).data(), gx.data(), batch, in,
                                     out_dim);
                           if (auto gw = t.grad(weight); !gw.empty())
                             gemm_tn(t.value(x).data(), g.data(), gw.data(), batch, in, out_dim);
                           if (bias.valid()) {
                             if (auto gb = t.grad(bias); !gb.empty()) {
                               for (std::size_t r = 0; r < batch; ++r)
                                 for (std::size_t j = 0; j < out_dim; ++j)
                                   gb[j] += g[r * out_dim + j];
                             }
                           }
                         });
}

Var add(Var a, Var b) {
  require_same_shape("add", a, b);
  Tensor out = a.value().detached();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, Var self) {
    const auto g = t.grad(self);
    for (Var v : {a, b}) {
      auto gv = t.grad(v);
      for (std::size_t i = 0; i < gv.size(); ++i) gv[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a, b);
  Tensor out = a.value().detached();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, Var self) {
    const auto g = t.grad(self);
    auto ga = t.grad(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
    auto gb = t.grad(b);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g[i];
  });
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a, b);
  Tensor out = a.value().detached();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, Var self) {
    const auto g = t.grad(self);
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    auto ga = t.grad(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * bv[i];
    auto gb = t.grad(b);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * av[i];
  });
}

Var scale(Var a, double factor) {
  Tensor out = a.value().detached();
  for (double& v : out.values()) v *= factor;
  return a.tape().record(std::move(out), {a}, [a, factor](Tape& t, Var self) {
    const auto g = t.grad(self);
    auto ga = t.grad(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * factor;
  });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  return a.tape().record(Tensor::scalar(total), {a}, [a](Tape& t, Var self) {
    const double g = t.grad(self)[0];
    for (double& v : t.grad(a)) v += g;
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t batch = rows_of(parts[0]);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (Var p : parts) {
    if (rows_of(p) != batch) {
      throw ShapeError("concat_cols: row count mismatch " + shape_string(parts[0].shape()) +
                       " vs " + shape_string(p.shape()));
    }
    widths.push_back(cols_of(p));
    total += widths.back();
  }
  Tensor out({batch, total});
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& pv = parts[k].value();
    for (std::size_t r = 0; r < batch; ++r)
      std::copy(pv.data() + r * widths[k], pv.data() + (r + 1) * widths[k],
                out.data() + r * total + offset);
    offset += widths[k];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape().record(
      std::move(out), inputs, [inputs, widths, batch, total](Tape& t, Var self) {
        const auto g = t.grad(self);
        std::size_t offset = 0;
        for (std::size_t k = 0; k < inputs.size(); ++k) {
          auto gp = t.grad(inputs[k]);
          if (!gp.empty()) {
            for (std::size_t r = 0; r < batch; ++r)
              for (std::size_t c = 0; c < widths[k]; ++c)
                gp[r * widths[k] + c] += g[r * total + offset + c];
          }
          offset += widths[k];
        }
      });
}

Var column(Var x, std::size_t j) {
  const Tensor& xv = x.value();
  const std::size_t batch = xv.rows(), n = xv.cols();
  if (j >= n) {
    throw ShapeError("column: index " + std::to_string(j) + " out of range for " +
                     shape_string(xv.shape()));
  }
  Tensor out({batch, 1});
  for (std::size_t r = 0; r < batch; ++r) out[r] = xv[r * n + j];
  return x.tape().record(std::move(out), {x}, [x, j, batch, n](Tape& t, Var self) {
    const auto g = t.grad(self);
    auto gx = t.grad(x);
    for (std::size_t r = 0; r < batch; ++r) gx[r * n + j] += g[r];
  });
}

Var scale_rows(Var x, Var factors) {
  const Tensor& xv = x.value();
  const Tensor& fv = factors.value();
  const std::size_t batch = xv.rows(), n = xv.cols();
  if (fv.size() != batch) {
    throw ShapeError("scale_rows: factors " + shape_string(fv.shape()) + " do not match rows of " +
                     shape_string(xv.shape()));
  }
  Tensor out(xv.shape());
  for (std::size_t r = 0; r < batch; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] = xv[r * n + c] * fv[r];
  return x.tape().record(std::move(out), {x, factors}, [x, factors, batch, n](Tape& t, Var self) {
    const auto g = t.grad(self);
    const Tensor& xv = t.value(x);
    const Tensor& fv = t.value(factors);
    if (auto gx = t.grad(x); !gx.empty()) {
      for (std::size_t r = 0; r < batch; ++r)
        for (std::size_t c = 0; c < n; ++c) gx[r * n + c] += g[r * n + c] * fv[r];
    }
    if (auto gf = t.grad(factors); !gf.empty()) {
      for (std::size_t r = 0; r < batch; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < n; ++c) acc += g[r * n + c] * xv[r * n + c];
        gf[r] += acc;
      }
    }
  });
}

Var weighted_sum(std::span<const Var> items, Var weights) {
  if (items.empty()) throw ShapeError("weighted_sum: no items");
  if (cols_of(weights) != items.size()) {
    throw ShapeError("weighted_sum: weights " + shape_string(weights.shape()) + " for " +
                     std::to_string(items.size()) + " items");
  }
  Var acc = scale_rows(items[0], column(weights, 0));
  for (std::size_t j = 1; j < items.size(); ++j)
    acc = add(acc, scale_rows(items[j], column(weights, j)));
  return acc;
}

Var layer_norm(Var x, Var gain, Var bias, std::size_t group, double eps) {
  const Tensor& xv = x.value();
  const std::size_t batch = xv.rows(), n = xv.cols();
  if (group < 2) throw ShapeError("layer_norm: normalized length must be >= 2");
  if (n % group != 0) {
    throw ShapeError("layer_norm: row length " + std::to_string(n) + " not a multiple of group " +
                     std::to_string(group));
  }
  if (gain.value().size() != n || bias.value().size() != n) {
    throw ShapeError("layer_norm: affine params " + shape_string(gain.shape()) + "/" +
                     shape_string(bias.shape()) + " do not match input " +
                     shape_string(xv.shape()));
  }
  const std::size_t groups = batch * (n / group);
  // normalized values and inverse std per group are needed again in backward
  auto xhat = std::make_shared<std::vector<double>>(xv.size());
  auto inv_std = std::make_shared<std::vector<double>>(groups);
  Tensor out(xv.shape());
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  for (std::size_t q = 0; q < groups; ++q) {
    const double* row = xv.data() + q * group;
    double mean = 0.0;
    for (std::size_t i = 0; i < group; ++i) mean += row[i];
    mean /= static_cast<double>(group);
    double var = 0.0;
    for (std::size_t i = 0; i < group; ++i) var += (row[i] - mean) * (row[i] - mean);
    var /= static_cast<double>(group);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[q] = is;
    for (std::size_t i = 0; i < group; ++i) {
      const std::size_t idx = q * group + i;
      const std::size_t col = idx % n;
      const double h = (row[i] - mean) * is;
      (*xhat)[idx] = h;
      out[idx] = h * gv[col] + bv[col];
    }
  }
  return x.tape().record(
      std::move(out), {x, gain, bias},
      [x, gain, bias, group, groups, n, xhat, inv_std](Tape& t, Var self) {
        const auto g = t.grad(self);
        const Tensor& gv = t.value(gain);
        auto gx = t.grad(x);
        auto ggain = t.grad(gain);
        auto gbias = t.grad(bias);
        std::vector<double> dh(group);
        for (std::size_t q = 0; q < groups; ++q) {
          double sum_dh = 0.0, sum_dh_h = 0.0;
          for (std::size_t i = 0; i < group; ++i) {
            const std::size_t idx = q * group + i;
            const std::size_t col = idx % n;
            if (!ggain.empty()) ggain[col] += g[idx] * (*xhat)[idx];
            if (!gbias.empty()) gbias[col] += g[idx];
            dh[i] = g[idx] * gv[col];
            sum_dh += dh[i];
            sum_dh_h += dh[i] * (*xhat)[idx];
          }
          if (gx.empty()) continue;
          const double inv_n = 1.0 / static_cast<double>(group);
          for (std::size_t i = 0; i < group; ++i) {
            const std::size_t idx = q * group + i;
            gx[idx] += (*inv_std)[q] * (dh[i] - inv_n * sum_dh - (*xhat)[idx] * inv_n * sum_dh_h);
          }
        }
      });
}

Var softmax_rows(Var x) {
  const Tensor& xv = x.value();
  const std::size_t batch = xv.rows(), n = xv.cols();
  Tensor out(xv.shape());
  for (std::size_t r = 0; r < batch; ++r) {
    const double* row = xv.data() + r * n;
    double* o = out.data() + r * n;
    const double mx = *std::max_element(row, row + n);
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      o[c] = std::exp(row[c] - mx);
      total += o[c];
    }
    for (std::size_t c = 0; c < n; ++c) o[c] /= total;
  }
  return x.tape().record(std::move(out), {x}, [x, batch, n](Tape& t, Var self) {
    const auto g = t.grad(self);
    const Tensor& y = t.value(self);
    auto gx = t.grad(x);
    for (std::size_t r = 0; r < batch; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += g[r * n + c] * y[r * n + c];
      for (std::size_t c = 0; c < n; ++c) gx[r * n + c] += y[r * n + c] * (g[r * n + c] - dot);
    }
  });
}

Var sigmoid(Var x) {
  return unary(
      x, [](double v) { return sigmoid(v); }, [](double, double y) { return y * (1.0 - y); });
}

Var softplus(Var x) {
  return unary(
      x, [](double v) { return softplus(v); }, [](double v, double) { return sigmoid(v); });
}

Var relu(Var x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var exp(Var x) {
  return unary(
      x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(Var x) {
  for (double v : x.value().values()) {
    if (!(v > 0.0)) throw std::domain_error("log: non-positive input " + std::to_string(v));
  }
  return unary(
      x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var gather_rows(Var table, std::span<const std::int64_t> indices) {
  const Tensor& tv = table.value();
  const std::size_t vocab = tv.rows(), n = tv.cols();
  Tensor out({indices.size(), n});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::int64_t idx = indices[r];
    if (idx < -1 || idx >= static_cast<std::int64_t>(vocab)) {
      throw std::out_of_range("gather_rows: index " + std::to_string(idx) + " outside table " +
                              shape_string(tv.shape()));
    }
    if (idx >= 0) std::copy(tv.data() + idx * n, tv.data() + (idx + 1) * n, out.data() + r * n);
  }
  std::vector<std::int64_t> ids(indices.begin(), indices.end());
  return table.tape().record(std::move(out), {table}, [table, ids = std::move(ids), n](Tape& t,
                                                                                       Var self) {
    const auto g = t.grad(self);
    auto gt = t.grad(table);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      if (ids[r] < 0) continue;
      double* dst = gt.data() + ids[r] * n;
      for (std::size_t c = 0; c < n; ++c) dst[c] += g[r * n + c];
    }
  });
}

}  // namespace ufin
