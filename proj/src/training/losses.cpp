#include "ufin/training/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ufin/error.hpp"
#include "ufin/eval/metrics.hpp"

namespace ufin {

Var kd_loss(Var student, std::span<const double> teacher) {
  const Tensor& sv = student.value();
  if (sv.size() != teacher.size()) {
    throw ShapeError("kd_loss: " + std::to_string(teacher.size()) + " teacher logits for student " +
                     shape_string(sv.shape()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < teacher.size(); ++i) total += (teacher[i] - sv[i]) * (teacher[i] - sv[i]);
  std::vector<double> target(teacher.begin(), teacher.end());
  return student.tape().record(Tensor::scalar(total), {student},
                               [student, target = std::move(target)](Tape& t, Var self) {
                                 const double g = t.grad(self)[0];
                                 const Tensor& sv = t.value(student);
                                 auto gs = t.grad(student);
                                 for (std::size_t i = 0; i < gs.size(); ++i)
                                   gs[i] += g * 2.0 * (sv[i] - target[i]);
                               });
}

Var ctr_loss(Var preds, std::span<const int> labels) {
  const Tensor& pv = preds.value();
  if (pv.size() != labels.size()) {
    throw ShapeError("ctr_loss: " + std::to_string(labels.size()) + " labels for predictions " +
                     shape_string(pv.shape()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw DataError("ctr_loss: label " + std::to_string(labels[i]) + " not in {0,1}");
    }
    const double p = std::clamp(pv[i], kProbClamp, 1.0 - kProbClamp);
    total -= labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  std::vector<int> y(labels.begin(), labels.end());
  return preds.tape().record(Tensor::scalar(total), {preds},
                             [preds, y = std::move(y)](Tape& t, Var self) {
                               const double g = t.grad(self)[0];
                               const Tensor& pv = t.value(preds);
                               auto gp = t.grad(preds);
                               for (std::size_t i = 0; i < gp.size(); ++i) {
                                 const double p = pv[i];
                                 if (p < kProbClamp || p > 1.0 - kProbClamp) continue;
                                 gp[i] += g * (y[i] == 1 ? -1.0 / p : 1.0 / (1.0 - p));
                               }
                             });
}

}  // namespace ufin
