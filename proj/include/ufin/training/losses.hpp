#pragma once

#include <span>

#include "ufin/numeric/ops.hpp"

namespace ufin {

// sum_i (teacher_i - student_i)^2. Teacher logits are constants.
Var kd_loss(Var student, std::span<const double> teacher);

// -sum_i [y log p + (1 - y) log(1 - p)] with p clamped to [1e-7, 1 - 1e-7];
// clamped entries pass no gradient. Throws DataError for labels outside {0,1}.
Var ctr_loss(Var preds, std::span<const int> labels);

inline Var total_loss(Var kd, Var ctr) { return add(kd, ctr); }

}  // namespace ufin
