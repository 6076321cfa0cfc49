#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace ufin {

inline constexpr double kProbClamp = 1e-7;

// Mann-Whitney AUC via rank sums with average ranks for ties, so a tied
// (positive, negative) pair earns 1/2. Throws DataError when either class is
// missing or a label is not 0/1.
double auc(std::span<const int> labels, std::span<const double> scores);

// Mean binary cross-entropy with predictions clamped to [1e-7, 1 - 1e-7].
double logloss(std::span<const int> labels, std::span<const double> preds);

enum class EvalMode { in_domain, zero_shot, cross_platform };
EvalMode parse_eval_mode(std::string_view s);
std::string_view to_string(EvalMode mode);

struct DomainMetrics {
  int domain = -1;  // -1 for the mixed total
  std::string name;
  std::size_t count = 0;
  std::size_t positives = 0;
  double auc = 0.0;
  double logloss = 0.0;
};

struct EvalReport {
  EvalMode mode = EvalMode::in_domain;
  std::string model_mode;  // "t" or "t+f"
  std::string split;
  std::vector<DomainMetrics> domains;
  DomainMetrics overall;
  // Per domain, how often each interaction expert was among the TopK.
  std::map<int, std::vector<std::size_t>> expert_selection;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

// Per-domain and mixed metrics. `names` supplies display names by domain id.
EvalReport build_report(std::span<const int> labels, std::span<const double> preds,
                        std::span<const int> domains, const std::map<int, std::string>& names = {});

}  // namespace ufin
