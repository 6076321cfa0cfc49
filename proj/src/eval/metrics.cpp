#include "ufin/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "ufin/error.hpp"

namespace ufin {

namespace {

void check_labels(std::span<const int> labels, std::size_t n, const char* what) {
  if (labels.size() != n) {
    throw ShapeError(std::string(what) + ": " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " scores");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError(std::string(what) + ": label " + std::to_string(y) + " not in {0,1}");
  }
}

}  // namespace

double auc(std::span<const int> labels, std::span<const double> scores) {
  check_labels(labels, scores.size(), "auc");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Ranks are 1-based; ties share the mean rank, a multiple of 1/2.
  double rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum += mean_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw DataError("auc: undefined with a single class (" + std::to_string(positives) +
                    " positives, " + std::to_string(negatives) + " negatives)");
  }
  const double p = static_cast<double>(positives);
  const double u = rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

double logloss(std::span<const int> labels, std::span<const double> preds) {
  check_labels(labels, preds.size(), "logloss");
  if (preds.empty()) throw DataError("logloss: no predictions");
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double p = std::clamp(preds[i], kProbClamp, 1.0 - kProbClamp);
    total -= labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return total / static_cast<double>(preds.size());
}

EvalMode parse_eval_mode(std::string_view s) {
  if (s == "in-domain") return EvalMode::in_domain;
  if (s == "zero-shot") return EvalMode::zero_shot;
  if (s == "cross-platform") return EvalMode::cross_platform;
  throw ConfigError("unknown evaluation mode '" + std::string(s) +
                    "' (expected in-domain|zero-shot|cross-platform)");
}

std::string_view to_string(EvalMode mode) {
  switch (mode) {
    case EvalMode::in_domain: return "in-domain";
    case EvalMode::zero_shot: return "zero-shot";
    case EvalMode::cross_platform: return "cross-platform";
  }
  return "?";
}

EvalReport build_report(std::span<const int> labels, std::span<const double> preds,
                        std::span<const int> domains, const std::map<int, std::string>& names) {
  if (domains.size() != preds.size()) throw ShapeError("build_report: domain ids do not match predictions");
  EvalReport report;
  std::map<int, std::pair<std::vector<int>, std::vector<double>>> groups;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    groups[domains[i]].first.push_back(labels[i]);
    groups[domains[i]].second.push_back(preds[i]);
  }
  auto metrics = [](std::span<const int> y, std::span<const double> p) {
    DomainMetrics m;
    m.count = y.size();
    m.positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    m.auc = auc(y, p);
    m.logloss = logloss(y, p);
    return m;
  };
  for (const auto& [id, group] : groups) {
    DomainMetrics m = metrics(group.first, group.second);
    m.domain = id;
    auto it = names.find(id);
    m.name = it != names.end() ? it->second : "domain_" + std::to_string(id);
    report.domains.push_back(std::move(m));
  }
  report.overall = metrics(labels, preds);
  report.overall.name = "mixed";
  return report;
}

namespace {

nlohmann::json metrics_json(const DomainMetrics& m) {
  nlohmann::json j{{"name", m.name},
                   {"count", m.count},
                   {"positives", m.positives},
                   {"auc", m.auc},
                   {"logloss", m.logloss}};
  if (m.domain >= 0) j["domain_id"] = m.domain;
  return j;
}

}  // namespace

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["mode"] = std::string(to_string(mode));
  j["model_mode"] = model_mode;
  j["split"] = split;
  j["domains"] = nlohmann::json::array();
  for (const DomainMetrics& m : domains) j["domains"].push_back(metrics_json(m));
  j["overall"] = metrics_json(overall);
  if (!expert_selection.empty()) {
    nlohmann::json sel = nlohmann::json::object();
    for (const auto& [id, counts] : expert_selection) sel[std::to_string(id)] = counts;
    j["expert_selection"] = sel;
  }
  return j;
}

std::string EvalReport::to_text() const {
  std::string out = fmt::format("mode: {}  model: {}  split: {}\n", to_string(mode),
                                model_mode.empty() ? "-" : model_mode, split.empty() ? "-" : split);
  out += fmt::format("{:<4} {:<12} {:>8} {:>8} {:>8} {:>8}\n", "id", "domain", "count", "pos",
                     "auc", "logloss");
  auto line = [&](const DomainMetrics& m) {
    out += fmt::format("{:<4} {:<12} {:>8} {:>8} {:>8.4f} {:>8.4f}\n",
                       m.domain >= 0 ? std::to_string(m.domain) : "-", m.name, m.count, m.positives,
                       m.auc, m.logloss);
  };
  for (const DomainMetrics& m : domains) line(m);
  line(overall);
  if (!expert_selection.empty()) {
    out += "expert selection (rows per expert):\n";
    for (const auto& [id, counts] : expert_selection) {
      out += fmt::format("  domain {}: {}\n", id, fmt::join(counts, " "));
    }
  }
  return out;
}

}  // namespace ufin
