#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ufin/data/dataset.hpp"

namespace ufin {

enum class LabelMode { bernoulli, threshold };

/// Knobs of the synthetic multi-domain click generator.
///
/// Users are shared by all domains and carry a zero-sum topic preference made
/// of an occupation component (visible in text) and an individual component
/// (only reachable through user_id). Items carry a topic mixture and a
/// description drawn from a topic lexicon shared by all domains; item ids and
/// titles are disjoint between domains. The click logit is
///
///   scale * ( w2 * <u, m> + w3 * sqrt(T) * sum_t u_t m_t c_t ) + item_bias
///
/// with m the centred item mixture and c the context (time slot) latent.
struct SynthConfig {
  int domains = 3;
  int users = 2000;
  int items = 1000;          // per domain
  int interactions = 50000;  // per domain
  int topics = 6;
  int words_per_topic = 6;
  int description_words = 8;
  double occupation_weight = 1.0;
  double individual_weight = 0.8;
  double dominant_topic_share = 0.7;
  double order2_weight = 1.0;
  double order3_weight = 0.5;
  double item_bias_std = 0.3;
  double scale = 4.0;
  // Zipf exponents of the item (per domain) and user sampling weights.
  double item_popularity = 1.2;
  double user_popularity = 1.2;
  // Mixes p* toward 0.5: p* = (1 - noise) * sigmoid(logit) + noise / 2.
  double noise = 0.0;
  LabelMode label_mode = LabelMode::bernoulli;

  void validate() const;
};

struct SynthResult {
  std::vector<DomainDataset> domains;
  // True click probability per row_id.
  std::unordered_map<std::uint64_t, double> p_star;
};

SynthResult synth_generate(const SynthConfig& config, std::uint64_t seed);

// Row ids are unique across domains: domain_id * kRowIdStride + index.
inline constexpr std::uint64_t kRowIdStride = 10'000'000;

Schema synthetic_schema();

// Expected AUC of scoring by p* when labels are drawn as Bernoulli(p*): the
// ratio of expected concordant pair mass to expected pos/neg pair mass.
double bayes_auc_ceiling(std::span<const double> p_star);

void write_truth(const std::filesystem::path& path, const SynthResult& result);
std::unordered_map<std::uint64_t, double> read_truth(const std::filesystem::path& path);

}  // namespace ufin
