#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ufin/eval/metrics.hpp"
#include "ufin/interaction/model.hpp"

namespace ufin {

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 1e-5;
  std::size_t batch_size = 256;
  int epochs = 50;
  int patience = 5;
  std::uint64_t seed = 42;

  void validate() const;  // ConfigError on non-positive values
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean per-batch loss
  double valid_auc = 0.0;   // mixed validation AUC
  std::vector<DomainMetrics> valid;
};

struct History {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_auc = 0.0;

  // epoch, train_loss, valid_auc, then auc_<id> and logloss_<id> per domain.
  std::string csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

using LossFn = std::function<Var(Tape&, std::span<const std::size_t>)>;
using ValidateFn = std::function<EvalReport()>;
using EpochHook = std::function<void(const EpochRecord&)>;

// Mini-batch Adam over a shuffled index range with early stopping on the
// validation AUC. The parameters of the best epoch are restored on return.
// A non-finite loss raises NumericError with the epoch and batch position.
History fit(std::size_t n_train, std::span<const ParamRef> params, const TrainConfig& config,
            const LossFn& loss, const ValidateFn& validate, const EpochHook& hook = {});

using Guidance = std::unordered_map<std::uint64_t, double>;

// Trains on the mixed train splits of `domains`. With guidance, the loss is
// kd_loss(zeta) + ctr_loss; without it only ctr_loss. In text mode the
// adaptor is neither used nor updated.
History train_ufin(UfinModel& model, std::span<const DomainDataset> domains,
                   const EmbeddingCache& cache, const Guidance* guidance, HeadMode mode,
                   const TrainConfig& config, const EpochHook& hook = {});

// Logistic regression baseline: the adaptor alone, trained with ctr_loss.
History train_adaptor(FeatureAdaptor& adaptor, std::span<const DomainDataset> domains,
                      const TrainConfig& config, const EpochHook& hook = {});
std::vector<double> adaptor_predictions(FeatureAdaptor& adaptor,
                                        std::span<const InstanceRecord* const> records,
                                        const SchemaMap& schemas);

}  // namespace ufin
