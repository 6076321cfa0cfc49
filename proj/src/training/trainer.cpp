#include "ufin/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "ufin/error.hpp"
#include "ufin/numeric/adam.hpp"
#include "ufin/numeric/random.hpp"
#include "ufin/training/losses.hpp"

namespace ufin {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("train: lr must be positive");
  if (weight_decay < 0.0) throw ConfigError("train: weight_decay must be non-negative");
  if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (epochs <= 0) throw ConfigError("train: epochs must be positive");
  if (patience <= 0) throw ConfigError("train: patience must be positive");
}

std::string History::csv() const {
  std::string out = "epoch,train_loss,valid_auc";
  if (!epochs.empty()) {
    for (const DomainMetrics& m : epochs.front().valid)
      out += fmt::format(",auc_{0},logloss_{0}", m.domain);
  }
  out += '\n';
  for (const EpochRecord& e : epochs) {
    out += fmt::format("{},{:.17g},{:.17g}", e.epoch, e.train_loss, e.valid_auc);
    for (const DomainMetrics& m : e.valid) out += fmt::format(",{:.17g},{:.17g}", m.auc, m.logloss);
    out += '\n';
  }
  return out;
}

void History::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << csv();
}

History fit(std::size_t n_train, std::span<const ParamRef> params, const TrainConfig& config,
            const LossFn& loss_fn, const ValidateFn& validate, const EpochHook& hook) {
  config.validate();
  if (n_train == 0) throw DataError("train: empty training set");
  Adam adam({config.lr, 0.9, 0.999, 1e-8, config.weight_decay});
  Rng rng(derive_seed(config.seed, "fit/shuffle"));
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);
  std::vector<Tensor> best;
  History history;
  history.best_auc = -1.0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n_train; start += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, n_train - start);
      const std::span<const std::size_t> idx(order.data() + start, n);
      zero_grads(params);
      Tape tape;
      Var loss;
      try {
        loss = loss_fn(tape, idx);
      } catch (const NumericError& e) {
        throw NumericError(fmt::format("epoch {}, batch {} (positions {}..{}): {}", epoch,
                                       batches + 1, start, start + n - 1, e.what()));
      }
      const double value = loss.value()[0];
      if (!std::isfinite(value)) {
        throw NumericError(fmt::format("non-finite loss {} at epoch {}, batch {} (positions {}..{})",
                                       value, epoch, batches + 1, start, start + n - 1));
      }
      tape.backward(loss);
      adam.step(params);
      loss_sum += value;
      ++batches;
    }
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(batches);
    const EvalReport report = validate();
    record.valid_auc = report.overall.auc;
    record.valid = report.domains;
    history.epochs.push_back(record);
    if (hook) hook(record);
    if (record.valid_auc > history.best_auc) {
      history.best_auc = record.valid_auc;
      history.best_epoch = epoch;
      best.clear();
      for (const ParamRef& p : params) best.push_back(p.tensor->detached());
    } else if (epoch - history.best_epoch >= config.patience) {
      break;
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::copy(best[i].values().begin(), best[i].values().end(), params[i].tensor->values().begin());
  }
  zero_grads(params);
  return history;
}

History train_ufin(UfinModel& model, std::span<const DomainDataset> domains,
                   const EmbeddingCache& cache, const Guidance* guidance, HeadMode mode,
                   const TrainConfig& config, const EpochHook& hook) {
  const SchemaMap schemas = schemas_of(domains);
  std::vector<const InstanceRecord*> train, valid;
  std::map<int, std::string> names;
  for (const DomainDataset& d : domains) {
    if (mode == HeadMode::text_features && model.adaptor.domain_row(d.domain_id) < 0) {
      throw ConfigError("train: adaptor has no weights for domain " + std::to_string(d.domain_id));
    }
    for (const InstanceRecord& r : d.splits.train) train.push_back(&r);
    for (const InstanceRecord& r : d.splits.valid) valid.push_back(&r);
    names[d.domain_id] = d.name;
  }
  if (valid.empty()) throw DataError("train: empty validation split");
  std::vector<double> targets;
  if (guidance) {
    targets.reserve(train.size());
    for (const InstanceRecord* r : train) {
      auto it = guidance->find(r->row_id);
      if (it == guidance->end()) {
        throw DataError("train: no teacher logit for row " + std::to_string(r->row_id) +
                        " (domain " + std::to_string(r->domain_id) + ")");
      }
      targets.push_back(it->second);
    }
  }
  auto params = model.parameters(mode == HeadMode::text_features);
  std::vector<const InstanceRecord*> rows;
  std::vector<double> teacher;
  auto loss = [&](Tape& tape, std::span<const std::size_t> idx) {
    rows.clear();
    teacher.clear();
    for (std::size_t i : idx) {
      rows.push_back(train[i]);
      if (guidance) teacher.push_back(targets[i]);
    }
    const Batch batch = model.make_batch(rows, schemas, cache);
    const auto f = model.forward(tape, batch, mode);
    Var ctr = ctr_loss(sigmoid(f.logit), batch.labels);
    return guidance ? total_loss(kd_loss(f.zeta, teacher), ctr) : ctr;
  };
  auto validate = [&] {
    const Scores s = score(model, valid, schemas, cache, mode);
    return build_report(s.labels, s.prob, s.domains, names);
  };
  return fit(train.size(), params, config, loss, validate, hook);
}

std::vector<double> adaptor_predictions(FeatureAdaptor& adaptor,
                                        std::span<const InstanceRecord* const> records,
                                        const SchemaMap& schemas) {
  std::vector<double> out;
  out.reserve(records.size());
  constexpr std::size_t kChunk = 4096;
  for (std::size_t start = 0; start < records.size(); start += kChunk) {
    const std::size_t n = std::min(kChunk, records.size() - start);
    const auto in = adaptor.inputs(records.subspan(start, n), schemas);
    Tape tape;
    tape.set_grad_enabled(false);
    Var logit = adaptor.forward(tape, in.ids, in.rows);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sigmoid(logit.value()[i]));
  }
  return out;
}

History train_adaptor(FeatureAdaptor& adaptor, std::span<const DomainDataset> domains,
                      const TrainConfig& config, const EpochHook& hook) {
  const SchemaMap schemas = schemas_of(domains);
  std::vector<const InstanceRecord*> train, valid;
  std::map<int, std::string> names;
  for (const DomainDataset& d : domains) {
    for (const InstanceRecord& r : d.splits.train) train.push_back(&r);
    for (const InstanceRecord& r : d.splits.valid) valid.push_back(&r);
    names[d.domain_id] = d.name;
  }
  std::vector<ParamRef> params;
  adaptor.append_parameters(params, "adaptor/");
  std::vector<const InstanceRecord*> rows;
  std::vector<int> labels;
  auto loss = [&](Tape& tape, std::span<const std::size_t> idx) {
    rows.clear();
    labels.clear();
    for (std::size_t i : idx) {
      rows.push_back(train[i]);
      labels.push_back(train[i]->label);
    }
    const auto in = adaptor.inputs(rows, schemas);
    return ctr_loss(sigmoid(adaptor.forward(tape, in.ids, in.rows)), labels);
  };
  auto validate = [&] {
    std::vector<int> y, dom;
    for (const InstanceRecord* r : valid) {
      y.push_back(r->label);
      dom.push_back(r->domain_id);
    }
    return build_report(y, adaptor_predictions(adaptor, valid, schemas), dom, names);
  };
  return fit(train.size(), params, config, loss, validate, hook);
}

}  // namespace ufin
