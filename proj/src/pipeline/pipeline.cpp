#include "ufin/pipeline/pipeline.hpp"

#include <fstream>

#include <fmt/format.h>

#include "ufin/error.hpp"
#include "ufin/numeric/checkpoint.hpp"

namespace ufin {

PromptTemplate make_template(const PromptConfig& config) {
  PromptTemplate t;
  t.variant = config.variant;
  t.drop_fields = config.drop_fields;
  t.phrases = PhraseTable::preset(config.preset);
  return t;
}

std::vector<std::pair<std::uint64_t, std::string>> render_all(std::span<const DomainDataset> domains,
                                                              const PromptTemplate& tmpl) {
  std::vector<std::pair<std::uint64_t, std::string>> out;
  for (const DomainDataset& d : domains) {
    validate_template(tmpl, d.schema);
    for (const auto* part : {&d.splits.train, &d.splits.valid, &d.splits.test}) {
      for (const InstanceRecord& r : *part) out.emplace_back(r.row_id, render(r, d.schema, tmpl, d.item_noun));
    }
  }
  return out;
}

void write_prompt_dump(const std::filesystem::path& path,
                       std::span<const std::pair<std::uint64_t, std::string>> prompts) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "row_id\tprompt\n";
  for (const auto& [id, text] : prompts) out << id << '\t' << text << '\n';
}

EmbeddingCache hash_encode(std::span<const DomainDataset> domains, const PromptTemplate& tmpl,
                           const HashEncoder& encoder) {
  EmbeddingCache cache(encoder.dim());
  for (const auto& [id, text] : render_all(domains, tmpl)) cache.insert(id, encoder.encode(text));
  return cache;
}

void check_cache_covers(const EmbeddingCache& cache, std::span<const DomainDataset> domains) {
  for (const DomainDataset& d : domains) {
    for (const auto* part : {&d.splits.train, &d.splits.valid, &d.splits.test}) {
      for (const InstanceRecord& r : *part) {
        if (!cache.contains(r.row_id)) {
          throw DataError("embedding cache: no entry for row_id " + std::to_string(r.row_id) +
                          " (domain " + std::to_string(d.domain_id) + ")");
        }
      }
    }
  }
}

EmbeddingCache resolve_cache(const RunConfig& config, std::span<const DomainDataset> domains) {
  if (config.encoder.backend == "hash") {
    return hash_encode(domains, make_template(config.prompt),
                       HashEncoder(config.model.d_v, config.encoder.hash_seed));
  }
  EmbeddingCache cache = EmbeddingCache::read(config.paths.cache);
  if (cache.dim() != config.model.d_v) {
    throw DataError(config.paths.cache.string() + ": d_V=" + std::to_string(cache.dim()) +
                    " but model.d_v=" + std::to_string(config.model.d_v));
  }
  check_cache_covers(cache, domains);
  return cache;
}

std::filesystem::path teacher_path(const std::filesystem::path& dir, int domain_id) {
  return dir / ("teacher_" + std::to_string(domain_id) + ".ufnp");
}

std::vector<TeacherModel> pretrain_teachers(const RunConfig& config,
                                            std::span<const DomainDataset> domains,
                                            std::vector<History>* histories, const Logger& log) {
  std::vector<TeacherModel> teachers;
  for (const DomainDataset& d : domains) {
    const std::string stage = "teacher/" + std::to_string(d.domain_id);
    TeacherModel t = TeacherModel::build(d, config.teacher.d, config.teacher.n_o,
                                         config.stage_seed(stage + "/init"));
    TrainConfig tc = config.teacher.train;
    tc.seed = config.stage_seed(stage + "/train");
    EpochHook hook;
    if (log) {
      hook = [&](const EpochRecord& e) {
        log(fmt::format("teacher {} epoch {:>3}  loss {:.4f}  valid auc {:.4f}", d.domain_id, e.epoch,
                        e.train_loss, e.valid_auc));
      };
    }
    History h = pretrain_teacher(t, d, tc, hook);
    if (histories) histories->push_back(std::move(h));
    teachers.push_back(std::move(t));
  }
  return teachers;
}

std::vector<TeacherModel> load_teachers(const std::filesystem::path& dir,
                                        std::span<const DomainDataset> domains) {
  std::vector<TeacherModel> out;
  for (const DomainDataset& d : domains) {
    const auto path = teacher_path(dir, d.domain_id);
    if (!std::filesystem::exists(path)) {
      throw DataError("missing teacher checkpoint " + path.string() +
                      " (run pretrain-teachers first)");
    }
    out.push_back(TeacherModel::load(path));
    if (out.back().domain() != d.domain_id) {
      throw DataError(path.string() + " holds the teacher of domain " +
                      std::to_string(out.back().domain()));
    }
  }
  return out;
}

TrainResult train_model(const RunConfig& config, std::span<const DomainDataset> domains,
                        const EmbeddingCache& cache, std::span<TeacherModel> teachers,
                        const std::filesystem::path& init, const Logger& log) {
  UfinModel model = UfinModel::build(config.model, domains, config.stage_seed("model/init"));
  if (!init.empty()) {
    // Warm start: copy every stored tensor whose name and shape match.
    const NamedTensors stored = read_checkpoint(init);
    for (const ParamRef& p : model.parameters()) {
      for (const auto& [name, t] : stored) {
        if (name == p.name && t.shape() == p.tensor->shape()) {
          std::copy(t.values().begin(), t.values().end(), p.tensor->values().begin());
        }
      }
    }
  }
  Guidance guidance;
  if (config.distill) guidance = teacher_guidance(teachers, domains);
  TrainConfig tc = config.train;
  tc.seed = config.stage_seed("train");
  EpochHook hook;
  if (log) {
    hook = [&](const EpochRecord& e) {
      log(fmt::format("epoch {:>3}  loss {:.4f}  valid auc {:.4f}", e.epoch, e.train_loss, e.valid_auc));
    };
  }
  History history =
      train_ufin(model, domains, cache, config.distill ? &guidance : nullptr, config.mode, tc, hook);
  return {std::move(model), std::move(history)};
}

EvalReport evaluate_model(UfinModel& model, std::span<const DomainDataset> domains,
                          const EmbeddingCache& cache, SplitName split, HeadMode mode,
                          EvalMode eval_mode) {
  if (eval_mode == EvalMode::zero_shot && mode == HeadMode::text_features) {
    throw ConfigError("zero-shot evaluation requires mode t: the adaptor has no weights for unseen domains");
  }
  std::vector<const InstanceRecord*> rows;
  std::map<int, std::string> names;
  for (const DomainDataset& d : domains) {
    for (const InstanceRecord& r : split_of(d, split)) rows.push_back(&r);
    names[d.domain_id] = d.name;
  }
  const Scores s = score(model, rows, schemas_of(domains), cache, mode);
  EvalReport report = build_report(s.labels, s.prob, s.domains, names);
  report.mode = eval_mode;
  report.model_mode = std::string(to_string(mode));
  report.split = split == SplitName::train ? "train" : split == SplitName::valid ? "valid" : "test";
  report.expert_selection = s.selection_counts;
  return report;
}

void write_report(const std::filesystem::path& stem, const EvalReport& report) {
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  {
    std::ofstream out(stem.string() + ".json", std::ios::trunc);
    if (!out) throw DataError("cannot write " + stem.string() + ".json");
    out << report.to_json().dump(2) << '\n';
  }
  std::ofstream out(stem.string() + ".txt", std::ios::trunc);
  if (!out) throw DataError("cannot write " + stem.string() + ".txt");
  out << report.to_text();
}

}  // namespace ufin
