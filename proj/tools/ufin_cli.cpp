#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "ufin/data/synth.hpp"
#include "ufin/data/tsv.hpp"
#include "ufin/error.hpp"
#include "ufin/pipeline/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ufin;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::vector<int> domains;
  bool overwrite = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_domains = true) {
  cmd->add_option("--config", c.config, "key=value config file with [section] headers");
  cmd->add_option("--set", c.overrides, "override one setting, e.g. --set train.epochs=10 (repeatable)");
  cmd->add_option("--seed", c.seed, "root seed (overrides the config)");
  cmd->add_flag("--overwrite", c.overwrite, "replace existing outputs");
  if (with_domains) cmd->add_option("--domains", c.domains, "restrict to these domain ids")->delimiter(',');
}

RunConfig resolve(const Common& c) {
  RunConfig cfg;
  if (!c.config.empty()) cfg.load_file(c.config);
  for (const std::string& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

void guard(const fs::path& path, bool overwrite) {
  if (fs::exists(path) && !overwrite) {
    throw ConfigError(path.string() + " exists (pass --overwrite to replace it)");
  }
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void log_line(const std::string& s) { std::cerr << s << '\n'; }

std::vector<DomainDataset> load_data(const RunConfig& cfg, const std::vector<int>& only) {
  return read_domains(cfg.paths.data, only);
}

std::vector<int> ids_of(const std::vector<DomainDataset>& domains) {
  std::vector<int> out;
  for (const DomainDataset& d : domains) out.push_back(d.domain_id);
  return out;
}

std::string join_ids(const std::vector<int>& ids) {
  std::string s;
  for (int i : ids) s += (s.empty() ? "" : ",") + std::to_string(i);
  return s;
}

int cmd_synth(const Common& c, const std::string& out) {
  RunConfig cfg = resolve(c);
  const fs::path dir = out.empty() ? cfg.paths.data : fs::path(out);
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    guard(dir, c.overwrite);
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("domain_", 0) == 0 || name == "truth.tsv") fs::remove_all(entry.path());
    }
  }
  const SynthResult result = synth_generate(cfg.synth, cfg.stage_seed("synth"));
  fs::create_directories(dir);
  for (const DomainDataset& d : result.domains) write_domain(domain_dir(dir, d.domain_id), d);
  write_truth(dir / "truth.tsv", result);
  std::vector<double> p;
  for (const DomainDataset& d : result.domains)
    for (const InstanceRecord& r : d.splits.test) p.push_back(result.p_star.at(r.row_id));
  fmt::print("wrote {} domains to {}\n", result.domains.size(), dir.string());
  for (const DomainDataset& d : result.domains) {
    fmt::print("  domain {} ({}): train {} valid {} test {}\n", d.domain_id, d.name,
               d.splits.train.size(), d.splits.valid.size(), d.splits.test.size());
  }
  fmt::print("expected AUC ceiling on test rows: {:.4f}\n", bayes_auc_ceiling(p));
  return 0;
}

struct PrepareArgs {
  std::string input, schema, out, name, item_noun = "item";
  bool ratings = false, lenient = false;
};

int cmd_prepare(const Common& c, const PrepareArgs& a) {
  RunConfig cfg = resolve(c);
  const fs::path dir = a.out.empty() ? cfg.paths.data : fs::path(a.out);
  const Schema schema = read_schema(a.schema);
  TsvLoadResult loaded = load_tsv(a.input, schema, {a.lenient, a.ratings});
  for (const TsvIssue& issue : loaded.skipped) std::cerr << "skipped: " << issue.message << '\n';
  std::map<int, std::vector<InstanceRecord>> by_domain;
  for (InstanceRecord& r : loaded.records) by_domain[r.domain_id].push_back(std::move(r));
  if (by_domain.empty()) throw DataError(a.input + ": no usable records");
  for (auto& [id, records] : by_domain) {
    if (!c.domains.empty() && std::find(c.domains.begin(), c.domains.end(), id) == c.domains.end()) continue;
    const fs::path target = domain_dir(dir, id);
    guard(target, c.overwrite);
    DomainDataset d;
    d.domain_id = id;
    d.name = a.name.empty() ? "domain_" + std::to_string(id) : (by_domain.size() > 1 ? a.name + std::to_string(id) : a.name);
    d.item_noun = a.item_noun;
    d.schema = schema;
    const std::size_t n = records.size();
    d.splits = split(std::move(records), cfg.stage_seed("prepare/split/" + std::to_string(id)));
    write_domain(target, d);
    fmt::print("domain {}: {} rows -> train {} valid {} test {} in {}\n", id, n, d.splits.train.size(),
               d.splits.valid.size(), d.splits.test.size(), target.string());
  }
  return 0;
}

int cmd_render(const Common& c, const std::string& out) {
  RunConfig cfg = resolve(c);
  const fs::path path = out.empty() ? cfg.paths.reports / "prompts.tsv" : fs::path(out);
  guard(path, c.overwrite);
  const auto domains = load_data(cfg, c.domains);
  const auto prompts = render_all(domains, make_template(cfg.prompt));
  ensure_parent(path);
  write_prompt_dump(path, prompts);
  fmt::print("wrote {} prompts to {}\n", prompts.size(), path.string());
  if (!prompts.empty()) fmt::print("first: {}\n", prompts.front().second);
  return 0;
}

int cmd_encode(const Common& c, const std::string& out, const std::string& validate) {
  RunConfig cfg = resolve(c);
  const auto domains = load_data(cfg, c.domains);
  if (!validate.empty()) {
    const EmbeddingCache cache = EmbeddingCache::read(validate);
    if (cache.dim() != cfg.model.d_v) {
      throw DataError(validate + ": d_V=" + std::to_string(cache.dim()) + " but model.d_v=" +
                      std::to_string(cfg.model.d_v));
    }
    check_cache_covers(cache, domains);
    fmt::print("{}: {} entries, d_V={}, covers every row of domains {}\n", validate, cache.size(),
               cache.dim(), join_ids(ids_of(domains)));
    return 0;
  }
  const fs::path path = !out.empty() ? fs::path(out) : !cfg.paths.cache.empty() ? cfg.paths.cache
                                                                                : fs::path("cache.ufec");
  guard(path, c.overwrite);
  const EmbeddingCache cache = hash_encode(domains, make_template(cfg.prompt),
                                           HashEncoder(cfg.model.d_v, cfg.encoder.hash_seed));
  ensure_parent(path);
  cache.write(path);
  fmt::print("wrote {} embeddings (d_V={}) to {}\n", cache.size(), cache.dim(), path.string());
  return 0;
}

int cmd_pretrain(const Common& c) {
  RunConfig cfg = resolve(c);
  const auto domains = load_data(cfg, c.domains);
  for (const DomainDataset& d : domains) guard(teacher_path(cfg.paths.teachers, d.domain_id), c.overwrite);
  std::vector<History> histories;
  auto teachers = pretrain_teachers(cfg, domains, &histories, log_line);
  fs::create_directories(cfg.paths.teachers);
  for (std::size_t i = 0; i < teachers.size(); ++i) {
    const int id = domains[i].domain_id;
    teachers[i].save(teacher_path(cfg.paths.teachers, id));
    histories[i].write_csv(cfg.paths.teachers / ("teacher_" + std::to_string(id) + "_history.csv"));
    fmt::print("teacher {}: best epoch {}, valid AUC {:.4f} -> {}\n", id, histories[i].best_epoch,
               histories[i].best_auc, teacher_path(cfg.paths.teachers, id).string());
  }
  return 0;
}

int cmd_train(const Common& c, const std::string& init) {
  RunConfig cfg = resolve(c);
  guard(cfg.paths.model, c.overwrite);
  const auto domains = load_data(cfg, c.domains);
  std::vector<TeacherModel> teachers;
  if (cfg.distill) teachers = load_teachers(cfg.paths.teachers, domains);
  const EmbeddingCache cache = resolve_cache(cfg, domains);
  if (!init.empty() && !fs::exists(init)) throw DataError("missing initial checkpoint " + init);
  TrainResult result = train_model(cfg, domains, cache, teachers, init, log_line);
  ensure_parent(cfg.paths.model);
  result.model.save(cfg.paths.model);
  const fs::path history = cfg.paths.model.parent_path() / "history.csv";
  result.history.write_csv(history);
  fmt::print("trained on domains {}: best epoch {}, valid AUC {:.4f}\n", join_ids(ids_of(domains)),
             result.history.best_epoch, result.history.best_auc);
  fmt::print("model -> {}\nhistory -> {}\n", cfg.paths.model.string(), history.string());
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& split_name, const std::string& out, bool zero_shot,
                 bool cross_platform = false) {
  RunConfig cfg = resolve(c);
  const SplitName split = parse_split(split_name);
  UfinModel model = UfinModel::load(cfg.paths.model);
  const std::vector<int>& seen = model.domains();
  std::vector<int> wanted = c.domains;
  if (zero_shot) {
    if (wanted.empty()) {
      for (const auto& entry : fs::directory_iterator(cfg.paths.data)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_directory() && name.rfind("domain_", 0) == 0) {
          const int id = std::stoi(name.substr(7));
          if (std::find(seen.begin(), seen.end(), id) == seen.end()) wanted.push_back(id);
        }
      }
      std::sort(wanted.begin(), wanted.end());
      if (wanted.empty()) throw ConfigError("zeroshot: every domain under " + cfg.paths.data.string() + " was seen in training");
    }
    for (int id : wanted) {
      if (std::find(seen.begin(), seen.end(), id) != seen.end()) {
        throw ConfigError("zeroshot: domain " + std::to_string(id) + " was seen in training; use evaluate");
      }
    }
  } else if (wanted.empty()) {
    wanted = seen;
  }
  const auto domains = load_data(cfg, wanted);
  const EmbeddingCache cache = resolve_cache(cfg, domains);
  const HeadMode mode = zero_shot ? HeadMode::text : cfg.mode;
  const EvalReport report = evaluate_model(model, domains, cache, split, mode,
                                           zero_shot        ? EvalMode::zero_shot
                                           : cross_platform ? EvalMode::cross_platform
                                                            : EvalMode::in_domain);
  const fs::path stem = out.empty() ? cfg.paths.reports / (zero_shot ? "zeroshot" : "evaluate_" + split_name)
                                    : fs::path(out);
  guard(stem.string() + ".json", c.overwrite);
  write_report(stem, report);
  fmt::print("{}", report.to_text());
  fmt::print("report -> {}.json, {}.txt\n", stem.string(), stem.string());
  return 0;
}

int cmd_export(const Common& c, const std::string& split_name, const std::string& out) {
  RunConfig cfg = resolve(c);
  const SplitName split = parse_split(split_name);
  UfinModel model = UfinModel::load(cfg.paths.model);
  const auto domains = load_data(cfg, c.domains.empty() ? model.domains() : c.domains);
  const EmbeddingCache cache = resolve_cache(cfg, domains);
  const fs::path path = out.empty() ? cfg.paths.reports / ("features_" + split_name + ".csv") : fs::path(out);
  guard(path, c.overwrite);
  std::vector<const InstanceRecord*> rows;
  for (const DomainDataset& d : domains)
    for (const InstanceRecord& r : split_of(d, split)) rows.push_back(&r);
  ensure_parent(path);
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  export_universal(os, model, rows, schemas_of(domains), cache);
  fmt::print("wrote {} rows of universal features to {}\n", rows.size(), path.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UFIN: universal feature interaction network for multi-domain click-through rate prediction"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");

  Common common;
  std::string out, split_name = "test", validate, init;
  bool cross_platform = false;
  PrepareArgs prep;

  auto* synth = app.add_subcommand("synth", "generate the synthetic multi-domain dataset");
  add_common(synth, common, false);
  synth->add_option("--out", out, "output directory (default paths.data)");

  auto* prepare = app.add_subcommand("prepare", "split a TSV file into per-domain train/valid/test");
  add_common(prepare, common);
  prepare->add_option("--input", prep.input, "TSV with domain_id, row_id, label and schema columns")->required();
  prepare->add_option("--schema", prep.schema, "JSON schema sidecar")->required();
  prepare->add_option("--out", prep.out, "output directory (default paths.data)");
  prepare->add_option("--name", prep.name, "domain name");
  prepare->add_option("--item-noun", prep.item_noun, "noun used for items in prompts")->capture_default_str();
  prepare->add_flag("--ratings", prep.ratings, "label column holds 1..5 ratings (4-5 -> 1, 1-2 -> 0, 3 dropped)");
  prepare->add_flag("--lenient", prep.lenient, "skip malformed rows instead of failing");

  auto* render = app.add_subcommand("render", "write the prompt of every row as row_id<TAB>prompt");
  add_common(render, common);
  render->add_option("--out", out, "output TSV (default <paths.reports>/prompts.tsv)");

  auto* encode = app.add_subcommand("encode", "build a UFEC embedding cache with the hash encoder");
  add_common(encode, common);
  encode->add_option("--out", out, "output cache (default paths.cache)");
  encode->add_option("--validate", validate, "check an externally produced cache instead of writing one");

  auto* pretrain = app.add_subcommand("pretrain-teachers", "train one guided network per domain");
  add_common(pretrain, common);

  auto* train = app.add_subcommand("train", "train UFIN on the mixed domains");
  add_common(train, common);
  train->add_option("--init", init, "warm-start from a pretrained UFIN checkpoint (cross-platform fine-tuning)");

  auto* evaluate = app.add_subcommand("evaluate", "score a split of the training domains");
  add_common(evaluate, common);
  evaluate->add_option("--split", split_name, "train, valid or test")->capture_default_str();
  evaluate->add_option("--out", out, "report path stem (default <paths.reports>/evaluate_<split>)");
  evaluate->add_flag("--cross-platform", cross_platform, "tag the report as a cross-platform evaluation");

  auto* zeroshot = app.add_subcommand("zeroshot", "score domains unseen in training with the text head");
  add_common(zeroshot, common);
  zeroshot->add_option("--split", split_name, "train, valid or test")->capture_default_str();
  zeroshot->add_option("--out", out, "report path stem (default <paths.reports>/zeroshot)");

  auto* exporter = app.add_subcommand("export-features", "write universal features as CSV");
  add_common(exporter, common);
  exporter->add_option("--split", split_name, "train, valid or test")->capture_default_str();
  exporter->add_option("--out", out, "output CSV (default <paths.reports>/features_<split>.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) return cmd_synth(common, out);
    if (prepare->parsed()) return cmd_prepare(common, prep);
    if (render->parsed()) return cmd_render(common, out);
    if (encode->parsed()) return cmd_encode(common, out, validate);
    if (pretrain->parsed()) return cmd_pretrain(common);
    if (train->parsed()) return cmd_train(common, init);
    if (evaluate->parsed()) return cmd_evaluate(common, split_name, out, false, cross_platform);
    if (zeroshot->parsed()) return cmd_evaluate(common, split_name, out, true);
    if (exporter->parsed()) return cmd_export(common, split_name, out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
