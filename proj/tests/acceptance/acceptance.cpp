// Acceptance checks. One PASS/FAIL line per criterion on stdout, progress on
// stderr. Exit status is non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "ufin/data/synth.hpp"
#include "ufin/error.hpp"
#include "ufin/pipeline/pipeline.hpp"
#include "ufin/training/losses.hpp"

namespace fs = std::filesystem;
using namespace ufin;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  fmt::print("{} {}: {}\n", ok ? "PASS" : "FAIL", name, detail);
  std::fflush(stdout);
  if (!ok) ++failures;
}

void note(const std::string& s) {
  fmt::print(stderr, "  {}\n", s);
  std::fflush(stderr);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Tensor tracked_random(Shape shape, std::uint64_t seed, double stddev = 1.0) {
  Tensor t = testing::random_tensor(std::move(shape), seed, stddev);
  t.enable_grad();
  return t;
}

// Smallest gap between the K-th and (K+1)-th gate probability over the rows.
double topk_margin(const Tensor& probs, std::size_t k) {
  double margin = 1.0;
  for (std::size_t b = 0; b < probs.rows(); ++b) {
    std::vector<double> row(probs.data() + b * probs.cols(), probs.data() + (b + 1) * probs.cols());
    std::sort(row.rbegin(), row.rend());
    if (k < row.size()) margin = std::min(margin, row[k - 1] - row[k]);
  }
  return margin;
}

// ---------------------------------------------------------------- gradients

struct GradCase {
  std::string name;
  std::function<double(std::uint64_t)> worst;  // max relative error at one point
};

std::vector<GradCase> gradient_cases() {
  std::vector<GradCase> cases;
  cases.push_back({"layer_norm", [](std::uint64_t p) {
                     std::vector<Tensor> in{testing::random_tensor({3, 6}, p), testing::random_tensor({6}, p + 1),
                                            testing::random_tensor({6}, p + 2)};
                     auto fn = [](Tape&, std::span<const Var> v) { return layer_norm(v[0], v[1], v[2], 3); };
                     return testing::check_gradients(fn, in, p).max_rel_error;
                   }});
  cases.push_back({"text_norm", [](std::uint64_t p) {
                     TextNorm norm(6);
                     Rng rng(p);
                     fill_normal(norm.gain, rng, 1.0);
                     fill_normal(norm.bias, rng, 1.0);
                     Tensor x = tracked_random({3, 6}, p + 1, 3.0);
                     std::vector<ParamRef> params{{"x", &x}};
                     norm.append_parameters(params, "");
                     auto fn = [&](Tape& t) { return norm.forward(t.param(x)); };
                     return testing::check_parameter_gradients(fn, params, p).max_rel_error;
                   }});
  cases.push_back({"semantic_moe", [](std::uint64_t p) {
                     Rng rng(p);
                     SemanticFusion fusion(5, 3, rng);
                     fill_normal(fusion.gate, rng, 1.0);
                     for (Tensor& b : fusion.biases) fill_normal(b, rng, 0.5);
                     Tensor s = tracked_random({4, 5}, p + 1);
                     std::vector<ParamRef> params{{"s", &s}};
                     fusion.append_parameters(params, "");
                     auto fn = [&](Tape& t) { return fusion.forward(t.param(s)).z; };
                     return testing::check_parameter_gradients(fn, params, p).max_rel_error;
                   }});
  cases.push_back({"anonymous_fusion", [](std::uint64_t p) {
                     Rng rng(p);
                     AnonymousTable table({"user_id"}, {Vocabulary({"a", "b", "c"})}, 3, 5, rng);
                     Tensor z = tracked_random({4, 5}, p + 1);
                     std::vector<ParamRef> params{{"z", &z}};
                     table.append_parameters(params, "");
                     const std::vector<AnonymousIds> ids{{0, {0, 2, -1, 2}}};
                     auto fn = [&](Tape& t) { return table.fuse(t.param(z), ids); };
                     return testing::check_parameter_gradients(fn, params, p).max_rel_error;
                   }});
  cases.push_back({"decoder", [](std::uint64_t p) {
                     Rng rng(p);
                     UniversalDecoder dec(5, 3, 2, rng);
                     fill_normal(dec.gain, rng, 1.0);
                     fill_normal(dec.bias, rng, 1.0);
                     Tensor z = tracked_random({4, 5}, p + 1);
                     std::vector<ParamRef> params{{"z", &z}};
                     dec.append_parameters(params, "");
                     auto fn = [&](Tape& t) { return dec.forward(t.param(z)); };
                     return testing::check_parameter_gradients(fn, params, p).max_rel_error;
                   }});
  cases.push_back({"euler_expert", [](std::uint64_t p) {
                     std::vector<Tensor> in{testing::random_tensor({3, 3 * 2}, p),         // theta
                                            testing::random_tensor({4, 3}, p + 1, 0.5),    // orders
                                            testing::random_tensor({3, 2}, p + 2),         // mu
                                            testing::random_tensor({4, 2}, p + 3),         // w_re
                                            testing::random_tensor({4, 2}, p + 4),         // w_im
                                            testing::random_tensor({1}, p + 5)};           // bias
                     auto fn = [](Tape&, std::span<const Var> v) {
                       return euler_interaction(v[0], v[1], v[2], v[3], v[4], v[5]);
                     };
                     return testing::check_gradients(fn, in, p).max_rel_error;
                   }});
  cases.push_back({"interaction_moe", [](std::uint64_t p) {
                     // The TopK selection is piecewise constant; points within
                     // 1e-4 of a selection change are redrawn.
                     for (std::uint64_t draw = p;; draw += 1000003) {
                       Rng rng(draw);
                       InteractionMoE moe(5, 4, 3, 2, 3, 2, rng);
                       fill_normal(moe.gate, rng, 1.0);
                       Tensor u = tracked_random({3, 4}, draw + 1);
                       Tensor z = tracked_random({3, 5}, draw + 2);
                       Tape probe;
                       probe.set_grad_enabled(false);
                       const Tensor probs =
                           softmax_rows(matmul(probe.constant_ref(z), probe.constant_ref(moe.gate))).value();
                       if (topk_margin(probs, 3) < 1e-4) continue;
                       std::vector<ParamRef> params{{"u", &u}, {"z", &z}};
                       moe.append_parameters(params, "");
                       auto fn = [&](Tape& t) { return moe.forward(t.param(u), t.param(z)).zeta; };
                       return testing::check_parameter_gradients(fn, params, p).max_rel_error;
                     }
                   }});
  cases.push_back({"kd_loss", [](std::uint64_t p) {
                     std::vector<Tensor> in{testing::random_tensor({5, 1}, p)};
                     const Tensor teacher = testing::random_tensor({5}, p + 1);
                     const std::vector<double> tv(teacher.values().begin(), teacher.values().end());
                     auto fn = [&](Tape&, std::span<const Var> v) { return kd_loss(v[0], tv); };
                     return testing::check_gradients(fn, in, p).max_rel_error;
                   }});
  cases.push_back({"ctr_loss", [](std::uint64_t p) {
                     std::mt19937_64 rng(p);
                     std::uniform_real_distribution<double> u(0.05, 0.95);
                     Tensor preds({5, 1});
                     std::vector<int> labels(5);
                     for (std::size_t i = 0; i < 5; ++i) {
                       preds[i] = u(rng);
                       labels[i] = static_cast<int>(rng() % 2);
                     }
                     std::vector<Tensor> in{preds};
                     auto fn = [&](Tape&, std::span<const Var> v) { return ctr_loss(v[0], labels); };
                     return testing::check_gradients(fn, in, p, 1e-7).max_rel_error;
                   }});
  cases.push_back({"total_loss", [](std::uint64_t p) {
                     std::mt19937_64 rng(p);
                     std::vector<int> labels(4);
                     for (int& y : labels) y = static_cast<int>(rng() % 2);
                     const Tensor teacher = testing::random_tensor({4}, p + 1);
                     const std::vector<double> tv(teacher.values().begin(), teacher.values().end());
                     std::vector<Tensor> in{testing::random_tensor({4, 1}, p)};
                     auto fn = [&](Tape&, std::span<const Var> v) {
                       return total_loss(kd_loss(v[0], tv), ctr_loss(sigmoid(v[0]), labels));
                     };
                     return testing::check_gradients(fn, in, p).max_rel_error;
                   }});
  return cases;
}

void check_gradient_suite() {
  const auto t0 = Clock::now();
  std::string worst_name;
  double worst = 0.0;
  std::size_t evaluated = 0;
  for (const GradCase& c : gradient_cases()) {
    double case_worst = 0.0;
    for (std::uint64_t point = 0; point < 100; ++point) {
      case_worst = std::max(case_worst, c.worst(point * 7919 + 13));
      ++evaluated;
    }
    note(fmt::format("gradient {:<17} max rel err {:.2e}", c.name, case_worst));
    if (case_worst >= worst) {
      worst = case_worst;
      worst_name = c.name;
    }
  }
  const double secs = seconds_since(t0);
  report("gradient suite", worst < 1e-4 && secs < 60.0,
         fmt::format("{} ops x 100 points, max rel err {:.2e} ({}) < 1e-4, {:.1f}s < 60s",
                     evaluated / 100, worst, worst_name, secs));
}

// ---------------------------------------------------------------- oracles

void check_euler_oracle() {
  std::mt19937_64 rng(20240611);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n_u = 1 + rng() % 4, d = 1 + rng() % 3, n_o = 1 + rng() % 4, batch = 1 + rng() % 3;
    std::vector<std::vector<int>> orders(n_o, std::vector<int>(n_u));
    Tensor orders_t({n_o, n_u});
    for (std::size_t k = 0; k < n_o; ++k)
      for (std::size_t j = 0; j < n_u; ++j) orders_t.at(k, j) = orders[k][j] = static_cast<int>(rng() % 5);
    const Tensor mu = testing::random_tensor({n_u, d}, rng(), 0.5);
    Tensor lambda({n_u, d});
    for (std::size_t i = 0; i < mu.size(); ++i) lambda[i] = std::log1p(std::exp(mu[i]));
    const Tensor theta = testing::random_tensor({batch, n_u * d}, rng(), 2.0);
    const auto expected = testing::euler_brute_force(theta, orders, lambda);
    const auto got = testing::euler_components(theta, orders_t, mu);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t k = 0; k < n_o; ++k)
        for (std::size_t c = 0; c < d; ++c) {
          const double err = std::abs(got[b][k][c] - expected[b][k][c]) / std::abs(expected[b][k][c]);
          worst = std::max(worst, err);
        }
  }
  report("euler oracle", worst < 1e-9,
         fmt::format("1000 integer-order cases, max rel err {:.2e} < 1e-9", worst));
}

void check_theorem() {
  bool ok = true;
  std::string detail;
  for (std::size_t l = 2; l <= 8; ++l) {
    for (std::size_t k = (l + 1) / 2 + 1; k <= l; ++k) {
      auto subsets = k_subsets(l, k);
      if (subsets.size() == 1) subsets.push_back(subsets.front());
      const std::size_t min = verify_overlap(l, k, subsets);
      if (min != 2 * k - l || min == 0) {
        ok = false;
        detail += fmt::format(" L={} K={} min={}", l, k, min);
      }
    }
  }
  const std::size_t l7 = verify_overlap(7, 5, k_subsets(7, 5));
  ok = ok && l7 == 3;
  report("theorem 1", ok,
         fmt::format("all L in [2,8], K > ceil(L/2): min intersection = 2K-L > 0; L=7 K=5 gives {}{}", l7,
                     detail));
}

void check_auc_oracle() {
  std::mt19937_64 rng(77);
  int mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng() % 199;
    std::vector<int> y(n);
    std::vector<double> s(n);
    const bool coarse = trial % 2 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng() % 2);
      s[i] = coarse ? static_cast<double>(rng() % 10) : std::ldexp(static_cast<double>(rng() >> 11), -53);
    }
    y[0] = 0;
    y[1] = 1;
    if (auc(y, s) != testing::pairwise_auc(y, s)) ++mismatches;
  }
  report("auc oracle", mismatches == 0,
         fmt::format("500 random instances (n <= 200, half with ties): {} mismatches vs pair count", mismatches));
}

void check_metric_sanity(const SynthResult& data) {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u;
  std::vector<int> y(10000);
  std::vector<double> s(10000);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = static_cast<int>(i % 2);
    s[i] = u(rng);
  }
  const double random_auc = auc(y, s);
  std::vector<int> labels;
  std::vector<double> p;
  for (const DomainDataset& d : data.domains)
    for (SplitName split : {SplitName::train, SplitName::valid, SplitName::test})
      for (const InstanceRecord& r : split_of(d, split)) {
        labels.push_back(r.label);
        p.push_back(data.p_star.at(r.row_id));
      }
  const double oracle_auc = auc(labels, p);
  const double ceiling = bayes_auc_ceiling(p);
  report("metric sanity", std::abs(random_auc - 0.5) <= 0.02 && std::abs(oracle_auc - ceiling) <= 0.005,
         fmt::format("random scores AUC {:.4f} (0.5 +- 0.02); p* AUC {:.4f} vs Bayes ceiling {:.4f} (+- 0.005)",
                     random_auc, oracle_auc, ceiling));
}

// ---------------------------------------------------------------- end to end

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<int> labels_of(std::span<const InstanceRecord* const> rows) {
  std::vector<int> y;
  for (const InstanceRecord* r : rows) y.push_back(r->label);
  return y;
}

double metric_of(const EvalReport& r, int domain) {
  for (const DomainMetrics& m : r.domains)
    if (m.domain == domain) return m.auc;
  throw DataError("no metrics for domain " + std::to_string(domain));
}

struct Run {
  std::vector<TeacherModel> teachers;
  UfinModel model;
  EvalReport report;
};

// synth -> encode -> teachers -> train UFIN_t+f with distillation -> evaluate
Run full_pipeline(const RunConfig& cfg, const fs::path& dir) {
  const SynthResult data = synth_generate(cfg.synth, cfg.stage_seed("synth"));
  const EmbeddingCache cache = resolve_cache(cfg, data.domains);
  auto teachers = pretrain_teachers(cfg, data.domains);
  TrainResult trained = train_model(cfg, data.domains, cache, teachers);
  EvalReport rep = evaluate_model(trained.model, data.domains, cache, SplitName::test, cfg.mode, EvalMode::in_domain);
  fs::create_directories(dir);
  for (TeacherModel& t : teachers) t.save(teacher_path(dir, t.domain()));
  trained.model.save(dir / "ufin.ufnp");
  trained.history.write_csv(dir / "history.csv");
  write_report(dir / "report", rep);
  return {std::move(teachers), std::move(trained.model), std::move(rep)};
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "ufin_acceptance";
  fs::remove_all(work);

  note("gradient suite");
  check_gradient_suite();
  note("euler oracle");
  check_euler_oracle();
  check_theorem();
  check_auc_oracle();

  RunConfig cfg;  // seed 42, default config, hash encoder
  const SynthResult data = synth_generate(cfg.synth, cfg.stage_seed("synth"));
  check_metric_sanity(data);
  const std::vector<DomainDataset>& domains = data.domains;
  const SchemaMap schemas = schemas_of(domains);
  auto log = [](const std::string& s) { note(s); };

  // End to end.
  note("end-to-end: teachers, UFIN_t+f, UFIN_t, LR");
  const auto t0 = Clock::now();
  const Run main_run = full_pipeline(cfg, work / "run_a");
  const double pipeline_secs = seconds_since(t0);
  const EmbeddingCache cache = resolve_cache(cfg, domains);
  RunConfig cfg_t = cfg;
  cfg_t.mode = HeadMode::text;
  std::vector<TeacherModel> teachers = main_run.teachers;
  TrainResult text_only = train_model(cfg_t, domains, cache, teachers, {}, log);
  const EvalReport rep_t =
      evaluate_model(text_only.model, domains, cache, SplitName::test, HeadMode::text, EvalMode::in_domain);
  FeatureAdaptor lr = FeatureAdaptor::build(domains, false);
  TrainConfig lr_cfg = cfg.train;
  lr_cfg.seed = cfg.stage_seed("baseline/lr");
  train_adaptor(lr, domains, lr_cfg);
  const double e2e_secs = seconds_since(t0);

  const EvalReport& rep_tf = main_run.report;
  bool a_ok = true, c_ok = true;
  std::string a_detail, c_detail;
  for (const DomainDataset& d : domains) {
    const auto rows = pointers(d.splits.test);
    const double lr_auc = auc(labels_of(rows), adaptor_predictions(lr, rows, schemas));
    const double tf_auc = metric_of(rep_tf, d.domain_id);
    a_ok = a_ok && tf_auc - lr_auc >= 0.05;
    a_detail += fmt::format(" d{} {:.4f} vs {:.4f};", d.domain_id, tf_auc, lr_auc);
    TeacherModel& teacher = teachers[static_cast<std::size_t>(d.domain_id)];
    const double teacher_auc = auc(labels_of(rows), teacher.logits(rows, d.schema));
    c_ok = c_ok && tf_auc >= teacher_auc - 0.03;
    c_detail += fmt::format(" d{} {:.4f} vs {:.4f};", d.domain_id, tf_auc, teacher_auc);
  }
  const bool b_ok = rep_tf.overall.auc >= rep_t.overall.auc - 0.005;
  const bool time_ok = e2e_secs < 600.0;
  report("end-to-end", a_ok && b_ok && c_ok && time_ok,
         fmt::format("(a) {} (b) {} (c) {} runtime {}", a_ok ? "ok" : "no", b_ok ? "ok" : "no", c_ok ? "ok" : "no",
                     time_ok ? "ok" : "no"));
  fmt::print("  (a) UFIN_t+f - LR >= 0.05 per domain:{}\n", a_detail);
  fmt::print("  (b) UFIN_t+f mixed {:.4f} >= UFIN_t mixed {:.4f} - 0.005\n", rep_tf.overall.auc, rep_t.overall.auc);
  fmt::print("  (c) student >= teacher - 0.03 per domain:{}\n", c_detail);
  fmt::print("  runtime {:.0f}s < 600s (pipeline {:.0f}s, comparators {:.0f}s)\n", e2e_secs, pipeline_secs,
             e2e_secs - pipeline_secs);

  // Zero-shot: train on domains 0 and 1, score domain 2.
  note("zero-shot");
  {
    const std::vector<DomainDataset> seen(domains.begin(), domains.begin() + 2);
    const std::vector<DomainDataset> unseen(domains.begin() + 2, domains.end());
    std::vector<TeacherModel> seen_teachers(teachers.begin(), teachers.begin() + 2);
    TrainResult zs = train_model(cfg_t, seen, cache, seen_teachers, {}, log);
    const EvalReport rep = evaluate_model(zs.model, unseen, cache, SplitName::test, HeadMode::text, EvalMode::zero_shot);
    FeatureAdaptor lr_zs = FeatureAdaptor::build(domains, false);
    train_adaptor(lr_zs, seen, lr_cfg);
    const auto rows = pointers(unseen[0].splits.test);
    const double lr_auc = auc(labels_of(rows), adaptor_predictions(lr_zs, rows, schemas));
    report("zero-shot", rep.overall.auc >= 0.60 && std::abs(lr_auc - 0.5) <= 0.03,
           fmt::format("held-out domain {}: UFIN_t {:.4f} >= 0.60, domain-specific LR {:.4f} (0.5 +- 0.03)",
                       unseen[0].domain_id, rep.overall.auc, lr_auc));
  }

  // Prompt ablation on UFIN_t; Base is the UFIN_t run above.
  note("prompt ablation");
  {
    auto run_variant = [&](PromptVariant v, std::vector<std::string> drop) {
      RunConfig c = cfg_t;
      c.prompt.variant = v;
      c.prompt.drop_fields = std::move(drop);
      const EmbeddingCache vc = hash_encode(domains, make_template(c.prompt), HashEncoder(c.model.d_v, c.encoder.hash_seed));
      TrainResult r = train_model(c, domains, vc, teachers, {}, log);
      return evaluate_model(r.model, domains, vc, SplitName::test, HeadMode::text, EvalMode::in_domain).overall.auc;
    };
    const double base = rep_t.overall.auc;
    const double p3 = run_variant(PromptVariant::prompt3, {"description"});
    const double p2 = run_variant(PromptVariant::prompt2, {});
    report("prompt ablation", base - p3 >= 0.02 && std::abs(p2 - base) < 0.01,
           fmt::format("Base {:.4f}; Prompt3 without description {:.4f} (drop {:.4f} >= 0.02); "
                       "Prompt2 {:.4f} (change {:.4f} < 0.01)",
                       base, p3, base - p3, p2, std::abs(p2 - base)));
  }

  // Determinism: a second full run with the same seed.
  note("determinism");
  {
    full_pipeline(cfg, work / "run_b");
    std::vector<std::string> differ;
    for (const auto& entry : fs::directory_iterator(work / "run_a")) {
      const fs::path name = entry.path().filename();
      if (slurp(entry.path()) != slurp(work / "run_b" / name)) differ.push_back(name.string());
    }
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(work / "run_a")) ++files;
    std::string list;
    for (const std::string& d : differ) list += " " + d;
    report("determinism", differ.empty() && files > 0,
           fmt::format("{} checkpoint/report files compared bytewise, {} differ{}", files, differ.size(), list));
  }

  fs::remove_all(work);
  return failures == 0 ? 0 : 1;
}
