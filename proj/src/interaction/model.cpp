#include "ufin/interaction/model.hpp"

#include <fstream>

#include "ufin/error.hpp"
#include "ufin/numeric/checkpoint.hpp"

namespace ufin {

HeadMode parse_head_mode(std::string_view s) {
  if (s == "t") return HeadMode::text;
  if (s == "t+f") return HeadMode::text_features;
  throw ConfigError("unknown mode '" + std::string(s) + "' (expected t or t+f)");
}

std::string_view to_string(HeadMode mode) {
  return mode == HeadMode::text ? "t" : "t+f";
}

double predict(double zeta, std::optional<double> zeta_f) {
  return sigmoid(zeta_f ? zeta + *zeta_f : zeta);
}

nlohmann::json ModelConfig::to_json() const {
  return {{"experts", experts}, {"top_k", top_k},         {"n_u", n_u},
          {"n_o", n_o},         {"d", d},                 {"d_v", d_v},
          {"d_a", d_a},         {"theorem_mode", theorem_mode},
          {"anonymous_fields", anonymous_fields}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.experts = j.at("experts").get<std::size_t>();
  c.top_k = j.at("top_k").get<std::size_t>();
  c.n_u = j.at("n_u").get<std::size_t>();
  c.n_o = j.at("n_o").get<std::size_t>();
  c.d = j.at("d").get<std::size_t>();
  c.d_v = j.at("d_v").get<std::size_t>();
  c.d_a = j.at("d_a").get<std::size_t>();
  c.theorem_mode = j.at("theorem_mode").get<bool>();
  c.anonymous_fields = j.at("anonymous_fields").get<std::vector<std::string>>();
  return c;
}

SchemaMap schemas_of(std::span<const DomainDataset> domains) {
  SchemaMap out;
  for (const DomainDataset& d : domains) out.emplace(d.domain_id, d.schema);
  return out;
}

std::vector<const InstanceRecord*> pointers(std::span<const InstanceRecord> records) {
  std::vector<const InstanceRecord*> out;
  out.reserve(records.size());
  for (const InstanceRecord& r : records) out.push_back(&r);
  return out;
}

namespace {

ModelConfig resolve(ModelConfig c, const std::vector<int>& domains) {
  if (c.experts == 0) c.experts = domains.size();
  if (c.experts == 0) throw ConfigError("model: no training domains");
  if (c.top_k == 0) c.top_k = auto_topk(c.experts);
  return c;
}

}  // namespace

UfinModel::UfinModel(ModelConfig config, std::vector<int> domains,
                     std::vector<Vocabulary> anonymous_vocab, FeatureAdaptor adaptor,
                     std::uint64_t seed)
    : UfinModel(resolve(std::move(config), domains), domains,
                std::move(anonymous_vocab), std::move(adaptor), Rng(seed)) {}

UfinModel::UfinModel(ModelConfig config, const std::vector<int>& domains,
                     std::vector<Vocabulary> anonymous_vocab, FeatureAdaptor adaptor, Rng rng)
    : text_norm(config.d_v),
      fusion(config.d_v, config.experts, rng),
      anonymous(config.anonymous_fields, std::move(anonymous_vocab), config.d_a, config.d_v, rng),
      decoder(config.d_v, config.n_u, config.d, rng),
      moe(config.d_v, config.experts, config.top_k, config.n_u, config.n_o, config.d, rng,
          config.theorem_mode),
      adaptor(std::move(adaptor)),
      config_(std::move(config)),
      domains_(domains) {}

UfinModel UfinModel::build(ModelConfig config, std::span<const DomainDataset> domains,
                           std::uint64_t seed) {
  std::vector<int> ids;
  for (const DomainDataset& d : domains) ids.push_back(d.domain_id);
  std::vector<Vocabulary> vocab(config.anonymous_fields.size());
  for (std::size_t k = 0; k < config.anonymous_fields.size(); ++k) {
    bool found = false;
    for (const DomainDataset& d : domains) {
      const auto col = d.schema.index_of(config.anonymous_fields[k]);
      if (!col) continue;
      if (d.schema[*col].kind != FieldKind::anonymous_id) {
        throw ConfigError("model.anonymous_fields: '" + config.anonymous_fields[k] +
                          "' is not an anonymous_id field");
      }
      found = true;
      for (const InstanceRecord& r : d.splits.train) {
        if (!r.values[*col].empty()) vocab[k].add(r.values[*col]);
      }
    }
    if (!found) {
      throw ConfigError("model.anonymous_fields: no schema has a field '" +
                        config.anonymous_fields[k] + "'");
    }
  }
  return UfinModel(std::move(config), std::move(ids), std::move(vocab),
                   FeatureAdaptor::build(domains, false), seed);
}

Batch UfinModel::make_batch(std::span<const InstanceRecord* const> records,
                            const SchemaMap& schemas, const EmbeddingCache& cache) const {
  if (cache.dim() != config_.d_v) {
    throw DataError("embedding cache has d_V=" + std::to_string(cache.dim()) +
                    ", model expects " + std::to_string(config_.d_v));
  }
  Batch b;
  b.size = records.size();
  if (b.size == 0) throw DataError("empty batch");
  b.pooled = Tensor({b.size, config_.d_v});
  b.anonymous.resize(anonymous.size());
  for (std::size_t k = 0; k < anonymous.size(); ++k) b.anonymous[k].field = k;
  std::map<int, std::vector<std::optional<std::size_t>>> columns;
  for (std::size_t i = 0; i < b.size; ++i) {
    const InstanceRecord& r = *records[i];
    auto it = columns.find(r.domain_id);
    if (it == columns.end()) {
      auto s = schemas.find(r.domain_id);
      if (s == schemas.end()) throw DataError("no schema for domain " + std::to_string(r.domain_id));
      std::vector<std::optional<std::size_t>> cols;
      for (const std::string& f : anonymous.fields()) cols.push_back(s->second.index_of(f));
      it = columns.emplace(r.domain_id, std::move(cols)).first;
    }
    cache.copy_to(r.row_id, b.pooled.data() + i * config_.d_v);
    for (std::size_t k = 0; k < anonymous.size(); ++k) {
      const auto& col = it->second[k];
      b.anonymous[k].index.push_back(col ? anonymous.lookup(k, r.values.at(*col)) : -1);
    }
    b.labels.push_back(r.label);
    b.domains.push_back(r.domain_id);
    b.row_ids.push_back(r.row_id);
  }
  auto in = adaptor.inputs(records, schemas);
  b.adaptor = std::move(in.ids);
  b.adaptor_rows = std::move(in.rows);
  return b;
}

UfinModel::Forward UfinModel::forward(Tape& tape, const Batch& batch, HeadMode mode) {
  Forward f;
  f.s = text_norm.forward(tape.constant(batch.pooled.detached()));
  auto fused = fusion.forward(f.s);
  f.z = fused.z;
  f.fusion_gate = fused.gate;
  f.z_tilde = anonymous.fuse(f.z, batch.anonymous);
  f.universal = decoder.forward(f.z_tilde);
  auto m = moe.forward(f.universal, f.z_tilde);
  f.zeta = m.zeta;
  f.moe_gate = m.gate;
  f.selected = std::move(m.selected);
  if (mode == HeadMode::text_features) {
    f.zeta_f = adaptor.forward(tape, batch.adaptor, batch.adaptor_rows);
    f.logit = add(f.zeta, f.zeta_f);
  } else {
    f.logit = f.zeta;
  }
  return f;
}

std::vector<ParamRef> UfinModel::parameters(bool include_adaptor) {
  std::vector<ParamRef> out;
  text_norm.append_parameters(out, "text/");
  fusion.append_parameters(out, "fusion/");
  anonymous.append_parameters(out, "anonymous/");
  decoder.append_parameters(out, "decoder/");
  moe.append_parameters(out, "moe/");
  if (include_adaptor) adaptor.append_parameters(out, "adaptor/");
  return out;
}

void UfinModel::save(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_checkpoint(path, parameters());
  nlohmann::json meta;
  meta["config"] = config_.to_json();
  meta["domains"] = domains_;
  nlohmann::json anon = nlohmann::json::array();
  for (std::size_t k = 0; k < anonymous.size(); ++k) anon.push_back(anonymous.vocabulary(k).to_json());
  meta["anonymous_vocabulary"] = anon;
  nlohmann::json keys = nlohmann::json::array();
  for (std::size_t k = 0; k < adaptor.fields().size(); ++k) keys.push_back(adaptor.keys(k).to_json());
  meta["adaptor"] = {{"fields", adaptor.fields()},
                     {"keys", keys},
                     {"domains", adaptor.domains()},
                     {"shared", adaptor.shared()}};
  std::ofstream out(path.string() + ".json", std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string() + ".json");
  out << meta.dump() << '\n';
}

UfinModel UfinModel::load(const std::filesystem::path& path) {
  const std::string meta_path = path.string() + ".json";
  std::ifstream in(meta_path);
  if (!in) throw DataError("missing model metadata " + meta_path);
  try {
    const auto meta = nlohmann::json::parse(in);
    std::vector<Vocabulary> anon;
    for (const auto& v : meta.at("anonymous_vocabulary")) anon.push_back(Vocabulary::from_json(v));
    const auto& a = meta.at("adaptor");
    std::vector<Vocabulary> keys;
    for (const auto& v : a.at("keys")) keys.push_back(Vocabulary::from_json(v));
    FeatureAdaptor adaptor(a.at("fields").get<std::vector<std::string>>(), std::move(keys),
                           a.at("domains").get<std::vector<int>>(), a.at("shared").get<bool>());
    UfinModel model(ModelConfig::from_json(meta.at("config")),
                    meta.at("domains").get<std::vector<int>>(), std::move(anon), std::move(adaptor),
                    0);
    load_checkpoint_into(path, model.parameters());
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(meta_path + ": " + e.what());
  }
}

Scores score(UfinModel& model, std::span<const InstanceRecord* const> records,
             const SchemaMap& schemas, const EmbeddingCache& cache, HeadMode mode,
             std::size_t batch_size) {
  Scores out;
  for (std::size_t start = 0; start < records.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, records.size() - start);
    const Batch batch = model.make_batch(records.subspan(start, n), schemas, cache);
    Tape tape;
    tape.set_grad_enabled(false);
    const auto f = model.forward(tape, batch, mode);
    for (std::size_t i = 0; i < n; ++i) {
      out.zeta.push_back(f.zeta.value()[i]);
      if (f.zeta_f.valid()) out.zeta_f.push_back(f.zeta_f.value()[i]);
      out.prob.push_back(sigmoid(f.logit.value()[i]));
      auto& counts = out.selection_counts[batch.domains[i]];
      counts.resize(model.moe.size());
      for (std::size_t j : f.selected[i]) ++counts[j];
    }
    out.labels.insert(out.labels.end(), batch.labels.begin(), batch.labels.end());
    out.domains.insert(out.domains.end(), batch.domains.begin(), batch.domains.end());
  }
  return out;
}

void export_universal(std::ostream& out, UfinModel& model,
                      std::span<const InstanceRecord* const> records, const SchemaMap& schemas,
                      const EmbeddingCache& cache, std::size_t batch_size) {
  const std::size_t n_u = model.config().n_u, d = model.config().d;
  out << "row_id,domain_id";
  for (std::size_t j = 0; j < n_u; ++j)
    for (std::size_t k = 0; k < d; ++k) out << ",e_" << j << '_' << k;
  out << '\n';
  char buf[32];
  for (std::size_t start = 0; start < records.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, records.size() - start);
    const Batch batch = model.make_batch(records.subspan(start, n), schemas, cache);
    Tape tape;
    tape.set_grad_enabled(false);
    const auto f = model.forward(tape, batch, HeadMode::text);
    const Tensor& e = f.universal.value();
    for (std::size_t i = 0; i < n; ++i) {
      out << batch.row_ids[i] << ',' << batch.domains[i];
      for (std::size_t c = 0; c < n_u * d; ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", e[i * n_u * d + c]);
        out << ',' << buf;
      }
      out << '\n';
    }
  }
}

}  // namespace ufin
