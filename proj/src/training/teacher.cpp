#include "ufin/training/teacher.hpp"

#include <fstream>

#include "ufin/error.hpp"
#include "ufin/numeric/checkpoint.hpp"
#include "ufin/training/losses.hpp"

namespace ufin {

namespace {

std::vector<std::string> teacher_fields(const Schema& schema) {
  std::vector<std::string> out;
  for (const FieldSchema& f : schema.fields()) {
    if (f.kind != FieldKind::text) out.push_back(f.name);
  }
  return out;
}

}  // namespace

TeacherModel::TeacherModel(int domain, std::vector<std::string> fields,
                           std::vector<Vocabulary> vocabularies, std::size_t d, std::size_t n_o,
                           std::uint64_t seed)
    : expert([&]() -> EulerExpert {
        if (fields.empty()) throw ConfigError("teacher: schema has no ID or categorical fields");
        Rng rng(derive_seed(seed, "teacher/expert"));
        return EulerExpert(fields.size(), n_o, d, rng);
      }()),
      domain_(domain),
      fields_(std::move(fields)),
      vocabularies_(std::move(vocabularies)),
      d_(d) {
  if (fields_.size() != vocabularies_.size()) {
    throw ConfigError("teacher: one vocabulary per field required");
  }
  Rng rng(derive_seed(seed, "teacher/embeddings"));
  for (const Vocabulary& v : vocabularies_) {
    tables.emplace_back(Shape{std::max<std::size_t>(v.size(), 1), d});
    fill_normal(tables.back(), rng, 0.5);
    tables.back().enable_grad();
  }
}

TeacherModel TeacherModel::build(const DomainDataset& data, std::size_t d, std::size_t n_o,
                                 std::uint64_t seed) {
  if (data.splits.train.empty() || data.splits.valid.empty()) {
    throw DataError("teacher: domain " + std::to_string(data.domain_id) + " has no train/valid rows");
  }
  std::vector<std::string> fields = teacher_fields(data.schema);
  std::vector<Vocabulary> vocab(fields.size());
  for (std::size_t k = 0; k < fields.size(); ++k) {
    const std::size_t col = *data.schema.index_of(fields[k]);
    for (const InstanceRecord& r : data.splits.train) {
      if (!r.values[col].empty()) vocab[k].add(r.values[col]);
    }
  }
  return TeacherModel(data.domain_id, std::move(fields), std::move(vocab), d, n_o, seed);
}

std::vector<AnonymousIds> TeacherModel::inputs(std::span<const InstanceRecord* const> records,
                                               const Schema& schema) const {
  std::vector<AnonymousIds> ids(fields_.size());
  for (std::size_t k = 0; k < fields_.size(); ++k) {
    ids[k].field = k;
    const auto col = schema.index_of(fields_[k]);
    ids[k].index.reserve(records.size());
    for (const InstanceRecord* r : records) {
      ids[k].index.push_back(col ? vocabularies_[k].lookup(r->values.at(*col)) : -1);
    }
  }
  return ids;
}

Var TeacherModel::forward(Tape& tape, std::span<const AnonymousIds> ids) {
  if (ids.size() != tables.size()) {
    throw ShapeError("teacher: " + std::to_string(ids.size()) + " id lists for " +
                     std::to_string(tables.size()) + " fields");
  }
  std::vector<Var> parts;
  parts.reserve(ids.size());
  for (const AnonymousIds& group : ids) parts.push_back(gather_rows(tape.param(tables.at(group.field)), group.index));
  return expert.forward(concat_cols(parts));
}

std::vector<double> TeacherModel::logits(std::span<const InstanceRecord* const> records,
                                         const Schema& schema, std::size_t batch_size) {
  std::vector<double> out;
  out.reserve(records.size());
  for (std::size_t start = 0; start < records.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, records.size() - start);
    const auto ids = inputs(records.subspan(start, n), schema);
    Tape tape;
    tape.set_grad_enabled(false);
    Var logit = forward(tape, ids);
    for (std::size_t i = 0; i < n; ++i) out.push_back(logit.value()[i]);
  }
  return out;
}

std::vector<ParamRef> TeacherModel::parameters() {
  std::vector<ParamRef> out;
  for (std::size_t k = 0; k < tables.size(); ++k) out.push_back({"teacher/" + fields_[k] + "/embedding", &tables[k]});
  expert.append_parameters(out, "teacher/expert/");
  return out;
}

void TeacherModel::save(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_checkpoint(path, parameters());
  nlohmann::json vocab = nlohmann::json::array();
  for (const Vocabulary& v : vocabularies_) vocab.push_back(v.to_json());
  nlohmann::json meta{{"domain_id", domain_},
                      {"fields", fields_},
                      {"vocabulary", vocab},
                      {"d", d_},
                      {"n_o", expert.order_vectors()}};
  std::ofstream out(path.string() + ".json", std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string() + ".json");
  out << meta.dump() << '\n';
}

TeacherModel TeacherModel::load(const std::filesystem::path& path) {
  const std::string meta_path = path.string() + ".json";
  std::ifstream in(meta_path);
  if (!in) throw DataError("missing teacher metadata " + meta_path);
  try {
    const auto meta = nlohmann::json::parse(in);
    std::vector<Vocabulary> vocab;
    for (const auto& v : meta.at("vocabulary")) vocab.push_back(Vocabulary::from_json(v));
    TeacherModel t(meta.at("domain_id").get<int>(), meta.at("fields").get<std::vector<std::string>>(),
                   std::move(vocab), meta.at("d").get<std::size_t>(),
                   meta.at("n_o").get<std::size_t>(), 0);
    load_checkpoint_into(path, t.parameters());
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(meta_path + ": " + e.what());
  }
}

History pretrain_teacher(TeacherModel& teacher, const DomainDataset& data,
                         const TrainConfig& config, const EpochHook& hook) {
  if (data.domain_id != teacher.domain()) {
    throw ConfigError("teacher for domain " + std::to_string(teacher.domain()) +
                      " given data of domain " + std::to_string(data.domain_id));
  }
  if (data.splits.train.empty()) {
    throw DataError("teacher: domain " + std::to_string(data.domain_id) + " is empty");
  }
  const auto train = pointers(data.splits.train);
  const auto valid = pointers(data.splits.valid);
  std::vector<int> valid_labels, valid_domains(valid.size(), data.domain_id);
  for (const InstanceRecord* r : valid) valid_labels.push_back(r->label);
  const std::map<int, std::string> names{{data.domain_id, data.name}};
  auto params = teacher.parameters();
  std::vector<const InstanceRecord*> rows;
  std::vector<int> labels;
  auto loss = [&](Tape& tape, std::span<const std::size_t> idx) {
    rows.clear();
    labels.clear();
    for (std::size_t i : idx) {
      rows.push_back(train[i]);
      labels.push_back(train[i]->label);
    }
    return ctr_loss(sigmoid(teacher.forward(tape, teacher.inputs(rows, data.schema))), labels);
  };
  auto validate = [&] {
    std::vector<double> prob = teacher.logits(valid, data.schema);
    for (double& p : prob) p = sigmoid(p);
    return build_report(valid_labels, prob, valid_domains, names);
  };
  return fit(train.size(), params, config, loss, validate, hook);
}

Guidance teacher_guidance(std::span<TeacherModel> teachers, std::span<const DomainDataset> domains) {
  Guidance out;
  for (const DomainDataset& d : domains) {
    TeacherModel* teacher = nullptr;
    for (TeacherModel& t : teachers) {
      if (t.domain() == d.domain_id) teacher = &t;
    }
    if (!teacher) throw DataError("no teacher for domain " + std::to_string(d.domain_id));
    const auto rows = pointers(d.splits.train);
    const auto logits = teacher->logits(rows, d.schema);
    for (std::size_t i = 0; i < rows.size(); ++i) out.emplace(rows[i]->row_id, logits[i]);
  }
  return out;
}

}  // namespace ufin
