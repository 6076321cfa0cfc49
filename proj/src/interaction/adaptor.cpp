#include "ufin/interaction/adaptor.hpp"

#include <algorithm>

#include "ufin/error.hpp"

namespace ufin {

FeatureAdaptor::FeatureAdaptor(std::vector<std::string> fields, std::vector<Vocabulary> keys,
                               std::vector<int> domains, bool shared)
    : fields_(std::move(fields)), keys_(std::move(keys)), domains_(std::move(domains)),
      shared_(shared) {
  if (fields_.size() != keys_.size()) throw ConfigError("adaptor: one key set per field required");
  if (domains_.empty()) throw ConfigError("adaptor: no domains");
  for (const Vocabulary& v : keys_) {
    weights.emplace_back(Shape{std::max<std::size_t>(v.size(), 1), 1});
    weights.back().enable_grad();
  }
  bias = Tensor({shared_ ? 1 : domains_.size(), 1});
  bias.enable_grad();
}

std::string FeatureAdaptor::key(int domain, std::string_view value, bool shared) {
  if (shared) return std::string(value);
  return std::to_string(domain) + "|" + std::string(value);
}

FeatureAdaptor FeatureAdaptor::build(std::span<const DomainDataset> domains, bool shared) {
  std::vector<std::string> fields;
  std::vector<int> ids;
  for (const DomainDataset& d : domains) {
    ids.push_back(d.domain_id);
    for (const FieldSchema& f : d.schema.fields()) {
      if (f.kind == FieldKind::text) continue;
      if (std::find(fields.begin(), fields.end(), f.name) == fields.end()) fields.push_back(f.name);
    }
  }
  std::vector<Vocabulary> keys(fields.size());
  for (const DomainDataset& d : domains) {
    for (std::size_t k = 0; k < fields.size(); ++k) {
      const auto col = d.schema.index_of(fields[k]);
      if (!col) continue;
      for (const InstanceRecord& r : d.splits.train) {
        if (!r.values[*col].empty()) keys[k].add(key(d.domain_id, r.values[*col], shared));
      }
    }
  }
  return FeatureAdaptor(std::move(fields), std::move(keys), std::move(ids), shared);
}

std::int64_t FeatureAdaptor::lookup(std::size_t field, int domain, std::string_view value) const {
  if (value.empty()) return -1;
  return keys_.at(field).lookup(key(domain, value, shared_));
}

std::int64_t FeatureAdaptor::domain_row(int domain) const {
  if (shared_) return 0;
  auto it = std::find(domains_.begin(), domains_.end(), domain);
  return it == domains_.end() ? -1 : it - domains_.begin();
}

Var FeatureAdaptor::forward(Tape& tape, std::span<const AnonymousIds> ids,
                            std::span<const std::int64_t> rows) {
  for (std::int64_t r : rows) {
    if (r < 0) throw ConfigError("feature adaptor: record from a domain without adaptor weights");
  }
  Var out = gather_rows(tape.param(bias), rows);
  for (const AnonymousIds& group : ids) {
    if (group.field >= weights.size()) {
      throw std::out_of_range("feature adaptor: field index " + std::to_string(group.field));
    }
    out = add(out, gather_rows(tape.param(weights[group.field]), group.index));
  }
  return out;
}

double FeatureAdaptor::logit(const InstanceRecord& record, const Schema& schema) const {
  const std::int64_t row = domain_row(record.domain_id);
  if (row < 0) {
    throw ConfigError("feature adaptor: no weights for domain " + std::to_string(record.domain_id));
  }
  double total = bias[static_cast<std::size_t>(row)];
  for (std::size_t k = 0; k < fields_.size(); ++k) {
    const auto col = schema.index_of(fields_[k]);
    if (!col) continue;
    const std::int64_t idx = lookup(k, record.domain_id, record.values.at(*col));
    if (idx >= 0) total += weights[k][static_cast<std::size_t>(idx)];
  }
  return total;
}

FeatureAdaptor::Inputs FeatureAdaptor::inputs(std::span<const InstanceRecord* const> records,
                                              const std::map<int, Schema>& schemas) const {
  Inputs in;
  in.ids.resize(fields_.size());
  for (std::size_t k = 0; k < fields_.size(); ++k) {
    in.ids[k].field = k;
    in.ids[k].index.reserve(records.size());
  }
  in.rows.reserve(records.size());
  std::map<int, std::vector<std::optional<std::size_t>>> columns;
  for (const InstanceRecord* r : records) {
    auto it = columns.find(r->domain_id);
    if (it == columns.end()) {
      auto s = schemas.find(r->domain_id);
      if (s == schemas.end()) {
        throw DataError("no schema for domain " + std::to_string(r->domain_id));
      }
      std::vector<std::optional<std::size_t>> cols;
      for (const std::string& f : fields_) cols.push_back(s->second.index_of(f));
      it = columns.emplace(r->domain_id, std::move(cols)).first;
    }
    for (std::size_t k = 0; k < fields_.size(); ++k) {
      const auto& col = it->second[k];
      in.ids[k].index.push_back(col ? lookup(k, r->domain_id, r->values.at(*col)) : -1);
    }
    in.rows.push_back(domain_row(r->domain_id));
  }
  return in;
}

void FeatureAdaptor::append_parameters(std::vector<ParamRef>& out, const std::string& prefix) {
  for (std::size_t k = 0; k < fields_.size(); ++k) {
    out.push_back({prefix + fields_[k] + "/weight", &weights[k]});
  }
  out.push_back({prefix + "bias", &bias});
}

}  // namespace ufin
