#include "ufin/data/dataset.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "ufin/error.hpp"

namespace ufin {

std::string_view to_string(Side side) {
  switch (side) {
    case Side::user: return "user";
    case Side::item: return "item";
    case Side::context: return "context";
  }
  return "?";
}

std::string_view to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::categorical: return "categorical";
    case FieldKind::text: return "text";
    case FieldKind::anonymous_id: return "anonymous_id";
  }
  return "?";
}

Side parse_side(std::string_view s) {
  if (s == "user") return Side::user;
  if (s == "item") return Side::item;
  if (s == "context") return Side::context;
  throw DataError("unknown field side '" + std::string(s) + "'");
}

FieldKind parse_field_kind(std::string_view s) {
  if (s == "categorical") return FieldKind::categorical;
  if (s == "text") return FieldKind::text;
  if (s == "anonymous_id") return FieldKind::anonymous_id;
  throw DataError("unknown field kind '" + std::string(s) + "'");
}

Schema::Schema(std::vector<FieldSchema> fields) : fields_(std::move(fields)) {
  std::set<std::string> seen;
  for (const FieldSchema& f : fields_) {
    if (f.name.empty()) throw DataError("schema: empty field name");
    if (!seen.insert(f.name).second) throw DataError("schema: duplicate field '" + f.name + "'");
    for (const char* reserved : {"domain_id", "row_id", "label"}) {
      if (f.name == reserved) throw DataError("schema: field name '" + f.name + "' is reserved");
    }
  }
}

std::optional<std::size_t> Schema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    if (fields_[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> Schema::indices_of(FieldKind kind) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    if (fields_[i].kind == kind) out.push_back(i);
  }
  return out;
}

nlohmann::json Schema::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const FieldSchema& f : fields_) {
    nlohmann::json j{{"name", f.name},
                     {"side", std::string(to_string(f.side))},
                     {"kind", std::string(to_string(f.kind))}};
    if (f.vocabulary) j["vocabulary"] = *f.vocabulary;
    arr.push_back(std::move(j));
  }
  return arr;
}

Schema Schema::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw DataError("schema: expected a JSON list of fields");
  std::vector<FieldSchema> fields;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("name") || !item.contains("side") ||
        !item.contains("kind")) {
      throw DataError("schema: each field needs name, side and kind");
    }
    FieldSchema f;
    f.name = item.at("name").get<std::string>();
    f.side = parse_side(item.at("side").get<std::string>());
    f.kind = parse_field_kind(item.at("kind").get<std::string>());
    if (item.contains("vocabulary") && !item.at("vocabulary").is_null()) {
      f.vocabulary = item.at("vocabulary").get<std::vector<std::string>>();
    }
    fields.push_back(std::move(f));
  }
  return Schema(std::move(fields));
}

SplitName parse_split(std::string_view s) {
  if (s == "train") return SplitName::train;
  if (s == "valid") return SplitName::valid;
  if (s == "test") return SplitName::test;
  throw ConfigError("unknown split '" + std::string(s) + "' (expected train|valid|test)");
}

const std::vector<InstanceRecord>& split_of(const DomainDataset& d, SplitName which) {
  switch (which) {
    case SplitName::train: return d.splits.train;
    case SplitName::valid: return d.splits.valid;
    case SplitName::test: return d.splits.test;
  }
  return d.splits.test;
}

std::optional<int> map_rating_to_label(int rating) {
  if (rating < 1 || rating > 5) {
    throw DataError("rating " + std::to_string(rating) + " outside 1..5");
  }
  if (rating >= 4) return 1;
  if (rating <= 2) return 0;
  return std::nullopt;
}

Partition split(std::vector<InstanceRecord> records, std::uint64_t seed) {
  if (records.size() < 10) {
    throw DataError("split: need at least 10 records, got " + std::to_string(records.size()));
  }
  std::mt19937_64 rng(seed);
  std::shuffle(records.begin(), records.end(), rng);
  const std::size_t n_valid = records.size() / 10;
  const std::size_t n_test = records.size() / 10;
  const std::size_t n_train = records.size() - n_valid - n_test;
  Partition p;
  auto it = std::make_move_iterator(records.begin());
  p.train.assign(it, it + static_cast<std::ptrdiff_t>(n_train));
  p.valid.assign(it + static_cast<std::ptrdiff_t>(n_train),
                 it + static_cast<std::ptrdiff_t>(n_train + n_valid));
  p.test.assign(it + static_cast<std::ptrdiff_t>(n_train + n_valid),
                std::make_move_iterator(records.end()));
  return p;
}

void validate_record(const InstanceRecord& record, const Schema& schema) {
  if (record.label != 0 && record.label != 1) {
    throw DataError("row " + std::to_string(record.row_id) + ": label " +
                    std::to_string(record.label) + " not in {0,1}");
  }
  if (record.values.size() != schema.size()) {
    throw DataError("row " + std::to_string(record.row_id) + ": has " +
                    std::to_string(record.values.size()) + " values, schema declares " +
                    std::to_string(schema.size()));
  }
}

}  // namespace ufin
