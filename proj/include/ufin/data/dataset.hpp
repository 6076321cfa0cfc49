#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace ufin {

enum class Side { user, item, context };
enum class FieldKind { categorical, text, anonymous_id };

std::string_view to_string(Side side);
std::string_view to_string(FieldKind kind);
Side parse_side(std::string_view s);
FieldKind parse_field_kind(std::string_view s);

struct FieldSchema {
  std::string name;
  Side side = Side::item;
  FieldKind kind = FieldKind::categorical;
  std::optional<std::vector<std::string>> vocabulary;

  bool operator==(const FieldSchema&) const = default;
};

/// Ordered list of feature fields for one domain. Field names are unique.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<FieldSchema> fields);

  const std::vector<FieldSchema>& fields() const { return fields_; }
  std::size_t size() const { return fields_.size(); }
  const FieldSchema& operator[](std::size_t i) const { return fields_[i]; }
  std::optional<std::size_t> index_of(std::string_view name) const;
  // Indices of fields with the given kind, in declaration order.
  std::vector<std::size_t> indices_of(FieldKind kind) const;

  nlohmann::json to_json() const;
  static Schema from_json(const nlohmann::json& j);

  bool operator==(const Schema&) const = default;

 private:
  std::vector<FieldSchema> fields_;
};

/// One labeled CTR event. `values` follows the schema's field order; an empty
/// string marks a missing value.
struct InstanceRecord {
  int domain_id = 0;
  std::uint64_t row_id = 0;
  int label = 0;
  std::vector<std::string> values;

  bool operator==(const InstanceRecord&) const = default;
};

struct Partition {
  std::vector<InstanceRecord> train;
  std::vector<InstanceRecord> valid;
  std::vector<InstanceRecord> test;
};

struct DomainDataset {
  int domain_id = 0;
  std::string name;
  std::string item_noun = "item";
  Schema schema;
  Partition splits;

  std::size_t total_rows() const {
    return splits.train.size() + splits.valid.size() + splits.test.size();
  }
};

enum class SplitName { train, valid, test };
SplitName parse_split(std::string_view s);
const std::vector<InstanceRecord>& split_of(const DomainDataset& d, SplitName which);

// Ratings 4-5 are clicks, 1-2 are non-clicks, 3 is dropped (nullopt).
// Ratings outside 1..5 throw DataError.
std::optional<int> map_rating_to_label(int rating);

// Seeded shuffle, then 10% valid, 10% test (floor), remainder train.
// Requires at least 10 records.
Partition split(std::vector<InstanceRecord> records, std::uint64_t seed);

void validate_record(const InstanceRecord& record, const Schema& schema);

}  // namespace ufin
