#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ufin/data/dataset.hpp"
#include "ufin/data/vocabulary.hpp"
#include "ufin/encoder/fusion.hpp"

namespace ufin {

/// Logistic-regression head over one-hot raw ID and categorical features.
///
/// Weights are keyed by (domain, value) so every domain has its own table;
/// with `shared` set the key drops the domain and one model covers all
/// domains. Untrained keys look up as -1 and contribute nothing.
class FeatureAdaptor {
 public:
  FeatureAdaptor() = default;
  FeatureAdaptor(std::vector<std::string> fields, std::vector<Vocabulary> keys,
                 std::vector<int> domains, bool shared);

  // Fields are the categorical and anonymous_id fields of the schemas, keys
  // come from the train splits.
  static FeatureAdaptor build(std::span<const DomainDataset> domains, bool shared);

  static std::string key(int domain, std::string_view value, bool shared);

  const std::vector<std::string>& fields() const { return fields_; }
  const Vocabulary& keys(std::size_t field) const { return keys_.at(field); }
  const std::vector<int>& domains() const { return domains_; }
  bool shared() const { return shared_; }

  std::int64_t lookup(std::size_t field, int domain, std::string_view value) const;
  // Row of the bias table, or -1 for a domain the adaptor was not built on.
  std::int64_t domain_row(int domain) const;

  // ids: one index list per field (AnonymousIds::field indexes fields()).
  // Throws ConfigError if any row belongs to an unknown domain.
  Var forward(Tape& tape, std::span<const AnonymousIds> ids, std::span<const std::int64_t> rows);
  // Same score for a single record without a tape.
  double logit(const InstanceRecord& record, const Schema& schema) const;

  void append_parameters(std::vector<ParamRef>& out, const std::string& prefix);

  struct Inputs {
    std::vector<AnonymousIds> ids;
    std::vector<std::int64_t> rows;
  };
  // Schema columns are resolved per record domain; a field missing from a
  // schema looks up as -1.
  Inputs inputs(std::span<const InstanceRecord* const> records,
                const std::map<int, Schema>& schemas) const;

  std::vector<Tensor> weights;  // [keys, 1] per field
  Tensor bias;                  // [domains, 1]

 private:
  std::vector<std::string> fields_;
  std::vector<Vocabulary> keys_;
  std::vector<int> domains_;
  bool shared_ = false;
};

}  // namespace ufin
