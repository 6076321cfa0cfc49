#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ufin/data/dataset.hpp"
#include "ufin/encoder/embedding_cache.hpp"
#include "ufin/encoder/fusion.hpp"
#include "ufin/interaction/adaptor.hpp"
#include "ufin/interaction/moe.hpp"

namespace ufin {

// UFIN_t scores sigmoid(zeta); UFIN_t+f scores sigmoid(zeta + zeta_f).
enum class HeadMode { text, text_features };
HeadMode parse_head_mode(std::string_view s);  // "t" or "t+f"
std::string_view to_string(HeadMode mode);

double predict(double zeta, std::optional<double> zeta_f = std::nullopt);

struct ModelConfig {
  std::size_t experts = 0;  // L; 0 means one per training domain
  std::size_t top_k = 0;    // 0 means the smallest K above ceil(L/2)
  std::size_t n_u = 7;
  std::size_t n_o = 7;
  std::size_t d = 16;
  std::size_t d_v = 64;
  std::size_t d_a = 16;
  bool theorem_mode = true;
  std::vector<std::string> anonymous_fields{"user_id"};

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

using SchemaMap = std::map<int, Schema>;
SchemaMap schemas_of(std::span<const DomainDataset> domains);

/// Model inputs for one mini-batch.
struct Batch {
  std::size_t size = 0;
  Tensor pooled;  // [B, d_V] pooled token sums
  std::vector<AnonymousIds> anonymous;
  std::vector<AnonymousIds> adaptor;
  std::vector<std::int64_t> adaptor_rows;
  std::vector<int> labels;
  std::vector<int> domains;
  std::vector<std::uint64_t> row_ids;
};

class UfinModel {
 public:
  struct Forward {
    Var s;           // normalised text vector
    Var z;           // semantic fusion output
    Var z_tilde;     // after anonymous fusion
    Var universal;   // [B, n_u * d]
    Var zeta;        // interaction logit [B, 1]
    Var zeta_f;      // adaptor logit, invalid in text mode
    Var logit;       // zeta (+ zeta_f)
    Var fusion_gate;
    Var moe_gate;
    std::vector<std::vector<std::size_t>> selected;
  };

  UfinModel(ModelConfig config, std::vector<int> domains, std::vector<Vocabulary> anonymous_vocab,
            FeatureAdaptor adaptor, std::uint64_t seed);

  // Vocabularies and adaptor keys come from the train splits.
  static UfinModel build(ModelConfig config, std::span<const DomainDataset> domains,
                         std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const std::vector<int>& domains() const { return domains_; }

  Batch make_batch(std::span<const InstanceRecord* const> records, const SchemaMap& schemas,
                   const EmbeddingCache& cache) const;
  Forward forward(Tape& tape, const Batch& batch, HeadMode mode);

  // Adaptor parameters are left out when include_adaptor is false.
  std::vector<ParamRef> parameters(bool include_adaptor = true);

  // Writes the UFNP checkpoint at `path` and vocabularies to `path`.json.
  void save(const std::filesystem::path& path);
  static UfinModel load(const std::filesystem::path& path);

  TextNorm text_norm;
  SemanticFusion fusion;
  AnonymousTable anonymous;
  UniversalDecoder decoder;
  InteractionMoE moe;
  FeatureAdaptor adaptor;

 private:
  UfinModel(ModelConfig config, const std::vector<int>& domains,
            std::vector<Vocabulary> anonymous_vocab, FeatureAdaptor adaptor, Rng rng);

  ModelConfig config_;
  std::vector<int> domains_;
};

struct Scores {
  std::vector<double> zeta;
  std::vector<double> zeta_f;  // empty in text mode
  std::vector<double> prob;
  std::vector<int> labels;
  std::vector<int> domains;
  // Per domain, how often each expert was selected by the interaction gate.
  std::map<int, std::vector<std::size_t>> selection_counts;
};

Scores score(UfinModel& model, std::span<const InstanceRecord* const> records,
             const SchemaMap& schemas, const EmbeddingCache& cache, HeadMode mode,
             std::size_t batch_size = 1024);

// CSV: row_id, domain_id, then e_j_k for field j and component k.
void export_universal(std::ostream& out, UfinModel& model,
                      std::span<const InstanceRecord* const> records, const SchemaMap& schemas,
                      const EmbeddingCache& cache, std::size_t batch_size = 1024);

std::vector<const InstanceRecord*> pointers(std::span<const InstanceRecord> records);

}  // namespace ufin
