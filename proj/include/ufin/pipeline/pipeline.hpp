#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ufin/encoder/embedding_cache.hpp"
#include "ufin/encoder/hash_encoder.hpp"
#include "ufin/eval/metrics.hpp"
#include "ufin/pipeline/config.hpp"
#include "ufin/training/teacher.hpp"

namespace ufin {

using Logger = std::function<void(const std::string&)>;

PromptTemplate make_template(const PromptConfig& config);

// Renders every record of every split. Rows are ordered by domain, then
// train / valid / test, then file order.
std::vector<std::pair<std::uint64_t, std::string>> render_all(std::span<const DomainDataset> domains,
                                                              const PromptTemplate& tmpl);
void write_prompt_dump(const std::filesystem::path& path,
                       std::span<const std::pair<std::uint64_t, std::string>> prompts);

EmbeddingCache hash_encode(std::span<const DomainDataset> domains, const PromptTemplate& tmpl,
                           const HashEncoder& encoder);

// Hash-encodes in memory, or reads paths.cache for the cache backend and
// checks d_V and coverage of every row.
EmbeddingCache resolve_cache(const RunConfig& config, std::span<const DomainDataset> domains);
void check_cache_covers(const EmbeddingCache& cache, std::span<const DomainDataset> domains);

std::filesystem::path teacher_path(const std::filesystem::path& dir, int domain_id);

std::vector<TeacherModel> pretrain_teachers(const RunConfig& config,
                                            std::span<const DomainDataset> domains,
                                            std::vector<History>* histories = nullptr,
                                            const Logger& log = {});
// Throws DataError naming the first missing teacher file.
std::vector<TeacherModel> load_teachers(const std::filesystem::path& dir,
                                        std::span<const DomainDataset> domains);

struct TrainResult {
  UfinModel model;
  History history;
};

// Builds a model on `domains`, optionally warm-started from `init` (shared
// parameters are copied by name), and trains it.
TrainResult train_model(const RunConfig& config, std::span<const DomainDataset> domains,
                        const EmbeddingCache& cache, std::span<TeacherModel> teachers,
                        const std::filesystem::path& init = {}, const Logger& log = {});

// Scores one split of every domain. Zero-shot mode requires mode t.
EvalReport evaluate_model(UfinModel& model, std::span<const DomainDataset> domains,
                          const EmbeddingCache& cache, SplitName split, HeadMode mode,
                          EvalMode eval_mode);

void write_report(const std::filesystem::path& stem, const EvalReport& report);

}  // namespace ufin
