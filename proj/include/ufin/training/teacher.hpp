#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ufin/interaction/euler.hpp"
#include "ufin/training/trainer.hpp"

namespace ufin {

/// Per-domain guided network: ID embeddings of every categorical and
/// anonymous field feeding one Euler interaction layer.
class TeacherModel {
 public:
  TeacherModel(int domain, std::vector<std::string> fields, std::vector<Vocabulary> vocabularies,
               std::size_t d, std::size_t n_o, std::uint64_t seed);

  // Vocabularies come from the train split. Throws DataError for an empty
  // domain.
  static TeacherModel build(const DomainDataset& data, std::size_t d, std::size_t n_o,
                            std::uint64_t seed);

  int domain() const { return domain_; }
  const std::vector<std::string>& fields() const { return fields_; }

  std::vector<AnonymousIds> inputs(std::span<const InstanceRecord* const> records,
                                   const Schema& schema) const;
  Var forward(Tape& tape, std::span<const AnonymousIds> ids);  // -> [B, 1]
  std::vector<double> logits(std::span<const InstanceRecord* const> records, const Schema& schema,
                             std::size_t batch_size = 1024);

  std::vector<ParamRef> parameters();
  void save(const std::filesystem::path& path);
  static TeacherModel load(const std::filesystem::path& path);

  std::vector<Tensor> tables;  // [vocab, d] per field
  EulerExpert expert;

 private:
  int domain_;
  std::vector<std::string> fields_;
  std::vector<Vocabulary> vocabularies_;
  std::size_t d_;
};

History pretrain_teacher(TeacherModel& teacher, const DomainDataset& data,
                         const TrainConfig& config, const EpochHook& hook = {});

// Guidance logits of each domain's teacher on that domain's train split.
// Throws DataError when a domain has no teacher.
Guidance teacher_guidance(std::span<TeacherModel> teachers, std::span<const DomainDataset> domains);

}  // namespace ufin
