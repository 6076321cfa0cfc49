#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ufin/data/synth.hpp"
#include "ufin/interaction/model.hpp"
#include "ufin/prompting/prompt.hpp"
#include "ufin/training/trainer.hpp"

namespace ufin {

struct PathsConfig {
  std::filesystem::path data = "data";
  std::filesystem::path cache;  // empty: hash-encode in memory
  std::filesystem::path teachers = "teachers";
  std::filesystem::path model = "model/ufin.ufnp";
  std::filesystem::path reports = "reports";
};

struct PromptConfig {
  PromptVariant variant = PromptVariant::base;
  std::vector<std::string> drop_fields;
  std::string preset = "default";
};

struct EncoderConfig {
  std::string backend = "hash";  // hash | cache
  std::uint64_t hash_seed = 0;
};

struct TeacherConfig {
  TrainConfig train;
  std::size_t d = 16;
  std::size_t n_o = 7;
};

/// Everything a run needs. Read from a key=value file with [section]
/// headers; keys outside a section are top level (seed). Unknown sections or
/// keys raise ConfigError.
struct RunConfig {
  std::uint64_t seed = 42;
  PathsConfig paths;
  SynthConfig synth;
  ModelConfig model;
  TrainConfig train;
  HeadMode mode = HeadMode::text_features;
  bool distill = true;
  TeacherConfig teacher;
  PromptConfig prompt;
  EncoderConfig encoder;

  RunConfig();

  // "section.key" (or "seed") = value.
  void set(const std::string& key, const std::string& value);
  void load_file(const std::filesystem::path& path);
  static std::vector<std::string> known_keys();
  // Canonical key=value rendering of every setting.
  std::string dump() const;
  void validate() const;

  // Stage seed derived from the root seed.
  std::uint64_t stage_seed(std::string_view stage) const;
};

}  // namespace ufin
