#include "ufin/pipeline/config.hpp"

#include <charconv>
#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>

#include "ufin/error.hpp"
#include "ufin/numeric/random.hpp"

namespace ufin {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_int(const std::string& key, const std::string& v) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::logic_error&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> parse_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const std::string& s : v) out += (out.empty() ? "" : ",") + s;
  return out;
}

std::string num(double v) { return fmt::format("{}", v); }

struct Entry {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define UFIN_INT(KEY, FIELD)                                                                    \
  {KEY,                                                                                         \
   {[](RunConfig& c, const std::string& v) { c.FIELD = parse_int<decltype(c.FIELD)>(KEY, v); }, \
    [](const RunConfig& c) { return std::to_string(c.FIELD); }}}
#define UFIN_REAL(KEY, FIELD)                                                         \
  {KEY,                                                                               \
   {[](RunConfig& c, const std::string& v) { c.FIELD = parse_double(KEY, v); },       \
    [](const RunConfig& c) { return num(c.FIELD); }}}
#define UFIN_BOOL(KEY, FIELD)                                                         \
  {KEY,                                                                               \
   {[](RunConfig& c, const std::string& v) { c.FIELD = parse_bool(KEY, v); },         \
    [](const RunConfig& c) { return std::string(c.FIELD ? "true" : "false"); }}}
#define UFIN_PATH(KEY, FIELD)                                                         \
  {KEY,                                                                               \
   {[](RunConfig& c, const std::string& v) { c.FIELD = v; },                          \
    [](const RunConfig& c) { return c.FIELD.string(); }}}

const std::map<std::string, Entry>& entries() {
  static const std::map<std::string, Entry> table = {
      UFIN_INT("seed", seed),
      UFIN_PATH("paths.data", paths.data),
      UFIN_PATH("paths.cache", paths.cache),
      UFIN_PATH("paths.teachers", paths.teachers),
      UFIN_PATH("paths.model", paths.model),
      UFIN_PATH("paths.reports", paths.reports),
      UFIN_INT("synth.domains", synth.domains),
      UFIN_INT("synth.users", synth.users),
      UFIN_INT("synth.items", synth.items),
      UFIN_INT("synth.interactions", synth.interactions),
      UFIN_INT("synth.topics", synth.topics),
      UFIN_INT("synth.words_per_topic", synth.words_per_topic),
      UFIN_INT("synth.description_words", synth.description_words),
      UFIN_REAL("synth.occupation_weight", synth.occupation_weight),
      UFIN_REAL("synth.individual_weight", synth.individual_weight),
      UFIN_REAL("synth.dominant_topic_share", synth.dominant_topic_share),
      UFIN_REAL("synth.order2_weight", synth.order2_weight),
      UFIN_REAL("synth.order3_weight", synth.order3_weight),
      UFIN_REAL("synth.item_bias_std", synth.item_bias_std),
      UFIN_REAL("synth.scale", synth.scale),
      UFIN_REAL("synth.item_popularity", synth.item_popularity),
      UFIN_REAL("synth.user_popularity", synth.user_popularity),
      UFIN_REAL("synth.noise", synth.noise),
      {"synth.label_mode",
       {[](RunConfig& c, const std::string& v) {
          if (v == "bernoulli") c.synth.label_mode = LabelMode::bernoulli;
          else if (v == "threshold") c.synth.label_mode = LabelMode::threshold;
          else throw ConfigError("synth.label_mode: expected bernoulli or threshold, got '" + v + "'");
        },
        [](const RunConfig& c) {
          return std::string(c.synth.label_mode == LabelMode::bernoulli ? "bernoulli" : "threshold");
        }}},
      UFIN_INT("model.experts", model.experts),
      UFIN_INT("model.top_k", model.top_k),
      UFIN_INT("model.n_u", model.n_u),
      UFIN_INT("model.n_o", model.n_o),
      UFIN_INT("model.d", model.d),
      UFIN_INT("model.d_v", model.d_v),
      UFIN_INT("model.d_a", model.d_a),
      UFIN_BOOL("model.theorem_mode", model.theorem_mode),
      {"model.anonymous_fields",
       {[](RunConfig& c, const std::string& v) { c.model.anonymous_fields = parse_list(v); },
        [](const RunConfig& c) { return join(c.model.anonymous_fields); }}},
      UFIN_REAL("train.lr", train.lr),
      UFIN_REAL("train.weight_decay", train.weight_decay),
      UFIN_INT("train.batch_size", train.batch_size),
      UFIN_INT("train.epochs", train.epochs),
      UFIN_INT("train.patience", train.patience),
      {"train.mode",
       {[](RunConfig& c, const std::string& v) { c.mode = parse_head_mode(v); },
        [](const RunConfig& c) { return std::string(to_string(c.mode)); }}},
      UFIN_BOOL("train.distill", distill),
      UFIN_REAL("teacher.lr", teacher.train.lr),
      UFIN_REAL("teacher.weight_decay", teacher.train.weight_decay),
      UFIN_INT("teacher.batch_size", teacher.train.batch_size),
      UFIN_INT("teacher.epochs", teacher.train.epochs),
      UFIN_INT("teacher.patience", teacher.train.patience),
      UFIN_INT("teacher.d", teacher.d),
      UFIN_INT("teacher.n_o", teacher.n_o),
      {"prompt.variant",
       {[](RunConfig& c, const std::string& v) { c.prompt.variant = parse_prompt_variant(v); },
        [](const RunConfig& c) { return std::string(to_string(c.prompt.variant)); }}},
      {"prompt.drop_fields",
       {[](RunConfig& c, const std::string& v) { c.prompt.drop_fields = parse_list(v); },
        [](const RunConfig& c) { return join(c.prompt.drop_fields); }}},
      {"prompt.preset",
       {[](RunConfig& c, const std::string& v) {
          PhraseTable::preset(v);
          c.prompt.preset = v;
        },
        [](const RunConfig& c) { return c.prompt.preset; }}},
      {"encoder.backend",
       {[](RunConfig& c, const std::string& v) {
          if (v != "hash" && v != "cache") {
            throw ConfigError("encoder.backend: expected hash or cache, got '" + v + "'");
          }
          c.encoder.backend = v;
        },
        [](const RunConfig& c) { return c.encoder.backend; }}},
      UFIN_INT("encoder.hash_seed", encoder.hash_seed),
  };
  return table;
}

#undef UFIN_INT
#undef UFIN_REAL
#undef UFIN_BOOL
#undef UFIN_PATH

}  // namespace

RunConfig::RunConfig() {
  teacher.train.lr = 1e-2;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& table = entries();
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(*this, trim(value));
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      static const char* kSections[] = {"paths", "synth", "model", "train", "teacher", "prompt", "encoder"};
      if (std::find(std::begin(kSections), std::end(kSections), section) == std::end(kSections)) {
        throw ConfigError(where + "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string full = section.empty() ? key : section + "." + key;
    try {
      set(full, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
}

std::vector<std::string> RunConfig::known_keys() {
  std::vector<std::string> out;
  for (const auto& [k, _] : entries()) out.push_back(k);
  return out;
}

std::string RunConfig::dump() const {
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> by_section;
  std::string out;
  for (const auto& [k, e] : entries()) {
    const auto dot = k.find('.');
    if (dot == std::string::npos) {
      out += k + " = " + e.get(*this) + "\n";
    } else {
      by_section[k.substr(0, dot)].emplace_back(k.substr(dot + 1), e.get(*this));
    }
  }
  for (const auto& [section, items] : by_section) {
    out += "\n[" + section + "]\n";
    for (const auto& [k, v] : items) out += k + " = " + v + "\n";
  }
  return out;
}

void RunConfig::validate() const {
  synth.validate();
  train.validate();
  teacher.train.validate();
  if (model.n_u == 0 || model.n_o == 0 || model.d < 2 || model.d_v < 2 || model.d_a == 0) {
    throw ConfigError("model: n_u, n_o, d_a must be positive and d, d_v at least 2");
  }
  if (teacher.d < 1 || teacher.n_o < 1) throw ConfigError("teacher: d and n_o must be positive");
  if (!prompt.drop_fields.empty() && prompt.variant != PromptVariant::prompt3) {
    throw ConfigError("prompt.drop_fields is only valid with prompt.variant = prompt3");
  }
  if (encoder.backend == "cache" && paths.cache.empty()) {
    throw ConfigError("encoder.backend = cache requires paths.cache");
  }
}

std::uint64_t RunConfig::stage_seed(std::string_view stage) const { return derive_seed(seed, stage); }

}  // namespace ufin
