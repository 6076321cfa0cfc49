#include "ufin/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "ufin/error.hpp"
#include "ufin/numeric/ops.hpp"
#include "ufin/numeric/random.hpp"

namespace ufin {

namespace {

const std::vector<std::string> kOccupations = {
    "engineer", "artist", "teacher", "doctor", "lawyer", "farmer",
    "writer",   "chef",   "nurse",   "pilot",  "student", "scientist"};
const std::vector<std::string> kGenders = {"female", "male"};
const std::vector<std::string> kAges = {"under-18", "18-24", "25-34", "35-44", "45-plus"};
const std::vector<std::string> kPrices = {"low", "medium", "high"};
const std::vector<std::string> kTimes = {"morning", "afternoon", "evening", "night"};
const std::vector<std::string> kNouns = {"book", "movie", "game", "song", "toy", "gadget", "recipe"};
const std::vector<std::string> kDomainNames = {"books", "movies", "games", "music",
                                               "toys",  "gadgets", "food"};

class WordFactory {
 public:
  explicit WordFactory(Rng& rng) : rng_(rng) {
    for (const auto* list : {&kOccupations, &kGenders, &kPrices, &kTimes, &kNouns}) {
      for (const std::string& w : *list) used_.insert(w);
    }
  }

  std::string make(int syllables) {
    static const char* kOnsets = "bdfgklmnprstvz";
    static const char* kVowels = "aeiou";
    std::uniform_int_distribution<int> onset(0, 13), vowel(0, 4);
    for (int attempt = 0; attempt < 1000; ++attempt) {
      std::string w;
      for (int s = 0; s < syllables; ++s) {
        w += kOnsets[onset(rng_)];
        w += kVowels[vowel(rng_)];
      }
      if (used_.insert(w).second) return w;
    }
    throw std::runtime_error("synth: pseudo-word space exhausted");
  }

 private:
  Rng& rng_;
  std::set<std::string> used_;
};

std::vector<double> zero_sum_unit(std::vector<double> v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double norm = 0.0;
  for (double& x : v) {
    x -= mean;
    norm += x * x;
  }
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

std::string occupation_name(int k) {
  if (k < static_cast<int>(kOccupations.size())) return kOccupations[k];
  return "occupation" + std::to_string(k);
}

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, v.size() - 1);
  return v[dist(rng)];
}

}  // namespace

void SynthConfig::validate() const {
  if (topics < 2) throw ConfigError("synth: topics must be >= 2");
  if (items < topics || users < topics) {
    throw ConfigError("synth: user and item vocabularies must be at least the topic count");
  }
  if (words_per_topic < 1 || description_words < 1) {
    throw ConfigError("synth: words_per_topic and description_words must be positive");
  }
  if (domains < 1) throw ConfigError("synth: need at least one domain");
  if (interactions < 10 || static_cast<std::uint64_t>(interactions) >= kRowIdStride) {
    throw ConfigError("synth: interactions must be in [10, 1e7)");
  }
  if (noise < 0.0 || noise > 1.0) throw ConfigError("synth: noise must be in [0,1]");
  if (item_popularity < 0.0 || user_popularity < 0.0) {
    throw ConfigError("synth: popularity exponents must be non-negative");
  }
  if (dominant_topic_share < 0.0 || dominant_topic_share > 1.0) {
    throw ConfigError("synth: dominant_topic_share must be in [0,1]");
  }
}

Schema synthetic_schema() {
  return Schema({
      {"user_id", Side::user, FieldKind::anonymous_id, std::nullopt},
      {"gender", Side::user, FieldKind::categorical, kGenders},
      {"age", Side::user, FieldKind::categorical, kAges},
      {"occupation", Side::user, FieldKind::categorical, std::nullopt},
      {"item_id", Side::item, FieldKind::anonymous_id, std::nullopt},
      {"title", Side::item, FieldKind::text, std::nullopt},
      {"description", Side::item, FieldKind::text, std::nullopt},
      {"price", Side::item, FieldKind::categorical, kPrices},
      {"time", Side::context, FieldKind::categorical, kTimes},
  });
}

SynthResult synth_generate(const SynthConfig& config, std::uint64_t seed) {
  config.validate();
  const int T = config.topics;
  Rng world_rng(derive_seed(seed, "synth/world"));
  WordFactory words(world_rng);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Topic lexicon shared by every domain.
  std::vector<std::vector<std::string>> lexicon(T);
  for (auto& topic_words : lexicon)
    for (int w = 0; w < config.words_per_topic; ++w) topic_words.push_back(words.make(2));

  std::vector<std::vector<double>> occupation_pref(T);
  for (int k = 0; k < T; ++k) {
    std::vector<double> v(T, 0.0);
    v[k] = 1.0;
    occupation_pref[k] = zero_sum_unit(v);
  }

  std::vector<std::vector<double>> context_latent(kTimes.size());
  for (auto& c : context_latent) {
    c.resize(T);
    for (double& x : c) x = normal(world_rng);
  }

  struct User {
    std::string gender, age;
    int occupation = 0;
    std::vector<double> pref;
  };
  std::vector<User> users(config.users);
  std::uniform_int_distribution<int> topic_dist(0, T - 1);
  for (User& u : users) {
    u.gender = pick(kGenders, world_rng);
    u.age = pick(kAges, world_rng);
    u.occupation = topic_dist(world_rng);
    std::vector<double> indiv(T);
    for (double& x : indiv) x = normal(world_rng);
    indiv = zero_sum_unit(indiv);
    u.pref.resize(T);
    for (int t = 0; t < T; ++t) {
      u.pref[t] = config.occupation_weight * occupation_pref[u.occupation][t] +
                  config.individual_weight * indiv[t];
    }
  }

  std::vector<double> user_weight(config.users);
  for (int u = 0; u < config.users; ++u)
    user_weight[u] = std::pow(static_cast<double>(u + 1), -config.user_popularity);

  const Schema schema = synthetic_schema();
  SynthResult result;
  std::exponential_distribution<double> expo(1.0);
  for (int d = 0; d < config.domains; ++d) {
    Rng rng(derive_seed(seed, "synth/domain/" + std::to_string(d)));
    std::normal_distribution<double> item_normal(0.0, 1.0);
    struct Item {
      std::string id, title, description, price;
      std::vector<double> centred;
      double bias = 0.0;
    };
    std::vector<Item> items(config.items);
    for (int i = 0; i < config.items; ++i) {
      Item& it = items[i];
      it.id = "d" + std::to_string(d) + "_i" + std::to_string(i);
      std::string title = words.make(3);
      title[0] = static_cast<char>(title[0] - 'a' + 'A');
      it.title = std::move(title);
      std::vector<double> mix(T);
      double total = 0.0;
      for (double& x : mix) total += (x = expo(rng));
      const int dominant = topic_dist(rng);
      for (int t = 0; t < T; ++t) {
        mix[t] = (1.0 - config.dominant_topic_share) * mix[t] / total +
                 (t == dominant ? config.dominant_topic_share : 0.0);
      }
      std::discrete_distribution<int> topic_of_word(mix.begin(), mix.end());
      std::uniform_int_distribution<int> word_of_topic(0, config.words_per_topic - 1);
      for (int w = 0; w < config.description_words; ++w) {
        if (w) it.description += ' ';
        it.description += lexicon[topic_of_word(rng)][word_of_topic(rng)];
      }
      it.centred.resize(T);
      for (int t = 0; t < T; ++t) it.centred[t] = mix[t] - 1.0 / T;
      it.bias = config.item_bias_std * item_normal(rng);
      it.price = pick(kPrices, rng);
    }

    std::vector<InstanceRecord> records;
    records.reserve(config.interactions);
    std::vector<double> item_weight(config.items);
    for (int i = 0; i < config.items; ++i)
      item_weight[i] = std::pow(static_cast<double>(i + 1), -config.item_popularity);
    std::discrete_distribution<int> item_dist(item_weight.begin(), item_weight.end());
    std::discrete_distribution<int> user_dist(user_weight.begin(), user_weight.end());
    std::uniform_int_distribution<std::size_t> time_dist(0, kTimes.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int n = 0; n < config.interactions; ++n) {
      const int uid = user_dist(rng);
      const int iid = item_dist(rng);
      const std::size_t slot = time_dist(rng);
      const User& u = users[uid];
      const Item& it = items[iid];
      double pair = 0.0, triple = 0.0;
      for (int t = 0; t < T; ++t) {
        pair += u.pref[t] * it.centred[t];
        triple += u.pref[t] * it.centred[t] * context_latent[slot][t];
      }
      const double logit =
          config.scale * (config.order2_weight * pair +
                          config.order3_weight * std::sqrt(static_cast<double>(T)) * triple) +
          it.bias;
      const double p = (1.0 - config.noise) * sigmoid(logit) + 0.5 * config.noise;
      const double draw = unit(rng);
      InstanceRecord rec;
      rec.domain_id = d;
      rec.row_id = static_cast<std::uint64_t>(d) * kRowIdStride + static_cast<std::uint64_t>(n);
      rec.label = config.label_mode == LabelMode::bernoulli ? (draw < p ? 1 : 0) : (p > 0.5 ? 1 : 0);
      rec.values = {"u" + std::to_string(uid), u.gender,       u.age,
                    occupation_name(u.occupation), it.id,      it.title,
                    it.description,                it.price,   kTimes[slot]};
      result.p_star.emplace(rec.row_id, p);
      records.push_back(std::move(rec));
    }

    DomainDataset dataset;
    dataset.domain_id = d;
    dataset.name = kDomainNames[d % kDomainNames.size()];
    if (d >= static_cast<int>(kDomainNames.size())) dataset.name += std::to_string(d);
    dataset.item_noun = kNouns[d % kNouns.size()];
    dataset.schema = schema;
    dataset.splits = split(std::move(records), derive_seed(seed, "synth/split/" + std::to_string(d)));
    result.domains.push_back(std::move(dataset));
  }
  return result;
}

double bayes_auc_ceiling(std::span<const double> p_star) {
  std::vector<double> p(p_star.begin(), p_star.end());
  std::sort(p.begin(), p.end());
  double sum_p = 0.0, sum_q = 0.0, self = 0.0;
  for (double v : p) {
    sum_p += v;
    sum_q += 1.0 - v;
    self += v * (1.0 - v);
  }
  const double denom = sum_p * sum_q - self;
  if (!(denom > 0.0)) throw std::invalid_argument("bayes_auc_ceiling: degenerate p*");
  double concordant = 0.0, lower_q = 0.0;
  for (std::size_t i = 0; i < p.size();) {
    std::size_t j = i;
    while (j < p.size() && p[j] == p[i]) ++j;
    const double g = static_cast<double>(j - i);
    const double v = p[i];
    concordant += g * v * lower_q + 0.5 * v * (1.0 - v) * g * (g - 1.0);
    lower_q += g * (1.0 - v);
    i = j;
  }
  return concordant / denom;
}

void write_truth(const std::filesystem::path& path, const SynthResult& result) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "row_id\tp_star\n";
  char buf[64];
  for (const DomainDataset& d : result.domains) {
    for (const auto* part : {&d.splits.train, &d.splits.valid, &d.splits.test}) {
      for (const InstanceRecord& r : *part) {
        std::snprintf(buf, sizeof buf, "%.17g", result.p_star.at(r.row_id));
        out << r.row_id << '\t' << buf << '\n';
      }
    }
  }
}

std::unordered_map<std::uint64_t, double> read_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::unordered_map<std::uint64_t, double> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::uint64_t id = 0;
    double p = 0.0;
    if (!(row >> id >> p)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed truth row");
    }
    out.emplace(id, p);
  }
  return out;
}

}  // namespace ufin
