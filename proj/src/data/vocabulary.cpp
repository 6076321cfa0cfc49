#include "ufin/data/vocabulary.hpp"

#include "ufin/error.hpp"

namespace ufin {

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  for (std::string& t : tokens) {
    if (lookup(t) >= 0) throw DataError("vocabulary: duplicate token '" + t + "'");
    add(t);
  }
}

std::int64_t Vocabulary::add(const std::string& token) {
  auto [it, inserted] = index_.emplace(token, static_cast<std::int64_t>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

std::int64_t Vocabulary::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? -1 : it->second;
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw DataError("vocabulary: expected a JSON list");
  return Vocabulary(j.get<std::vector<std::string>>());
}

}  // namespace ufin
