#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ufin/data/dataset.hpp"

namespace ufin {

enum class PromptVariant { base, prompt1, prompt2, prompt3 };

PromptVariant parse_prompt_variant(std::string_view s);
std::string_view to_string(PromptVariant v);

/// How one field reads inside a sentence.
///
/// `pattern` may use {field} and {value}. In the Base template {field} is the
/// phrase word; Prompt2 replaces it with "Field". Prompt1 ignores the pattern
/// and prints "label: value".
struct FieldPhrase {
  std::string label;
  std::string phrase;
  std::string pattern;
  bool quoted = false;
};

struct SidePhrase {
  std::string opener;           // may contain {noun}
  std::string default_pattern;
  std::string separator = ", ";
  std::string last_separator = ", and ";
};

/// Per-schema wording. Fields without an explicit entry use the side's
/// default pattern, their name (underscores as spaces) as label and phrase,
/// and are quoted when named "title" or "name".
class PhraseTable {
 public:
  PhraseTable();

  // "default", "amazon" or "movielens".
  static PhraseTable preset(std::string_view name);

  void set_side(Side side, SidePhrase phrase);
  void set_field(const std::string& name, FieldPhrase phrase);

  const SidePhrase& side(Side side) const;
  FieldPhrase field(const FieldSchema& schema) const;

 private:
  SidePhrase sides_[3];
  std::map<std::string, FieldPhrase> fields_;
};

struct PromptTemplate {
  PromptVariant variant = PromptVariant::base;
  std::vector<std::string> drop_fields;  // Prompt3 only
  PhraseTable phrases;
};

// Throws ConfigError if a drop list is given for a variant other than
// Prompt3, or names a field missing from the schema.
void validate_template(const PromptTemplate& tmpl, const Schema& schema);

std::string render(const InstanceRecord& record, const Schema& schema,
                   const PromptTemplate& tmpl, std::string_view item_noun = "item");

// Replaces typographic quotes with ASCII ones.
std::string normalize_quotes(std::string_view text);

}  // namespace ufin
