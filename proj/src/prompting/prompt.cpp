#include "ufin/prompting/prompt.hpp"

#include <algorithm>

#include "ufin/error.hpp"

namespace ufin {

namespace {

std::size_t side_index(Side side) { return static_cast<std::size_t>(side); }

void replace_all(std::string& text, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
}

struct Clause {
  std::string separator;
  std::string text;
  bool dropped = false;
};

}  // namespace

PromptVariant parse_prompt_variant(std::string_view s) {
  if (s == "base") return PromptVariant::base;
  if (s == "prompt1") return PromptVariant::prompt1;
  if (s == "prompt2") return PromptVariant::prompt2;
  if (s == "prompt3") return PromptVariant::prompt3;
  throw ConfigError("unknown prompt variant '" + std::string(s) +
                    "' (expected base|prompt1|prompt2|prompt3)");
}

std::string_view to_string(PromptVariant v) {
  switch (v) {
    case PromptVariant::base: return "base";
    case PromptVariant::prompt1: return "prompt1";
    case PromptVariant::prompt2: return "prompt2";
    case PromptVariant::prompt3: return "prompt3";
  }
  return "?";
}

PhraseTable::PhraseTable() {
  sides_[side_index(Side::user)] = {"There is a user, whose ", "{field} is {value}"};
  sides_[side_index(Side::item)] = {"There is a {noun}, ", "its {field} is {value}"};
  sides_[side_index(Side::context)] = {"The ", "{field} is {value}"};
}

PhraseTable PhraseTable::preset(std::string_view name) {
  PhraseTable table;
  if (name == "default") return table;
  if (name == "amazon") {
    table.set_side(Side::item, {"The {noun} is ", "its {field} is {value}", ", ", " and "});
    table.set_field("category", {"category", "category", "a {value}", false});
    table.set_field("time", {"system time", "system time", "", false});
    return table;
  }
  if (name == "movielens") {
    table.set_field("year", {"release year", "released", "it is {field} at {value}", false});
    return table;
  }
  throw ConfigError("unknown phrase preset '" + std::string(name) +
                    "' (expected default|amazon|movielens)");
}

void PhraseTable::set_side(Side side, SidePhrase phrase) { sides_[side_index(side)] = std::move(phrase); }

void PhraseTable::set_field(const std::string& name, FieldPhrase phrase) {
  fields_[name] = std::move(phrase);
}

const SidePhrase& PhraseTable::side(Side side) const { return sides_[side_index(side)]; }

FieldPhrase PhraseTable::field(const FieldSchema& schema) const {
  FieldPhrase out;
  if (auto it = fields_.find(schema.name); it != fields_.end()) out = it->second;
  if (out.label.empty()) {
    out.label = schema.name;
    std::replace(out.label.begin(), out.label.end(), '_', ' ');
    out.quoted = schema.name == "title" || schema.name == "name";
  }
  if (out.phrase.empty()) out.phrase = out.label;
  if (out.pattern.empty()) out.pattern = side(schema.side).default_pattern;
  return out;
}

void validate_template(const PromptTemplate& tmpl, const Schema& schema) {
  if (!tmpl.drop_fields.empty() && tmpl.variant != PromptVariant::prompt3) {
    throw ConfigError("prompt.drop_fields is only valid with the prompt3 variant");
  }
  for (const std::string& name : tmpl.drop_fields) {
    if (!schema.index_of(name)) throw ConfigError("prompt.drop_fields: unknown field '" + name + "'");
  }
}

std::string render(const InstanceRecord& record, const Schema& schema,
                   const PromptTemplate& tmpl, std::string_view item_noun) {
  validate_template(tmpl, schema);
  if (record.values.size() != schema.size()) validate_record(record, schema);

  auto value_text = [&](const FieldPhrase& phrase, const std::string& value) {
    return phrase.quoted ? "\"" + value + "\"" : value;
  };

  if (tmpl.variant == PromptVariant::prompt1) {
    std::string out;
    for (Side side : {Side::user, Side::item, Side::context}) {
      for (std::size_t i = 0; i < schema.size(); ++i) {
        const FieldSchema& f = schema[i];
        if (f.side != side || f.kind == FieldKind::anonymous_id || record.values[i].empty()) continue;
        const FieldPhrase phrase = tmpl.phrases.field(f);
        if (!out.empty()) out += "; ";
        out += phrase.label + ": " + value_text(phrase, record.values[i]);
      }
    }
    return out.empty() ? out : out + ".";
  }

  std::vector<std::string> sentences;
  for (Side side : {Side::user, Side::item, Side::context}) {
    std::vector<Clause> clauses;
    for (std::size_t i = 0; i < schema.size(); ++i) {
      const FieldSchema& f = schema[i];
      if (f.side != side || f.kind == FieldKind::anonymous_id || record.values[i].empty()) continue;
      const FieldPhrase phrase = tmpl.phrases.field(f);
      std::string text = phrase.pattern;
      replace_all(text, "{value}", "\x01");
      replace_all(text, "{field}", tmpl.variant == PromptVariant::prompt2 ? "Field" : phrase.phrase);
      replace_all(text, "\x01", value_text(phrase, record.values[i]));
      const bool dropped = std::find(tmpl.drop_fields.begin(), tmpl.drop_fields.end(), f.name) !=
                           tmpl.drop_fields.end();
      clauses.push_back({"", std::move(text), dropped});
    }
    if (clauses.empty()) continue;
    // Separators are fixed on the full clause list; dropping a field removes
    // the clause together with the separator in front of it.
    const SidePhrase& sp = tmpl.phrases.side(side);
    for (std::size_t c = 1; c < clauses.size(); ++c) {
      clauses[c].separator = c + 1 == clauses.size() ? sp.last_separator : sp.separator;
    }
    std::string body;
    for (const Clause& c : clauses) {
      if (c.dropped) continue;
      if (!body.empty()) body += c.separator;
      body += c.text;
    }
    if (body.empty()) continue;
    std::string opener = sp.opener;
    replace_all(opener, "{noun}", item_noun);
    sentences.push_back(opener + body + ".");
  }
  std::string out;
  for (const std::string& s : sentences) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

std::string normalize_quotes(std::string_view text) {
  std::string out(text);
  for (const char* q : {"\xE2\x80\x9C", "\xE2\x80\x9D", "\xE2\x80\x9E"}) replace_all(out, q, "\"");
  for (const char* q : {"\xE2\x80\x98", "\xE2\x80\x99"}) replace_all(out, q, "'");
  return out;
}

}  // namespace ufin
