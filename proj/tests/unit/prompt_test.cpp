#include <gtest/gtest.h>

#include "ufin/data/synth.hpp"
#include "ufin/error.hpp"
#include "ufin/prompting/prompt.hpp"

namespace ufin {
namespace {

Schema amazon_schema() {
  return Schema({{"user_id", Side::user, FieldKind::anonymous_id, std::nullopt},
                 {"gender", Side::user, FieldKind::categorical, std::nullopt},
                 {"occupation", Side::user, FieldKind::categorical, std::nullopt},
                 {"item_id", Side::item, FieldKind::anonymous_id, std::nullopt},
                 {"category", Side::item, FieldKind::categorical, std::nullopt},
                 {"name", Side::item, FieldKind::text, std::nullopt},
                 {"time", Side::context, FieldKind::categorical, std::nullopt}});
}

InstanceRecord amazon_record() {
  return {0, 1, 1, {"U-9981", "male", "student", "B000XYZ", "jacket", "HOUONE", "09:21"}};
}

PromptTemplate with_preset(PromptVariant v, const char* preset) {
  PromptTemplate t;
  t.variant = v;
  t.phrases = PhraseTable::preset(preset);
  return t;
}

TEST(Render, AmazonBaseExample) {
  const std::string expected = normalize_quotes(
      "There is a user, whose gender is male, and occupation is student. The product is a jacket "
      "and its name is “HOUONE”. The system time is 09:21.");
  EXPECT_EQ(render(amazon_record(), amazon_schema(), with_preset(PromptVariant::base, "amazon"),
                   "product"),
            expected);
}

TEST(Render, MovieLensPrompt1Example) {
  const Schema schema({{"user_id", Side::user, FieldKind::anonymous_id, std::nullopt},
                       {"gender", Side::user, FieldKind::categorical, std::nullopt},
                       {"occupation", Side::user, FieldKind::categorical, std::nullopt},
                       {"title", Side::item, FieldKind::text, std::nullopt},
                       {"year", Side::item, FieldKind::categorical, std::nullopt}});
  const InstanceRecord r{1, 2, 0, {"42", "male", "student", "Leon: The Professional", "1994"}};
  const std::string out =
      render(r, schema, with_preset(PromptVariant::prompt1, "movielens"), "movie");
  const std::string prefix =
      normalize_quotes("gender: male; occupation: student; title: “Leon: The Professional”; ");
  EXPECT_EQ(out.substr(0, prefix.size()), prefix);
  EXPECT_EQ(out, prefix + "release year: 1994.");
}

TEST(Render, MovieLensBasePhrasing) {
  const Schema schema({{"title", Side::item, FieldKind::text, std::nullopt},
                       {"year", Side::item, FieldKind::categorical, std::nullopt}});
  const InstanceRecord r{1, 2, 0, {"Heat", "1995"}};
  EXPECT_EQ(render(r, schema, with_preset(PromptVariant::base, "movielens"), "movie"),
            "There is a movie, its title is \"Heat\", and it is released at 1995.");
}

TEST(Render, EmptyContextSideOmitted) {
  InstanceRecord r = amazon_record();
  r.values[6] = "";
  const std::string out =
      render(r, amazon_schema(), with_preset(PromptVariant::base, "amazon"), "product");
  EXPECT_EQ(out.find("time"), std::string::npos);
  EXPECT_EQ(out.back(), '.');
  EXPECT_EQ(out.substr(out.size() - 9), "\"HOUONE\".");
}

TEST(Render, EmptyValueDropsClause) {
  InstanceRecord r = amazon_record();
  r.values[2] = "";
  EXPECT_EQ(render(r, amazon_schema(), PromptTemplate{}, "product").substr(0, 40),
            "There is a user, whose gender is male. T");
}

TEST(Render, Prompt2MasksFieldNames) {
  const std::string out =
      render(amazon_record(), amazon_schema(), with_preset(PromptVariant::prompt2, "default"), "product");
  EXPECT_EQ(out,
            "There is a user, whose Field is male, and Field is student. There is a product, its "
            "Field is jacket, and its Field is \"HOUONE\". The Field is 09:21.");
}

TEST(Render, Prompt3EmptyDropEqualsBase) {
  PromptTemplate p3;
  p3.variant = PromptVariant::prompt3;
  EXPECT_EQ(render(amazon_record(), amazon_schema(), p3, "product"),
            render(amazon_record(), amazon_schema(), PromptTemplate{}, "product"));
}

TEST(Render, Prompt3DropsFieldWithItsSeparator) {
  PromptTemplate p3;
  p3.variant = PromptVariant::prompt3;
  p3.drop_fields = {"name"};
  EXPECT_EQ(render(amazon_record(), amazon_schema(), p3, "product"),
            "There is a user, whose gender is male, and occupation is student. There is a product, "
            "its category is jacket. The time is 09:21.");
  p3.drop_fields = {"gender"};
  EXPECT_EQ(render(amazon_record(), amazon_schema(), p3, "product").substr(0, 49),
            "There is a user, whose occupation is student. The");
}

TEST(Render, TemplateValidation) {
  PromptTemplate t;
  t.drop_fields = {"name"};
  EXPECT_THROW(render(amazon_record(), amazon_schema(), t), ConfigError);
  t.variant = PromptVariant::prompt3;
  t.drop_fields = {"nope"};
  EXPECT_THROW(render(amazon_record(), amazon_schema(), t), ConfigError);
  EXPECT_THROW(parse_prompt_variant("prompt9"), ConfigError);
  EXPECT_EQ(parse_prompt_variant("prompt2"), PromptVariant::prompt2);
  EXPECT_THROW(PhraseTable::preset("yelp"), ConfigError);
}

TEST(Render, AnonymousValuesNeverAppear) {
  SynthConfig cfg;
  cfg.interactions = 500;
  const auto res = synth_generate(cfg, 13);
  const Schema& schema = res.domains[0].schema;
  const auto anon = schema.indices_of(FieldKind::anonymous_id);
  for (PromptVariant v : {PromptVariant::base, PromptVariant::prompt1, PromptVariant::prompt2,
                          PromptVariant::prompt3}) {
    PromptTemplate t;
    t.variant = v;
    for (const auto& d : res.domains) {
      for (const auto& r : d.splits.train) {
        const std::string out = render(r, d.schema, t, d.item_noun);
        for (std::size_t i : anon) {
          EXPECT_EQ(out.find(r.values[i]), std::string::npos) << out;
        }
      }
    }
  }
}

TEST(Render, DeterministicAndSynthShape) {
  SynthConfig cfg;
  cfg.interactions = 50;
  cfg.domains = 1;
  const auto res = synth_generate(cfg, 1);
  const auto& d = res.domains[0];
  const auto& r = d.splits.train[0];
  const std::string a = render(r, d.schema, PromptTemplate{}, d.item_noun);
  EXPECT_EQ(a, render(r, d.schema, PromptTemplate{}, d.item_noun));
  EXPECT_EQ(a.rfind("There is a user, whose gender is ", 0), 0u) << a;
  EXPECT_NE(a.find(" There is a book, its title is \""), std::string::npos) << a;
  EXPECT_NE(a.find(" The time is "), std::string::npos) << a;
}

TEST(NormalizeQuotes, MapsTypographicQuotes) {
  EXPECT_EQ(normalize_quotes("“A” ‘b’"), "\"A\" 'b'");
}

}  // namespace
}  // namespace ufin
