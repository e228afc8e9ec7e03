#include "promise/ontology.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace promise;

TEST(Ontology, FixtureLayout) {
  Ontology ont = load_ontology(ptest::data_path("rest_a.json"));
  EXPECT_EQ(ont.name(), "rest_a");
  EXPECT_EQ(ont.n_acts(), 8);
  EXPECT_EQ(ont.n_informable(), 4);
  EXPECT_EQ(ont.n_requestable(), 5);
  EXPECT_EQ(ont.n_slots(), 9);
  EXPECT_EQ(static_cast<int>(ont.entities().size()), 24);
  EXPECT_EQ(ont.act_index("greet"), 0);
  EXPECT_EQ(ont.act_index("finish"), 7);
  EXPECT_EQ(ont.act_role("tell"), ActRole::Inform);
  EXPECT_EQ(ont.act_role("seek"), ActRole::Request);
  EXPECT_EQ(ont.slot_index("food_kind"), 0);
  EXPECT_EQ(ont.slot_index("contact_line"), 4);
  EXPECT_TRUE(ont.is_informable("zone"));
  EXPECT_FALSE(ont.is_informable("web_link"));
  EXPECT_EQ(ont.role_act(ActRole::Offer), ont.act_index("suggest"));
}

TEST(Ontology, ReloadGivesIdenticalLayout) {
  Ontology a = load_ontology(ptest::data_path("hotel_b.json"));
  Ontology b = load_ontology(ptest::data_path("hotel_b.json"));
  ASSERT_EQ(a.n_acts(), b.n_acts());
  for (int i = 0; i < a.n_acts(); ++i) EXPECT_EQ(a.act_name(i), b.act_name(i));
  ASSERT_EQ(a.n_slots(), b.n_slots());
  for (int i = 0; i < a.n_slots(); ++i) EXPECT_EQ(a.slot_name(i), b.slot_name(i));
}

TEST(Ontology, EntropyKnownValue) {
  // two-value slot with empirical counts (2, 1): H = 0.9183 bits of its maximum
  Ontology ont = ptest::tiny_ontology();
  EXPECT_NEAR(normalized_slot_entropy(ont, "price"), 0.9182958340544896, 1e-12);
}

TEST(Ontology, EntropySingleValueSlotIsZero) {
  std::vector<std::pair<std::string, std::vector<std::string>>> informable = {
      {"kind", {"only"}}};
  std::vector<Entity> entities = {{"x", {{"kind", "only"}}}, {"y", {{"kind", "only"}}}};
  Ontology ont("mini", {"inform"}, {ActRole::Inform}, informable, {}, entities);
  EXPECT_DOUBLE_EQ(normalized_slot_entropy(ont, "kind"), 0.0);
}

TEST(Ontology, EntropyRejectsBadSlots) {
  Ontology ont = ptest::tiny_ontology();
  EXPECT_THROW(normalized_slot_entropy(ont, "nope"), std::invalid_argument);
  EXPECT_THROW(normalized_slot_entropy(ont, "phone"), std::invalid_argument);
}

TEST(Ontology, CountMatches) {
  Ontology ont = ptest::tiny_ontology();
  EXPECT_EQ(count_matches(ont, {}), 3);
  EXPECT_EQ(count_matches(ont, {{"price", "cheap"}}), 2);
  EXPECT_EQ(count_matches(ont, {{"price", "cheap"}, {"area", "south"}}), 1);
  EXPECT_EQ(count_matches(ont, {{"price", "dear"}, {"area", "south"}}), 0);
}

TEST(Ontology, CountMatchesRejectsBadConstraints) {
  Ontology ont = ptest::tiny_ontology();
  EXPECT_THROW(count_matches(ont, {{"nope", "x"}}), std::invalid_argument);
  EXPECT_THROW(count_matches(ont, {{"phone", "111"}}), std::invalid_argument);
  EXPECT_THROW(count_matches(ont, {{"price", "free"}}), std::invalid_argument);
}

TEST(Ontology, CountMatchesMonotoneUnderExtraConstraints) {
  Ontology ont = load_ontology(ptest::data_path("rest_a.json"));
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<std::string, std::string> constraints;
    int prev = count_matches(ont, constraints);
    for (int step = 0; step < ont.n_informable(); ++step) {
      const std::string& slot = ont.informable_name(static_cast<int>(rng.below(4)));
      const auto& values = ont.informable_values(slot);
      if (constraints.count(slot)) continue;
      constraints[slot] = values[rng.below(values.size())];
      const int now = count_matches(ont, constraints);
      EXPECT_LE(now, prev);
      prev = now;
    }
  }
}

TEST(Ontology, ValidationCatchesBrokenDomains) {
  auto informable = std::vector<std::pair<std::string, std::vector<std::string>>>{
      {"price", {"cheap", "dear"}}};
  std::vector<Entity> good = {{"x", {{"price", "cheap"}}}};
  EXPECT_THROW(Ontology("d", {"a", "a"}, {ActRole::Inform, ActRole::Inform}, informable, {}, good),
               ConfigError);
  std::vector<Entity> missing = {{"x", {}}};
  EXPECT_THROW(Ontology("d", {"a"}, {ActRole::Inform}, informable, {}, missing), ConfigError);
  std::vector<Entity> out_of_list = {{"x", {{"price", "free"}}}};
  EXPECT_THROW(Ontology("d", {"a"}, {ActRole::Inform}, informable, {}, out_of_list), ConfigError);
  std::vector<Entity> dupes = {{"x", {{"price", "cheap"}}}, {"x", {{"price", "dear"}}}};
  EXPECT_THROW(Ontology("d", {"a"}, {ActRole::Inform}, informable, {}, dupes), ConfigError);
}

TEST(Ontology, ParserRejectsMissingRole) {
  Json j = Json::parse(R"({
    "name": "d", "speech_acts": ["a", "b"], "act_roles": {"a": "inform"},
    "informable_slots": {"s": ["v"]}, "requestable_slots": [],
    "entities": [{"name": "x", "s": "v"}]
  })");
  EXPECT_THROW(parse_ontology(j), ConfigError);
}

TEST(Ontology, MissingFileIsConfigError) {
  EXPECT_THROW(load_ontology(ptest::data_path("nope.json")), ConfigError);
}

TEST(Alias, LoadsMappedAndUnmappedEntries) {
  AliasTable t = load_alias(ptest::data_path("alias_b2a.json"));
  EXPECT_EQ(t.acts.size(), 8u);
  EXPECT_EQ(t.acts.at("say"), "tell");
  EXPECT_EQ(t.slots.at("stay_style"), "food_kind");
  EXPECT_EQ(t.slots.count("pet_rule"), 0u);  // null marks no counterpart
  EXPECT_EQ(t.slots.size(), 9u);
}
