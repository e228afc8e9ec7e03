#include "promise/dialog.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace promise;

TEST(MatchBucket, Boundaries) {
  EXPECT_EQ(match_bucket(0), 0);
  EXPECT_EQ(match_bucket(1), 1);
  EXPECT_EQ(match_bucket(2), 2);
  EXPECT_EQ(match_bucket(4), 2);
  EXPECT_EQ(match_bucket(5), 3);
  EXPECT_EQ(match_bucket(10), 3);
  EXPECT_THROW(match_bucket(-1), std::invalid_argument);
}

TEST(SummaryState, BlockContents) {
  Ontology ont = ptest::tiny_ontology();
  DialogueState s;
  s.match_count = 10;
  s.last_user_act = "inform";
  s.constraints["price"] = "cheap";
  s.requests.insert("phone");
  SummaryState h = summarize_state(s, ont);
  const SummaryLayout lay = SummaryLayout::from(ont);
  ASSERT_EQ(h.v.size(), lay.state_dim());
  // match bucket block: one-hot at the top bucket
  EXPECT_DOUBLE_EQ(h.v[0], 0.0);
  EXPECT_DOUBLE_EQ(h.v[3], 1.0);
  // act block sums to one at the inform position
  EXPECT_DOUBLE_EQ(h.v[lay.state_act_offset() + 1], 1.0);
  EXPECT_DOUBLE_EQ(h.v.segment(lay.state_act_offset(), lay.n_acts).sum(), 1.0);
  EXPECT_DOUBLE_EQ(h.v[lay.state_inf_offset() + 0], 1.0);
  EXPECT_DOUBLE_EQ(h.v[lay.state_inf_offset() + 1], 0.0);
  EXPECT_DOUBLE_EQ(h.v[lay.state_req_offset() + 0], 1.0);
  EXPECT_DOUBLE_EQ(h.v[lay.state_req_offset() + 1], 0.0);
}

TEST(SummaryState, FourInformableExample) {
  // ten matching entities and one constraint at informable index 1
  Ontology ont = load_ontology(ptest::data_path("rest_a.json"));
  DialogueState s;
  s.match_count = 10;
  s.last_user_act = "tell";
  s.constraints["cost_band"] = "low";
  SummaryState h = summarize_state(s, ont);
  const SummaryLayout lay = SummaryLayout::from(ont);
  const VectorXd l = h.v.head(kMatchBuckets);
  const VectorXd cons = h.v.segment(lay.state_inf_offset(), 4);
  EXPECT_EQ(l, (VectorXd(4) << 0, 0, 0, 1).finished());
  EXPECT_EQ(cons, (VectorXd(4) << 0, 1, 0, 0).finished());
  EXPECT_TRUE(h.v.segment(lay.state_req_offset(), 5).isZero());
}

TEST(SummaryAct, OneHotAndMultiSlot) {
  Ontology ont = ptest::tiny_ontology();
  const SummaryLayout lay = SummaryLayout::from(ont);
  SummaryAction single = summarize_act({"inform", {{"price", "cheap"}}}, ont);
  EXPECT_EQ(single.act, 1);
  EXPECT_EQ(single.slot, 0);
  EXPECT_DOUBLE_EQ(single.v[1], 1.0);
  EXPECT_DOUBLE_EQ(single.v[lay.action_slot_offset() + 0], 1.0);

  SummaryAction multi = summarize_act({"inform", {{"price", "cheap"}, {"area", "north"}}}, ont);
  EXPECT_EQ(multi.slot, -1);
  EXPECT_DOUBLE_EQ(multi.v[lay.action_slot_offset() + 0], 0.5);
  EXPECT_DOUBLE_EQ(multi.v[lay.action_slot_offset() + 1], 0.5);
  EXPECT_DOUBLE_EQ(multi.v.tail(lay.n_slots()).sum(), 1.0);

  SummaryAction bare = summarize_act({"bye", {}}, ont);
  EXPECT_EQ(bare.slot, -1);
  EXPECT_TRUE(bare.v.tail(lay.n_slots()).isZero());
}

TEST(Dst, InformOverwritesAndRecounts) {
  Ontology ont = ptest::tiny_ontology();
  DialogueState s;
  s = dst_update(s, nullptr, {"inform", {{"price", "cheap"}}}, ont);
  EXPECT_EQ(s.constraints.at("price"), "cheap");
  EXPECT_EQ(s.match_count, 2);
  s = dst_update(s, nullptr, {"inform", {{"price", "dear"}}}, ont);
  EXPECT_EQ(s.constraints.at("price"), "dear");
  EXPECT_EQ(s.match_count, 1);
  EXPECT_EQ(s.last_user_act, "inform");
}

TEST(Dst, RequestRaisesFlag) {
  Ontology ont = ptest::tiny_ontology();
  DialogueState s = dst_update({}, nullptr, {"request", {{"phone", ""}}}, ont);
  EXPECT_TRUE(s.requests.count("phone"));
  EXPECT_EQ(s.match_count, 3);
}

TEST(Dst, UpdateIsIdempotent) {
  Ontology ont = ptest::tiny_ontology();
  AbstractedAct reply{"inform", {{"phone", "111"}}};
  AbstractedAct user{"inform", {{"area", "south"}}};
  DialogueState once = dst_update({}, &reply, user, ont);
  DialogueState twice = dst_update(once, &reply, user, ont);
  EXPECT_EQ(once.constraints, twice.constraints);
  EXPECT_EQ(once.requests, twice.requests);
  EXPECT_EQ(once.match_count, twice.match_count);
  EXPECT_EQ(once.last_user_act, twice.last_user_act);
}

TEST(Dst, AffirmAdoptsConfirmedValue) {
  Ontology ont = ptest::tiny_ontology();
  AbstractedAct confirm{"confirm", {{"price", "cheap"}}};
  DialogueState s = dst_update({}, &confirm, {"affirm", {}}, ont);
  EXPECT_EQ(s.constraints.at("price"), "cheap");
  EXPECT_EQ(s.match_count, 2);
}

TEST(Dst, AgentInformClearsAnsweredRequest) {
  Ontology ont = ptest::tiny_ontology();
  DialogueState s;
  s.requests.insert("phone");
  AbstractedAct reply{"inform", {{"phone", "111"}}};
  DialogueState next = dst_update(s, &reply, {"affirm", {}}, ont);
  EXPECT_FALSE(next.requests.count("phone"));

  AbstractedAct unanswered{"inform", {{"phone", ""}}};
  DialogueState kept = dst_update(s, &unanswered, {"affirm", {}}, ont);
  EXPECT_TRUE(kept.requests.count("phone"));
}

TEST(Dst, IgnoresUnknownContent) {
  Ontology ont = ptest::tiny_ontology();
  DialogueState s = dst_update({}, nullptr, {"inform", {{"bogus", "x"}}}, ont);
  EXPECT_TRUE(s.constraints.empty());
  s = dst_update({}, nullptr, {"inform", {{"price", "bogus"}}}, ont);
  EXPECT_TRUE(s.constraints.empty());
}

TEST(Candidates, MenuCompositionAndOrder) {
  Ontology rest = load_ontology(ptest::data_path("rest_a.json"));
  auto menu = candidate_actions(rest);
  // 4 requests + 5 informs + 4 confirms + offer + bye + hello
  ASSERT_EQ(menu.size(), 16u);
  int requests = 0, informs = 0, confirms = 0, byes = 0;
  for (const auto& c : menu) {
    switch (rest.act_role(c.act)) {
      case ActRole::Request:
        ++requests;
        EXPECT_TRUE(rest.is_informable(rest.slot_name(c.slot)));
        break;
      case ActRole::Inform:
        ++informs;
        EXPECT_FALSE(rest.is_informable(rest.slot_name(c.slot)));
        break;
      case ActRole::Confirm: ++confirms; break;
      case ActRole::Bye:
        ++byes;
        EXPECT_EQ(c.slot, -1);
        break;
      default: EXPECT_EQ(c.slot, -1);
    }
  }
  EXPECT_EQ(requests, 4);
  EXPECT_EQ(informs, 5);
  EXPECT_EQ(confirms, 4);
  EXPECT_EQ(byes, 1);

  Ontology hotel = load_ontology(ptest::data_path("hotel_b.json"));
  EXPECT_EQ(candidate_actions(hotel).size(), 20u);
}

TEST(Candidates, VectorsAreOneHotBlocks) {
  Ontology ont = load_ontology(ptest::data_path("hotel_b.json"));
  const SummaryLayout lay = SummaryLayout::from(ont);
  for (const auto& c : candidate_actions(ont)) {
    EXPECT_DOUBLE_EQ(c.v.head(lay.n_acts).sum(), 1.0);
    const double slot_mass = c.v.tail(lay.n_slots()).sum();
    EXPECT_TRUE(slot_mass == 0.0 || slot_mass == 1.0);
  }
}

TEST(ActStrings, RenderParseRoundTrip) {
  for (const AbstractedAct& a : std::vector<AbstractedAct>{
           {"tell", {{"cost_band", "low"}}},
           {"seek", {{"zone", ""}}},
           {"suggest", {}},
           {"reject", {{"zone", "west"}, {"cost_band", "high"}}},
       }) {
    AbstractedAct b = parse_act(render_act(a));
    EXPECT_EQ(a.act, b.act);
    EXPECT_EQ(a.pairs, b.pairs);
  }
  EXPECT_THROW(parse_act("garbage"), ConfigError);
}
