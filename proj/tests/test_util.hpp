#pragma once

#include <memory>
#include <string>
#include <vector>

#include "promise/gp_policy.hpp"
#include "promise/ontology.hpp"
#include "promise/simulator.hpp"

namespace ptest {

inline std::string data_path(const std::string& name) {
  return std::string(PROMISE_DATA_DIR) + "/" + name;
}

inline promise::AliasTable identity_alias(const promise::Ontology& ont) {
  promise::AliasTable alias;
  for (const auto& act : ont.acts()) alias.acts[act] = act;
  for (int s = 0; s < ont.n_slots(); ++s) alias.slots[ont.slot_name(s)] = ont.slot_name(s);
  return alias;
}

// Target-domain dialogues logged by an already-trained agent exploring at a
// small epsilon, the regime transfer mappings are normally fit against.
inline std::vector<promise::EpisodeLog> deployment_logs(
    const std::shared_ptr<promise::GPModel>& model, const promise::Ontology& ont, int n,
    double epsilon, std::uint64_t seed) {
  using promise::mix_seed;
  std::vector<promise::EpisodeLog> logs;
  for (int i = 0; i < n; ++i) {
    promise::GpPolicy pol(model, promise::SelectMode::EpsilonGreedy, mix_seed(seed, "collect", i),
                          epsilon);
    logs.push_back(run_episode(pol, ont, mix_seed(seed, "episode", i)));
  }
  return logs;
}

// Three-entity domain small enough to check arithmetic by hand.
inline promise::Ontology tiny_ontology() {
  using promise::ActRole;
  std::vector<std::string> acts = {"hello", "inform", "request", "confirm",
                                   "affirm", "deny",   "offer",   "bye"};
  std::vector<ActRole> roles = {ActRole::Hello,  ActRole::Inform, ActRole::Request,
                                ActRole::Confirm, ActRole::Affirm, ActRole::Deny,
                                ActRole::Offer,  ActRole::Bye};
  std::vector<std::pair<std::string, std::vector<std::string>>> informable = {
      {"price", {"cheap", "dear"}},
      {"area", {"north", "south"}},
  };
  std::vector<std::string> requestable = {"phone", "addr"};
  std::vector<promise::Entity> entities = {
      {"e1", {{"price", "cheap"}, {"area", "north"}, {"phone", "111"}, {"addr", "a st"}}},
      {"e2", {{"price", "cheap"}, {"area", "south"}, {"phone", "222"}, {"addr", "b st"}}},
      {"e3", {{"price", "dear"}, {"area", "north"}, {"phone", "333"}, {"addr", "c st"}}},
  };
  return promise::Ontology("tiny", acts, roles, informable, requestable, entities);
}

}  // namespace ptest
