#pragma once

#include <memory>
#include <vector>

#include "promise/dialog.hpp"

namespace promise {

// Maps a summary state plus the domain's candidate menu to one candidate.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual SummaryAction select(const SummaryState& state,
                               const std::vector<SummaryAction>& candidates) = 0;
  // Called by the episode loop before each dialogue; stateful policies reset here.
  virtual void begin_episode() {}
};

// Policy that also scores (state, action) pairs with a posterior mean and
// variance, which evaluation needs for ranking-based metrics.
class ValuePolicy : public Policy {
 public:
  struct Score {
    double mean = 0.0;
    double var = 0.0;
  };
  virtual Score score(const SummaryState& state, const SummaryAction& action) const = 0;
};

class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  SummaryAction select(const SummaryState&, const std::vector<SummaryAction>& candidates) override {
    if (candidates.empty()) throw std::logic_error("no candidate actions");
    return candidates[rng_.below(candidates.size())];
  }

 private:
  Rng rng_;
};

/**
 * Hand-written reference policy. Reads only the summary state:
 *   answer the lowest pending request, propose when the match set is empty or
 *   a single entity, propose after the user signals indifference, otherwise
 *   ask for the lowest unconstrained informable.
 */
class OraclePolicy : public Policy {
 public:
  explicit OraclePolicy(const Ontology& ont)
      : ont_(&ont),
        lay_(SummaryLayout::from(ont)),
        affirm_act_(ont.role_act(ActRole::Affirm)) {}

  SummaryAction select(const SummaryState& state,
                       const std::vector<SummaryAction>& candidates) override {
    for (int r = 0; r < lay_.n_requestable; ++r)
      if (state.v[lay_.state_req_offset() + r] > 0.5)
        return find(candidates, ActRole::Inform, lay_.n_informable + r);
    if (state.v[0] > 0.5) return find(candidates, ActRole::Offer, -1);  // nothing matches
    const bool affirmed = state.v[lay_.state_act_offset() + affirm_act_] > 0.5;
    if (affirmed) return find(candidates, ActRole::Offer, -1);
    if (state.v[1] > 0.5) return find(candidates, ActRole::Offer, -1);  // unique match
    for (int s = 0; s < lay_.n_informable; ++s)
      if (state.v[lay_.state_inf_offset() + s] < 0.5)
        return find(candidates, ActRole::Request, s);
    return find(candidates, ActRole::Offer, -1);
  }

 private:
  SummaryAction find(const std::vector<SummaryAction>& candidates, ActRole role, int slot) const {
    for (const auto& c : candidates)
      if (ont_->act_role(c.act) == role && c.slot == slot) return c;
    throw std::logic_error("candidate menu lacks a required action");
  }

  const Ontology* ont_;
  SummaryLayout lay_;
  int affirm_act_;
};

}  // namespace promise
