#pragma once

#include <algorithm>
#include <optional>

#include "promise/policy.hpp"

namespace promise {

// What the simulated user wants: constraints to satisfy and slots to ask
// about once a suitable entity has been proposed.
struct Goal {
  std::vector<std::pair<std::string, std::string>> constraints;
  std::vector<std::string> requests;

  std::map<std::string, std::string> constraint_map() const {
    return {constraints.begin(), constraints.end()};
  }
};

// 1-3 constraints over uniformly chosen informables with database-frequency
// weighted values, plus 0-2 requests skewed toward early requestables so the
// two domains exhibit comparable request statistics.
inline Goal sample_goal(const Ontology& ont, Rng& rng) {
  Goal g;
  const int max_c = std::min(3, ont.n_informable());
  const int nc = 1 + static_cast<int>(rng.below(static_cast<std::size_t>(max_c)));
  std::vector<int> slots(ont.n_informable());
  for (int i = 0; i < ont.n_informable(); ++i) slots[i] = i;
  rng.shuffle(slots);
  slots.resize(nc);
  std::sort(slots.begin(), slots.end());
  for (int s : slots) {
    const std::string& slot = ont.informable_name(s);
    const auto& values = ont.informable_values(slot);
    std::vector<double> weights(values.size(), 0.0);
    for (const auto& e : ont.entities())
      for (std::size_t v = 0; v < values.size(); ++v)
        if (e.value(slot) == values[v]) weights[v] += 1.0;
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0) std::fill(weights.begin(), weights.end(), 1.0);
    g.constraints.emplace_back(slot, values[rng.weighted(weights)]);
  }
  const int max_r = std::min(2, ont.n_requestable());
  const int nr = static_cast<int>(rng.below(static_cast<std::size_t>(max_r + 1)));
  std::vector<int> req_pool(ont.n_requestable());
  for (int i = 0; i < ont.n_requestable(); ++i) req_pool[i] = i;
  std::vector<int> chosen;
  for (int k = 0; k < nr; ++k) {
    std::vector<double> weights;
    for (int idx : req_pool) weights.push_back(1.0 / (1.0 + idx));
    const std::size_t pick = rng.weighted(weights);
    chosen.push_back(req_pool[pick]);
    req_pool.erase(req_pool.begin() + static_cast<long>(pick));
  }
  std::sort(chosen.begin(), chosen.end());
  for (int r : chosen) g.requests.push_back(ont.requestable_name(r));
  return g;
}

// A grounded agent turn: the abstract action plus the entity context the
// environment resolved for offers and informs.
struct AgentTurn {
  SummaryAction action;
  AbstractedAct act;
  const Entity* offered = nullptr;  // entity proposed by the latest offer, if any
  bool none_claim = false;          // offer that asserted no entity matches
};

/**
 * Agenda-driven simulated user. Answers questions from its goal, corrects
 * mismatched proposals, asks its requests one at a time once a proposal is
 * accepted, and hangs up when satisfied. A dialogue succeeds when the user
 * accepted an entity matching every goal constraint and had all requests
 * answered, or was truthfully told that nothing matches the goal.
 */
class UserSimulator {
 public:
  UserSimulator(const Ontology& ont, Goal goal, std::uint64_t seed)
      : ont_(&ont), goal_(std::move(goal)), rng_(seed) {
    for (const auto& r : goal_.requests) pending_.insert(r);
  }

  const Goal& goal() const { return goal_; }
  bool success() const { return success_; }

  AbstractedAct open() {
    if (rng_.uniform01() < 0.3) return {ont_->act_name(ont_->role_act(ActRole::Hello)), {}};
    return tell_unstated();
  }

  // Reaction to a grounded agent turn. A bye-role result ends the dialogue.
  AbstractedAct respond(const AgentTurn& turn) {
    switch (ont_->act_role(turn.act.act)) {
      case ActRole::Request: {
        const std::string& slot = turn.act.pairs.at(0).first;
        if (auto v = goal_value(slot)) {
          stated_.insert(slot);
          return {inform_act(), {{slot, *v}}};
        }
        return push_agenda();
      }
      case ActRole::Confirm: {
        const auto& [slot, value] = turn.act.pairs.at(0);
        if (auto v = goal_value(slot)) {
          if (value == *v) return {affirm_act(), {}};
          stated_.insert(slot);
          return {inform_act(), {{slot, *v}}};
        }
        return {affirm_act(), {}};
      }
      case ActRole::Inform: {
        const auto& [slot, value] = turn.act.pairs.at(0);
        if (!value.empty()) pending_.erase(slot);
        if (accepted_ && pending_.empty()) return finish(true);
        return push_agenda();
      }
      case ActRole::Offer: {
        if (turn.none_claim) {
          if (count_matches(*ont_, goal_.constraint_map()) == 0) return finish(true);
          return push_agenda();  // claim is false; keep narrowing
        }
        for (const auto& [slot, value] : goal_.constraints) {
          if (turn.offered->value(slot) != value) {
            accepted_ = false;
            stated_.insert(slot);
            return {deny_act(), {{slot, value}}};
          }
        }
        accepted_ = true;
        if (!pending_.empty()) return {request_act(), {{first_pending(), ""}}};
        return finish(true);
      }
      default:
        return push_agenda();
    }
  }

 private:
  std::optional<std::string> goal_value(const std::string& slot) const {
    for (const auto& [s, v] : goal_.constraints)
      if (s == slot) return v;
    return std::nullopt;
  }

  AbstractedAct tell_unstated() {
    std::vector<const std::pair<std::string, std::string>*> unstated;
    for (const auto& c : goal_.constraints)
      if (!stated_.count(c.first)) unstated.push_back(&c);
    if (unstated.empty()) return {affirm_act(), {}};
    const auto* pick = unstated[rng_.below(unstated.size())];
    stated_.insert(pick->first);
    return {inform_act(), {{pick->first, pick->second}}};
  }

  AbstractedAct push_agenda() {
    for (const auto& c : goal_.constraints)
      if (!stated_.count(c.first)) return tell_unstated();
    if (accepted_ && !pending_.empty()) return {request_act(), {{first_pending(), ""}}};
    return {affirm_act(), {}};
  }

  AbstractedAct finish(bool ok) {
    success_ = ok;
    return {ont_->act_name(ont_->role_act(ActRole::Bye)), {}};
  }

  const std::string& first_pending() const {
    const std::string* best = nullptr;
    for (const auto& r : goal_.requests)
      if (pending_.count(r)) {
        best = &r;
        break;
      }
    if (!best) throw std::logic_error("no pending request");
    return *best;
  }

  std::string inform_act() const { return ont_->act_name(ont_->role_act(ActRole::Inform)); }
  std::string request_act() const { return ont_->act_name(ont_->role_act(ActRole::Request)); }
  std::string affirm_act() const { return ont_->act_name(ont_->role_act(ActRole::Affirm)); }
  std::string deny_act() const { return ont_->act_name(ont_->role_act(ActRole::Deny)); }

  const Ontology* ont_;
  Goal goal_;
  Rng rng_;
  std::set<std::string> stated_;   // constraints already spoken
  std::set<std::string> pending_;  // requests not yet answered
  bool accepted_ = false;
  bool success_ = false;
};

enum class RewardMode { PerTurn, TerminalOnly };

struct EpisodeConfig {
  int max_turns = 20;
  RewardMode reward_mode = RewardMode::TerminalOnly;
};

struct TurnRecord {
  std::string user_act;
  std::string agent_act;
  VectorXd user_sentence;  // sentence layout: user act one-hot plus slot mass
  VectorXd state;          // summary state the policy saw
  VectorXd action;         // summary action taken
  double reward = 0.0;     // immediate: -1 per turn, +20 added on the success turn
};

struct EpisodeLog {
  Goal goal;
  std::uint64_t seed = 0;
  RewardMode reward_mode = RewardMode::TerminalOnly;
  std::vector<TurnRecord> turns;
  double total_reward = 0.0;
  bool success = false;
  int length = 0;
};

// Resolves a summary action against the current state and entity context.
inline AgentTurn ground_action(const SummaryAction& y, const DialogueState& state,
                               const Ontology& ont, const Entity* offered) {
  AgentTurn turn;
  turn.action = y;
  const std::string& act = ont.act_name(y.act);
  switch (ont.act_role(y.act)) {
    case ActRole::Request:
      turn.act = {act, {{ont.slot_name(y.slot), ""}}};
      turn.offered = offered;
      break;
    case ActRole::Confirm: {
      const std::string& slot = ont.slot_name(y.slot);
      auto it = state.constraints.find(slot);
      turn.act = {act, {{slot, it == state.constraints.end() ? "" : it->second}}};
      turn.offered = offered;
      break;
    }
    case ActRole::Inform: {
      const std::string& slot = ont.slot_name(y.slot);
      turn.act = {act, {{slot, offered ? offered->value(slot) : ""}}};
      turn.offered = offered;
      break;
    }
    case ActRole::Offer: {
      const Entity* match = nullptr;
      for (const auto& e : ont.entities()) {
        bool ok = true;
        for (const auto& [slot, value] : state.constraints)
          if (e.value(slot) != value) {
            ok = false;
            break;
          }
        if (ok) {
          match = &e;
          break;
        }
      }
      if (match) {
        turn.act = {act, {}};
        turn.offered = match;
      } else {
        turn.act = {act, {}};
        turn.none_claim = true;
      }
      break;
    }
    default:
      turn.act = {act, {}};
      turn.offered = offered;
      break;
  }
  return turn;
}

/**
 * Runs one dialogue between a policy and the simulated user.
 *
 * The user opens; each loop iteration tracks the user turn, lets the policy
 * answer from the candidate menu, grounds the choice and obtains the user's
 * reaction. Per agent turn the reward is -1, with +20 added on the turn whose
 * reaction was a satisfied hang-up. Dialogues cap at max_turns agent turns.
 */
inline EpisodeLog run_episode(Policy& policy, const Ontology& ont, std::uint64_t seed,
                              const EpisodeConfig& cfg = {}) {
  Rng rng(seed);
  Goal goal = sample_goal(ont, rng);
  UserSimulator user(ont, goal, rng.next_u64());
  EpisodeLog log;
  log.goal = goal;
  log.seed = seed;
  log.reward_mode = cfg.reward_mode;

  policy.begin_episode();
  const auto candidates = candidate_actions(ont);
  DialogueState state;
  const Entity* offered = nullptr;
  std::optional<AgentTurn> last;
  AbstractedAct user_act = user.open();

  for (int turn = 1; turn <= cfg.max_turns; ++turn) {
    state = dst_update(state, last ? &last->act : nullptr, user_act, ont);
    SummaryState h = summarize_state(state, ont);
    SummaryAction y = policy.select(h, candidates);
    const bool listed = std::any_of(candidates.begin(), candidates.end(),
                                    [&](const SummaryAction& c) { return c.same_as(y); });
    if (!listed) throw std::logic_error("policy returned an action outside the candidate menu");

    AgentTurn agent = ground_action(y, state, ont, offered);
    offered = agent.none_claim ? nullptr : agent.offered;

    TurnRecord rec;
    rec.user_act = render_act(user_act);
    rec.user_sentence = summarize_act(user_act, ont).v;
    rec.state = h.v;
    rec.action = y.v;
    rec.agent_act = agent.none_claim ? agent.act.act + "(none)" : render_act(agent.act);
    rec.reward = -1.0;
    log.turns.push_back(std::move(rec));

    if (ont.act_role(y.act) == ActRole::Bye) break;  // agent hung up; user never got there

    AbstractedAct reaction = user.respond(agent);
    if (ont.act_role(reaction.act) == ActRole::Bye) {
      if (user.success()) {
        log.success = true;
        log.turns.back().reward += 20.0;
      }
      break;
    }
    user_act = reaction;
    last = agent;
  }

  log.length = static_cast<int>(log.turns.size());
  for (const auto& t : log.turns) log.total_reward += t.reward;
  return log;
}

// Discounted-free return labels: reward summed from each turn to the end.
inline std::vector<double> returns_to_go(const EpisodeLog& log) {
  std::vector<double> out(log.turns.size());
  double acc = 0.0;
  for (int i = static_cast<int>(log.turns.size()) - 1; i >= 0; --i) {
    acc += log.turns[i].reward;
    out[i] = acc;
  }
  return out;
}

}  // namespace promise
