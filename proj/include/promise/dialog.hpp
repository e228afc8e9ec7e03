#pragma once

#include <Eigen/Dense>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "promise/ontology.hpp"

namespace promise {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// A speech act reduced to act name plus (slot, value) pairs; values may be
// empty (requests, unbound confirms).
struct AbstractedAct {
  std::string act;
  std::vector<std::pair<std::string, std::string>> pairs;

  bool slotless() const { return pairs.empty(); }
};

inline std::string render_act(const AbstractedAct& a) {
  std::string out = a.act + "(";
  bool first = true;
  for (const auto& [slot, value] : a.pairs) {
    if (!first) out += ", ";
    first = false;
    out += slot;
    if (!value.empty()) out += "=" + value;
  }
  return out + ")";
}

inline AbstractedAct parse_act(const std::string& text) {
  auto open = text.find('(');
  auto close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw ConfigError("malformed act string: " + text);
  AbstractedAct a;
  a.act = text.substr(0, open);
  std::string body = text.substr(open + 1, close - open - 1);
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto comma = body.find(", ", pos);
    std::string item = body.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    auto eq = item.find('=');
    if (eq == std::string::npos)
      a.pairs.emplace_back(item, "");
    else
      a.pairs.emplace_back(item.substr(0, eq), item.substr(eq + 1));
    if (comma == std::string::npos) break;
    pos = comma + 2;
  }
  return a;
}

// Tracked dialogue state. A value object: updates return new states.
struct DialogueState {
  int match_count = 0;
  std::string last_user_act;                     // empty before the first user turn
  std::map<std::string, std::string> constraints;  // informable slot -> value
  std::set<std::string> requests;                // pending requestable slots
};

constexpr int kMatchBuckets = 4;

// Buckets for the match count: 0, 1, 2-4, 5 and more.
inline int match_bucket(int count) {
  if (count < 0) throw std::invalid_argument("negative match count");
  if (count == 0) return 0;
  if (count == 1) return 1;
  if (count <= 4) return 2;
  return 3;
}

// Block offsets of the fixed-length summary encodings for one domain.
//
// state  = [ match bucket one-hot | user act one-hot | constrained informables | pending requestables ]
// action = [ act one-hot | slot one-hot over all slots ]
// A user sentence uses the action layout (acts and slot content).
struct SummaryLayout {
  int n_acts = 0;
  int n_informable = 0;
  int n_requestable = 0;

  static SummaryLayout from(const Ontology& ont) {
    return {ont.n_acts(), ont.n_informable(), ont.n_requestable()};
  }

  int n_slots() const { return n_informable + n_requestable; }
  int state_dim() const { return kMatchBuckets + n_acts + n_slots(); }
  int action_dim() const { return n_acts + n_slots(); }
  int sentence_dim() const { return action_dim(); }

  int state_act_offset() const { return kMatchBuckets; }
  int state_inf_offset() const { return kMatchBuckets + n_acts; }
  int state_req_offset() const { return kMatchBuckets + n_acts + n_informable; }
  int action_slot_offset() const { return n_acts; }
};

struct SummaryState {
  VectorXd v;
};

struct SummaryAction {
  int act = -1;   // act index
  int slot = -1;  // combined slot index, -1 when slotless or multi-slot
  VectorXd v;

  bool same_as(const SummaryAction& other) const {
    return act == other.act && slot == other.slot && v.size() == other.v.size();
  }
};

inline SummaryState summarize_state(const DialogueState& s, const Ontology& ont) {
  const SummaryLayout lay = SummaryLayout::from(ont);
  VectorXd v = VectorXd::Zero(lay.state_dim());
  v[match_bucket(s.match_count)] = 1.0;
  if (!s.last_user_act.empty()) v[lay.state_act_offset() + ont.act_index(s.last_user_act)] = 1.0;
  for (const auto& [slot, value] : s.constraints)
    v[lay.state_inf_offset() + ont.slot_index(slot)] = 1.0;
  for (const auto& slot : s.requests)
    v[lay.state_req_offset() + (ont.slot_index(slot) - ont.n_informable())] = 1.0;
  return {std::move(v)};
}

// Vector form of a sentence or agent action. Multi-slot acts spread the slot
// mass uniformly so the block still sums to one; slotless acts leave it zero.
inline SummaryAction summarize_act(const AbstractedAct& a, const Ontology& ont) {
  const SummaryLayout lay = SummaryLayout::from(ont);
  SummaryAction out;
  out.act = ont.act_index(a.act);
  out.v = VectorXd::Zero(lay.action_dim());
  out.v[out.act] = 1.0;
  if (!a.pairs.empty()) {
    const double w = 1.0 / static_cast<double>(a.pairs.size());
    for (const auto& [slot, value] : a.pairs)
      out.v[lay.action_slot_offset() + ont.slot_index(slot)] += w;
    out.slot = a.pairs.size() == 1 ? ont.slot_index(a.pairs[0].first) : -1;
  }
  return out;
}

/**
 * Rule-based state update. Pure: returns the successor state.
 *
 * User informs (and deny corrections) set constraints last-value-wins; user
 * requests raise pending flags; an affirm following an agent confirm adopts
 * the confirmed value. An agent inform that answered a requestable clears its
 * pending flag. Content that does not fit the ontology is ignored with a
 * warning rather than rejected, since logged corpora may be dirty.
 */
inline DialogueState dst_update(const DialogueState& state, const AbstractedAct* agent_reply,
                                const AbstractedAct& user_act, const Ontology& ont) {
  DialogueState next = state;
  if (agent_reply && ont.has_act(agent_reply->act) &&
      ont.act_role(agent_reply->act) == ActRole::Inform) {
    for (const auto& [slot, value] : agent_reply->pairs)
      if (!value.empty() && ont.has_slot(slot) && !ont.is_informable(slot))
        next.requests.erase(slot);
  }
  if (!ont.has_act(user_act.act)) {
    std::cerr << "[dst] ignoring unknown act: " << user_act.act << "\n";
    return next;
  }
  const ActRole role = ont.act_role(user_act.act);
  for (const auto& [slot, value] : user_act.pairs) {
    if (!ont.has_slot(slot)) {
      std::cerr << "[dst] ignoring unknown slot: " << slot << "\n";
      continue;
    }
    if (role == ActRole::Request) {
      if (!ont.is_informable(slot)) next.requests.insert(slot);
      else std::cerr << "[dst] ignoring request for informable slot: " << slot << "\n";
    } else if (ont.is_informable(slot)) {
      if (ont.is_valid_value(slot, value)) next.constraints[slot] = value;
      else std::cerr << "[dst] ignoring out-of-list value for " << slot << "\n";
    } else {
      std::cerr << "[dst] ignoring non-informable content slot: " << slot << "\n";
    }
  }
  if (role == ActRole::Affirm && agent_reply && ont.has_act(agent_reply->act) &&
      ont.act_role(agent_reply->act) == ActRole::Confirm) {
    for (const auto& [slot, value] : agent_reply->pairs)
      if (!value.empty() && ont.has_slot(slot) && ont.is_informable(slot) &&
          ont.is_valid_value(slot, value))
        next.constraints[slot] = value;
  }
  next.last_user_act = user_act.act;
  next.match_count = count_matches(ont, next.constraints);
  return next;
}

/**
 * The fixed action menu of a domain. Acts expand against the slot kinds their
 * role may address: request over informables, inform over requestables,
 * confirm over informables; offer, bye and hello are slotless. Roles with no
 * agent use (affirm, deny) contribute nothing. Order is deterministic: acts in
 * declaration order, slots in index order.
 */
inline std::vector<SummaryAction> candidate_actions(const Ontology& ont) {
  const SummaryLayout lay = SummaryLayout::from(ont);
  std::vector<SummaryAction> out;
  auto push = [&](int act, int slot) {
    SummaryAction a;
    a.act = act;
    a.slot = slot;
    a.v = VectorXd::Zero(lay.action_dim());
    a.v[act] = 1.0;
    if (slot >= 0) a.v[lay.action_slot_offset() + slot] = 1.0;
    out.push_back(std::move(a));
  };
  for (int i = 0; i < ont.n_acts(); ++i) {
    switch (ont.act_role(i)) {
      case ActRole::Request:
      case ActRole::Confirm:
        for (int s = 0; s < ont.n_informable(); ++s) push(i, s);
        break;
      case ActRole::Inform:
        for (int s = 0; s < ont.n_requestable(); ++s) push(i, ont.n_informable() + s);
        break;
      case ActRole::Offer:
      case ActRole::Bye:
      case ActRole::Hello:
        push(i, -1);
        break;
      case ActRole::Affirm:
      case ActRole::Deny:
        break;
    }
  }
  return out;
}

}  // namespace promise
