#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "promise/common.hpp"

namespace promise {

// Canonical speech-act semantics. Surface act names differ per domain, so the
// environment (state tracker, simulator, candidate rules) keys off these.
enum class ActRole { Hello, Inform, Request, Confirm, Affirm, Deny, Offer, Bye };

inline const char* role_name(ActRole r) {
  switch (r) {
    case ActRole::Hello: return "hello";
    case ActRole::Inform: return "inform";
    case ActRole::Request: return "request";
    case ActRole::Confirm: return "confirm";
    case ActRole::Affirm: return "affirm";
    case ActRole::Deny: return "deny";
    case ActRole::Offer: return "offer";
    case ActRole::Bye: return "bye";
  }
  return "?";
}

inline std::optional<ActRole> parse_role(const std::string& s) {
  static const std::map<std::string, ActRole> table = {
      {"hello", ActRole::Hello},     {"inform", ActRole::Inform}, {"request", ActRole::Request},
      {"confirm", ActRole::Confirm}, {"affirm", ActRole::Affirm}, {"deny", ActRole::Deny},
      {"offer", ActRole::Offer},     {"bye", ActRole::Bye}};
  auto it = table.find(s);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

struct Entity {
  std::string name;
  std::map<std::string, std::string> values;  // slot name -> value, covers every slot

  const std::string& value(const std::string& slot) const {
    auto it = values.find(slot);
    if (it == values.end()) throw std::invalid_argument("entity " + name + " lacks slot " + slot);
    return it->second;
  }
};

/**
 * Immutable domain description: speech acts (with roles), informable slots
 * with their closed value sets, requestable slots, and the entity database.
 *
 * Index layout is fixed by file order: acts by declaration order, slots as
 * informables first then requestables. All vector encodings elsewhere depend
 * on this layout being stable.
 */
class Ontology {
 public:
  Ontology(std::string name, std::vector<std::string> acts, std::vector<ActRole> roles,
           std::vector<std::pair<std::string, std::vector<std::string>>> informable,
           std::vector<std::string> requestable, std::vector<Entity> entities)
      : name_(std::move(name)),
        acts_(std::move(acts)),
        roles_(std::move(roles)),
        informable_(std::move(informable)),
        requestable_(std::move(requestable)),
        entities_(std::move(entities)) {
    validate();
    for (int i = 0; i < static_cast<int>(acts_.size()); ++i) act_index_[acts_[i]] = i;
    int s = 0;
    for (const auto& [slot, values] : informable_) slot_index_[slot] = s++;
    for (const auto& slot : requestable_) slot_index_[slot] = s++;
  }

  const std::string& name() const { return name_; }

  int n_acts() const { return static_cast<int>(acts_.size()); }
  int n_informable() const { return static_cast<int>(informable_.size()); }
  int n_requestable() const { return static_cast<int>(requestable_.size()); }
  int n_slots() const { return n_informable() + n_requestable(); }

  const std::vector<std::string>& acts() const { return acts_; }
  const std::string& act_name(int i) const { return acts_.at(i); }
  ActRole act_role(int i) const { return roles_.at(i); }
  ActRole act_role(const std::string& act) const { return roles_.at(act_index(act)); }

  int act_index(const std::string& act) const {
    auto it = act_index_.find(act);
    if (it == act_index_.end()) throw std::invalid_argument("unknown act: " + act);
    return it->second;
  }

  // First act carrying the given role. Fixtures declare one act per role.
  int role_act(ActRole role) const {
    for (int i = 0; i < n_acts(); ++i)
      if (roles_[i] == role) return i;
    throw std::invalid_argument(std::string("no act with role ") + role_name(role));
  }

  bool has_act(const std::string& act) const { return act_index_.count(act) > 0; }

  // Combined slot index: informables occupy [0, n_informable), requestables follow.
  int slot_index(const std::string& slot) const {
    auto it = slot_index_.find(slot);
    if (it == slot_index_.end()) throw std::invalid_argument("unknown slot: " + slot);
    return it->second;
  }

  bool has_slot(const std::string& slot) const { return slot_index_.count(slot) > 0; }
  bool is_informable(const std::string& slot) const { return slot_index(slot) < n_informable(); }

  const std::string& slot_name(int i) const {
    if (i < 0 || i >= n_slots()) throw std::invalid_argument("slot index out of range");
    if (i < n_informable()) return informable_[i].first;
    return requestable_[i - n_informable()];
  }

  const std::string& informable_name(int i) const { return informable_.at(i).first; }
  const std::string& requestable_name(int i) const { return requestable_.at(i); }

  const std::vector<std::string>& informable_values(const std::string& slot) const {
    for (const auto& [name, values] : informable_)
      if (name == slot) return values;
    throw std::invalid_argument("unknown informable slot: " + slot);
  }

  bool is_valid_value(const std::string& slot, const std::string& value) const {
    if (!has_slot(slot) || !is_informable(slot)) return false;
    const auto& vals = informable_values(slot);
    return std::find(vals.begin(), vals.end(), value) != vals.end();
  }

  const std::vector<Entity>& entities() const { return entities_; }

 private:
  void validate() const {
    if (name_.empty()) throw ConfigError("ontology needs a name");
    if (acts_.empty()) throw ConfigError("ontology needs at least one speech act");
    if (roles_.size() != acts_.size()) throw ConfigError("act role list does not match acts");
    std::set<std::string> seen;
    for (const auto& a : acts_)
      if (!seen.insert(a).second) throw ConfigError("duplicate act name: " + a);
    seen.clear();
    for (const auto& [slot, values] : informable_) {
      if (!seen.insert(slot).second) throw ConfigError("duplicate slot name: " + slot);
      if (values.empty()) throw ConfigError("informable slot has no values: " + slot);
      std::set<std::string> vs(values.begin(), values.end());
      if (vs.size() != values.size()) throw ConfigError("duplicate value in slot: " + slot);
    }
    for (const auto& slot : requestable_)
      if (!seen.insert(slot).second) throw ConfigError("duplicate slot name: " + slot);
    std::set<std::string> entity_names;
    for (const auto& e : entities_) {
      if (!entity_names.insert(e.name).second) throw ConfigError("duplicate entity: " + e.name);
      for (const auto& [slot, values] : informable_) {
        auto it = e.values.find(slot);
        if (it == e.values.end())
          throw ConfigError("entity " + e.name + " misses informable slot " + slot);
        if (std::find(values.begin(), values.end(), it->second) == values.end())
          throw ConfigError("entity " + e.name + " has out-of-list value for " + slot);
      }
      for (const auto& slot : requestable_)
        if (!e.values.count(slot))
          throw ConfigError("entity " + e.name + " misses requestable slot " + slot);
    }
  }

  std::string name_;
  std::vector<std::string> acts_;
  std::vector<ActRole> roles_;
  std::vector<std::pair<std::string, std::vector<std::string>>> informable_;
  std::vector<std::string> requestable_;
  std::vector<Entity> entities_;
  std::map<std::string, int> act_index_;
  std::map<std::string, int> slot_index_;
};

inline Ontology parse_ontology(const Json& j, const std::string& origin = "<memory>") {
  auto need = [&](const char* key) -> const Json& {
    if (!j.contains(key)) throw ConfigError(origin + ": missing key '" + key + "'");
    return j.at(key);
  };
  try {
    std::vector<std::string> acts = need("speech_acts").get<std::vector<std::string>>();
    const Json& roles_json = need("act_roles");
    std::vector<ActRole> roles;
    for (const auto& a : acts) {
      if (!roles_json.contains(a)) throw ConfigError(origin + ": act_roles misses act " + a);
      auto role = parse_role(roles_json.at(a).get<std::string>());
      if (!role) throw ConfigError(origin + ": unknown role for act " + a);
      roles.push_back(*role);
    }
    std::vector<std::pair<std::string, std::vector<std::string>>> informable;
    for (const auto& [slot, values] : need("informable_slots").items())
      informable.emplace_back(slot, values.get<std::vector<std::string>>());
    auto requestable = need("requestable_slots").get<std::vector<std::string>>();
    std::vector<Entity> entities;
    for (const auto& ej : need("entities")) {
      Entity e;
      e.name = ej.at("name").get<std::string>();
      for (const auto& [key, value] : ej.items())
        if (key != "name") e.values[key] = value.get<std::string>();
      entities.push_back(std::move(e));
    }
    return Ontology(need("name").get<std::string>(), std::move(acts), std::move(roles),
                    std::move(informable), std::move(requestable), std::move(entities));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(origin + ": malformed ontology: " + e.what());
  }
}

inline Ontology load_ontology(const std::string& path) {
  return parse_ontology(parse_json_file(path), path);
}

// Number of entities consistent with every given (slot, value) constraint.
inline int count_matches(const Ontology& ont,
                         const std::map<std::string, std::string>& constraints) {
  for (const auto& [slot, value] : constraints) {
    if (!ont.has_slot(slot) || !ont.is_informable(slot))
      throw std::invalid_argument("constraint on non-informable slot: " + slot);
    if (!ont.is_valid_value(slot, value))
      throw std::invalid_argument("invalid value '" + value + "' for slot " + slot);
  }
  int n = 0;
  for (const auto& e : ont.entities()) {
    bool ok = true;
    for (const auto& [slot, value] : constraints)
      if (e.value(slot) != value) {
        ok = false;
        break;
      }
    n += ok ? 1 : 0;
  }
  return n;
}

// Entropy of the empirical value distribution of an informable slot across the
// entity database, normalized by log of the slot's value-list size. Zero for
// single-value slots by convention.
inline double normalized_slot_entropy(const Ontology& ont, const std::string& slot) {
  if (!ont.has_slot(slot) || !ont.is_informable(slot))
    throw std::invalid_argument("entropy needs an informable slot, got: " + slot);
  if (ont.entities().empty()) throw std::invalid_argument("entropy needs a nonempty database");
  const auto& values = ont.informable_values(slot);
  if (values.size() <= 1) return 0.0;
  std::map<std::string, int> counts;
  for (const auto& e : ont.entities()) counts[e.value(slot)]++;
  const double total = static_cast<double>(ont.entities().size());
  double h = 0.0;
  for (const auto& [value, count] : counts) {
    const double p = count / total;
    h -= p * std::log(p);
  }
  return h / std::log(static_cast<double>(values.size()));
}

// Ground-truth correspondence between a target domain and a source domain.
// Missing or null entries mean the act/slot has no counterpart.
struct AliasTable {
  std::map<std::string, std::string> acts;   // target act  -> source act
  std::map<std::string, std::string> slots;  // target slot -> source slot
};

inline AliasTable parse_alias(const Json& j, const std::string& origin = "<memory>") {
  AliasTable t;
  try {
    if (j.contains("acts"))
      for (const auto& [k, v] : j.at("acts").items())
        if (!v.is_null()) t.acts[k] = v.get<std::string>();
    if (j.contains("slots"))
      for (const auto& [k, v] : j.at("slots").items())
        if (!v.is_null()) t.slots[k] = v.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(origin + ": malformed alias file: " + e.what());
  }
  return t;
}

inline AliasTable load_alias(const std::string& path) {
  return parse_alias(parse_json_file(path), path);
}

}  // namespace promise
