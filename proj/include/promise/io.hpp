#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "promise/common.hpp"
#include "promise/gp_policy.hpp"
#include "promise/mapping.hpp"
#include "promise/ontology.hpp"
#include "promise/simulator.hpp"

namespace promise {

namespace detail {

inline Json vec_to_json(const VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline VectorXd vec_from_json(const Json& j, const std::string& origin) {
  if (!j.is_array()) throw ConfigError(origin + ": expected a numeric array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(origin + ": expected a numeric array");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline Json mat_to_json(const MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vec_to_json(m.row(r).transpose()));
  return out;
}

inline MatrixXd mat_from_json(const Json& j, const std::string& origin) {
  if (!j.is_array()) throw ConfigError(origin + ": expected an array of rows");
  MatrixXd m;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const VectorXd row = vec_from_json(j[r], origin);
    if (r == 0) m.resize(static_cast<Eigen::Index>(j.size()), row.size());
    if (row.size() != m.cols()) throw ConfigError(origin + ": ragged matrix rows");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

inline const Json& need_key(const Json& j, const std::string& key, const std::string& origin) {
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(origin + ": missing key '" + key + "'");
  return *it;
}

inline void check_header(const Json& j, const std::string& kind, const std::string& origin) {
  if (!j.is_object()) throw ConfigError(origin + ": expected a JSON object");
  if (need_key(j, "schema", origin).get<int>() != 1)
    throw ConfigError(origin + ": unsupported schema version");
  if (need_key(j, "kind", origin).get<std::string>() != kind)
    throw ConfigError(origin + ": expected kind '" + kind + "'");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Episode logs

// One episode as JSON. Per-turn rewards are written only in per-turn mode;
// terminal-only episodes store just the total, and the loader rebuilds the
// per-turn decomposition (-1 each agent turn, +20 on the final turn of a
// success), which is exact by construction.
inline Json episode_to_json(const EpisodeLog& log) {
  Json goal;
  goal["constraints"] = Json::array();
  for (const auto& [slot, value] : log.goal.constraints)
    goal["constraints"].push_back(Json::array({slot, value}));
  goal["requests"] = log.goal.requests;
  Json j;
  j["goal"] = std::move(goal);
  j["seed"] = log.seed;
  j["reward_mode"] = log.reward_mode == RewardMode::PerTurn ? "per_turn" : "terminal_only";
  j["success"] = log.success;
  j["length"] = log.length;
  j["total_reward"] = log.total_reward;
  j["turns"] = Json::array();
  for (const auto& rec : log.turns) {
    Json t;
    t["user_act"] = rec.user_act;
    t["agent_act"] = rec.agent_act;
    t["user_sentence"] = detail::vec_to_json(rec.user_sentence);
    t["state"] = detail::vec_to_json(rec.state);
    t["action"] = detail::vec_to_json(rec.action);
    if (log.reward_mode == RewardMode::PerTurn) t["reward"] = rec.reward;
    j["turns"].push_back(std::move(t));
  }
  return j;
}

inline EpisodeLog episode_from_json(const Json& j, const std::string& origin) {
  using detail::need_key;
  if (!j.is_object()) throw ConfigError(origin + ": expected an episode object");
  EpisodeLog log;
  const Json& goal = need_key(j, "goal", origin);
  for (const auto& pair : need_key(goal, "constraints", origin)) {
    if (!pair.is_array() || pair.size() != 2)
      throw ConfigError(origin + ": goal constraints must be [slot, value] pairs");
    log.goal.constraints.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
  }
  for (const auto& r : need_key(goal, "requests", origin))
    log.goal.requests.push_back(r.get<std::string>());
  log.seed = need_key(j, "seed", origin).get<std::uint64_t>();
  const std::string mode = need_key(j, "reward_mode", origin).get<std::string>();
  if (mode == "per_turn")
    log.reward_mode = RewardMode::PerTurn;
  else if (mode == "terminal_only")
    log.reward_mode = RewardMode::TerminalOnly;
  else
    throw ConfigError(origin + ": unknown reward_mode '" + mode + "'");
  log.success = need_key(j, "success", origin).get<bool>();
  log.total_reward = need_key(j, "total_reward", origin).get<double>();
  for (const auto& t : need_key(j, "turns", origin)) {
    TurnRecord rec;
    rec.user_act = need_key(t, "user_act", origin).get<std::string>();
    rec.agent_act = need_key(t, "agent_act", origin).get<std::string>();
    rec.user_sentence = detail::vec_from_json(need_key(t, "user_sentence", origin), origin);
    rec.state = detail::vec_from_json(need_key(t, "state", origin), origin);
    rec.action = detail::vec_from_json(need_key(t, "action", origin), origin);
    if (log.reward_mode == RewardMode::PerTurn)
      rec.reward = need_key(t, "reward", origin).get<double>();
    else
      rec.reward = -1.0;
    log.turns.push_back(std::move(rec));
  }
  if (log.reward_mode == RewardMode::TerminalOnly && log.success && !log.turns.empty())
    log.turns.back().reward += 20.0;
  log.length = static_cast<int>(log.turns.size());
  if (need_key(j, "length", origin).get<int>() != log.length)
    throw ConfigError(origin + ": stored length does not match the turn count");
  double total = 0.0;
  for (const auto& rec : log.turns) total += rec.reward;
  if (total != log.total_reward)
    throw ConfigError(origin + ": stored total_reward does not match the turns");
  return log;
}

// One episode per line.
inline void save_episodes_jsonl(const std::string& path, const std::vector<EpisodeLog>& logs) {
  std::string out;
  for (const auto& log : logs) {
    out += episode_to_json(log).dump();
    out += '\n';
  }
  write_text_file(path, out);
}

inline std::vector<EpisodeLog> load_episodes_jsonl(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::vector<EpisodeLog> logs;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    const std::string origin = path + ":" + std::to_string(n);
    try {
      logs.push_back(episode_from_json(Json::parse(line), origin));
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(origin + ": invalid JSON: " + e.what());
    }
  }
  return logs;
}

// ---------------------------------------------------------------------------
// GP snapshots

inline Json gp_config_to_json(const GpConfig& cfg) {
  Json j;
  j["signal_variance"] = cfg.signal_variance;
  j["length_scale"] = cfg.length_scale;
  j["noise_variance"] = cfg.noise_variance;
  j["budget"] = cfg.budget;
  j["novelty_threshold"] = cfg.novelty_threshold;
  return j;
}

inline GpConfig gp_config_from_json(const Json& j, const std::string& origin) {
  using detail::need_key;
  GpConfig cfg;
  cfg.signal_variance = need_key(j, "signal_variance", origin).get<double>();
  cfg.length_scale = need_key(j, "length_scale", origin).get<double>();
  cfg.noise_variance = need_key(j, "noise_variance", origin).get<double>();
  cfg.budget = need_key(j, "budget", origin).get<int>();
  cfg.novelty_threshold = need_key(j, "novelty_threshold", origin).get<double>();
  return cfg;
}

inline Json gp_to_json(const GPModel& model) {
  Json j;
  j["config"] = gp_config_to_json(model.config());
  j["inputs"] = detail::mat_to_json(model.inputs());
  j["targets"] = detail::vec_to_json(model.targets());
  return j;
}

// An empty snapshot restores to the prior-only default model.
inline GPModel gp_from_json(const Json& j, const std::string& origin) {
  using detail::need_key;
  const GpConfig cfg = gp_config_from_json(need_key(j, "config", origin), origin);
  const MatrixXd X = detail::mat_from_json(need_key(j, "inputs", origin), origin);
  const VectorXd y = detail::vec_from_json(need_key(j, "targets", origin), origin);
  if (X.rows() != y.size()) throw ConfigError(origin + ": inputs and targets differ in size");
  if (X.rows() == 0) return GPModel();
  return GPModel::restore(X, y, cfg);
}

// ---------------------------------------------------------------------------
// Source snapshot: the trained source model plus the dialogues behind it.

struct SourceSnapshot {
  std::string ontology;  // domain name, checked when the snapshot is reused
  std::uint64_t seed = 0;
  int episodes = 0;
  std::shared_ptr<GPModel> model;
  std::vector<EpisodeLog> logs;
};

inline void save_source_snapshot(const std::string& path, const SourceSnapshot& snap) {
  if (!snap.model) throw std::invalid_argument("source snapshot lacks a model");
  Json j;
  j["schema"] = 1;
  j["kind"] = "source";
  j["ontology"] = snap.ontology;
  j["seed"] = snap.seed;
  j["episodes"] = snap.episodes;
  j["gp"] = gp_to_json(*snap.model);
  j["logs"] = Json::array();
  for (const auto& log : snap.logs) j["logs"].push_back(episode_to_json(log));
  write_text_file(path, j.dump(2) + "\n");
}

inline SourceSnapshot load_source_snapshot(const std::string& path) {
  using detail::need_key;
  const Json j = parse_json_file(path);
  detail::check_header(j, "source", path);
  SourceSnapshot snap;
  snap.ontology = need_key(j, "ontology", path).get<std::string>();
  snap.seed = need_key(j, "seed", path).get<std::uint64_t>();
  snap.episodes = need_key(j, "episodes", path).get<int>();
  snap.model = std::make_shared<GPModel>(gp_from_json(need_key(j, "gp", path), path));
  for (const auto& log : need_key(j, "logs", path))
    snap.logs.push_back(episode_from_json(log, path));
  return snap;
}

// ---------------------------------------------------------------------------
// Mapping snapshot: translation matrices plus the labels to print them with.

struct MappingSnapshot {
  std::string variant;
  std::string target, source;  // domain names
  std::vector<std::string> target_acts, source_acts;
  std::vector<std::string> target_slots, source_slots;
  TranslationMaps maps;
  std::vector<double> loss_trace;
};

inline MappingSnapshot make_mapping_snapshot(const std::string& variant,
                                             const Ontology& target, const Ontology& source,
                                             TranslationMaps maps,
                                             std::vector<double> loss_trace) {
  MappingSnapshot snap;
  snap.variant = variant;
  snap.target = target.name();
  snap.source = source.name();
  snap.target_acts = target.acts();
  snap.source_acts = source.acts();
  for (int s = 0; s < target.n_slots(); ++s) snap.target_slots.push_back(target.slot_name(s));
  for (int s = 0; s < source.n_slots(); ++s) snap.source_slots.push_back(source.slot_name(s));
  snap.maps = std::move(maps);
  snap.loss_trace = std::move(loss_trace);
  return snap;
}

inline void save_mapping_snapshot(const std::string& path, const MappingSnapshot& snap) {
  Json j;
  j["schema"] = 1;
  j["kind"] = "mapping";
  j["variant"] = snap.variant;
  j["target"] = snap.target;
  j["source"] = snap.source;
  j["target_acts"] = snap.target_acts;
  j["source_acts"] = snap.source_acts;
  j["target_slots"] = snap.target_slots;
  j["source_slots"] = snap.source_slots;
  j["act_t2s"] = detail::mat_to_json(snap.maps.act_t2s);
  j["act_s2t"] = detail::mat_to_json(snap.maps.act_s2t);
  j["slot_t2s"] = detail::mat_to_json(snap.maps.slot_t2s);
  j["slot_s2t"] = detail::mat_to_json(snap.maps.slot_s2t);
  j["inf_t2s"] = detail::mat_to_json(snap.maps.inf_t2s);
  j["req_t2s"] = detail::mat_to_json(snap.maps.req_t2s);
  j["loss_trace"] = snap.loss_trace;
  write_text_file(path, j.dump(2) + "\n");
}

inline MappingSnapshot load_mapping_snapshot(const std::string& path) {
  using detail::need_key;
  const Json j = parse_json_file(path);
  detail::check_header(j, "mapping", path);
  MappingSnapshot snap;
  snap.variant = need_key(j, "variant", path).get<std::string>();
  snap.target = need_key(j, "target", path).get<std::string>();
  snap.source = need_key(j, "source", path).get<std::string>();
  snap.target_acts = need_key(j, "target_acts", path).get<std::vector<std::string>>();
  snap.source_acts = need_key(j, "source_acts", path).get<std::vector<std::string>>();
  snap.target_slots = need_key(j, "target_slots", path).get<std::vector<std::string>>();
  snap.source_slots = need_key(j, "source_slots", path).get<std::vector<std::string>>();
  snap.maps.act_t2s = detail::mat_from_json(need_key(j, "act_t2s", path), path);
  snap.maps.act_s2t = detail::mat_from_json(need_key(j, "act_s2t", path), path);
  snap.maps.slot_t2s = detail::mat_from_json(need_key(j, "slot_t2s", path), path);
  snap.maps.slot_s2t = detail::mat_from_json(need_key(j, "slot_s2t", path), path);
  snap.maps.inf_t2s = detail::mat_from_json(need_key(j, "inf_t2s", path), path);
  snap.maps.req_t2s = detail::mat_from_json(need_key(j, "req_t2s", path), path);
  snap.loss_trace = need_key(j, "loss_trace", path).get<std::vector<double>>();
  const auto rows_cols = [&](const MatrixXd& m, std::size_t rows, std::size_t cols,
                             const char* what) {
    if (m.rows() != static_cast<Eigen::Index>(rows) || m.cols() != static_cast<Eigen::Index>(cols))
      throw ConfigError(path + ": " + what + " shape does not match the stored labels");
  };
  rows_cols(snap.maps.act_t2s, snap.target_acts.size(), snap.source_acts.size(), "act_t2s");
  rows_cols(snap.maps.act_s2t, snap.source_acts.size(), snap.target_acts.size(), "act_s2t");
  rows_cols(snap.maps.slot_t2s, snap.target_slots.size(), snap.source_slots.size(), "slot_t2s");
  rows_cols(snap.maps.slot_s2t, snap.source_slots.size(), snap.target_slots.size(), "slot_s2t");
  return snap;
}

}  // namespace promise
