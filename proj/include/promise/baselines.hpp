#pragma once

#include <algorithm>
#include <memory>
#include <tuple>

#include "promise/transfer.hpp"

namespace promise {

/**
 * Empirical distribution over requestable slots of how often users ask for
 * them, read from the logged request-role user turns. Falls back to uniform
 * when the logs contain no requests at all.
 */
inline VectorXd request_frequencies(const std::vector<EpisodeLog>& logs, const Ontology& ont) {
  VectorXd counts = VectorXd::Zero(ont.n_requestable());
  for (const auto& log : logs)
    for (const auto& rec : log.turns) {
      const AbstractedAct act = parse_act(rec.user_act);
      if (!ont.has_act(act.act) || ont.act_role(act.act) != ActRole::Request) continue;
      for (const auto& [slot, value] : act.pairs)
        if (ont.has_slot(slot) && !ont.is_informable(slot))
          counts[ont.slot_index(slot) - ont.n_informable()] += 1.0;
    }
  const double total = counts.sum();
  if (total <= 0.0) return VectorXd::Constant(ont.n_requestable(), 1.0 / ont.n_requestable());
  return counts / total;
}

namespace detail {

// Greedy one-to-one assignment by minimal |score_t - score_s|; ties resolve
// to the lowest target index, then the lowest source index. Returns pairs
// (target, source); unmatched indices on the longer side stay out.
inline std::vector<std::pair<int, int>> greedy_match(const VectorXd& target_scores,
                                                     const VectorXd& source_scores) {
  std::vector<std::tuple<double, int, int>> gaps;
  for (int t = 0; t < target_scores.size(); ++t)
    for (int s = 0; s < source_scores.size(); ++s)
      gaps.emplace_back(std::abs(target_scores[t] - source_scores[s]), t, s);
  std::sort(gaps.begin(), gaps.end());
  std::vector<bool> t_used(target_scores.size(), false), s_used(source_scores.size(), false);
  std::vector<std::pair<int, int>> out;
  for (const auto& [gap, t, s] : gaps) {
    if (t_used[t] || s_used[s]) continue;
    t_used[t] = s_used[s] = true;
    out.emplace_back(t, s);
  }
  return out;
}

}  // namespace detail

/**
 * Heuristic 0/1 slot matching: informables pair greedily by closest
 * normalized value entropy, requestables by closest request frequency in the
 * respective logs. Rows of unmatched target slots stay zero.
 */
inline MatrixXd entropy_slot_matching(const Ontology& target, const Ontology& source,
                                      const std::vector<EpisodeLog>& target_logs,
                                      const std::vector<EpisodeLog>& source_logs) {
  VectorXd eta_t(target.n_informable()), eta_s(source.n_informable());
  for (int i = 0; i < target.n_informable(); ++i)
    eta_t[i] = normalized_slot_entropy(target, target.slot_name(i));
  for (int i = 0; i < source.n_informable(); ++i)
    eta_s[i] = normalized_slot_entropy(source, source.slot_name(i));

  MatrixXd m = MatrixXd::Zero(target.n_slots(), source.n_slots());
  for (const auto& [t, s] : detail::greedy_match(eta_t, eta_s)) m(t, s) = 1.0;

  const VectorXd freq_t = request_frequencies(target_logs, target);
  const VectorXd freq_s = request_frequencies(source_logs, source);
  for (const auto& [t, s] : detail::greedy_match(freq_t, freq_s))
    m(target.n_informable() + t, source.n_informable() + s) = 1.0;
  return m;
}

// Uniformly seeded one-to-one partial permutation over acts: both sides are
// shuffled and the first min(|A^t|, |A^s|) pairs matched.
inline MatrixXd random_act_mapping(const Ontology& target, const Ontology& source, Rng& rng) {
  std::vector<int> t_idx(target.n_acts()), s_idx(source.n_acts());
  for (std::size_t i = 0; i < t_idx.size(); ++i) t_idx[i] = static_cast<int>(i);
  for (std::size_t i = 0; i < s_idx.size(); ++i) s_idx[i] = static_cast<int>(i);
  rng.shuffle(t_idx);
  rng.shuffle(s_idx);
  MatrixXd m = MatrixXd::Zero(target.n_acts(), source.n_acts());
  const int n = std::min(target.n_acts(), source.n_acts());
  for (int i = 0; i < n; ++i) m(t_idx[i], s_idx[i]) = 1.0;
  return m;
}

// Permutation matrices straight from a ground-truth alias table; unknown
// names raise, unmapped target entries keep zero rows.
struct GroundTruthMaps {
  MatrixXd acts;
  MatrixXd slots;
};

inline GroundTruthMaps ground_truth_mappings(const AliasTable& alias, const Ontology& target,
                                             const Ontology& source) {
  auto [acts, slots] = alias_matrices(alias, target, source);
  return {std::move(acts), std::move(slots)};
}

// The comparison systems: no transfer, and the four fixed/learned
// combinations of act and slot mappings around the transferred Q-function.
enum class Variant { NoneTL, RAFS, LAFS, FAFS, FALS, Promise };

inline Variant parse_variant(const std::string& name) {
  if (name == "nonetl") return Variant::NoneTL;
  if (name == "rafs") return Variant::RAFS;
  if (name == "lafs") return Variant::LAFS;
  if (name == "fafs") return Variant::FAFS;
  if (name == "fals") return Variant::FALS;
  if (name == "promise") return Variant::Promise;
  throw ConfigError("unknown variant: " + name +
                    " (expected promise|nonetl|rafs|lafs|fafs|fals)");
}

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::NoneTL: return "nonetl";
    case Variant::RAFS: return "rafs";
    case Variant::LAFS: return "lafs";
    case Variant::FAFS: return "fafs";
    case Variant::FALS: return "fals";
    case Variant::Promise: return "promise";
  }
  throw std::logic_error("unhandled variant");
}

struct VariantInputs {
  std::shared_ptr<const GPModel> source_q;  // trained source model; unused by NoneTL
  const Ontology* source = nullptr;
  const Ontology* target = nullptr;
  std::vector<EpisodeLog> source_logs;
  std::vector<EpisodeLog> target_logs;
  std::optional<AliasTable> alias;  // ground truth, required by FAFS/FALS
  TransferConfig cfg;
  GpConfig gp;  // NoneTL's fit settings
};

struct VariantPolicy {
  std::string name;
  std::unique_ptr<ValuePolicy> policy;
  std::optional<TranslationMaps> maps;  // absent for NoneTL
  std::vector<double> loss_trace;       // nonempty only for trained mappings
};

/**
 * Assembles one comparison system. NoneTL fits a fresh GP on the target
 * dialogues alone (prior-only when there are none). The transfer variants
 * translate through fixed matrices, trained embeddings, or a pinned mix of
 * the two, all scoring against the source Q-function.
 */
inline VariantPolicy build_variant(Variant v, const VariantInputs& in) {
  if (in.target == nullptr || in.source == nullptr)
    throw std::invalid_argument("variant needs both ontologies");

  VariantPolicy out;
  out.name = variant_name(v);

  if (v == Variant::NoneTL) {
    std::vector<VectorXd> xs;
    std::vector<double> ys;
    episodes_to_dataset(in.target_logs, xs, ys);
    auto model = xs.empty() ? std::make_shared<GPModel>()
                            : std::make_shared<GPModel>(GPModel::fit(xs, ys, in.gp));
    out.policy = std::make_unique<GpPolicy>(std::move(model));
    return out;
  }

  if (in.source_q == nullptr) throw std::invalid_argument("transfer variant needs a source model");

  const bool needs_truth = v == Variant::FAFS || v == Variant::FALS;
  if (needs_truth && !in.alias)
    throw std::invalid_argument("ground-truth variant needs an alias table");

  std::optional<std::pair<MatrixXd, MatrixXd>> fixed_acts;
  std::optional<std::pair<MatrixXd, MatrixXd>> fixed_slots;
  if (v == Variant::RAFS) {
    Rng rng(mix_seed(in.cfg.seed, "rafs-acts"));
    MatrixXd acts = random_act_mapping(*in.target, *in.source, rng);
    fixed_acts = {acts, acts.transpose()};
  }
  if (needs_truth) {
    const GroundTruthMaps truth = ground_truth_mappings(*in.alias, *in.target, *in.source);
    fixed_acts = {truth.acts, truth.acts.transpose()};
  }
  if (v == Variant::RAFS || v == Variant::LAFS || v == Variant::FAFS) {
    MatrixXd slots =
        entropy_slot_matching(*in.target, *in.source, in.target_logs, in.source_logs);
    fixed_slots = {slots, slots.transpose()};
  }

  if (v == Variant::RAFS || v == Variant::FAFS) {
    out.maps = TranslationMaps::from_matrices(fixed_acts->first, fixed_acts->second,
                                              fixed_slots->first, fixed_slots->second,
                                              *in.target, *in.source);
  } else {
    MapBuilder builder{in.target, in.source, std::move(fixed_acts), std::move(fixed_slots)};
    const TransferProblem problem =
        make_transfer_problem(*in.source_q, in.source_logs, in.target_logs, *in.target,
                              *in.source, in.cfg, std::move(builder));
    TransferResult trained = train_transfer(problem);
    out.maps = std::move(trained.maps);
    out.loss_trace = std::move(trained.loss_trace);
  }
  out.policy =
      std::make_unique<TransferredPolicy>(in.source_q, *out.maps, *in.target, *in.source);
  return out;
}

}  // namespace promise
