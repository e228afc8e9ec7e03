#pragma once

#include <limits>
#include <optional>

#include "promise/gp_policy.hpp"
#include "promise/mapping.hpp"
#include "promise/predictor.hpp"

namespace promise {

// One sentence reduced to its act distribution and normalized slot
// distribution; slotless sentences are dropped before this point.
struct SentenceExample {
  VectorXd act;
  VectorXd slot;
};

// Agent sentence followed by the user's next act, for the user-reaction
// regularizer and its predictor.
struct UserPredExample {
  VectorXd sentence;
  int next_user_act = -1;
};

struct Transition {
  VectorXd h;
  VectorXd y;
  double r = 0.0;
  VectorXd h_next;
  bool terminal = false;
};

struct DomainDataset {
  std::vector<SentenceExample> sentences;    // user and agent, slotless dropped
  std::vector<UserPredExample> user_pairs;   // (y_{n-1}, a_n)
  std::vector<Transition> transitions;
  VectorXd p_user;   // add-one smoothed act frequencies over user sentences
  VectorXd p_agent;  // same over agent actions
};

// Flattens logged episodes into the training views every loss term consumes.
inline DomainDataset build_dataset(const std::vector<EpisodeLog>& logs, const Ontology& ont) {
  const SummaryLayout lay = SummaryLayout::from(ont);
  DomainDataset out;
  VectorXd user_counts = VectorXd::Ones(lay.n_acts);   // add-one smoothing
  VectorXd agent_counts = VectorXd::Ones(lay.n_acts);

  auto add_sentence = [&](const VectorXd& v) {
    const VectorXd slot = v.tail(lay.n_slots());
    if (slot.sum() <= 0.0) return;
    out.sentences.push_back({v.head(lay.n_acts), slot / slot.sum()});
  };

  for (const auto& log : logs) {
    for (std::size_t n = 0; n < log.turns.size(); ++n) {
      const TurnRecord& rec = log.turns[n];
      add_sentence(rec.user_sentence);
      add_sentence(rec.action);
      int user_act = 0;
      rec.user_sentence.head(lay.n_acts).maxCoeff(&user_act);
      int agent_act = 0;
      rec.action.head(lay.n_acts).maxCoeff(&agent_act);
      user_counts[user_act] += 1.0;
      agent_counts[agent_act] += 1.0;
      if (n > 0) out.user_pairs.push_back({log.turns[n - 1].action, user_act});

      Transition tr;
      tr.h = rec.state;
      tr.y = rec.action;
      tr.r = rec.reward;
      tr.terminal = n + 1 == log.turns.size();
      tr.h_next = tr.terminal ? VectorXd::Zero(lay.state_dim()) : log.turns[n + 1].state;
      out.transitions.push_back(std::move(tr));
    }
  }
  out.p_user = user_counts / user_counts.sum();
  out.p_agent = agent_counts / agent_counts.sum();
  return out;
}

// Gradient accumulator mirroring the six translation matrices.
struct MapsGrad {
  MatrixXd act_t2s, act_s2t, slot_t2s, slot_s2t, inf_t2s, req_t2s;

  static MapsGrad zero_like(const TranslationMaps& m) {
    MapsGrad g;
    g.act_t2s = MatrixXd::Zero(m.act_t2s.rows(), m.act_t2s.cols());
    g.act_s2t = MatrixXd::Zero(m.act_s2t.rows(), m.act_s2t.cols());
    g.slot_t2s = MatrixXd::Zero(m.slot_t2s.rows(), m.slot_t2s.cols());
    g.slot_s2t = MatrixXd::Zero(m.slot_s2t.rows(), m.slot_s2t.cols());
    g.inf_t2s = MatrixXd::Zero(m.inf_t2s.rows(), m.inf_t2s.cols());
    g.req_t2s = MatrixXd::Zero(m.req_t2s.rows(), m.req_t2s.cols());
    return g;
  }
};

// d(loss)/d(logits) for a row-wise softmax: u_r = M_r o (dM_r - (M_r . dM_r)).
inline MatrixXd softmax_rows_backward(const MatrixXd& m, const MatrixXd& dm) {
  MatrixXd out(m.rows(), m.cols());
  for (int r = 0; r < m.rows(); ++r) {
    const double dot = m.row(r).dot(dm.row(r));
    out.row(r) = m.row(r).cwiseProduct((dm.row(r).array() - dot).matrix());
  }
  return out;
}

/**
 * Builds TranslationMaps from embeddings, honoring optionally pinned act or
 * slot matrices (used by the fixed-mapping comparison systems), and performs
 * the reverse pass from matrix-space gradients to flat embedding gradients.
 * Pinned blocks contribute no gradient.
 */
struct MapBuilder {
  const Ontology* target = nullptr;
  const Ontology* source = nullptr;
  std::optional<std::pair<MatrixXd, MatrixXd>> fixed_acts;   // (act_t2s, act_s2t)
  std::optional<std::pair<MatrixXd, MatrixXd>> fixed_slots;  // (slot_t2s, slot_s2t)

  TranslationMaps build(const MappingParams& p) const {
    TranslationMaps m;
    if (fixed_acts) {
      m.act_t2s = fixed_acts->first;
      m.act_s2t = fixed_acts->second;
    } else {
      m.act_t2s = act_similarity_matrix(p, Direction::TargetToSource);
      m.act_s2t = act_similarity_matrix(p, Direction::SourceToTarget);
    }
    if (fixed_slots) {
      m.slot_t2s = fixed_slots->first;
      m.slot_s2t = fixed_slots->second;
      m.inf_t2s = m.slot_t2s.topLeftCorner(target->n_informable(), source->n_informable());
      m.req_t2s = m.slot_t2s.bottomRightCorner(target->n_requestable(), source->n_requestable());
    } else {
      m.slot_t2s = slot_similarity_matrix(p, Direction::TargetToSource);
      m.slot_s2t = slot_similarity_matrix(p, Direction::SourceToTarget);
      const MatrixXd logits = p.slot_target * p.slot_source.transpose();
      m.inf_t2s = softmax_rows(
          logits.topLeftCorner(target->n_informable(), source->n_informable()));
      m.req_t2s = softmax_rows(
          logits.bottomRightCorner(target->n_requestable(), source->n_requestable()));
    }
    return m;
  }

  VectorXd backward(const MappingParams& p, const TranslationMaps& maps,
                    const MapsGrad& g) const {
    MappingParams grads;
    grads.d = p.d;
    grads.act_target = MatrixXd::Zero(p.act_target.rows(), p.d);
    grads.act_source = MatrixXd::Zero(p.act_source.rows(), p.d);
    grads.slot_target = MatrixXd::Zero(p.slot_target.rows(), p.d);
    grads.slot_source = MatrixXd::Zero(p.slot_source.rows(), p.d);

    if (!fixed_acts) {
      MatrixXd du = softmax_rows_backward(maps.act_t2s, g.act_t2s);
      du += softmax_rows_backward(maps.act_s2t, g.act_s2t).transpose();
      grads.act_target = du * p.act_source;
      grads.act_source = du.transpose() * p.act_target;
    }
    if (!fixed_slots) {
      MatrixXd dv = softmax_rows_backward(maps.slot_t2s, g.slot_t2s);
      dv += softmax_rows_backward(maps.slot_s2t, g.slot_s2t).transpose();
      dv.topLeftCorner(target->n_informable(), source->n_informable()) +=
          softmax_rows_backward(maps.inf_t2s, g.inf_t2s);
      dv.bottomRightCorner(target->n_requestable(), source->n_requestable()) +=
          softmax_rows_backward(maps.req_t2s, g.req_t2s);
      grads.slot_target = dv * p.slot_source;
      grads.slot_source = dv.transpose() * p.slot_target;
    }
    return grads.flatten();
  }
};

// Transferred Q: the source posterior mean at the translated (state, action).
inline double q_transfer(const TranslationMaps& maps, const GPModel& source_q, const VectorXd& h,
                         const VectorXd& y, const SummaryLayout& tl, const SummaryLayout& sl) {
  const VectorXd hs = translate_state(h, maps, tl, sl);
  const VectorXd ys = translate_sentence(y, maps, tl, sl);
  VectorXd x(hs.size() + ys.size());
  x << hs, ys;
  return source_q.mean(x);
}

namespace detail {

// Scatters d(loss)/d(translated state) back into the three block matrices.
inline void state_backward(const VectorXd& h, const VectorXd& dhs, const SummaryLayout& tl,
                           const SummaryLayout& sl, MapsGrad& g) {
  g.act_t2s.noalias() += h.segment(tl.state_act_offset(), tl.n_acts) *
                         dhs.segment(sl.state_act_offset(), sl.n_acts).transpose();
  g.inf_t2s.noalias() += h.segment(tl.state_inf_offset(), tl.n_informable) *
                         dhs.segment(sl.state_inf_offset(), sl.n_informable).transpose();
  g.req_t2s.noalias() += h.segment(tl.state_req_offset(), tl.n_requestable) *
                         dhs.segment(sl.state_req_offset(), sl.n_requestable).transpose();
}

inline void sentence_backward(const VectorXd& y, const VectorXd& dys, const SummaryLayout& tl,
                              const SummaryLayout& sl, MapsGrad& g) {
  g.act_t2s.noalias() += y.head(tl.n_acts) * dys.head(sl.n_acts).transpose();
  g.slot_t2s.noalias() += y.tail(tl.n_slots()) * dys.tail(sl.n_slots()).transpose();
}

}  // namespace detail

// Bootstrap targets r + gamma * max_y' Q^t(h', y'), one per transition. Kept
// separate from the loss so the optimizer can treat them as constants: the
// update is a semi-gradient that never differentiates through the target.
inline VectorXd td_targets(const TranslationMaps& maps, const GPModel& source_q,
                           const std::vector<Transition>& batch,
                           const std::vector<SummaryAction>& target_menu, double gamma,
                           const SummaryLayout& tl, const SummaryLayout& sl) {
  std::vector<VectorXd> menu_translated;
  menu_translated.reserve(target_menu.size());
  std::vector<const VectorXd*> suffixes;
  for (const auto& c : target_menu)
    menu_translated.push_back(translate_sentence(c.v, maps, tl, sl));
  for (const auto& v : menu_translated) suffixes.push_back(&v);

  VectorXd targets(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& tr = batch[i];
    targets[i] = tr.r;
    if (!tr.terminal && !suffixes.empty()) {
      const VectorXd hs_next = translate_state(tr.h_next, maps, tl, sl);
      VectorXd means;
      source_q.batch(hs_next, suffixes, means);
      targets[i] += gamma * means.maxCoeff();
    }
  }
  return targets;
}

// Mean squared error between fixed targets and Q^t(h, y), differentiated
// through the GP mean and the translations.
inline double td_loss_given_targets(const TranslationMaps& maps, const GPModel& source_q,
                                    const std::vector<Transition>& batch,
                                    const VectorXd& targets, const SummaryLayout& tl,
                                    const SummaryLayout& sl, MapsGrad* g = nullptr,
                                    double weight = 1.0) {
  if (batch.empty()) throw std::invalid_argument("td loss needs a nonempty batch");
  if (targets.size() != static_cast<Eigen::Index>(batch.size()))
    throw std::invalid_argument("td targets do not match the batch");

  const int state_dim_s = sl.state_dim();
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& tr = batch[i];
    const VectorXd hs = translate_state(tr.h, maps, tl, sl);
    const VectorXd ys = translate_sentence(tr.y, maps, tl, sl);
    VectorXd x(hs.size() + ys.size());
    x << hs, ys;

    VectorXd gx;
    const double q = g ? source_q.mean_and_grad(x, gx) : source_q.mean(x);
    const double delta = targets[i] - q;
    loss += delta * delta;

    if (g) {
      const double scale = weight * (-2.0 * delta) / static_cast<double>(batch.size());
      detail::state_backward(tr.h, (scale * gx.head(state_dim_s)).eval(), tl, sl, *g);
      detail::sentence_backward(tr.y, (scale * gx.tail(x.size() - state_dim_s)).eval(), tl, sl,
                                *g);
    }
  }
  return loss / static_cast<double>(batch.size());
}

inline double td_loss(const TranslationMaps& maps, const GPModel& source_q,
                      const std::vector<Transition>& batch,
                      const std::vector<SummaryAction>& target_menu, double gamma,
                      const SummaryLayout& tl, const SummaryLayout& sl, MapsGrad* g = nullptr,
                      double weight = 1.0) {
  if (batch.empty()) throw std::invalid_argument("td loss needs a nonempty batch");
  const VectorXd targets = td_targets(maps, source_q, batch, target_menu, gamma, tl, sl);
  return td_loss_given_targets(maps, source_q, batch, targets, tl, sl, g, weight);
}

/**
 * Slot preservation: source sentences are act-translated into the target
 * domain, run through the target slot predictor, translated back, and scored
 * against the observed source slots; plus the mirrored target-side term.
 */
inline double reg_slot_preservation(const TranslationMaps& maps, const Predictor& c_t,
                                    const Predictor& c_s,
                                    const std::vector<SentenceExample>& source_sentences,
                                    const std::vector<SentenceExample>& target_sentences,
                                    MapsGrad* g = nullptr, double weight = 1.0) {
  if (source_sentences.empty() || target_sentences.empty())
    throw std::invalid_argument("slot preservation needs sentences on both sides");

  double total = 0.0;
  const double ns = static_cast<double>(source_sentences.size());
  for (const auto& ex : source_sentences) {
    const VectorXd at = translate_act(ex.act, maps.act_s2t);
    const VectorXd pt = c_t.forward(at);
    const VectorXd ps = translate_act(pt, maps.slot_t2s);
    total += cross_entropy(ex.slot, ps) / ns;
    if (g) {
      VectorXd dps = VectorXd::Zero(ps.size());
      for (int i = 0; i < ps.size(); ++i)
        if (ex.slot[i] != 0.0) dps[i] = weight * (-ex.slot[i] / std::max(ps[i], 1e-300)) / ns;
      g->slot_t2s.noalias() += pt * dps.transpose();
      const VectorXd dpt = maps.slot_t2s * dps;
      const VectorXd dat = c_t.backward_input(pt, dpt);
      g->act_s2t.noalias() += ex.act * dat.transpose();
    }
  }

  const double nt = static_cast<double>(target_sentences.size());
  for (const auto& ex : target_sentences) {
    const VectorXd as = translate_act(ex.act, maps.act_t2s);
    const VectorXd ps = c_s.forward(as);
    const VectorXd pt = translate_act(ps, maps.slot_s2t);
    total += cross_entropy(ex.slot, pt) / nt;
    if (g) {
      VectorXd dpt = VectorXd::Zero(pt.size());
      for (int i = 0; i < pt.size(); ++i)
        if (ex.slot[i] != 0.0) dpt[i] = weight * (-ex.slot[i] / std::max(pt[i], 1e-300)) / nt;
      g->slot_s2t.noalias() += ps * dpt.transpose();
      const VectorXd dps = maps.slot_s2t * dpt;
      const VectorXd das = c_s.backward_input(ps, dps);
      g->act_t2s.noalias() += ex.act * das.transpose();
    }
  }
  return total;
}

// User reaction: the previous agent sentence is translated into the source
// domain, the source user model predicts the reply act, and the prediction is
// translated back and scored against the observed target user act.
inline double reg_user_prediction(const TranslationMaps& maps, const Predictor& c_u_s,
                                  const std::vector<UserPredExample>& pairs,
                                  const SummaryLayout& tl, const SummaryLayout& sl,
                                  MapsGrad* g = nullptr, double weight = 1.0) {
  if (pairs.empty()) throw std::invalid_argument("user prediction needs at least one pair");

  double total = 0.0;
  const double n = static_cast<double>(pairs.size());
  for (const auto& ex : pairs) {
    const VectorXd ys = translate_sentence(ex.sentence, maps, tl, sl);
    const VectorXd pu_s = c_u_s.forward(ys);
    const VectorXd pu_t = translate_act(pu_s, maps.act_s2t);
    total += -std::log(std::max(pu_t[ex.next_user_act], 1e-300)) / n;
    if (g) {
      VectorXd dpu_t = VectorXd::Zero(pu_t.size());
      dpu_t[ex.next_user_act] =
          weight * (-1.0 / std::max(pu_t[ex.next_user_act], 1e-300)) / n;
      g->act_s2t.noalias() += pu_s * dpu_t.transpose();
      const VectorXd dpu_s = maps.act_s2t * dpu_t;
      const VectorXd dys = c_u_s.backward_input(pu_s, dpu_s);
      detail::sentence_backward(ex.sentence, dys, tl, sl, *g);
    }
  }
  return total;
}

// KL(translate(p_t) || p_s) with the gradient routed into the act matrix.
inline double translated_kl(const TranslationMaps& maps, const VectorXd& p_t, const VectorXd& p_s,
                            MapsGrad* g = nullptr, double weight = 1.0) {
  if ((p_s.array() <= 0.0).any())
    throw std::invalid_argument("frequency reference has a zero entry after smoothing");
  const VectorXd q = translate_act(p_t, maps.act_t2s);
  double kl = 0.0;
  VectorXd dq = VectorXd::Zero(q.size());
  for (int i = 0; i < q.size(); ++i) {
    if (q[i] <= 0.0) continue;
    const double ratio = q[i] / p_s[i];
    kl += q[i] * std::log(ratio);
    dq[i] = weight * (std::log(ratio) + 1.0);
  }
  if (g) g->act_t2s.noalias() += p_t * dq.transpose();
  return kl;
}

// Frequency alignment over user and agent act distributions.
inline double reg_frequency(const TranslationMaps& maps, const VectorXd& p_user_t,
                            const VectorXd& p_user_s, const VectorXd& p_agent_t,
                            const VectorXd& p_agent_s, MapsGrad* g = nullptr,
                            double weight = 1.0) {
  return translated_kl(maps, p_user_t, p_user_s, g, weight) +
         translated_kl(maps, p_agent_t, p_agent_s, g, weight);
}

// State continuity: squared deviation of the full slot matrix from uniform.
inline double reg_state_continuity(const TranslationMaps& maps, MapsGrad* g = nullptr,
                                   double weight = 1.0) {
  const double u = 1.0 / static_cast<double>(maps.slot_t2s.cols());
  const MatrixXd dev = maps.slot_t2s.array() - u;
  if (g) g->slot_t2s.noalias() += weight * 2.0 * dev;
  return dev.squaredNorm();
}

struct TransferConfig {
  double gamma = 1.0;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 1.0;
  double lambda4 = 1.0;
  AdamConfig adam{0.05, 0.9, 0.999, 1e-8};
  int epochs = 60;
  int minibatch = 32;
  int embed_dim = 8;
  std::uint64_t seed = 0;
  int restarts = 1;  // independent inits; the lowest full-data loss wins
  PredictorConfig predictor{};
  int source_sentence_cap = 1500;  // bound on the R1 source-side term per step
};

// Everything constant across optimizer steps.
struct TransferProblem {
  const GPModel* source_q = nullptr;
  const Ontology* target = nullptr;
  const Ontology* source = nullptr;
  SummaryLayout tl, sl;
  std::vector<SummaryAction> target_menu;
  DomainDataset target_data;
  DomainDataset source_data;
  Predictor c_t, c_s, c_u_s;
  MapBuilder builder;
  TransferConfig cfg;
};

inline TransferProblem make_transfer_problem(const GPModel& source_q,
                                             const std::vector<EpisodeLog>& source_logs,
                                             const std::vector<EpisodeLog>& target_logs,
                                             const Ontology& target, const Ontology& source,
                                             const TransferConfig& cfg,
                                             MapBuilder builder = {}) {
  if (target_logs.empty()) throw std::invalid_argument("transfer needs target dialogues");
  if (source_logs.empty()) throw std::invalid_argument("transfer needs source dialogues");
  TransferProblem p;
  p.source_q = &source_q;
  p.target = &target;
  p.source = &source;
  p.tl = SummaryLayout::from(target);
  p.sl = SummaryLayout::from(source);
  p.target_menu = candidate_actions(target);
  p.target_data = build_dataset(target_logs, target);
  p.source_data = build_dataset(source_logs, source);
  if (static_cast<int>(p.source_data.sentences.size()) > cfg.source_sentence_cap)
    p.source_data.sentences.resize(cfg.source_sentence_cap);
  p.cfg = cfg;
  builder.target = &target;
  builder.source = &source;
  p.builder = builder;

  // Pretrained, then frozen: target and source slot predictors plus the
  // source user-reaction predictor.
  std::vector<VectorXd> xs, ys;
  for (const auto& ex : p.target_data.sentences) {
    xs.push_back(ex.act);
    ys.push_back(ex.slot);
  }
  if (xs.empty()) throw std::invalid_argument("target dialogues contain no slotted sentences");
  p.c_t = fit_predictor(xs, ys, cfg.predictor);

  xs.clear();
  ys.clear();
  for (const auto& ex : p.source_data.sentences) {
    xs.push_back(ex.act);
    ys.push_back(ex.slot);
  }
  p.c_s = fit_predictor(xs, ys, cfg.predictor);

  xs.clear();
  ys.clear();
  for (const auto& ex : p.source_data.user_pairs) {
    xs.push_back(ex.sentence);
    VectorXd onehot = VectorXd::Zero(p.sl.n_acts);
    onehot[ex.next_user_act] = 1.0;
    ys.push_back(onehot);
  }
  if (xs.empty()) throw std::invalid_argument("source dialogues contain no user reactions");
  p.c_u_s = fit_predictor(xs, ys, cfg.predictor);
  return p;
}

// Loss value and flat embedding gradient for one minibatch of transitions.
// Regularizer datasets are always used in full; terms without data are
// skipped rather than failing a small-data run.
inline double total_loss(const TransferProblem& p, const MappingParams& params,
                         const std::vector<Transition>& batch, VectorXd* grad = nullptr) {
  const TranslationMaps maps = p.builder.build(params);
  MapsGrad g = MapsGrad::zero_like(maps);
  MapsGrad* gp = grad ? &g : nullptr;

  double loss =
      td_loss(maps, *p.source_q, batch, p.target_menu, p.cfg.gamma, p.tl, p.sl, gp, 1.0);
  if (p.cfg.lambda1 != 0.0 && !p.source_data.sentences.empty() &&
      !p.target_data.sentences.empty())
    loss += p.cfg.lambda1 *
            reg_slot_preservation(maps, p.c_t, p.c_s, p.source_data.sentences,
                                  p.target_data.sentences, gp, p.cfg.lambda1);
  if (p.cfg.lambda2 != 0.0 && !p.target_data.user_pairs.empty())
    loss += p.cfg.lambda2 * reg_user_prediction(maps, p.c_u_s, p.target_data.user_pairs, p.tl,
                                                p.sl, gp, p.cfg.lambda2);
  if (p.cfg.lambda3 != 0.0)
    loss += p.cfg.lambda3 *
            reg_frequency(maps, p.target_data.p_user, p.source_data.p_user,
                          p.target_data.p_agent, p.source_data.p_agent, gp, p.cfg.lambda3);
  if (p.cfg.lambda4 != 0.0)
    loss += p.cfg.lambda4 * reg_state_continuity(maps, gp, p.cfg.lambda4);

  if (!std::isfinite(loss)) throw std::runtime_error("transfer loss diverged");
  if (grad) {
    *grad = p.builder.backward(params, maps, g);
    if (!grad->allFinite()) throw std::runtime_error("transfer gradient diverged");
  }
  return loss;
}

struct TransferResult {
  MappingParams params;
  TranslationMaps maps;
  std::vector<double> loss_trace;  // one entry per epoch, averaged over steps
};

// Adam over minibatched transitions; epoch order reshuffled deterministically
// from the seed. With restarts > 1 the optimization reruns from fresh inits
// and the run with the lowest full-data loss wins. Returns the final
// embeddings and derived maps.
inline TransferResult train_transfer(const TransferProblem& p) {
  if (p.cfg.restarts < 1) throw std::invalid_argument("restarts must be at least 1");

  TransferResult out;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < p.cfg.restarts; ++k) {
    Rng init_rng(mix_seed(p.cfg.seed, "embed-init", static_cast<std::uint64_t>(k)));
    MappingParams params = MappingParams::init(*p.target, *p.source, p.cfg.embed_dim, init_rng);

    VectorXd flat = params.flatten();
    Adam adam(static_cast<int>(flat.size()), p.cfg.adam);
    std::vector<int> order(p.target_data.transitions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    std::vector<double> trace;
    for (int epoch = 0; epoch < p.cfg.epochs; ++epoch) {
      Rng shuffle_rng(mix_seed(p.cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch),
                               static_cast<std::uint64_t>(k)));
      shuffle_rng.shuffle(order);
      double epoch_loss = 0.0;
      int steps = 0;
      for (std::size_t at = 0; at < order.size(); at += p.cfg.minibatch) {
        std::vector<Transition> batch;
        for (std::size_t i = at; i < order.size() && i < at + p.cfg.minibatch; ++i)
          batch.push_back(p.target_data.transitions[order[i]]);
        VectorXd grad;
        params.unflatten(flat);
        epoch_loss += total_loss(p, params, batch, &grad);
        adam.step(flat, grad);
        ++steps;
      }
      trace.push_back(epoch_loss / std::max(1, steps));
    }
    params.unflatten(flat);
    const double full = total_loss(p, params, p.target_data.transitions, nullptr);
    if (full < best) {
      best = full;
      out.params = params;
      out.loss_trace = std::move(trace);
    }
  }
  out.maps = p.builder.build(out.params);
  return out;
}

// Greedy policy over the transferred Q; ties go to the lowest candidate index.
class TransferredPolicy : public ValuePolicy {
 public:
  TransferredPolicy(std::shared_ptr<const GPModel> source_q, TranslationMaps maps,
                    const Ontology& target, const Ontology& source)
      : source_q_(std::move(source_q)),
        maps_(std::move(maps)),
        tl_(SummaryLayout::from(target)),
        sl_(SummaryLayout::from(source)) {}

  SummaryAction select(const SummaryState& state,
                       const std::vector<SummaryAction>& candidates) override {
    if (candidates.empty()) throw std::invalid_argument("no candidate actions");
    const VectorXd hs = translate_state(state.v, maps_, tl_, sl_);
    std::vector<VectorXd> translated;
    translated.reserve(candidates.size());
    std::vector<const VectorXd*> suffixes;
    for (const auto& c : candidates)
      translated.push_back(translate_sentence(c.v, maps_, tl_, sl_));
    for (const auto& v : translated) suffixes.push_back(&v);
    VectorXd means;
    source_q_->batch(hs, suffixes, means);
    int best = 0;
    for (int i = 1; i < means.size(); ++i)
      if (means[i] > means[best]) best = i;
    return candidates[best];
  }

  Score score(const SummaryState& state, const SummaryAction& action) const override {
    const VectorXd hs = translate_state(state.v, maps_, tl_, sl_);
    const VectorXd ys = translate_sentence(action.v, maps_, tl_, sl_);
    VectorXd x(hs.size() + ys.size());
    x << hs, ys;
    const auto s = source_q_->mean_var(x);
    return {s.mean, s.var};
  }

  const TranslationMaps& maps() const { return maps_; }

 private:
  std::shared_ptr<const GPModel> source_q_;
  TranslationMaps maps_;
  SummaryLayout tl_, sl_;
};

}  // namespace promise
