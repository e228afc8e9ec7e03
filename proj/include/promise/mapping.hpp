#pragma once

#include "promise/dialog.hpp"

namespace promise {

enum class Direction { TargetToSource, SourceToTarget };

// Row-wise softmax; rejects non-finite logits so a diverged optimizer state
// surfaces immediately instead of as NaN policies.
inline MatrixXd softmax_rows(const MatrixXd& logits) {
  if (!logits.allFinite()) throw std::runtime_error("similarity logits are not finite");
  MatrixXd out(logits.rows(), logits.cols());
  for (int r = 0; r < logits.rows(); ++r) {
    const double top = logits.row(r).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(r).array() - top).exp();
    out.row(r) = e / e.sum();
  }
  return out;
}

/**
 * Learned embeddings for every act and slot of both domains. All similarity
 * matrices in both directions derive from these four tables, so the two
 * directions stay consistent by construction.
 */
struct MappingParams {
  MatrixXd act_target;   // |A^t| x d
  MatrixXd act_source;   // |A^s| x d
  MatrixXd slot_target;  // |S^t| x d
  MatrixXd slot_source;  // |S^s| x d
  int d = 0;

  static MappingParams init(const Ontology& target, const Ontology& source, int d, Rng& rng) {
    if (d < 1) throw std::invalid_argument("embedding dimension must be at least 1");
    MappingParams p;
    p.d = d;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    auto draw = [&](int rows) {
      MatrixXd m(rows, d);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < d; ++c) m(r, c) = rng.normal() * scale;
      return m;
    };
    p.act_target = draw(target.n_acts());
    p.act_source = draw(source.n_acts());
    p.slot_target = draw(target.n_slots());
    p.slot_source = draw(source.n_slots());
    return p;
  }

  int size() const {
    return static_cast<int>(act_target.size() + act_source.size() + slot_target.size() +
                            slot_source.size());
  }

  VectorXd flatten() const {
    VectorXd v(size());
    int at = 0;
    for (const MatrixXd* m : {&act_target, &act_source, &slot_target, &slot_source}) {
      v.segment(at, m->size()) = Eigen::Map<const VectorXd>(m->data(), m->size());
      at += static_cast<int>(m->size());
    }
    return v;
  }

  void unflatten(const VectorXd& v) {
    if (v.size() != size()) throw std::invalid_argument("flat parameter size mismatch");
    int at = 0;
    for (MatrixXd* m : {&act_target, &act_source, &slot_target, &slot_source}) {
      *m = Eigen::Map<const MatrixXd>(v.data() + at, m->rows(), m->cols());
      at += static_cast<int>(m->size());
    }
  }
};

inline MatrixXd act_similarity_matrix(const MappingParams& p, Direction dir) {
  if (dir == Direction::TargetToSource)
    return softmax_rows(p.act_target * p.act_source.transpose());
  return softmax_rows(p.act_source * p.act_target.transpose());
}

inline MatrixXd slot_similarity_matrix(const MappingParams& p, Direction dir) {
  if (dir == Direction::TargetToSource)
    return softmax_rows(p.slot_target * p.slot_source.transpose());
  return softmax_rows(p.slot_source * p.slot_target.transpose());
}

/**
 * The six matrices every translation needs. Act and slot matrices cover the
 * whole act/slot inventories; the informable and requestable blocks carry
 * their own normalization so state translation preserves per-block mass.
 * Built either from embeddings (learned route) or from explicit matrices
 * (fixed baselines, where unmatched rows stay zero).
 */
struct TranslationMaps {
  MatrixXd act_t2s, act_s2t;
  MatrixXd slot_t2s, slot_s2t;
  MatrixXd inf_t2s, req_t2s;

  static TranslationMaps from_params(const MappingParams& p, const Ontology& target,
                                     const Ontology& source) {
    TranslationMaps m;
    m.act_t2s = act_similarity_matrix(p, Direction::TargetToSource);
    m.act_s2t = act_similarity_matrix(p, Direction::SourceToTarget);
    m.slot_t2s = slot_similarity_matrix(p, Direction::TargetToSource);
    m.slot_s2t = slot_similarity_matrix(p, Direction::SourceToTarget);
    const MatrixXd logits = p.slot_target * p.slot_source.transpose();
    m.inf_t2s = softmax_rows(
        logits.topLeftCorner(target.n_informable(), source.n_informable()));
    m.req_t2s = softmax_rows(
        logits.bottomRightCorner(target.n_requestable(), source.n_requestable()));
    return m;
  }

  static TranslationMaps from_matrices(MatrixXd act_t2s, MatrixXd act_s2t, MatrixXd slot_t2s,
                                       MatrixXd slot_s2t, const Ontology& target,
                                       const Ontology& source) {
    TranslationMaps m;
    m.inf_t2s = slot_t2s.topLeftCorner(target.n_informable(), source.n_informable());
    m.req_t2s = slot_t2s.bottomRightCorner(target.n_requestable(), source.n_requestable());
    m.act_t2s = std::move(act_t2s);
    m.act_s2t = std::move(act_s2t);
    m.slot_t2s = std::move(slot_t2s);
    m.slot_s2t = std::move(slot_s2t);
    return m;
  }
};

// Distribution translation: row vector times a (row-stochastic) matrix.
inline VectorXd translate_act(const VectorXd& a, const MatrixXd& m) {
  if (a.size() != m.rows()) throw std::invalid_argument("act vector does not match matrix rows");
  return m.transpose() * a;
}

// Sentence translation: act block and slot block each through their full map.
inline VectorXd translate_sentence(const VectorXd& y, const TranslationMaps& maps,
                                   const SummaryLayout& target, const SummaryLayout& source) {
  if (y.size() != target.action_dim())
    throw std::invalid_argument("sentence vector does not match target layout");
  VectorXd out(source.action_dim());
  out.head(source.n_acts) = translate_act(y.head(target.n_acts), maps.act_t2s);
  out.tail(source.n_slots()) = translate_act(y.tail(target.n_slots()), maps.slot_t2s);
  return out;
}

// State translation: match buckets verbatim, act block through the act map,
// constraint and request blocks through their own normalized maps.
inline VectorXd translate_state(const VectorXd& h, const TranslationMaps& maps,
                                const SummaryLayout& target, const SummaryLayout& source) {
  if (h.size() != target.state_dim())
    throw std::invalid_argument("state vector does not match target layout");
  VectorXd out(source.state_dim());
  out.head(kMatchBuckets) = h.head(kMatchBuckets);
  out.segment(source.state_act_offset(), source.n_acts) =
      translate_act(h.segment(target.state_act_offset(), target.n_acts), maps.act_t2s);
  out.segment(source.state_inf_offset(), source.n_informable) =
      translate_act(h.segment(target.state_inf_offset(), target.n_informable), maps.inf_t2s);
  out.segment(source.state_req_offset(), source.n_requestable) =
      translate_act(h.segment(target.state_req_offset(), target.n_requestable), maps.req_t2s);
  return out;
}

// 0/1 mapping matrices from a ground-truth alias; unmapped target entries
// keep all-zero rows.
inline std::pair<MatrixXd, MatrixXd> alias_matrices(const AliasTable& alias,
                                                    const Ontology& target,
                                                    const Ontology& source) {
  MatrixXd act = MatrixXd::Zero(target.n_acts(), source.n_acts());
  MatrixXd slot = MatrixXd::Zero(target.n_slots(), source.n_slots());
  for (const auto& [from, to] : alias.acts)
    if (!to.empty()) act(target.act_index(from), source.act_index(to)) = 1.0;
  for (const auto& [from, to] : alias.slots)
    if (!to.empty()) slot(target.slot_index(from), source.slot_index(to)) = 1.0;
  return {std::move(act), std::move(slot)};
}

// Embeddings whose softmax reproduces an alias mapping to numerical
// saturation: mapped rows get a scaled one-hot logit, unmapped rows stay at
// zero logits (uniform). Scale 50 drives off-diagonal mass below 1e-20.
inline MappingParams pinned_params(const AliasTable& alias, const Ontology& target,
                                   const Ontology& source, double scale = 50.0) {
  MappingParams p;
  p.d = std::max(source.n_acts(), source.n_slots());
  p.act_target = MatrixXd::Zero(target.n_acts(), p.d);
  p.act_source = MatrixXd::Zero(source.n_acts(), p.d);
  p.slot_target = MatrixXd::Zero(target.n_slots(), p.d);
  p.slot_source = MatrixXd::Zero(source.n_slots(), p.d);
  for (int j = 0; j < source.n_acts(); ++j) p.act_source(j, j) = 1.0;
  for (int j = 0; j < source.n_slots(); ++j) p.slot_source(j, j) = 1.0;
  for (const auto& [from, to] : alias.acts)
    if (!to.empty()) p.act_target(target.act_index(from), source.act_index(to)) = scale;
  for (const auto& [from, to] : alias.slots)
    if (!to.empty()) p.slot_target(target.slot_index(from), source.slot_index(to)) = scale;
  return p;
}

}  // namespace promise
