#pragma once

#include <Eigen/Cholesky>
#include <memory>
#include <unordered_map>

#include "promise/simulator.hpp"

namespace promise {

struct GpConfig {
  double signal_variance = 25.0;
  double length_scale = 1.0;
  double noise_variance = 1.0;
  int budget = 500;                 // retained-point cap
  double novelty_threshold = 0.999; // on normalized similarity k/signal_variance
};

inline double rbf_kernel(const VectorXd& a, const VectorXd& b, double signal_variance,
                         double length_scale) {
  return signal_variance *
         std::exp(-(a - b).squaredNorm() / (2.0 * length_scale * length_scale));
}

/**
 * Exact Gaussian-process regression with a squared-exponential kernel over
 * concatenated [state; action] vectors, trained on observed returns.
 *
 * Fitting solves (K + noise * I) alpha = y by Cholesky. When the data exceeds
 * the budget, points are taken first-come with near-duplicates dropped
 * (normalized similarity above the novelty threshold against the retained
 * set), then truncated at the budget.
 */
class GPModel {
 public:
  struct Score {
    double mean = 0.0;
    double var = 0.0;
  };

  GPModel() = default;

  static GPModel fit(const std::vector<VectorXd>& xs, const std::vector<double>& ys,
                     const GpConfig& cfg = {}) {
    if (xs.size() != ys.size()) throw std::invalid_argument("inputs and targets differ in size");
    if (xs.empty()) throw std::invalid_argument("gp fit needs at least one datum");
    std::vector<int> keep;
    if (static_cast<int>(xs.size()) <= cfg.budget) {
      keep.resize(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) keep[i] = static_cast<int>(i);
    } else {
      const double denom = 2.0 * cfg.length_scale * cfg.length_scale;
      for (std::size_t i = 0; i < xs.size() && static_cast<int>(keep.size()) < cfg.budget; ++i) {
        double max_sim = 0.0;
        for (int j : keep)
          max_sim = std::max(max_sim, std::exp(-(xs[i] - xs[j]).squaredNorm() / denom));
        if (max_sim <= cfg.novelty_threshold) keep.push_back(static_cast<int>(i));
      }
    }
    GPModel m;
    m.cfg_ = cfg;
    m.dim_ = static_cast<int>(xs[0].size());
    const int n = static_cast<int>(keep.size());
    m.X_.resize(n, m.dim_);
    m.y_.resize(n);
    for (int i = 0; i < n; ++i) {
      if (xs[keep[i]].size() != m.dim_) throw std::invalid_argument("inconsistent input dims");
      m.X_.row(i) = xs[keep[i]].transpose();
      m.y_[i] = ys[keep[i]];
    }
    MatrixXd K(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        const double k = rbf_kernel(xs[keep[i]], xs[keep[j]], cfg.signal_variance,
                                    cfg.length_scale);
        K(i, j) = k;
        K(j, i) = k;
      }
      K(i, i) += cfg.noise_variance;
    }
    m.llt_.compute(K);
    if (m.llt_.info() != Eigen::Success)
      throw std::runtime_error("gp covariance factorization failed");
    m.alpha_ = m.llt_.solve(m.y_);
    return m;
  }

  // Rebuild from retained inputs/targets, e.g. after loading a snapshot.
  static GPModel restore(MatrixXd X, VectorXd y, const GpConfig& cfg) {
    std::vector<VectorXd> xs(X.rows());
    std::vector<double> ys(X.rows());
    for (int i = 0; i < X.rows(); ++i) {
      xs[i] = X.row(i).transpose();
      ys[i] = y[i];
    }
    GpConfig open = cfg;
    open.budget = std::max(cfg.budget, static_cast<int>(X.rows()));
    open.novelty_threshold = 2.0;  // keep every stored point verbatim
    GPModel m = fit(xs, ys, open);
    m.cfg_ = cfg;
    return m;
  }

  bool empty() const { return X_.rows() == 0; }
  int size() const { return static_cast<int>(X_.rows()); }
  int dim() const { return dim_; }
  const GpConfig& config() const { return cfg_; }
  const MatrixXd& inputs() const { return X_; }
  const VectorXd& targets() const { return y_; }
  const VectorXd& alpha() const { return alpha_; }

  double mean(const VectorXd& x) const {
    if (empty()) return 0.0;
    return kvec(x).dot(alpha_);
  }

  Score mean_var(const VectorXd& x) const {
    if (empty()) return {0.0, cfg_.signal_variance};
    const VectorXd k = kvec(x);
    const VectorXd v = llt_.solve(k);
    const double var = cfg_.signal_variance - k.dot(v);
    return {k.dot(alpha_), std::max(0.0, var)};
  }

  // Posterior means (and optionally variances) for queries sharing a common
  // prefix, e.g. one state against every candidate action. Far cheaper than
  // separate per-query evaluation because the prefix distances are reused.
  void batch(const VectorXd& prefix, const std::vector<const VectorXd*>& suffixes,
             VectorXd& means, VectorXd* vars = nullptr) const {
    const int m = static_cast<int>(suffixes.size());
    means.resize(m);
    if (vars) vars->resize(m);
    if (empty()) {
      means.setZero();
      if (vars) vars->setConstant(cfg_.signal_variance);
      return;
    }
    const int p = static_cast<int>(prefix.size());
    const int n = size();
    VectorXd prefix_d2(n);
    for (int j = 0; j < n; ++j)
      prefix_d2[j] = (X_.row(j).head(p).transpose() - prefix).squaredNorm();
    const double denom = 2.0 * cfg_.length_scale * cfg_.length_scale;
    MatrixXd Kq(n, m);
    for (int i = 0; i < m; ++i) {
      const VectorXd& suf = *suffixes[i];
      for (int j = 0; j < n; ++j) {
        const double d2 = prefix_d2[j] + (X_.row(j).tail(dim_ - p).transpose() - suf).squaredNorm();
        Kq(j, i) = cfg_.signal_variance * std::exp(-d2 / denom);
      }
    }
    means = Kq.transpose() * alpha_;
    if (vars) {
      const MatrixXd V = llt_.solve(Kq);
      for (int i = 0; i < m; ++i)
        (*vars)[i] = std::max(0.0, cfg_.signal_variance - Kq.col(i).dot(V.col(i)));
    }
  }

  // Posterior mean plus its gradient with respect to the query point.
  double mean_and_grad(const VectorXd& x, VectorXd& grad) const {
    grad = VectorXd::Zero(dim_ == 0 ? x.size() : dim_);
    if (empty()) return 0.0;
    const double inv_ls2 = 1.0 / (cfg_.length_scale * cfg_.length_scale);
    double mean = 0.0;
    for (int j = 0; j < size(); ++j) {
      const VectorXd diff = X_.row(j).transpose() - x;
      const double k = cfg_.signal_variance * std::exp(-diff.squaredNorm() * 0.5 * inv_ls2);
      mean += alpha_[j] * k;
      grad += alpha_[j] * k * inv_ls2 * diff;
    }
    return mean;
  }

 private:
  VectorXd kvec(const VectorXd& x) const {
    VectorXd k(size());
    for (int j = 0; j < size(); ++j)
      k[j] = rbf_kernel(X_.row(j).transpose(), x, cfg_.signal_variance, cfg_.length_scale);
    return k;
  }

  GpConfig cfg_;
  int dim_ = 0;
  MatrixXd X_;
  VectorXd y_;
  VectorXd alpha_;
  Eigen::LLT<MatrixXd> llt_;
};

enum class SelectMode { Greedy, Thompson, EpsilonGreedy };

// Candidate choice against a Q model. Greedy breaks ties toward the lowest
// candidate index; Thompson draws one independent posterior sample per
// candidate; epsilon-greedy explores uniformly with probability epsilon.
inline int select_action(const GPModel& q, const VectorXd& state,
                         const std::vector<SummaryAction>& candidates, SelectMode mode,
                         Rng* rng = nullptr, double epsilon = 0.0) {
  if (candidates.empty()) throw std::invalid_argument("no candidate actions");
  if (mode != SelectMode::Greedy && rng == nullptr)
    throw std::invalid_argument("sampling select modes need an rng");
  if (mode == SelectMode::EpsilonGreedy) {
    if (rng->uniform01() < epsilon) return static_cast<int>(rng->below(candidates.size()));
    mode = SelectMode::Greedy;
  }
  std::vector<const VectorXd*> suffixes;
  suffixes.reserve(candidates.size());
  for (const auto& c : candidates) suffixes.push_back(&c.v);
  VectorXd means, vars;
  q.batch(state, suffixes, means, mode == SelectMode::Thompson ? &vars : nullptr);
  VectorXd scores = means;
  if (mode == SelectMode::Thompson)
    for (int i = 0; i < scores.size(); ++i)
      scores[i] = means[i] + std::sqrt(std::max(0.0, vars[i])) * rng->normal();
  int best = 0;
  for (int i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

// Dialogue policy backed by a GP Q model over this domain's own encoding.
class GpPolicy : public ValuePolicy {
 public:
  GpPolicy(std::shared_ptr<const GPModel> model, SelectMode mode = SelectMode::Greedy,
           std::uint64_t seed = 0, double epsilon = 0.0)
      : model_(std::move(model)), mode_(mode), rng_(seed), epsilon_(epsilon) {}

  SummaryAction select(const SummaryState& state,
                       const std::vector<SummaryAction>& candidates) override {
    return candidates[select_action(*model_, state.v, candidates, mode_, &rng_, epsilon_)];
  }

  Score score(const SummaryState& state, const SummaryAction& action) const override {
    VectorXd x(state.v.size() + action.v.size());
    x << state.v, action.v;
    const auto s = model_->mean_var(x);
    return {s.mean, s.var};
  }

  void set_epsilon(double eps) { epsilon_ = eps; }

 private:
  std::shared_ptr<const GPModel> model_;
  SelectMode mode_;
  Rng rng_;
  double epsilon_;
};

struct SourceTrainConfig {
  int refit_every = 50;
  double eps_start = 0.5;
  double eps_end = 0.05;
  GpConfig gp;
  EpisodeConfig episode;
};

struct SourceTrainResult {
  std::shared_ptr<GPModel> model;
  std::vector<EpisodeLog> logs;
};

// Turns logged episodes into (state;action) -> return training pairs. Each
// distinct point appears once, labeled with the upper median of every return
// observed for it; points are ordered newest-first so a budgeted fit keeps
// the freshest experience. The median tames the single-sample noise of
// episodic returns, which otherwise leaves repeated no-progress actions
// looking profitable.
inline void episodes_to_dataset(const std::vector<EpisodeLog>& logs, std::vector<VectorXd>& xs,
                                std::vector<double>& ys) {
  struct Point {
    VectorXd x;
    std::vector<double> returns;
  };
  std::unordered_map<std::string, std::size_t> index;
  std::vector<Point> points;
  for (auto it = logs.rbegin(); it != logs.rend(); ++it) {
    const auto returns = returns_to_go(*it);
    for (std::size_t t = 0; t < it->turns.size(); ++t) {
      VectorXd x(it->turns[t].state.size() + it->turns[t].action.size());
      x << it->turns[t].state, it->turns[t].action;
      std::string key(reinterpret_cast<const char*>(x.data()),
                      static_cast<std::size_t>(x.size()) * sizeof(double));
      auto found = index.find(key);
      if (found == index.end()) {
        index.emplace(std::move(key), points.size());
        points.push_back({std::move(x), {returns[t]}});
      } else {
        points[found->second].returns.push_back(returns[t]);
      }
    }
  }
  xs.clear();
  ys.clear();
  xs.reserve(points.size());
  ys.reserve(points.size());
  for (auto& p : points) {
    std::sort(p.returns.begin(), p.returns.end());
    xs.push_back(std::move(p.x));
    ys.push_back(p.returns[p.returns.size() / 2]);
  }
}

/**
 * On-policy training loop: epsilon-greedy dialogues against the simulator,
 * with epsilon annealed linearly and the GP refit on the accumulated
 * (state, action, return) data every refit_every episodes and once at the end.
 * Refits see the aggregated data newest-first, so once the budget binds the
 * model tracks the most recent behavior instead of freezing on early
 * exploration.
 */
inline SourceTrainResult train_source_policy(const Ontology& ont, int n_episodes,
                                             std::uint64_t seed,
                                             const SourceTrainConfig& cfg = {}) {
  if (n_episodes < 1) throw std::invalid_argument("need at least one training episode");
  SourceTrainResult out;
  out.model = std::make_shared<GPModel>();
  std::vector<VectorXd> xs;
  std::vector<double> ys;
  auto refit = [&] {
    episodes_to_dataset(out.logs, xs, ys);
    out.model = std::make_shared<GPModel>(GPModel::fit(xs, ys, cfg.gp));
  };
  for (int ep = 0; ep < n_episodes; ++ep) {
    const double frac = n_episodes > 1 ? static_cast<double>(ep) / (n_episodes - 1) : 0.0;
    const double eps = cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac;
    GpPolicy behavior(out.model, SelectMode::EpsilonGreedy, mix_seed(seed, "explore", ep), eps);
    EpisodeLog log = run_episode(behavior, ont, mix_seed(seed, "episode", ep), cfg.episode);
    out.logs.push_back(std::move(log));
    if ((ep + 1) % cfg.refit_every == 0) refit();
  }
  if (n_episodes % cfg.refit_every != 0) refit();
  return out;
}

}  // namespace promise
