#include "promise/gp_policy.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace promise;

namespace {

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<long>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// Reference linear solve by Gauss-Jordan elimination with partial pivoting,
// kept free of any library solver on purpose.
VectorXd solve_dense(MatrixXd a, VectorXd b) {
  const int n = static_cast<int>(a.rows());
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    a.row(col).swap(a.row(pivot));
    std::swap(b[col], b[pivot]);
    const double d = a(col, col);
    a.row(col) /= d;
    b[col] /= d;
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a(r, col);
      a.row(r) -= f * a.row(col);
      b[r] -= f * b[col];
    }
  }
  return b;
}

GPModel::Score reference_posterior(const std::vector<VectorXd>& xs, const std::vector<double>& ys,
                                   const GpConfig& cfg, const VectorXd& q) {
  const int n = static_cast<int>(xs.size());
  MatrixXd K(n, n);
  VectorXd y(n), k(n);
  for (int i = 0; i < n; ++i) {
    y[i] = ys[i];
    k[i] = rbf_kernel(xs[i], q, cfg.signal_variance, cfg.length_scale);
    for (int j = 0; j < n; ++j)
      K(i, j) = rbf_kernel(xs[i], xs[j], cfg.signal_variance, cfg.length_scale) +
                (i == j ? cfg.noise_variance : 0.0);
  }
  const VectorXd alpha = solve_dense(K, y);
  const VectorXd v = solve_dense(K, k);
  return {k.dot(alpha), cfg.signal_variance - k.dot(v)};
}

std::vector<SummaryAction> fake_candidates(std::initializer_list<double> coords) {
  std::vector<SummaryAction> out;
  int i = 0;
  for (double c : coords) {
    SummaryAction a;
    a.act = i++;
    a.v = vec({c});
    out.push_back(a);
  }
  return out;
}

}  // namespace

TEST(Kernel, KnownValues) {
  const VectorXd a = vec({1.0, 2.0});
  const VectorXd b = vec({2.0, 3.0});  // squared distance 2
  EXPECT_DOUBLE_EQ(rbf_kernel(a, a, 25.0, 1.0), 25.0);
  EXPECT_NEAR(rbf_kernel(a, b, 25.0, 1.0), 25.0 * 0.36787944117144233, 1e-12);
  EXPECT_NEAR(rbf_kernel(a, b, 1.0, 2.0), std::exp(-0.25), 1e-12);
}

TEST(Gp, PriorBeforeAnyData) {
  GPModel m;
  EXPECT_TRUE(m.empty());
  EXPECT_DOUBLE_EQ(m.mean(vec({0.5})), 0.0);
  const auto s = m.mean_var(vec({0.5}));
  EXPECT_DOUBLE_EQ(s.mean, 0.0);
  EXPECT_DOUBLE_EQ(s.var, 25.0);
}

TEST(Gp, NearNoiselessFitInterpolates) {
  GpConfig cfg;
  cfg.noise_variance = 1e-9;
  const std::vector<VectorXd> xs = {vec({0.0, 0.0}), vec({3.0, 0.0}), vec({0.0, 3.0})};
  const std::vector<double> ys = {4.0, -2.0, 7.5};
  GPModel m = GPModel::fit(xs, ys, cfg);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto s = m.mean_var(xs[i]);
    EXPECT_NEAR(s.mean, ys[i], 1e-6);
    EXPECT_NEAR(s.var, 0.0, 1e-5);
  }
}

TEST(Gp, TwoPointPosteriorMatchesHandSolve) {
  GpConfig cfg;  // signal 25, length 1, noise 1
  const VectorXd x1 = vec({0.0, 0.0});
  const VectorXd x2 = vec({1.0, 0.0});
  const double y1 = 3.0, y2 = -1.0;
  GPModel m = GPModel::fit({x1, x2}, {y1, y2}, cfg);

  // closed form via Cramer's rule on [[26, c], [c, 26]]
  const double c = 25.0 * std::exp(-0.5);
  const double det = 26.0 * 26.0 - c * c;
  const double a1 = (26.0 * y1 - c * y2) / det;
  const double a2 = (26.0 * y2 - c * y1) / det;
  const VectorXd q = vec({0.5, 0.0});
  const double k1 = 25.0 * std::exp(-0.125);
  const double expected_mean = k1 * a1 + k1 * a2;
  const double z1 = (26.0 * k1 - c * k1) / det;
  const double expected_var = 25.0 - k1 * z1 * 2.0;

  const auto s = m.mean_var(q);
  EXPECT_NEAR(s.mean, expected_mean, 1e-10);
  EXPECT_NEAR(s.var, expected_var, 1e-10);
}

TEST(Gp, AgreesWithEliminationOracle) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    GpConfig cfg;
    cfg.length_scale = 0.5 + rng.uniform01();
    cfg.noise_variance = 0.1 + rng.uniform01();
    const int n = 3 + static_cast<int>(rng.below(8));
    std::vector<VectorXd> xs;
    std::vector<double> ys;
    for (int i = 0; i < n; ++i) {
      VectorXd x(4);
      for (int d = 0; d < 4; ++d) x[d] = rng.normal();
      xs.push_back(x);
      ys.push_back(rng.normal() * 10.0);
    }
    GPModel m = GPModel::fit(xs, ys, cfg);
    for (int q = 0; q < 5; ++q) {
      VectorXd query(4);
      for (int d = 0; d < 4; ++d) query[d] = rng.normal();
      const auto got = m.mean_var(query);
      const auto want = reference_posterior(xs, ys, cfg, query);
      EXPECT_NEAR(got.mean, want.mean, 1e-8);
      EXPECT_NEAR(got.var, want.var, 1e-8);
    }
  }
}

TEST(Gp, VarianceStaysNonnegative) {
  Rng rng(47);
  GpConfig cfg;
  cfg.noise_variance = 1e-8;
  std::vector<VectorXd> xs;
  std::vector<double> ys;
  for (int i = 0; i < 30; ++i) {
    VectorXd x(3);
    for (int d = 0; d < 3; ++d) x[d] = rng.normal() * 0.2;
    xs.push_back(x);
    ys.push_back(rng.normal());
  }
  GPModel m = GPModel::fit(xs, ys, cfg);
  for (int q = 0; q < 2000; ++q) {
    VectorXd query(3);
    for (int d = 0; d < 3; ++d) query[d] = rng.normal() * 0.2;
    EXPECT_GE(m.mean_var(query).var, 0.0);
  }
}

TEST(Gp, BatchMatchesSingleQueries) {
  Rng rng(53);
  std::vector<VectorXd> xs;
  std::vector<double> ys;
  for (int i = 0; i < 12; ++i) {
    VectorXd x(5);
    for (int d = 0; d < 5; ++d) x[d] = rng.normal();
    xs.push_back(x);
    ys.push_back(rng.normal() * 5.0);
  }
  GPModel m = GPModel::fit(xs, ys);
  const VectorXd prefix = vec({0.3, -0.7, 1.1});
  std::vector<VectorXd> sufs;
  for (int i = 0; i < 6; ++i) sufs.push_back(vec({rng.normal(), rng.normal()}));
  std::vector<const VectorXd*> ptrs;
  for (const auto& s : sufs) ptrs.push_back(&s);

  VectorXd means, vars;
  m.batch(prefix, ptrs, means, &vars);
  for (int i = 0; i < 6; ++i) {
    VectorXd full(5);
    full << prefix, sufs[i];
    const auto s = m.mean_var(full);
    EXPECT_NEAR(means[i], s.mean, 1e-10);
    EXPECT_NEAR(vars[i], s.var, 1e-10);
  }
}

TEST(Gp, MeanGradientMatchesFiniteDifferences) {
  Rng rng(59);
  std::vector<VectorXd> xs;
  std::vector<double> ys;
  for (int i = 0; i < 8; ++i) {
    VectorXd x(3);
    for (int d = 0; d < 3; ++d) x[d] = rng.normal();
    xs.push_back(x);
    ys.push_back(rng.normal() * 4.0);
  }
  GpConfig cfg;
  cfg.length_scale = 0.8;
  GPModel m = GPModel::fit(xs, ys, cfg);
  for (int q = 0; q < 5; ++q) {
    VectorXd x(3);
    for (int d = 0; d < 3; ++d) x[d] = rng.normal();
    VectorXd grad;
    const double mean = m.mean_and_grad(x, grad);
    EXPECT_NEAR(mean, m.mean(x), 1e-12);
    const double h = 1e-5;
    for (int d = 0; d < 3; ++d) {
      VectorXd hi = x, lo = x;
      hi[d] += h;
      lo[d] -= h;
      const double fd = (m.mean(hi) - m.mean(lo)) / (2.0 * h);
      EXPECT_NEAR(grad[d], fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(Gp, NoveltyFilterOnlyActsPastBudget) {
  const VectorXd p0 = vec({0.0}), p1 = vec({10.0}), p2 = vec({20.0}), p3 = vec({30.0});

  GpConfig roomy;
  roomy.budget = 10;
  GPModel under = GPModel::fit({p0, p0, p1}, {1.0, 2.0, 3.0}, roomy);
  EXPECT_EQ(under.size(), 3);  // duplicates retained while within budget

  GpConfig tight;
  tight.budget = 3;
  GPModel over = GPModel::fit({p0, p0, p1, p0, p2, p3}, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0}, tight);
  ASSERT_EQ(over.size(), 3);
  EXPECT_DOUBLE_EQ(over.inputs()(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(over.inputs()(1, 0), 10.0);
  EXPECT_DOUBLE_EQ(over.inputs()(2, 0), 20.0);
  EXPECT_DOUBLE_EQ(over.targets()[0], 1.0);
  EXPECT_DOUBLE_EQ(over.targets()[1], 3.0);
  EXPECT_DOUBLE_EQ(over.targets()[2], 5.0);
}

TEST(Gp, BudgetKeepsFirstDistinctPoints) {
  GpConfig cfg;
  cfg.budget = 5;
  std::vector<VectorXd> xs;
  std::vector<double> ys;
  for (int i = 0; i < 10; ++i) {
    xs.push_back(vec({static_cast<double>(10 * i)}));
    ys.push_back(static_cast<double>(i));
  }
  GPModel m = GPModel::fit(xs, ys, cfg);
  ASSERT_EQ(m.size(), 5);
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(m.inputs()(i, 0), 10.0 * i);
}

TEST(Gp, RestoreReproducesPosterior) {
  Rng rng(61);
  std::vector<VectorXd> xs;
  std::vector<double> ys;
  for (int i = 0; i < 9; ++i) {
    VectorXd x(2);
    x << rng.normal(), rng.normal();
    xs.push_back(x);
    ys.push_back(rng.normal());
  }
  GPModel m = GPModel::fit(xs, ys);
  GPModel r = GPModel::restore(m.inputs(), m.targets(), m.config());
  EXPECT_EQ(r.size(), m.size());
  for (int q = 0; q < 10; ++q) {
    VectorXd query(2);
    query << rng.normal(), rng.normal();
    const auto a = m.mean_var(query);
    const auto b = r.mean_var(query);
    EXPECT_NEAR(a.mean, b.mean, 1e-12);
    EXPECT_NEAR(a.var, b.var, 1e-12);
  }
}

TEST(Selection, GreedyPrefersLowIndexOnTies) {
  GPModel empty;
  auto cands = fake_candidates({0.0, 1.0, 2.0});
  EXPECT_EQ(select_action(empty, vec({0.0}), cands, SelectMode::Greedy), 0);

  GPModel m = GPModel::fit({vec({0.0, 2.0})}, {12.0}, {});
  EXPECT_EQ(select_action(m, vec({0.0}), cands, SelectMode::Greedy), 2);
}

TEST(Selection, ThompsonIsSeededAndCoversCandidates) {
  GPModel empty;  // equal prior for every candidate
  auto cands = fake_candidates({0.0, 1.0, 2.0});
  Rng a(7), b(7);
  std::vector<int> first, second, counts(3, 0);
  for (int i = 0; i < 300; ++i) {
    first.push_back(select_action(empty, vec({0.0}), cands, SelectMode::Thompson, &a));
    second.push_back(select_action(empty, vec({0.0}), cands, SelectMode::Thompson, &b));
    ++counts[first.back()];
  }
  EXPECT_EQ(first, second);
  for (int c : counts) EXPECT_GT(c, 0);
  EXPECT_THROW(select_action(empty, vec({0.0}), cands, SelectMode::Thompson), std::invalid_argument);
}

TEST(Selection, EpsilonControlsExploration) {
  GPModel m = GPModel::fit({vec({0.0, 2.0})}, {12.0}, {});
  auto cands = fake_candidates({0.0, 1.0, 2.0});
  Rng rng(13);
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 3000; ++i)
    ++counts[select_action(m, vec({0.0}), cands, SelectMode::EpsilonGreedy, &rng, 1.0)];
  for (int c : counts) EXPECT_GT(c, 800);
  for (int i = 0; i < 50; ++i)
    EXPECT_EQ(select_action(m, vec({0.0}), cands, SelectMode::EpsilonGreedy, &rng, 0.0), 2);
}

TEST(Training, SameSeedGivesIdenticalModel) {
  Ontology ont = ptest::tiny_ontology();
  SourceTrainConfig cfg;
  auto a = train_source_policy(ont, 40, 123, cfg);
  auto b = train_source_policy(ont, 40, 123, cfg);
  ASSERT_EQ(a.model->size(), b.model->size());
  EXPECT_EQ((a.model->alpha() - b.model->alpha()).lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_EQ(a.logs.size(), 40u);

  auto c = train_source_policy(ont, 40, 124, cfg);
  EXPECT_NE((a.model->targets() - c.model->targets()).lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(Training, LearnsToSucceedOnFullDomain) {
  Ontology ont = load_ontology(ptest::data_path("rest_a.json"));
  auto trained = train_source_policy(ont, 1000, 2024);
  GpPolicy greedy(trained.model);
  int successes = 0;
  double reward = 0.0;
  for (int ep = 0; ep < 300; ++ep) {
    EpisodeLog log = run_episode(greedy, ont, mix_seed(555, "gp-eval", ep));
    successes += log.success ? 1 : 0;
    reward += log.total_reward;
  }
  const double rate = successes / 300.0;
  const double avg = reward / 300.0;
  EXPECT_GE(rate, 0.85);
  EXPECT_GE(avg, 5.0);
}
