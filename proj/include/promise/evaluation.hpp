#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "promise/baselines.hpp"
#include "promise/policy.hpp"
#include "promise/simulator.hpp"

namespace promise {

// ---------------------------------------------------------------------------
// Live evaluation

// Aggregate outcome of a batch of evaluation dialogues.
struct Metrics {
  double avg_reward = 0.0;
  double success_rate = 0.0;
  double avg_length = 0.0;
  int n_episodes = 0;
  std::uint64_t seed = 0;
};

// Runs n dialogues with the policy as-is and averages reward, success, and
// turn count. Episode seeds derive from the given seed, so repeated calls
// replay the same dialogues.
inline Metrics live_eval(Policy& policy, const Ontology& ont, int n = 300,
                         std::uint64_t seed = 0) {
  if (n < 1) throw std::invalid_argument("live_eval needs at least one episode");
  Metrics m;
  m.n_episodes = n;
  m.seed = seed;
  int successes = 0;
  for (int i = 0; i < n; ++i) {
    const EpisodeLog log = run_episode(policy, ont, mix_seed(seed, "eval", i));
    m.avg_reward += log.total_reward;
    m.avg_length += log.length;
    if (log.success) ++successes;
  }
  m.avg_reward /= n;
  m.avg_length /= n;
  m.success_rate = static_cast<double>(successes) / n;
  return m;
}

inline Json metrics_to_json(const Metrics& m) {
  Json j;
  j["avg_reward"] = m.avg_reward;
  j["success_rate"] = m.success_rate;
  j["avg_length"] = m.avg_length;
  j["n_episodes"] = m.n_episodes;
  j["seed"] = m.seed;
  return j;
}

// ---------------------------------------------------------------------------
// Static evaluation

namespace detail {

// AUC of one positive item against the rest: negatives scored strictly below
// it count 1, exact ties count 1/2 (the midrank convention).
inline double one_positive_auc(const std::vector<double>& scores, std::size_t positive) {
  double below = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i == positive) continue;
    if (scores[i] < scores[positive])
      below += 1.0;
    else if (scores[i] == scores[positive])
      below += 0.5;
  }
  return below / static_cast<double>(scores.size() - 1);
}

}  // namespace detail

/**
 * Ranking quality of a scorer against expert dialogues. Every recorded turn
 * poses one ranking problem per sample: each menu candidate gets one draw
 * from the scorer's posterior (mean plus scaled unit normal), the recorded
 * action is the positive, and the draw's midrank AUC is recorded. Returns
 * the mean over all (turn, sample) pairs.
 */
inline double static_auc_eval(const ValuePolicy& scorer, const std::vector<EpisodeLog>& episodes,
                              const Ontology& ont, int samples = 10, std::uint64_t seed = 0) {
  if (samples < 1) throw std::invalid_argument("need at least one posterior sample");
  const auto candidates = candidate_actions(ont);
  if (candidates.size() < 2)
    throw std::invalid_argument("AUC needs a menu of at least two candidates");
  Rng rng(mix_seed(seed, "static-auc"));
  double total = 0.0;
  std::int64_t pairs = 0;
  std::vector<ValuePolicy::Score> posterior(candidates.size());
  std::vector<double> draws(candidates.size());
  for (const auto& ep : episodes) {
    for (const auto& rec : ep.turns) {
      const SummaryState h{rec.state};
      std::size_t positive = candidates.size();
      for (std::size_t c = 0; c < candidates.size(); ++c)
        if (candidates[c].v.size() == rec.action.size() &&
            (candidates[c].v - rec.action).squaredNorm() == 0.0) {
          positive = c;
          break;
        }
      if (positive == candidates.size())
        throw std::invalid_argument("expert turn takes an action outside the candidate menu");
      for (std::size_t c = 0; c < candidates.size(); ++c)
        posterior[c] = scorer.score(h, candidates[c]);
      for (int s = 0; s < samples; ++s) {
        for (std::size_t c = 0; c < candidates.size(); ++c)
          draws[c] = posterior[c].mean + std::sqrt(std::max(posterior[c].var, 0.0)) * rng.normal();
        total += detail::one_positive_auc(draws, positive);
        ++pairs;
      }
    }
  }
  if (pairs == 0) throw std::invalid_argument("no expert turns to rank");
  return total / static_cast<double>(pairs);
}

// ---------------------------------------------------------------------------
// Learning curves

struct CurveConfig {
  std::vector<Variant> variants{Variant::Promise, Variant::NoneTL};
  std::vector<int> sizes{1, 5, 10, 20};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  int source_episodes = 300;  // source policy training dialogues, per seed
  int eval_episodes = 100;    // live evaluation dialogues per cell
  int expert_episodes = 20;   // oracle dialogues ranked by the static AUC
  int auc_samples = 10;
  TransferConfig transfer;  // per-cell seed is filled in by the runner
  GpConfig target_gp;       // the target-only fit behind nonetl
  SourceTrainConfig collect;  // drives source training and target log collection
};

struct CurveRow {
  std::string variant;
  int size = 0;
  std::uint64_t seed = 0;
  Metrics metrics;
  double auc = 0.0;
};

inline void validate_curve(const CurveConfig& cfg) {
  if (cfg.variants.empty()) throw ConfigError("curve config lists no variants");
  if (cfg.sizes.empty()) throw ConfigError("curve config lists no target sizes");
  if (cfg.seeds.empty()) throw ConfigError("curve config lists no seeds");
  for (const int s : cfg.sizes)
    if (s < 1) throw ConfigError("target sizes must be positive");
  if (cfg.source_episodes < 1 || cfg.eval_episodes < 1 || cfg.expert_episodes < 1 ||
      cfg.auc_samples < 1)
    throw ConfigError("episode and sample counts must be positive");
}

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Shortest decimal form that parses back to the same double.
inline std::string fmt_double(double v) {
  std::array<char, 32> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline double parse_double(const std::string& s, const std::string& origin) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::runtime_error(origin + ": bad number '" + s + "'");
  return v;
}

template <typename Int>
inline Int parse_int(const std::string& s, const std::string& origin) {
  Int v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::runtime_error(origin + ": bad integer '" + s + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

inline void hash_adam(std::ostream& ss, const AdamConfig& a) {
  ss << fmt_double(a.step_size) << '|' << fmt_double(a.beta1) << '|' << fmt_double(a.beta2)
     << '|' << fmt_double(a.epsilon);
}

inline void hash_gp(std::ostream& ss, const GpConfig& g) {
  ss << fmt_double(g.signal_variance) << '|' << fmt_double(g.length_scale) << '|'
     << fmt_double(g.noise_variance) << '|' << g.budget << '|'
     << fmt_double(g.novelty_threshold);
}

}  // namespace detail

// Fingerprint of everything that determines the curve rows; the cache file is
// only trusted when its recorded fingerprint matches.
inline std::uint64_t curve_config_hash(const CurveConfig& cfg, const Ontology& target,
                                       const Ontology& source,
                                       const std::optional<AliasTable>& alias) {
  std::ostringstream ss;
  ss << "curve-v1";
  for (const Variant v : cfg.variants) ss << '|' << variant_name(v);
  ss << ';';
  for (const int s : cfg.sizes) ss << '|' << s;
  ss << ';';
  for (const auto s : cfg.seeds) ss << '|' << s;
  ss << ';' << cfg.source_episodes << '|' << cfg.eval_episodes << '|' << cfg.expert_episodes
     << '|' << cfg.auc_samples;
  const TransferConfig& t = cfg.transfer;
  ss << ';' << detail::fmt_double(t.gamma) << '|' << detail::fmt_double(t.lambda1) << '|'
     << detail::fmt_double(t.lambda2) << '|' << detail::fmt_double(t.lambda3) << '|'
     << detail::fmt_double(t.lambda4) << '|';
  detail::hash_adam(ss, t.adam);
  ss << '|' << t.epochs << '|' << t.minibatch << '|' << t.embed_dim << '|' << t.seed << '|'
     << t.restarts << '|' << t.predictor.epochs << '|';
  detail::hash_adam(ss, t.predictor.adam);
  ss << '|' << t.source_sentence_cap << ';';
  detail::hash_gp(ss, cfg.target_gp);
  ss << ';' << cfg.collect.refit_every << '|' << detail::fmt_double(cfg.collect.eps_start) << '|'
     << detail::fmt_double(cfg.collect.eps_end) << '|';
  detail::hash_gp(ss, cfg.collect.gp);
  ss << '|' << cfg.collect.episode.max_turns << '|'
     << static_cast<int>(cfg.collect.episode.reward_mode);
  ss << ';' << target.name() << '|' << source.name();
  if (alias) {
    ss << ";alias";
    for (const auto& [from, to] : alias->acts) ss << '|' << from << '>' << to;
    for (const auto& [from, to] : alias->slots) ss << '|' << from << '>' << to;
  } else {
    ss << ";noalias";
  }
  return detail::fnv1a(ss.str());
}

inline constexpr const char* kCurveHeader = "variant,size,seed,avg_reward,success_rate,avg_length,auc";

inline std::string curve_csv(const std::vector<CurveRow>& rows) {
  std::string out(kCurveHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += r.variant;
    out += ',' + std::to_string(r.size) + ',' + std::to_string(r.seed);
    out += ',' + detail::fmt_double(r.metrics.avg_reward);
    out += ',' + detail::fmt_double(r.metrics.success_rate);
    out += ',' + detail::fmt_double(r.metrics.avg_length);
    out += ',' + detail::fmt_double(r.auc);
    out += '\n';
  }
  return out;
}

// Parses text written by curve_csv. The two Metrics fields the CSV does not
// carry are reconstructed from the config: n_episodes is the configured live
// count and the metrics seed is re-derived the way the runner derives it.
inline std::vector<CurveRow> parse_curve_csv(const std::string& text, int eval_episodes,
                                             const std::string& origin = "<memory>") {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(origin + ": empty curve CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCurveHeader)
    throw std::runtime_error(origin + ": unexpected curve CSV header '" + line + "'");
  std::vector<CurveRow> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 7)
      throw std::runtime_error(origin + ": curve CSV row needs 7 fields, got " +
                               std::to_string(fields.size()));
    CurveRow r;
    r.variant = fields[0];
    r.size = detail::parse_int<int>(fields[1], origin);
    r.seed = detail::parse_int<std::uint64_t>(fields[2], origin);
    r.metrics.avg_reward = detail::parse_double(fields[3], origin);
    r.metrics.success_rate = detail::parse_double(fields[4], origin);
    r.metrics.avg_length = detail::parse_double(fields[5], origin);
    r.metrics.n_episodes = eval_episodes;
    r.metrics.seed = mix_seed(r.seed, "live", r.size);
    r.auc = detail::parse_double(fields[6], origin);
    rows.push_back(std::move(r));
  }
  return rows;
}

// Everything trained or collected once per seed and shared by that seed's
// cells: the converged source model with its logs, a pool of target dialogues
// gathered by the same improving epsilon-greedy learner protocol (cells take
// prefixes of it), and the oracle dialogues the static AUC ranks against.
struct SeedArtifacts {
  std::shared_ptr<const GPModel> source_q;
  std::vector<EpisodeLog> source_logs;
  std::vector<EpisodeLog> target_pool;
  std::vector<EpisodeLog> expert_episodes;
};

inline SeedArtifacts make_seed_artifacts(const Ontology& target, const Ontology& source,
                                         const CurveConfig& cfg, std::uint64_t seed) {
  SeedArtifacts art;
  auto src = train_source_policy(source, cfg.source_episodes, mix_seed(seed, "source"),
                                 cfg.collect);
  art.source_q = std::move(src.model);
  art.source_logs = std::move(src.logs);
  const int pool = *std::max_element(cfg.sizes.begin(), cfg.sizes.end());
  auto tgt = train_source_policy(target, pool, mix_seed(seed, "target"), cfg.collect);
  art.target_pool = std::move(tgt.logs);
  OraclePolicy oracle(target);
  art.expert_episodes.reserve(cfg.expert_episodes);
  for (int i = 0; i < cfg.expert_episodes; ++i)
    art.expert_episodes.push_back(run_episode(oracle, target, mix_seed(seed, "expert", i)));
  return art;
}

inline CurveRow run_curve_cell(const Ontology& target, const Ontology& source,
                               const std::optional<AliasTable>& alias, const CurveConfig& cfg,
                               const SeedArtifacts& art, Variant variant, int variant_index,
                               int size, std::uint64_t seed) {
  VariantInputs in;
  in.source_q = art.source_q;
  in.source = &source;
  in.target = &target;
  in.source_logs = art.source_logs;
  in.target_logs.assign(art.target_pool.begin(), art.target_pool.begin() + size);
  in.alias = alias;
  in.cfg = cfg.transfer;
  in.cfg.seed = mix_seed(seed, "cell", static_cast<std::uint64_t>(variant_index), size);
  in.gp = cfg.target_gp;
  VariantPolicy vp = build_variant(variant, in);
  CurveRow row;
  row.variant = vp.name;
  row.size = size;
  row.seed = seed;
  row.metrics = live_eval(*vp.policy, target, cfg.eval_episodes, mix_seed(seed, "live", size));
  row.auc = static_auc_eval(*vp.policy, art.expert_episodes, target, cfg.auc_samples,
                            mix_seed(seed, "rank", static_cast<std::uint64_t>(variant_index),
                                     size));
  return row;
}

/**
 * Learning-curve driver. For each seed the source policy is trained once and
 * a pool of target dialogues collected once; every (variant, size) cell then
 * builds its policy from the first `size` pool dialogues and is evaluated
 * live and statically. Rows come back ordered by (variant, size, seed) with
 * variants in config order.
 *
 * With a cache path, rows whose file fingerprint matches the config are
 * reloaded instead of recomputed, and the file plus a sidecar fingerprint is
 * rewritten after every freshly finished row. Cells within one seed run
 * `jobs` at a time; results are identical for any jobs value.
 */
inline std::vector<CurveRow> learning_curve(
    const Ontology& target, const Ontology& source, const std::optional<AliasTable>& alias,
    const CurveConfig& cfg, const std::string& cache_path = "", int jobs = 1,
    const std::function<void(const CurveRow&)>& on_row = {}) {
  validate_curve(cfg);
  if (jobs < 1) throw ConfigError("jobs must be positive");
  for (const Variant v : cfg.variants)
    if ((v == Variant::FAFS || v == Variant::FALS) && !alias)
      throw ConfigError(std::string("variant ") + variant_name(v) +
                        " needs a ground-truth alias");

  const std::uint64_t fingerprint = curve_config_hash(cfg, target, source, alias);
  const std::string meta_path = cache_path.empty() ? "" : cache_path + ".meta";

  using Key = std::tuple<int, int, std::uint64_t>;  // variant index, size, seed
  const auto variant_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < cfg.variants.size(); ++i)
      if (variant_name(cfg.variants[i]) == name) return static_cast<int>(i);
    return -1;
  };

  std::map<Key, CurveRow> done;
  if (!cache_path.empty()) {
    std::ifstream meta(meta_path);
    std::string recorded;
    if (meta && std::getline(meta, recorded) && recorded == std::to_string(fingerprint)) {
      for (auto& row : parse_curve_csv(read_text_file(cache_path), cfg.eval_episodes,
                                       cache_path)) {
        const int vi = variant_index(row.variant);
        if (vi >= 0) done.emplace(Key{vi, row.size, row.seed}, std::move(row));
      }
    }
  }

  const auto flush = [&] {
    if (cache_path.empty()) return;
    std::vector<CurveRow> rows;
    rows.reserve(done.size());
    for (const auto& [key, row] : done) rows.push_back(row);
    write_text_file(cache_path, curve_csv(rows));
    write_text_file(meta_path, std::to_string(fingerprint) + "\n");
  };
  flush();

  for (const std::uint64_t seed : cfg.seeds) {
    std::vector<Key> missing;
    for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi)
      for (const int size : cfg.sizes)
        if (!done.count(Key{static_cast<int>(vi), size, seed}))
          missing.push_back(Key{static_cast<int>(vi), size, seed});
    if (missing.empty()) continue;

    const SeedArtifacts art = make_seed_artifacts(target, source, cfg, seed);
    for (std::size_t i = 0; i < missing.size(); i += static_cast<std::size_t>(jobs)) {
      const std::size_t batch = std::min<std::size_t>(jobs, missing.size() - i);
      std::vector<std::future<CurveRow>> futures;
      futures.reserve(batch);
      for (std::size_t j = 0; j < batch; ++j) {
        const auto [vi, size, s] = missing[i + j];
        futures.push_back(std::async(std::launch::async, [&, vi = vi, size = size, s = s] {
          return run_curve_cell(target, source, alias, cfg, art, cfg.variants[vi], vi, size, s);
        }));
      }
      for (std::size_t j = 0; j < batch; ++j) {
        CurveRow row = futures[j].get();
        if (on_row) on_row(row);
        done.emplace(missing[i + j], std::move(row));
      }
      flush();
    }
  }

  std::vector<CurveRow> rows;
  rows.reserve(done.size());
  for (auto& [key, row] : done) rows.push_back(std::move(row));
  return rows;
}

// ---------------------------------------------------------------------------
// Curve aggregation

struct CurveSummary {
  std::string variant;
  int size = 0;
  int n = 0;
  double mean_reward = 0.0, stderr_reward = 0.0;
  double mean_success = 0.0, stderr_success = 0.0;
  double mean_length = 0.0, stderr_length = 0.0;
  double mean_auc = 0.0, stderr_auc = 0.0;
};

namespace detail {

// Sample mean and its standard error (zero for a single observation).
inline std::pair<double, double> mean_stderr(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (const double x : xs) mean += x;
  mean /= n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (const double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace detail

// Collapses rows to per-(variant, size) means with standard errors, groups
// ordered by first appearance.
inline std::vector<CurveSummary> aggregate_curve(const std::vector<CurveRow>& rows) {
  std::vector<std::pair<std::string, int>> order;
  std::map<std::pair<std::string, int>, std::array<std::vector<double>, 4>> groups;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.variant, r.size);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second[0].push_back(r.metrics.avg_reward);
    it->second[1].push_back(r.metrics.success_rate);
    it->second[2].push_back(r.metrics.avg_length);
    it->second[3].push_back(r.auc);
  }
  std::vector<CurveSummary> out;
  out.reserve(order.size());
  for (const auto& key : order) {
    const auto& g = groups.at(key);
    CurveSummary s;
    s.variant = key.first;
    s.size = key.second;
    s.n = static_cast<int>(g[0].size());
    std::tie(s.mean_reward, s.stderr_reward) = detail::mean_stderr(g[0]);
    std::tie(s.mean_success, s.stderr_success) = detail::mean_stderr(g[1]);
    std::tie(s.mean_length, s.stderr_length) = detail::mean_stderr(g[2]);
    std::tie(s.mean_auc, s.stderr_auc) = detail::mean_stderr(g[3]);
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mapping export

struct MappingTable {
  MatrixXd m;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
};

namespace detail {

inline void check_label(const std::string& s) {
  if (s.empty() || s.find_first_of(",\"\n\r&<>") != std::string::npos)
    throw std::invalid_argument("label unfit for CSV or SVG: '" + s + "'");
}

// Larger values render darker: 1 is black, 0 is white.
inline std::string gray_fill(double v) {
  const int level = static_cast<int>(std::lround(255.0 * (1.0 - std::clamp(v, 0.0, 1.0))));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", level, level, level);
  return buf;
}

}  // namespace detail

/**
 * Writes a mapping matrix as a labeled CSV plus a standalone SVG heatmap.
 * The CSV holds a header row of column labels and one row per matrix row led
 * by its label; the SVG draws one grayscale cell per entry with labels along
 * both axes.
 */
inline void export_mapping(const MatrixXd& m, const std::vector<std::string>& row_labels,
                           const std::vector<std::string>& col_labels,
                           const std::string& csv_path, const std::string& svg_path) {
  if (m.rows() < 1 || m.cols() < 1) throw std::invalid_argument("mapping matrix is empty");
  if (row_labels.size() != static_cast<std::size_t>(m.rows()) ||
      col_labels.size() != static_cast<std::size_t>(m.cols()))
    throw std::invalid_argument("label counts do not match the matrix shape");
  if (!m.allFinite()) throw std::invalid_argument("mapping matrix has non-finite entries");
  for (const auto& s : row_labels) detail::check_label(s);
  for (const auto& s : col_labels) detail::check_label(s);

  std::string csv;
  for (const auto& c : col_labels) csv += ',' + c;
  csv += '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    csv += row_labels[r];
    for (Eigen::Index c = 0; c < m.cols(); ++c) csv += ',' + detail::fmt_double(m(r, c));
    csv += '\n';
  }
  write_text_file(csv_path, csv);

  const int cell = 40;
  const double char_w = 7.5;  // monospace advance at 12px
  std::size_t row_chars = 0, col_chars = 0;
  for (const auto& s : row_labels) row_chars = std::max(row_chars, s.size());
  for (const auto& s : col_labels) col_chars = std::max(col_chars, s.size());
  const int left = 16 + static_cast<int>(char_w * static_cast<double>(row_chars));
  const int top = 16 + static_cast<int>(char_w * static_cast<double>(col_chars));
  const int width = left + cell * static_cast<int>(m.cols()) + 16;
  const int height = top + cell * static_cast<int>(m.rows()) + 16;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
      << "<style>text{font:12px monospace;fill:#222;}</style>\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const int x = left + static_cast<int>(c) * cell + cell / 2 + 4;
    svg << "<text x=\"" << x << "\" y=\"" << top - 6 << "\" transform=\"rotate(-90 " << x << ' '
        << top - 6 << ")\">" << col_labels[c] << "</text>\n";
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    svg << "<text x=\"" << left - 6 << "\" y=\"" << top + static_cast<int>(r) * cell + cell / 2 + 4
        << "\" text-anchor=\"end\">" << row_labels[r] << "</text>\n";
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      svg << "<rect x=\"" << left + static_cast<int>(c) * cell << "\" y=\""
          << top + static_cast<int>(r) * cell << "\" width=\"" << cell << "\" height=\"" << cell
          << "\" fill=\"" << detail::gray_fill(m(r, c))
          << "\" stroke=\"#999\" stroke-width=\"0.5\"><title>" << row_labels[r] << " -> "
          << col_labels[c] << ": " << detail::fmt_double(m(r, c)) << "</title></rect>\n";
    }
  }
  svg << "</svg>\n";
  write_text_file(svg_path, svg.str());
}

// Reads back a CSV written by export_mapping.
inline MappingTable import_mapping_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty mapping CSV");
  auto header = detail::split_csv_line(line);
  if (header.size() < 2 || !header[0].empty())
    throw std::runtime_error(path + ": mapping CSV header must start with an empty cell");
  MappingTable table;
  table.col_labels.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> values;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error(path + ": ragged mapping CSV row '" + line + "'");
    table.row_labels.push_back(fields[0]);
    std::vector<double> row;
    row.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i)
      row.push_back(detail::parse_double(fields[i], path));
    values.push_back(std::move(row));
  }
  table.m.resize(static_cast<Eigen::Index>(values.size()),
                 static_cast<Eigen::Index>(table.col_labels.size()));
  for (std::size_t r = 0; r < values.size(); ++r)
    for (std::size_t c = 0; c < values[r].size(); ++c)
      table.m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r][c];
  return table;
}

}  // namespace promise
