#include "poisnet/omii.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "poisnet/parallel.hpp"
#include "poisnet/rates.hpp"

namespace poisnet {

std::string to_string(Estimator e) { return e == Estimator::poisson ? "poisson" : "gaussian"; }

std::string to_string(ForwardNull f) {
  return f == ForwardNull::max_statistic ? "max" : "candidate";
}

Estimator parse_estimator(const std::string& s) {
  if (s == "poisson") return Estimator::poisson;
  if (s == "gaussian") return Estimator::gaussian;
  throw std::invalid_argument("unknown estimator '" + s + "' (expected poisson or gaussian)");
}

ForwardNull parse_forward_null(const std::string& s) {
  if (s == "max") return ForwardNull::max_statistic;
  if (s == "candidate") return ForwardNull::candidate;
  throw std::invalid_argument("unknown forward null '" + s + "' (expected max or candidate)");
}

void InferenceConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (n_shuffles < 20) throw std::invalid_argument("n_shuffles must be at least 20");
  if (lag != 0 && lag != 1) throw std::invalid_argument("lag must be 0 or 1");
  truncation.validate();
}

std::vector<std::size_t> SelectionResult::sources() const {
  std::vector<std::size_t> out;
  for (const auto& p : parents) out.push_back(p.source);
  return out;
}

namespace {

constexpr std::uint64_t kForwardStream = 0x666f7277ULL;
constexpr std::uint64_t kForwardMaxStream = 0x666d6178ULL;
constexpr std::uint64_t kBackwardStream = 0x6261636bULL;
constexpr double kDegenerate = 1e-10;

std::uint64_t pair_key(std::uint64_t a, std::uint64_t b) {
  const auto lo = std::min(a, b);
  const auto hi = std::max(a, b);
  return Rng::mix(lo ^ Rng::mix(hi));
}

// Standardized rows with their Poisson base rates. In lag mode the rows are
// the one-step-lagged sources followed by the present of a single target.
struct Workspace {
  StandardizedRows rows;
  std::vector<double> base_rate;
  std::vector<double> coupling;                    // row-major, max(corr, 0)
  std::vector<std::vector<double>> sorted_coupling;  // per row, ascending, self excluded

  explicit Workspace(StandardizedRows r) : rows(std::move(r)) {
    const std::size_t n = rows.variables();
    const CorrelationMatrix corr = rows.correlation_matrix();
    const RateMatrix rates = rates_from_correlation(corr);
    base_rate.resize(n);
    coupling.assign(n * n, 0.0);
    sorted_coupling.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      base_rate[i] = rates.base_rate(i);
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i) continue;
        coupling[i * n + k] = std::max(corr(i, k), 0.0);
        sorted_coupling[i].push_back(coupling[i * n + k]);
      }
      std::sort(sorted_coupling[i].begin(), sorted_coupling[i].end());
    }
  }

  double coupling_of(std::size_t i, std::size_t k) const { return coupling[i * rows.variables() + k]; }
};

// Base rate of a row after one of its couplings changes from `old_value` to
// `new_value`. Summed in ascending order like base_rate_from_couplings, so an
// unchanged coupling gives back the stored base rate bit for bit.
double base_replacing(const std::vector<double>& sorted, double old_value, double new_value) {
  double sum = 0.0;
  bool skipped = false, inserted = false;
  for (double c : sorted) {
    if (!skipped && c == old_value) {
      skipped = true;
      continue;
    }
    if (!inserted && new_value <= c) {
      sum += new_value;
      inserted = true;
    }
    sum += c;
  }
  if (!inserted) sum += new_value;
  return std::max(1.0 - sum, 0.0);
}

// Everything needed to run the tests for one target.
struct Problem {
  std::shared_ptr<const Workspace> ws;
  std::size_t target_row = 0;
  std::size_t target_variable = 0;
  std::vector<std::size_t> variable_of_row;  // row -> variable id
  std::vector<std::uint64_t> key_of_row;     // row -> label hash
  std::vector<std::size_t> candidates;       // rows eligible as parents, ascending variable id
  std::vector<std::size_t> forced;           // rows always conditioned on
};

std::vector<std::uint64_t> label_keys(const CountMatrix& counts) {
  std::vector<std::uint64_t> keys;
  for (const auto& l : counts.labels()) keys.push_back(Rng::hash_label(l));
  return keys;
}

std::shared_ptr<const Workspace> contemporaneous_workspace(const CountMatrix& counts) {
  return std::make_shared<const Workspace>(StandardizedRows(counts));
}

Problem make_problem(const CountMatrix& counts, std::size_t target, const InferenceConfig& config,
                     std::shared_ptr<const Workspace> shared,
                     const std::vector<std::uint64_t>& keys) {
  const std::size_t n = counts.variables();
  if (target >= n) throw std::invalid_argument("target out of range");
  Problem p;
  p.target_variable = target;
  if (config.lag == 0) {
    p.ws = shared ? std::move(shared) : contemporaneous_workspace(counts);
    p.target_row = target;
    for (std::size_t i = 0; i < n; ++i) {
      p.variable_of_row.push_back(i);
      p.key_of_row.push_back(keys[i]);
      if (i != target) p.candidates.push_back(i);
    }
  } else {
    const std::size_t t = counts.samples();
    if (t < 3) throw std::invalid_argument("lagged inference needs at least 3 samples");
    Eigen::MatrixXd raw(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(t - 1));
    for (std::size_t i = 0; i < n; ++i) {
      auto row = counts.row(i);
      for (std::size_t s = 0; s + 1 < t; ++s)
        raw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) =
            static_cast<double>(row[s]);
    }
    auto trow = counts.row(target);
    for (std::size_t s = 1; s < t; ++s)
      raw(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(s - 1)) =
          static_cast<double>(trow[s]);
    p.ws = std::make_shared<const Workspace>(StandardizedRows(raw));
    p.target_row = n;
    for (std::size_t i = 0; i < n; ++i) {
      p.variable_of_row.push_back(i);
      p.key_of_row.push_back(keys[i]);
      if (i != target) p.candidates.push_back(i);
    }
    p.variable_of_row.push_back(target);
    p.key_of_row.push_back(keys[target]);
    p.forced.push_back(target);
  }
  return p;
}

// Tests against a fixed condition set. Rows are unit-norm and centered, so a
// residual's squared norm is one minus the squared norm of its projection.
class Conditioned {
 public:
  Conditioned(const Problem& p, const InferenceConfig& config,
              std::span<const std::size_t> condition)
      : p_(p), config_(config), z_(p.ws->rows.z()) {
    if (p_.ws->rows.samples() < condition.size() + 3)
      throw std::invalid_argument("too few samples for the condition set");
    basis_ = p_.ws->rows.basis(condition);
    const Eigen::VectorXd zt = z_.row(static_cast<Eigen::Index>(p_.target_row)).transpose();
    bt_ = basis_.q.transpose() * zt;
    nt_ = p_.ws->rows.degenerate(p_.target_row) ? 0.0 : 1.0 - bt_.squaredNorm();
  }

  Nats statistic(std::size_t row, double r) const {
    return statistic(p_.ws->base_rate[row], p_.ws->base_rate[p_.target_row], r);
  }

  Nats statistic(double base_row, double base_target, double r) const {
    if (config_.estimator == Estimator::gaussian) return gaussian_cmi_from_partial_correlation(r);
    return poisson_cmi_from_rates(base_row, base_target, std::max(r, 0.0), config_.truncation);
  }

  bool poisson() const { return config_.estimator == Estimator::poisson; }

  // The marginal correlation splits into a part carried by the condition set
  // and a residual part, r = b_t . b_k + pc sqrt(n_t n_k). Under the null only
  // the residual part is exchangeable, so replicates keep the first term and
  // swap in the permuted pc. With no condition set this is just the permuted r.
  struct Split {
    double explained = 0.0;
    double scale = 0.0;  // 0 when the residual is degenerate
    double observed = 0.0;
  };

  Split split(std::size_t row) const {
    Split sp;
    sp.observed = p_.ws->coupling_of(row, p_.target_row);
    const auto& rows = p_.ws->rows;
    if (rows.degenerate(row) || rows.degenerate(p_.target_row)) return sp;
    const Eigen::VectorXd zk = z_.row(static_cast<Eigen::Index>(row)).transpose();
    const Eigen::VectorXd proj = basis_.q.transpose() * zk;
    const double nk = 1.0 - proj.squaredNorm();
    sp.explained = bt_.dot(proj);
    if (nt_ >= kDegenerate && nk >= kDegenerate) sp.scale = std::sqrt(nt_ * nk);
    return sp;
  }

  static double null_coupling(const Split& sp, double pc) {
    if (sp.scale == 0.0) return sp.observed;
    return std::max(std::clamp(sp.explained + pc * sp.scale, -1.0, 1.0), 0.0);
  }

  double partial(double numerator, const Eigen::VectorXd& proj) const {
    const double nk = 1.0 - proj.squaredNorm();
    if (nt_ < kDegenerate || nk < kDegenerate) return 0.0;
    return std::clamp((numerator - bt_.dot(proj)) / std::sqrt(nt_ * nk), -1.0, 1.0);
  }

  Nats observed(std::size_t row) const {
    if (p_.ws->rows.degenerate(row)) return statistic(row, 0.0);
    const auto& rows = p_.ws->rows;
    const double num = dot_fixed(rows.row_data(p_.target_row), rows.row_data(row), rows.samples());
    const Eigen::VectorXd zk = z_.row(static_cast<Eigen::Index>(row)).transpose();
    const Eigen::VectorXd proj = basis_.q.transpose() * zk;
    return statistic(row, partial(num, proj));
  }

  // Null replicates permute `row` alone. The tested coupling also enters both
  // base rates, so those are recomputed with its null value (see Split); every
  // other coupling keeps its observed value.
  ShuffleResult single_test(std::size_t row, Rng& rng) const {
    ShuffleResult res;
    res.cmi = observed(row);
    const auto& ws = *p_.ws;
    const std::size_t t = ws.rows.samples();
    const double* zk = ws.rows.row_data(row);
    const double* zt = ws.rows.row_data(p_.target_row);
    const bool flat = ws.rows.degenerate(row) || ws.rows.degenerate(p_.target_row);
    const double pair = ws.coupling_of(row, p_.target_row);
    const Split sp = split(row);
    std::vector<std::size_t> perm(t);
    Eigen::VectorXd permuted(static_cast<Eigen::Index>(t));
    std::size_t exceed = 0;
    for (std::size_t b = 0; b < config_.n_shuffles; ++b) {
      for (std::size_t s = 0; s < t; ++s) perm[s] = s;
      rng.shuffle(std::span<std::size_t>(perm));
      for (std::size_t s = 0; s < t; ++s)
        permuted[static_cast<Eigen::Index>(s)] = zk[perm[s]];
      Nats null_cmi;
      if (flat) {
        null_cmi = statistic(row, 0.0);
      } else {
        const double num = dot_fixed(zt, permuted.data(), t);
        const Eigen::VectorXd proj = basis_.q.transpose() * permuted;
        const double pc = partial(num, proj);
        if (poisson()) {
          const double c = null_coupling(sp, pc);
          null_cmi = statistic(base_replacing(ws.sorted_coupling[row], pair, c),
                               base_replacing(ws.sorted_coupling[p_.target_row], pair, c), pc);
        } else {
          null_cmi = statistic(row, pc);
        }
      }
      if (null_cmi >= res.cmi) ++exceed;
    }
    res.p_value = static_cast<double>(1 + exceed) / static_cast<double>(1 + config_.n_shuffles);
    res.accepted = res.p_value <= config_.alpha;
    return res;
  }

  // Null replicates permute every candidate row with one shared permutation
  // and keep the largest CMI among them. As in single_test, the base rates are
  // recomputed with each target-candidate coupling at its null value.
  ShuffleResult max_test(std::span<const std::size_t> rows, Nats observed_max, Rng& rng) const {
    ShuffleResult res;
    res.cmi = observed_max;
    const auto& ws = *p_.ws;
    const std::size_t t = ws.rows.samples();
    const std::size_t target = p_.target_row;
    const Eigen::Index r = basis_.rank();
    const auto zt = z_.row(static_cast<Eigen::Index>(target));
    const bool flat_target = ws.rows.degenerate(target);

    // Target couplings to rows outside the permuted set stay fixed.
    std::vector<bool> permuted(ws.rows.variables(), false);
    for (auto row : rows) permuted[row] = true;
    std::vector<double> fixed_target;
    for (std::size_t k = 0; k < ws.rows.variables(); ++k)
      if (k != target && !permuted[k]) fixed_target.push_back(ws.coupling_of(target, k));
    std::vector<double> target_couplings;
    std::vector<double> pcs(rows.size()), cs(rows.size());
    std::vector<Split> splits;
    if (poisson())
      for (auto row : rows) splits.push_back(split(row));

    std::vector<std::size_t> perm(t);
    // Scattering the target and basis by the permutation is equivalent to
    // gathering each candidate row, and costs O(t) instead of O(n t).
    Eigen::VectorXd target_scattered(static_cast<Eigen::Index>(t));
    Eigen::MatrixXd basis_scattered(static_cast<Eigen::Index>(t), r);
    Eigen::VectorXd proj(r);
    std::size_t exceed = 0;
    for (std::size_t b = 0; b < config_.n_shuffles; ++b) {
      for (std::size_t s = 0; s < t; ++s) perm[s] = s;
      rng.shuffle(std::span<std::size_t>(perm));
      for (std::size_t s = 0; s < t; ++s) {
        const auto dst = static_cast<Eigen::Index>(perm[s]);
        const auto src = static_cast<Eigen::Index>(s);
        target_scattered[dst] = zt[src];
        if (r > 0) basis_scattered.row(dst) = basis_.q.row(src);
      }
      for (std::size_t idx = 0; idx < rows.size(); ++idx) {
        const std::size_t row = rows[idx];
        pcs[idx] = 0.0;
        if (poisson()) cs[idx] = splits[idx].observed;
        if (ws.rows.degenerate(row) || flat_target) continue;
        const double* zk = ws.rows.row_data(row);
        const double num = dot_fixed(zk, target_scattered.data(), t);
        for (Eigen::Index c = 0; c < r; ++c)
          proj[c] = dot_fixed(zk, basis_scattered.col(c).data(), t);
        pcs[idx] = partial(num, proj);
        if (poisson()) cs[idx] = null_coupling(splits[idx], pcs[idx]);
      }
      double base_target = ws.base_rate[target];
      if (poisson()) {
        target_couplings = fixed_target;
        target_couplings.insert(target_couplings.end(), cs.begin(), cs.end());
        base_target = base_rate_from_couplings(target_couplings);
      }
      Nats best = -std::numeric_limits<double>::infinity();
      for (std::size_t idx = 0; idx < rows.size(); ++idx) {
        const std::size_t row = rows[idx];
        const double base_row =
            poisson() ? base_replacing(ws.sorted_coupling[row], ws.coupling_of(row, target), cs[idx])
                      : ws.base_rate[row];
        best = std::max(best, statistic(base_row, base_target, pcs[idx]));
      }
      if (best >= observed_max) ++exceed;
    }
    res.p_value = static_cast<double>(1 + exceed) / static_cast<double>(1 + config_.n_shuffles);
    res.accepted = res.p_value <= config_.alpha;
    return res;
  }

 private:
  const Problem& p_;
  const InferenceConfig& config_;
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& z_;
  ConditionBasis basis_;
  Eigen::VectorXd bt_;
  double nt_ = 0.0;
};

std::size_t row_of_variable(const Problem& p, std::size_t variable) {
  // Sources occupy rows 0..n-1 in both modes.
  if (variable >= p.candidates.size() + 1) throw std::invalid_argument("variable out of range");
  return variable;
}

std::vector<std::size_t> with_forced(const Problem& p, std::span<const std::size_t> rows) {
  std::vector<std::size_t> out = p.forced;
  out.insert(out.end(), rows.begin(), rows.end());
  return out;
}

Rng pair_stream(const Problem& p, const InferenceConfig& config, std::uint64_t phase,
                std::size_t row) {
  return Rng::substream(config.seed,
                        {phase, pair_key(p.key_of_row[row], p.key_of_row[p.target_row])});
}

SelectionResult run_forward(const Problem& p, const InferenceConfig& config) {
  SelectionResult out;
  std::vector<std::size_t> selected;  // rows, in order added
  const std::size_t cap = config.max_parents.value_or(p.candidates.size());
  for (std::size_t step = 0; selected.size() < cap; ++step) {
    std::vector<std::size_t> pool;
    for (auto row : p.candidates)
      if (std::find(selected.begin(), selected.end(), row) == selected.end()) pool.push_back(row);
    if (pool.empty()) break;

    const auto condition = with_forced(p, selected);
    const Conditioned cond(p, config, condition);
    std::size_t best = pool.front();
    Nats best_cmi = -std::numeric_limits<double>::infinity();
    for (auto row : pool) {
      const Nats v = cond.observed(row);
      if (v > best_cmi) {  // strict: ties keep the lowest index
        best_cmi = v;
        best = row;
      }
    }

    ShuffleResult res;
    if (config.forward_null == ForwardNull::max_statistic) {
      Rng rng = Rng::substream(config.seed, {kForwardMaxStream, p.key_of_row[p.target_row],
                                             static_cast<std::uint64_t>(step)});
      res = cond.max_test(pool, best_cmi, rng);
    } else {
      Rng rng = pair_stream(p, config, kForwardStream, best);
      res = cond.single_test(best, rng);
    }
    out.trace.push_back({Phase::forward, p.variable_of_row[best], res.cmi, res.p_value,
                         res.accepted});
    if (!res.accepted) break;
    selected.push_back(best);
    out.parents.push_back(
        {p.variable_of_row[best], res.cmi, res.p_value, selected.size()});
  }
  return out;
}

SelectionResult run_backward(const Problem& p, const InferenceConfig& config,
                             const std::vector<ParentRecord>& parents,
                             std::vector<TraceStep> trace = {}) {
  SelectionResult out;
  out.trace = std::move(trace);
  std::vector<ParentRecord> current = parents;
  std::vector<ParentRecord> kept;
  std::vector<bool> removed(parents.size(), false);
  for (std::size_t idx = 0; idx < parents.size(); ++idx) {
    const std::size_t row = row_of_variable(p, parents[idx].source);
    std::vector<std::size_t> rest;
    for (std::size_t k = 0; k < parents.size(); ++k)
      if (k != idx && !removed[k]) rest.push_back(row_of_variable(p, parents[k].source));
    const auto condition = with_forced(p, rest);
    const Conditioned cond(p, config, condition);
    Rng rng = pair_stream(p, config, kBackwardStream, row);
    const ShuffleResult res = cond.single_test(row, rng);
    out.trace.push_back({Phase::backward, parents[idx].source, res.cmi, res.p_value,
                         res.accepted});
    if (!res.accepted) {
      removed[idx] = true;
      continue;
    }
    kept.push_back({parents[idx].source, res.cmi, res.p_value, parents[idx].order_added});
  }
  out.parents = std::move(kept);
  return out;
}

void check_counts(const CountMatrix& counts) {
  if (counts.variables() < 2) throw std::invalid_argument("inference needs at least 2 variables");
  if (counts.samples() < 3) throw std::invalid_argument("inference needs at least 3 samples");
}

}  // namespace

ShuffleResult shuffle_test(std::size_t j, std::size_t target, std::span<const std::size_t> condition,
                           const CountMatrix& counts, const InferenceConfig& config, Rng& rng) {
  config.validate();
  check_condition(j, target, condition, counts.variables(), counts.samples());
  InferenceConfig contemporaneous = config;
  contemporaneous.lag = 0;
  const Problem p = make_problem(counts, target, contemporaneous, nullptr, label_keys(counts));
  const Conditioned cond(p, contemporaneous, condition);
  return cond.single_test(j, rng);
}

SelectionResult forward_select(std::size_t target, const CountMatrix& counts,
                               const InferenceConfig& config) {
  config.validate();
  check_counts(counts);
  const Problem p = make_problem(counts, target, config, nullptr, label_keys(counts));
  return run_forward(p, config);
}

SelectionResult backward_eliminate(std::size_t target, std::span<const std::size_t> parents,
                                   const CountMatrix& counts, const InferenceConfig& config) {
  config.validate();
  check_counts(counts);
  const Problem p = make_problem(counts, target, config, nullptr, label_keys(counts));
  std::vector<ParentRecord> records;
  for (std::size_t k = 0; k < parents.size(); ++k) {
    if (parents[k] == target || parents[k] >= counts.variables())
      throw std::invalid_argument("backward elimination: bad parent id");
    records.push_back({parents[k], 0.0, 1.0, k + 1});
  }
  return run_backward(p, config, records);
}

InferenceResult infer_network(const CountMatrix& counts, const InferenceConfig& config) {
  config.validate();
  check_counts(counts);
  const std::size_t n = counts.variables();
  const auto keys = label_keys(counts);
  std::shared_ptr<const Workspace> shared;
  if (config.lag == 0) shared = contemporaneous_workspace(counts);

  std::vector<SelectionResult> per_target(n);
  parallel_for(n, config.workers, [&](std::size_t target) {
    const Problem p = make_problem(counts, target, config, shared, keys);
    SelectionResult forward = run_forward(p, config);
    per_target[target] = run_backward(p, config, forward.parents, std::move(forward.trace));
  });

  InferenceResult result;
  result.adjacency = Adjacency(n, true);
  for (std::size_t target = 0; target < n; ++target) {
    auto parents = per_target[target].parents;
    std::sort(parents.begin(), parents.end(),
              [](const ParentRecord& a, const ParentRecord& b) { return a.source < b.source; });
    for (const auto& rec : parents) {
      result.adjacency.set(rec.source, target);
      result.edges.push_back({rec.source, target, rec.cmi, rec.p_value, rec.order_added});
    }
  }
  result.per_target = std::move(per_target);
  return result;
}

}  // namespace poisnet
