#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "poisnet/adjacency.hpp"
#include "poisnet/counts.hpp"
#include "poisnet/entropy.hpp"
#include "poisnet/rng.hpp"

namespace poisnet {

enum class Estimator { poisson, gaussian };

/// Null distribution used when testing the forward-step winner.
///   max_statistic: each replicate permutes every candidate row with one
///     shared permutation and records the largest CMI, so the null accounts
///     for having picked the argmax.
///   candidate: each replicate permutes only the winning row.
enum class ForwardNull { max_statistic, candidate };

std::string to_string(Estimator e);
std::string to_string(ForwardNull f);
Estimator parse_estimator(const std::string& s);
ForwardNull parse_forward_null(const std::string& s);

struct InferenceConfig {
  Estimator estimator = Estimator::poisson;
  double alpha = 0.05;
  std::size_t n_shuffles = 200;
  int lag = 0;
  std::optional<std::size_t> max_parents;  // defaults to n - 1
  std::uint64_t seed = 0;
  ForwardNull forward_null = ForwardNull::max_statistic;
  std::size_t workers = 1;
  TruncationPolicy truncation;

  void validate() const;
};

struct ShuffleResult {
  Nats cmi = 0.0;
  double p_value = 1.0;
  bool accepted = false;
};

enum class Phase { forward, backward };

struct TraceStep {
  Phase phase = Phase::forward;
  std::size_t candidate = 0;
  Nats cmi = 0.0;
  double p_value = 1.0;
  bool accepted = false;
};

struct ParentRecord {
  std::size_t source = 0;
  Nats cmi = 0.0;
  double p_value = 1.0;
  std::size_t order_added = 0;  // 1-based position in the forward pass
};

struct SelectionResult {
  std::vector<ParentRecord> parents;
  std::vector<TraceStep> trace;

  std::vector<std::size_t> sources() const;
};

struct EdgeRecord {
  std::size_t source = 0;
  std::size_t target = 0;
  Nats cmi = 0.0;
  double p_value = 1.0;
  std::size_t order_added = 0;
};

/// adjacency(j, i) set means j was selected as a parent of target i.
struct InferenceResult {
  Adjacency adjacency;
  std::vector<EdgeRecord> edges;            // sorted by (target, source)
  std::vector<SelectionResult> per_target;  // indexed by target
};

/// Permutation test of CMI(X_j; X_target | X_S): the null permutes row j.
/// p = (1 + #{null >= observed}) / (1 + n_shuffles); accepted iff p <= alpha.
ShuffleResult shuffle_test(std::size_t j, std::size_t target, std::span<const std::size_t> condition,
                           const CountMatrix& counts, const InferenceConfig& config, Rng& rng);

/// Greedy aggregation of parents for one target, highest CMI first.
SelectionResult forward_select(std::size_t target, const CountMatrix& counts,
                               const InferenceConfig& config);

/// One pass over `parents` in the order given, dropping each parent
/// whose CMI given the remaining parents is not significant.
SelectionResult backward_eliminate(std::size_t target, std::span<const std::size_t> parents,
                                   const CountMatrix& counts, const InferenceConfig& config);

/// Forward selection then backward elimination for every target.
InferenceResult infer_network(const CountMatrix& counts, const InferenceConfig& config);

}  // namespace poisnet
