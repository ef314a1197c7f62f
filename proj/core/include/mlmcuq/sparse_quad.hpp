#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "mlmcuq/param_space.hpp"
#include "mlmcuq/parallel.hpp"

namespace mlmcuq {

using MultiIndex = std::vector<std::uint32_t>;

/// First n points of the real-projected Leja sequence on the unit circle
/// (start 1, ties to the smallest angle, repeated projections skipped).
std::vector<double> rleja_nodes(std::size_t n);

/// Number of nodes of the univariate rule at level l.
constexpr std::size_t level_rule(std::size_t l) noexcept { return l + 1; }

/// Highest univariate level with tabulated weights.
inline constexpr std::size_t kMaxRuleLevel = 127;

/// Interpolatory weights on rleja_nodes(level_rule(l)) for the probability
/// measure dy/2 on [-1, 1].
std::vector<double> rleja_weights(std::size_t l);

/// Nodes and weights of every level up to the largest one requested so far.
class LejaRuleTable {
 public:
  void ensure(std::size_t level);
  double node(std::size_t i) const { return nodes_[i]; }
  /// Weight of node i in I_l - I_{l-1} (I_{-1} = 0); zero for i > l.
  double difference_weight(std::size_t l, std::size_t i) const;
  double weight(std::size_t l, std::size_t i) const { return weights_[l][i]; }
  std::size_t levels() const noexcept { return weights_.size(); }
  /// True if some coordinate of nu has an identically vanishing difference
  /// rule, so Delta_nu is the zero functional.
  bool null_index(const MultiIndex& nu);

 private:
  std::vector<double> nodes_;
  std::vector<std::vector<double>> weights_;
  std::vector<bool> null_;
};

/// Downward-closed index set together with its admissible forward neighbors.
class MultiIndexSet {
 public:
  explicit MultiIndexSet(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  const std::set<MultiIndex>& members() const noexcept { return members_; }
  const std::set<MultiIndex>& neighbors() const noexcept { return neighbors_; }
  bool contains(const MultiIndex& nu) const { return members_.count(nu) != 0; }
  /// Every backward neighbor nu - e_j (nu_j > 0) is a member.
  bool admissible(const MultiIndex& nu) const;
  /// Adds an admissible index and refreshes the neighbor set. Throws
  /// InvalidArgument for inadmissible or duplicate indices.
  void insert(const MultiIndex& nu);
  bool downward_closed() const;

 private:
  std::size_t dim_;
  std::set<MultiIndex> members_;
  std::set<MultiIndex> neighbors_;
};

/// Vector-valued integrand on the parameter cube.
using Integrand = std::function<std::vector<double>(const ParamVector&)>;

/// Integrand values keyed by grid point (one node index per coordinate), so
/// every point is evaluated once.
class EvaluationCache {
 public:
  EvaluationCache(Integrand f, std::size_t dim, const WorkerPool& pool = WorkerPool::serial());

  /// Values at the given points, evaluating missing ones (concurrently across
  /// the pool, inserted in request order).
  void require(const std::vector<MultiIndex>& points, LejaRuleTable& table);
  const std::vector<double>& at(const MultiIndex& point) const;
  std::size_t size() const noexcept { return values_.size(); }
  std::size_t dim() const noexcept { return dim_; }

 private:
  Integrand f_;
  std::size_t dim_;
  const WorkerPool* pool_;
  std::map<MultiIndex, std::vector<double>> values_;
};

struct SurplusRecord {
  MultiIndex index;
  std::vector<double> contribution;
  double indicator = 0.0;
};

/// Applies the tensorized difference operator Delta_nu to the cached integrand.
SurplusRecord apply_difference(const MultiIndex& nu, EvaluationCache& cache, LejaRuleTable& table);

/// Full tensor rule I_{l_1} x ... x I_{l_J}.
std::vector<double> tensor_quadrature(const MultiIndex& levels, EvaluationCache& cache,
                                      LejaRuleTable& table);

/// Smolyak rule of a downward-closed set by the combination formula.
std::vector<double> combination_quadrature(const std::set<MultiIndex>& index_set,
                                           EvaluationCache& cache, LejaRuleTable& table);

struct TraceEntry {
  std::size_t iteration = 0;
  std::size_t cardinality = 0;
  std::size_t evaluations = 0;
  double estimated_error = 0.0;
};

struct AdaptiveResult {
  std::vector<double> estimate;
  std::vector<TraceEntry> trace;
  std::size_t evaluations = 0;
  MultiIndexSet index_set{1};
};

struct AdaptiveOptions {
  std::size_t budget = 1000;
  double tolerance = 0.0;
  /// Hard cap on the number of accepted indices.
  std::size_t max_indices = std::size_t(-1);
  /// Verify downward closure after every acceptance (slow, for tests).
  bool check_closure = false;
};

/// Greedy adaptive Smolyak quadrature with the estimated-error trace
/// sum_{nu in N(Lambda)} |Delta_nu|_inf recorded after every step. Neighbors
/// whose difference operator is identically zero are admitted immediately;
/// neighbors above kMaxRuleLevel in some coordinate are never considered.
AdaptiveResult adaptive_integrate(const Integrand& f, std::size_t dim, const AdaptiveOptions& options,
                                  const WorkerPool& pool = WorkerPool::serial());

}  // namespace mlmcuq
