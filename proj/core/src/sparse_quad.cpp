#include "mlmcuq/sparse_quad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <utility>

#include "mlmcuq/error.hpp"

namespace mlmcuq {

namespace {

// Leja sequence on the unit circle started at 1, as fractions of a full
// turn. The first 2^m points are always the 2^m-th roots of unity, so each new
// point is searched among the next dyadic roots; log-distance sums of the
// candidates are kept up to date incrementally.
class CircleLeja {
 public:
  const std::vector<double>& turns(std::size_t count) {
    while (turns_.size() < count) extend();
    return turns_;
  }

 private:
  void extend() {
    if (turns_.size() == roots_) grow();
    std::size_t best = roots_;
    for (std::size_t j = 0; j < roots_; ++j) {
      if (taken_[j]) continue;
      if (best == roots_ || score_[j] > score_[best] + 1e-9) best = j;  // ties keep the smaller angle
    }
    take(best);
  }

  void grow() {
    roots_ *= 2;
    std::vector<char> taken(roots_, 0);
    for (std::size_t j = 0; j < roots_ / 2; ++j) taken[2 * j] = taken_[j];
    taken_ = std::move(taken);
    score_.assign(roots_, 0.0);
    for (std::size_t j = 0; j < roots_; ++j)
      if (!taken_[j])
        for (double s : turns_) score_[j] += log_distance(turn(j), s);
  }

  void take(std::size_t j) {
    taken_[j] = 1;
    const double t = turn(j);
    turns_.push_back(t);
    for (std::size_t i = 0; i < roots_; ++i)
      if (!taken_[i]) score_[i] += log_distance(turn(i), t);
  }

  double turn(std::size_t j) const { return static_cast<double>(j) / static_cast<double>(roots_); }
  static double log_distance(double t, double s) {
    return std::log(2.0 * std::abs(std::sin(std::numbers::pi * (t - s))));
  }

  std::vector<double> turns_{0.0};
  std::size_t roots_ = 1;
  std::vector<char> taken_{1};
  std::vector<double> score_{0.0};
};

double legendre(std::size_t k, double x) {
  double p0 = 1.0, p1 = x;
  if (k == 0) return p0;
  for (std::size_t n = 2; n <= k; ++n) {
    const double pn = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / static_cast<double>(n);
    p0 = p1;
    p1 = pn;
  }
  return p1;
}

// Dense solve with partial pivoting; a is row-major n x n.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
    if (a[piv * n + c] == 0.0) throw Error(ErrorCode::InvalidArgument, "singular moment system");
    if (piv != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
      std::swap(b[c], b[piv]);
    }
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r * n + c] / a[c * n + c];
      if (f == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t k = r + 1; k < n; ++k) s -= a[r * n + k] * x[k];
    x[r] = s / a[r * n + r];
  }
  return x;
}

// A univariate difference whose weights all vanish (a symmetric node set is
// exact one degree beyond its size, so the next level adds nothing).
constexpr double kNullDifference = 1e-13;

ParamVector grid_point(const MultiIndex& key, const LejaRuleTable& table) {
  std::vector<double> y(key.size());
  for (std::size_t j = 0; j < key.size(); ++j) y[j] = table.node(key[j]);
  return ParamVector(std::move(y));
}

// Visits every node-index tuple with key[j] <= upper[j] in odometer order
// (last coordinate fastest).
template <typename Fn>
void for_each_grid_point(const MultiIndex& upper, Fn&& fn) {
  MultiIndex key(upper.size(), 0);
  while (true) {
    fn(key);
    std::size_t j = upper.size();
    while (j > 0) {
      --j;
      if (key[j] < upper[j]) {
        ++key[j];
        break;
      }
      key[j] = 0;
      if (j == 0) return;
    }
    if (upper.empty()) return;
  }
}

std::size_t max_entry(const MultiIndex& nu) {
  std::size_t m = 0;
  for (auto v : nu) m = std::max<std::size_t>(m, v);
  return m;
}

}  // namespace

std::vector<double> rleja_nodes(std::size_t n) {
  static std::mutex mutex;
  static CircleLeja circle;
  static std::vector<double> nodes;
  static std::size_t consumed = 0;  // circle points already projected
  const std::lock_guard<std::mutex> lock(mutex);
  while (nodes.size() < n) {
    const std::vector<double>& turns = circle.turns(consumed + 1);
    double x = std::cos(2.0 * std::numbers::pi * turns[consumed++]);
    if (std::abs(x) < 1e-14) x = 0.0;
    bool repeated = false;
    for (double v : nodes)
      if (std::abs(v - x) < 1e-10) repeated = true;
    if (!repeated) nodes.push_back(x);
  }
  return {nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::vector<double> rleja_weights(std::size_t l) {
  if (l > kMaxRuleLevel) throw Error(ErrorCode::InvalidArgument, "univariate level above the supported maximum");
  const std::size_t n = level_rule(l);
  const std::vector<double> x = rleja_nodes(n);
  std::vector<double> a(n * n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i) a[k * n + i] = legendre(k, x[i]);
  std::vector<double> moments(n, 0.0);
  moments[0] = 1.0;  // int P_k dy/2 = delta_k0
  return solve_dense(std::move(a), std::move(moments));
}

void LejaRuleTable::ensure(std::size_t level) {
  if (level < weights_.size()) return;
  if (level > kMaxRuleLevel) throw Error(ErrorCode::InvalidArgument, "univariate level above the supported maximum");
  nodes_ = rleja_nodes(level_rule(level));
  for (std::size_t l = weights_.size(); l <= level; ++l) {
    weights_.push_back(rleja_weights(l));
    double largest = 0.0;
    for (std::size_t i = 0; i <= l; ++i) largest = std::max(largest, std::abs(difference_weight(l, i)));
    null_.push_back(largest < kNullDifference);
  }
}

bool LejaRuleTable::null_index(const MultiIndex& nu) {
  ensure(max_entry(nu));
  for (auto l : nu)
    if (null_[l]) return true;
  return false;
}

double LejaRuleTable::difference_weight(std::size_t l, std::size_t i) const {
  if (i > l) return 0.0;
  double w = weights_[l][i];
  if (l > 0 && i < l) w -= weights_[l - 1][i];
  return w;
}

MultiIndexSet::MultiIndexSet(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "index set needs dim >= 1");
  members_.insert(MultiIndex(dim, 0));
  for (std::size_t j = 0; j < dim; ++j) {
    MultiIndex e(dim, 0);
    e[j] = 1;
    neighbors_.insert(std::move(e));
  }
}

bool MultiIndexSet::admissible(const MultiIndex& nu) const {
  if (nu.size() != dim_) return false;
  MultiIndex back = nu;
  for (std::size_t j = 0; j < dim_; ++j) {
    if (nu[j] == 0) continue;
    --back[j];
    const bool ok = members_.count(back) != 0;
    ++back[j];
    if (!ok) return false;
  }
  return true;
}

void MultiIndexSet::insert(const MultiIndex& nu) {
  if (contains(nu)) throw Error(ErrorCode::InvalidArgument, "index already in the set");
  if (!admissible(nu)) throw Error(ErrorCode::InvalidArgument, "index is not admissible");
  members_.insert(nu);
  neighbors_.erase(nu);
  MultiIndex fwd = nu;
  for (std::size_t j = 0; j < dim_; ++j) {
    ++fwd[j];
    if (!contains(fwd) && admissible(fwd)) neighbors_.insert(fwd);
    --fwd[j];
  }
}

bool MultiIndexSet::downward_closed() const {
  for (const MultiIndex& nu : members_)
    if (!admissible(nu)) return false;
  return true;
}

EvaluationCache::EvaluationCache(Integrand f, std::size_t dim, const WorkerPool& pool)
    : f_(std::move(f)), dim_(dim), pool_(&pool) {}

void EvaluationCache::require(const std::vector<MultiIndex>& points, LejaRuleTable& table) {
  std::vector<MultiIndex> missing;
  std::set<MultiIndex> seen;
  std::size_t top = 0;
  for (const MultiIndex& p : points) {
    if (values_.count(p) || !seen.insert(p).second) continue;
    missing.push_back(p);
    top = std::max(top, max_entry(p));
  }
  if (missing.empty()) return;
  table.ensure(top);
  std::vector<std::vector<double>> results(missing.size());
  pool_->parallel_for(missing.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) results[i] = f_(grid_point(missing[i], table));
  });
  for (std::size_t i = 0; i < missing.size(); ++i) values_.emplace(missing[i], std::move(results[i]));
}

const std::vector<double>& EvaluationCache::at(const MultiIndex& point) const {
  return values_.at(point);
}

SurplusRecord apply_difference(const MultiIndex& nu, EvaluationCache& cache, LejaRuleTable& table) {
  if (nu.size() != cache.dim()) throw Error(ErrorCode::InvalidArgument, "index dimension mismatch");
  SurplusRecord rec;
  rec.index = nu;
  if (table.null_index(nu)) {
    const MultiIndex origin(nu.size(), 0);
    cache.require({origin}, table);
    rec.contribution.assign(cache.at(origin).size(), 0.0);
    return rec;
  }
  std::vector<MultiIndex> points;
  for_each_grid_point(nu, [&](const MultiIndex& key) { points.push_back(key); });
  cache.require(points, table);

  for (const MultiIndex& key : points) {
    double w = 1.0;
    for (std::size_t j = 0; j < nu.size(); ++j) w *= table.difference_weight(nu[j], key[j]);
    const std::vector<double>& v = cache.at(key);
    if (rec.contribution.empty()) rec.contribution.assign(v.size(), 0.0);
    for (std::size_t k = 0; k < v.size(); ++k) rec.contribution[k] += w * v[k];
  }
  for (double c : rec.contribution) rec.indicator = std::max(rec.indicator, std::abs(c));
  return rec;
}

std::vector<double> tensor_quadrature(const MultiIndex& levels, EvaluationCache& cache,
                                      LejaRuleTable& table) {
  if (levels.size() != cache.dim()) throw Error(ErrorCode::InvalidArgument, "index dimension mismatch");
  table.ensure(max_entry(levels));
  std::vector<MultiIndex> points;
  for_each_grid_point(levels, [&](const MultiIndex& key) { points.push_back(key); });
  cache.require(points, table);
  std::vector<double> sum;
  for (const MultiIndex& key : points) {
    double w = 1.0;
    for (std::size_t j = 0; j < levels.size(); ++j) w *= table.weight(levels[j], key[j]);
    const std::vector<double>& v = cache.at(key);
    if (sum.empty()) sum.assign(v.size(), 0.0);
    for (std::size_t k = 0; k < v.size(); ++k) sum[k] += w * v[k];
  }
  return sum;
}

std::vector<double> combination_quadrature(const std::set<MultiIndex>& index_set,
                                           EvaluationCache& cache, LejaRuleTable& table) {
  std::vector<double> sum;
  for (const MultiIndex& nu : index_set) {
    // Only directions with nu + e_j in the set can contribute.
    std::vector<std::size_t> dirs;
    for (std::size_t j = 0; j < nu.size(); ++j) {
      MultiIndex f = nu;
      ++f[j];
      if (index_set.count(f)) dirs.push_back(j);
    }
    double c = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << dirs.size()); ++mask) {
      MultiIndex f = nu;
      int bits = 0;
      for (std::size_t b = 0; b < dirs.size(); ++b)
        if (mask & (std::size_t{1} << b)) {
          ++f[dirs[b]];
          ++bits;
        }
      if (index_set.count(f)) c += (bits % 2 == 0) ? 1.0 : -1.0;
    }
    if (c == 0.0) continue;
    const std::vector<double> q = tensor_quadrature(nu, cache, table);
    if (sum.empty()) sum.assign(q.size(), 0.0);
    for (std::size_t k = 0; k < q.size(); ++k) sum[k] += c * q[k];
  }
  return sum;
}

AdaptiveResult adaptive_integrate(const Integrand& f, std::size_t dim, const AdaptiveOptions& options,
                                  const WorkerPool& pool) {
  if (options.budget < 1) throw Error(ErrorCode::InvalidArgument, "budget must be at least 1");
  LejaRuleTable table;
  EvaluationCache cache(f, dim, pool);
  AdaptiveResult result;
  result.index_set = MultiIndexSet(dim);

  result.estimate = apply_difference(MultiIndex(dim, 0), cache, table).contribution;
  std::map<MultiIndex, SurplusRecord> pending;
  // Null indices contribute exactly zero; they are admitted on sight so that
  // the indices behind them become reachable.
  auto refresh = [&] {
    bool admitted = true;
    while (admitted) {
      admitted = false;
      const std::vector<MultiIndex> current(result.index_set.neighbors().begin(),
                                            result.index_set.neighbors().end());
      for (const MultiIndex& nu : current) {
        if (pending.count(nu) || max_entry(nu) > kMaxRuleLevel) continue;
        if (table.null_index(nu)) {
          result.index_set.insert(nu);
          admitted = true;
        } else {
          pending.emplace(nu, apply_difference(nu, cache, table));
        }
      }
    }
  };
  auto record = [&](std::size_t iteration) {
    double sum = 0.0;
    for (const auto& [nu, rec] : pending) sum += rec.indicator;
    result.trace.push_back({iteration, result.index_set.members().size(), cache.size(), sum});
    return sum;
  };
  refresh();
  double err = record(0);
  std::size_t iteration = 0;
  while (cache.size() < options.budget && err > options.tolerance && !pending.empty() &&
         result.index_set.members().size() < options.max_indices) {
    auto best = pending.begin();
    for (auto it = pending.begin(); it != pending.end(); ++it)
      if (it->second.indicator > best->second.indicator) best = it;
    const SurplusRecord& rec = best->second;
    for (std::size_t k = 0; k < result.estimate.size(); ++k) result.estimate[k] += rec.contribution[k];
    result.index_set.insert(best->first);
    pending.erase(best);
    if (options.check_closure && !result.index_set.downward_closed())
      throw Error(ErrorCode::InvalidArgument, "index set lost downward closure");
    refresh();
    err = record(++iteration);
  }
  result.evaluations = cache.size();
  return result;
}

}  // namespace mlmcuq
