#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "mlmcuq/error.hpp"

namespace mlmcuq::experiments {

using nlohmann::json;

namespace {

// Walks one JSON object, remembering which keys were read so that leftovers
// can be reported as unknown.
class Block {
 public:
  Block(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(label(), "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_.contains(key);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number()) throw ConfigError(field(key), "expected a number, got " + type_of(v));
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(field(key), "expected a finite number");
    return x;
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer, got " + type_of(v));
    return v.get<std::int64_t>();
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) throw ConfigError(field(key), "expected a nonnegative integer");
    throw ConfigError(field(key), "expected an integer, got " + type_of(v));
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_boolean()) throw ConfigError(field(key), "expected true or false, got " + type_of(v));
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_string()) throw ConfigError(field(key), "expected a string, got " + type_of(v));
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    if (!has(key)) return fallback;
    return number_list(node_.at(key), field(key));
  }

  const json* child(const std::string& key) {
    if (!has(key)) return nullptr;
    return &node_.at(key);
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
  }

  static std::vector<double> number_list(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where, "expected an array of numbers, got " + type_of(v));
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number())
        throw ConfigError(where + "[" + std::to_string(i) + "]", "expected a number, got " + type_of(v[i]));
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  static std::string type_of(const json& v) { return v.type_name(); }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& where, const std::string& what) {
  if (!ok) throw ConfigError(where, what);
}

SequenceConfig read_sequence(const json& v, const std::string& where) {
  SequenceConfig s;
  if (v.is_array()) {
    s.values = Block::number_list(v, where);
    require(!s.values.empty(), where, "needs at least one coefficient");
    return s;
  }
  Block b(v, where);
  s.scale = b.number("scale", s.scale);
  s.decay_inv_p = b.number("decay_inv_p", s.decay_inv_p);
  s.pairs = static_cast<int>(b.integer("pairs", s.pairs));
  b.finish();
  require(s.scale > 0.0, b.field("scale"), "must be positive");
  require(s.decay_inv_p > 0.0, b.field("decay_inv_p"), "must be positive");
  require(s.pairs >= 1 && s.pairs <= 512, b.field("pairs"), "must lie in [1, 512]");
  return s;
}

Model1DConfig read_model1d(const json& v) {
  Model1DConfig m;
  Block b(v, "model1d");
  m.alpha_left = b.number("alpha_left", m.alpha_left);
  m.alpha_right = b.number("alpha_right", m.alpha_right);
  m.kappa2 = b.number("kappa2", m.kappa2);
  m.xi0 = b.number("xi0", m.xi0);
  if (const json* s = b.child("betas")) m.betas = read_sequence(*s, "model1d.betas");
  m.points = b.numbers("points", m.points);
  m.h0 = b.number("h0", m.h0);
  m.margin = b.number("margin", m.margin);
  m.tau = b.number("tau", m.tau);
  b.finish();
  require(m.alpha_left > 0.0, "model1d.alpha_left", "must be positive");
  require(m.alpha_right > 0.0, "model1d.alpha_right", "must be positive");
  require(m.kappa2 >= 0.0, "model1d.kappa2", "must be nonnegative");
  require(m.xi0 > 0.0 && m.xi0 < 1.0, "model1d.xi0", "must lie in (0, 1)");
  require(!m.points.empty(), "model1d.points", "needs at least one point");
  for (double x : m.points) require(x > 0.0 && x < 1.0, "model1d.points", "points must lie in (0, 1)");
  require(m.h0 > 0.0 && m.h0 <= 0.5, "model1d.h0", "must lie in (0, 1/2]");
  const double cells = 1.0 / m.h0;
  require(std::abs(cells - std::round(cells)) < 1e-9, "model1d.h0", "1/h0 must be an integer");
  require(m.margin > 0.0 && m.margin < 0.5, "model1d.margin", "must lie in (0, 1/2)");
  require(m.tau > 0.0 && m.tau < 1.0, "model1d.tau", "must lie in (0, 1)");
  try {
    m.problem().validate();
  } catch (const Error& e) {
    throw ConfigError("model1d", e.what());
  }
  return m;
}

EstimatorConfig read_estimators(const json& v) {
  EstimatorConfig e;
  Block b(v, "estimators");
  e.epsilon = b.number("epsilon", e.epsilon);
  e.max_level = static_cast<int>(b.integer("max_level", e.max_level));
  e.pilot_samples = b.unsigned_integer("pilot_samples", e.pilot_samples);
  const std::uint64_t reps = b.unsigned_integer("repetitions", e.repetitions);
  if (b.has("seed")) e.seed = b.unsigned_integer("seed", 0);
  if (const json* w = b.child("work_model")) {
    Block wb(*w, "estimators.work_model");
    e.per_dof = wb.boolean("per_dof", e.per_dof);
    e.j_factor = wb.boolean("J_factor", e.j_factor);
    wb.finish();
  }
  if (const json* s = b.child("epsilon_sweep")) {
    Block sb(*s, "estimators.epsilon_sweep");
    EpsilonSweep sweep;
    sweep.max = sb.number("max", sweep.max);
    sweep.min = sb.number("min", sweep.min);
    sweep.count = static_cast<int>(sb.integer("count", sweep.count));
    sb.finish();
    require(sweep.min > 0.0 && sweep.max >= sweep.min, "estimators.epsilon_sweep", "needs 0 < min <= max");
    require(sweep.count >= 1 && sweep.count <= 64, "estimators.epsilon_sweep.count", "must lie in [1, 64]");
    require(sweep.count == 1 || sweep.max > sweep.min, "estimators.epsilon_sweep", "count > 1 needs max > min");
    e.epsilon_sweep = sweep;
  }
  b.finish();
  require(e.epsilon > 0.0, "estimators.epsilon", "must be positive");
  require(e.max_level >= 1 && e.max_level <= 16, "estimators.max_level", "must lie in [1, 16]");
  require(e.pilot_samples >= 2, "estimators.pilot_samples", "must be at least 2");
  require(reps >= 2 && reps <= 10000, "estimators.repetitions", "must lie in [2, 10000]");
  e.repetitions = static_cast<std::uint32_t>(reps);
  return e;
}

SparseQuadConfig read_sparse_quad(const json& v) {
  SparseQuadConfig q;
  Block b(v, "sparse_quad");
  q.qoi = b.string("qoi", q.qoi);
  require(q.qoi == "model1d-exact" || q.qoi == "model1d-fem" || q.qoi == "mie", b.field("qoi"),
          "must be one of model1d-exact, model1d-fem, mie");
  if (const json* p = b.child("points")) {
    require(q.qoi != "mie", b.field("points"), "the mie Q.o.I. takes its points from the mie block");
    require(p->is_array() && !p->empty(), b.field("points"), "expected a nonempty array");
    q.point_sets.clear();
    if ((*p)[0].is_array()) {
      for (std::size_t i = 0; i < p->size(); ++i)
        q.point_sets.push_back(Block::number_list((*p)[i], b.field("points") + "[" + std::to_string(i) + "]"));
    } else {
      q.point_sets.push_back(Block::number_list(*p, b.field("points")));
    }
  }
  q.J = b.unsigned_integer("J", q.J);
  q.budget = b.unsigned_integer("budget", q.budget);
  q.tolerance = b.number("tolerance", q.tolerance);
  q.fem_level = static_cast<int>(b.integer("fem_level", q.fem_level));
  b.finish();
  for (const auto& set : q.point_sets) {
    require(!set.empty(), "sparse_quad.points", "point sets must be nonempty");
    for (double x : set) require(x > 0.0 && x < 1.0, "sparse_quad.points", "points must lie in (0, 1)");
  }
  require(q.J >= 1 && q.J <= 256, "sparse_quad.J", "must lie in [1, 256]");
  require(q.budget >= 1, "sparse_quad.budget", "must be at least 1");
  require(q.tolerance >= 0.0, "sparse_quad.tolerance", "must be nonnegative");
  require(q.fem_level >= 0 && q.fem_level <= 16, "sparse_quad.fem_level", "must lie in [0, 16]");
  return q;
}

Point2 read_point2(const json& v, const std::string& where) {
  const std::vector<double> xy = Block::number_list(v, where);
  require(xy.size() == 2, where, "expected [x, y]");
  return {xy[0], xy[1]};
}

MieConfig read_mie(const json& v) {
  MieConfig m;
  Block b(v, "mie");
  m.r0 = b.number("r0", m.r0);
  m.kappa1 = b.number("kappa1", m.kappa1);
  m.kappa2 = b.number("kappa2", m.kappa2);
  m.alpha2 = b.number("alpha2", m.alpha2);
  m.c = b.number("c", m.c);
  if (const json* p = b.child("points")) {
    require(p->is_array() && !p->empty(), b.field("points"), "expected a nonempty array of [x, y]");
    m.points.clear();
    for (std::size_t i = 0; i < p->size(); ++i)
      m.points.push_back(read_point2((*p)[i], b.field("points") + "[" + std::to_string(i) + "]"));
  }
  m.samples = b.unsigned_integer("samples", m.samples);
  b.finish();
  require(m.samples >= 3 && m.samples <= 100000, "mie.samples", "must lie in [3, 100000]");
  for (const Point2& p : m.points) require(p.norm() > 0.0, "mie.points", "points must differ from the origin");
  try {
    m.family().validate();
  } catch (const Error& e) {
    throw ConfigError("mie", e.what());
  }
  return m;
}

KinkConfig read_kink(const json& v) {
  KinkConfig k;
  Block b(v, "kink");
  k.points = b.numbers("points", k.points);
  k.samples = b.unsigned_integer("samples", k.samples);
  k.xi_min = b.number("xi_min", k.xi_min);
  k.xi_max = b.number("xi_max", k.xi_max);
  b.finish();
  require(!k.points.empty(), "kink.points", "needs at least one point");
  for (double x : k.points) require(x > 0.0 && x < 1.0, "kink.points", "points must lie in (0, 1)");
  require(k.samples >= 3 && k.samples <= 1000000, "kink.samples", "must lie in [3, 1e6]");
  require(0.0 < k.xi_min && k.xi_min < k.xi_max && k.xi_max < 1.0, "kink", "needs 0 < xi_min < xi_max < 1");
  return k;
}

FemRatesConfig read_fem_rates(const json& v) {
  FemRatesConfig f;
  Block b(v, "fem_rates");
  f.max_level = static_cast<int>(b.integer("max_level", f.max_level));
  f.draws = b.unsigned_integer("draws", f.draws);
  f.points = b.numbers("points", f.points);
  b.finish();
  require(f.max_level >= 2 && f.max_level <= 14, "fem_rates.max_level", "must lie in [2, 14]");
  require(f.draws >= 1, "fem_rates.draws", "must be at least 1");
  require(!f.points.empty(), "fem_rates.points", "needs at least one point");
  for (double x : f.points) require(x > 0.0 && x < 1.0, "fem_rates.points", "points must lie in (0, 1)");
  return f;
}

AllocationConfig read_allocation(const json& v) {
  AllocationConfig a;
  Block b(v, "allocation");
  a.dofs = b.numbers("dofs", a.dofs);
  a.epsilons = b.numbers("epsilons", a.epsilons);
  a.J = b.number("J", a.J);
  a.space_dim = static_cast<int>(b.integer("space_dim", a.space_dim));
  a.t = b.number("t", a.t);
  a.log_power = b.number("log_power", a.log_power);
  b.finish();
  require(!a.dofs.empty(), "allocation.dofs", "needs at least one level");
  for (double n : a.dofs) require(n > 1.0, "allocation.dofs", "dof counts must exceed 1");
  require(a.epsilons.empty() || a.epsilons.size() == a.dofs.size(), "allocation.epsilons",
          "needs one tolerance per level");
  for (double e : a.epsilons) require(e > 0.0, "allocation.epsilons", "tolerances must be positive");
  require(a.J > 0.0, "allocation.J", "must be positive");
  require(a.space_dim >= 1 && a.space_dim <= 3, "allocation.space_dim", "must lie in [1, 3]");
  require(a.t > 0.0, "allocation.t", "must be positive");
  require(a.log_power >= 0.0, "allocation.log_power", "must be nonnegative");
  return a;
}

json sequence_json(const SequenceConfig& s) {
  if (!s.values.empty()) return s.values;
  return {{"scale", s.scale}, {"decay_inv_p", s.decay_inv_p}, {"pairs", s.pairs}};
}

}  // namespace

std::vector<double> SequenceConfig::betas() const {
  if (!values.empty()) return values;
  return CoefficientSequence::paired_power_law(scale, decay_inv_p, pairs, 1.0).betas;
}

Transmission1D Model1DConfig::problem() const {
  Transmission1D p;
  p.alpha_left = alpha_left;
  p.alpha_right = alpha_right;
  p.kappa2_left = kappa2;
  p.kappa2_right = kappa2;
  p.interface_base = xi0;
  p.interface_betas = betas.betas();
  p.margin = margin;
  p.tau = tau;
  p.h0 = h0;
  return p;
}

std::vector<double> EpsilonSweep::values() const {
  std::vector<double> out;
  if (count == 1) return {max};
  const double step = std::log(min / max) / (count - 1);
  for (int k = 0; k < count; ++k) out.push_back(k + 1 == count ? min : max * std::exp(step * k));
  return out;
}

MieFamily MieConfig::family() const {
  MieFamily f;
  f.r0 = r0;
  f.kappa1 = kappa1;
  f.kappa2 = kappa2;
  f.alpha2 = alpha2;
  f.c = c;
  return f;
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line/column pair.
    const std::size_t at = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + at, '\n'));
    const std::size_t last_nl = text.rfind('\n', at == 0 ? 0 : at - 1);
    const std::size_t column = last_nl == std::string::npos ? at + 1 : at - last_nl;
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(column),
                      "invalid JSON");
  }

  ExperimentConfig c;
  Block b(root, "");
  require(b.has("experiment"), "experiment", "missing required key");
  c.experiment = b.string("experiment", "");
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), c.experiment) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError("experiment", "unknown experiment '" + c.experiment + "' (expected one of " + list + ")");
  }
  c.seed = b.unsigned_integer("seed", c.seed);
  c.output_dir = b.string("output_dir", c.output_dir);
  require(!c.output_dir.empty(), "output_dir", "must not be empty");
  if (const json* v = b.child("model1d")) c.model1d = read_model1d(*v);
  if (const json* v = b.child("estimators")) c.estimators = read_estimators(*v);
  if (const json* v = b.child("sparse_quad")) c.sparse_quad = read_sparse_quad(*v);
  if (const json* v = b.child("mie")) c.mie = read_mie(*v);
  if (const json* v = b.child("kink")) c.kink = read_kink(*v);
  if (const json* v = b.child("fem_rates")) c.fem_rates = read_fem_rates(*v);
  if (const json* v = b.child("allocation")) c.allocation = read_allocation(*v);
  b.finish();

  if (c.experiment == "mlmc-error-work")
    require(c.estimators.epsilons().size() >= 2, "estimators.epsilon_sweep",
            "mlmc-error-work needs a sweep with at least two tolerances");
  const std::size_t dim = c.model1d.problem().dim();
  if (c.experiment == "smolyak-degradation" && c.sparse_quad.qoi != "mie")
    require(c.sparse_quad.J == dim, "sparse_quad.J",
            "must equal the number of model1d coefficients (" + std::to_string(dim) + ")");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

json to_json(const ExperimentConfig& c) {
  json est = {{"epsilon", c.estimators.epsilon},
              {"max_level", c.estimators.max_level},
              {"pilot_samples", c.estimators.pilot_samples},
              {"repetitions", c.estimators.repetitions},
              {"seed", c.estimator_seed()},
              {"work_model", {{"per_dof", c.estimators.per_dof}, {"J_factor", c.estimators.j_factor}}}};
  if (const auto& s = c.estimators.epsilon_sweep)
    est["epsilon_sweep"] = {{"max", s->max}, {"min", s->min}, {"count", s->count}};
  json mie_points = json::array();
  for (const Point2& p : c.mie.points) mie_points.push_back({p.x, p.y});
  json sq = {{"qoi", c.sparse_quad.qoi},
             {"J", c.sparse_quad.J},
             {"budget", c.sparse_quad.budget},
             {"tolerance", c.sparse_quad.tolerance},
             {"fem_level", c.sparse_quad.fem_level}};
  if (c.sparse_quad.qoi != "mie") sq["points"] = c.sparse_quad.point_sets;
  return {
      {"experiment", c.experiment},
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"model1d",
       {{"alpha_left", c.model1d.alpha_left},
        {"alpha_right", c.model1d.alpha_right},
        {"kappa2", c.model1d.kappa2},
        {"xi0", c.model1d.xi0},
        {"betas", sequence_json(c.model1d.betas)},
        {"points", c.model1d.points},
        {"h0", c.model1d.h0},
        {"margin", c.model1d.margin},
        {"tau", c.model1d.tau}}},
      {"estimators", est},
      {"sparse_quad", sq},
      {"mie",
       {{"r0", c.mie.r0},
        {"kappa1", c.mie.kappa1},
        {"kappa2", c.mie.kappa2},
        {"alpha2", c.mie.alpha2},
        {"c", c.mie.c},
        {"points", mie_points},
        {"samples", c.mie.samples}}},
      {"kink",
       {{"points", c.kink.points},
        {"samples", c.kink.samples},
        {"xi_min", c.kink.xi_min},
        {"xi_max", c.kink.xi_max}}},
      {"fem_rates",
       {{"max_level", c.fem_rates.max_level}, {"draws", c.fem_rates.draws}, {"points", c.fem_rates.points}}},
      {"allocation",
       {{"dofs", c.allocation.dofs},
        {"epsilons", c.allocation.epsilons},
        {"J", c.allocation.J},
        {"space_dim", c.allocation.space_dim},
        {"t", c.allocation.t},
        {"log_power", c.allocation.log_power}}},
  };
}

}  // namespace mlmcuq::experiments
