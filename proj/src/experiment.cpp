#include "sclab/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "sclab/parallel.hpp"
#include "sclab/report.hpp"

namespace sclab {

namespace {

using json = nlohmann::json;

constexpr bool registry_complete() {
  for (std::size_t i = 0; i < kSuites.size(); ++i) {
    if (static_cast<std::size_t>(kSuites[i].id) != i) return false;
    if (kSuites[i].name.empty() || kSuites[i].anchor.empty()) return false;
  }
  return true;
}
static_assert(registry_complete(), "suite registry out of sync with Suite");

[[noreturn]] void field_error(const std::string& field, const YAML::Node& n, const std::string& msg) {
  std::ostringstream os;
  os << field << ": " << msg;
  if (n && n.Mark().line >= 0) os << " (line " << n.Mark().line + 1 << ")";
  throw ConfigError(os.str());
}

template <class T>
T as(const YAML::Node& n, const std::string& field) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    field_error(field, n, "wrong type");
  }
}

double positive(const YAML::Node& n, const std::string& field) {
  const double v = as<double>(n, field);
  if (!(v > 0.0) || !std::isfinite(v)) field_error(field, n, "must be positive");
  return v;
}

Vec as_vec(const YAML::Node& n, const std::string& field) {
  if (n.IsScalar()) return Vec::Constant(1, as<double>(n, field));
  if (!n.IsSequence()) field_error(field, n, "expected a number or a list of numbers");
  Vec v(static_cast<long>(n.size()));
  for (std::size_t i = 0; i < n.size(); ++i) v(static_cast<long>(i)) = as<double>(n[i], field);
  return v;
}

std::vector<double> gamma_list(const YAML::Node& n) {
  std::vector<double> g;
  if (n.IsSequence()) {
    for (std::size_t i = 0; i < n.size(); ++i) g.push_back(positive(n[i], "gamma[" + std::to_string(i) + "]"));
  } else if (n.IsScalar()) {
    g.push_back(positive(n, "gamma"));
  } else if (n.IsMap()) {
    for (auto kv : n) {
      const std::string k = kv.first.as<std::string>();
      if (k != "from" && k != "to" && k != "factor") field_error("gamma." + k, kv.first, "unknown key");
    }
    if (!n["from"] || !n["to"]) field_error("gamma", n, "range needs 'from' and 'to'");
    const double from = positive(n["from"], "gamma.from"), to = positive(n["to"], "gamma.to");
    const double factor = n["factor"] ? positive(n["factor"], "gamma.factor") : 2.0;
    if (factor <= 1.0) field_error("gamma.factor", n["factor"], "must exceed 1");
    if (to < from) field_error("gamma.to", n["to"], "must be >= gamma.from");
    for (double x = from; x <= to * (1 + 1e-12); x *= factor) g.push_back(x);
  } else {
    field_error("gamma", n, "expected a number, a list, or {from, to, factor}");
  }
  if (g.empty()) field_error("gamma", n, "empty list");
  return g;
}

void check_keys(const YAML::Node& n, const std::string& prefix, const std::set<std::string>& allowed) {
  for (auto kv : n) {
    const std::string k = kv.first.as<std::string>();
    if (!allowed.count(k)) field_error(prefix + k, kv.first, "unknown key");
  }
}

void read_policy(const YAML::Node& n, GridPolicy& p) {
  check_keys(n, "grid.",
             {"sigma_multiple", "dikin_multiple", "points_per_sigma", "min_points", "max_points_per_axis",
              "max_nodes", "box_scale", "slack"});
  if (n["sigma_multiple"]) p.sigma_multiple = positive(n["sigma_multiple"], "grid.sigma_multiple");
  if (n["dikin_multiple"]) p.dikin_multiple = positive(n["dikin_multiple"], "grid.dikin_multiple");
  if (n["points_per_sigma"]) p.points_per_sigma = positive(n["points_per_sigma"], "grid.points_per_sigma");
  if (n["min_points"]) p.min_points = static_cast<int>(positive(n["min_points"], "grid.min_points"));
  if (n["max_points_per_axis"])
    p.max_points_per_axis = static_cast<int>(positive(n["max_points_per_axis"], "grid.max_points_per_axis"));
  if (n["max_nodes"]) p.max_nodes = static_cast<long>(positive(n["max_nodes"], "grid.max_nodes"));
  if (n["box_scale"]) p.box_scale = positive(n["box_scale"], "grid.box_scale");
  if (n["slack"]) p.slack = positive(n["slack"], "grid.slack");
}

void read_knobs(const YAML::Node& n, Knobs& k) {
  check_keys(n, "knobs.",
             {"kappa", "c0", "degeneracy_tol", "kinetic_scale", "tol", "sc_ratio_limit", "path_constant",
              "overlap_min", "ims_decay_min"});
  if (n["kappa"]) k.kappa = positive(n["kappa"], "knobs.kappa");
  if (n["c0"]) k.c0 = positive(n["c0"], "knobs.c0");
  if (n["degeneracy_tol"]) k.degeneracy_rel = positive(n["degeneracy_tol"], "knobs.degeneracy_tol");
  if (n["kinetic_scale"]) k.kinetic_scale = positive(n["kinetic_scale"], "knobs.kinetic_scale");
  if (n["tol"]) k.tol = positive(n["tol"], "knobs.tol");
  if (n["sc_ratio_limit"]) k.sc_ratio_limit = positive(n["sc_ratio_limit"], "knobs.sc_ratio_limit");
  if (n["path_constant"]) k.path_constant = positive(n["path_constant"], "knobs.path_constant");
  if (n["overlap_min"]) k.overlap_min = positive(n["overlap_min"], "knobs.overlap_min");
  if (n["ims_decay_min"]) k.ims_decay_min = positive(n["ims_decay_min"], "knobs.ims_decay_min");
}

// Exact minimizer of c^T x over an interval or box.
std::optional<Vec> box_argmin(const Barrier& b, const Vec& c) {
  if ((b.name != "interval" && b.name != "box") || !b.bounds) return std::nullopt;
  Vec x(b.dim);
  for (int i = 0; i < b.dim; ++i) x(i) = c(i) >= 0 ? b.bounds->first(i) : b.bounds->second(i);
  return x;
}

json to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Sequence: {
      json a = json::array();
      for (const auto& e : n) a.push_back(to_json(e));
      return a;
    }
    case YAML::NodeType::Map: {
      json o = json::object();
      for (const auto& kv : n) o[kv.first.as<std::string>()] = to_json(kv.second);
      return o;
    }
    case YAML::NodeType::Scalar: {
      const std::string s = n.as<std::string>();
      try {
        std::size_t pos = 0;
        const double d = std::stod(s, &pos);
        if (pos == s.size()) return d;
      } catch (...) {
      }
      return s;
    }
    default:
      return nullptr;
  }
}

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

double num(double v) { return std::isfinite(v) ? v : (v > 0 ? 1e308 : -1e308); }

}  // namespace

std::optional<Suite> parse_suite(std::string_view name) {
  for (const auto& s : kSuites)
    if (s.name == name) return s.id;
  return std::nullopt;
}

ExperimentSpec parse_spec(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    std::ostringstream os;
    os << "parse error at line " << e.mark.line + 1 << ", column " << e.mark.column + 1 << ": " << e.msg;
    throw ConfigError(os.str());
  }
  if (!root.IsMap()) throw ConfigError("spec: expected a mapping at the top level");
  check_keys(root, "",
             {"name", "suite", "barrier", "objective", "mode", "eta", "gamma", "grid", "knobs", "out", "seed",
              "workers", "sc_check", "path", "anneal", "projector"});
  ExperimentSpec s;
  s.name = root["name"] ? as<std::string>(root["name"], "name") : "experiment";
  if (!root["suite"]) throw ConfigError("suite: missing");
  {
    const std::string name = as<std::string>(root["suite"], "suite");
    const auto id = parse_suite(name);
    if (!id) field_error("suite", root["suite"], "unknown suite '" + name + "'");
    s.suite = *id;
  }
  if (root["mode"]) {
    try {
      s.mode = parse_mode(as<std::string>(root["mode"], "mode"));
    } catch (const ConfigError& e) {
      field_error("mode", root["mode"], e.what());
    }
  }
  if (s.suite != Suite::Projector) {
    if (!root["barrier"]) throw ConfigError("barrier: missing");
    s.barrier = barrier_from_config(root["barrier"]);
    YAML::Emitter em;
    em << YAML::Flow << root["barrier"];
    s.barrier_yaml = em.c_str();
    s.c = root["objective"] ? as_vec(root["objective"], "objective") : Vec::Zero(s.barrier.dim);
    if (s.c.size() != s.barrier.dim) field_error("objective", root["objective"], "length must match the barrier dimension");
  }
  if (root["eta"]) s.eta = positive(root["eta"], "eta");
  if (root["gamma"]) {
    s.gammas = gamma_list(root["gamma"]);
  } else if (s.suite != Suite::ScCheck && s.suite != Suite::Projector) {
    throw ConfigError("gamma: missing");
  }
  if (root["grid"]) read_policy(root["grid"], s.policy);
  if (root["knobs"]) read_knobs(root["knobs"], s.knobs);
  if (root["out"]) s.out_dir = as<std::string>(root["out"], "out");
  if (root["seed"]) s.seed = as<std::uint64_t>(root["seed"], "seed");
  if (root["workers"]) s.workers = static_cast<int>(positive(root["workers"], "workers"));

  if (const YAML::Node n = root["sc_check"]) {
    check_keys(n, "sc_check.", {"samples", "box"});
    if (n["samples"]) s.samples = static_cast<int>(positive(n["samples"], "sc_check.samples"));
    if (n["box"]) {
      const YAML::Node bx = n["box"];
      if (!bx["lo"] || !bx["hi"]) field_error("sc_check.box", bx, "needs lo and hi");
      s.sample_box = std::make_pair(as_vec(bx["lo"], "sc_check.box.lo"), as_vec(bx["hi"], "sc_check.box.hi"));
    }
  }
  bool eps_set = false;
  auto read_path_like = [&](const YAML::Node& n, const std::string& pre) {
    if (n["eps"]) {
      eps_set = true;
      s.eps = positive(n["eps"], pre + "eps");
      if (s.eps >= 1.0) field_error(pre + "eps", n["eps"], "must lie in (0, 1)");
    }
    if (n["optimum"]) s.optimum = as<double>(n["optimum"], pre + "optimum");
    if (n["argmin"]) s.argmin = as_vec(n["argmin"], pre + "argmin");
  };
  if (const YAML::Node n = root["path"]) {
    check_keys(n, "path.", {"eps", "deltas", "optimum"});
    read_path_like(n, "path.");
    if (n["deltas"]) {
      s.deltas.clear();
      for (std::size_t i = 0; i < n["deltas"].size(); ++i)
        s.deltas.push_back(positive(n["deltas"][i], "path.deltas[" + std::to_string(i) + "]"));
    }
  }
  if (const YAML::Node n = root["anneal"]) {
    check_keys(n, "anneal.", {"eps", "argmin", "run_mode", "emulated_points"});
    read_path_like(n, "anneal.");
    if (n["run_mode"]) {
      const std::string m = as<std::string>(n["run_mode"], "anneal.run_mode");
      if (m == "ideal") s.anneal_mode = AnnealMode::Ideal;
      else if (m == "emulated") s.anneal_mode = AnnealMode::Emulated;
      else field_error("anneal.run_mode", n["run_mode"], "expected 'ideal' or 'emulated'");
    }
    if (n["emulated_points"])
      s.emulated_points = static_cast<int>(positive(n["emulated_points"], "anneal.emulated_points"));
  }
  if (const YAML::Node n = root["projector"]) {
    check_keys(n, "projector.", {"dim", "t", "quad_nodes", "energy_error"});
    if (n["dim"]) s.projector_dim = static_cast<int>(positive(n["dim"], "projector.dim"));
    if (n["t"]) s.projector_t = positive(n["t"], "projector.t");
    if (n["quad_nodes"]) s.quad_nodes = static_cast<int>(positive(n["quad_nodes"], "projector.quad_nodes"));
    if (n["energy_error"]) s.energy_error = as<double>(n["energy_error"], "projector.energy_error");
  }
  if (s.suite == Suite::Anneal && !eps_set) s.eps = 0.05;
  if (s.suite == Suite::Path || s.suite == Suite::Anneal) {
    if (!std::isfinite(s.barrier.theta)) throw ConfigError("barrier: path suites need a finite barrier parameter");
    if (s.c.norm() == 0.0) throw ConfigError("objective: path suites need a nonzero objective");
  }
  return s;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read spec file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str());
}

DiscreteOperator spec_operator(const ExperimentSpec& spec, double gamma) {
  const auto [z, A] = potential_minimizer(spec.barrier, spec.c, spec.eta);
  const Grid grid = policy_grid(spec.barrier, z, A, gamma, spec.mode, spec.policy);
  OperatorOptions oo;
  oo.kinetic_scale = spec.knobs.kinetic_scale;
  return build_operator(spec.mode, spec.barrier, spec.c, spec.eta, grid, gamma, oo);
}

namespace {

struct SuiteOutput {
  std::vector<Verdict> verdicts;
  Table table;
  std::string csv_text;  // used instead of table when set
  json extra = json::object();
  std::string svg;
  bool numerical_failure = false;
};

OperatorOptions op_options(const ExperimentSpec& s, double shift = 0.0) {
  OperatorOptions o;
  o.kinetic_scale = s.knobs.kinetic_scale;
  o.potential_shift = shift;
  return o;
}

SuiteOutput run_gap(const ExperimentSpec& s) {
  GapOptions go;
  go.op = op_options(s);
  go.policy = s.policy;
  go.tol = s.knobs.tol;
  go.degeneracy_rel = s.knobs.degeneracy_rel;
  go.workers = s.workers;
  const GapSummary g = gap_experiment(s.barrier, s.c, s.eta, s.mode, s.gammas, go);
  SuiteOutput out;
  out.table.header = {"gamma", "lambda0", "lambda1", "gap", "lambda0_ref", "gap_ref", "bound", "gap_over_ref",
                      "bound_satisfied", "nodes", "iterations", "error"};
  PlotSeries measured{"measured gap", {}, {}, false}, bound{"bound (half harmonic gap)", {}, {}, true},
      ref{"harmonic gap", {}, {}, true};
  bool errors = false;
  for (const GapRow& r : g.rows) {
    errors = errors || !r.error.empty();
    out.table.add({fmt(r.gamma), fmt(r.lambda0), fmt(r.lambda1), fmt(r.gap), fmt(r.lambda0_ref), fmt(r.gap_ref),
                   fmt(r.bound), fmt(r.gap / r.gap_ref), fmt(r.bound_satisfied), fmt(r.nodes),
                   fmt(static_cast<long>(r.iterations)), r.error});
    if (r.error.empty()) {
      measured.x.push_back(r.gamma);
      measured.y.push_back(r.gap);
    }
    bound.x.push_back(r.gamma);
    bound.y.push_back(r.bound);
    ref.x.push_back(r.gamma);
    ref.y.push_back(r.gap_ref);
  }
  out.numerical_failure = errors;
  const bool found = std::isfinite(g.gamma_threshold_observed);
  out.verdicts.push_back({"bound holds from the empirical threshold on", found,
                          found ? "threshold " + fmt(g.gamma_threshold_observed) : "no gamma satisfies the bound"});
  out.verdicts.push_back({"all rows solved", !errors, errors ? "see error column" : ""});
  out.extra["gamma_threshold_observed"] = num(g.gamma_threshold_observed);
  out.extra["min_margin"] = num(g.min_margin);
  out.svg = loglog_svg(s.name + ": spectral gap vs gamma", "gamma", "gap", {measured, bound, ref});
  return out;
}

SuiteOutput run_overlap(const ExperimentSpec& s) {
  const auto [z, A] = potential_minimizer(s.barrier, s.c, s.eta);
  const double vz = s.barrier.value(z) + s.eta * s.c.dot(z);
  const int n = s.barrier.dim;
  struct Row {
    double overlap = 0.0, l0 = 0.0, l0h = 0.0;
    long nodes = 0;
    std::string error;
  };
  std::vector<Row> rows(s.gammas.size());
  parallel_for(static_cast<int>(rows.size()), s.workers, [&](int i) {
    Row& r = rows[static_cast<std::size_t>(i)];
    const double gamma = s.gammas[static_cast<std::size_t>(i)];
    try {
      const Grid grid = policy_grid(s.barrier, z, A, gamma, s.mode, s.policy);
      r.nodes = grid.size();
      const DiscreteOperator opH = build_operator(s.mode, s.barrier, s.c, s.eta, grid, gamma, op_options(s, vz));
      const DiscreteOperator opH0 =
          s.mode == Mode::Euclidean
              ? build_harmonic(A, z, grid, gamma, op_options(s))
              : build_riemannian(quadratic_potential(A, z), Vec::Zero(n), 0.0, grid, gamma, op_options(s));
      const OverlapReport rep = ground_overlap_check(opH, opH0, bump_pair(z, A, gamma, grid), s.mode, s.knobs.tol);
      r.overlap = rep.overlap;
      r.l0 = rep.lambda0_h;
      r.l0h = rep.lambda0_h0;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  });
  SuiteOutput out;
  out.table.header = {"gamma", "overlap", "lambda0", "lambda0_harmonic", "nodes", "error"};
  bool monotone = true, errors = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    errors = errors || !r.error.empty();
    out.table.add({fmt(s.gammas[i]), fmt(r.overlap), fmt(r.l0), fmt(r.l0h), fmt(r.nodes), r.error});
    if (i > 0 && s.gammas[i] > s.gammas[i - 1] && r.overlap < rows[i - 1].overlap - 1e-9) monotone = false;
  }
  std::size_t top = static_cast<std::size_t>(std::max_element(s.gammas.begin(), s.gammas.end()) - s.gammas.begin());
  out.numerical_failure = errors;
  out.verdicts.push_back({"overlap nondecreasing in gamma", monotone && !errors, ""});
  out.verdicts.push_back({"overlap at largest gamma >= overlap_min", rows[top].overlap >= s.knobs.overlap_min,
                          "overlap " + fmt(rows[top].overlap)});
  return out;
}

SuiteOutput run_ims(const ExperimentSpec& s) {
  const auto [z, A] = potential_minimizer(s.barrier, s.c, s.eta);
  std::vector<ImsRefinement> res(s.gammas.size());
  std::vector<std::string> err(s.gammas.size());
  std::vector<long> nodes(s.gammas.size(), 0);
  parallel_for(static_cast<int>(res.size()), s.workers, [&](int i) {
    const double gamma = s.gammas[static_cast<std::size_t>(i)];
    try {
      const Grid grid = policy_grid(s.barrier, z, A, gamma, s.mode, s.policy);
      nodes[static_cast<std::size_t>(i)] = grid.size();
      auto build = [&](const Grid& g) {
        return build_operator(s.mode, s.barrier, s.c, s.eta, g, gamma, op_options(s));
      };
      res[static_cast<std::size_t>(i)] = ims_refinement_study(build, grid, z, A, gamma);
    } catch (const std::exception& e) {
      err[static_cast<std::size_t>(i)] = e.what();
    }
  });
  SuiteOutput out;
  out.table.header = {"gamma", "nodes", "tier_a_coarse", "tier_a_fine", "tier_b_coarse", "tier_b_fine", "decay",
                      "partition_defect", "error"};
  bool exact = true, decays = true, errors = false;
  for (std::size_t i = 0; i < res.size(); ++i) {
    const ImsRefinement& r = res[i];
    errors = errors || !err[i].empty();
    out.table.add({fmt(s.gammas[i]), fmt(nodes[i]), fmt(r.coarse.tier_a_residual), fmt(r.fine.tier_a_residual),
                   fmt(r.coarse.tier_b_discrepancy), fmt(r.fine.tier_b_discrepancy), fmt(r.decay),
                   fmt(std::max(r.coarse.partition_defect, r.fine.partition_defect)), err[i]});
    if (err[i].empty()) {
      exact = exact && std::max(r.coarse.tier_a_residual, r.fine.tier_a_residual) <= 1e-12;
      decays = decays && r.decay >= s.knobs.ims_decay_min;
    }
  }
  out.numerical_failure = errors;
  out.verdicts.push_back({"matrix identity residual <= 1e-12", exact && !errors, ""});
  out.verdicts.push_back({"continuum discrepancy decays under refinement", decays && !errors,
                          "minimum decay factor " + fmt(s.knobs.ims_decay_min)});
  return out;
}

SuiteOutput run_sc(const ExperimentSpec& s) {
  const Barrier& b = s.barrier;
  std::vector<Vec> xs = s.sample_box ? sobol_interior_samples(b, s.sample_box->first, s.sample_box->second, s.samples)
                                     : sobol_interior_samples(b, s.samples);
  std::mt19937_64 rng(s.seed);
  std::normal_distribution<double> nd;
  std::vector<SamplePair> pairs;
  pairs.reserve(xs.size());
  for (const Vec& x : xs) {
    Vec u(b.dim);
    for (int i = 0; i < b.dim; ++i) u(i) = nd(rng);
    pairs.push_back({x, u / u.norm()});
  }
  const SelfConcordanceReport sc = check_self_concordance(b, pairs);
  SuiteOutput out;
  out.table.header = {"samples", "checked", "unverifiable", "max_ratio", "theta_estimate", "theta"};
  double theta_est = std::nan("");
  bool theta_ok = true;
  if (std::isfinite(b.theta)) {
    theta_est = barrier_parameter_estimate(b, xs);
    theta_ok = theta_est <= b.theta * (1.0 + 1e-9);
  }
  out.table.add({fmt(static_cast<long>(xs.size())), fmt(static_cast<long>(sc.checked)),
                 fmt(static_cast<long>(sc.unverifiable)), fmt(sc.max_ratio), fmt(theta_est), fmt(b.theta)});
  out.verdicts.push_back({"third-derivative ratio <= sc_ratio_limit", sc.max_ratio <= s.knobs.sc_ratio_limit,
                          "max_ratio " + fmt(sc.max_ratio)});
  out.verdicts.push_back({"barrier parameter estimate <= theta", theta_ok, "estimate " + fmt(theta_est)});
  out.extra["max_ratio"] = num(sc.max_ratio);
  out.extra["fd_tolerance"] = sc.fd_tolerance;
  out.extra["samples"] = xs.size();
  return out;
}

double optimum_of(const ExperimentSpec& s) {
  if (s.optimum) return *s.optimum;
  if (s.argmin) return s.c.dot(*s.argmin);
  if (const auto x = box_argmin(s.barrier, s.c)) return s.c.dot(*x);
  throw ConfigError("path.optimum: required for barriers other than interval and box");
}

SuiteOutput run_path(const ExperimentSpec& s) {
  const double val = optimum_of(s);
  const double gamma = s.gammas.front();
  const Vec x0 = interior_point(s.barrier);
  const EtaSchedule sch = eta_schedule(s.barrier, s.c, gamma, s.eps, s.knobs.kappa, s.mode, x0);
  SuiteOutput out;
  std::ostringstream csv;
  write_path_csv(csv, s.c, sch, val);
  out.csv_text = csv.str();
  bool duality = true;
  double worst = -kInf;
  for (const PathPoint& p : sch.centers) {
    const DualityGapReport d = duality_gap_check(s.barrier, s.c, p, val);
    duality = duality && d.passed;
    worst = std::max(worst, d.gap - d.bound);
  }
  bool stable = true;
  json st = json::array();
  for (double delta : s.deltas) {
    const double ep = s.eta * (1.0 + delta / std::sqrt(s.barrier.theta));
    const PathStabilityReport r = check_path_stability(s.barrier, s.c, s.eta, ep, delta, x0, s.knobs.path_constant);
    stable = stable && r.passed;
    st.push_back({{"delta", delta}, {"distance", r.distance}, {"limit", r.limit}, {"passed", r.passed}});
  }
  out.verdicts.push_back({"duality bound along the schedule", duality, "worst gap - bound " + fmt(worst)});
  out.verdicts.push_back({"path stability for every delta", stable, ""});
  out.extra["steps"] = sch.steps();
  out.extra["final_eta"] = sch.etas.back();
  out.extra["optimum"] = val;
  out.extra["stability"] = st;
  return out;
}

SuiteOutput run_anneal(const ExperimentSpec& s) {
  AnnealOptions ao;
  ao.kappa = s.knobs.kappa;
  ao.run_mode = s.anneal_mode;
  ao.emulated_points = s.emulated_points;
  ao.path.policy = s.policy;
  ao.path.op = op_options(s);
  ao.path.tol = s.knobs.tol;
  ao.projector.workers = s.workers;
  ao.argmin = s.argmin ? s.argmin : box_argmin(s.barrier, s.c);
  const AnnealTrace tr = run_annealing(s.barrier, s.c, s.gammas.front(), s.eps, s.mode, ao);
  SuiteOutput out;
  out.table.header = {"step", "eta", "overlap", "step_error", "interpolation_error"};
  for (std::size_t l = 0; l < tr.per_step_errors.size(); ++l)
    out.table.add({fmt(static_cast<long>(l)), fmt(tr.schedule.etas[l + 1]), fmt(tr.pairwise_overlaps[l]),
                   fmt(tr.per_step_errors[l]),
                   l + 1 < tr.interpolation_errors.size() ? fmt(tr.interpolation_errors[l + 1]) : ""});
  out.verdicts.push_back({"path certified (w* >= 1/2)", tr.w_star >= 0.5, "w* " + fmt(tr.w_star)});
  out.verdicts.push_back({"final fidelity >= 1 - eps", tr.final_fidelity >= 1.0 - s.eps,
                          "fidelity " + fmt(tr.final_fidelity)});
  if (ao.argmin)
    out.verdicts.push_back({"position mean within theta/eta_T + 3 sigma of the minimizer", tr.position_ok,
                            fmt(tr.position_distance) + " <= " + fmt(tr.position_bound)});
  out.extra["steps"] = tr.schedule.steps();
  out.extra["w_star"] = tr.w_star;
  out.extra["depth"] = tr.depth;
  out.extra["rotations_used"] = tr.rotations_used;
  out.extra["rotation_constant"] = tr.rotation_constant;
  out.extra["final_fidelity"] = tr.final_fidelity;
  out.extra["common_nodes"] = tr.common_nodes;
  out.extra["run_mode"] = tr.mode;
  out.extra["surrogates"] = tr.surrogates;
  out.extra["position_mean"] = vec_json(tr.position_mean);
  return out;
}

SuiteOutput run_projector(const ExperimentSpec& s) {
  const int n = s.projector_dim;
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  std::bernoulli_distribution keep(std::min(1.0, 6.0 / n));
  // Sparse symmetric perturbation of a diagonal with one level at -1 and the
  // rest in [1, 1.8], so the gap and the spectral width are both order one.
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < n; ++i) {
    trip.emplace_back(i, i, i == 0 ? -1.0 : 1.4 + 0.4 * ud(rng));
    for (int j = i + 1; j < n; ++j)
      if (keep(rng)) {
        const double v = 0.05 * ud(rng);
        trip.emplace_back(i, j, v);
        trip.emplace_back(j, i, v);
      }
  }
  SpMat H(n, n);
  H.setFromTriplets(trip.begin(), trip.end());
  const Mat dense(H);
  Eigen::SelfAdjointEigenSolver<Mat> es(dense);
  const Vec lam = es.eigenvalues();
  const Mat Q = es.eigenvectors();
  CVec phi(n);
  for (int i = 0; i < n; ++i) phi(i) = {ud(rng), ud(rng)};
  phi.normalize();

  ProjectorConfig cfg;
  cfg.t = s.projector_t;
  cfg.quad_nodes = s.quad_nodes;
  cfg.workers = s.workers;
  cfg.krylov.tol = s.knobs.tol;
  const double lbar = 0.5 * (lam(0) + lam(n - 1));
  cfg.lambda0_estimate = lbar;
  ProjectorReport pr;
  const CVec got = hs_projector_apply(H, cfg, phi, &pr);
  const Vec filt = (-(cfg.t) * (lam.array() - lbar).square()).exp();
  const CVec want = Q.cast<std::complex<double>>() * (filt.cast<std::complex<double>>().asDiagonal() *
                                                      (Q.transpose().cast<std::complex<double>>() * phi));
  const double e1 = (got - want).norm();

  const double gap = lam(1) - lam(0);
  cfg.lambda0_estimate = lam(0);
  const CVec psi0 = Q.col(0).cast<std::complex<double>>();
  double td = 0.0;
  for (int sign : {+1, -1}) td = std::max(td, two_register_emulation(H, cfg, phi, psi0, sign).trace_distance);
  const double td_bound = 2.0 * std::exp(-cfg.t * gap * gap) + 1e-6;

  cfg.lambda0_estimate = lam(0) + s.energy_error;
  const double sub = std::abs(psi0.dot(hs_projector_apply(H, cfg, psi0)));
  const double sub_want = std::exp(-cfg.t * s.energy_error * s.energy_error);

  SuiteOutput out;
  out.table.header = {"check", "value", "bound", "passed"};
  out.table.add({"dense_oracle_error", fmt(e1), fmt(1e-6), fmt(e1 <= 1e-6)});
  out.table.add({"trace_distance", fmt(td), fmt(td_bound), fmt(td <= td_bound)});
  out.table.add({"subnormalization_error", fmt(std::abs(sub - sub_want)), fmt(1e-8),
                 fmt(std::abs(sub - sub_want) <= 1e-8)});
  out.verdicts.push_back({"projector matches dense oracle", e1 <= 1e-6, "error " + fmt(e1)});
  out.verdicts.push_back({"two-register circuit matches direct rotation", td <= td_bound,
                          fmt(td) + " <= " + fmt(td_bound)});
  out.verdicts.push_back({"sub-normalization exp(-t eps0^2)", std::abs(sub - sub_want) <= 1e-8,
                          fmt(sub) + " vs " + fmt(sub_want)});
  out.extra["gap"] = gap;
  out.extra["quadrature_drift"] = pr.drift;
  out.extra["krylov_substeps"] = pr.krylov_substeps;
  out.extra["surrogates"] = {"controlled_evolution=krylov_exponential", "energy_estimate=dense_eigensolve"};
  return out;
}

SuiteOutput dispatch(const ExperimentSpec& s) {
  switch (s.suite) {
    case Suite::Gap: return run_gap(s);
    case Suite::Overlap: return run_overlap(s);
    case Suite::Ims: return run_ims(s);
    case Suite::ScCheck: return run_sc(s);
    case Suite::Path: return run_path(s);
    case Suite::Anneal: return run_anneal(s);
    case Suite::Projector: return run_projector(s);
    case Suite::Count: break;
  }
  throw ConfigError("suite: not implemented");
}

json provenance(const ExperimentSpec& s) {
  const Knobs& k = s.knobs;
  const GridPolicy& p = s.policy;
  json j;
  j["constants"] = {{"kappa", k.kappa},
                    {"c0", k.c0},
                    {"degeneracy_tol", k.degeneracy_rel},
                    {"kinetic_scale", k.kinetic_scale},
                    {"sc_ratio_limit", k.sc_ratio_limit},
                    {"path_constant", k.path_constant},
                    {"overlap_min", k.overlap_min},
                    {"ims_decay_min", k.ims_decay_min}};
  j["solver"] = {{"lanczos_tol", k.tol},
                 {"krylov_tol", k.tol},
                 {"krylov_dim", KrylovOptions{}.dim},
                 {"quad_nodes", s.quad_nodes},
                 {"z_truncation", ProjectorConfig{}.z_truncation},
                 {"quadrature_drift_tol", ProjectorConfig{}.drift_tol}};
  j["grid_policy"] = {{"sigma_multiple", p.sigma_multiple},   {"dikin_multiple", p.dikin_multiple},
                      {"points_per_sigma", p.points_per_sigma}, {"min_points", p.min_points},
                      {"max_points_per_axis", p.max_points_per_axis}, {"max_nodes", p.max_nodes},
                      {"box_scale", p.box_scale},             {"slack", p.slack}};
  j["seed"] = s.seed;
  j["workers"] = s.workers;
  j["eta"] = s.eta;
  j["gammas"] = s.gammas;
  j["eps"] = s.eps;
  return j;
}

}  // namespace

RunResult run_experiment(const ExperimentSpec& spec, bool write_files) {
  RunResult res;
  SuiteOutput out;
  try {
    out = dispatch(spec);
  } catch (const ConfigError& e) {
    res.error = e.what();
    res.exit_code = 2;
  } catch (const PreconditionError& e) {
    res.error = e.what();
    res.exit_code = 2;
  } catch (const std::exception& e) {
    res.error = e.what();
    res.numerical_failure = true;
    res.exit_code = 3;
  }
  res.verdicts = out.verdicts;
  res.svg = out.svg;
  if (res.exit_code == 0) {
    res.numerical_failure = out.numerical_failure;
    if (out.csv_text.empty()) {
      std::ostringstream os;
      write_csv(os, out.table);
      res.csv = os.str();
    } else {
      res.csv = out.csv_text;
    }
    const bool all = std::all_of(res.verdicts.begin(), res.verdicts.end(), [](const Verdict& v) { return v.passed; });
    res.exit_code = out.numerical_failure ? 3 : (all ? 0 : 1);
  }

  json j;
  j["name"] = spec.name;
  j["suite"] = std::string(kSuites[static_cast<std::size_t>(spec.suite)].name);
  j["anchor"] = std::string(kSuites[static_cast<std::size_t>(spec.suite)].anchor);
  j["mode"] = mode_name(spec.mode);
  if (!spec.barrier_yaml.empty()) {
    j["instance"] = to_json(YAML::Load(spec.barrier_yaml));
    j["objective"] = vec_json(spec.c);
    j["theta"] = num(spec.barrier.theta);
  }
  json v = json::array();
  for (const Verdict& x : res.verdicts) v.push_back({{"name", x.name}, {"passed", x.passed}, {"detail", x.detail}});
  j["verdicts"] = v;
  j["passed"] = res.exit_code == 0;
  j["exit_code"] = res.exit_code;
  if (!res.error.empty()) j["error"] = res.error;
  j["results"] = out.extra;
  j["provenance"] = provenance(spec);
  res.summary_json = j.dump(2) + "\n";

  if (write_files) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(spec.out_dir, ec);
    if (ec) throw ConfigError("out: cannot create '" + spec.out_dir + "': " + ec.message());
    const fs::path dir(spec.out_dir);
    std::ofstream(dir / "results.csv") << res.csv;
    std::ofstream(dir / "summary.json") << res.summary_json;
    if (!res.svg.empty()) std::ofstream(dir / "gap.svg") << res.svg;
  }
  return res;
}

}  // namespace sclab
