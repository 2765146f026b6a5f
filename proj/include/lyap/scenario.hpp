#pragma once

// Scenario runner: a registry of named instances, each exposing a parameter
// schema and a set of named checks, plus the config-driven driver used by
// the lyapcheck tool. Depends on nlohmann/json.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lyap/lyap.hpp"
#include "lyap/io.hpp"

namespace lyap::scenario {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitConfig = 2, kExitNumeric = 3 };

struct ParamSpec {
  std::string name;
  std::string type;  // number, integer, string, bool, matrix, array, object
  json defaultValue;
  std::string description;
};

struct InstanceInfo {
  std::string name;
  std::string description;
  std::vector<ParamSpec> params;
  std::vector<std::string> checks;
  std::vector<std::string> defaultChecks;
};

struct RunContext {
  std::uint64_t seed = 1;
  std::size_t samples = 1000;
  std::optional<double> tolerance;
  std::filesystem::path baseDir = ".";
  std::size_t trajectorySamples = 3;
};

using CheckFn = std::function<CheckReport()>;

struct BuiltInstance {
  std::map<std::string, CheckFn> checks;
  std::function<void(std::ostream&)> trajectories;  // empty if unsupported
};

struct Instance {
  InstanceInfo info;
  std::function<BuiltInstance(const json& params, const RunContext&)> build;
};

class Registry {
 public:
  void add(Instance inst) {
    if (find(inst.info.name)) throw ConfigError("instance '" + inst.info.name + "' registered twice");
    instances_.push_back(std::move(inst));
  }
  const Instance* find(const std::string& name) const {
    for (const auto& i : instances_)
      if (i.info.name == name) return &i;
    return nullptr;
  }
  const std::vector<Instance>& instances() const { return instances_; }

 private:
  std::vector<Instance> instances_;
};

// ---------------------------------------------------------------------------
// Parameter access with schema validation.

class Params {
 public:
  Params(const InstanceInfo& info, const json& given) : info_(info) {
    if (!given.is_null() && !given.is_object()) throw ConfigError("parameters must be an object");
    for (const auto& spec : info.params) values_[spec.name] = spec.defaultValue;
    if (given.is_object())
      for (auto it = given.begin(); it != given.end(); ++it) {
        const ParamSpec* spec = nullptr;
        for (const auto& s : info.params)
          if (s.name == it.key()) spec = &s;
        if (!spec) throw ConfigError(info.name + ": unknown parameter '" + it.key() + "'");
        check_type(*spec, it.value());
        values_[it.key()] = it.value();
      }
  }

  const json& raw(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw ConfigError(info_.name + ": parameter '" + name + "' not in schema");
    return it->second;
  }
  bool has(const std::string& name) const { return !raw(name).is_null(); }
  double number(const std::string& name) const { return raw(name).get<double>(); }
  std::uint64_t integer(const std::string& name) const { return raw(name).get<std::uint64_t>(); }
  std::string str(const std::string& name) const { return raw(name).get<std::string>(); }
  bool flag(const std::string& name) const { return raw(name).get<bool>(); }

 private:
  void check_type(const ParamSpec& s, const json& v) const {
    if (v.is_null()) return;
    bool ok = true;
    if (s.type == "number") ok = v.is_number();
    else if (s.type == "integer") ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    else if (s.type == "string") ok = v.is_string();
    else if (s.type == "bool") ok = v.is_boolean();
    else if (s.type == "matrix") ok = v.is_number() || v.is_array();
    else if (s.type == "array") ok = v.is_array();
    else if (s.type == "object") ok = v.is_object();
    if (!ok) throw ConfigError(info_.name + ": parameter '" + s.name + "' must be of type " + s.type);
  }

  const InstanceInfo& info_;
  std::map<std::string, json> values_;
};

inline DenseMatrix matrix_from_json(const json& v, const std::string& what) {
  if (v.is_number()) return DenseMatrix(1, 1, {v.get<double>()});
  if (!v.is_array() || v.empty()) throw ConfigError(what + ": expected a number or nested array");
  const std::size_t rows = v.size();
  std::size_t cols = 0;
  std::vector<double> entries;
  for (const auto& row : v) {
    if (!row.is_array() || row.empty()) throw ConfigError(what + ": rows must be non-empty arrays");
    if (cols == 0) cols = row.size();
    if (row.size() != cols) throw ConfigError(what + ": ragged rows");
    for (const auto& e : row) {
      if (!e.is_number()) throw ConfigError(what + ": entries must be numbers");
      entries.push_back(e.get<double>());
    }
  }
  return DenseMatrix(rows, cols, std::move(entries));
}

inline Vec vector_from_json(const json& v, const std::string& what) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) throw ConfigError(what + ": expected a number or an array");
  Vec out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(what + ": entries must be numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline std::string resolve_path(const RunContext& ctx, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative()) path = ctx.baseDir / path;
  if (!std::filesystem::exists(path)) throw ConfigError("file not found: " + path.string());
  return path.string();
}

// "id", "linear:c" or "power:c:p".
inline ClassKMorphism<double> parse_real_alpha(const std::string& spec) {
  if (spec == "id") return identity_class_k<double>();
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  try {
    if (parts.size() == 2 && parts[0] == "linear") return linear_class_k(std::stod(parts[1]));
    if (parts.size() == 3 && parts[0] == "power") return power_class_k(std::stod(parts[1]), std::stod(parts[2]));
  } catch (const std::invalid_argument&) {
  } catch (const std::out_of_range&) {
  }
  throw ConfigError("alpha: expected 'id', 'linear:c' or 'power:c:p', got '" + spec + "'");
}

// ---------------------------------------------------------------------------
// Generic checks shared by every instance with a flow.

template <class E, class T, class S>
struct Bundle {
  using R = typename S::value_type;
  Flow<E, T, S> flow;
  E xStar;
  ClassKMorphism<R> alpha = identity_class_k<R>();
  std::optional<CandidateV<E, R>> V;
  std::optional<Envelope<R>> envelope;
  std::optional<HorizonPolicy<T>> converse;
};

namespace detail {

inline CheckReport renamed(CheckReport r, std::string name) {
  r.lawName = std::move(name);
  return r;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += (c == '"') ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace detail

template <class E, class T, class S>
void add_flow_checks(BuiltInstance& b, std::shared_ptr<const Bundle<E, T, S>> p, const RunContext& ctx) {
  const auto seed = ctx.seed;
  const auto n = ctx.samples;
  using R = typename S::value_type;
  b.checks["monoid_laws"] = [p, seed, n] { return check_monoid_laws(p->flow.setting.time, seed, n); };
  b.checks["partial_order"] = [p, seed, n] { return check_partial_order(p->flow.setting.stable, seed, n); };
  if constexpr (Bimonoidal<S>)
    b.checks["bimonoidal_laws"] = [p, seed, n] { return check_bimonoidal_laws(p->flow.setting.stable, seed, n); };
  b.checks["distance_axioms"] = [p, seed, n] { return check_distance_axioms(p->flow.setting, seed, n); };
  b.checks["norm_properties"] = [p, seed, n] { return check_norm_properties(p->flow.setting, p->xStar, seed, n); };
  b.checks["flow_laws"] = [p, seed, n] { return check_flow_laws(p->flow, seed, n); };
  b.checks["equilibrium"] = [p, seed, n] { return check_equilibrium(p->flow, p->xStar, seed, n).report; };
  b.checks["class_k"] = [p, seed, n] { return check_class_k(p->alpha, p->flow.setting.stable, seed, n); };
  b.checks["stable"] = [p, seed, n] { return check_stable(p->flow, p->xStar, p->alpha, seed, n).report; };
  b.checks["weakly_contracting"] = [p, seed, n] { return check_weakly_contracting(p->flow, seed, n); };
  b.checks["stability_from_contraction"] = [p, seed, n] {
    return detail::renamed(stability_from_contraction(p->flow, p->xStar, seed, n).report,
                           "stability_from_contraction[alpha=id]");
  };
  if (p->V && p->envelope) {
    b.checks["positive_definite"] = [p, seed, n] {
      return check_positive_definite(*p->V, p->xStar, *p->envelope, p->flow.setting, seed, n);
    };
    b.checks["decrescent"] = [p, seed, n] { return check_decrescent(*p->V, p->flow, seed, n); };
    b.checks["lyapunov_theorem"] = [p, seed, n] {
      auto w = verify_lyapunov_theorem(*p->V, p->flow, p->xStar, *p->envelope, seed, n);
      return detail::renamed(std::move(w.report), "lyapunov_theorem[" + p->V->label + ", alpha=" + w.alpha.label + "]");
    };
  }
  if (p->converse) {
    b.checks["converse"] = [p, seed, n] {
      const auto w = check_stable(p->flow, p->xStar, p->alpha, seed, n);
      const auto V = construct_converse_V(p->flow, p->xStar, w, *p->converse);
      const Envelope<R> env{identity_class_k<R>(), p->alpha};
      auto pd = check_positive_definite(V, p->xStar, env, p->flow.setting, seed, n);
      auto dec = check_decrescent(V, p->flow, seed, n);
      return merge("converse[" + V.label + "]", pd, dec);
    };
  }
}

template <class E, class T, class S>
std::function<void(std::ostream&)> trajectory_writer(std::shared_ptr<const Bundle<E, T, S>> p,
                                                     std::vector<std::pair<std::string, T>> times,
                                                     std::function<std::vector<std::string>(const E&)> state,
                                                     const RunContext& ctx) {
  const auto seed = ctx.seed;
  const auto count = ctx.trajectorySamples;
  return [p, times = std::move(times), state = std::move(state), seed, count](std::ostream& os) {
    auto xs = p->flow.setting.space.draw(mix_seed(seed, 90), count);
    if (xs.size() > count) xs.erase(xs.begin() + static_cast<std::ptrdiff_t>(count), xs.end());
    const auto width = state(p->xStar).size();
    os << "sampleIndex,t";
    for (std::size_t i = 0; i < width; ++i) os << ",state_" << i;
    os << ",normValue,vValue\n";
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (const auto& [label, t] : times) {
        const E y = p->flow.act(t, xs[i]);
        os << i << ',' << detail::csv_field(label);
        for (const auto& c : state(y)) os << ',' << detail::csv_field(c);
        os << ',' << detail::csv_field(describe(norm(p->flow.setting, p->xStar, y))) << ',';
        if (p->V) os << detail::csv_field(describe((*p->V)(y)));
        os << '\n';
      }
  };
}

inline std::vector<std::string> vec_columns(const Vec& x) {
  std::vector<std::string> out;
  for (double v : x) out.push_back(describe(v));
  return out;
}

// ---------------------------------------------------------------------------
// Built-in instances.

namespace builtin {

inline std::vector<std::string> merge_names(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

inline const std::vector<std::string> kFlowChecks = {
    "monoid_laws", "partial_order",      "distance_axioms",           "norm_properties", "flow_laws",
    "equilibrium", "class_k",            "stable",                    "weakly_contracting",
    "stability_from_contraction", "bimonoidal_laws"};
inline const std::vector<std::string> kLyapunovChecks = {"positive_definite", "decrescent", "lyapunov_theorem"};

inline Instance ode_instance(const std::string& name, const std::string& description, double tail_factor) {
  InstanceInfo info;
  info.name = name;
  info.description = description;
  info.params = {
      {"step_size", "number", 0.05, "RK4 step h"},
      {"horizon", "number", 20.0, "largest sampled time H"},
      {"time_grid", "number", 0.05, "grid spacing of the fixed sampled times"},
      {"radius", "number", 2.0, "states are sampled from [-radius, radius]^n"},
      {"tolerance", "number", 1e-6, "order tolerance and flow-law tolerance"},
      {"equilibrium", "matrix", nullptr, "x* (default: origin)"},
      {"alpha", "string", "id", "class K bound for 'stable': id, linear:c or power:c:p"},
      {"converse_steps", "integer", 400, "orbit steps of length step_size in the converse supremum"},
      {"tail_factor", "number", tail_factor, "horizon tail threshold for the converse supremum"},
      {"fd_step", "number", 1e-5, "finite-difference step for the derivative condition"},
  };
  info.checks = merge_names(merge_names(kFlowChecks, kLyapunovChecks),
                            {"converse", "derivative_condition", "derivative_agreement", "derivative_equivalence"});
  info.defaultChecks = {"monoid_laws", "distance_axioms",  "norm_properties", "flow_laws",
                        "equilibrium", "lyapunov_theorem", "converse",        "derivative_condition"};

  Instance inst;
  inst.info = info;
  inst.build = [info](const json& given, const RunContext& ctx) {
    const Params prm(info, given);
    auto ode = *named_ode(info.name, prm.number("step_size"));
    if (!(ode.stepSize > 0.0)) throw ConfigError("step_size must be positive");
    EuclideanOptions o;
    o.radius = prm.number("radius");
    o.tolerance = ctx.tolerance.value_or(prm.number("tolerance"));
    o.horizon = prm.number("horizon");
    o.grid = prm.number("time_grid");
    if (!(o.horizon > 0.0 && o.grid > 0.0)) throw ConfigError("horizon and time_grid must be positive");

    const Vec x_star = prm.has("equilibrium") ? vector_from_json(prm.raw("equilibrium"), "equilibrium")
                                              : Vec(ode.dimension, 0.0);
    if (x_star.size() != ode.dimension) throw ConfigError("equilibrium: wrong dimension");

    auto bundle = std::make_shared<Bundle<Vec, double, RealStable>>(Bundle<Vec, double, RealStable>{
        ode_flow(ode, o), x_star, parse_real_alpha(prm.str("alpha")), squared_norm_V(x_star),
        Envelope<double>{power_class_k(1.0, 2.0), power_class_k(1.0, 2.0)},
        HorizonPolicy<double>{HorizonMode::FiniteHorizonWithTailCheck, prm.integer("converse_steps"), ode.stepSize,
                              prm.number("tail_factor")}});
    std::shared_ptr<const Bundle<Vec, double, RealStable>> p = bundle;

    BuiltInstance b;
    add_flow_checks(b, p, ctx);
    const auto seed = ctx.seed;
    const auto n = ctx.samples;
    const double fd = prm.number("fd_step");
    const double tol = o.tolerance;
    const auto domain = box_sampler(ode.dimension, o.radius);
    b.checks["derivative_condition"] = [p, ode, domain, seed, n, fd, tol] {
      return check_derivative_condition(*p->V, ode, domain, seed, n, fd, tol);
    };
    b.checks["derivative_agreement"] = [p, ode, domain, seed, n, fd] {
      return check_derivative_agreement(*p->V, ode, domain, seed, n, fd);
    };
    // Both pass or both fail.
    b.checks["derivative_equivalence"] = [p, ode, domain, seed, n, fd, tol] {
      const auto d = check_derivative_condition(*p->V, ode, domain, seed, n, fd, tol);
      const auto c = check_decrescent(*p->V, p->flow, seed, n);
      CheckReport r;
      r.lawName = "derivative_equivalence[" + p->V->label + "]";
      r.samplesChecked = d.samplesChecked + c.samplesChecked;
      r.passed = d.passed == c.passed;
      r.worstResidual = r.passed ? 0.0 : 1.0;
      r.note = std::string("derivative_condition ") + (d.passed ? "passed" : "failed") + ", decrescent " +
               (c.passed ? "passed" : "failed");
      if (!r.passed) r.counterexample = d.counterexample ? d.counterexample : c.counterexample;
      return r;
    };

    std::vector<std::pair<std::string, double>> times;
    const auto steps = static_cast<std::size_t>(std::floor(o.horizon / o.grid + 1e-9));
    for (std::size_t k = 0; k <= steps; ++k) {
      const double t = static_cast<double>(k) * o.grid;
      times.emplace_back(describe(t), t);
    }
    b.trajectories = trajectory_writer<Vec, double, RealStable>(p, std::move(times), vec_columns, ctx);
    return b;
  };
  return inst;
}

inline Instance map_instance(const std::string& name, const std::string& description, DiscreteSystem (*make)(const Params&),
                             std::vector<ParamSpec> extra, Vec default_star, std::string v_label) {
  InstanceInfo info;
  info.name = name;
  info.description = description;
  info.params = {
      {"max_steps", "integer", 20, "discrete times are sampled from {0, ..., max_steps}"},
      {"radius", "number", 2.0, "states are sampled from [-radius, radius]^n"},
      {"tolerance", "number", 1e-12, "order tolerance"},
      {"alpha", "string", "id", "class K bound for 'stable': id, linear:c or power:c:p"},
  };
  info.params.insert(info.params.end(), extra.begin(), extra.end());
  info.checks = merge_names(merge_names(kFlowChecks, kLyapunovChecks), {"converse", "discrete_lyapunov", "discrete_induction"});
  info.defaultChecks = {"monoid_laws",      "distance_axioms", "norm_properties",   "flow_laws",
                        "equilibrium",      "stable",          "lyapunov_theorem",  "converse",
                        "discrete_lyapunov", "discrete_induction"};

  Instance inst;
  inst.info = info;
  inst.build = [info, make, default_star, v_label](const json& given, const RunContext& ctx) {
    const Params prm(info, given);
    const auto sys = make(prm);
    EuclideanOptions o;
    o.radius = prm.number("radius");
    o.tolerance = ctx.tolerance.value_or(prm.number("tolerance"));
    o.max_steps = prm.integer("max_steps");
    const Vec x_star = default_star.size() == sys.dimension ? default_star : Vec(sys.dimension, 0.0);

    CandidateV<Vec, double> V = norm_V(x_star);
    Envelope<double> env{identity_class_k<double>(), identity_class_k<double>()};
    if (v_label == "||x||^2") {
      V = squared_norm_V(x_star);
      env = {power_class_k(1.0, 2.0), power_class_k(1.0, 2.0)};
    }
    auto bundle = std::make_shared<Bundle<Vec, std::uint64_t, RealStable>>(Bundle<Vec, std::uint64_t, RealStable>{
        map_flow(sys, o), x_star, parse_real_alpha(prm.str("alpha")), V, env,
        HorizonPolicy<std::uint64_t>{HorizonMode::ExhaustiveFinite, 0, 1, 1.0}});
    std::shared_ptr<const Bundle<Vec, std::uint64_t, RealStable>> p = bundle;

    BuiltInstance b;
    add_flow_checks(b, p, ctx);
    const auto seed = ctx.seed;
    const auto n = ctx.samples;
    const auto domain = box_sampler(sys.dimension, o.radius);
    const double tol = o.tolerance;
    const auto k_max = o.max_steps;
    b.checks["discrete_lyapunov"] = [p, sys, domain, tol, seed, n] {
      return check_discrete_lyapunov(*p->V, sys, domain, tol, seed, n);
    };
    // One-step decrease on the samples implies V(F^k x) <= V(x) for k <= max_steps.
    b.checks["discrete_induction"] = [p, sys, domain, tol, seed, n, k_max] {
      const auto one = check_discrete_lyapunov(*p->V, sys, domain, tol, seed, n);
      ReportBuilder rb("discrete_induction[" + p->V->label + "]");
      for (const auto& x : domain.draw(mix_seed(seed, 60), n)) {
        Vec y = x;
        double prev = (*p->V)(x);
        bool chain = true;
        for (std::uint64_t k = 1; k <= k_max; ++k) {
          y = sys.step(y);
          const double v = (*p->V)(y);
          chain = chain && v <= prev + tol;
          prev = v;
        }
        const bool bounded = prev <= (*p->V)(x) + tol * static_cast<double>(k_max);
        // Implication: a passing one-step check must give a passing chain.
        rb.observe_exact(one.passed && !(chain && bounded), describe(x));
      }
      return std::move(rb).finish();
    };

    std::vector<std::pair<std::string, std::uint64_t>> times;
    for (std::uint64_t k = 0; k <= k_max; ++k) times.emplace_back(std::to_string(k), k);
    b.trajectories = trajectory_writer<Vec, std::uint64_t, RealStable>(p, std::move(times), vec_columns, ctx);
    return b;
  };
  return inst;
}

inline DiscreteSystem make_halving(const Params&) { return halving_map(); }
inline DiscreteSystem make_affine(const Params&) { return affine_map(); }
inline DiscreteSystem make_rotation_map(const Params& p) { return rotation_map(p.number("angle")); }

inline KalmanModel model_from_params(const Params& prm, const RunContext& ctx) {
  if (prm.has("model_file") && !prm.str("model_file").empty())
    return io::read_model_file(resolve_path(ctx, prm.str("model_file")));
  return {matrix_from_json(prm.raw("A"), "A"), matrix_from_json(prm.raw("F"), "F"),
          matrix_from_json(prm.raw("C"), "C")};
}

inline Instance kalman_instance(const std::string& name, const std::string& description, json a, json f, json c,
                                json expected) {
  InstanceInfo info;
  info.name = name;
  info.description = description;
  info.params = {
      {"A", "matrix", a, "state transition (invertible)"},
      {"F", "matrix", f, "process noise factor, S = F F^T"},
      {"C", "matrix", c, "observation matrix, R = C^T C"},
      {"model_file", "string", "", "matrix block file with A, F, C; overrides the inline matrices"},
      {"max_word", "integer", 8, "sampled times are words of length <= max_word in the generators"},
      {"tolerance", "number", 1e-8, "order tolerance and flow-law tolerance"},
      {"spd_floor", "number", 0.1, "smallest eigenvalue of sampled SPD points"},
      {"expected_fixed_point", "matrix", expected, "compare the Riccati fixed point against this value"},
  };
  info.checks = merge_names(merge_names(kFlowChecks, kLyapunovChecks),
                            {"h_membership", "contraction", "mk_agreement", "fixed_point"});
  info.defaultChecks = {"h_membership", "monoid_laws", "distance_axioms", "norm_properties", "flow_laws",
                        "fixed_point",  "contraction", "mk_agreement",    "equilibrium",     "lyapunov_theorem"};

  Instance inst;
  inst.info = info;
  inst.build = [info](const json& given, const RunContext& ctx) {
    const Params prm(info, given);
    const KalmanModel model = model_from_params(prm, ctx);
    RiccatiOptions o;
    o.max_word = prm.integer("max_word");
    o.tolerance = ctx.tolerance.value_or(prm.number("tolerance"));
    o.spd_floor = prm.number("spd_floor");
    const auto mk = build_Mk(model);
    const auto fp = find_riccati_fixed_point(model, SpdPoint(DenseMatrix::identity(model.n())));

    auto bundle = std::make_shared<Bundle<SpdPoint, DenseMatrix, RealStable>>(
        Bundle<SpdPoint, DenseMatrix, RealStable>{riccati_flow(model.n(), {mk}, o), fp.point,
                                                  identity_class_k<double>(), spd_distance_V(fp.point),
                                                  Envelope<double>{identity_class_k<double>(), identity_class_k<double>()},
                                                  std::nullopt});
    std::shared_ptr<const Bundle<SpdPoint, DenseMatrix, RealStable>> p = bundle;

    BuiltInstance b;
    add_flow_checks(b, p, ctx);
    const auto seed = ctx.seed;
    const auto n = ctx.samples;
    b.checks["h_membership"] = [mk] { return check_H_membership(mk); };
    b.checks["contraction"] = [mk, seed, n] { return check_contraction(mk, seed, n); };
    b.checks["mk_agreement"] = [model, mk, p, seed, n] {
      ReportBuilder rb("mk_agreement", 1e-9);
      for (const auto& P : p->flow.setting.space.draw(mix_seed(seed, 70), n)) {
        rb.guard(
            [&] {
              const auto lhs = riccati_action(mk, P).matrix();
              const auto rhs = covariance_update(model, P).matrix();
              const double r = max_abs_diff(lhs, rhs) / std::max(1.0, rhs.max_abs());
              rb.observe(r, !(r <= 1e-9), [&] { return describe(P); });
            },
            [&] { return describe(P); });
      }
      return std::move(rb).finish();
    };
    std::optional<DenseMatrix> expected;
    if (prm.has("expected_fixed_point")) expected = matrix_from_json(prm.raw("expected_fixed_point"), "expected_fixed_point");
    b.checks["fixed_point"] = [fp, expected] {
      CheckReport r = fp.equilibriumReport;
      r.lawName = "fixed_point";
      r.note = "iterations " + std::to_string(fp.iterations) + ", P* = " + describe(fp.point);
      if (expected) {
        if (expected->rows() != fp.point.n() || expected->cols() != fp.point.n())
          throw ConfigError("expected_fixed_point: wrong shape");
        const double gap = max_abs_diff(*expected, fp.point.matrix());
        r.samplesChecked += 1;
        r.worstResidual = std::max(r.worstResidual, gap);
        if (!(gap <= 1e-9)) {
          r.passed = false;
          r.counterexample = "expected " + describe(*expected);
        }
      }
      return r;
    };

    std::vector<std::pair<std::string, DenseMatrix>> times;
    DenseMatrix power = DenseMatrix::identity(2 * model.n());
    for (std::size_t k = 0; k <= 20; ++k) {
      times.emplace_back(std::to_string(k), power);
      power = power * mk.matrix();
    }
    b.trajectories = trajectory_writer<SpdPoint, DenseMatrix, RealStable>(
        p, std::move(times),
        [](const SpdPoint& P) {
          std::vector<std::string> out;
          for (std::size_t i = 0; i < P.n(); ++i)
            for (std::size_t j = 0; j < P.n(); ++j) out.push_back(describe(P.matrix()(i, j)));
          return out;
        },
        ctx);
    return b;
  };
  return inst;
}

inline SetSystem set_system_from_params(const Params& prm, const RunContext& ctx) {
  if (prm.has("set_system_file") && !prm.str("set_system_file").empty())
    return io::read_set_system_file(resolve_path(ctx, prm.str("set_system_file")));
  const auto& elems = prm.raw("elements");
  const auto& map = prm.raw("map");
  std::vector<std::string> names;
  for (const auto& e : elems) {
    if (!e.is_string()) throw ConfigError("elements: expected strings");
    names.push_back(e.get<std::string>());
  }
  if (!map.is_object()) throw ConfigError("map: expected an object element -> element");
  std::vector<std::size_t> pm(names.size(), names.size());
  auto index = [&](const std::string& s) {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == s) return i;
    throw ConfigError("map: unknown element '" + s + "'");
  };
  for (auto it = map.begin(); it != map.end(); ++it) {
    if (!it.value().is_string()) throw ConfigError("map: images must be element names");
    pm[index(it.key())] = index(it.value().get<std::string>());
  }
  for (std::size_t i = 0; i < pm.size(); ++i)
    if (pm[i] == names.size()) throw ConfigError("map: no image for '" + names[i] + "'");
  return {names, pm};
}

inline std::size_t element_index(const std::vector<std::string>& names, const std::string& s, const std::string& what) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == s) return i;
  throw ConfigError(what + ": unknown element '" + s + "'");
}

inline Instance powerset_instance() {
  InstanceInfo info;
  info.name = "powerset";
  info.description = "forward images of subsets under a self-map of a finite set, symmetric-difference distance";
  info.params = {
      {"elements", "array", json::array({"a", "b", "c"}), "names of the elements of E"},
      {"map", "object", json{{"a", "a"}, {"b", "a"}, {"c", "a"}}, "point map, element -> element"},
      {"set_system_file", "string", "", "file of 'x -> y' lines; overrides elements and map"},
      {"x_star", "string", nullptr, "fixed element (default: first fixed point)"},
      {"alpha", "array", nullptr, "permutation for 'stable', as the image of each element (default: identity)"},
  };
  info.checks = merge_names(merge_names(kFlowChecks, kLyapunovChecks),
                            {"set_stability", "exhaustive_converse", "stability_iff_converse"});
  info.defaultChecks = {"monoid_laws",   "partial_order",       "distance_axioms",       "norm_properties",
                        "flow_laws",     "equilibrium",         "set_stability",         "exhaustive_converse",
                        "stability_iff_converse"};

  Instance inst;
  inst.info = info;
  inst.build = [info](const json& given, const RunContext& ctx) {
    const Params prm(info, given);
    const SetSystem sys = set_system_from_params(prm, ctx);
    std::size_t star = sys.size();
    if (prm.has("x_star")) {
      star = element_index(sys.base, prm.str("x_star"), "x_star");
    } else {
      for (std::size_t i = 0; i < sys.size() && star == sys.size(); ++i)
        if (sys.pointMap[i] == i) star = i;
      if (star == sys.size()) throw ConfigError("powerset: the point map has no fixed point");
    }
    std::vector<std::size_t> sigma(sys.size());
    std::iota(sigma.begin(), sigma.end(), std::size_t{0});
    if (prm.has("alpha")) {
      const auto& a = prm.raw("alpha");
      if (a.size() != sys.size()) throw ConfigError("alpha: need one image per element");
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_string()) throw ConfigError("alpha: expected element names");
        sigma[i] = element_index(sys.base, a[i].get<std::string>(), "alpha");
      }
    }
    const auto center = SubsetValue::singleton(sys.size(), star);
    auto V = powerset_converse_V(sys, star);
    auto bundle = std::make_shared<Bundle<SubsetValue, std::uint64_t, SubsetStable>>(
        Bundle<SubsetValue, std::uint64_t, SubsetStable>{powerset_flow_of(sys), center, classk_from_permutation(sigma),
                                                         std::nullopt, std::nullopt, std::nullopt});
    std::shared_ptr<const Bundle<SubsetValue, std::uint64_t, SubsetStable>> p = bundle;

    BuiltInstance b;
    add_flow_checks(b, p, ctx);
    // V is the orbit union; its envelope comes from the exhaustive search.
    b.checks["positive_definite"] = [sys, star, V, p] {
      const auto res = exhaustive_converse_check(sys, star);
      if (!res.envelope) return detail::renamed(res.report, "positive_definite[" + V.label + "]");
      return check_positive_definite(V, p->xStar, *res.envelope, p->flow.setting, 0, 0);
    };
    b.checks["decrescent"] = [V, p] { return check_decrescent(V, p->flow, 0, 0); };
    b.checks["lyapunov_theorem"] = [sys, star, V, p] {
      const auto res = exhaustive_converse_check(sys, star);
      if (!res.envelope) throw PreconditionFailed(res.report);
      auto w = verify_lyapunov_theorem(V, p->flow, p->xStar, *res.envelope, 0, 0);
      return detail::renamed(std::move(w.report), "lyapunov_theorem[" + V.label + ", alpha=" + w.alpha.label + "]");
    };
    b.checks["set_stability"] = [sys, star] {
      auto w = check_set_stability(sys, star, permutation_family(sys.size()));
      if (w.ok()) w.report.note = "alpha = " + w.alpha.label;
      return detail::renamed(std::move(w.report), "set_stability");
    };
    b.checks["exhaustive_converse"] = [sys, star] { return exhaustive_converse_check(sys, star).report; };
    b.checks["stability_iff_converse"] = [sys, star] {
      const bool s = check_set_stability(sys, star, permutation_family(sys.size())).ok();
      const bool c = exhaustive_converse_check(sys, star).report.passed;
      CheckReport r;
      r.lawName = "stability_iff_converse";
      r.samplesChecked = 1;
      r.passed = s == c;
      r.worstResidual = r.passed ? 0.0 : 1.0;
      r.note = std::string("set_stability ") + (s ? "passed" : "failed") + ", exhaustive_converse " +
               (c ? "passed" : "failed");
      if (!r.passed) r.counterexample = "x* = " + sys.base[star];
      return r;
    };

    std::vector<std::pair<std::string, std::uint64_t>> times;
    const auto k_max = distinct_iterate_bound(sys.pointMap);
    for (std::uint64_t k = 0; k <= k_max; ++k) times.emplace_back(std::to_string(k), k);
    auto withV = std::make_shared<Bundle<SubsetValue, std::uint64_t, SubsetStable>>(*bundle);
    withV->V = V;
    b.trajectories = trajectory_writer<SubsetValue, std::uint64_t, SubsetStable>(
        withV, std::move(times),
        [](const SubsetValue& u) {
          std::vector<std::string> out;
          for (std::size_t e = 0; e < u.baseSize; ++e) out.push_back(u.contains(e) ? "1" : "0");
          return out;
        },
        ctx);
    return b;
  };
  return inst;
}

inline io::GraphSpec graph_from_params(const Params& prm, const RunContext& ctx) {
  if (prm.has("graph_file") && !prm.str("graph_file").empty())
    return io::read_graph_file(resolve_path(ctx, prm.str("graph_file")));
  io::GraphSpec g;
  auto node = [&](const std::string& s) {
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
      if (g.nodes[i] == s) return i;
    g.nodes.push_back(s);
    return g.nodes.size() - 1;
  };
  for (const auto& e : prm.raw("edges")) {
    if (!e.is_array() || e.size() != 3 || !e[0].is_string() || !e[1].is_string())
      throw ConfigError("edges: expected [src, dst, weight] triples");
    double w = 0.0;
    if (e[2].is_string() && e[2].get<std::string>() == "inf") w = std::numeric_limits<double>::infinity();
    else if (e[2].is_number()) w = e[2].get<double>();
    else throw ConfigError("edges: weight must be a number or \"inf\"");
    if (!(w >= 0.0)) throw ConfigError("edges: negative weight");
    const auto s = node(e[0].get<std::string>());
    const auto d = node(e[1].get<std::string>());
    g.edges.push_back({s, d, w});
  }
  return g;
}

inline json default_path_edges() {
  json edges = json::array();
  const std::vector<std::string> names = {"a", "b", "c", "d", "e"};
  for (std::size_t i = 0; i + 1 < names.size(); ++i) {
    edges.push_back(json::array({names[i], names[i + 1], 1.0}));
    edges.push_back(json::array({names[i + 1], names[i], 1.0}));
  }
  return edges;
}

inline Instance lawvere_instance() {
  InstanceInfo info;
  info.name = "lawvere-graph";
  info.description = "finite Lawvere metric space from a weighted graph, flow by iterating a point map";
  info.params = {
      {"edges", "array", default_path_edges(), "weighted edges [src, dst, weight]; weight may be \"inf\""},
      {"graph_file", "string", "", "edge-list file 'src dst weight'; overrides edges"},
      {"symmetrize", "bool", false, "replace d(x, y) by max(d(x, y), d(y, x))"},
      {"map", "object", json{{"a", "a"}, {"b", "a"}, {"c", "b"}, {"d", "c"}, {"e", "d"}}, "point map, node -> node"},
      {"x_star", "string", "a", "equilibrium node"},
  };
  info.checks = merge_names(merge_names(kFlowChecks, kLyapunovChecks),
                            {"converse", "enriched_axioms", "enriched_distance_props", "lipschitz"});
  info.defaultChecks = {"enriched_axioms",   "enriched_distance_props",   "monoid_laws", "distance_axioms",
                        "norm_properties",   "flow_laws",                 "equilibrium", "weakly_contracting",
                        "stability_from_contraction", "lyapunov_theorem", "converse"};

  Instance inst;
  inst.info = info;
  inst.build = [info](const json& given, const RunContext& ctx) {
    const Params prm(info, given);
    const auto g = graph_from_params(prm, ctx);
    LawvereSpace space = shortest_path_closure(g.nodes, g.edges);
    if (prm.flag("symmetrize")) space = symmetrize(space);
    const auto& map = prm.raw("map");
    std::vector<std::size_t> pm(space.size(), space.size());
    for (auto it = map.begin(); it != map.end(); ++it) {
      if (!it.value().is_string()) throw ConfigError("map: images must be node names");
      pm[element_index(space.objects, it.key(), "map")] =
          element_index(space.objects, it.value().get<std::string>(), "map");
    }
    for (std::size_t i = 0; i < pm.size(); ++i)
      if (pm[i] == space.size()) throw ConfigError("map: no image for '" + space.objects[i] + "'");
    const auto star = element_index(space.objects, prm.str("x_star"), "x_star");

    using R = ExtendedNonnegReal;
    auto flow = lawvere_flow(space, pm);
    CandidateV<std::size_t, R> V{[space, star](std::size_t x) { return space(star, x); }, "hom(x*,x)"};
    auto bundle = std::make_shared<Bundle<std::size_t, std::uint64_t, ExtendedRealStable>>(
        Bundle<std::size_t, std::uint64_t, ExtendedRealStable>{
            flow, star, identity_class_k<R>(), V, Envelope<R>{identity_class_k<R>(), identity_class_k<R>()},
            HorizonPolicy<std::uint64_t>{HorizonMode::ExhaustiveFinite, 0, 1, 1.0}});
    std::shared_ptr<const Bundle<std::size_t, std::uint64_t, ExtendedRealStable>> p = bundle;

    BuiltInstance b;
    add_flow_checks(b, p, ctx);
    b.checks["enriched_axioms"] = [space] { return check_enriched_axioms(space); };
    b.checks["enriched_distance_props"] = [space] { return check_enriched_distance_props(space); };
    b.checks["lipschitz"] = [space, pm] {
      const auto k = lipschitz_constant(pm, space, space);
      CheckReport r;
      r.lawName = "lipschitz[K<=1]";
      r.samplesChecked = space.size() * space.size();
      r.passed = k <= ExtendedNonnegReal(1.0);
      r.worstResidual = k.value() - 1.0;
      r.note = "K = " + describe(k);
      if (!r.passed) r.counterexample = "K = " + describe(k);
      return r;
    };

    std::vector<std::pair<std::string, std::uint64_t>> times;
    for (std::uint64_t k = 0; k <= distinct_iterate_bound(pm); ++k) times.emplace_back(std::to_string(k), k);
    b.trajectories = trajectory_writer<std::size_t, std::uint64_t, ExtendedRealStable>(
        p, std::move(times), [space](std::size_t x) { return std::vector<std::string>{space.objects[x]}; }, ctx);
    return b;
  };
  return inst;
}

}  // namespace builtin

inline Registry builtin_registry() {
  using namespace builtin;
  Registry r;
  r.add(ode_instance("linear-decay", "x' = -x on R, equilibrium 0", 0.5));
  r.add(ode_instance("linear-growth", "x' = x on R, unstable equilibrium 0", 0.5));
  r.add(ode_instance("rotation", "x' = -y, y' = x on R^2, equilibrium 0", 1.0));
  r.add(map_instance("halving-map", "x -> x/2 on R, equilibrium 0", make_halving, {}, {0.0}, "||x||"));
  r.add(map_instance("affine-map", "x -> 0.9 x + 0.1 on R, equilibrium 1", make_affine, {}, {1.0}, "||x||"));
  r.add(map_instance("rotation-map", "rotation of R^2 by a fixed angle, equilibrium 0", make_rotation_map,
                     {{"angle", "number", 0.5, "rotation angle in radians"}}, {0.0, 0.0}, "||x||^2"));
  r.add(kalman_instance("kalman-scalar", "scalar discrete Riccati recursion on SPD(1)", 1.0, 1.0, 1.0,
                        (std::sqrt(5.0) - 1.0) / 2.0));
  r.add(kalman_instance("kalman", "discrete Riccati recursion on SPD(n) for a model (A, F, C)",
                        json::array({json::array({1.0, 0.1}), json::array({0.0, 1.0})}),
                        json::array({json::array({1.0, 0.0}), json::array({0.0, 1.0})}),
                        json::array({json::array({1.0, 0.0})}), nullptr));
  r.add(powerset_instance());
  r.add(lawvere_instance());
  return r;
}

// ---------------------------------------------------------------------------
// Listing.

inline std::string list_instances(const Registry& registry, bool as_json) {
  if (as_json) {
    json out = json::array();
    for (const auto& inst : registry.instances()) {
      json params = json::array();
      for (const auto& p : inst.info.params)
        params.push_back({{"name", p.name}, {"type", p.type}, {"default", p.defaultValue}, {"description", p.description}});
      out.push_back({{"name", inst.info.name},
                     {"description", inst.info.description},
                     {"parameters", params},
                     {"checks", inst.info.checks},
                     {"defaultChecks", inst.info.defaultChecks}});
    }
    return out.dump(2) + "\n";
  }
  std::ostringstream os;
  for (const auto& inst : registry.instances()) {
    os << inst.info.name << "  " << inst.info.description << '\n';
    for (const auto& p : inst.info.params)
      os << "    " << p.name << " (" << p.type << ", default " << p.defaultValue.dump() << ")  " << p.description
         << '\n';
    os << "    checks:";
    for (const auto& c : inst.info.checks) os << ' ' << c;
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Running a scenario.

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> tolerance;
  std::optional<std::string> reportPath;
};

inline json residual_json(double r) {
  if (std::isfinite(r)) return r;
  if (std::isnan(r)) return "nan";
  return r > 0 ? "inf" : "-inf";
}

inline json report_json(const std::string& check, const CheckReport& r, double wall) {
  json j;
  j["check"] = check;
  j["lawName"] = r.lawName;
  j["passed"] = r.passed;
  j["inconclusive"] = r.inconclusive;
  j["samplesChecked"] = r.samplesChecked;
  j["worstResidual"] = residual_json(r.worstResidual);
  j["counterexample"] = r.counterexample ? json(*r.counterexample) : json(nullptr);
  j["note"] = r.note;
  j["wallTime"] = wall;
  return j;
}

namespace detail {

struct ConfigView {
  std::string instance;
  json parameters;
  std::vector<std::string> checks;
  RunContext ctx;
  std::optional<std::string> report;
  std::optional<std::string> trajectories;
};

inline ConfigView parse_config(const std::string& path, const Overrides& ov, const Registry& registry,
                               const Instance*& inst) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> known = {"schema_version", "instance", "parameters", "checks", "seed",
                                                 "samples", "trajectory_samples", "report", "trajectories",
                                                 "description"};
  for (auto it = cfg.begin(); it != cfg.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ConfigError("config: unknown key '" + it.key() + "'");
  if (!cfg.contains("schema_version") || cfg["schema_version"] != kSchemaVersion)
    throw ConfigError("config: schema_version must be " + std::to_string(kSchemaVersion));
  if (!cfg.contains("instance") || !cfg["instance"].is_string()) throw ConfigError("config: missing instance name");

  ConfigView v;
  v.instance = cfg["instance"].get<std::string>();
  inst = registry.find(v.instance);
  if (!inst) throw ConfigError("unknown instance '" + v.instance + "'");
  v.parameters = cfg.value("parameters", json::object());

  auto as_count = [&](const char* key, std::uint64_t dflt) -> std::uint64_t {
    if (!cfg.contains(key)) return dflt;
    const auto& x = cfg[key];
    if (!x.is_number_unsigned() && !(x.is_number_integer() && x.get<std::int64_t>() >= 0))
      throw ConfigError(std::string("config: ") + key + " must be a non-negative integer");
    return x.get<std::uint64_t>();
  };
  v.ctx.seed = ov.seed.value_or(as_count("seed", 1));
  v.ctx.samples = as_count("samples", 1000);
  v.ctx.trajectorySamples = as_count("trajectory_samples", 3);
  v.ctx.tolerance = ov.tolerance;
  v.ctx.baseDir = std::filesystem::absolute(std::filesystem::path(path)).parent_path();

  if (cfg.contains("checks")) {
    if (!cfg["checks"].is_array()) throw ConfigError("config: checks must be an array");
    for (const auto& c : cfg["checks"]) {
      if (!c.is_string()) throw ConfigError("config: check names must be strings");
      v.checks.push_back(c.get<std::string>());
    }
  } else {
    v.checks = inst->info.defaultChecks;
  }
  for (const auto& c : v.checks)
    if (std::find(inst->info.checks.begin(), inst->info.checks.end(), c) == inst->info.checks.end())
      throw ConfigError("instance '" + v.instance + "' has no check '" + c + "'");

  auto out_path = [&](const char* key) -> std::optional<std::string> {
    if (!cfg.contains(key)) return std::nullopt;
    if (!cfg[key].is_string()) throw ConfigError(std::string("config: ") + key + " must be a path");
    std::filesystem::path p(cfg[key].get<std::string>());
    if (p.is_relative()) p = v.ctx.baseDir / p;
    return p.string();
  };
  v.report = ov.reportPath ? ov.reportPath : out_path("report");
  v.trajectories = out_path("trajectories");
  return v;
}

inline void write_file(const std::string& path, const std::string& text) {
  const auto tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace detail

// Runs the checks named in the config in order. The JSON report is rewritten
// after every check. Progress lines go to `log`; the report goes to `out`
// when the config names no report file.
inline int run_scenario(const Registry& registry, const std::string& config_path, const Overrides& ov,
                        std::ostream& log, std::ostream& out) {
  json report;
  std::optional<std::string> report_path;
  auto flush = [&] {
    if (report_path) detail::write_file(*report_path, report.dump(2) + "\n");
  };
  auto finish = [&](int code, std::optional<std::string> error) {
    report["complete"] = true;
    report["exitCode"] = code;
    report["error"] = error ? json(*error) : json(nullptr);
    if (report_path) {
      try {
        flush();
      } catch (const ConfigError& e) {
        log << "error: " << e.what() << '\n';
        return static_cast<int>(kExitConfig);
      }
    } else if (!report.is_null()) {
      out << report.dump(2) << '\n';
    }
    return code;
  };

  detail::ConfigView cfg;
  const Instance* inst = nullptr;
  try {
    cfg = detail::parse_config(config_path, ov, registry, inst);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  report_path = cfg.report;
  report["schema_version"] = kSchemaVersion;
  report["instance"] = cfg.instance;
  report["seed"] = cfg.ctx.seed;
  report["samples"] = cfg.ctx.samples;
  report["tolerance"] = cfg.ctx.tolerance ? json(*cfg.ctx.tolerance) : json(nullptr);
  report["complete"] = false;
  report["checks"] = json::array();

  BuiltInstance built;
  try {
    built = inst->build(cfg.parameters, cfg.ctx);
    flush();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return finish(kExitConfig, std::string("config error: ") + e.what());
  } catch (const NumericError& e) {
    log << "numeric error: " << e.what() << '\n';
    return finish(kExitNumeric, std::string("numeric error: ") + e.what());
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return finish(kExitConfig, std::string("error: ") + e.what());
  }

  bool all_passed = true;
  for (const auto& name : cfg.checks) {
    const auto it = built.checks.find(name);
    if (it == built.checks.end()) return finish(kExitConfig, "check '" + name + "' not available");
    const auto start = std::chrono::steady_clock::now();
    CheckReport r;
    std::optional<std::pair<int, std::string>> abort;
    try {
      r = it->second();
    } catch (const PreconditionFailed& e) {
      r = e.report;
      r.lawName = name + "[precondition " + e.report.lawName + "]";
      r.passed = false;
      r.note = "precondition " + e.report.lawName + " failed" + (e.report.note.empty() ? "" : ": " + e.report.note);
    } catch (const InconclusiveTail& e) {
      r.lawName = name;
      r.passed = false;
      r.inconclusive = true;
      r.note = e.what();
    } catch (const NumericError& e) {
      r.lawName = name;
      r.passed = false;
      r.worstResidual = std::numeric_limits<double>::infinity();
      r.note = std::string("numeric error: ") + e.what();
      abort = {kExitNumeric, r.note};
    } catch (const ConfigError& e) {
      r.lawName = name;
      r.passed = false;
      r.note = std::string("config error: ") + e.what();
      abort = {kExitConfig, r.note};
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report["checks"].push_back(report_json(name, r, wall));
    all_passed = all_passed && r.passed;
    log << (r.passed ? "PASS " : (r.inconclusive ? "INCONCLUSIVE " : "FAIL ")) << name << "  " << r.lawName
        << "  samples=" << r.samplesChecked << " worst=" << describe(r.worstResidual);
    if (r.counterexample) log << "  counterexample: " << *r.counterexample;
    if (!r.note.empty()) log << "  (" << r.note << ")";
    log << '\n';
    if (abort) return finish(abort->first, abort->second);
    try {
      flush();
    } catch (const ConfigError& e) {
      log << "error: " << e.what() << '\n';
      return kExitConfig;
    }
  }

  if (cfg.trajectories && built.trajectories) {
    try {
      std::ostringstream csv;
      built.trajectories(csv);
      detail::write_file(*cfg.trajectories, csv.str());
    } catch (const ConfigError& e) {
      return finish(kExitConfig, std::string("config error: ") + e.what());
    } catch (const NumericError& e) {
      return finish(kExitNumeric, std::string("numeric error: ") + e.what());
    }
  }
  return finish(all_passed ? kExitOk : kExitCheckFailed, std::nullopt);
}

}  // namespace lyap::scenario
