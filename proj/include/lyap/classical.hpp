#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <utility>

#include "lyap/flows.hpp"
#include "lyap/lyapunov.hpp"

namespace lyap {

enum class Integrator { RK4 };

// x' = f(x) on R^n.
struct OdeSystem {
  std::string name;
  std::size_t dimension = 1;
  std::function<Vec(const Vec&)> vectorField;
  double stepSize = 0.05;
  Integrator integrator = Integrator::RK4;
};

// x_{k+1} = F(x_k) on R^n.
struct DiscreteSystem {
  std::string name;
  std::size_t dimension = 1;
  std::function<Vec(const Vec&)> step;
};

inline double euclidean_distance(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw ConfigError("euclidean_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

namespace detail {

inline Vec axpy(const Vec& x, double a, const Vec& y) {
  Vec out(x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += a * y[i];
  return out;
}

inline Vec rk4_step(const std::function<Vec(const Vec&)>& f, const Vec& x, double h) {
  const Vec k1 = f(x);
  const Vec k2 = f(axpy(x, 0.5 * h, k1));
  const Vec k3 = f(axpy(x, 0.5 * h, k2));
  const Vec k4 = f(axpy(x, h, k3));
  Vec out(x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

// Remainders below this fraction of h are absorbed into the last full step.
inline constexpr double kPartialStepFloor = 1e-12;

}  // namespace detail

// Fixed-step RK4 from 0 to t; the final partial step is shortened.
inline Vec integrate_flow(const OdeSystem& ode, double t, const Vec& x) {
  if (!(t >= 0.0)) throw DomainError("integrate_flow: negative time " + describe(t));
  if (x.size() != ode.dimension) throw ConfigError("integrate_flow: state dimension mismatch");
  const double h = ode.stepSize;
  const auto full = static_cast<std::size_t>(std::floor(t / h));
  double rest = t - static_cast<double>(full) * h;
  Vec y = x;
  for (std::size_t k = 0; k < full; ++k) {
    y = detail::rk4_step(ode.vectorField, y, h);
    for (double v : y)
      if (!std::isfinite(v))
        throw NumericError("integrate_flow: non-finite state at t=" + describe(static_cast<double>(k + 1) * h));
  }
  if (rest > detail::kPartialStepFloor * h) {
    y = detail::rk4_step(ode.vectorField, y, rest);
    for (double v : y)
      if (!std::isfinite(v)) throw NumericError("integrate_flow: non-finite state at t=" + describe(t));
  }
  return y;
}

inline Vec discrete_flow(const DiscreteSystem& sys, std::uint64_t k, const Vec& x) {
  Vec y = x;
  for (std::uint64_t i = 0; i < k; ++i) y = sys.step(y);
  return y;
}

struct EuclideanOptions {
  double radius = 2.0;        // samples drawn from the box [-radius, radius]^n
  double tolerance = 1e-6;    // order tolerance on R>=0 and flow-law tolerance
  double horizon = 20.0;      // continuous time H
  double grid = 0.05;         // continuous time grid h
  std::uint64_t max_steps = 20;  // discrete time sampled on {0..max_steps}
};

inline Sampler<Vec> box_sampler(std::size_t dim, double radius, std::optional<Vec> include = std::nullopt) {
  Sampler<Vec> s;
  if (include) s.points.push_back(*include);
  s.generate = [dim, radius](Rng& rng) {
    std::uniform_real_distribution<double> u(-radius, radius);
    Vec x(dim);
    for (auto& v : x) v = u(rng);
    return x;
  };
  return s;
}

inline RealStable real_stable(double tolerance, double scale = 10.0) {
  RealStable r;
  r.tolerance = tolerance;
  r.sample_scale = scale;
  return r;
}

inline Setting<Vec, double, RealStable> continuous_setting(std::size_t dim, const EuclideanOptions& o = {}) {
  Setting<Vec, double, RealStable> s;
  s.name = "euclidean-continuous";
  s.space = box_sampler(dim, o.radius);
  s.time = continuous_time(o.horizon, o.grid);
  s.stable = real_stable(o.tolerance);
  s.distance = euclidean_distance;
  return s;
}

inline Setting<Vec, std::uint64_t, RealStable> discrete_setting(std::size_t dim, const EuclideanOptions& o = {}) {
  Setting<Vec, std::uint64_t, RealStable> s;
  s.name = "euclidean-discrete";
  s.space = box_sampler(dim, o.radius);
  s.time = natural_time(o.max_steps);
  s.stable = real_stable(o.tolerance);
  s.distance = euclidean_distance;
  return s;
}

inline Flow<Vec, double, RealStable> ode_flow(const OdeSystem& ode, const EuclideanOptions& o = {}) {
  return {continuous_setting(ode.dimension, o), [ode](double t, const Vec& x) { return integrate_flow(ode, t, x); },
          o.tolerance, ode.name};
}

inline Flow<Vec, std::uint64_t, RealStable> map_flow(const DiscreteSystem& sys, const EuclideanOptions& o = {}) {
  // Iteration is exact: the same floating-point operations in the same order.
  return {discrete_setting(sys.dimension, o),
          [sys](std::uint64_t k, const Vec& x) { return discrete_flow(sys, k, x); }, 0.0, sys.name};
}

// V(F(x)) - V(x) <= 0 on samples.
inline CheckReport check_discrete_lyapunov(const CandidateV<Vec, double>& V, const DiscreteSystem& sys,
                                           const Sampler<Vec>& domain, double tolerance, std::uint64_t seed,
                                           std::size_t sample_count) {
  ReportBuilder b("discrete_lyapunov[" + V.label + "]", tolerance);
  for (const auto& x : domain.draw(mix_seed(seed, 60), sample_count)) {
    b.guard(
        [&] {
          const double grad = V(sys.step(x)) - V(x);
          b.observe(grad, grad > tolerance, [&] { return describe(x); });
        },
        [&] { return describe(x); });
  }
  return std::move(b).finish();
}

inline CheckReport check_discrete_lyapunov(const CandidateV<Vec, double>& V, const DiscreteSystem& sys,
                                           std::uint64_t seed, std::size_t sample_count) {
  return check_discrete_lyapunov(V, sys, box_sampler(sys.dimension, 2.0), 1e-12, seed, sample_count);
}

// Directional derivative of V along f by central differences:
//   (V(x + s f(x)) - V(x - s f(x))) / 2s <= tol * (1 + |V(x)|).
inline CheckReport check_derivative_condition(const CandidateV<Vec, double>& V, const OdeSystem& ode,
                                              const Sampler<Vec>& domain, std::uint64_t seed,
                                              std::size_t sample_count, double fd_step = 1e-5,
                                              double tolerance = 1e-6) {
  ReportBuilder b("derivative_condition[" + V.label + "]", tolerance);
  for (const auto& x : domain.draw(mix_seed(seed, 61), sample_count)) {
    b.guard(
        [&] {
          const Vec fx = ode.vectorField(x);
          const double dv = (V(detail::axpy(x, fd_step, fx)) - V(detail::axpy(x, -fd_step, fx))) / (2.0 * fd_step);
          const double allowed = tolerance * (1.0 + std::abs(V(x)));
          b.observe(dv - allowed, dv > allowed, [&] { return describe(x); });
        },
        [&] { return describe(x); });
  }
  return std::move(b).finish();
}

inline CheckReport check_derivative_condition(const CandidateV<Vec, double>& V, const OdeSystem& ode,
                                              std::uint64_t seed, std::size_t sample_count,
                                              double fd_step = 1e-5) {
  return check_derivative_condition(V, ode, box_sampler(ode.dimension, 2.0), seed, sample_count, fd_step);
}

// Companion to check_derivative_condition: the finite-difference derivative
// agrees with the flow difference quotient (V(phi(tau, x)) - V(x)) / tau,
// within tau * scale * (1 + |V(x)|).
inline CheckReport check_derivative_agreement(const CandidateV<Vec, double>& V, const OdeSystem& ode,
                                              const Sampler<Vec>& domain, std::uint64_t seed,
                                              std::size_t sample_count, double fd_step = 1e-5,
                                              double tau = 1e-4, double scale = 10.0) {
  ReportBuilder b("derivative_agreement[" + V.label + "]");
  for (const auto& x : domain.draw(mix_seed(seed, 62), sample_count)) {
    b.guard(
        [&] {
          const Vec fx = ode.vectorField(x);
          const double dv = (V(detail::axpy(x, fd_step, fx)) - V(detail::axpy(x, -fd_step, fx))) / (2.0 * fd_step);
          const double quotient = (V(integrate_flow(ode, tau, x)) - V(x)) / tau;
          const double allowed = tau * scale * (1.0 + std::abs(V(x)));
          const double gap = std::abs(dv - quotient);
          b.observe(gap - allowed, gap > allowed, [&] { return describe(x); });
        },
        [&] { return describe(x); });
  }
  return std::move(b).finish();
}

// ---------------------------------------------------------------------------
// Named systems

inline OdeSystem linear_decay(double h = 0.05) {
  return {"linear-decay", 1, [](const Vec& x) { return Vec{-x[0]}; }, h};
}

inline OdeSystem linear_growth(double h = 0.05) {
  return {"linear-growth", 1, [](const Vec& x) { return Vec{x[0]}; }, h};
}

inline OdeSystem rotation(double h = 0.05) {
  return {"rotation", 2, [](const Vec& x) { return Vec{-x[1], x[0]}; }, h};
}

inline DiscreteSystem halving_map() {
  return {"halving-map", 1, [](const Vec& x) { return Vec{x[0] / 2.0}; }};
}

// F(x) = 0.9 x + 0.1, fixed point 1.
inline DiscreteSystem affine_map() {
  return {"affine-map", 1, [](const Vec& x) { return Vec{0.9 * x[0] + 0.1}; }};
}

inline DiscreteSystem rotation_map(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {"rotation-map", 2, [c, s](const Vec& x) { return Vec{c * x[0] - s * x[1], s * x[0] + c * x[1]}; }};
}

inline std::optional<OdeSystem> named_ode(const std::string& name, double h = 0.05) {
  if (name == "linear-decay") return linear_decay(h);
  if (name == "linear-growth") return linear_growth(h);
  if (name == "rotation") return rotation(h);
  return std::nullopt;
}

inline std::optional<DiscreteSystem> named_map(const std::string& name) {
  if (name == "halving-map") return halving_map();
  if (name == "affine-map") return affine_map();
  return std::nullopt;
}

// Common candidate functions.
inline CandidateV<Vec, double> squared_norm_V(Vec center = {}) {
  return {[center](const Vec& x) {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
              const double d = x[i] - (center.empty() ? 0.0 : center[i]);
              s += d * d;
            }
            return s;
          },
          "||x||^2"};
}

inline CandidateV<Vec, double> norm_V(Vec center = {}) {
  return {[center](const Vec& x) { return euclidean_distance(x, center.empty() ? Vec(x.size(), 0.0) : center); },
          "||x||"};
}

}  // namespace lyap
