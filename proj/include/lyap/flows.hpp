#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "lyap/classk.hpp"
#include "lyap/core/setting.hpp"

namespace lyap {

// An action of the time monoid on the space: act(unit, x) = x and
// act(s, act(t, x)) = act(s + t, x).
template <class E, class T, class S>
struct Flow {
  Setting<E, T, S> setting;
  std::function<E(const T&, const E&)> act;
  double evaluationTolerance = 0.0;
  std::string label;

  E operator()(const T& t, const E& x) const { return act(t, x); }
};

template <class E>
struct EquilibriumWitness {
  E point;
  std::size_t checkedTimes = 0;
  double worstResidual = 0.0;
  CheckReport report;

  bool ok() const { return report.passed; }
};

// `alpha` is meaningful only when report.passed.
template <class R>
struct StabilityWitness {
  ClassKMorphism<R> alpha;
  CheckReport report;

  bool ok() const { return report.passed; }
};

namespace detail {

template <class E, class T, class S>
double point_gap(const Flow<E, T, S>& flow, const E& a, const E& b) {
  return flow.setting.stable.magnitude(flow.setting.distance(a, b));
}

}  // namespace detail

template <class E, class T, class S>
CheckReport check_flow_laws(const Flow<E, T, S>& flow, std::uint64_t seed, std::size_t sample_count) {
  const auto& setting = flow.setting;
  const double tol = flow.evaluationTolerance;

  ReportBuilder init("flow_initialization", tol);
  for (const auto& x : setting.space.draw(mix_seed(seed, 30), sample_count)) {
    init.guard(
        [&] {
          const double r = detail::point_gap(flow, flow.act(setting.time.unit, x), x);
          init.observe(r, !(r <= tol), [&] { return describe_tuple(setting.time.unit, x); });
        },
        [&] { return describe_tuple(setting.time.unit, x); });
  }

  ReportBuilder comp("flow_composition", tol);
  for (const auto& [s, t, x] :
       sample_triples(setting.time.sampler, setting.time.sampler, setting.space, seed, sample_count)) {
    comp.guard(
        [&] {
          const E stepwise = flow.act(s, flow.act(t, x));
          const E direct = flow.act(setting.time.op(s, t), x);
          const double r = detail::point_gap(flow, stepwise, direct);
          comp.observe(r, !(r <= tol), [&] { return describe_tuple(s, t, x); });
        },
        [&] { return describe_tuple(s, t, x); });
  }
  return merge("flow_laws", std::move(init).finish(), std::move(comp).finish());
}

// p(phi_X(t, x)) = phi_Y(t, p(x)).
template <class EX, class EY, class T, class SX, class SY>
CheckReport check_flow_morphism(const std::function<EY(const EX&)>& p, const Flow<EX, T, SX>& flow_x,
                                const Flow<EY, T, SY>& flow_y, std::uint64_t seed,
                                std::size_t sample_count) {
  if (flow_x.setting.time.name != flow_y.setting.time.name)
    throw ConfigError("flow morphism between different time monoids: " + flow_x.setting.time.name +
                      " vs " + flow_y.setting.time.name);
  const double tol = std::max(flow_x.evaluationTolerance, flow_y.evaluationTolerance);
  ReportBuilder b("flow_morphism", tol);
  for (const auto& [t, x] : sample_pairs(flow_x.setting.time.sampler, flow_x.setting.space, seed, sample_count)) {
    b.guard(
        [&] {
          const double r = detail::point_gap(flow_y, p(flow_x.act(t, x)), flow_y.act(t, p(x)));
          b.observe(r, !(r <= tol), [&] { return describe_tuple(t, x); });
        },
        [&] { return describe_tuple(t, x); });
  }
  return std::move(b).finish();
}

// d(phi(t, x*), x*) = 0 for sampled t.
template <class E, class T, class S>
EquilibriumWitness<E> check_equilibrium(const Flow<E, T, S>& flow, const E& x_star, std::uint64_t seed,
                                        std::size_t time_sample_count) {
  const double tol = flow.evaluationTolerance;
  ReportBuilder b("equilibrium", tol);
  for (const auto& t : flow.setting.time.sampler.draw(mix_seed(seed, 31), time_sample_count)) {
    b.guard(
        [&] {
          const double r = detail::point_gap(flow, flow.act(t, x_star), x_star);
          b.observe(r, !(r <= tol), [&] { return describe(t); });
        },
        [&] { return describe(t); });
  }
  EquilibriumWitness<E> w{x_star, 0, 0.0, std::move(b).finish()};
  w.checkedTimes = w.report.samplesChecked;
  w.worstResidual = w.report.worstResidual;
  return w;
}

// ||phi(t, x)|| <= alpha(||x||) on sampled (t, x).
template <class E, class T, class S>
StabilityWitness<typename S::value_type> check_stable(const Flow<E, T, S>& flow, const E& x_star,
                                                      const ClassKMorphism<typename S::value_type>& alpha,
                                                      std::uint64_t seed, std::size_t sample_count) {
  const auto& setting = flow.setting;
  const auto& stable = setting.stable;
  ReportBuilder b("stable[alpha=" + alpha.label + "]", stable.tolerance);
  for (const auto& [t, x] : sample_pairs(setting.time.sampler, setting.space, seed, sample_count)) {
    b.guard(
        [&] {
          const auto lhs = norm(setting, x_star, flow.act(t, x));
          const auto rhs = alpha(norm(setting, x_star, x));
          b.observe(stable.excess(lhs, rhs), !leq(stable, lhs, rhs), [&] { return describe_tuple(t, x); });
        },
        [&] { return describe_tuple(t, x); });
  }
  return {alpha, std::move(b).finish()};
}

// d(phi(t, x), phi(t, y)) <= d(x, y) on sampled (t, x, y).
template <class E, class T, class S>
CheckReport check_weakly_contracting(const Flow<E, T, S>& flow, std::uint64_t seed, std::size_t sample_count) {
  const auto& setting = flow.setting;
  const auto& stable = setting.stable;
  ReportBuilder b("weakly_contracting", stable.tolerance);
  for (const auto& [t, x, y] : sample_triples(setting.time.sampler, setting.space, setting.space, seed, sample_count)) {
    b.guard(
        [&] {
          const auto after = setting.distance(flow.act(t, x), flow.act(t, y));
          const auto before = setting.distance(x, y);
          b.observe(stable.excess(after, before), !leq(stable, after, before),
                    [&] { return describe_tuple(t, x, y); });
        },
        [&] { return describe_tuple(t, x, y); });
  }
  return std::move(b).finish();
}

// A weakly contracting flow is stable at any equilibrium with alpha = id.
// Both premises are checked on the same seed; the returned witness carries
// the report of re-running check_stable with alpha = id.
template <class E, class T, class S>
StabilityWitness<typename S::value_type> stability_from_contraction(const Flow<E, T, S>& flow, const E& x_star,
                                                                    std::uint64_t seed,
                                                                    std::size_t sample_count) {
  auto contracting = check_weakly_contracting(flow, seed, sample_count);
  if (!contracting.passed) throw PreconditionFailed(std::move(contracting));
  auto eq = check_equilibrium(flow, x_star, seed, sample_count);
  if (!eq.ok()) throw PreconditionFailed(std::move(eq.report));
  return check_stable(flow, x_star, identity_class_k<typename S::value_type>(), seed, sample_count);
}

struct EpsilonDeltaResult {
  CheckReport report;
  std::vector<double> deltas;
};

// Uniform sample from the closed ball of radius r about c.
inline Vec sample_ball(Rng& rng, const Vec& c, double r) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec dir(c.size());
  double len = 0.0;
  do {
    len = 0.0;
    for (auto& d : dir) {
      d = gauss(rng);
      len += d * d;
    }
  } while (len == 0.0);
  len = std::sqrt(len);
  const double radius = r * std::pow(std::uniform_real_distribution<double>(0.0, 1.0)(rng),
                                     1.0 / static_cast<double>(c.size()));
  Vec x(c);
  for (std::size_t i = 0; i < c.size(); ++i) x[i] += radius * dir[i] / len;
  return x;
}

// Classical reading of a stability witness: with delta = alpha^-1(eps),
// ||x - x*|| <= delta implies ||phi(t, x) - x*|| <= eps.
template <class T, class S>
EpsilonDeltaResult epsilon_delta_check(const Flow<Vec, T, S>& flow, const Vec& x_star,
                                       const StabilityWitness<double>& witness,
                                       const std::vector<double>& epsilons, std::uint64_t seed,
                                       std::size_t samples_per_epsilon = 200) {
  static_assert(std::is_same_v<typename S::value_type, double>, "epsilon-delta needs a real stable object");
  const auto& setting = flow.setting;
  const auto& stable = setting.stable;
  ReportBuilder b("epsilon_delta", stable.tolerance);
  EpsilonDeltaResult out;
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    const double eps = epsilons[k];
    const double delta = witness.alpha.inverse(eps);
    out.deltas.push_back(delta);
    Sampler<Vec> ball{{x_star}, [&](Rng& rng) { return sample_ball(rng, x_star, delta); }};
    for (const auto& [t, x] : sample_pairs(setting.time.sampler, ball, mix_seed(seed, 40 + k), samples_per_epsilon)) {
      b.guard(
          [&] {
            const double dist = norm(setting, x_star, flow.act(t, x));
            b.observe(dist - eps, !leq(stable, dist, eps),
                      [&] { return "eps=" + describe(eps) + " " + describe_tuple(t, x); });
          },
          [&] { return describe_tuple(t, x); });
    }
  }
  out.report = std::move(b).finish();
  return out;
}

}  // namespace lyap
