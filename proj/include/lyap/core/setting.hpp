#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>

#include "lyap/core/describe.hpp"
#include "lyap/core/report.hpp"
#include "lyap/core/sampler.hpp"
#include "lyap/core/stable.hpp"

namespace lyap {

enum class TimeKind { DiscreteExhaustive, DiscreteSampled, ContinuousSampled };

// The monoid T acting on the space.
template <class T>
struct TimeMonoid {
  std::string name;
  std::function<T(const T&, const T&)> op;
  T unit{};
  Sampler<T> sampler;
  TimeKind kind = TimeKind::DiscreteSampled;
  // Distance between two time values, used for law residuals.
  std::function<double(const T&, const T&)> gap;
  double tolerance = 0.0;

  T combine(const T& a, const T& b) const { return op(a, b); }
};

// (Z>=0, +, 0). `points` are enumerated exactly; `generated_max` > 0 adds
// uniform draws from [0, generated_max].
inline TimeMonoid<std::uint64_t> natural_time(std::uint64_t exhaustive_upto,
                                              std::uint64_t generated_max = 0) {
  TimeMonoid<std::uint64_t> m;
  m.name = "naturals";
  m.op = [](std::uint64_t a, std::uint64_t b) { return a + b; };
  m.unit = 0;
  for (std::uint64_t k = 0; k <= exhaustive_upto; ++k) m.sampler.points.push_back(k);
  if (generated_max > 0) {
    m.sampler.generate = [generated_max](Rng& rng) {
      return std::uniform_int_distribution<std::uint64_t>(0, generated_max)(rng);
    };
    m.kind = TimeKind::DiscreteSampled;
  } else {
    m.kind = TimeKind::DiscreteExhaustive;
  }
  m.gap = [](std::uint64_t a, std::uint64_t b) {
    return static_cast<double>(a > b ? a - b : b - a);
  };
  return m;
}

// (R>=0, +, 0) sampled on the grid {0, h, ..., H} plus uniform draws in [0, H].
inline TimeMonoid<double> continuous_time(double horizon, double grid_step,
                                          double tolerance = 1e-12) {
  TimeMonoid<double> m;
  m.name = "nonneg-reals";
  m.op = [](double a, double b) { return a + b; };
  m.unit = 0.0;
  const auto steps = static_cast<std::size_t>(std::llround(horizon / grid_step));
  for (std::size_t k = 0; k <= steps; ++k) m.sampler.points.push_back(grid_step * static_cast<double>(k));
  m.sampler.generate = [horizon](Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, horizon)(rng);
  };
  m.kind = TimeKind::ContinuousSampled;
  m.gap = [](double a, double b) { return std::abs(a - b); };
  m.tolerance = tolerance;
  return m;
}

// Which argument of the distance receives the reference point in a norm.
enum class NormOrder {
  PointThenCenter,  // ||x|| = d(x, x*)
  CenterThenPoint,  // ||x|| = hom(x*, x), the enriched convention
};

// The bundle (E, T, R, d): space sampler, time monoid, stable object, distance.
template <class E, class T, StableSpace S>
struct Setting {
  using space_type = E;
  using time_type = T;
  using stable_type = S;
  using value_type = typename S::value_type;

  std::string name;
  Sampler<E> space;
  TimeMonoid<T> time;
  S stable;
  std::function<value_type(const E&, const E&)> distance;
  // Point equality; defaults to operator== when left empty.
  std::function<bool(const E&, const E&)> same;
  NormOrder normOrder = NormOrder::PointThenCenter;

  bool equal_points(const E& a, const E& b) const {
    if (same) return same(a, b);
    if constexpr (std::equality_comparable<E>) {
      return a == b;
    } else {
      throw ConfigError("setting '" + name + "' has no point equality");
    }
  }
};

template <class E, class T, class S>
typename S::value_type norm(const Setting<E, T, S>& setting, const E& x_star, const E& x) {
  return setting.normOrder == NormOrder::PointThenCenter ? setting.distance(x, x_star)
                                                         : setting.distance(x_star, x);
}

// ---------------------------------------------------------------------------
// Axiom checks

template <class T>
CheckReport check_monoid_laws(const TimeMonoid<T>& time, std::uint64_t seed,
                              std::size_t sample_count) {
  if (!time.op || !time.gap) throw ConfigError("time monoid '" + time.name + "' incomplete");
  const auto samples = time.sampler.draw(mix_seed(seed, 10), sample_count);
  if (samples.empty()) throw ConfigError("time monoid '" + time.name + "' has no samples");

  ReportBuilder unit("monoid_unit", time.tolerance);
  for (const auto& t : samples) {
    const double left = time.gap(time.op(time.unit, t), t);
    const double right = time.gap(time.op(t, time.unit), t);
    const double r = std::max(left, right);
    unit.observe(r, !(r <= time.tolerance), [&] { return describe_tuple(time.unit, t); });
  }

  ReportBuilder assoc("monoid_associativity", time.tolerance);
  for (const auto& [a, b, c] : sample_triples(time.sampler, time.sampler, time.sampler, seed,
                                              sample_count)) {
    const double r = time.gap(time.op(time.op(a, b), c), time.op(a, time.op(b, c)));
    assoc.observe(r, !(r <= time.tolerance), [&] { return describe_tuple(a, b, c); });
  }
  return merge("monoid_laws", std::move(unit).finish(), std::move(assoc).finish());
}

// Reflexivity, antisymmetry, transitivity and flip-symmetry of compare.
template <StableSpace S>
CheckReport check_partial_order(const S& stable, std::uint64_t seed, std::size_t sample_count) {
  const auto vals = stable.values();
  ReportBuilder b("partial_order");
  for (const auto& a : vals.draw(mix_seed(seed, 11), sample_count))
    b.observe_exact(stable.compare(a, a) != PosetCompare::Equal, describe_tuple(a, a));
  for (const auto& [a, c] : sample_pairs(vals, vals, seed, sample_count))
    b.observe_exact(stable.compare(c, a) != flip(stable.compare(a, c)), describe_tuple(a, c));
  for (const auto& [x, y, z] : sample_triples(vals, vals, vals, seed, sample_count)) {
    if (leq(stable, x, y) && leq(stable, y, z))
      b.observe_exact(!leq(stable, x, z), describe_tuple(x, y, z));
  }
  return std::move(b).finish();
}

// Distributivity of mul over add and absorption by zero.
template <Bimonoidal S>
CheckReport check_bimonoidal_laws(const S& stable, std::uint64_t seed, std::size_t sample_count) {
  const auto vals = stable.values();
  ReportBuilder b("bimonoidal_laws", stable.tolerance);
  auto same_value = [&](const auto& l, const auto& r) {
    return stable.compare(l, r) == PosetCompare::Equal;
  };
  for (const auto& [x, y, z] : sample_triples(vals, vals, vals, seed, sample_count)) {
    const auto lhs = stable.mul(x, stable.add(y, z));
    const auto rhs = stable.add(stable.mul(x, y), stable.mul(x, z));
    b.observe(std::abs(stable.excess(lhs, rhs)) + std::abs(stable.excess(rhs, lhs)),
              !same_value(lhs, rhs), [&] { return "distributivity " + describe_tuple(x, y, z); });
    b.observe_exact(!same_value(stable.mul(stable.zero(), x), stable.zero()) ||
                        !same_value(stable.mul(x, stable.zero()), stable.zero()),
                    "absorption " + describe_tuple(x));
    b.observe_exact(!same_value(stable.add(stable.zero(), x), x) ||
                        !same_value(stable.mul(stable.one(), x), x),
                    "units " + describe_tuple(x));
  }
  return std::move(b).finish();
}

// d(x,y) >= 0 and [d(x,y) = 0 iff x = y], over sampled pairs plus every
// diagonal pair (x, x).
template <class E, class T, class S>
CheckReport check_distance_axioms(const Setting<E, T, S>& setting, std::uint64_t seed,
                                  std::size_t sample_count) {
  const auto& stable = setting.stable;
  ReportBuilder b("distance_axioms", stable.tolerance);
  auto visit = [&](const E& x, const E& y) {
    b.guard(
        [&] {
          const auto d = setting.distance(x, y);
          const bool nonneg = leq(stable, stable.zero(), d);
          const bool zero = is_zero(stable, d);
          const bool equal = setting.equal_points(x, y);
          double residual = 0.0;
          if (!nonneg)
            residual = stable.excess(stable.zero(), d);
          else if (zero != equal)
            residual = equal ? stable.magnitude(d) : 1.0;
          b.observe(residual, !nonneg || zero != equal, [&] { return describe_tuple(x, y); });
        },
        [&] { return describe_tuple(x, y); });
  };
  for (const auto& x : setting.space.draw(mix_seed(seed, 12), sample_count)) visit(x, x);
  for (const auto& [x, y] : sample_pairs(setting.space, setting.space, seed, sample_count)) visit(x, y);
  return std::move(b).finish();
}

// ||x|| >= 0 everywhere and ||x|| = 0 iff x = x*; `norm_fn` defaults to the
// setting's norm at x*.
template <class E, class T, class S>
CheckReport check_norm_properties(const Setting<E, T, S>& setting, const E& x_star,
                                  std::function<typename S::value_type(const E&)> norm_fn,
                                  std::uint64_t seed, std::size_t sample_count) {
  const auto& stable = setting.stable;
  ReportBuilder b("norm_properties", stable.tolerance);
  auto samples = setting.space.draw(mix_seed(seed, 13), sample_count);
  samples.push_back(x_star);
  for (const auto& x : samples) {
    b.guard(
        [&] {
          const auto n = norm_fn(x);
          const bool nonneg = leq(stable, stable.zero(), n);
          const bool zero = is_zero(stable, n);
          const bool at_center = setting.equal_points(x, x_star);
          b.observe(zero == at_center ? 0.0 : (at_center ? stable.magnitude(n) : 1.0),
                    !nonneg || zero != at_center, [&] { return describe(x); });
        },
        [&] { return describe(x); });
  }
  return std::move(b).finish();
}

template <class E, class T, class S>
CheckReport check_norm_properties(const Setting<E, T, S>& setting, const E& x_star,
                                  std::uint64_t seed, std::size_t sample_count) {
  return check_norm_properties<E, T, S>(
      setting, x_star, [&](const E& x) { return norm(setting, x_star, x); }, seed, sample_count);
}

}  // namespace lyap
