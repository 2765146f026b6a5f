#pragma once

#include <cmath>
#include <concepts>
#include <string>

#include "lyap/core/describe.hpp"
#include "lyap/core/sampler.hpp"

namespace lyap {

enum class PosetCompare { Less, Equal, Greater, Incomparable };

inline std::string to_string(PosetCompare c) {
  switch (c) {
    case PosetCompare::Less: return "Less";
    case PosetCompare::Equal: return "Equal";
    case PosetCompare::Greater: return "Greater";
    case PosetCompare::Incomparable: return "Incomparable";
  }
  return "?";
}

inline PosetCompare flip(PosetCompare c) {
  if (c == PosetCompare::Less) return PosetCompare::Greater;
  if (c == PosetCompare::Greater) return PosetCompare::Less;
  return c;
}

// The posetal "measurement" object: values with a partial order, a zero,
// a join for suprema, and a scalar view used for residuals.
template <class S>
concept StableSpace = requires(const S& s, const typename S::value_type& a) {
  typename S::value_type;
  { s.zero() } -> std::convertible_to<typename S::value_type>;
  { s.compare(a, a) } -> std::same_as<PosetCompare>;
  { s.join(a, a) } -> std::convertible_to<typename S::value_type>;
  // How far `a` sits above `b`; <= 0 whenever a <= b.
  { s.excess(a, a) } -> std::convertible_to<double>;
  { s.magnitude(a) } -> std::convertible_to<double>;
  { s.values() } -> std::same_as<Sampler<typename S::value_type>>;
  { s.tolerance } -> std::convertible_to<double>;
};

// Rig structure on the carrier (both monoids plus units).
template <class S>
concept Bimonoidal = StableSpace<S> && requires(const S& s, const typename S::value_type& a) {
  { s.add(a, a) } -> std::convertible_to<typename S::value_type>;
  { s.mul(a, a) } -> std::convertible_to<typename S::value_type>;
  { s.one() } -> std::convertible_to<typename S::value_type>;
};

template <StableSpace S>
PosetCompare compare(const S& stable, const typename S::value_type& a,
                     const typename S::value_type& b) {
  return stable.compare(a, b);
}

template <StableSpace S>
bool leq(const S& stable, const typename S::value_type& a, const typename S::value_type& b) {
  const auto c = stable.compare(a, b);
  return c == PosetCompare::Less || c == PosetCompare::Equal;
}

template <StableSpace S>
bool is_zero(const S& stable, const typename S::value_type& a) {
  return stable.compare(a, stable.zero()) == PosetCompare::Equal;
}

// Nonnegative reals with the usual order; Equal means |a-b| <= tolerance.
struct RealStable {
  using value_type = double;

  double tolerance = 1e-9;
  // Upper end of the sampled range for generated values.
  double sample_scale = 10.0;

  double zero() const { return 0.0; }
  double one() const { return 1.0; }
  double add(double a, double b) const { return a + b; }
  double mul(double a, double b) const { return a * b; }
  double join(double a, double b) const { return std::max(a, b); }

  PosetCompare compare(double a, double b) const {
    if (std::isnan(a) || std::isnan(b)) return PosetCompare::Incomparable;
    if (a == b || std::abs(a - b) <= tolerance) return PosetCompare::Equal;
    return a < b ? PosetCompare::Less : PosetCompare::Greater;
  }

  double excess(double a, double b) const {
    if (a == b) return 0.0;
    return a - b;
  }
  double magnitude(double a) const { return std::abs(a); }

  Sampler<double> values() const {
    const double scale = sample_scale;
    return Sampler<double>{{0.0, 1.0}, [scale](Rng& rng) {
                             return std::uniform_real_distribution<double>(0.0, scale)(rng);
                           }};
  }
};

static_assert(Bimonoidal<RealStable>);

}  // namespace lyap
