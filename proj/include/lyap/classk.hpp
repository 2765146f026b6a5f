#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <utility>

#include "lyap/core/report.hpp"
#include "lyap/core/stable.hpp"

namespace lyap {

// An order isomorphism of the stable object fixing zero, with its inverse.
template <class R>
struct ClassKMorphism {
  std::function<R(const R&)> forward;
  std::function<R(const R&)> inverse;
  std::string label;

  R operator()(const R& r) const { return forward(r); }
};

template <class R>
ClassKMorphism<R> identity_class_k() {
  return {[](const R& r) { return r; }, [](const R& r) { return r; }, "id"};
}

// outer o inner, with inverse inner^-1 o outer^-1.
template <class R>
ClassKMorphism<R> compose(const ClassKMorphism<R>& outer, const ClassKMorphism<R>& inner) {
  return {[o = outer.forward, i = inner.forward](const R& r) { return o(i(r)); },
          [o = outer.inverse, i = inner.inverse](const R& r) { return i(o(r)); },
          outer.label + " o " + inner.label};
}

template <class R>
ClassKMorphism<R> inverse_of(const ClassKMorphism<R>& alpha) {
  return {alpha.inverse, alpha.forward, "(" + alpha.label + ")^-1"};
}

// r -> c * r^p on R>=0.
inline ClassKMorphism<double> power_class_k(double c, double p) {
  std::ostringstream label;
  label << c << "*r^" << p;
  return {[c, p](double r) { return c * std::pow(r, p); },
          [c, p](double r) { return std::pow(r / c, 1.0 / p); }, label.str()};
}

inline ClassKMorphism<double> linear_class_k(double c) { return power_class_k(c, 1.0); }

// Class K from a strictly increasing f with f(0)=0; the inverse is computed by
// bracketing and bisection to `abs_tol`.
inline ClassKMorphism<double> class_k_from_increasing(std::function<double(double)> f,
                                                      std::string label,
                                                      double abs_tol = 1e-12) {
  auto inv = [f, abs_tol](double y) {
    if (y <= 0.0) return 0.0;
    double lo = 0.0;
    double hi = 1.0;
    while (f(hi) < y) {
      lo = hi;
      hi *= 2.0;
      if (!std::isfinite(hi)) throw NumericError("class K inverse: no bracket for " + describe(y));
    }
    while (hi - lo > abs_tol * std::max(1.0, hi)) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (f(mid) < y ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  return {std::move(f), inv, std::move(label)};
}

// Order preservation of forward and inverse, both round trips, and
// forward(0) = 0, on sampled stable values.
template <StableSpace S>
CheckReport check_class_k(const ClassKMorphism<typename S::value_type>& alpha, const S& stable,
                          std::uint64_t seed, std::size_t sample_count) {
  using R = typename S::value_type;
  const auto vals = stable.values();
  ReportBuilder b("class_k[" + alpha.label + "]", stable.tolerance);

  const R fz = alpha.forward(stable.zero());
  const bool zero_ok = is_zero(stable, fz);
  b.observe(stable.magnitude(fz), !zero_ok, [&] { return "zero " + describe(stable.zero()); });

  for (const auto& r : vals.draw(mix_seed(seed, 20), sample_count)) {
    b.guard(
        [&] {
          const R there = alpha.inverse(alpha.forward(r));
          const R back = alpha.forward(alpha.inverse(r));
          const bool ok = stable.compare(there, r) == PosetCompare::Equal &&
                          stable.compare(back, r) == PosetCompare::Equal;
          const double res = std::max({std::abs(stable.excess(there, r)), std::abs(stable.excess(r, there)),
                                       std::abs(stable.excess(back, r)), std::abs(stable.excess(r, back))});
          b.observe(res, !ok, [&] { return "round trip " + describe(r); });
        },
        [&] { return describe(r); });
  }

  for (const auto& [a, c] : sample_pairs(vals, vals, seed, sample_count)) {
    if (!leq(stable, a, c)) continue;
    b.guard(
        [&] {
          const R fa = alpha.forward(a), fc = alpha.forward(c);
          const R ia = alpha.inverse(a), ic = alpha.inverse(c);
          const bool ok = leq(stable, fa, fc) && leq(stable, ia, ic);
          b.observe(std::max(stable.excess(fa, fc), stable.excess(ia, ic)), !ok,
                    [&] { return "monotone " + describe_tuple(a, c); });
        },
        [&] { return describe_tuple(a, c); });
  }
  return std::move(b).finish();
}

// The inverse of a class K morphism is class K: rerun the check on the
// swapped pair.
template <StableSpace S>
CheckReport check_classk_inverse_lemma(const ClassKMorphism<typename S::value_type>& alpha,
                                       const S& stable, std::uint64_t seed,
                                       std::size_t sample_count) {
  auto r = check_class_k(inverse_of(alpha), stable, seed, sample_count);
  r.lawName = "classk_inverse[" + alpha.label + "]";
  return r;
}

}  // namespace lyap
