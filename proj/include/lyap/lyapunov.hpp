#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lyap/classk.hpp"
#include "lyap/flows.hpp"

namespace lyap {

// Class K bounds lower(||x||) <= V(x) <= upper(||x||).
template <class R>
struct Envelope {
  ClassKMorphism<R> lower;
  ClassKMorphism<R> upper;
};

template <class E, class R>
struct CandidateV {
  std::function<R(const E&)> map;
  std::string label;

  R operator()(const E& x) const { return map(x); }
};

enum class HorizonMode { ExhaustiveFinite, CycleDetect, FiniteHorizonWithTailCheck };

inline std::string to_string(HorizonMode m) {
  switch (m) {
    case HorizonMode::ExhaustiveFinite: return "ExhaustiveFinite";
    case HorizonMode::CycleDetect: return "CycleDetect";
    case HorizonMode::FiniteHorizonWithTailCheck: return "FiniteHorizonWithTailCheck";
  }
  return "?";
}

// How the supremum over time is made computable. `step` is the time value
// between consecutive orbit points; `steps` bounds the finite horizon.
template <class T>
struct HorizonPolicy {
  HorizonMode mode = HorizonMode::FiniteHorizonWithTailCheck;
  std::size_t steps = 0;
  T step{};
  double tailFactor = 0.5;
};

// lower(||x||) <= V(x) <= upper(||x||) on samples plus x*, and V(x*) = 0.
template <class E, class T, class S>
CheckReport check_positive_definite(const CandidateV<E, typename S::value_type>& V, const E& x_star,
                                    const Envelope<typename S::value_type>& envelope,
                                    const Setting<E, T, S>& setting, std::uint64_t seed,
                                    std::size_t sample_count) {
  const auto& stable = setting.stable;
  ReportBuilder b("positive_definite[" + V.label + "]", stable.tolerance);
  auto samples = setting.space.draw(mix_seed(seed, 50), sample_count);
  samples.push_back(x_star);
  for (const auto& x : samples) {
    b.guard(
        [&] {
          const auto n = norm(setting, x_star, x);
          const auto v = V(x);
          const auto lo = envelope.lower(n);
          const auto hi = envelope.upper(n);
          const bool ok = leq(stable, lo, v) && leq(stable, v, hi) && leq(stable, stable.zero(), v);
          const double r = std::max({stable.excess(lo, v), stable.excess(v, hi), stable.excess(stable.zero(), v)});
          b.observe(r, !ok, [&] { return describe(x); });
        },
        [&] { return describe(x); });
  }
  b.guard(
      [&] {
        const auto v = V(x_star);
        b.observe(stable.magnitude(v), !is_zero(stable, v), [&] { return "V(x*) " + describe(x_star); });
      },
      [&] { return describe(x_star); });
  return std::move(b).finish();
}

// V(phi(t, x)) <= V(x) on sampled (t, x).
template <class E, class T, class S>
CheckReport check_decrescent(const CandidateV<E, typename S::value_type>& V, const Flow<E, T, S>& flow,
                             std::uint64_t seed, std::size_t sample_count) {
  const auto& setting = flow.setting;
  const auto& stable = setting.stable;
  ReportBuilder b("decrescent[" + V.label + "]", stable.tolerance);
  for (const auto& [t, x] : sample_pairs(setting.time.sampler, setting.space, seed, sample_count)) {
    b.guard(
        [&] {
          const auto after = V(flow.act(t, x));
          const auto before = V(x);
          b.observe(stable.excess(after, before), !leq(stable, after, before), [&] { return describe_tuple(t, x); });
        },
        [&] { return describe_tuple(t, x); });
  }
  return std::move(b).finish();
}

// A Lyapunov morphism certifies stability with alpha = lower^-1 o upper.
// Throws PreconditionFailed if the envelope is not class K or V is not
// positive definite and decrescent on these samples.
template <class E, class T, class S>
StabilityWitness<typename S::value_type> verify_lyapunov_theorem(
    const CandidateV<E, typename S::value_type>& V, const Flow<E, T, S>& flow, const E& x_star,
    const Envelope<typename S::value_type>& envelope, std::uint64_t seed, std::size_t sample_count) {
  const auto& stable = flow.setting.stable;
  for (const auto* member : {&envelope.lower, &envelope.upper}) {
    auto r = check_class_k(*member, stable, seed, sample_count);
    if (!r.passed) throw PreconditionFailed(std::move(r));
  }
  auto pd = check_positive_definite(V, x_star, envelope, flow.setting, seed, sample_count);
  if (!pd.passed) throw PreconditionFailed(std::move(pd));
  auto dec = check_decrescent(V, flow, seed, sample_count);
  if (!dec.passed) throw PreconditionFailed(std::move(dec));
  const auto alpha = compose(inverse_of(envelope.lower), envelope.upper);
  return check_stable(flow, x_star, alpha, seed, sample_count);
}

// Checks the supremum axioms for f: A x B -> R against an upper bound and a
// candidate supremum, and that the candidate commutes with whiskering by r:
//   (i)   f(a, b) <= bound(b)
//   (ii)  f(a, b) <= sup(b) <= bound(b)
//   (iii) sup(r(c)) = join over sampled a of f(a, r(c))
template <class A, class B, class C, StableSpace S>
CheckReport check_suprema_axioms(const std::function<typename S::value_type(const A&, const B&)>& f,
                                 const std::function<typename S::value_type(const B&)>& bound,
                                 const std::function<typename S::value_type(const B&)>& sup_candidate,
                                 const std::function<B(const C&)>& whisker, const Sampler<A>& sa,
                                 const Sampler<B>& sb, const Sampler<C>& sc, const S& stable,
                                 std::uint64_t seed, std::size_t sample_count) {
  ReportBuilder upper("upper_bound", stable.tolerance);
  ReportBuilder least("sup_between", stable.tolerance);
  for (const auto& [a, b] : sample_pairs(sa, sb, seed, sample_count)) {
    const auto v = f(a, b);
    const auto ub = bound(b);
    const auto s = sup_candidate(b);
    upper.observe(stable.excess(v, ub), !leq(stable, v, ub), [&] { return describe_tuple(a, b); });
    least.observe(std::max(stable.excess(v, s), stable.excess(s, ub)), !leq(stable, v, s) || !leq(stable, s, ub),
                  [&] { return describe_tuple(a, b); });
  }
  ReportBuilder whisk("sup_whiskering", stable.tolerance);
  const auto as = sa.draw(mix_seed(seed, 51), sample_count);
  for (const auto& c : sc.draw(mix_seed(seed, 52), sample_count)) {
    const B b = whisker(c);
    auto acc = f(as.front(), b);
    for (std::size_t i = 1; i < as.size(); ++i) acc = stable.join(acc, f(as[i], b));
    const auto s = sup_candidate(b);
    const double r = std::max(std::abs(stable.excess(s, acc)), std::abs(stable.excess(acc, s)));
    whisk.observe(r, stable.compare(s, acc) != PosetCompare::Equal, [&] { return describe(c); });
  }
  return merge("suprema_axioms", merge("suprema_bounds", std::move(upper).finish(), std::move(least).finish()),
               std::move(whisk).finish());
}

namespace detail {

// Brent's cycle detection on x_{k+1} = next(x_k). Returns (mu, lambda):
// the orbit visits exactly the mu + lambda distinct states x_0..x_{mu+lambda-1}.
template <class E, class Next, class Same>
std::pair<std::size_t, std::size_t> brent_cycle(const E& x0, Next next, Same same) {
  std::size_t power = 1, lambda = 1;
  E tortoise = x0;
  E hare = next(x0);
  while (!same(tortoise, hare)) {
    if (power == lambda) {
      tortoise = hare;
      power *= 2;
      lambda = 0;
    }
    hare = next(hare);
    ++lambda;
  }
  tortoise = x0;
  hare = x0;
  for (std::size_t i = 0; i < lambda; ++i) hare = next(hare);
  std::size_t mu = 0;
  while (!same(tortoise, hare)) {
    tortoise = next(tortoise);
    hare = next(hare);
    ++mu;
  }
  return {mu, lambda};
}

}  // namespace detail

// x -> sup_t ||phi(t, x)||, made computable by `policy`. Under
// FiniteHorizonWithTailCheck, evaluating the result throws InconclusiveTail
// when the orbit norm at the horizon exceeds tailFactor * running supremum.
template <class E, class T, class S>
CandidateV<E, typename S::value_type> supremum_of_norms(const Flow<E, T, S>& flow, const E& x_star,
                                                        const HorizonPolicy<T>& policy) {
  using R = typename S::value_type;
  const auto label = "sup_t||phi||[" + to_string(policy.mode) + "]";

  switch (policy.mode) {
    case HorizonMode::ExhaustiveFinite: {
      if (!flow.setting.time.sampler.exhaustive())
        throw ConfigError("ExhaustiveFinite needs a finite time carrier");
      const auto times = flow.setting.time.sampler.points;
      return {[flow, x_star, times](const E& x) {
                const auto& st = flow.setting.stable;
                R acc = st.zero();
                for (const auto& t : times) acc = st.join(acc, norm(flow.setting, x_star, flow.act(t, x)));
                return acc;
              },
              label};
    }
    case HorizonMode::CycleDetect: {
      if (!flow.setting.space.exhaustive())
        throw ConfigError("CycleDetect needs a finite space");
      const T step = policy.step;
      return {[flow, x_star, step](const E& x) {
                const auto& st = flow.setting.stable;
                auto next = [&](const E& y) { return flow.act(step, y); };
                auto same = [&](const E& a, const E& b) { return flow.setting.equal_points(a, b); };
                const auto [mu, lambda] = detail::brent_cycle(x, next, same);
                R acc = st.zero();
                E y = x;
                for (std::size_t k = 0; k < mu + lambda; ++k) {
                  acc = st.join(acc, norm(flow.setting, x_star, y));
                  y = next(y);
                }
                return acc;
              },
              label};
    }
    case HorizonMode::FiniteHorizonWithTailCheck: {
      if constexpr (std::is_same_v<R, double>) {
        if (policy.steps == 0) throw ConfigError("finite horizon needs steps > 0");
        if (!(policy.tailFactor > 0.0 && policy.tailFactor <= 1.0))
          throw ConfigError("tailFactor must lie in (0, 1]");
        return {[flow, x_star, policy](const E& x) {
                  const auto& st = flow.setting.stable;
                  double acc = norm(flow.setting, x_star, x);
                  double last = acc;
                  E y = x;
                  for (std::size_t k = 0; k < policy.steps; ++k) {
                    y = flow.act(policy.step, y);
                    last = norm(flow.setting, x_star, y);
                    acc = std::max(acc, last);
                  }
                  if (last > policy.tailFactor * acc + st.tolerance)
                    throw InconclusiveTail("orbit norm at horizon " + describe(last) + " exceeds " +
                                           describe(policy.tailFactor) + " x sup " + describe(acc));
                  return acc;
                },
                label};
      } else {
        throw ConfigError("FiniteHorizonWithTailCheck needs a real stable object");
      }
    }
  }
  throw ConfigError("unknown horizon mode");
}

// The converse construction: V = sup_t ||phi(t, .)||. Requires a passing
// stability witness, which supplies the upper bound alpha(||x||).
template <class E, class T, class S>
CandidateV<E, typename S::value_type> construct_converse_V(const Flow<E, T, S>& flow, const E& x_star,
                                                           const StabilityWitness<typename S::value_type>& witness,
                                                           const HorizonPolicy<T>& policy) {
  if (!witness.ok()) throw PreconditionFailed(witness.report);
  return supremum_of_norms(flow, x_star, policy);
}

// Searches {c * r^p : c in grid, p in {1, 2}} for an envelope of V on samples.
template <class E, class T>
std::optional<Envelope<double>> search_envelope(const CandidateV<E, double>& V, const E& x_star,
                                                const Setting<E, T, RealStable>& setting, std::uint64_t seed,
                                                std::size_t sample_count,
                                                std::vector<double> grid = {0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 10.0}) {
  std::vector<ClassKMorphism<double>> family;
  for (double p : {1.0, 2.0})
    for (double c : grid) family.push_back(power_class_k(c, p));

  auto samples = setting.space.draw(mix_seed(seed, 53), sample_count);
  std::vector<std::pair<double, double>> nv;  // (||x||, V(x))
  for (const auto& x : samples) nv.emplace_back(norm(setting, x_star, x), V(x));
  const auto& st = setting.stable;

  auto below = [&](const ClassKMorphism<double>& a) {
    for (auto [n, v] : nv)
      if (!leq(st, a(n), v)) return false;
    return true;
  };
  auto above = [&](const ClassKMorphism<double>& a) {
    for (auto [n, v] : nv)
      if (!leq(st, v, a(n))) return false;
    return true;
  };
  for (const auto& lo : family) {
    if (!below(lo)) continue;
    for (const auto& hi : family) {
      if (!above(hi)) continue;
      bool ordered = true;
      for (auto [n, v] : nv) ordered = ordered && leq(st, lo(n), hi(n));
      if (ordered) return Envelope<double>{lo, hi};
    }
  }
  return std::nullopt;
}

}  // namespace lyap
