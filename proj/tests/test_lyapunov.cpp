#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "lyap/lyap.hpp"

using namespace lyap;

namespace {

const auto kDecay = ode_flow(linear_decay());
const auto kGrowth = ode_flow(linear_growth(), EuclideanOptions{2.0, 1e-6, 5.0, 0.05, 20});
const auto kRotation = ode_flow(rotation());
const RealStable kReals = real_stable(1e-9);

CandidateV<Vec, double> abs_V() {
  return {[](const Vec& x) { return std::abs(x[0]); }, "|x|"};
}

}  // namespace

// ---------------------------------------------------------------------------
// Class K

TEST(ClassK, LinearAndSquarePass) {
  EXPECT_TRUE(check_class_k(linear_class_k(2.0), kReals, 1, 500).passed);
  EXPECT_TRUE(check_class_k(power_class_k(1.0, 2.0), kReals, 1, 500).passed);
}

TEST(ClassK, ShiftFailsZeroPreservation) {
  ClassKMorphism<double> shift{[](double r) { return r + 1.0; }, [](double r) { return r - 1.0; }, "r+1"};
  const auto r = check_class_k(shift, kReals, 1, 100);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.counterexample.value_or(""), "zero 0");
  EXPECT_GE(r.worstResidual, 1.0);
}

TEST(ClassK, NonMonotoneInverseFails) {
  ClassKMorphism<double> bad{[](double r) { return 2.0 * r; }, [](double r) { return r / 3.0; }, "mismatched"};
  EXPECT_FALSE(check_class_k(bad, kReals, 1, 100).passed);
}

TEST(ClassKInverseLemma, LinearSquareAndCubicByBisection) {
  EXPECT_TRUE(check_classk_inverse_lemma(linear_class_k(2.0), kReals, 2, 300).passed);
  EXPECT_TRUE(check_classk_inverse_lemma(power_class_k(1.0, 2.0), kReals, 2, 300).passed);
  const auto cubic = class_k_from_increasing([](double r) { return r * r * r + r; }, "r^3+r");
  EXPECT_TRUE(check_class_k(cubic, kReals, 2, 300).passed);
  const auto r = check_classk_inverse_lemma(cubic, kReals, 2, 300);
  EXPECT_TRUE(r.passed);
  EXPECT_LE(r.worstResidual, 1e-9);
}

TEST(ClassKInverseLemma, BisectionMatchesIndependentNewtonOracle) {
  const auto cubic = class_k_from_increasing([](double r) { return r * r * r + r; }, "r^3+r");
  for (double y : {0.0, 1e-6, 0.5, 2.0, 10.0, 1000.0}) {
    double x = y > 1.0 ? std::cbrt(y) : y;
    for (int i = 0; i < 60; ++i) x -= (x * x * x + x - y) / (3 * x * x + 1);
    EXPECT_NEAR(cubic.inverse(y), x, 1e-9 * std::max(1.0, x)) << y;
  }
}

TEST(ClassKPropertyTest, CompositionAndInverseStayClassK) {
  const auto a = power_class_k(3.0, 2.0);
  const auto b = class_k_from_increasing([](double r) { return r + std::sqrt(r); }, "r+sqrt(r)");
  EXPECT_TRUE(check_class_k(compose(a, b), kReals, 3, 300).passed);
  EXPECT_TRUE(check_class_k(inverse_of(compose(a, b)), kReals, 3, 300).passed);
}

// ---------------------------------------------------------------------------
// Positive definiteness and decrescence

TEST(PositiveDefinite, SquareWithEqualityEnvelope) {
  const auto sq = power_class_k(1.0, 2.0);
  const auto r = check_positive_definite(squared_norm_V(), Vec{0.0}, Envelope<double>{sq, sq},
                                         kDecay.setting, 1, 500);
  EXPECT_TRUE(r.passed);
}

TEST(PositiveDefinite, NormWithIdentityEnvelope) {
  const auto id = identity_class_k<double>();
  EXPECT_TRUE(
      check_positive_definite(norm_V(), Vec{0.0, 0.0}, Envelope<double>{id, id}, kRotation.setting, 1, 500).passed);
}

TEST(PositiveDefinite, SignedCoordinateFailsAtNegativePoint) {
  CandidateV<Vec, double> signed_x{[](const Vec& x) { return x[0]; }, "x"};
  for (const auto& env : {Envelope<double>{identity_class_k<double>(), identity_class_k<double>()},
                          Envelope<double>{linear_class_k(0.1), linear_class_k(10.0)}}) {
    const auto r = check_positive_definite(signed_x, Vec{0.0}, env, kDecay.setting, 1, 200);
    ASSERT_FALSE(r.passed);
    const double x = std::stod(r.counterexample->substr(1));
    EXPECT_LT(x, 0.0);
  }
}

TEST(Decrescent, DecayRotationGrowth) {
  EXPECT_TRUE(check_decrescent(squared_norm_V(), kDecay, 2, 300).passed);
  const auto rot = check_decrescent(squared_norm_V(), kRotation, 2, 300);
  EXPECT_TRUE(rot.passed);
  EXPECT_LE(rot.worstResidual, 1e-6);
  EXPECT_FALSE(check_decrescent(squared_norm_V(), kGrowth, 2, 300).passed);
}

// ---------------------------------------------------------------------------
// Theorem

TEST(LyapunovTheorem, DecayWithSquareEnvelopeGivesIdentity) {
  const auto sq = power_class_k(1.0, 2.0);
  const auto w = verify_lyapunov_theorem(squared_norm_V(), kDecay, Vec{0.0}, Envelope<double>{sq, sq}, 3, 300);
  EXPECT_TRUE(w.ok());
  // alpha = sqrt o square = id on samples.
  for (double r : {0.0, 0.3, 1.0, 7.5}) EXPECT_NEAR(w.alpha(r), r, 1e-12);
}

TEST(LyapunovTheorem, KalmanWithIdentityEnvelope) {
  const auto res = verify_kalman_lyapunov(KalmanModel::scalar(1, 1, 1), 3, 200);
  EXPECT_TRUE(res.witness.ok());
  EXPECT_NEAR(res.fixedPoint.matrix()(0, 0), (std::sqrt(5.0) - 1.0) / 2.0, 1e-10);
  for (double r : {0.0, 0.5, 3.0}) EXPECT_DOUBLE_EQ(res.witness.alpha(r), r);
}

TEST(LyapunovTheorem, HalvingMapWithAbsoluteValue) {
  const auto id = identity_class_k<double>();
  const auto w =
      verify_lyapunov_theorem(abs_V(), map_flow(halving_map()), Vec{0.0}, Envelope<double>{id, id}, 3, 300);
  EXPECT_TRUE(w.ok());
  EXPECT_DOUBLE_EQ(w.alpha(2.5), 2.5);
}

TEST(LyapunovTheorem, GrowthIsAPreconditionFailure) {
  const auto sq = power_class_k(1.0, 2.0);
  try {
    verify_lyapunov_theorem(squared_norm_V(), kGrowth, Vec{0.0}, Envelope<double>{sq, sq}, 3, 100);
    FAIL() << "expected PreconditionFailed";
  } catch (const PreconditionFailed& e) {
    EXPECT_EQ(e.report.lawName, "decrescent[||x||^2]");
  }
}

TEST(LyapunovTheorem, BadEnvelopeIsAPreconditionFailure) {
  ClassKMorphism<double> shift{[](double r) { return r + 1.0; }, [](double r) { return r - 1.0; }, "r+1"};
  EXPECT_THROW(verify_lyapunov_theorem(abs_V(), kDecay, Vec{0.0}, Envelope<double>{shift, shift}, 3, 50),
               PreconditionFailed);
}

TEST(LyapunovPropertyTest, TheoremChainOnEveryPassingInstance) {
  struct Case {
    const Flow<Vec, double, RealStable>* flow;
    Vec x_star;
    CandidateV<Vec, double> V;
    Envelope<double> env;
  };
  const auto sq = power_class_k(1.0, 2.0);
  const auto id = identity_class_k<double>();
  std::vector<Case> cases = {{&kDecay, {0.0}, squared_norm_V(), {sq, sq}},
                             {&kDecay, {0.0}, abs_V(), {id, id}},
                             {&kRotation, {0.0, 0.0}, squared_norm_V(), {sq, sq}},
                             {&kRotation, {0.0, 0.0}, norm_V(), {id, id}},
                             {&kDecay, {0.0}, squared_norm_V(), {power_class_k(0.5, 2.0), power_class_k(2.0, 2.0)}}};
  for (std::uint64_t seed : {11u, 12u}) {
    for (const auto& c : cases) {
      const bool pd = check_positive_definite(c.V, c.x_star, c.env, c.flow->setting, seed, 150).passed;
      const bool dec = check_decrescent(c.V, *c.flow, seed, 150).passed;
      ASSERT_TRUE(pd && dec) << c.V.label;
      const auto w = verify_lyapunov_theorem(c.V, *c.flow, c.x_star, c.env, seed, 150);
      EXPECT_TRUE(w.ok());
      EXPECT_TRUE(check_stable(*c.flow, c.x_star, w.alpha, seed, 150).ok());
    }
  }
}

TEST(EnvelopePropertyTest, LowerNeverExceedsUpperOnAcceptedEnvelopes) {
  const auto env = search_envelope(squared_norm_V(), Vec{0.0, 0.0}, kRotation.setting, 4, 300);
  ASSERT_TRUE(env.has_value());
  for (const auto& x : kRotation.setting.space.draw(mix_seed(4, 53), 300)) {
    const double r = std::hypot(x[0], x[1]);
    EXPECT_LE(env->lower(r), env->upper(r) + 1e-12);
  }
}

// ---------------------------------------------------------------------------
// Suprema axioms

namespace {

const Sampler<double> kUnitB{{0.0, 1.0}, [](Rng& rng) { return std::uniform_real_distribution<double>(0, 5)(rng); }};

CheckReport suprema(std::function<double(const double&, const double&)> f, std::function<double(const double&)> sup,
                    std::function<double(const double&)> whisker, const Sampler<double>& sa) {
  const std::function<double(const double&)> bound = [](const double& b) { return b; };
  return check_suprema_axioms<double, double, double>(f, bound, sup, whisker, sa, kUnitB, kUnitB, kReals, 9, 300);
}

double exp_decay(const double& a, const double& b) { return b * std::exp(-a); }
double identity(const double& b) { return b; }

}  // namespace

TEST(SupremaAxioms, ExponentialDecayHasSupremumAtZero) {
  const Sampler<double> sa{{0.0}, [](Rng& rng) { return std::uniform_real_distribution<double>(0, 5)(rng); }};
  const auto r = suprema(exp_decay, identity, [](const double& c) { return 2.0 * c; }, sa);
  EXPECT_TRUE(r.passed) << r.counterexample.value_or("");
}

TEST(SupremaAxioms, MinimumAttainsItsSecondArgument) {
  // sup_a min(a, b) = b is attained once a sampled a reaches b; a = 5 covers
  // every whiskered b = c / 2 <= 2.5.
  const Sampler<double> sa{{0.0, 5.0}, [](Rng& rng) { return std::uniform_real_distribution<double>(0, 5)(rng); }};
  const auto r = suprema([](const double& a, const double& b) { return std::min(a, b); }, identity,
                         [](const double& c) { return c / 2.0; }, sa);
  EXPECT_TRUE(r.passed) << r.counterexample.value_or("");
}

TEST(SupremaAxioms, HalfCandidateFailsAtZeroTime) {
  const auto sa = Sampler<double>::finite({0.0, 1.0, 3.0});
  const auto r = suprema(exp_decay, [](const double& b) { return b / 2.0; },
                         [](const double& c) { return 2.0 * c; }, sa);
  EXPECT_FALSE(r.passed);
  ASSERT_TRUE(r.counterexample.has_value());
  // (1, 1) and (3, b) satisfy b e^-a <= b/2; the first violation is at a = 0.
  EXPECT_EQ(r.counterexample->rfind("(0, ", 0), 0u) << *r.counterexample;
}

// ---------------------------------------------------------------------------
// Converse

TEST(Converse, DecayRecoversAbsoluteValue) {
  const auto w = check_stable(kDecay, Vec{0.0}, identity_class_k<double>(), 1, 100);
  const auto V = construct_converse_V(kDecay, Vec{0.0}, w, HorizonPolicy<double>{HorizonMode::FiniteHorizonWithTailCheck, 400, 0.05, 0.5});
  Rng rng(2);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 200; ++i) {
    const double x = u(rng);
    EXPECT_NEAR(V(Vec{x}), std::abs(x), 1e-6);
  }
  const auto id = identity_class_k<double>();
  EXPECT_TRUE(check_positive_definite(V, Vec{0.0}, Envelope<double>{id, w.alpha}, kDecay.setting, 1, 100).passed);
  EXPECT_TRUE(check_decrescent(V, kDecay, 1, 100).passed);
}

TEST(Converse, RotationRecoversEuclideanNorm) {
  const auto w = check_stable(kRotation, Vec{0.0, 0.0}, identity_class_k<double>(), 1, 100);
  const auto V = construct_converse_V(kRotation, Vec{0.0, 0.0}, w,
                                      HorizonPolicy<double>{HorizonMode::FiniteHorizonWithTailCheck, 400, 0.05, 1.0});
  Rng rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 100; ++i) {
    const Vec x{u(rng), u(rng)};
    EXPECT_NEAR(V(x), std::hypot(x[0], x[1]), 1e-6);
  }
}

TEST(Converse, RotationWithDefaultTailFactorIsInconclusiveNotFailed) {
  const auto w = check_stable(kRotation, Vec{0.0, 0.0}, identity_class_k<double>(), 1, 50);
  const auto V = construct_converse_V(kRotation, Vec{0.0, 0.0}, w,
                                      HorizonPolicy<double>{HorizonMode::FiniteHorizonWithTailCheck, 100, 0.05, 0.5});
  EXPECT_THROW(V(Vec{1.0, 0.0}), InconclusiveTail);
  const auto id = identity_class_k<double>();
  const auto r = check_positive_definite(V, Vec{0.0, 0.0}, Envelope<double>{id, id}, kRotation.setting, 1, 20);
  EXPECT_FALSE(r.passed);
  EXPECT_TRUE(r.inconclusive);
  EXPECT_FALSE(std::isinf(r.worstResidual));
}

TEST(Converse, FailedWitnessIsAPreconditionFailure) {
  const auto w = check_stable(kGrowth, Vec{0.0}, identity_class_k<double>(), 1, 50);
  ASSERT_FALSE(w.ok());
  EXPECT_THROW(construct_converse_V(kGrowth, Vec{0.0}, w, HorizonPolicy<double>{HorizonMode::FiniteHorizonWithTailCheck, 10, 0.05, 0.5}),
               PreconditionFailed);
}

TEST(Converse, PowerSetCycleDetectMatchesBruteForceOrbit) {
  // E = {0..4}; 0 fixed, 1 -> 0, 2 -> 3 -> 4 -> 2 (a 3-cycle).
  SetSystem sys({"a", "b", "c", "d", "e"}, {0, 0, 3, 4, 2});
  const auto V = powerset_converse_V(sys, 0);
  for (const auto& U : all_subsets(5)) {
    // Oracle: iterate the image map until a state repeats.
    std::vector<std::uint64_t> seen;
    SubsetValue acc{5, 0};
    SubsetValue cur = U;
    while (std::find(seen.begin(), seen.end(), cur.bits) == seen.end()) {
      seen.push_back(cur.bits);
      acc.bits |= cur.bits ^ 1ULL;  // norm at x* = 0 is the symmetric difference with {0}
      SubsetValue next{5, 0};
      for (std::size_t e = 0; e < 5; ++e)
        if (cur.contains(e)) next.bits |= 1ULL << sys.pointMap[e];
      cur = next;
    }
    EXPECT_EQ(V(U), acc) << describe(U);
  }
}

TEST(Converse, ExhaustiveFiniteAgreesWithCycleDetect) {
  const auto f = lawvere_flow(shortest_path_closure({"a", "b", "c"}, {{0, 1, 1.0}, {1, 0, 1.0}, {1, 2, 1.0}, {2, 1, 1.0}}),
                              {0, 0, 1});
  const auto ex = supremum_of_norms(f, std::size_t{0}, HorizonPolicy<std::uint64_t>{HorizonMode::ExhaustiveFinite, 0, 1, 1.0});
  const auto cd = supremum_of_norms(f, std::size_t{0}, HorizonPolicy<std::uint64_t>{HorizonMode::CycleDetect, 0, 1, 1.0});
  for (std::size_t x = 0; x < 3; ++x) EXPECT_EQ(ex(x), cd(x)) << x;
  EXPECT_EQ(ex(2).value(), 2.0);
}

TEST(Converse, PolicyMisuseIsConfigError) {
  EXPECT_THROW(supremum_of_norms(kDecay, Vec{0.0}, HorizonPolicy<double>{HorizonMode::ExhaustiveFinite, 0, 0.05, 1.0}),
               ConfigError);
  EXPECT_THROW(supremum_of_norms(kDecay, Vec{0.0}, HorizonPolicy<double>{HorizonMode::CycleDetect, 0, 0.05, 1.0}),
               ConfigError);
  EXPECT_THROW(supremum_of_norms(kDecay, Vec{0.0}, HorizonPolicy<double>{HorizonMode::FiniteHorizonWithTailCheck, 0, 0.05, 0.5}),
               ConfigError);
  EXPECT_THROW(supremum_of_norms(kDecay, Vec{0.0}, HorizonPolicy<double>{HorizonMode::FiniteHorizonWithTailCheck, 10, 0.05, 1.5}),
               ConfigError);
}

TEST(ConversePropertyTest, ShiftedOrbitSupremumIsSubSupremumOnFiniteInstances) {
  // Every set system on 3 elements with a fixed point at 0.
  for (std::size_t f1 = 0; f1 < 3; ++f1)
    for (std::size_t f2 = 0; f2 < 3; ++f2) {
      SetSystem sys({"a", "b", "c"}, {0, f1, f2});
      const auto V = powerset_converse_V(sys, 0);
      for (const auto& U : all_subsets(3))
        for (std::uint64_t k = 0; k <= 6; ++k) {
          const auto after = V(powerset_flow(sys, k, U));
          EXPECT_EQ(after.bits & ~V(U).bits, 0u);
        }
    }
}

TEST(ConversePropertyTest, ConverseChainOnStableRealInstances) {
  const auto id = identity_class_k<double>();
  const auto w = check_stable(kDecay, Vec{0.0}, id, 5, 100);
  ASSERT_TRUE(w.ok());
  const auto V = construct_converse_V(kDecay, Vec{0.0}, w, HorizonPolicy<double>{HorizonMode::FiniteHorizonWithTailCheck, 400, 0.05, 0.5});
  EXPECT_TRUE(check_positive_definite(V, Vec{0.0}, Envelope<double>{id, w.alpha}, kDecay.setting, 5, 100).passed);
  EXPECT_TRUE(check_decrescent(V, kDecay, 5, 100).passed);

  const auto halving = map_flow(halving_map());
  const auto wh = check_stable(halving, Vec{0.0}, id, 5, 100);
  ASSERT_TRUE(wh.ok());
  const auto Vh = construct_converse_V(halving, Vec{0.0}, wh, HorizonPolicy<std::uint64_t>{HorizonMode::ExhaustiveFinite, 0, 1, 1.0});
  EXPECT_TRUE(check_positive_definite(Vh, Vec{0.0}, Envelope<double>{id, wh.alpha}, halving.setting, 5, 100).passed);
  EXPECT_TRUE(check_decrescent(Vh, halving, 5, 100).passed);
}

// ---------------------------------------------------------------------------
// Envelope search

TEST(EnvelopeSearch, FindsSquareEnvelopeForSquaredNorm) {
  const auto env = search_envelope(squared_norm_V(), Vec{0.0}, kDecay.setting, 1, 200);
  ASSERT_TRUE(env.has_value());
  EXPECT_TRUE(check_positive_definite(squared_norm_V(), Vec{0.0}, *env, kDecay.setting, 1, 200).passed);
}

TEST(EnvelopeSearch, NoEnvelopeForUnboundedRatio) {
  CandidateV<Vec, double> cubic{[](const Vec& x) { return std::pow(std::abs(x[0]), 3.0); }, "|x|^3"};
  EuclideanOptions o;
  o.radius = 50.0;
  const auto s = continuous_setting(1, o);
  EXPECT_FALSE(search_envelope(cubic, Vec{0.0}, s, 1, 200).has_value());
}
