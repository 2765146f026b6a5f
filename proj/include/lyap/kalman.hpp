#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lyap/flows.hpp"
#include "lyap/lyapunov.hpp"
#include "lyap/matnum.hpp"

namespace lyap {

// A 2n x 2n matrix [[A, B], [C, D]] proposed as a member of the symplectic
// monoid H.
struct SymplecticCandidate {
  DenseMatrix A, B, C, D;

  std::size_t n() const { return A.rows(); }

  DenseMatrix matrix() const {
    const std::size_t k = n();
    DenseMatrix m(2 * k, 2 * k);
    m.set_block(0, 0, A);
    m.set_block(0, k, B);
    m.set_block(k, 0, C);
    m.set_block(k, k, D);
    return m;
  }

  static SymplecticCandidate from_matrix(const DenseMatrix& m) {
    if (!m.square() || m.rows() % 2 != 0) throw ConfigError("symplectic candidate must be 2n x 2n");
    const std::size_t k = m.rows() / 2;
    return {m.block(0, 0, k, k), m.block(0, k, k, k), m.block(k, 0, k, k), m.block(k, k, k, k)};
  }

  static SymplecticCandidate identity(std::size_t n) {
    return {DenseMatrix::identity(n), DenseMatrix(n, n), DenseMatrix(n, n), DenseMatrix::identity(n)};
  }
};

inline SymplecticCandidate operator*(const SymplecticCandidate& a, const SymplecticCandidate& b) {
  return SymplecticCandidate::from_matrix(a.matrix() * b.matrix());
}

inline std::string describe(const SymplecticCandidate& m) { return describe(m.matrix()); }

// Symmetric positive definite n x n matrix.
class SpdPoint {
 public:
  explicit SpdPoint(const DenseMatrix& p) : p_(p) {
    if (!p_.square()) throw DomainError("SpdPoint: matrix not square");
    if (!is_symmetric(p_)) throw DomainError("SpdPoint: matrix not symmetric " + describe(p));
    if (!is_positive_definite(p_)) throw DomainError("SpdPoint: matrix not positive definite " + describe(p));
  }

  static SpdPoint scalar(double v) { return SpdPoint(DenseMatrix{{v}}); }

  const DenseMatrix& matrix() const { return p_; }
  std::size_t n() const { return p_.rows(); }

  friend bool operator==(const SpdPoint&, const SpdPoint&) = default;

 private:
  DenseMatrix p_;
};

inline std::string describe(const SpdPoint& p) { return describe(p.matrix()); }

// Time-invariant model x+ = A x + F w, y = C x + v with identity noise
// covariances. S = F F^T, R = C^T C.
struct KalmanModel {
  DenseMatrix A, F, C;

  KalmanModel(DenseMatrix a, DenseMatrix f, DenseMatrix c) : A(std::move(a)), F(std::move(f)), C(std::move(c)) {
    if (!A.square()) throw ConfigError("KalmanModel: A must be square");
    if (F.rows() != A.rows()) throw ConfigError("KalmanModel: F must have n rows");
    if (C.cols() != A.rows()) throw ConfigError("KalmanModel: C must have n columns");
    mat_inverse(A);  // A must be invertible
  }

  std::size_t n() const { return A.rows(); }
  std::size_t p() const { return F.cols(); }
  std::size_t q() const { return C.rows(); }
  DenseMatrix S() const { return F * F.transpose(); }
  DenseMatrix R() const { return C.transpose() * C; }

  static KalmanModel scalar(double a, double f, double c) {
    return {DenseMatrix{{a}}, DenseMatrix{{f}}, DenseMatrix{{c}}};
  }
};

inline DenseMatrix symplectic_J(std::size_t n) {
  DenseMatrix j(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    j(i, n + i) = 1.0;
    j(n + i, i) = -1.0;
  }
  return j;
}

// M^T J M = J, A invertible, B A^T and A^T C positive semi-definite. The
// symplectic residual is measured relative to max(1, |M|_max^2).
inline CheckReport check_H_membership(const SymplecticCandidate& m, const Tolerances& tol = default_tolerances()) {
  ReportBuilder b("H_membership", tol.symplectic);
  const std::size_t n = m.n();
  for (const auto* blk : {&m.A, &m.B, &m.C, &m.D})
    if (blk->rows() != n || blk->cols() != n) throw ConfigError("H_membership: blocks must all be n x n");

  const DenseMatrix mm = m.matrix();
  const DenseMatrix j = symplectic_J(n);
  const double scale = std::max(1.0, mm.max_abs() * mm.max_abs());
  const double sympl = max_abs_diff(mm.transpose() * j * mm, j) / scale;
  b.observe(sympl, !(sympl <= tol.symplectic), [&] { return "M^T J M != J"; });

  try {
    mat_inverse(m.A);
    b.observe_exact(false, "");
  } catch (const SingularMatrix&) {
    b.observe_exact(true, "A invertible");
  }
  b.observe_exact(!is_psd(m.B * m.A.transpose(), tol.psd), "B A^T PSD");
  b.observe_exact(!is_psd(m.A.transpose() * m.C, tol.psd), "A^T C PSD");

  auto r = std::move(b).finish();
  if (!r.passed) r.note = "failed clause: " + *r.counterexample;
  return r;
}

// The discrete Riccati action (A P + B)(C P + D)^-1, symmetrized.
inline SpdPoint riccati_action(const SymplecticCandidate& m, const SpdPoint& p) {
  const DenseMatrix& P = p.matrix();
  if (m.n() != p.n()) throw ConfigError("riccati_action: dimension mismatch");
  DenseMatrix denom_inv;
  try {
    denom_inv = mat_inverse(m.C * P + m.D);
  } catch (const SingularMatrix& e) {
    throw DomainError(std::string("riccati_action: C P + D singular: ") + e.what());
  }
  return SpdPoint(symmetrize((m.A * P + m.B) * denom_inv));
}

inline SpdPoint riccati_action(const DenseMatrix& m, const SpdPoint& p) {
  return riccati_action(SymplecticCandidate::from_matrix(m), p);
}

// sqrt(sum log^2 lambda_i(P Q^-1)), with the eigenvalues taken from the
// congruent symmetric matrix L^-1 P L^-T where Q = L L^T.
inline double spd_distance(const SpdPoint& p, const SpdPoint& q) {
  if (p.n() != q.n()) throw ConfigError("spd_distance: dimension mismatch");
  const DenseMatrix l = cholesky(q.matrix());
  const DenseMatrix x = forward_substitute(l, p.matrix());         // L^-1 P
  const DenseMatrix y = forward_substitute(l, x.transpose());      // L^-1 P^T L^-T = (L^-1 P L^-T)
  double s = 0.0;
  for (double lambda : sym_eigenvalues(symmetrize(y))) {
    if (!(lambda > 0.0)) throw NumericError("spd_distance: non-positive generalized eigenvalue");
    const double lg = std::log(lambda);
    s += lg * lg;
  }
  return std::sqrt(s);
}

// Random SPD matrix G G^T + floor * I.
inline SpdPoint random_spd(Rng& rng, std::size_t n, double floor = 0.1, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  DenseMatrix G(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) G(i, j) = g(rng);
  DenseMatrix P = G * G.transpose();
  for (std::size_t i = 0; i < n; ++i) P(i, i) += floor;
  return SpdPoint(symmetrize(P));
}

// Random model with A = I + noise (rejected until comfortably invertible).
inline KalmanModel random_model(Rng& rng, std::size_t n, double spread = 0.4) {
  std::normal_distribution<double> g(0.0, spread);
  auto rand = [&](std::size_t r, std::size_t c) {
    DenseMatrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) m(i, j) = g(rng);
    return m;
  };
  for (;;) {
    DenseMatrix A = DenseMatrix::identity(n) + rand(n, n);
    try {
      if (mat_inverse(A).max_abs() > 10.0) continue;
    } catch (const SingularMatrix&) {
      continue;
    }
    return {A, rand(n, n), rand(n, n)};
  }
}

// d(phi(M, P), phi(M, Q)) <= d(P, Q) + 1e-8 over random SPD pairs.
inline CheckReport check_contraction(const SymplecticCandidate& m, std::uint64_t seed, std::size_t sample_count,
                                     double slack = 1e-8) {
  ReportBuilder b("contraction", slack);
  Rng rng(mix_seed(seed, 70));
  for (std::size_t i = 0; i < sample_count; ++i) {
    const SpdPoint P = random_spd(rng, m.n());
    const SpdPoint Q = random_spd(rng, m.n());
    b.guard(
        [&] {
          const double after = spd_distance(riccati_action(m, P), riccati_action(m, Q));
          const double before = spd_distance(P, Q);
          b.observe(after - before, after > before + slack, [&] { return describe_tuple(P, Q); });
        },
        [&] { return describe_tuple(P, Q); });
  }
  return std::move(b).finish();
}

// M_k = [[A, S A^-T], [R A, (I + R S) A^-T]].
inline SymplecticCandidate build_Mk(const KalmanModel& model) {
  const DenseMatrix a_inv_t = mat_inverse(model.A).transpose();
  const DenseMatrix S = model.S();
  const DenseMatrix R = model.R();
  const DenseMatrix I = DenseMatrix::identity(model.n());
  return {model.A, S * a_inv_t, R * model.A, (I + R * S) * a_inv_t};
}

// (A P A^T + S)(I + R S + R A P A^T)^-1, symmetrized.
inline SpdPoint covariance_update(const KalmanModel& model, const SpdPoint& p) {
  const DenseMatrix APAt = model.A * p.matrix() * model.A.transpose();
  const DenseMatrix S = model.S();
  const DenseMatrix R = model.R();
  const DenseMatrix I = DenseMatrix::identity(model.n());
  DenseMatrix second_inv;
  try {
    second_inv = mat_inverse(I + R * S + R * APAt);
  } catch (const SingularMatrix& e) {
    throw DomainError(std::string("covariance_update: singular factor: ") + e.what());
  }
  return SpdPoint(symmetrize((APAt + S) * second_inv));
}

struct FixedPointResult {
  SpdPoint point;
  std::size_t iterations = 0;
  double lastStep = 0.0;           // d(P_{k+1}, P_k) at exit
  CheckReport equilibriumReport;   // d(update(P*), P*)
};

// Iterates covariance_update until d(P_{k+1}, P_k) <= tol.
inline FixedPointResult find_riccati_fixed_point(const KalmanModel& model, const SpdPoint& p0, double tol = 1e-13,
                                                 std::size_t max_iter = 10000) {
  SpdPoint p = p0;
  for (std::size_t k = 1; k <= max_iter; ++k) {
    SpdPoint next = covariance_update(model, p);
    const double step = spd_distance(next, p);
    p = std::move(next);
    if (step <= tol) {
      ReportBuilder b("riccati_fixed_point", tol);
      const double r = spd_distance(covariance_update(model, p), p);
      b.observe(r, !(r <= std::max(tol, 1e-12)), [&] { return describe(p); });
      return {p, k, step, std::move(b).finish()};
    }
  }
  throw NonConvergence("find_riccati_fixed_point: no convergence after " + std::to_string(max_iter) + " iterations");
}

struct FilterState {
  Vec xhat;
  SpdPoint P;
};

// x_k = (A - P_k R A) x_{k-1} + P_k C^T y with P_k = covariance_update(P).
inline FilterState kalman_filter_step(const KalmanModel& model, const Vec& xhat, const SpdPoint& p, const Vec& y) {
  if (xhat.size() != model.n() || y.size() != model.q()) throw ConfigError("kalman_filter_step: dimension mismatch");
  SpdPoint pk = covariance_update(model, p);
  const DenseMatrix gain = model.A - pk.matrix() * model.R() * model.A;
  Vec x = gain * xhat;
  const Vec innovation = (pk.matrix() * model.C.transpose()) * y;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += innovation[i];
  return {std::move(x), std::move(pk)};
}

// ---------------------------------------------------------------------------
// Setting and flow on the SPD cone. Time is the free monoid on `generators`,
// represented by explicit 2n x 2n products; sampled times are random words
// of length <= max_word.

struct RiccatiOptions {
  std::size_t max_word = 8;
  double tolerance = 1e-8;
  double spd_floor = 0.1;
};

inline TimeMonoid<DenseMatrix> word_time(const std::vector<SymplecticCandidate>& generators, std::size_t max_word) {
  if (generators.empty()) throw ConfigError("word_time: no generators");
  const std::size_t n2 = 2 * generators.front().n();
  std::vector<DenseMatrix> gens;
  for (const auto& g : generators) gens.push_back(g.matrix());
  TimeMonoid<DenseMatrix> t;
  t.name = "H-words";
  t.op = [](const DenseMatrix& a, const DenseMatrix& b) { return a * b; };
  t.unit = DenseMatrix::identity(n2);
  t.sampler.points = {t.unit};
  for (const auto& g : gens) t.sampler.points.push_back(g);
  t.sampler.generate = [gens, max_word, n2](Rng& rng) {
    const auto len = std::uniform_int_distribution<std::size_t>(1, max_word)(rng);
    DenseMatrix w = DenseMatrix::identity(n2);
    for (std::size_t i = 0; i < len; ++i) w = w * gens[std::uniform_int_distribution<std::size_t>(0, gens.size() - 1)(rng)];
    return w;
  };
  t.kind = TimeKind::DiscreteSampled;
  t.gap = [](const DenseMatrix& a, const DenseMatrix& b) {
    return max_abs_diff(a, b) / std::max({1.0, a.max_abs(), b.max_abs()});
  };
  t.tolerance = 1e-12;
  return t;
}

inline Setting<SpdPoint, DenseMatrix, RealStable> spd_setting(std::size_t n,
                                                              const std::vector<SymplecticCandidate>& generators,
                                                              const RiccatiOptions& o = {}) {
  Setting<SpdPoint, DenseMatrix, RealStable> s;
  s.name = "spd-cone";
  const double floor = o.spd_floor;
  s.space.generate = [n, floor](Rng& rng) { return random_spd(rng, n, floor); };
  s.time = word_time(generators, o.max_word);
  s.stable.tolerance = o.tolerance;
  s.distance = [](const SpdPoint& p, const SpdPoint& q) { return spd_distance(p, q); };
  return s;
}

inline Flow<SpdPoint, DenseMatrix, RealStable> riccati_flow(std::size_t n,
                                                            const std::vector<SymplecticCandidate>& generators,
                                                            const RiccatiOptions& o = {}) {
  return {spd_setting(n, generators, o),
          [](const DenseMatrix& m, const SpdPoint& p) { return riccati_action(m, p); }, o.tolerance, "riccati"};
}

inline CandidateV<SpdPoint, double> spd_distance_V(const SpdPoint& center) {
  return {[center](const SpdPoint& p) { return spd_distance(p, center); }, "d(P,P*)"};
}

struct KalmanLyapunovResult {
  SpdPoint fixedPoint;
  StabilityWitness<double> witness;
};

// V(P) = d(P, P*) is a Lyapunov morphism for the monoid generated by `m`,
// where P* is the fixed point reached from P0 by iterating the action.
// A non-member generator is a precondition failure.
inline KalmanLyapunovResult verify_riccati_lyapunov(const SymplecticCandidate& m, const SpdPoint& p0,
                                                    std::uint64_t seed, std::size_t sample_count,
                                                    const RiccatiOptions& o = {}) {
  auto member = check_H_membership(m);
  if (!member.passed) throw PreconditionFailed(std::move(member));

  SpdPoint p = p0;
  bool converged = false;
  for (std::size_t k = 0; k < 10000 && !converged; ++k) {
    SpdPoint next = riccati_action(m, p);
    converged = spd_distance(next, p) <= 1e-13;
    p = std::move(next);
  }
  if (!converged) throw NonConvergence("verify_riccati_lyapunov: fixed-point iteration did not converge");

  const auto flow = riccati_flow(m.n(), {m}, o);
  auto eq = check_equilibrium(flow, p, seed, sample_count);
  if (!eq.ok()) throw PreconditionFailed(std::move(eq.report));

  const auto id = identity_class_k<double>();
  auto witness = verify_lyapunov_theorem(spd_distance_V(p), flow, p, Envelope<double>{id, id}, seed, sample_count);
  return {p, std::move(witness)};
}

inline KalmanLyapunovResult verify_kalman_lyapunov(const KalmanModel& model, std::uint64_t seed,
                                                   std::size_t sample_count, const RiccatiOptions& o = {}) {
  const auto fp = find_riccati_fixed_point(model, SpdPoint(DenseMatrix::identity(model.n())));
  return verify_riccati_lyapunov(build_Mk(model), fp.point, seed, sample_count, o);
}

}  // namespace lyap
