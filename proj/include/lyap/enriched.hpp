#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lyap/classk.hpp"
#include "lyap/flows.hpp"
#include "lyap/lyapunov.hpp"

namespace lyap {

// ---------------------------------------------------------------------------
// [0, inf] with +, x and max. 0 x inf = 0.

class ExtendedNonnegReal {
 public:
  constexpr ExtendedNonnegReal() = default;
  constexpr ExtendedNonnegReal(double v) : v_(v) {  // NOLINT(google-explicit-constructor)
    if (!(v >= 0.0)) throw ConfigError("ExtendedNonnegReal: negative or NaN value");
  }
  static constexpr ExtendedNonnegReal infinity() { return ExtendedNonnegReal(std::numeric_limits<double>::infinity()); }

  constexpr double value() const { return v_; }
  constexpr bool is_infinite() const { return v_ == std::numeric_limits<double>::infinity(); }

  friend constexpr ExtendedNonnegReal operator+(ExtendedNonnegReal a, ExtendedNonnegReal b) { return {a.v_ + b.v_}; }
  friend constexpr ExtendedNonnegReal operator*(ExtendedNonnegReal a, ExtendedNonnegReal b) {
    if (a.v_ == 0.0 || b.v_ == 0.0) return {0.0};
    return {a.v_ * b.v_};
  }
  friend constexpr ExtendedNonnegReal max(ExtendedNonnegReal a, ExtendedNonnegReal b) { return a.v_ >= b.v_ ? a : b; }
  friend constexpr auto operator<=>(const ExtendedNonnegReal&, const ExtendedNonnegReal&) = default;

 private:
  double v_ = 0.0;
};

inline std::string describe(ExtendedNonnegReal x) { return describe(x.value()); }

// Stable object on [0, inf] with the numeric order.
struct ExtendedRealStable {
  using value_type = ExtendedNonnegReal;
  double tolerance = 1e-9;

  value_type zero() const { return 0.0; }
  value_type one() const { return 1.0; }
  value_type add(value_type a, value_type b) const { return a + b; }
  value_type mul(value_type a, value_type b) const { return a * b; }
  value_type join(value_type a, value_type b) const { return max(a, b); }

  PosetCompare compare(value_type a, value_type b) const {
    if (a == b) return PosetCompare::Equal;
    if (!a.is_infinite() && !b.is_infinite() && std::abs(a.value() - b.value()) <= tolerance)
      return PosetCompare::Equal;
    return a < b ? PosetCompare::Less : PosetCompare::Greater;
  }
  double excess(value_type a, value_type b) const {
    if (a == b) return 0.0;
    return a.value() - b.value();
  }
  double magnitude(value_type a) const { return a.value(); }

  Sampler<value_type> values() const {
    return {{0.0, 1.0, value_type::infinity()},
            [](Rng& rng) { return value_type(std::uniform_real_distribution<double>(0.0, 10.0)(rng)); }};
  }
};

static_assert(Bimonoidal<ExtendedRealStable>);

// ---------------------------------------------------------------------------
// Finite Lawvere metric spaces.

struct LawvereSpace {
  std::vector<std::string> objects;
  std::vector<ExtendedNonnegReal> hom;  // row-major, hom[x * n + y] = C(x, y)

  std::size_t size() const { return objects.size(); }
  ExtendedNonnegReal operator()(std::size_t x, std::size_t y) const { return hom[x * size() + y]; }
  ExtendedNonnegReal& at(std::size_t x, std::size_t y) { return hom[x * size() + y]; }

  std::optional<std::size_t> index_of(const std::string& name) const {
    auto it = std::find(objects.begin(), objects.end(), name);
    if (it == objects.end()) return std::nullopt;
    return static_cast<std::size_t>(it - objects.begin());
  }

  static LawvereSpace discrete(std::vector<std::string> names) {
    LawvereSpace s{std::move(names), {}};
    s.hom.assign(s.size() * s.size(), ExtendedNonnegReal::infinity());
    for (std::size_t i = 0; i < s.size(); ++i) s.at(i, i) = 0.0;
    return s;
  }
};

struct WeightedEdge {
  std::size_t src;
  std::size_t dst;
  ExtendedNonnegReal weight;
};

// Min-plus transitive closure with zero diagonal (Floyd-Warshall).
inline LawvereSpace shortest_path_closure(std::vector<std::string> nodes, const std::vector<WeightedEdge>& edges) {
  LawvereSpace s = LawvereSpace::discrete(std::move(nodes));
  const std::size_t n = s.size();
  for (const auto& e : edges) {
    if (e.src >= n || e.dst >= n) throw ConfigError("shortest_path_closure: edge endpoint out of range");
    s.at(e.src, e.dst) = std::min(s(e.src, e.dst), e.weight);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      if (s(i, k).is_infinite()) continue;
      for (std::size_t j = 0; j < n; ++j) {
        const auto via = s(i, k) + s(k, j);
        if (via < s(i, j)) s.at(i, j) = via;
      }
    }
  return s;
}

inline std::string object_tuple(const LawvereSpace& s, std::initializer_list<std::size_t> idx) {
  std::string out = "(";
  bool first = true;
  for (auto i : idx) {
    out += (first ? "" : ", ") + s.objects[i];
    first = false;
  }
  return out + ")";
}

// hom(x, x) = 0 and hom(x, y) + hom(y, z) >= hom(x, z), exhaustively.
inline CheckReport check_enriched_axioms(const LawvereSpace& s) {
  ReportBuilder b("enriched_axioms");
  const std::size_t n = s.size();
  for (std::size_t x = 0; x < n; ++x) b.observe_exact(s(x, x) != ExtendedNonnegReal(0.0), object_tuple(s, {x, x}), s(x, x).value());
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t z = 0; z < n; ++z) {
        const auto via = s(x, y) + s(y, z);
        // Real weights from a closure can miss the triangle by rounding.
        const bool broken = via < s(x, z) && s(x, z).value() - via.value() > 1e-12 * (1.0 + s(x, z).value());
        b.observe_exact(broken, object_tuple(s, {x, y, z}),
                        s(x, z).is_infinite() ? std::numeric_limits<double>::infinity() : s(x, z).value() - via.value());
      }
  return std::move(b).finish();
}

// Least K with K * dom(x, y) >= cod(f x, f y) over all ordered pairs. Pairs at
// infinite domain distance impose nothing; dom = 0 < cod gives infinity.
inline ExtendedNonnegReal lipschitz_constant(const std::vector<std::size_t>& f, const LawvereSpace& dom,
                                             const LawvereSpace& cod) {
  if (f.size() != dom.size()) throw ConfigError("lipschitz_constant: map not total on domain");
  double k = 0.0;
  for (std::size_t x = 0; x < dom.size(); ++x)
    for (std::size_t y = 0; y < dom.size(); ++y) {
      if (f[x] >= cod.size() || f[y] >= cod.size()) throw ConfigError("lipschitz_constant: image out of range");
      const auto d = dom(x, y);
      const auto c = cod(f[x], f[y]);
      if (d.is_infinite() || c.value() == 0.0) continue;
      if (d.value() == 0.0 || c.is_infinite()) return ExtendedNonnegReal::infinity();
      k = std::max(k, c.value() / d.value());
    }
  return k;
}

// Objects are pairs (c, d) at index c * |D| + d; hom is the max of components.
inline LawvereSpace product_space(const LawvereSpace& cs, const LawvereSpace& ds) {
  LawvereSpace p;
  for (const auto& c : cs.objects)
    for (const auto& d : ds.objects) p.objects.push_back("(" + c + "," + d + ")");
  const std::size_t nd = ds.size();
  p.hom.resize(p.size() * p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j) p.at(i, j) = max(cs(i / nd, j / nd), ds(i % nd, j % nd));
  return p;
}

inline std::vector<std::size_t> product_projection(const LawvereSpace& cs, const LawvereSpace& ds, bool first) {
  std::vector<std::size_t> pr(cs.size() * ds.size());
  for (std::size_t i = 0; i < pr.size(); ++i) pr[i] = first ? i / ds.size() : i % ds.size();
  return pr;
}

// hom'(x, y) = max(hom(x, y), hom(y, x)).
inline LawvereSpace symmetrize(const LawvereSpace& s) {
  LawvereSpace out = s;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) out.at(i, j) = max(s(i, j), s(j, i));
  return out;
}

// Positivity, separation up to isomorphism, triangle inequality.
inline CheckReport check_enriched_distance_props(const LawvereSpace& s) {
  ReportBuilder b("enriched_distance_props");
  const std::size_t n = s.size();
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      b.observe_exact(!(s(x, y).value() >= 0.0), "positivity " + object_tuple(s, {x, y}));
      if (x != y && s(x, y) == ExtendedNonnegReal(0.0) && s(y, x) == ExtendedNonnegReal(0.0)) {
        bool iso = true;
        for (std::size_t z = 0; z < n; ++z) iso = iso && s(x, z) == s(y, z) && s(z, x) == s(z, y);
        b.observe_exact(!iso, "separation " + object_tuple(s, {x, y}));
      }
    }
  auto tri = check_enriched_axioms(s);
  return merge("enriched_distance_props", std::move(b).finish(), tri);
}

inline Setting<std::size_t, std::uint64_t, ExtendedRealStable> lawvere_setting(const LawvereSpace& s,
                                                                                std::uint64_t times_upto) {
  Setting<std::size_t, std::uint64_t, ExtendedRealStable> st;
  st.name = "lawvere";
  std::vector<std::size_t> all(s.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  st.space = Sampler<std::size_t>::finite(std::move(all));
  st.time = natural_time(times_upto);
  st.distance = [s](std::size_t x, std::size_t y) { return s(x, y); };
  st.normOrder = NormOrder::CenterThenPoint;
  return st;
}

// Smallest K such that every iterate f^k equals one of f^0..f^K.
inline std::uint64_t distinct_iterate_bound(const std::vector<std::size_t>& f) {
  std::vector<std::vector<std::size_t>> seen;
  std::vector<std::size_t> g(f.size());
  std::iota(g.begin(), g.end(), std::size_t{0});
  while (std::find(seen.begin(), seen.end(), g) == seen.end()) {
    seen.push_back(g);
    for (auto& v : g) v = f[v];
  }
  return seen.size() - 1;
}

inline Flow<std::size_t, std::uint64_t, ExtendedRealStable> lawvere_flow(const LawvereSpace& s,
                                                                         std::vector<std::size_t> point_map) {
  if (point_map.size() != s.size()) throw ConfigError("lawvere_flow: point map not total");
  for (auto v : point_map)
    if (v >= s.size()) throw ConfigError("lawvere_flow: point map out of range");
  auto setting = lawvere_setting(s, distinct_iterate_bound(point_map));
  return {std::move(setting),
          [f = std::move(point_map)](std::uint64_t k, std::size_t x) {
            for (std::uint64_t i = 0; i < k; ++i) x = f[x];
            return x;
          },
          0.0, "lawvere-iteration"};
}

// ---------------------------------------------------------------------------
// Power set P(E), |E| <= 63, as bit masks.

struct SubsetValue {
  std::uint32_t baseSize = 0;
  std::uint64_t bits = 0;

  static SubsetValue empty(std::uint32_t n) { return {n, 0}; }
  static SubsetValue full(std::uint32_t n) { return {n, n == 64 ? ~0ULL : ((1ULL << n) - 1)}; }
  static SubsetValue singleton(std::uint32_t n, std::size_t e) { return {n, 1ULL << e}; }

  bool contains(std::size_t e) const { return (bits >> e) & 1ULL; }
  std::size_t count() const { return static_cast<std::size_t>(std::popcount(bits)); }

  friend bool operator==(const SubsetValue&, const SubsetValue&) = default;
};

inline std::string describe(const SubsetValue& u) {
  std::string out = "{";
  bool first = true;
  for (std::uint32_t e = 0; e < u.baseSize; ++e)
    if (u.contains(e)) {
      out += (first ? "" : ",") + std::to_string(e);
      first = false;
    }
  return out + "}";
}

namespace detail {
inline void same_base(const SubsetValue& a, const SubsetValue& b) {
  if (a.baseSize != b.baseSize) throw ConfigError("subset values over different base sets");
}
}  // namespace detail

inline SubsetValue set_union(const SubsetValue& a, const SubsetValue& b) {
  detail::same_base(a, b);
  return {a.baseSize, a.bits | b.bits};
}
inline SubsetValue set_intersection(const SubsetValue& a, const SubsetValue& b) {
  detail::same_base(a, b);
  return {a.baseSize, a.bits & b.bits};
}
inline SubsetValue set_difference(const SubsetValue& a, const SubsetValue& b) {
  detail::same_base(a, b);
  return {a.baseSize, a.bits & ~b.bits};
}

// (U \ V) u (V \ U).
inline SubsetValue powerset_distance(const SubsetValue& u, const SubsetValue& v) {
  detail::same_base(u, v);
  return {u.baseSize, u.bits ^ v.bits};
}

inline std::vector<SubsetValue> all_subsets(std::uint32_t n) {
  if (n > 20) throw ConfigError("all_subsets: base set too large to enumerate");
  std::vector<SubsetValue> out;
  out.reserve(std::size_t{1} << n);
  for (std::uint64_t b = 0; b < (1ULL << n); ++b) out.push_back({n, b});
  return out;
}

// P(E) ordered by inclusion (a <= b iff a is a subset of b), join = union,
// add = union with unit {}, mul = intersection with unit E.
struct SubsetStable {
  using value_type = SubsetValue;
  std::uint32_t baseSize = 0;
  double tolerance = 0.0;

  value_type zero() const { return SubsetValue::empty(baseSize); }
  value_type one() const { return SubsetValue::full(baseSize); }
  value_type add(const value_type& a, const value_type& b) const { return set_union(a, b); }
  value_type mul(const value_type& a, const value_type& b) const { return set_intersection(a, b); }
  value_type join(const value_type& a, const value_type& b) const { return set_union(a, b); }

  PosetCompare compare(const value_type& a, const value_type& b) const {
    detail::same_base(a, b);
    if (a.bits == b.bits) return PosetCompare::Equal;
    if ((a.bits & b.bits) == b.bits) return PosetCompare::Greater;
    if ((a.bits & b.bits) == a.bits) return PosetCompare::Less;
    return PosetCompare::Incomparable;
  }
  // Elements of a missing from b.
  double excess(const value_type& a, const value_type& b) const {
    return static_cast<double>(std::popcount(a.bits & ~b.bits));
  }
  double magnitude(const value_type& a) const { return static_cast<double>(a.count()); }

  Sampler<value_type> values() const { return Sampler<value_type>::finite(all_subsets(baseSize)); }
};

static_assert(Bimonoidal<SubsetStable>);

// Finite set E with a self-map generating the flow on P(E).
struct SetSystem {
  std::vector<std::string> base;
  std::vector<std::size_t> pointMap;

  std::uint32_t size() const { return static_cast<std::uint32_t>(base.size()); }

  SetSystem(std::vector<std::string> names, std::vector<std::size_t> map)
      : base(std::move(names)), pointMap(std::move(map)) {
    if (pointMap.size() != base.size()) throw ConfigError("SetSystem: point map not total");
    if (base.size() > 20) throw ConfigError("SetSystem: at most 20 elements");
    for (auto v : pointMap)
      if (v >= base.size()) throw ConfigError("SetSystem: point map out of range");
  }

  std::string render(const SubsetValue& u) const {
    std::string out = "{";
    bool first = true;
    for (std::size_t e = 0; e < base.size(); ++e)
      if (u.contains(e)) {
        out += (first ? "" : ",") + base[e];
        first = false;
      }
    return out + "}";
  }
};

inline SubsetValue image(const std::vector<std::size_t>& f, const SubsetValue& u) {
  SubsetValue out{u.baseSize, 0};
  for (std::uint64_t b = u.bits; b; b &= b - 1) out.bits |= 1ULL << f[static_cast<std::size_t>(std::countr_zero(b))];
  return out;
}

// Forward image of U under the point map, k times.
inline SubsetValue powerset_flow(const SetSystem& sys, std::uint64_t k, const SubsetValue& u) {
  if (u.baseSize != sys.size()) throw ConfigError("powerset_flow: base mismatch");
  SubsetValue v = u;
  for (std::uint64_t i = 0; i < k; ++i) v = image(sys.pointMap, v);
  return v;
}

// Class K morphism on P(E) induced elementwise by a permutation.
inline ClassKMorphism<SubsetValue> classk_from_permutation(const std::vector<std::size_t>& sigma) {
  std::vector<std::size_t> inv(sigma.size(), sigma.size());
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (sigma[i] >= sigma.size() || inv[sigma[i]] != sigma.size())
      throw ConfigError("classk_from_permutation: not a bijection");
    inv[sigma[i]] = i;
  }
  std::string label = "perm[";
  for (std::size_t i = 0; i < sigma.size(); ++i) label += (i ? "," : "") + std::to_string(sigma[i]);
  label += "]";
  return {[sigma](const SubsetValue& u) { return image(sigma, u); },
          [inv](const SubsetValue& u) { return image(inv, u); }, label};
}

// All |E|! permutation-induced class K morphisms, identity first.
inline std::vector<ClassKMorphism<SubsetValue>> permutation_family(std::uint32_t n) {
  std::vector<std::size_t> sigma(n);
  std::iota(sigma.begin(), sigma.end(), std::size_t{0});
  std::vector<ClassKMorphism<SubsetValue>> out;
  do {
    out.push_back(classk_from_permutation(sigma));
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  return out;
}

inline Setting<SubsetValue, std::uint64_t, SubsetStable> powerset_setting(const SetSystem& sys) {
  Setting<SubsetValue, std::uint64_t, SubsetStable> s;
  s.name = "powerset";
  s.space = Sampler<SubsetValue>::finite(all_subsets(sys.size()));
  s.time = natural_time(distinct_iterate_bound(sys.pointMap));
  s.stable.baseSize = sys.size();
  s.distance = powerset_distance;
  return s;
}

inline Flow<SubsetValue, std::uint64_t, SubsetStable> powerset_flow_of(const SetSystem& sys) {
  return {powerset_setting(sys), [sys](std::uint64_t k, const SubsetValue& u) { return powerset_flow(sys, k, u); },
          0.0, "powerset-image"};
}

namespace detail {
inline void require_fixed(const SetSystem& sys, std::size_t x_star) {
  if (x_star >= sys.size() || sys.pointMap[x_star] != x_star) {
    CheckReport r;
    r.lawName = "equilibrium";
    r.passed = false;
    r.samplesChecked = 1;
    r.worstResidual = 1.0;
    r.counterexample = x_star < sys.size() ? sys.base[x_star] : std::to_string(x_star);
    r.note = "x* is not a fixed point of the point map";
    throw PreconditionFailed(std::move(r));
  }
}
}  // namespace detail

// ||phi_k(U)|| subset of alpha(||U||) for all U and k, exhaustively; returns
// the first alpha in `family` that works.
inline StabilityWitness<SubsetValue> check_set_stability(const SetSystem& sys, std::size_t x_star,
                                                         const std::vector<ClassKMorphism<SubsetValue>>& family) {
  detail::require_fixed(sys, x_star);
  const auto flow = powerset_flow_of(sys);
  const auto center = SubsetValue::singleton(sys.size(), x_star);
  auto eq = check_equilibrium(flow, center, 0, 0);
  if (!eq.ok()) throw PreconditionFailed(std::move(eq.report));

  StabilityWitness<SubsetValue> last{identity_class_k<SubsetValue>(), {}};
  last.report.lawName = "set_stability";
  last.report.passed = false;
  for (const auto& alpha : family) {
    if (!check_class_k(alpha, flow.setting.stable, 0, 0).passed) continue;
    auto w = check_stable(flow, center, alpha, 0, 0);
    if (w.ok()) return w;
    last = std::move(w);
  }
  last.report.passed = false;
  last.report.note = "no candidate alpha in the family passed";
  return last;
}

// V(U) = union over k of ||phi_k(U)||, exact by orbit enumeration.
inline CandidateV<SubsetValue, SubsetValue> powerset_converse_V(const SetSystem& sys, std::size_t x_star) {
  const auto flow = powerset_flow_of(sys);
  const auto center = SubsetValue::singleton(sys.size(), x_star);
  HorizonPolicy<std::uint64_t> policy{HorizonMode::CycleDetect, 0, 1, 1.0};
  return supremum_of_norms(flow, center, policy);
}

struct ConverseCheckResult {
  CheckReport report;
  std::optional<Envelope<SubsetValue>> envelope;
};

// Builds the orbit-union V and searches the permutation family for an upper
// envelope (the lower one is id), then checks V is positive definite and
// decrescent, all exhaustively.
inline ConverseCheckResult exhaustive_converse_check(const SetSystem& sys, std::size_t x_star) {
  detail::require_fixed(sys, x_star);
  const auto flow = powerset_flow_of(sys);
  const auto center = SubsetValue::singleton(sys.size(), x_star);
  const auto V = powerset_converse_V(sys, x_star);

  auto dec = check_decrescent(V, flow, 0, 0);
  CheckReport pd;
  pd.passed = false;
  std::optional<Envelope<SubsetValue>> found;
  for (const auto& upper : permutation_family(sys.size())) {
    Envelope<SubsetValue> env{identity_class_k<SubsetValue>(), upper};
    pd = check_positive_definite(V, center, env, flow.setting, 0, 0);
    if (pd.passed) {
      found = env;
      break;
    }
  }
  if (!found) pd.note = "no permutation upper envelope bounds V";
  auto r = merge("exhaustive_converse", pd, dec);
  return {std::move(r), found};
}

}  // namespace lyap
