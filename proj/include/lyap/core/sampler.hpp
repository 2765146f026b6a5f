#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <tuple>
#include <utility>
#include <vector>

#include "lyap/core/error.hpp"

namespace lyap {

using Rng = std::mt19937_64;

// splitmix64 finalizer; derives independent streams from one user seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// A carrier's sampling view. `points` are always visited first, in order.
// Without a generator the carrier is finite and `points` is all of it.
template <class T>
struct Sampler {
  std::vector<T> points;
  std::function<T(Rng&)> generate;

  bool exhaustive() const { return !generate; }

  std::vector<T> draw(std::uint64_t seed, std::size_t count) const {
    if (!generate && points.empty()) throw ConfigError("empty sampler");
    std::vector<T> out = points;
    if (generate) {
      Rng rng(seed);
      out.reserve(out.size() + count);
      for (std::size_t i = 0; i < count; ++i) out.push_back(generate(rng));
    }
    return out;
  }

  static Sampler finite(std::vector<T> all) { return Sampler{std::move(all), {}}; }
};

namespace detail {

template <class... Vs>
std::size_t zip_length(const Vs&... vs) {
  std::size_t n = 0;
  ((n = std::max(n, vs.size())), ...);
  return n;
}

}  // namespace detail

// Pairs for checks quantified over A x B. Finite x finite is enumerated in
// full; otherwise the two draws are zipped, cycling the shorter one.
template <class A, class B>
std::vector<std::pair<A, B>> sample_pairs(const Sampler<A>& sa, const Sampler<B>& sb,
                                          std::uint64_t seed, std::size_t count) {
  auto as = sa.draw(mix_seed(seed, 1), count);
  auto bs = sb.draw(mix_seed(seed, 2), count);
  std::vector<std::pair<A, B>> out;
  if (sa.exhaustive() && sb.exhaustive()) {
    out.reserve(as.size() * bs.size());
    for (const auto& a : as)
      for (const auto& b : bs) out.emplace_back(a, b);
    return out;
  }
  const std::size_t n = detail::zip_length(as, bs);
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(as[i % as.size()], bs[i % bs.size()]);
  return out;
}

template <class A, class B, class C>
std::vector<std::tuple<A, B, C>> sample_triples(const Sampler<A>& sa, const Sampler<B>& sb,
                                                const Sampler<C>& sc, std::uint64_t seed,
                                                std::size_t count) {
  auto as = sa.draw(mix_seed(seed, 3), count);
  auto bs = sb.draw(mix_seed(seed, 4), count);
  auto cs = sc.draw(mix_seed(seed, 5), count);
  std::vector<std::tuple<A, B, C>> out;
  if (sa.exhaustive() && sb.exhaustive() && sc.exhaustive()) {
    out.reserve(as.size() * bs.size() * cs.size());
    for (const auto& a : as)
      for (const auto& b : bs)
        for (const auto& c : cs) out.emplace_back(a, b, c);
    return out;
  }
  // Offset the middle stream so equal-length draws do not pair index i with i.
  const std::size_t n = detail::zip_length(as, bs, cs);
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.emplace_back(as[i % as.size()], bs[(i + 1) % bs.size()], cs[i % cs.size()]);
  return out;
}

}  // namespace lyap
