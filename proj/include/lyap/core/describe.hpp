#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

namespace lyap {

using Vec = std::vector<double>;

// Human-readable rendering of carrier elements for counterexamples. Library
// types add overloads in their own headers and are found through ADL.
inline std::string describe(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

template <std::integral I>
std::string describe(I x) {
  return std::to_string(x);
}

inline std::string describe(const std::string& s) { return s; }

inline std::string describe(const Vec& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += describe(v[i]);
  }
  return out + "]";
}

template <class... Ts>
std::string describe_tuple(const Ts&... xs) {
  std::string out = "(";
  bool first = true;
  ((out += (first ? "" : ", ") + describe(xs), first = false), ...);
  return out + ")";
}

}  // namespace lyap
