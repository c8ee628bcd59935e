#pragma once

#include <algorithm>
#include <cmath>

namespace gpcbf {

/// Closed real interval with the usual enclosure arithmetic. Rounding is
/// not directed; callers add their own slack where it matters.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  Interval(double v) : lo(v), hi(v) {}  // NOLINT(google-explicit-constructor)
  Interval(double l, double h) : lo(l), hi(h) {}

  static Interval symmetric(double r) { return {-r, r}; }

  double mid() const { return 0.5 * (lo + hi); }
  double radius() const { return 0.5 * (hi - lo); }
  double mag() const { return std::max(std::abs(lo), std::abs(hi)); }
  bool contains(double v) const { return lo <= v && v <= hi; }
};

inline Interval operator+(Interval a, Interval b) {
  return {a.lo + b.lo, a.hi + b.hi};
}
inline Interval operator-(Interval a, Interval b) {
  return {a.lo - b.hi, a.hi - b.lo};
}
inline Interval operator-(Interval a) { return {-a.hi, -a.lo}; }
inline Interval operator*(Interval a, Interval b) {
  const double p[] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  return {*std::min_element(p, p + 4), *std::max_element(p, p + 4)};
}
inline Interval& operator+=(Interval& a, Interval b) { return a = a + b; }

/// Tight enclosure of x^k for integer k >= 0.
inline Interval pow(Interval x, int k) {
  if (k == 0) return {1.0, 1.0};
  const double a = std::pow(x.lo, k);
  const double b = std::pow(x.hi, k);
  if (k % 2 == 1) return {a, b};
  if (x.lo >= 0.0) return {a, b};
  if (x.hi <= 0.0) return {b, a};
  return {0.0, std::max(a, b)};
}

}  // namespace gpcbf
