#pragma once

#include <string>
#include <vector>

#include "gpcbf/dynamics.hpp"
#include "gpcbf/interval.hpp"

namespace gpcbf {

using IntervalVector = std::vector<Interval>;

/// All monomials of total degree <= degree in n variables, in graded
/// lexicographic order: by degree, then by exponent of x1 descending, then
/// x2, and so on. For n = 2, degree 2: 1, x1, x2, x1^2, x1 x2, x2^2.
class BarrierTemplate {
 public:
  BarrierTemplate() = default;
  BarrierTemplate(int n, int degree, double coefficient_bound = 1e6);

  int dim() const { return n_; }
  int degree() const { return degree_; }
  int size() const { return static_cast<int>(exponents_.size()); }
  double coefficient_bound() const { return coefficient_bound_; }
  const std::vector<std::vector<int>>& exponents() const { return exponents_; }

  /// Index of the monomial with the given exponents, or -1.
  int index_of(const std::vector<int>& exponents) const;
  std::string monomial_name(int i) const;

  Vector evaluate(const Vector& x) const;   // b_i(x)
  Matrix gradient(const Vector& x) const;   // (i, d) = d b_i / d x_d
  /// d^2 b_i / dx_d dx_e, one n x n matrix per basis function.
  std::vector<Matrix> hessian(const Vector& x) const;

  /// Interval enclosure of d^2 b_i / dx_d dx_e over a box, entry [i][d*n+e].
  std::vector<IntervalVector> hessian(const IntervalVector& box) const;

 private:
  int n_ = 0;
  int degree_ = 0;
  double coefficient_bound_ = 1e6;
  std::vector<std::vector<int>> exponents_;
};

/// B(a, x) = sum_i a_i b_i(x) for a fixed coefficient vector.
struct BarrierCandidate {
  BarrierTemplate basis;
  Vector coefficients;

  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  Matrix hessian(const Vector& x) const;
  /// Enclosure of the Hessian of B over a box, row-major n x n.
  IntervalVector hessian(const IntervalVector& box) const;
  /// True when every |a_i| <= coefficient bound.
  bool within_bound() const;
};

/// The published degree-2 barrier for the jet-engine benchmark:
/// B = -4292.8910 + 1129.2414 x1 + 1010.3266 x2 + 1274.3322 x1^2
///     + 1564.8195 x2^2 - 1368.6064 x1 x2.
BarrierCandidate reference_jet_engine_barrier();

}  // namespace gpcbf
