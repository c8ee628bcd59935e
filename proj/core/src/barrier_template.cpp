#include <cmath>
#include <stdexcept>

#include "gpcbf/barrier.hpp"

namespace gpcbf {

namespace {

void compositions(int remaining, int slot, std::vector<int>& cur,
                  std::vector<std::vector<int>>& out) {
  const int n = static_cast<int>(cur.size());
  if (slot == n - 1) {
    cur[slot] = remaining;
    out.push_back(cur);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    cur[slot] = e;
    compositions(remaining - e, slot + 1, cur, out);
  }
}

double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

// Coefficient and reduced exponents of d/dx_d applied to a monomial.
bool differentiate(std::vector<int>& exps, int d, double& factor) {
  if (exps[d] == 0) return false;
  factor *= exps[d];
  --exps[d];
  return true;
}

double monomial(const std::vector<int>& exps, const Vector& x) {
  double v = 1.0;
  for (std::size_t d = 0; d < exps.size(); ++d) v *= ipow(x[d], exps[d]);
  return v;
}

Interval monomial(const std::vector<int>& exps, const IntervalVector& box) {
  Interval v(1.0);
  for (std::size_t d = 0; d < exps.size(); ++d) v = v * pow(box[d], exps[d]);
  return v;
}

}  // namespace

BarrierTemplate::BarrierTemplate(int n, int degree, double coefficient_bound)
    : n_(n), degree_(degree), coefficient_bound_(coefficient_bound) {
  if (n < 1 || degree < 0) {
    throw std::invalid_argument("BarrierTemplate: need n >= 1, degree >= 0");
  }
  if (!(coefficient_bound > 0.0)) {
    throw std::invalid_argument("BarrierTemplate: coefficient bound must be > 0");
  }
  std::vector<int> cur(n, 0);
  for (int deg = 0; deg <= degree; ++deg) compositions(deg, 0, cur, exponents_);
}

int BarrierTemplate::index_of(const std::vector<int>& exps) const {
  for (int i = 0; i < size(); ++i) {
    if (exponents_[i] == exps) return i;
  }
  return -1;
}

std::string BarrierTemplate::monomial_name(int i) const {
  std::string name;
  for (int d = 0; d < n_; ++d) {
    const int e = exponents_[i][d];
    if (e == 0) continue;
    if (!name.empty()) name += "*";
    name += "x" + std::to_string(d + 1);
    if (e > 1) name += "^" + std::to_string(e);
  }
  return name.empty() ? "1" : name;
}

Vector BarrierTemplate::evaluate(const Vector& x) const {
  Vector b(size());
  for (int i = 0; i < size(); ++i) b[i] = monomial(exponents_[i], x);
  return b;
}

Matrix BarrierTemplate::gradient(const Vector& x) const {
  Matrix g = Matrix::Zero(size(), n_);
  for (int i = 0; i < size(); ++i) {
    for (int d = 0; d < n_; ++d) {
      std::vector<int> e = exponents_[i];
      double factor = 1.0;
      if (differentiate(e, d, factor)) g(i, d) = factor * monomial(e, x);
    }
  }
  return g;
}

std::vector<Matrix> BarrierTemplate::hessian(const Vector& x) const {
  std::vector<Matrix> out(size(), Matrix::Zero(n_, n_));
  for (int i = 0; i < size(); ++i) {
    for (int d = 0; d < n_; ++d) {
      for (int e = 0; e < n_; ++e) {
        std::vector<int> ex = exponents_[i];
        double factor = 1.0;
        if (differentiate(ex, d, factor) && differentiate(ex, e, factor)) {
          out[i](d, e) = factor * monomial(ex, x);
        }
      }
    }
  }
  return out;
}

std::vector<IntervalVector> BarrierTemplate::hessian(
    const IntervalVector& box) const {
  std::vector<IntervalVector> out(size(), IntervalVector(n_ * n_, Interval(0.0)));
  for (int i = 0; i < size(); ++i) {
    for (int d = 0; d < n_; ++d) {
      for (int e = 0; e < n_; ++e) {
        std::vector<int> ex = exponents_[i];
        double factor = 1.0;
        if (differentiate(ex, d, factor) && differentiate(ex, e, factor)) {
          out[i][d * n_ + e] = Interval(factor) * monomial(ex, box);
        }
      }
    }
  }
  return out;
}

double BarrierCandidate::value(const Vector& x) const {
  return coefficients.dot(basis.evaluate(x));
}

Vector BarrierCandidate::gradient(const Vector& x) const {
  return basis.gradient(x).transpose() * coefficients;
}

Matrix BarrierCandidate::hessian(const Vector& x) const {
  const auto parts = basis.hessian(x);
  Matrix h = Matrix::Zero(basis.dim(), basis.dim());
  for (int i = 0; i < basis.size(); ++i) h += coefficients[i] * parts[i];
  return h;
}

IntervalVector BarrierCandidate::hessian(const IntervalVector& box) const {
  const int n = basis.dim();
  const auto parts = basis.hessian(box);
  IntervalVector h(n * n, Interval(0.0));
  for (int i = 0; i < basis.size(); ++i) {
    if (coefficients[i] == 0.0) continue;
    for (int k = 0; k < n * n; ++k) h[k] += Interval(coefficients[i]) * parts[i][k];
  }
  return h;
}

bool BarrierCandidate::within_bound() const {
  return coefficients.cwiseAbs().maxCoeff() <= basis.coefficient_bound();
}

BarrierCandidate reference_jet_engine_barrier() {
  BarrierCandidate b;
  b.basis = BarrierTemplate(2, 2);
  b.coefficients = Vector::Zero(b.basis.size());
  b.coefficients[b.basis.index_of({0, 0})] = -4292.8910;
  b.coefficients[b.basis.index_of({1, 0})] = 1129.2414;
  b.coefficients[b.basis.index_of({0, 1})] = 1010.3266;
  b.coefficients[b.basis.index_of({2, 0})] = 1274.3322;
  b.coefficients[b.basis.index_of({0, 2})] = 1564.8195;
  b.coefficients[b.basis.index_of({1, 1})] = -1368.6064;
  return b;
}

}  // namespace gpcbf
