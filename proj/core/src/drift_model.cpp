#include "gpcbf/drift_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gpcbf {

GPMeanDrift::GPMeanDrift(std::shared_ptr<const GPPosterior> gp)
    : gp_(std::move(gp)) {
  if (!gp_) throw std::invalid_argument("GPMeanDrift: null posterior");
  const int n = gp_->dim();
  for (int j = 0; j < n; ++j) {
    const KernelSpec& k = gp_->kernel(j);
    const double scale =
        std::sqrt(k.signal_variance) * std::sqrt(std::max(gp_->target_energy(j), 0.0));
    Matrix m(n, n);
    for (int d = 0; d < n; ++d) {
      for (int e = 0; e < n; ++e) {
        const double c = d == e ? std::numbers::sqrt3 : 1.0;
        m(d, e) = c * scale / (k.length_scales[d] * k.length_scales[e]);
      }
    }
    curvature_.push_back(std::move(m));
  }
}

AnalyticDrift::AnalyticDrift(int n, std::function<Vector(const Vector&)> value,
                             std::function<Matrix(const Vector&)> jacobian,
                             std::vector<Matrix> curvature)
    : n_(n),
      value_(std::move(value)),
      jacobian_(std::move(jacobian)),
      curvature_(std::move(curvature)) {
  if (static_cast<int>(curvature_.size()) != n) {
    throw std::invalid_argument("AnalyticDrift: one curvature matrix per output");
  }
}

std::shared_ptr<const DriftModel> zero_drift(int n) {
  return std::make_shared<AnalyticDrift>(
      n, [n](const Vector&) { return Vector::Zero(n).eval(); },
      [n](const Vector&) { return Matrix::Zero(n, n).eval(); },
      std::vector<Matrix>(n, Matrix::Zero(n, n)));
}

std::shared_ptr<const DriftModel> jet_engine_drift(const Box& state_box) {
  const ControlAffineSystem sys = jet_engine_system();
  // d^2 f1 / dx1^2 = -3 - 3 x1, every other second derivative vanishes.
  const double lo = state_box.lower[0];
  const double hi = state_box.upper[0];
  const double f1_11 = std::max(std::abs(-3.0 - 3.0 * lo), std::abs(-3.0 - 3.0 * hi));
  std::vector<Matrix> curvature(2, Matrix::Zero(2, 2));
  curvature[0](0, 0) = f1_11;
  return std::make_shared<AnalyticDrift>(
      2, sys.drift,
      [](const Vector& x) {
        Matrix j(2, 2);
        j << -3.0 * x[0] - 1.5 * x[0] * x[0], -1.0, 1.0, 0.0;
        return j;
      },
      std::move(curvature));
}

}  // namespace gpcbf
