#include "gpcbf/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace gpcbf {

Box::Box(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) {
    throw std::invalid_argument("Box: lower/upper dimension mismatch");
  }
  for (Eigen::Index j = 0; j < lower.size(); ++j) {
    if (!(lower[j] <= upper[j])) {
      throw std::invalid_argument("Box: lower[" + std::to_string(j) +
                                  "] > upper[" + std::to_string(j) + "]");
    }
  }
}

bool Box::contains(const Vector& x, double tol) const {
  if (x.size() != lower.size()) return false;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x[j] < lower[j] - tol || x[j] > upper[j] + tol) return false;
  }
  return true;
}

bool Box::contains(const Box& other) const {
  return other.dim() == dim() && (other.lower.array() >= lower.array()).all() &&
         (other.upper.array() <= upper.array()).all();
}

bool Box::intersects(const Box& other) const {
  if (other.dim() != dim()) return false;
  for (int j = 0; j < dim(); ++j) {
    if (other.upper[j] < lower[j] || other.lower[j] > upper[j]) return false;
  }
  return true;
}

bool contained_in_any(const std::vector<Box>& boxes, const Vector& x) {
  for (const auto& b : boxes) {
    if (b.contains(x)) return true;
  }
  return false;
}

void ProblemSpec::validate() const {
  if (n <= 0 || m <= 0) {
    throw std::invalid_argument("ProblemSpec: n and m must be positive");
  }
  if (state_box.dim() != n) {
    throw std::invalid_argument("ProblemSpec: state_box has wrong dimension");
  }
  auto check_boxes = [&](const std::vector<Box>& boxes, const char* name) {
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (boxes[i].dim() != n) {
        throw std::invalid_argument(std::string("ProblemSpec: ") + name + "[" +
                                    std::to_string(i) +
                                    "] has wrong dimension");
      }
      if (!state_box.contains(boxes[i])) {
        throw std::invalid_argument(std::string("ProblemSpec: ") + name + "[" +
                                    std::to_string(i) +
                                    "] is not inside state_box");
      }
    }
  };
  check_boxes(initial_boxes, "initial_boxes");
  check_boxes(unsafe_boxes, "unsafe_boxes");
  for (const auto& a : initial_boxes) {
    for (const auto& b : unsafe_boxes) {
      if (a.intersects(b)) {
        throw std::invalid_argument(
            "ProblemSpec: initial and unsafe regions intersect");
      }
    }
  }
  if (inputs.empty()) {
    throw std::invalid_argument("ProblemSpec: input set is empty");
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != m) {
      throw std::invalid_argument("ProblemSpec: input " + std::to_string(i) +
                                  " has wrong dimension");
    }
    for (std::size_t k = 0; k < i; ++k) {
      if (inputs[k] == inputs[i]) {
        throw std::invalid_argument("ProblemSpec: duplicate input " +
                                    std::to_string(i));
      }
    }
  }
}

Vector ControlAffineSystem::vector_field(const Vector& x,
                                         const Vector& u) const {
  return drift(x) + input_map(x) * u;
}

Vector rk4_step(const std::function<Vector(const Vector&)>& rhs,
                const Vector& x, double h) {
  const Vector k1 = rhs(x);
  const Vector k2 = rhs(x + 0.5 * h * k1);
  const Vector k3 = rhs(x + 0.5 * h * k2);
  const Vector k4 = rhs(x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

TrainingSet TrainingSet::prefix(int count) const {
  if (count < 0 || count > size()) {
    throw std::out_of_range("TrainingSet::prefix: count out of range");
  }
  TrainingSet out;
  out.states = states.topRows(count);
  out.targets = targets.topRows(count);
  out.noise_std = noise_std;
  out.seed = seed;
  return out;
}

ControlAffineSystem jet_engine_system() {
  ControlAffineSystem sys;
  sys.n = 2;
  sys.m = 1;
  sys.drift = [](const Vector& x) {
    Vector f(2);
    f[0] = -x[1] - 1.5 * x[0] * x[0] - 0.5 * x[0] * x[0] * x[0];
    f[1] = x[0];
    return f;
  };
  sys.input_map = [](const Vector&) {
    Matrix g(2, 1);
    g << 0.0, -1.0;
    return g;
  };
  sys.input_map_lipschitz = 0.0;
  return sys;
}

ProblemSpec jet_engine_problem() {
  ProblemSpec p;
  p.n = 2;
  p.m = 1;
  p.state_box = Box(Eigen::Vector2d(-1.0, -4.0), Eigen::Vector2d(3.0, 4.0));
  p.initial_boxes = {
      Box(Eigen::Vector2d(0.0, -1.0), Eigen::Vector2d(1.0, 1.0))};
  p.unsafe_boxes = {
      Box(Eigen::Vector2d(-1.0, -4.0), Eigen::Vector2d(0.0, -2.5)),
      Box(Eigen::Vector2d(-1.0, 2.0), Eigen::Vector2d(3.0, 4.0))};
  for (int k = -4; k <= 4; ++k) {
    p.inputs.push_back(Vector::Constant(1, 0.5 * k));
  }
  return p;
}

TrainingSet generate_training_data(const ControlAffineSystem& sys,
                                   const ProblemSpec& spec, int count,
                                   double noise_std, std::uint64_t seed,
                                   std::optional<double> finite_difference_step) {
  if (count < 1) {
    throw std::invalid_argument("generate_training_data: N must be >= 1");
  }
  if (!(noise_std >= 0.0)) {
    throw std::invalid_argument("generate_training_data: noise_std < 0");
  }
  if (!sys.has_drift()) {
    throw std::invalid_argument(
        "generate_training_data: system has no drift oracle");
  }
  const int n = spec.n;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  TrainingSet data;
  data.states.resize(count, n);
  data.targets.resize(count, n);
  data.noise_std = noise_std;
  data.seed = seed;
  const Vector lo = spec.state_box.lower;
  const Vector width = spec.state_box.widths();
  for (int i = 0; i < count; ++i) {
    Vector x(n);
    for (int j = 0; j < n; ++j) x[j] = lo[j] + width[j] * unit(rng);
    Vector y = finite_difference_step
                   ? finite_difference_measurement(sys, x,
                                                   *finite_difference_step)
                   : sys.drift(x);
    for (int j = 0; j < n; ++j) y[j] += noise_std * gauss(rng);
    data.states.row(i) = x.transpose();
    data.targets.row(i) = y.transpose();
  }
  return data;
}

Vector finite_difference_measurement(const ControlAffineSystem& sys,
                                     const Vector& x, double h) {
  if (!(h > 0.0)) {
    throw std::invalid_argument("finite_difference_measurement: h must be > 0");
  }
  // Substep so the integrator error stays well below the O(h) difference
  // quotient error.
  const int substeps = std::max(1, static_cast<int>(std::ceil(h / 1e-3)));
  const double dt = h / substeps;
  Vector phi = x;
  for (int s = 0; s < substeps; ++s) phi = rk4_step(sys.drift, phi, dt);
  return (phi - x) / h;
}

}  // namespace gpcbf
