#include "gpcbf/control.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace gpcbf {

std::string to_string(RobustnessMode m) {
  return m == RobustnessMode::kFixedD ? "fixed-d" : "worst-case-vertices";
}

RobustnessMode robustness_mode_from_string(const std::string& s) {
  if (s == "worst-case-vertices") return RobustnessMode::kWorstCaseVertices;
  if (s == "fixed-d") return RobustnessMode::kFixedD;
  throw std::invalid_argument("unknown robustness mode '" + s + "'");
}

namespace {

std::string describe(const Vector& x) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

}  // namespace

NoSafeInputError::NoSafeInputError(Vector state, Matrix values)
    : std::runtime_error("no safe input at x = " + describe(state)),
      state_(std::move(state)),
      values_(std::move(values)) {}

SafeController::SafeController(BarrierCandidate barrier,
                               std::shared_ptr<const DriftModel> drift,
                               std::function<Matrix(const Vector&)> input_map,
                               std::vector<Vector> inputs,
                               ConfidenceBox error_box, RobustnessMode mode,
                               std::optional<Vector> fixed_d)
    : barrier_(std::move(barrier)),
      drift_(std::move(drift)),
      input_map_(std::move(input_map)),
      inputs_(std::move(inputs)),
      error_box_(std::move(error_box)),
      mode_(mode) {
  if (!drift_ || !input_map_) {
    throw std::invalid_argument("SafeController: drift and input map required");
  }
  if (inputs_.empty()) throw std::invalid_argument("SafeController: empty input set");
  if (mode_ == RobustnessMode::kFixedD) {
    if (!fixed_d) throw std::invalid_argument("SafeController: fixed-d mode needs d");
    if (fixed_d->size() != drift_->dim()) {
      throw std::invalid_argument("SafeController: d has the wrong dimension");
    }
    disturbances_.push_back(*fixed_d);
  } else {
    disturbances_ = error_box_.vertices();
  }
}

Matrix SafeController::condition_values(const Vector& x) const {
  const Vector grad = barrier_.gradient(x);
  const Vector mu = drift_->value(x);
  const Matrix g = input_map_(x);
  Matrix values(static_cast<Eigen::Index>(inputs_.size()),
                static_cast<Eigen::Index>(disturbances_.size()));
  for (std::size_t k = 0; k < inputs_.size(); ++k) {
    const Vector base = mu + g * inputs_[k];
    for (std::size_t v = 0; v < disturbances_.size(); ++v) {
      values(k, v) = grad.dot(base + disturbances_[v]);
    }
  }
  return values;
}

int SafeController::select_index(const Vector& x) const {
  const Matrix values = condition_values(x);
  for (Eigen::Index k = 0; k < values.rows(); ++k) {
    if (values.row(k).maxCoeff() <= 0.0) return static_cast<int>(k);
  }
  throw NoSafeInputError(x, values);
}

ControlAffineSystem mean_plant(std::shared_ptr<const DriftModel> drift,
                               const ControlAffineSystem& sys) {
  ControlAffineSystem plant = sys;
  plant.drift = [drift = std::move(drift)](const Vector& x) { return drift->value(x); };
  return plant;
}

Trajectory simulate_closed_loop(const SafeController& ctrl,
                                const ControlAffineSystem& plant,
                                const ProblemSpec& spec, const Vector& x0,
                                double horizon, double step,
                                bool require_initial) {
  if (!(step > 0.0) || !(horizon >= step)) {
    throw std::invalid_argument("simulate_closed_loop: need step > 0 and horizon >= step");
  }
  if (require_initial ? !spec.in_initial_set(x0) : !spec.in_state_box(x0)) {
    throw std::invalid_argument("simulate_closed_loop: x0 outside the admissible start set");
  }
  const auto steps = static_cast<std::size_t>(std::llround(horizon / step));
  const BarrierCandidate& b = ctrl.barrier();

  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.inputs.reserve(steps);
  auto record = [&](double t, const Vector& x) {
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.barrier_values.push_back(b.value(x));
    traj.safe.push_back(!spec.in_unsafe_set(x));
  };

  Vector x = x0;
  record(0.0, x);
  for (std::size_t k = 0; k < steps; ++k) {
    const Vector u = ctrl.select_input(x);
    x = rk4_step([&](const Vector& s) { return plant.vector_field(s, u); }, x, step);
    traj.inputs.push_back(u);
    record(static_cast<double>(k + 1) * step, x);
    if (!spec.in_state_box(x)) {
      traj.exited_state_box = true;
      break;
    }
  }
  return traj;
}

std::vector<BatchRun> simulate_batch(const SafeController& ctrl,
                                     const ControlAffineSystem& plant,
                                     const ProblemSpec& spec,
                                     const std::vector<Vector>& initial_states,
                                     double horizon, double step, int threads) {
  std::vector<BatchRun> runs(initial_states.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < runs.size();) {
      try {
        runs[i].trajectory = simulate_closed_loop(ctrl, plant, spec,
                                                  initial_states[i], horizon, step);
      } catch (const NoSafeInputError& e) {
        runs[i].failure_state = e.state();
        runs[i].error = e.what();
      } catch (const std::exception& e) {
        runs[i].error = e.what();
      }
    }
  };
  const int n = std::max(1, threads > 0 ? threads : default_thread_count());
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  return runs;
}

SafetyReport check_trajectory_safety(const Trajectory& traj,
                                     const ProblemSpec& spec) {
  SafetyReport rep;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    if (!spec.in_unsafe_set(traj.states[k])) continue;
    ++rep.violations;
    if (!rep.first_violation_step) {
      rep.first_violation_step = k;
      if (k < traj.times.size()) rep.first_violation_time = traj.times[k];
    }
  }
  return rep;
}

MonotonicityReport barrier_monotonicity_check(const Trajectory& traj,
                                              const BarrierCandidate& barrier,
                                              double tolerance) {
  std::vector<double> values = traj.barrier_values;
  if (values.size() != traj.states.size()) {
    values.clear();
    for (const auto& x : traj.states) values.push_back(barrier.value(x));
  }
  MonotonicityReport rep;
  for (std::size_t k = 0; k + 1 < values.size(); ++k) {
    const double inc = values[k + 1] - values[k];
    if (inc > rep.max_increase) {
      rep.max_increase = inc;
      rep.worst_step = k;
    }
    if (inc > tolerance) ++rep.violations;
  }
  return rep;
}

}  // namespace gpcbf
