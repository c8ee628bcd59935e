#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include "gpcbf/grid.hpp"
#include "gpcbf/synthesis.hpp"

namespace gpcbf {

std::string to_string(VerificationStatus s) {
  switch (s) {
    case VerificationStatus::kCertified: return "certified";
    case VerificationStatus::kCounterexample: return "counterexample";
    case VerificationStatus::kInconclusive: return "inconclusive";
  }
  return "inconclusive";
}

double condition_value(const BarrierCandidate& b,
                       const SynthesisProblem& problem, double margin,
                       Condition c, const Vector& x) {
  switch (c) {
    case Condition::kInit: return b.value(x);
    case Condition::kUnsafe: return 0.5 * margin - b.value(x);
    case Condition::kFlow: break;
  }
  const Vector grad = b.gradient(x);
  const Vector mu = problem.drift->value(x);
  const Matrix g = problem.input_map(x);
  const auto vertices = problem.error_box.vertices();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& u : problem.spec.inputs) {
    const Vector base = mu + g * u;
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& d : vertices) worst = std::max(worst, grad.dot(base + d));
    best = std::min(best, worst);
  }
  return best;
}

namespace {

struct Cell {
  Condition condition;
  Vector center;
  Vector half;
  int depth = 0;
};

// Value at the center and a rigorous upper bound over the cell.
struct CellBound {
  double center = 0.0;
  double upper = 0.0;
};

struct Accumulator {
  std::vector<Counterexample> counterexamples;
  std::vector<Counterexample> unresolved;
  std::size_t cells = 0;
  int deepest = 0;
  LipschitzMargins margins;
  double init_upper = -std::numeric_limits<double>::infinity();
  double unsafe_lower = std::numeric_limits<double>::infinity();
  double flow_upper = -std::numeric_limits<double>::infinity();
};

class CellEvaluator {
 public:
  CellEvaluator(const BarrierCandidate& b, const SynthesisProblem& problem,
                double margin)
      : b_(b), problem_(problem), margin_(margin), n_(problem.dim()),
        curvature_(problem.drift->curvature_bound()),
        vertices_(problem.error_box.vertices()) {}

  CellBound evaluate(const Cell& cell) const {
    const Vector& c = cell.center;
    const Vector& h = cell.half;
    IntervalVector box(n_);
    for (int d = 0; d < n_; ++d) box[d] = Interval(c[d] - h[d], c[d] + h[d]);
    const IntervalVector hess = b_.hessian(box);
    const Vector grad_c = b_.gradient(c);
    IntervalVector grad(n_);
    for (int d = 0; d < n_; ++d) {
      Interval gd(grad_c[d]);
      for (int e = 0; e < n_; ++e) gd += hess[d * n_ + e] * Interval::symmetric(h[e]);
      grad[d] = gd;
    }

    if (cell.condition != Condition::kFlow) {
      const double value = b_.value(c);
      double spread = 0.0;
      for (int d = 0; d < n_; ++d) spread += grad[d].mag() * h[d];
      if (cell.condition == Condition::kInit) return {value, value + spread};
      return {0.5 * margin_ - value, 0.5 * margin_ - value + spread};
    }

    const Vector mu = problem_.drift->value(c);
    const Matrix jac = problem_.drift->jacobian(c);
    Vector mu_rad(n_);
    Matrix jac_rad(n_, n_);
    for (int j = 0; j < n_; ++j) {
      const Matrix& m = curvature_[j];
      double second = 0.0;
      for (int d = 0; d < n_; ++d) {
        double r = 0.0;
        for (int e = 0; e < n_; ++e) {
          r += m(d, e) * h[e];
          second += m(d, e) * h[d] * h[e];
        }
        jac_rad(j, d) = r;
      }
      mu_rad[j] = jac.row(j).cwiseAbs().dot(h) + 0.5 * second;
    }
    const Matrix g = problem_.input_map(c);
    const double g_rad = problem_.input_map_lipschitz * h.sum();

    double best_center = std::numeric_limits<double>::infinity();
    double best_upper = std::numeric_limits<double>::infinity();
    for (const auto& u : problem_.spec.inputs) {
      const Vector gu = g * u;
      const double gu_rad = g_rad * u.cwiseAbs().sum();
      const double dgu_rad = problem_.input_map_lipschitz * u.cwiseAbs().sum();
      double worst_center = -std::numeric_limits<double>::infinity();
      double worst_upper = -std::numeric_limits<double>::infinity();
      for (const auto& dv : vertices_) {
        const Vector v = mu + dv + gu;
        const double center = grad_c.dot(v);
        double spread = 0.0;
        for (int e = 0; e < n_; ++e) {
          Interval de(0.0);
          for (int i = 0; i < n_; ++i) {
            const double vr = mu_rad[i] + gu_rad;
            de += hess[e * n_ + i] * Interval(v[i] - vr, v[i] + vr);
            const double jr = jac_rad(i, e) + dgu_rad;
            de += grad[i] * Interval(jac(i, e) - jr, jac(i, e) + jr);
          }
          spread += de.mag() * h[e];
        }
        worst_center = std::max(worst_center, center);
        worst_upper = std::max(worst_upper, center + spread);
      }
      best_center = std::min(best_center, worst_center);
      best_upper = std::min(best_upper, worst_upper);
    }
    return {best_center, best_upper};
  }

  double point_value(Condition c, const Vector& x) const {
    return condition_value(b_, problem_, margin_, c, x);
  }

 private:
  const BarrierCandidate& b_;
  const SynthesisProblem& problem_;
  double margin_;
  int n_;
  std::vector<Matrix> curvature_;
  std::vector<Vector> vertices_;
};

void corners(const Cell& cell, const std::function<void(const Vector&)>& fn) {
  const int n = static_cast<int>(cell.center.size());
  for (int mask = 0; mask < (1 << n); ++mask) {
    Vector x = cell.center;
    for (int d = 0; d < n; ++d) x[d] += (mask >> d & 1) ? cell.half[d] : -cell.half[d];
    fn(x);
  }
}

void process(const Cell& root, const CellEvaluator& eval,
             const VerifierConfig& cfg, double tol,
             std::atomic<std::size_t>& budget_used, Accumulator& acc) {
  std::vector<Cell> stack{root};
  while (!stack.empty()) {
    Cell cell = std::move(stack.back());
    stack.pop_back();
    if (budget_used.fetch_add(1, std::memory_order_relaxed) >= cfg.max_cells) {
      acc.unresolved.push_back({cell.center, cell.condition, eval.evaluate(cell).upper});
      continue;
    }
    ++acc.cells;
    acc.deepest = std::max(acc.deepest, cell.depth);
    const CellBound bound = eval.evaluate(cell);
    if (bound.center > tol) {
      acc.counterexamples.push_back({cell.center, cell.condition, bound.center});
      continue;
    }
    const bool closed = cell.condition == Condition::kUnsafe ? bound.upper < 0.0
                                                             : bound.upper <= 0.0;
    if (closed) {
      const double spread = bound.upper - bound.center;
      switch (cell.condition) {
        case Condition::kInit:
          acc.margins.init = std::max(acc.margins.init, spread);
          acc.init_upper = std::max(acc.init_upper, bound.upper);
          break;
        case Condition::kUnsafe:
          acc.margins.unsafe = std::max(acc.margins.unsafe, spread);
          // upper bounds margin/2 - B, so this is a lower bound on B - margin/2.
          acc.unsafe_lower = std::min(acc.unsafe_lower, -bound.upper);
          break;
        case Condition::kFlow:
          acc.margins.flow = std::max(acc.margins.flow, spread);
          acc.flow_upper = std::max(acc.flow_upper, bound.upper);
          break;
      }
      continue;
    }
    if (cell.depth >= cfg.max_depth) {
      std::optional<Counterexample> worst;
      corners(cell, [&](const Vector& x) {
        const double v = eval.point_value(cell.condition, x);
        if (v > tol && (!worst || v > worst->violation_margin)) {
          worst = Counterexample{x, cell.condition, v};
        }
      });
      if (worst) {
        acc.counterexamples.push_back(*worst);
      } else {
        acc.unresolved.push_back({cell.center, cell.condition, bound.upper});
      }
      continue;
    }
    const int n = static_cast<int>(cell.center.size());
    const Vector half = 0.5 * cell.half;
    for (int mask = (1 << n) - 1; mask >= 0; --mask) {
      Vector c = cell.center;
      for (int d = 0; d < n; ++d) c[d] += (mask >> d & 1) ? half[d] : -half[d];
      stack.push_back({cell.condition, std::move(c), half, cell.depth + 1});
    }
  }
}

bool worse(const Counterexample& a, const Counterexample& b) {
  if (a.violation_margin != b.violation_margin) {
    return a.violation_margin > b.violation_margin;
  }
  return std::lexicographical_compare(a.state.data(), a.state.data() + a.state.size(),
                                      b.state.data(), b.state.data() + b.state.size());
}

}  // namespace

VerificationResult verify_candidate(const BarrierCandidate& candidate,
                                    const SynthesisProblem& problem,
                                    double margin,
                                    const VerifierConfig& config) {
  if (config.resolution < 1 || config.max_depth < 0) {
    throw std::invalid_argument("verify_candidate: bad resolution or depth");
  }
  if (candidate.basis.dim() != problem.dim()) {
    throw std::invalid_argument("verify_candidate: dimension mismatch");
  }
  std::vector<Cell> roots;
  auto tile = [&](const Box& box, Condition c) {
    for_each_grid_cell(box, config.resolution, [&](const Vector& ctr, const Vector& half) {
      roots.push_back({c, ctr, half, 0});
    });
  };
  for (const auto& b : problem.spec.initial_boxes) tile(b, Condition::kInit);
  for (const auto& b : problem.spec.unsafe_boxes) tile(b, Condition::kUnsafe);
  tile(problem.spec.state_box, Condition::kFlow);

  const CellEvaluator eval(candidate, problem, margin);
  const double scale = candidate.coefficients.size()
                           ? candidate.coefficients.cwiseAbs().maxCoeff()
                           : 0.0;
  const double tol = config.tolerance * std::max(1.0, scale);

  const int threads = std::max(1, config.threads > 0 ? config.threads : default_thread_count());
  std::vector<Accumulator> accs(roots.size());
  std::atomic<std::size_t> budget_used{0};
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < roots.size();) {
      process(roots[i], eval, config, tol, budget_used, accs[i]);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  // Merge in root order so the result does not depend on scheduling.
  Accumulator total;
  for (auto& a : accs) {
    total.cells += a.cells;
    total.deepest = std::max(total.deepest, a.deepest);
    total.margins.init = std::max(total.margins.init, a.margins.init);
    total.margins.unsafe = std::max(total.margins.unsafe, a.margins.unsafe);
    total.margins.flow = std::max(total.margins.flow, a.margins.flow);
    total.init_upper = std::max(total.init_upper, a.init_upper);
    total.unsafe_lower = std::min(total.unsafe_lower, a.unsafe_lower);
    total.flow_upper = std::max(total.flow_upper, a.flow_upper);
    for (auto& c : a.counterexamples) total.counterexamples.push_back(std::move(c));
    for (auto& c : a.unresolved) total.unresolved.push_back(std::move(c));
  }

  VerificationResult out;
  out.cells = total.cells;
  std::sort(total.counterexamples.begin(), total.counterexamples.end(), worse);
  std::sort(total.unresolved.begin(), total.unresolved.end(), worse);
  const auto cap = [&](std::vector<Counterexample>& v) {
    if (v.size() > config.max_counterexamples) v.resize(config.max_counterexamples);
  };
  cap(total.counterexamples);
  cap(total.unresolved);
  out.counterexamples = std::move(total.counterexamples);
  out.unresolved = std::move(total.unresolved);

  if (!out.counterexamples.empty()) {
    out.status = VerificationStatus::kCounterexample;
  } else if (!out.unresolved.empty()) {
    out.status = VerificationStatus::kInconclusive;
  } else {
    out.status = VerificationStatus::kCertified;
    Certificate cert;
    cert.resolution = config.resolution;
    cert.max_depth = config.max_depth;
    cert.deepest_level = total.deepest;
    cert.cells = total.cells;
    cert.lipschitz_margins = total.margins;
    cert.init_upper = total.init_upper;
    cert.unsafe_lower = total.unsafe_lower + 0.5 * margin;
    cert.flow_upper = total.flow_upper;
    out.certificate = cert;
  }
  return out;
}

}  // namespace gpcbf
