#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <stdexcept>

#include "gpcbf/gp.hpp"
#include "gpcbf/grid.hpp"

namespace gpcbf {

// Margins bound the posterior std rho directly. rho(x) - rho(c) is at most
// the posterior std of f(x) - f(c), which along the segment v = x - c is at
// most the posterior std of D_v f(c) plus the prior std of the second
// derivative, sqrt(3) s |v|_L^2 / 2 with |v|_L^2 = sum_d v_d^2 / l_d^2.
// Conditioning never raises a variance, so the prior alone gives the cruder
// s |v|_L used by the Lipschitz mode.

std::string to_string(StdBoundMode mode) {
  switch (mode) {
    case StdBoundMode::kLipschitzGrid:
      return "lipschitz-grid";
    case StdBoundMode::kTaylorGrid:
      return "taylor-grid";
    case StdBoundMode::kBranchAndBound:
      return "branch-and-bound";
  }
  return "unknown";
}

StdBoundMode std_bound_mode_from_string(const std::string& name) {
  if (name == "lipschitz-grid") return StdBoundMode::kLipschitzGrid;
  if (name == "taylor-grid") return StdBoundMode::kTaylorGrid;
  if (name == "branch-and-bound") return StdBoundMode::kBranchAndBound;
  throw std::invalid_argument("unknown std bound mode '" + name + "'");
}

namespace {

double taylor_upper(const GPPosterior& gp, int j, const Vector& c,
                    const Vector& half, double* value_at_center) {
  const KernelSpec& k = gp.kernel(j);
  const double std_c = std::sqrt(gp.variance(j, c));
  *value_at_center = std_c;
  const Vector deriv_std = gp.gradient_variance(j, c).cwiseSqrt();
  const double curvature = 0.5 * std::numbers::sqrt3 *
                           std::sqrt(k.signal_variance) *
                           half.cwiseQuotient(k.length_scales).squaredNorm();
  return std_c + deriv_std.dot(half) + curvature;
}

double lipschitz_margin(const KernelSpec& k, const Vector& half) {
  return std::sqrt(k.signal_variance) * half.cwiseQuotient(k.length_scales).norm();
}

struct Cell {
  double upper;
  Vector center;
  Vector half;
  bool operator<(const Cell& o) const { return upper < o.upper; }
};

}  // namespace

StdBound max_std_bound(const GPPosterior& gp, const Box& domain,
                       int grid_per_dim, StdBoundMode mode) {
  if (grid_per_dim < 2) {
    throw std::invalid_argument("max_std_bound: grid_per_dim must be >= 2");
  }
  const int n = gp.dim();
  StdBound out;
  out.grid_per_dim = grid_per_dim;
  out.mode = mode;
  out.max_std = Vector::Zero(n);
  out.grid_max_std = Vector::Zero(n);
  out.std_margin = Vector::Zero(n);

  for (int j = 0; j < n; ++j) {
    const double prior = std::sqrt(gp.kernel(j).signal_variance);
    double grid_max = 0.0;
    double upper = 0.0;
    double margin = 0.0;

    if (mode == StdBoundMode::kBranchAndBound) {
      const int cells = grid_per_dim - 1;
      std::priority_queue<Cell> queue;
      for_each_grid_cell(domain, cells, [&](const Vector& c, const Vector& h) {
        double v = 0.0;
        const double ub = taylor_upper(gp, j, c, h, &v);
        grid_max = std::max(grid_max, v);
        queue.push({ub, c, h});
      });
      constexpr std::size_t kMaxCells = 200000;
      std::size_t evaluated = queue.size();
      while (!queue.empty()) {
        const Cell top = queue.top();
        if (top.upper - grid_max <= 1e-3 * std::max(grid_max, 1e-12 * prior) ||
            evaluated >= kMaxCells) {
          break;
        }
        queue.pop();
        int split = 0;
        const Vector scaled = top.half.cwiseQuotient(gp.kernel(j).length_scales);
        scaled.maxCoeff(&split);
        for (int side : {-1, 1}) {
          Cell child{0.0, top.center, top.half};
          child.half[split] *= 0.5;
          child.center[split] += side * child.half[split];
          double v = 0.0;
          child.upper = taylor_upper(gp, j, child.center, child.half, &v);
          grid_max = std::max(grid_max, v);
          queue.push(child);
          ++evaluated;
        }
      }
      upper = queue.empty() ? grid_max : queue.top().upper;
      margin = upper - grid_max;
    } else {
      const Vector half = domain.widths() / (2.0 * (grid_per_dim - 1));
      const double lip = lipschitz_margin(gp.kernel(j), half);
      for_each_grid_node(domain, grid_per_dim, [&](const Vector& x) {
        double v = 0.0;
        double ub = 0.0;
        if (mode == StdBoundMode::kTaylorGrid) {
          ub = taylor_upper(gp, j, x, half, &v);
        } else {
          v = std::sqrt(gp.variance(j, x));
          ub = v + lip;
        }
        grid_max = std::max(grid_max, v);
        upper = std::max(upper, ub);
        margin = std::max(margin, ub - v);
      });
    }
    // The posterior std never exceeds the prior.
    out.max_std[j] = std::min(upper, prior);
    out.grid_max_std[j] = grid_max;
    out.std_margin[j] = margin;
  }
  return out;
}

}  // namespace gpcbf
