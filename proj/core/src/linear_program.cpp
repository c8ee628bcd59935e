#include "gpcbf/linear_program.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/LU>

namespace gpcbf {

LpSolution solve_linear_program(const LinearProgram& lp,
                                const LpOptions& options) {
  const int q = static_cast<int>(lp.objective.size());
  const int m = static_cast<int>(lp.constraints.rows());
  if (lp.lower.size() != q || lp.upper.size() != q ||
      (m > 0 && lp.constraints.cols() != q) || lp.rhs.size() != m) {
    throw std::invalid_argument("solve_linear_program: dimension mismatch");
  }
  if (!lp.lower.allFinite() || !lp.upper.allFinite() ||
      (lp.lower.array() > lp.upper.array()).any()) {
    throw std::invalid_argument("solve_linear_program: bad variable bounds");
  }

  // Row k of the full system: k < m general rows, then q upper-bound rows
  // (x_i <= u_i), then q lower-bound rows (-x_i <= -l_i).
  const int total = m + 2 * q;
  Matrix rows(total, q);
  Vector rhs(total);
  if (m > 0) rows.topRows(m) = lp.constraints;
  rhs.head(m) = lp.rhs;
  rows.block(m, 0, q, q).setIdentity();
  rows.block(m + q, 0, q, q) = -Matrix::Identity(q, q);
  rhs.segment(m, q) = lp.upper;
  rhs.segment(m + q, q) = -lp.lower;

  std::vector<int> basis(q);
  std::vector<char> in_basis(total, 0);
  Vector dual(q);
  for (int i = 0; i < q; ++i) {
    basis[i] = lp.objective[i] >= 0.0 ? m + i : m + q + i;
    dual[i] = std::abs(lp.objective[i]);
    in_basis[basis[i]] = 1;
  }

  const int max_iterations =
      options.max_iterations > 0 ? options.max_iterations : 50 * (total + q);
  LpSolution sol;
  Vector x = Vector::Zero(q);
  Matrix basis_matrix(q, q);  // columns are basic rows
  int degenerate_run = 0;

  for (int it = 0; it < max_iterations; ++it) {
    sol.iterations = it;
    for (int i = 0; i < q; ++i) basis_matrix.col(i) = rows.row(basis[i]);
    Eigen::PartialPivLU<Matrix> lu(basis_matrix);
    Vector basic_rhs(q);
    for (int i = 0; i < q; ++i) basic_rhs[i] = rhs[basis[i]];
    x = lu.transpose().solve(basic_rhs);

    // Reduced costs of the dual are the primal slacks.
    const bool bland = degenerate_run > 30;
    int entering = -1;
    double best = -options.optimality_tolerance;
    for (int k = 0; k < total; ++k) {
      if (in_basis[k]) continue;
      const double slack = rhs[k] - rows.row(k).dot(x);
      const double tol =
          options.optimality_tolerance * (1.0 + std::abs(rhs[k]));
      if (slack < -tol) {
        if (bland) {
          entering = k;
          break;
        }
        if (slack < best) {
          best = slack;
          entering = k;
        }
      }
    }
    if (entering < 0) {
      sol.status = LpStatus::kOptimal;
      break;
    }

    const Vector direction = lu.solve(rows.row(entering).transpose());
    int leaving = -1;
    double step = std::numeric_limits<double>::infinity();
    for (int i = 0; i < q; ++i) {
      if (direction[i] > options.pivot_tolerance) {
        const double ratio = std::max(dual[i], 0.0) / direction[i];
        if (ratio < step - 1e-15 ||
            (bland && ratio <= step + 1e-15 && leaving >= 0 &&
             basis[i] < basis[leaving])) {
          step = ratio;
          leaving = i;
        }
      }
    }
    if (leaving < 0) {
      // Dual unbounded: the primal rows cannot all hold.
      sol.status = LpStatus::kInfeasible;
      sol.x = x;
      return sol;
    }
    degenerate_run = step <= 1e-14 ? degenerate_run + 1 : 0;
    dual -= step * direction;
    dual[leaving] = step;
    in_basis[basis[leaving]] = 0;
    basis[leaving] = entering;
    in_basis[entering] = 1;
  }

  sol.x = x;
  sol.objective = lp.objective.dot(x);
  double viol = 0.0;
  for (int k = 0; k < total; ++k) {
    viol = std::max(viol, rows.row(k).dot(x) - rhs[k]);
  }
  sol.max_violation = viol;
  return sol;
}

}  // namespace gpcbf
