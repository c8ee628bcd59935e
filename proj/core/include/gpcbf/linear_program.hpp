#pragma once

#include "gpcbf/dynamics.hpp"

namespace gpcbf {

/// maximize objective^T x  subject to  constraints * x <= rhs,
///                                     lower <= x <= upper.
/// Bounds must be finite.
struct LinearProgram {
  Vector objective;
  Matrix constraints;
  Vector rhs;
  Vector lower;
  Vector upper;
};

enum class LpStatus { kOptimal, kInfeasible, kIterationLimit };

struct LpSolution {
  LpStatus status = LpStatus::kIterationLimit;
  Vector x;
  double objective = 0.0;
  int iterations = 0;
  double max_violation = 0.0;  // of the returned x
};

struct LpOptions {
  double optimality_tolerance = 1e-10;
  double pivot_tolerance = 1e-11;
  int max_iterations = 0;  // 0: derived from the problem size
};

/// Dense dual simplex. The problem is solved through its dual
///   min rhs^T y  s.t.  A^T y = objective, y >= 0
/// whose basis is only dim(x) wide; the bound rows give a feasible starting
/// basis, so no phase one is needed. Suited to few variables and many rows.
LpSolution solve_linear_program(const LinearProgram& lp,
                                const LpOptions& options = {});

}  // namespace gpcbf
