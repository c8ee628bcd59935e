#pragma once

#include <vector>

#include "gpcbf/dynamics.hpp"

namespace gpcbf {

/// Calls fn(x) for every node of a tensor grid with `per_dim` nodes per
/// dimension spanning `box` (endpoints included). A single node per
/// dimension sits at the box center.
template <typename Fn>
void for_each_grid_node(const Box& box, int per_dim, Fn&& fn) {
  const int n = box.dim();
  std::vector<int> idx(n, 0);
  Vector x(n);
  for (;;) {
    for (int d = 0; d < n; ++d) {
      x[d] = per_dim <= 1 ? 0.5 * (box.lower[d] + box.upper[d])
                          : box.lower[d] + (box.upper[d] - box.lower[d]) *
                                               idx[d] / (per_dim - 1);
    }
    fn(static_cast<const Vector&>(x));
    int d = 0;
    while (d < n && ++idx[d] == per_dim) idx[d++] = 0;
    if (d == n) break;
  }
}

/// Splits `box` into per_dim^n equal cells and calls fn(center, half_widths).
template <typename Fn>
void for_each_grid_cell(const Box& box, int per_dim, Fn&& fn) {
  const int n = box.dim();
  const Vector half = box.widths() / (2.0 * per_dim);
  std::vector<int> idx(n, 0);
  Vector c(n);
  for (;;) {
    for (int d = 0; d < n; ++d) {
      c[d] = box.lower[d] + (2.0 * idx[d] + 1.0) * half[d];
    }
    fn(static_cast<const Vector&>(c), static_cast<const Vector&>(half));
    int d = 0;
    while (d < n && ++idx[d] == per_dim) idx[d++] = 0;
    if (d == n) break;
  }
}

}  // namespace gpcbf
