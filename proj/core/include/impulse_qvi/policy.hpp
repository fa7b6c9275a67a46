#pragma once

#include <cstddef>
#include <vector>

#include "impulse_qvi/operators.hpp"

namespace impulse_qvi {

/// Continuation mask and displacement map on the solver grid. Off-grid states
/// use the nearest node.
struct ImpulsePolicy {
  Grid1D grid;
  std::vector<bool> continuation;
  std::vector<double> xi_star;
  double tol_region = 0.0;
  std::size_t target_violations = 0;  // action nodes whose target is not in the mask

  bool empty_action() const;
  std::size_t action_count() const;
  /// Returns true and sets xi when the nearest node of x is an action node.
  bool acts(double x, double& xi) const;

  /// Policy that never intervenes.
  static ImpulsePolicy none(const Grid1D& grid);

  /// Moves every continuation/action interface by k nodes: positive k grows
  /// the action region, negative shrinks it. New action nodes aim at the
  /// same point as the nearest original action node.
  ImpulsePolicy with_region_shift(long k) const;
  /// Displaces every target by k grid nodes toward +x.
  ImpulsePolicy with_target_offset(long k) const;
};

}  // namespace impulse_qvi
