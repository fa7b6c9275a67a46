#pragma once

// Discrete QVI max{A u - f, u - M u} = 0: the linear no-intervention problem,
// the obstacle problem with a frozen obstacle, and the outer iteration on M.

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "impulse_qvi/operators.hpp"
#include "impulse_qvi/policy.hpp"

namespace impulse_qvi {

enum class ObstacleSolver { policy_iteration, penalization };

struct SolveConfig {
  double tol_outer = 1e-6;
  double tol_inner = 1e-9;
  std::size_t max_outer = 2000;
  double eps = 0.0;  // strict truncation level of the solved operator
  ObstacleSolver solver = ObstacleSolver::policy_iteration;
  double rho = 0.0;  // penalty; 0 means 1e3 r
  /// Extension slopes are the boundary slopes of f/r clipped to this cap
  /// (normally C_u).
  double slope_cap = std::numeric_limits<double>::infinity();
  std::vector<double> xi_grid;  // empty: default_xi_grid(grid)
};

/// Solves A u + g = f. Throws NumericalError with the reciprocal condition
/// estimate when the factorization is singular.
ValueField solve_pide(const OperatorMatrix& op, const Eigen::VectorXd& f, double tol_inner = 1e-9);

ValueField solve_pide(const ProblemSpec& spec, const Grid1D& grid, const LevyQuadrature& quad,
                      const JumpTreatment& mode, const Eigen::VectorXd& f,
                      double slope_left = 0.0, double slope_right = 0.0);

struct ObstacleResult {
  ValueField u;
  std::vector<bool> stopped;  // u = psi
  std::size_t iterations = 0;
  bool penalized = false;
  double penalty_bias = 0.0;  // max (u - psi)^+ left by the penalty
  double complementarity = 0.0;  // max |min(Au + g - f, psi - u)|
  std::string warning;
};

/// min-form obstacle problem: u <= psi, A u + g <= f, one of them tight.
ObstacleResult solve_obstacle(const OperatorMatrix& op, const Eigen::VectorXd& f,
                              const Eigen::VectorXd& psi, const SolveConfig& config,
                              const std::vector<bool>* warm_start = nullptr);

ObstacleResult solve_obstacle(const ProblemSpec& spec, const Grid1D& grid,
                              const LevyQuadrature& quad, const JumpTreatment& mode,
                              const Eigen::VectorXd& f, const Eigen::VectorXd& psi,
                              const SolveConfig& config = {});

struct IterationRecord {
  std::size_t iteration = 0;
  double delta = 0.0;          // ||u^{k+1} - u^k||_inf
  double max_increase = 0.0;   // max (u^{k+1} - u^k)^+
  std::size_t inner = 0;
  std::size_t stopped = 0;
};

struct QviResidual {
  double continuation = 0.0;  // r1
  double obstacle = 0.0;      // r2
  double action = 0.0;        // r3
};

struct QviSolution {
  ValueField u;
  InterventionResult mu;
  ImpulsePolicy policy;
  OperatorMatrix op;
  Eigen::VectorXd f;
  Eigen::VectorXd residual;  // A u + g - f
  QviResidual audit;
  std::vector<IterationRecord> trace;
  bool monotone = true;
  bool penalized = false;
  std::string warnings;
};

/// u^0 = solve_pide(f), u^{k+1} = solve_obstacle(f, M u^k) until the sup-norm
/// step drops below tol_outer. Throws NumericalError("monotonicity violated;
/// check discretization") when an iterate rises above its predecessor.
QviSolution solve_qvi(const ProblemSpec& spec, const Grid1D& grid, const LevyQuadrature& quad,
                      const SolveConfig& config);

/// Complementarity residuals of any field against its own M.
QviResidual qvi_residual(const ValueField& u, const ProblemSpec& spec, const OperatorMatrix& op,
                         const std::vector<double>& xi_grid, double tol_region);

/// Region classification: continuation where u < Mu - tol_region; action
/// elsewhere when the minimizer moves the state.
ImpulsePolicy extract_policy(const ValueField& u, const InterventionResult& mu,
                             double tol_region);

}  // namespace impulse_qvi
