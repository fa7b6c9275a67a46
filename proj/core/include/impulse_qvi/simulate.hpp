#pragma once

// Euler-Maruyama simulation of the controlled jump SDE with small jumps cut at
// delta_sim, Monte Carlo policy evaluation and synchronous-coupling estimators.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "impulse_qvi/levy.hpp"
#include "impulse_qvi/model.hpp"
#include "impulse_qvi/policy.hpp"

namespace impulse_qvi {

enum class CompensationMode { compensate_drift, diffusion_surrogate };

struct SimConfig {
  double horizon = 2.0;
  double dt = 1e-3;
  std::size_t paths = 1000;
  std::uint64_t seed = 1;
  double delta_sim = 0.1;  // marks with j0 <= delta_sim are not simulated as jumps
  CompensationMode mode = CompensationMode::compensate_drift;
  std::size_t record_stride = 0;  // 0: keep no trajectories
  std::size_t max_impulses = 1000;

  std::size_t steps() const;
  void validate() const;
};

struct Impulse {
  double time = 0.0;
  double xi = 0.0;
};

struct PathEnsemble {
  SimConfig config;
  std::vector<double> terminal;
  std::vector<double> cost;  // discounted running cost plus impulse costs
  std::vector<double> visited_sup_f;
  std::vector<std::vector<Impulse>> impulses;
  std::vector<std::vector<double>> trajectories;  // every record_stride steps, t = 0 included
  std::vector<std::uint64_t> seeds;
  double jump_intensity = 0.0;
};

/// Throws InputError("step too large for jump intensity") when
/// nu({j0 > delta_sim}) dt > 0.1 and NumericalError("Zeno policy") when a path
/// exceeds max_impulses.
PathEnsemble simulate_paths(const ProblemSpec& spec, const LevyQuadrature& quad,
                            const SimConfig& config, const ImpulsePolicy* policy, double x0);

struct PolicyValue {
  double mean = 0.0;
  double clt_half_width = 0.0;   // 1.96 sd / sqrt(P)
  double horizon_bound = 0.0;    // e^{-rT} sup f / r
  double half_width = 0.0;       // sum of the two
  std::size_t paths = 0;
  double mean_impulses = 0.0;
};

PolicyValue evaluate_policy(const ProblemSpec& spec, const LevyQuadrature& quad,
                            const SimConfig& config, const ImpulsePolicy* policy, double x0);

struct CouplingStats {
  double eps = 0.0;
  double alpha = 0.0;
  double sup_estimate = 0.0;      // E sup_{s<=T} |X_s - X^eps_s|^2 e^{-alpha s}
  double half_width = 0.0;
  double terminal_moment = 0.0;   // E |X_T - X^eps_T|^2
  double terminal_half_width = 0.0;
  double lambda = 0.0;            // Lambda_{0,2}(j - j^eps)
  double ratio = 0.0;             // (sup_estimate + half_width) / lambda^2, 0 if lambda = 0
  double max_abs_difference = 0.0;  // over all paths and steps
  std::size_t paths = 0;
};

/// X uses j, X^eps uses j^eps; both share Brownian increments and marks. In
/// diffusion_surrogate mode only X carries the Gaussian stand-in for marks
/// below delta_sim, so the difference has the full small-jump variance.
std::vector<CouplingStats> coupled_sup_difference(const ProblemSpec& spec,
                                                  const LevyQuadrature& quad,
                                                  const SimConfig& config, double eps,
                                                  const std::vector<double>& alphas, double x0);

/// One reference path X against several truncated copies in a single pass;
/// result[e][a] is the entry for eps_list[e] and alphas[a].
std::vector<std::vector<CouplingStats>> coupled_sweep(const ProblemSpec& spec,
                                                      const LevyQuadrature& quad,
                                                      const SimConfig& config,
                                                      const std::vector<double>& eps_list,
                                                      const std::vector<double>& alphas,
                                                      double x0);

CouplingStats coupled_sup_difference(const ProblemSpec& spec, const LevyQuadrature& quad,
                                     const SimConfig& config, double eps, double alpha,
                                     double x0);

struct PsiStats {
  double theta = 0.0;
  double alpha = 0.0;
  double psi0 = 0.0;
  double sup_estimate = 0.0;       // E sup_s psi_theta(X_s, X'_s, Z_s) e^{-alpha s}
  double half_width = 0.0;
  double integral_estimate = 0.0;  // E int_0^T psi_theta e^{-alpha s} ds
  double ratio = 0.0;              // sup_estimate / psi0, 0 when psi0 = 0
  double normalized = 0.0;         // ratio / (1 + 1/(alpha - kappa))
  double max_abs_psi = 0.0;
  std::size_t paths = 0;
};

double psi_theta(double x, double xp, double z, double theta);

/// Three synchronously coupled solutions from x, x' and theta x + (1-theta) x'.
/// Throws InputError("comparison rate below kappa") when alpha <= kappa.
PsiStats psi_theta_stats(const ProblemSpec& spec, const LevyQuadrature& quad,
                         const SimConfig& config, double x, double xp, double theta,
                         double alpha, double kappa);

/// M = max over sweeps with lambda > 0 of (estimate + half-width)/lambda^2.
/// Needs at least three distinct eps values among those entries.
double fit_M(const std::vector<CouplingStats>& sweeps);

}  // namespace impulse_qvi
