#pragma once

// Run configuration: a YAML document with the sections model, levy, costs,
// assumptions, grid, solve, simulate and verify. Coefficients are registry
// names with an optional params map.

#include <cstddef>
#include <string>
#include <vector>

#include "impulse_qvi/levy.hpp"
#include "impulse_qvi/model.hpp"
#include "impulse_qvi/operators.hpp"
#include "impulse_qvi/qvi.hpp"
#include "impulse_qvi/simulate.hpp"
#include "impulse_qvi/verify.hpp"

namespace impulse_qvi {

struct VerifyConfig {
  double lipschitz_factor = 1.05;
  std::vector<double> eps_list = {0.2, 0.1, 0.05};
  std::vector<double> alphas = {-0.5, 0.0, 0.5, 1.0};
  std::vector<double> coupling_eps = {0.3, 0.2, 0.1};
  double coupling_alpha = 0.0;
  double coupling_x0 = 0.0;
  SimConfig coupling;  // horizon, dt, paths, seed, delta_sim
  std::vector<double> etas = {1.0, 0.5, 0.25, 0.1, 0.05};
  std::vector<double> ps = {1.0, 2.0, 4.0, 0.0};  // 0: sup norm
  double lp_window = 2.0;  // O = [-w, w]
  double slack = 0.01;
  double holder_alpha = 1.0;
  std::string holder_function = "x_abs_x";
  std::vector<LpWindow> holder_windows = {{0.1, 1.0}, {0.1, 1.5}, {0.1, 2.0}};
  double semiconcavity_radius = 2.0;
  std::vector<double> mc_points = {-2.0, -1.0, 0.0, 1.0, 2.0};
};

struct RunConfig {
  CoefficientChoices choices;
  LevyMeasure1D levy;
  double discount = 1.0;
  double quad_eta = 1.0;
  std::size_t quad_nodes = 64;
  Params assumption_overrides;  // keys named after AssumptionProfile fields
  SamplingPlan sampling;
  Grid1D grid;
  SolveConfig solve;
  SimConfig simulate;
  double x0 = 0.0;
  VerifyConfig verify;
  std::string text;  // canonical source text; hashed for manifests

  ProblemSpec problem() const;
  AssumptionProfile profile(const ProblemSpec& spec) const;
  LevyQuadrature quadrature(const ProblemSpec& spec, const AssumptionProfile& profile) const;
  std::string hash() const;
};

/// Throws InputError on unreadable files, unknown sections or keys, wrong
/// types and dimension != 1.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// The reference instance with a 801-node grid on [-10, 10].
RunConfig reference_config();

}  // namespace impulse_qvi
