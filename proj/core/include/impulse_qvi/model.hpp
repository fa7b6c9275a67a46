#pragma once

// Problem instance, assumption profile and the model constants (beta, kappa,
// C_u) used by every estimate downstream.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "impulse_qvi/levy.hpp"

namespace impulse_qvi {

using ScalarFunction = std::function<double(double)>;
using Params = std::map<std::string, double>;

/// Registry choice for one coefficient: a name plus numeric parameters.
struct CoefficientChoice {
  std::string name;
  Params params;

  double param(const std::string& key, double fallback) const;
  std::string describe() const;
};

struct CoefficientChoices {
  CoefficientChoice drift{"zero", {}};
  CoefficientChoice volatility{"zero", {}};
  CoefficientChoice jump{"additive", {}};
  CoefficientChoice running_cost{"zero", {}};
  CoefficientChoice transaction_cost{"constant", {{"K", 1.0}}};
};

/// Scalar instance (n = d = l = 1) of the controlled jump SDE and its costs.
struct ProblemSpec {
  int dimension = 1;
  ScalarFunction drift;             // b~
  ScalarFunction volatility;        // sigma
  JumpFunction jump;                // j, j0
  LevyMeasure1D levy;               // nu
  ScalarFunction running_cost;      // f >= 0
  ScalarFunction transaction_cost;  // B >= K > 0
  double discount = 1.0;            // r
  CoefficientChoices choices;

  double diffusion(double x) const;  // a = sigma^2 / 2
  std::string describe() const;
};

/// Builds the coefficient functions from registry names. Unknown names or
/// parameters that break an invariant raise InputError.
ProblemSpec make_problem(const CoefficientChoices& choices, const LevyMeasure1D& levy,
                         double discount);

/// The instance used throughout the tests and the acceptance suite:
/// b~ = -x/2, sigma = 0.4, j = z, nu = power_law(1, 1.5, 1),
/// f = sqrt(0.01 + x^2) - 0.1, B = 1 + 0.1|xi|, r = 1.
ProblemSpec reference_problem();

struct SemiConcavityBound {
  double radius = 0.0;
  double constant = 0.0;
};

/// Constants declared for (H1)-(H9). C_j and j0 come with the jump function.
struct AssumptionProfile {
  double lipschitz_drift = 0.0;       // C_b~
  double lipschitz_volatility = 0.0;  // C_sigma
  double lipschitz_cost = 0.0;        // C_f
  double gamma = 2.0;                 // profile order, [1,2] (below 1 accepted)
  double integrability = 0.0;         // C_0
  double nondegeneracy = 1.0;         // c_0
  double jacobian_lower = 1.0;        // c_1
  double jacobian_upper = 1.0;        // C_1
  double jump_regularity = 0.0;       // M_gamma
  double ellipticity = 0.0;           // lambda
  std::vector<SemiConcavityBound> semiconcavity;  // C_r per radius
  double transaction_floor = 0.0;     // K
  double slack = 1e-6;                // relative tolerance on every comparison
};

/// Profile derived from the registry parameters of a problem.
AssumptionProfile default_profile(const ProblemSpec& spec);

/// Latin-hypercube points on [lower, upper] plus explicit extra points
/// (typically a thinned copy of the solver grid).
struct SamplingPlan {
  double lower = -1.0;
  double upper = 1.0;
  std::size_t points = 64;
  std::uint64_t seed = 1;
  std::vector<double> extra_points;

  std::vector<double> sample() const;
};

struct HypothesisResult {
  std::string id;  // "H1" .. "H9"
  bool pass = true;
  double measured = 0.0;
  double declared = 0.0;
  double worst_x = 0.0;
  double worst_y = 0.0;
  std::string note;
};

struct AssumptionReport {
  std::vector<HypothesisResult> results;

  bool all_pass() const;
  const HypothesisResult& at(const std::string& id) const;
};

AssumptionReport check_assumptions(const ProblemSpec& spec, const AssumptionProfile& profile,
                                   const LevyQuadrature& quad, const SamplingPlan& samples);

struct ModelConstants {
  double beta = 0.0;
  double beta_drift = 0.0;
  double beta_volatility = 0.0;
  double beta_jump = 0.0;
  double beta_cap = 0.0;  // 2C_b + C_sigma^2 + int (2C_j + C_j^2) dnu
  double kappa = 0.0;
  double kappa_drift = 0.0;
  double kappa_volatility = 0.0;
  double kappa_jump = 0.0;
  double alpha = 0.0;
  double fitted_m = 0.0;
  std::size_t pairs = 0;
  std::size_t triples = 0;

  /// C_u = C_f / (r - beta/2); empty when r <= beta/2.
  std::optional<double> value_lipschitz(double lipschitz_cost, double discount) const;
};

/// Sampled supremum of 2 beta_b + beta_sigma + beta_j over pairs x != x'.
ModelConstants estimate_beta(const ProblemSpec& spec, const AssumptionProfile& profile,
                             const LevyQuadrature& quad, const SamplingPlan& samples);

/// Sampled supremum of (2 kappa_b + kappa_sigma + kappa_j) / psi_theta over
/// triples (x, x', y) and theta in {0, 1/4, 1/2, 3/4, 1}. The terms are the
/// Ito drift of psi_theta along three coupled solutions, normalized by
/// psi_theta so that kappa is a rate comparable with beta. Fills the kappa
/// fields of `constants` and returns it.
ModelConstants estimate_kappa(const ProblemSpec& spec, const LevyQuadrature& quad,
                              const SamplingPlan& samples, ModelConstants constants);

struct DiscountReport {
  double lipschitz_threshold = 0.0;  // r > beta/2
  bool lipschitz_pass = false;
  double uniform_threshold = 0.0;    // r > alpha/2 and alpha > beta
  bool uniform_pass = false;
  double semiconcave_threshold = 0.0;  // r > alpha >= kappa
  bool semiconcave_pass = false;
  std::string note;
};

DiscountReport check_discount_rate(const ModelConstants& constants, double discount);

}  // namespace impulse_qvi
