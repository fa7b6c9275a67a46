#pragma once

// Named experiments wired from a RunConfig. The solve, the model constants and
// the coupling sweep are computed once and shared between experiments.

#include <optional>
#include <string>
#include <vector>

#include "impulse_qvi/config.hpp"
#include "impulse_qvi/verify.hpp"

namespace impulse_qvi {

class ExperimentContext {
 public:
  explicit ExperimentContext(RunConfig config);

  const RunConfig& config() const { return config_; }
  const ProblemSpec& spec() const { return spec_; }
  const AssumptionProfile& profile() const { return profile_; }
  const LevyQuadrature& quadrature() const { return quad_; }
  const ModelConstants& constants() const { return constants_; }
  /// C_f / (r - beta/2), +inf when r <= beta/2.
  double value_lipschitz() const { return value_lipschitz_; }

  /// config.solve with the extension slope capped at C_u.
  SolveConfig solve_config() const;
  const QviSolution& solution();
  /// Entries [e][a] for verify.coupling_eps followed by eps = 0, against verify.alphas.
  const std::vector<std::vector<CouplingStats>>& coupling();
  /// M fitted per alpha over the nonzero coupling levels.
  std::vector<FittedRate> fitted_rates();

 private:
  RunConfig config_;
  ProblemSpec spec_;
  AssumptionProfile profile_;
  LevyQuadrature quad_;
  ModelConstants constants_;
  double value_lipschitz_ = 0.0;
  std::optional<QviSolution> solution_;
  std::optional<std::vector<std::vector<CouplingStats>>> coupling_;
};

/// lipschitz, sweep-eps, semiconcave, lp, holder, coupling, mc-cross.
const std::vector<std::string>& experiment_names();

/// Throws InputError for an unknown name.
VerificationReport run_experiment(ExperimentContext& ctx, const std::string& name);

}  // namespace impulse_qvi
