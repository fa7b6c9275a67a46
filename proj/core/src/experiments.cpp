#include "impulse_qvi/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "impulse_qvi/error.hpp"

namespace impulse_qvi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void merge_into(VerificationReport& out, const VerificationReport& part, const std::string& tag) {
  for (const auto& [k, v] : part.metrics) out.metrics[tag + "." + k] = v;
  if (!out.detail.empty()) out.detail += "; ";
  out.detail += tag + ": " + part.detail;
  out.pass = out.pass && part.pass;
  out.runtime_seconds += part.runtime_seconds;
}

VerificationReport semiconcave(ExperimentContext& ctx) {
  const QviSolution& sol = ctx.solution();
  const double radius = ctx.config().verify.semiconcavity_radius;
  VerificationReport ru = verify_semiconcavity(sol.u, radius);
  VerificationReport rm = verify_semiconcavity(sol.mu.mu, radius, nullptr, &sol.u, &sol.policy);
  VerificationReport out;
  out.name = "semiconcavity";
  out.inputs_hash = ru.inputs_hash + rm.inputs_hash;
  out.pass = true;
  merge_into(out, ru, "u");
  merge_into(out, rm, "Mu");
  // Report the worse of the two stability ratios.
  const VerificationReport& worse = ru.margin < rm.margin ? ru : rm;
  out.measured = worse.measured;
  out.bound = worse.bound;
  out.margin = worse.margin;
  return out;
}

VerificationReport mc_cross(ExperimentContext& ctx) {
  const RunConfig& cfg = ctx.config();
  const QviSolution& fine = ctx.solution();
  const Grid1D& g = cfg.grid;
  Grid1D coarse_grid = Grid1D::make(g.lower, g.upper, (g.n - 1) / 2 + 1);
  QviSolution coarse = solve_qvi(ctx.spec(), coarse_grid, ctx.quadrature(), ctx.solve_config());
  double sigma_sup = 0.0;
  for (std::size_t i = 0; i < g.n; ++i) {
    sigma_sup = std::max(sigma_sup, std::abs(ctx.spec().volatility(g.x(i))));
  }
  std::vector<double> allowances;
  for (double x : cfg.verify.mc_points) {
    allowances.push_back(mc_allowance(fine.u, coarse.u, x, ctx.value_lipschitz(), sigma_sup,
                                      cfg.simulate.dt));
  }
  return verify_value_vs_montecarlo(ctx.spec(), ctx.quadrature(), fine.u, fine.policy,
                                    cfg.simulate, cfg.verify.mc_points, allowances);
}

VerificationReport coupling(ExperimentContext& ctx) {
  const auto& sweep = ctx.coupling();
  const auto& alphas = ctx.config().verify.alphas;
  const double want = ctx.config().verify.coupling_alpha;
  std::size_t a = 0;
  for (std::size_t k = 1; k < alphas.size(); ++k) {
    if (std::abs(alphas[k] - want) < std::abs(alphas[a] - want)) a = k;
  }
  std::vector<CouplingStats> entries;
  for (std::size_t e = 0; e + 1 < sweep.size(); ++e) entries.push_back(sweep[e][a]);
  return verify_coupling_bound(entries, sweep.back()[a]);
}

}  // namespace

ExperimentContext::ExperimentContext(RunConfig config) : config_(std::move(config)) {
  spec_ = config_.problem();
  profile_ = config_.profile(spec_);
  quad_ = config_.quadrature(spec_, profile_);
  constants_ = estimate_beta(spec_, profile_, quad_, config_.sampling);
  value_lipschitz_ =
      constants_.value_lipschitz(profile_.lipschitz_cost, spec_.discount).value_or(kInf);
}

SolveConfig ExperimentContext::solve_config() const {
  SolveConfig sc = config_.solve;
  sc.slope_cap = std::min(sc.slope_cap, value_lipschitz_);
  return sc;
}

const QviSolution& ExperimentContext::solution() {
  if (!solution_) solution_ = solve_qvi(spec_, config_.grid, quad_, solve_config());
  return *solution_;
}

const std::vector<std::vector<CouplingStats>>& ExperimentContext::coupling() {
  if (!coupling_) {
    std::vector<double> eps = config_.verify.coupling_eps;
    eps.push_back(0.0);
    coupling_ = coupled_sweep(spec_, quad_, config_.verify.coupling, eps, config_.verify.alphas,
                              config_.verify.coupling_x0);
  }
  return *coupling_;
}

std::vector<FittedRate> ExperimentContext::fitted_rates() {
  const auto& sweep = coupling();
  std::vector<FittedRate> out;
  for (std::size_t a = 0; a < config_.verify.alphas.size(); ++a) {
    std::vector<CouplingStats> entries;
    for (std::size_t e = 0; e + 1 < sweep.size(); ++e) entries.push_back(sweep[e][a]);
    out.push_back({config_.verify.alphas[a], fit_M(entries)});
  }
  return out;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"lipschitz", "sweep-eps", "semiconcave", "lp",
                                                 "holder",    "coupling",  "mc-cross"};
  return names;
}

VerificationReport run_experiment(ExperimentContext& ctx, const std::string& name) {
  const RunConfig& cfg = ctx.config();
  if (name == "lipschitz") {
    return verify_lipschitz_u(ctx.solution().u, ctx.value_lipschitz(),
                              cfg.verify.lipschitz_factor);
  }
  if (name == "sweep-eps") {
    return verify_uniform_convergence(ctx.spec(), cfg.grid, ctx.quadrature(), cfg.verify.eps_list,
                                      ctx.fitted_rates(), ctx.constants().beta,
                                      ctx.profile().lipschitz_cost, ctx.solve_config())
        .report;
  }
  if (name == "semiconcave") return semiconcave(ctx);
  if (name == "lp") {
    const double w = cfg.verify.lp_window;
    return verify_eps_lp_estimate(ctx.spec(), ctx.quadrature(), cfg.grid,
                                  standard_test_functions(), {-w, w}, cfg.verify.etas,
                                  cfg.verify.ps, ctx.profile().integrability, ctx.profile().gamma,
                                  cfg.verify.slack);
  }
  if (name == "holder") {
    return verify_holder_I(ctx.spec(), ctx.quadrature(), cfg.grid,
                           test_function(cfg.verify.holder_function), cfg.verify.holder_alpha,
                           ctx.profile().gamma, cfg.verify.holder_windows);
  }
  if (name == "coupling") return coupling(ctx);
  if (name == "mc-cross") return mc_cross(ctx);
  throw InputError("unknown experiment '" + name + "'");
}

}  // namespace impulse_qvi
