#pragma once

// Reproducible experiments: each turns one estimate into a measured quantity,
// a bound and a pass flag.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "impulse_qvi/levy.hpp"
#include "impulse_qvi/model.hpp"
#include "impulse_qvi/operators.hpp"
#include "impulse_qvi/qvi.hpp"
#include "impulse_qvi/simulate.hpp"

namespace impulse_qvi {

struct VerificationReport {
  std::string name;
  std::string inputs_hash;
  double measured = 0.0;
  double bound = 0.0;
  double margin = 0.0;  // bound / measured; +inf when measured is 0
  bool pass = false;
  double runtime_seconds = 0.0;
  std::string detail;
  std::map<std::string, double> metrics;
};

double margin_of(double bound, double measured);

/// max |u_{i+1} - u_i| / h against factor * C_u.
VerificationReport verify_lipschitz_u(const ValueField& u, double value_lipschitz,
                                      double factor = 1.05);

struct SweepRow {
  double eps = 0.0;
  double lambda = 0.0;
  double bound = 0.0;        // C(eps) at the best alpha
  double best_alpha = 0.0;
  double diff_next = 0.0;    // ||u_eps - u_next||_inf, 0 for the last row
};

/// A fitted envelope constant for one comparison rate.
struct FittedRate {
  double alpha = 0.0;
  double m = 0.0;
};

struct UniformConvergence {
  VerificationReport report;
  std::vector<SweepRow> rows;
  std::vector<QviSolution> solutions;
};

/// Solves at every eps (decreasing, at least three) and checks every pair
/// against C(eps) + C(eps'), plus strict decrease of consecutive differences.
/// C(eps) uses the smallest value over the fitted rates with beta < alpha < 2r.
UniformConvergence verify_uniform_convergence(const ProblemSpec& spec, const Grid1D& grid,
                                              const LevyQuadrature& quad,
                                              const std::vector<double>& eps_list,
                                              const std::vector<FittedRate>& rates, double beta,
                                              double lipschitz_f, const SolveConfig& config);

struct SemiConcavityFit {
  std::vector<double> z;
  std::vector<double> constant;  // max second difference / z^2 per z
  double worst_transfer = 0.0;   // max violation of the transfer inequality
  std::size_t transfer_checked = 0;
};

/// Fitted C_r over interior nodes with |x| < radius for z in {h, 2h, 4h}.
/// Stable when all fits are <= 0 or max/min <= 2. When `mu` is given the
/// transfer inequality is checked at every action node of `policy`.
VerificationReport verify_semiconcavity(const ValueField& field, double radius,
                                        SemiConcavityFit* fit = nullptr,
                                        const ValueField* u_for_transfer = nullptr,
                                        const ImpulsePolicy* policy = nullptr,
                                        double tolerance = 1e-9);

struct TestFunction {
  std::string name;
  ScalarFunction phi;
  ScalarFunction second;  // phi''
};

/// half_square, sine, gaussian, log_cosh, cubic.
std::vector<TestFunction> standard_test_functions();
/// One of the standard functions or x_abs_x; InputError otherwise.
TestFunction test_function(const std::string& name);

struct LpWindow {
  double lower = -1.0;
  double upper = 1.0;
};

/// Sum rule, the I^3 bound in L^p(O) for every p (p = 0 means sup norm), and
/// the sup bounds on I^1 and I^2. C_phi is the Lipschitz quotient of phi over
/// the window enlarged by the largest jump.
VerificationReport verify_eps_lp_estimate(const ProblemSpec& spec, const LevyQuadrature& quad,
                                          const Grid1D& grid,
                                          const std::vector<TestFunction>& tests,
                                          LpWindow window, const std::vector<double>& etas,
                                          const std::vector<double>& ps, double integrability,
                                          double gamma, double slack = 0.01);

/// Hoelder quotient of I phi with exponent (2 alpha - gamma)/2 over node pairs
/// in nested windows; C fitted on the first window and required within a
/// factor 3 on the others.
VerificationReport verify_holder_I(const ProblemSpec& spec, const LevyQuadrature& quad,
                                   const Grid1D& grid, const TestFunction& test,
                                   double holder_alpha, double gamma,
                                   const std::vector<LpWindow>& windows);

struct McPoint {
  double x = 0.0;
  double u = 0.0;
  double allowance = 0.0;
  PolicyValue solver;
  std::vector<PolicyValue> perturbed;
};

/// Grid term 2 |u_N - u_{N/2}|(x) plus the cost of acting one step late,
/// C_u sup|sigma| sqrt(dt).
double mc_allowance(const ValueField& fine, const ValueField& coarse, double x,
                    double value_lipschitz, double sigma_sup, double dt);

/// Monte Carlo value of the solver policy against u at each point (J >= u -
/// allowance and |J - u| <= allowance + 3 half-widths), plus three
/// perturbed policies (action region grown and shrunk by two nodes, targets
/// shifted by one node) that must not beat it by more than two half-widths.
VerificationReport verify_value_vs_montecarlo(const ProblemSpec& spec, const LevyQuadrature& quad,
                                              const ValueField& u, const ImpulsePolicy& policy,
                                              const SimConfig& config,
                                              const std::vector<double>& points,
                                              const std::vector<double>& allowances,
                                              std::vector<McPoint>* details = nullptr);

/// Fitted M finite, ratio spread below 10 across eps, eps = 0 control
/// identically 0, and estimates monotone in eps within two half-widths.
VerificationReport verify_coupling_bound(const std::vector<CouplingStats>& sweep,
                                         const CouplingStats& control);

}  // namespace impulse_qvi
