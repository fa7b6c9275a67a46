#pragma once

// Levy measures on a one-dimensional mark space, their quadratures, the
// small-jump truncation j^eps and the mixed moment norms that control the
// coupling error between full and truncated dynamics.

#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace impulse_qvi {

enum class LevyKind { zero, power_law, compound_poisson };

struct Atom {
  double mark = 0.0;
  double mass = 0.0;
};

/// nu(dz) on R\{0}. power_law has density c|z|^{-1-gamma} on 0<|z|<=z_max.
struct LevyMeasure1D {
  LevyKind kind = LevyKind::zero;
  double intensity = 0.0;  // c
  double order = 0.0;      // gamma of the density
  double z_max = 1.0;
  std::vector<Atom> atoms;

  static LevyMeasure1D zero();
  /// Throws InputError for order >= 2 ("infinite quadratic small-jump mass").
  static LevyMeasure1D power_law(double c, double order, double z_max = 1.0);
  static LevyMeasure1D compound_poisson(std::vector<Atom> atoms);

  bool is_zero() const;
  bool symmetric() const;
  std::string describe() const;

  /// Closed-form  int_{lo <= j0 < hi} j0^p dnu  with j0(z) = scale*|z|.
  /// Returns +inf when the integral diverges at the origin.
  double bound_moment(double p, double lo, double hi, double scale) const;

  /// nu({j0 > lo}) for j0 = scale*|z|.
  double tail_mass(double lo, double scale) const;

  /// Inverse-CDF draw of a mark from nu restricted to {j0 > lo}, normalized.
  double sample_mark(double lo, double scale, double uniform_sign, double uniform_size) const;
};

/// Jump amplitude j(x, z) with its bound j0(z) = bound_scale*|z| and, for the
/// truncated variant j^eps, the level below which marks are switched off.
struct JumpFunction {
  std::function<double(double, double)> amplitude;
  std::function<double(double, double)> x_derivative;  // d/dx j(x, z)
  std::function<double(double)> lipschitz_envelope;     // C_j(z)
  double bound_scale = 1.0;
  bool state_independent = true;
  bool odd_in_mark = true;  // j(x, -z) = -j(x, z)
  double truncation = 0.0;

  double bound(double z) const;
  bool active(double z) const { return bound(z) > truncation; }
  double operator()(double x, double z) const;
};

/// j^eps(x, z) = j(x, z) 1{j0(z) > eps}. Composing keeps the larger level.
JumpFunction truncate_jump(const JumpFunction& jump, double eps);

struct QuadratureOptions {
  double bound_scale = 1.0;               // j0(z) = scale*|z|
  double profile_gamma = 2.0;             // exponent of the module of integrability
  std::vector<double> breakpoints;        // extra j0 levels aligned with panel edges
  std::size_t gauss_order = 8;
  double inner_cutoff = 1e-10;            // relative to z_max
  double moment_tolerance = 1e-6;
  std::size_t max_nodes = 16384;
};

/// Discretized nu. Nodes are sorted ascending; weights are positive.
struct LevyQuadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> breakpoints;  // j0 levels that coincide with panel edges
  double bound_scale = 1.0;
  double profile_gamma = 2.0;
  double split = 1.0;                    // eta
  double small_second_moment = 0.0;      // s^2(eta)
  double integrability_module = 0.0;     // r(eta)
  LevyMeasure1D measure;

  std::size_t size() const { return nodes.size(); }
  bool empty() const { return nodes.empty(); }
  double bound(std::size_t q) const;
  double smallest_node() const;

  /// sum_q w_q j0_q^p over lo <= j0 < hi.
  double bound_moment(double p, double lo, double hi) const;
  /// s^2(eta) = int_{j0<eta} j0^2 dnu from the nodes.
  double second_moment_below(double eta) const;
  /// r(eta); closed form for power_law, quadrature otherwise.
  double module_of_integrability(double eta) const;
  /// sum_q w_q g(z_q) over marks with lo <= j0 < hi.
  double integrate(const std::function<double(double)>& g, double lo, double hi) const;
};

/// Geometric panels refined toward 0 with Gauss-Legendre nodes in log|z|; the
/// innermost panel [0, cutoff] is one node whose weight matches its exact
/// second moment. Node count doubles until s^2(eta) matches its closed form.
LevyQuadrature build_quadrature(const LevyMeasure1D& measure, double eta, std::size_t n_nodes,
                                const QuadratureOptions& options = {});

struct TruncationReport {
  double eps = 0.0;
  double norm2 = 0.0;  // ||j - j^eps||_{0,2}
  double norm4 = 0.0;  // ||j - j^eps||_{0,4}
  double lambda = 0.0; // Lambda_{0,2}(j - j^eps)
  double argmax_x = 0.0;
  double alpha = 0.0;
  double bound = 0.0;  // C(eps), filled by error_bound
};

/// Norms of j - j^eps from the quadrature on {j0 <= eps}, sup over sample_x.
/// Throws InputError("quadrature too coarse for eps") when no node lies below eps.
TruncationReport lambda_norms(const JumpFunction& jump, double eps, const LevyQuadrature& quad,
                              std::span<const double> sample_x);

/// C(eps) = C_f sqrt(M) Lambda / (r - alpha/2).
double error_bound(const TruncationReport& report, double lipschitz_f, double fitted_m,
                   double discount, double alpha);

/// Fills report.bound and report.alpha.
void attach_error_bound(TruncationReport& report, double lipschitz_f, double fitted_m,
                        double discount, double alpha);

}  // namespace impulse_qvi
