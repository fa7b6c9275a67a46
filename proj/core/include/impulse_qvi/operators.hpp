#pragma once

// Grid discretization of L_D, the nonlocal operator I and its eta-split, the
// composite A = -L_D - I + r, and the intervention operator M.

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "impulse_qvi/levy.hpp"
#include "impulse_qvi/model.hpp"

namespace impulse_qvi {

struct Grid1D {
  double lower = -1.0;
  double upper = 1.0;
  std::size_t n = 3;

  /// Validates N >= 3 and upper > lower.
  static Grid1D make(double lower, double upper, std::size_t n);

  double h() const { return (upper - lower) / static_cast<double>(n - 1); }
  double x(std::size_t i) const;
  std::size_t nearest(double x) const;  // clamped to [0, n-1]
  std::vector<double> nodes() const;
};

/// Grid function with a linear extension beyond both ends. Slopes are outward:
/// phi(x) = phi_0 + slope_left (L- - x) for x < L-, and symmetrically on the right.
struct ValueField {
  Grid1D grid;
  Eigen::VectorXd values;
  double slope_left = 0.0;
  double slope_right = 0.0;

  static ValueField sample(const Grid1D& grid, const ScalarFunction& g, double slope_left = 0.0,
                           double slope_right = 0.0);

  /// Linear interpolation inside, extension outside.
  double at(double x) const;
  /// Value at a virtual node index (may be negative or >= n).
  double at_index(long k) const;
  /// max |phi_{i+1} - phi_i| / h.
  double lipschitz_quotient() const;
  /// Outward boundary slopes observed from the last two nodes.
  double observed_slope_left() const;
  double observed_slope_right() const;
};

/// How marks below a level are handled. strict_truncation(eps) drops marks with
/// j0 <= eps (this is j^eps; eps = 0 keeps everything). diffusion_correction(d)
/// drops marks with j0 < d and adds half their second moment to a(x).
struct JumpTreatment {
  enum class Kind { strict_truncation, diffusion_correction };
  Kind kind = Kind::strict_truncation;
  double level = 0.0;

  static JumpTreatment full() { return {}; }
  static JumpTreatment strict(double eps);
  static JumpTreatment diffusion(double delta);

  bool keeps(double j0) const;
  std::string describe() const;
};

/// Per-node a(x) (including any surrogate correction), the correction alone,
/// and the compensated drift b = b~ - int j 1{j0 >= 1} dnu over kept marks.
struct LocalCoefficients {
  Eigen::VectorXd a;
  Eigen::VectorXd correction;
  Eigen::VectorXd b;
};

LocalCoefficients local_coefficients(const ProblemSpec& spec, const Grid1D& grid,
                                     const LevyQuadrature& quad, const JumpTreatment& mode);

/// a phi'' + b phi' at an interior node; central second difference, central
/// first difference where |b| h <= a and upwind elsewhere. Throws InputError("exterior stencil") at the two ends.
double apply_Ld(const ValueField& field, const LocalCoefficients& coeffs, std::size_t node);

/// Quadrature of phi(x+j) - phi(x) - j phi'(x) 1{j0<1} over kept marks.
double apply_I(const ValueField& field, const LevyQuadrature& quad, const ProblemSpec& spec,
               std::size_t node, const JumpTreatment& mode = JumpTreatment::full());

struct IDecomposition {
  double big = 0.0;    // I^1: j0 >= 1, no compensator
  double shell = 0.0;  // I^2: eta <= j0 < 1
  double small = 0.0;  // I^3: j0 < eta
  double sum() const { return big + shell + small; }
};

IDecomposition decompose_I(const ValueField& field, const LevyQuadrature& quad,
                           const ProblemSpec& spec, std::size_t node, double eta,
                           const JumpTreatment& mode = JumpTreatment::full());

/// Affine discretization A u + g of -L_D - I + r on all nodes. The extension
/// slopes fold into g. Diagonal entries are positive and off-diagonals
/// nonpositive, otherwise assembly throws NumericalError("non-monotone stencil; refine h").
struct OperatorMatrix {
  Grid1D grid;
  Eigen::MatrixXd A;
  Eigen::VectorXd g;
  LocalCoefficients coeffs;
  JumpTreatment mode;
  double slope_left = 0.0;
  double slope_right = 0.0;
  double discount = 1.0;

  Eigen::VectorXd apply(const Eigen::VectorXd& u) const { return A * u + g; }
  void write_csv(const std::string& path) const;
};

OperatorMatrix assemble_A(const ProblemSpec& spec, const Grid1D& grid, const LevyQuadrature& quad,
                          const JumpTreatment& mode, double slope_left, double slope_right);

/// Same affine action evaluated node by node without forming the matrix.
Eigen::VectorXd apply_A_direct(const ProblemSpec& spec, const ValueField& field,
                               const LevyQuadrature& quad, const JumpTreatment& mode);

/// k h for k = -(N-1) .. N-1.
std::vector<double> default_xi_grid(const Grid1D& grid);

struct InterventionResult {
  ValueField mu;
  std::vector<double> xi_star;
  std::vector<bool> at_edge;  // minimizer sits on the extreme of xi_grid
  std::size_t edge_hits = 0;
};

/// Mu(x_i) = min over xi of field(x_i + xi) + B(xi). Ties go to the smallest
/// |xi|, then the leftmost. Throws InputError on an empty xi_grid.
InterventionResult intervention_operator(const ValueField& field, const ScalarFunction& cost,
                                         const std::vector<double>& xi_grid);

}  // namespace impulse_qvi
