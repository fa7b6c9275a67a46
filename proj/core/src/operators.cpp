#include "impulse_qvi/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "impulse_qvi/error.hpp"
#include "impulse_qvi/parallel.hpp"

namespace impulse_qvi {

namespace {

/// Stencil of a phi'' + b phi' at node i over virtual indices.
template <class Emit>
void ld_terms(double a, double b, long i, double h, Emit&& emit) {
  double c2 = a / (h * h);
  emit(i - 1, c2);
  emit(i, -2.0 * c2);
  emit(i + 1, c2);
  double c1 = b / h;
  if (std::abs(b) * h <= a * (1.0 + 1e-12)) {
    // central while half the diffusion weight is left for the neighbours
    emit(i + 1, 0.5 * c1);
    emit(i - 1, -0.5 * c1);
  } else if (b > 0.0) {
    emit(i + 1, c1);
    emit(i, -c1);
  } else if (b < 0.0) {
    emit(i, c1);
    emit(i - 1, -c1);
  }
}

enum Part { kBig = 0, kShell = 1, kSmall = 2 };

/// Per-mark stencil of phi(x+j) - phi(x) - j phi'(x) 1{j0<1}. Targets between
/// nodes use linear interpolation minus half its quadratic defect, so the
/// stencil is exact for quadratics; sub-cell jumps use 1/2 j^2 D2 directly.
template <class Emit>
void jump_terms(const ProblemSpec& spec, const LevyQuadrature& quad, const JumpTreatment& mode,
                const Grid1D& grid, long i, double eta, Emit&& emit) {
  const double h = grid.h();
  const long last = static_cast<long>(grid.n) - 1;
  const double x = grid.x(static_cast<std::size_t>(i));
  const double inv2h = 0.5 / h;
  const double inv2h2 = 0.5 / (h * h);
  for (std::size_t q = 0; q < quad.size(); ++q) {
    const double j0 = quad.bound(q);
    if (!mode.keeps(j0) || !(j0 > spec.jump.truncation)) continue;
    const double z = quad.nodes[q];
    const double w = quad.weights[q];
    const double j = spec.jump.amplitude(x, z);
    if (!std::isfinite(j) || !std::isfinite(w)) throw NumericalError("non-finite quadrature term");
    const int part = j0 >= 1.0 ? kBig : (j0 >= eta ? kShell : kSmall);
    const bool compensated = j0 < 1.0;

    if (std::abs(j) < h) {
      double c = w * j * j * inv2h2;
      emit(part, i - 1, c);
      emit(part, i, -2.0 * c);
      emit(part, i + 1, c);
      if (!compensated) {
        emit(part, i + 1, w * j * inv2h);
        emit(part, i - 1, -w * j * inv2h);
      }
      continue;
    }

    double r = j / h;
    double kk = std::floor(r);
    double s = j - kk * h;
    if (s >= h) {
      kk += 1.0;
      s = 0.0;
    } else if (s < 0.0) {
      s = 0.0;
    }
    const double theta = s / h;
    const long lo = i + static_cast<long>(kk);
    emit(part, lo, w * (1.0 - theta));
    if (theta > 0.0) emit(part, lo + 1, w * theta);
    emit(part, i, -w);
    if (compensated) {
      emit(part, i + 1, -w * j * inv2h);
      emit(part, i - 1, w * j * inv2h);
    }
    if (theta > 0.0 && lo >= 0 && lo + 1 <= last) {
      double c = w * s * (h - s) * inv2h2;
      emit(part, i - 1, -c);
      emit(part, i, 2.0 * c);
      emit(part, i + 1, -c);
    }
  }
}

}  // namespace

Grid1D Grid1D::make(double lower, double upper, std::size_t n) {
  if (n < 3) throw InputError("grid needs at least 3 nodes");
  if (!(upper > lower) || !std::isfinite(lower) || !std::isfinite(upper)) {
    throw InputError("grid needs finite bounds with upper > lower");
  }
  return Grid1D{lower, upper, n};
}

double Grid1D::x(std::size_t i) const {
  if (i + 1 == n) return upper;
  return lower + h() * static_cast<double>(i);
}

std::size_t Grid1D::nearest(double x) const {
  double t = std::round((x - lower) / h());
  if (!(t > 0.0)) return 0;
  if (t >= static_cast<double>(n - 1)) return n - 1;
  return static_cast<std::size_t>(t);
}

std::vector<double> Grid1D::nodes() const {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x(i);
  return out;
}

ValueField ValueField::sample(const Grid1D& grid, const ScalarFunction& g, double slope_left,
                              double slope_right) {
  ValueField f;
  f.grid = grid;
  f.values.resize(static_cast<Eigen::Index>(grid.n));
  for (std::size_t i = 0; i < grid.n; ++i) f.values[static_cast<Eigen::Index>(i)] = g(grid.x(i));
  f.slope_left = slope_left;
  f.slope_right = slope_right;
  return f;
}

double ValueField::at_index(long k) const {
  const long last = static_cast<long>(grid.n) - 1;
  if (k < 0) return values[0] + slope_left * static_cast<double>(-k) * grid.h();
  if (k > last) return values[last] + slope_right * static_cast<double>(k - last) * grid.h();
  return values[k];
}

double ValueField::at(double x) const {
  const double h = grid.h();
  const Eigen::Index last = static_cast<Eigen::Index>(grid.n) - 1;
  if (x <= grid.lower) return values[0] + slope_left * (grid.lower - x);
  if (x >= grid.upper) return values[last] + slope_right * (x - grid.upper);
  double t = (x - grid.lower) / h;
  auto k = static_cast<Eigen::Index>(std::floor(t));
  if (k >= last) return values[last];
  double th = t - static_cast<double>(k);
  return (1.0 - th) * values[k] + th * values[k + 1];
}

double ValueField::lipschitz_quotient() const {
  double q = 0.0;
  for (Eigen::Index i = 0; i + 1 < values.size(); ++i) {
    q = std::max(q, std::abs(values[i + 1] - values[i]));
  }
  return q / grid.h();
}

double ValueField::observed_slope_left() const { return (values[0] - values[1]) / grid.h(); }

double ValueField::observed_slope_right() const {
  Eigen::Index last = values.size() - 1;
  return (values[last] - values[last - 1]) / grid.h();
}

JumpTreatment JumpTreatment::strict(double eps) {
  if (!(eps >= 0.0)) throw InputError("truncation level must be nonnegative");
  return {Kind::strict_truncation, eps};
}

JumpTreatment JumpTreatment::diffusion(double delta) {
  if (!(delta >= 0.0)) throw InputError("surrogate level must be nonnegative");
  return {Kind::diffusion_correction, delta};
}

bool JumpTreatment::keeps(double j0) const {
  return kind == Kind::strict_truncation ? j0 > level : j0 >= level;
}

std::string JumpTreatment::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << (kind == Kind::strict_truncation ? "strict_truncation(" : "diffusion_correction(") << level
     << ")";
  return os.str();
}

LocalCoefficients local_coefficients(const ProblemSpec& spec, const Grid1D& grid,
                                     const LevyQuadrature& quad, const JumpTreatment& mode) {
  const auto n = static_cast<Eigen::Index>(grid.n);
  LocalCoefficients c;
  c.a.resize(n);
  c.b.resize(n);
  c.correction = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double x = grid.x(static_cast<std::size_t>(i));
    double a = spec.diffusion(x);
    double b = spec.drift(x);
    for (std::size_t q = 0; q < quad.size(); ++q) {
      double j0 = quad.bound(q);
      if (!(j0 > spec.jump.truncation)) continue;
      if (mode.keeps(j0)) {
        if (j0 >= 1.0) b -= quad.weights[q] * spec.jump.amplitude(x, quad.nodes[q]);
      } else if (mode.kind == JumpTreatment::Kind::diffusion_correction) {
        double j = spec.jump.amplitude(x, quad.nodes[q]);
        c.correction[i] += 0.5 * quad.weights[q] * j * j;
      }
    }
    if (!std::isfinite(a) || !std::isfinite(b)) {
      throw NumericalError("non-finite coefficient at x=" + std::to_string(x));
    }
    c.a[i] = a + c.correction[i];
    c.b[i] = b;
  }
  return c;
}

double apply_Ld(const ValueField& field, const LocalCoefficients& coeffs, std::size_t node) {
  if (node == 0 || node + 1 >= field.grid.n) throw InputError("exterior stencil");
  double s = 0.0;
  auto i = static_cast<Eigen::Index>(node);
  ld_terms(coeffs.a[i], coeffs.b[i], static_cast<long>(node), field.grid.h(),
           [&](long k, double c) { s += c * field.at_index(k); });
  return s;
}

double apply_I(const ValueField& field, const LevyQuadrature& quad, const ProblemSpec& spec,
               std::size_t node, const JumpTreatment& mode) {
  return decompose_I(field, quad, spec, node, 1.0, mode).sum();
}

IDecomposition decompose_I(const ValueField& field, const LevyQuadrature& quad,
                           const ProblemSpec& spec, std::size_t node, double eta,
                           const JumpTreatment& mode) {
  if (!(eta > 0.0 && eta <= 1.0)) throw InputError("eta must lie in (0, 1]");
  if (node >= field.grid.n) throw InputError("node outside grid");
  double parts[3] = {0.0, 0.0, 0.0};
  jump_terms(spec, quad, mode, field.grid, static_cast<long>(node), eta,
             [&](int part, long k, double c) { parts[part] += c * field.at_index(k); });
  return {parts[kBig], parts[kShell], parts[kSmall]};
}

OperatorMatrix assemble_A(const ProblemSpec& spec, const Grid1D& grid, const LevyQuadrature& quad,
                          const JumpTreatment& mode, double slope_left, double slope_right) {
  OperatorMatrix op;
  op.grid = grid;
  op.mode = mode;
  op.slope_left = slope_left;
  op.slope_right = slope_right;
  op.discount = spec.discount;
  op.coeffs = local_coefficients(spec, grid, quad, mode);

  const auto n = static_cast<Eigen::Index>(grid.n);
  const long last = static_cast<long>(grid.n) - 1;
  const double h = grid.h();
  op.A = Eigen::MatrixXd::Zero(n, n);
  op.g = Eigen::VectorXd::Zero(n);

  parallel_for(grid.n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t row = begin; row < end; ++row) {
      auto i = static_cast<Eigen::Index>(row);
      // Accumulates the coefficients of L_D + I; negated below.
      auto add = [&](long k, double c) {
        if (k < 0) {
          op.A(i, 0) += c;
          op.g[i] += c * slope_left * static_cast<double>(-k) * h;
        } else if (k > last) {
          op.A(i, last) += c;
          op.g[i] += c * slope_right * static_cast<double>(k - last) * h;
        } else {
          op.A(i, k) += c;
        }
      };
      ld_terms(op.coeffs.a[i], op.coeffs.b[i], static_cast<long>(row), h, add);
      jump_terms(spec, quad, mode, grid, static_cast<long>(row), 1.0,
                 [&](int, long k, double c) { add(k, c); });
      op.A.row(i) *= -1.0;
      op.g[i] = -op.g[i];
      op.A(i, i) += spec.discount;
    }
  });

  for (Eigen::Index i = 0; i < n; ++i) {
    double diag = op.A(i, i);
    if (!(diag > 0.0)) throw NumericalError("non-monotone stencil; refine h");
    double tol = 1e-10 * diag;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != i && op.A(i, k) > tol) throw NumericalError("non-monotone stencil; refine h");
    }
  }
  return op;
}

Eigen::VectorXd apply_A_direct(const ProblemSpec& spec, const ValueField& field,
                               const LevyQuadrature& quad, const JumpTreatment& mode) {
  const Grid1D& grid = field.grid;
  LocalCoefficients coeffs = local_coefficients(spec, grid, quad, mode);
  Eigen::VectorXd out(static_cast<Eigen::Index>(grid.n));
  const double h = grid.h();
  for (std::size_t row = 0; row < grid.n; ++row) {
    auto i = static_cast<Eigen::Index>(row);
    double ld = 0.0;
    ld_terms(coeffs.a[i], coeffs.b[i], static_cast<long>(row), h,
             [&](long k, double c) { ld += c * field.at_index(k); });
    double jump = apply_I(field, quad, spec, row, mode);
    out[i] = -ld - jump + spec.discount * field.values[i];
  }
  return out;
}

void OperatorMatrix::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open '" + path + "' for writing");
  char buf[32];
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index k = 0; k < A.cols(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", A(i, k));
      os << buf << ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", g[i]);
    os << buf << '\n';
  }
}

std::vector<double> default_xi_grid(const Grid1D& grid) {
  std::vector<double> xi;
  const long m = static_cast<long>(grid.n) - 1;
  xi.reserve(static_cast<std::size_t>(2 * m + 1));
  for (long k = -m; k <= m; ++k) xi.push_back(static_cast<double>(k) * grid.h());
  return xi;
}

InterventionResult intervention_operator(const ValueField& field, const ScalarFunction& cost,
                                         const std::vector<double>& xi_grid) {
  if (xi_grid.empty()) throw InputError("empty xi_grid");
  const Grid1D& grid = field.grid;
  const double h = grid.h();

  // Candidates ordered by |xi| and then position, so strict improvement
  // implements the tie rule.
  struct Candidate {
    double xi;
    double b;
    long offset;  // integer node offset, or LONG_MIN when off the lattice
  };
  std::vector<Candidate> cand;
  cand.reserve(xi_grid.size());
  double xi_min = xi_grid.front(), xi_max = xi_grid.front();
  for (double xi : xi_grid) {
    double b = cost(xi);
    if (!std::isfinite(b)) throw NumericalError("non-finite transaction cost");
    double r = xi / h;
    double k = std::round(r);
    long off = std::abs(r - k) < 1e-9 ? static_cast<long>(k) : std::numeric_limits<long>::min();
    cand.push_back({xi, b, off});
    xi_min = std::min(xi_min, xi);
    xi_max = std::max(xi_max, xi);
  }
  std::stable_sort(cand.begin(), cand.end(), [](const Candidate& p, const Candidate& q) {
    if (std::abs(p.xi) != std::abs(q.xi)) return std::abs(p.xi) < std::abs(q.xi);
    return p.xi < q.xi;
  });

  InterventionResult res;
  res.mu = field;
  res.xi_star.assign(grid.n, 0.0);
  res.at_edge.assign(grid.n, false);
  parallel_for(grid.n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double x = grid.x(i);
      double best = std::numeric_limits<double>::infinity();
      double arg = 0.0;
      for (const Candidate& c : cand) {
        double v = c.offset != std::numeric_limits<long>::min()
                       ? field.at_index(static_cast<long>(i) + c.offset)
                       : field.at(x + c.xi);
        v += c.b;
        if (v < best) {
          best = v;
          arg = c.xi;
        }
      }
      res.mu.values[static_cast<Eigen::Index>(i)] = best;
      res.xi_star[i] = arg;
      res.at_edge[i] = xi_grid.size() > 1 && (arg == xi_min || arg == xi_max) && arg != 0.0;
    }
  });
  res.edge_hits = static_cast<std::size_t>(std::count(res.at_edge.begin(), res.at_edge.end(), true));
  return res;
}

}  // namespace impulse_qvi
