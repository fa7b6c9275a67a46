#include "impulse_qvi/qvi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "impulse_qvi/error.hpp"

namespace impulse_qvi {

namespace {

using Index = Eigen::Index;

double clip(double s, double cap) { return std::copysign(std::min(std::abs(s), cap), s); }

std::vector<int> indices_where(const std::vector<bool>& mask, bool value) {
  std::vector<int> out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == value) out.push_back(static_cast<int>(i));
  }
  return out;
}

Eigen::VectorXd grid_values(const Grid1D& grid, const ScalarFunction& g) {
  Eigen::VectorXd v(static_cast<Index>(grid.n));
  for (std::size_t i = 0; i < grid.n; ++i) v[static_cast<Index>(i)] = g(grid.x(i));
  return v;
}

ValueField field_like(const OperatorMatrix& op, Eigen::VectorXd values) {
  ValueField f;
  f.grid = op.grid;
  f.values = std::move(values);
  f.slope_left = op.slope_left;
  f.slope_right = op.slope_right;
  return f;
}

ObstacleResult penalize(const OperatorMatrix& op, const Eigen::VectorXd& f,
                        const Eigen::VectorXd& psi, double rho, Eigen::VectorXd u) {
  const Index n = f.size();
  const Eigen::VectorXd rhs0 = f - op.g;
  std::vector<bool> active(static_cast<std::size_t>(n));
  ObstacleResult res;
  for (std::size_t it = 0; it < 200; ++it) {
    std::vector<bool> next(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) next[static_cast<std::size_t>(i)] = u[i] > psi[i];
    if (it > 0 && next == active) break;
    active = next;
    Eigen::MatrixXd M = op.A;
    Eigen::VectorXd rhs = rhs0;
    for (Index i = 0; i < n; ++i) {
      if (active[static_cast<std::size_t>(i)]) {
        M(i, i) += rho;
        rhs[i] += rho * psi[i];
      }
    }
    u = M.partialPivLu().solve(rhs);
    res.iterations = it + 1;
  }
  res.u = field_like(op, u);
  res.penalized = true;
  res.stopped.assign(static_cast<std::size_t>(n), false);
  for (Index i = 0; i < n; ++i) {
    res.penalty_bias = std::max(res.penalty_bias, u[i] - psi[i]);
    res.stopped[static_cast<std::size_t>(i)] = u[i] >= psi[i];
  }
  return res;
}

}  // namespace

bool ImpulsePolicy::empty_action() const { return action_count() == 0; }

std::size_t ImpulsePolicy::action_count() const {
  return static_cast<std::size_t>(std::count(continuation.begin(), continuation.end(), false));
}

bool ImpulsePolicy::acts(double x, double& xi) const {
  if (continuation.empty()) return false;
  std::size_t i = grid.nearest(x);
  if (continuation[i]) return false;
  xi = xi_star[i];
  return true;
}

ImpulsePolicy ImpulsePolicy::none(const Grid1D& grid) {
  ImpulsePolicy p;
  p.grid = grid;
  p.continuation.assign(grid.n, true);
  p.xi_star.assign(grid.n, 0.0);
  return p;
}

ImpulsePolicy ImpulsePolicy::with_region_shift(long k) const {
  ImpulsePolicy out = *this;
  const long n = static_cast<long>(grid.n);
  auto action = [&](long i, bool outside) {
    if (i < 0 || i >= n) return outside;
    return !continuation[static_cast<std::size_t>(i)];
  };
  for (long i = 0; i < n; ++i) {
    bool a = action(i, true);
    // beyond the box counts as action when shrinking, as nothing when growing
    for (long d = -std::abs(k); d <= std::abs(k); ++d) {
      if (k > 0) a = a || action(i + d, false);
      if (k < 0) a = a && action(i + d, true);
    }
    out.continuation[static_cast<std::size_t>(i)] = !a;
  }
  for (long i = 0; i < n; ++i) {
    auto ui = static_cast<std::size_t>(i);
    if (out.continuation[ui]) {
      out.xi_star[ui] = 0.0;
      continue;
    }
    if (!continuation[ui]) continue;
    for (long d = 1; d < n; ++d) {
      long cand = action(i - d, false) ? i - d : (action(i + d, false) ? i + d : -1);
      if (cand < 0) continue;
      auto uc = static_cast<std::size_t>(cand);
      out.xi_star[ui] = grid.x(uc) + xi_star[uc] - grid.x(ui);
      break;
    }
  }
  return out;
}

ImpulsePolicy ImpulsePolicy::with_target_offset(long k) const {
  ImpulsePolicy out = *this;
  for (std::size_t i = 0; i < grid.n; ++i) {
    if (!continuation[i]) out.xi_star[i] += static_cast<double>(k) * grid.h();
  }
  return out;
}

ValueField solve_pide(const OperatorMatrix& op, const Eigen::VectorXd& f, double tol_inner) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(op.A);
  double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    std::ostringstream os;
    os << "singular operator (reciprocal condition estimate " << rcond << ")";
    throw NumericalError(os.str());
  }
  Eigen::VectorXd u = lu.solve(f - op.g);
  double res = (op.A * u + op.g - f).lpNorm<Eigen::Infinity>();
  if (!(res <= tol_inner * std::max(1.0, f.lpNorm<Eigen::Infinity>()))) {
    throw NumericalError("linear solve residual " + std::to_string(res) + " above tolerance");
  }
  return field_like(op, std::move(u));
}

ValueField solve_pide(const ProblemSpec& spec, const Grid1D& grid, const LevyQuadrature& quad,
                      const JumpTreatment& mode, const Eigen::VectorXd& f, double slope_left,
                      double slope_right) {
  return solve_pide(assemble_A(spec, grid, quad, mode, slope_left, slope_right), f);
}

ObstacleResult solve_obstacle(const OperatorMatrix& op, const Eigen::VectorXd& f,
                              const Eigen::VectorXd& psi, const SolveConfig& config,
                              const std::vector<bool>* warm_start) {
  const Index n = f.size();
  const auto un = static_cast<std::size_t>(n);
  if (psi.size() != n || op.A.rows() != n) throw InputError("obstacle size mismatch");
  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(psi[i])) throw InputError("obstacle must be finite on the grid");
  }
  const double rho = config.rho > 0.0 ? config.rho : 1e3 * op.discount;
  if (config.solver == ObstacleSolver::penalization) {
    ObstacleResult r = penalize(op, f, psi, rho, psi);
    Eigen::VectorXd lhs = op.A * r.u.values + op.g - f;
    for (Index i = 0; i < n; ++i) {
      r.complementarity = std::max(r.complementarity, std::abs(std::max(lhs[i], r.u.values[i] - psi[i])));
    }
    return r;
  }

  std::vector<bool> stopped = warm_start && warm_start->size() == un
                                  ? *warm_start
                                  : std::vector<bool>(un, false);
  const Eigen::VectorXd rhs0 = f - op.g;
  Eigen::VectorXd u(n);
  ObstacleResult res;
  const double scale = std::max(1.0, rhs0.lpNorm<Eigen::Infinity>());
  bool converged = false;
  for (std::size_t it = 0; it <= un; ++it) {
    std::vector<int> C = indices_where(stopped, false);
    std::vector<int> S = indices_where(stopped, true);
    for (int s : S) u[s] = psi[s];
    if (!C.empty()) {
      Eigen::VectorXd rhs = rhs0(C);
      if (!S.empty()) rhs -= op.A(C, S) * psi(S);
      Eigen::MatrixXd Acc = op.A(C, C);
      Eigen::VectorXd uc = Acc.partialPivLu().solve(rhs);
      for (std::size_t k = 0; k < C.size(); ++k) u[C[k]] = uc[static_cast<Index>(k)];
    }
    res.iterations = it + 1;
    Eigen::VectorXd lhs = op.A * u - rhs0;
    bool changed = false;
    const double guard = 1e-13 * scale;
    for (std::size_t i = 0; i < un; ++i) {
      auto ii = static_cast<Index>(i);
      double gap = u[ii] - psi[ii];
      if (!stopped[i] && gap > lhs[ii] + guard) {
        stopped[i] = true;
        changed = true;
      } else if (stopped[i] && lhs[ii] > gap + guard) {
        stopped[i] = false;
        changed = true;
      }
    }
    if (!changed) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    res = penalize(op, f, psi, rho, u);
    res.warning = "active-set cycling; fell back to penalization";
  } else {
    res.u = field_like(op, u);
    res.stopped = stopped;
  }
  Eigen::VectorXd lhs = op.A * res.u.values + op.g - f;
  for (Index i = 0; i < n; ++i) {
    res.complementarity =
        std::max(res.complementarity, std::abs(std::max(lhs[i], res.u.values[i] - psi[i])));
  }
  return res;
}

ObstacleResult solve_obstacle(const ProblemSpec& spec, const Grid1D& grid,
                              const LevyQuadrature& quad, const JumpTreatment& mode,
                              const Eigen::VectorXd& f, const Eigen::VectorXd& psi,
                              const SolveConfig& config) {
  return solve_obstacle(assemble_A(spec, grid, quad, mode, 0.0, 0.0), f, psi, config);
}

ImpulsePolicy extract_policy(const ValueField& u, const InterventionResult& mu,
                             double tol_region) {
  ImpulsePolicy p;
  p.grid = u.grid;
  p.tol_region = tol_region;
  p.continuation.assign(u.grid.n, true);
  p.xi_star.assign(u.grid.n, 0.0);
  for (std::size_t i = 0; i < u.grid.n; ++i) {
    auto ii = static_cast<Index>(i);
    bool near = u.values[ii] - mu.mu.values[ii] >= -tol_region;
    if (near && mu.xi_star[i] != 0.0) {
      p.continuation[i] = false;
      p.xi_star[i] = mu.xi_star[i];
    }
  }
  for (std::size_t i = 0; i < u.grid.n; ++i) {
    if (p.continuation[i]) continue;
    std::size_t t = u.grid.nearest(u.grid.x(i) + p.xi_star[i]);
    if (!p.continuation[t]) ++p.target_violations;
  }
  return p;
}

QviResidual qvi_residual(const ValueField& u, const ProblemSpec& spec, const OperatorMatrix& op,
                         const std::vector<double>& xi_grid, double tol_region) {
  InterventionResult mu = intervention_operator(u, spec.transaction_cost, xi_grid);
  ImpulsePolicy p = extract_policy(u, mu, tol_region);
  Eigen::VectorXd res = op.apply(u.values) - grid_values(u.grid, spec.running_cost);
  QviResidual r;
  for (std::size_t i = 0; i < u.grid.n; ++i) {
    auto ii = static_cast<Index>(i);
    double gap = u.values[ii] - mu.mu.values[ii];
    r.obstacle = std::max(r.obstacle, gap);
    if (p.continuation[i]) {
      r.continuation = std::max(r.continuation, std::abs(res[ii]));
    } else {
      r.action = std::max(r.action, std::abs(gap));
    }
  }
  return r;
}

QviSolution solve_qvi(const ProblemSpec& spec, const Grid1D& grid, const LevyQuadrature& quad,
                      const SolveConfig& config) {
  if (!(config.tol_outer > 0.0) || !(config.tol_inner > 0.0)) {
    throw InputError("solver tolerances must be positive");
  }
  const std::vector<double> xi = config.xi_grid.empty() ? default_xi_grid(grid) : config.xi_grid;
  if (xi.empty()) throw InputError("empty xi_grid");
  double floor = std::numeric_limits<double>::infinity();
  for (double v : xi) floor = std::min(floor, spec.transaction_cost(v));
  if (!(floor > 0.0)) throw InputError("transaction cost floor K must be positive");

  QviSolution sol;
  sol.f = grid_values(grid, spec.running_cost);
  for (Index i = 0; i < sol.f.size(); ++i) {
    if (!std::isfinite(sol.f[i]) || sol.f[i] < 0.0) {
      throw InputError("running cost must be finite and nonnegative on the grid");
    }
  }
  const double h = grid.h();
  const Index last = sol.f.size() - 1;
  const double r = spec.discount;
  double sl = clip((sol.f[0] - sol.f[1]) / (h * r), config.slope_cap);
  double sr = clip((sol.f[last] - sol.f[last - 1]) / (h * r), config.slope_cap);

  sol.op = assemble_A(spec, grid, quad, JumpTreatment::strict(config.eps), sl, sr);
  ValueField u = solve_pide(sol.op, sol.f, config.tol_inner);

  const double mono_tol = 1e-9 * std::max(1.0, u.values.lpNorm<Eigen::Infinity>());
  std::vector<bool> warm;
  bool converged = false;
  for (std::size_t k = 0; k < config.max_outer; ++k) {
    InterventionResult m = intervention_operator(u, spec.transaction_cost, xi);
    ObstacleResult ob = solve_obstacle(sol.op, sol.f, m.mu.values, config, &warm);
    if (ob.penalized) {
      sol.penalized = true;
      if (sol.warnings.find(ob.warning) == std::string::npos) sol.warnings += ob.warning + "; ";
    }
    warm = ob.stopped;
    Eigen::VectorXd step = ob.u.values - u.values;
    IterationRecord rec;
    rec.iteration = k + 1;
    rec.delta = step.lpNorm<Eigen::Infinity>();
    rec.max_increase = std::max(0.0, step.maxCoeff());
    rec.inner = ob.iterations;
    rec.stopped = static_cast<std::size_t>(std::count(warm.begin(), warm.end(), true));
    sol.trace.push_back(rec);
    if (rec.max_increase > std::max(config.tol_inner, mono_tol) + ob.penalty_bias) {
      sol.monotone = false;
      throw NumericalError("monotonicity violated; check discretization");
    }
    u = std::move(ob.u);
    if (rec.delta < config.tol_outer) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NumericalError("outer iteration did not converge");

  sol.u = u;
  sol.mu = intervention_operator(u, spec.transaction_cost, xi);
  const double tol_region = 2.0 * config.tol_outer;
  sol.policy = extract_policy(u, sol.mu, tol_region);
  sol.residual = sol.op.apply(u.values) - sol.f;
  sol.audit = qvi_residual(u, spec, sol.op, xi, tol_region);
  if (sol.mu.edge_hits > 0) {
    sol.warnings += "xi_grid boundary attained at " + std::to_string(sol.mu.edge_hits) + " nodes; ";
  }
  return sol;
}

}  // namespace impulse_qvi
