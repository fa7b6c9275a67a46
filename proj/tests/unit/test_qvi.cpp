#include <doctest.h>

#include <cmath>

#include "impulse_qvi/error.hpp"
#include "impulse_qvi/qvi.hpp"

using namespace impulse_qvi;

namespace {

LevyQuadrature quad_for(const ProblemSpec& spec) {
  QuadratureOptions o;
  o.profile_gamma = 1.6;
  o.bound_scale = spec.jump.bound_scale;
  return build_quadrature(spec.levy, 1.0, 64, o);
}

ProblemSpec with(const std::string& what, CoefficientChoice c) {
  CoefficientChoices ch = reference_problem().choices;
  if (what == "running") ch.running_cost = c;
  if (what == "transaction") ch.transaction_cost = c;
  return make_problem(ch, LevyMeasure1D::power_law(1.0, 1.5, 1.0), 1.0);
}

}  // namespace

TEST_SUITE("qvi") {
  TEST_CASE("constant running cost without profitable impulses gives f/r") {
    ProblemSpec spec = with("running", {"constant", {{"value", 1.0}}});
    spec = make_problem(
        [&] {
          CoefficientChoices c = spec.choices;
          c.transaction_cost = {"constant", {{"K", 5.0}}};
          return c;
        }(),
        spec.levy, 1.0);
    Grid1D g = Grid1D::make(-4.0, 4.0, 161);
    QviSolution s = solve_qvi(spec, g, quad_for(spec), SolveConfig{});
    CHECK((s.u.values.array() - 1.0).abs().maxCoeff() < 1e-9);
    CHECK(s.policy.empty_action());
  }

  TEST_CASE("zero running cost gives zero value and no action") {
    ProblemSpec spec = with("running", {"zero", {}});
    Grid1D g = Grid1D::make(-5.0, 5.0, 201);
    QviSolution s = solve_qvi(spec, g, quad_for(spec), SolveConfig{});
    CHECK(s.u.values.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.policy.action_count() == 0);
  }

  TEST_CASE("reference audit on a moderate grid") {
    ProblemSpec spec = reference_problem();
    Grid1D g = Grid1D::make(-10.0, 10.0, 401);
    SolveConfig cfg;
    cfg.slope_cap = 2.0 / 3.0;
    QviSolution s = solve_qvi(spec, g, quad_for(spec), cfg);
    CHECK(s.audit.continuation <= 5e-6);
    CHECK(s.audit.obstacle <= 5e-6);
    CHECK(s.audit.action <= 5e-6);
    CHECK(s.monotone);
    CHECK(s.policy.target_violations == 0);
    CHECK(s.u.values.minCoeff() >= 0.0);
    CHECK((s.u.values - s.mu.mu.values).maxCoeff() <= 2.0 * cfg.tol_outer);
    for (std::size_t k = 1; k < s.trace.size(); ++k) CHECK(s.trace[k].max_increase <= 1e-9);
    // symmetric instance, symmetric solution
    for (std::size_t i = 0; i < g.n; ++i) {
      CHECK(s.u.values[i] == doctest::Approx(s.u.values[g.n - 1 - i]).epsilon(1e-8));
    }
    CHECK_FALSE(s.policy.empty_action());
    CHECK(s.policy.continuation[g.nearest(0.0)]);
  }

  TEST_CASE("penalization agrees with policy iteration up to its bias") {
    ProblemSpec spec = reference_problem();
    Grid1D g = Grid1D::make(-10.0, 10.0, 201);
    SolveConfig a;
    a.slope_cap = 2.0 / 3.0;
    SolveConfig b = a;
    b.solver = ObstacleSolver::penalization;
    b.rho = 1e7;
    QviSolution sa = solve_qvi(spec, g, quad_for(spec), a);
    QviSolution sb = solve_qvi(spec, g, quad_for(spec), b);
    CHECK(sb.penalized);
    CHECK((sa.u.values - sb.u.values).lpNorm<Eigen::Infinity>() < 1e-4);
  }

  TEST_CASE("large fixed cost empties the action region") {
    ProblemSpec spec = with("transaction", {"affine", {{"K", 12.0}, {"k", 0.1}}});
    Grid1D g = Grid1D::make(-10.0, 10.0, 201);
    SolveConfig cfg;
    cfg.slope_cap = 2.0 / 3.0;
    QviSolution s = solve_qvi(spec, g, quad_for(spec), cfg);
    CHECK(s.policy.empty_action());
  }

  TEST_CASE("obstacle solve respects both inequalities") {
    ProblemSpec spec = reference_problem();
    Grid1D g = Grid1D::make(-5.0, 5.0, 101);
    LevyQuadrature q = quad_for(spec);
    OperatorMatrix op = assemble_A(spec, g, q, JumpTreatment::full(), 0.0, 0.0);
    Eigen::VectorXd f(g.n), psi(g.n);
    for (std::size_t i = 0; i < g.n; ++i) {
      f[i] = spec.running_cost(g.x(i));
      psi[i] = 0.6 + 0.02 * g.x(i);
    }
    ObstacleResult r = solve_obstacle(op, f, psi, SolveConfig{});
    CHECK((r.u.values - psi).maxCoeff() <= 1e-12);
    CHECK((op.apply(r.u.values) - f).maxCoeff() <= 1e-8);
    CHECK(r.complementarity <= 1e-8);
  }

  TEST_CASE("invalid inputs") {
    ProblemSpec spec = reference_problem();
    Grid1D g = Grid1D::make(-1.0, 1.0, 21);
    SolveConfig cfg;
    cfg.tol_outer = 0.0;
    CHECK_THROWS_AS(solve_qvi(spec, g, quad_for(spec), cfg), InputError);
    cfg = SolveConfig{};
    cfg.xi_grid = {0.0};
    CHECK_NOTHROW(solve_qvi(spec, g, quad_for(spec), cfg));
    CHECK_THROWS_AS(with("running", {"constant", {{"value", -1.0}}}), InputError);
  }

  TEST_CASE("policy perturbations") {
    Grid1D g = Grid1D::make(0.0, 1.0, 11);
    ImpulsePolicy p = ImpulsePolicy::none(g);
    for (std::size_t i = 8; i < 11; ++i) {
      p.continuation[i] = false;
      p.xi_star[i] = 0.5 - g.x(i);
    }
    ImpulsePolicy grow = p.with_region_shift(2);
    ImpulsePolicy shrink = p.with_region_shift(-2);
    CHECK(grow.action_count() == 5);
    CHECK(shrink.action_count() == 1);
    CHECK(g.x(6) + grow.xi_star[6] == doctest::Approx(0.5));
    ImpulsePolicy off = p.with_target_offset(1);
    CHECK(g.x(9) + off.xi_star[9] == doctest::Approx(0.6));
    double xi = 0.0;
    CHECK(p.acts(0.97, xi));
    CHECK(xi == doctest::Approx(-0.5));
    CHECK_FALSE(p.acts(0.2, xi));
  }
}
