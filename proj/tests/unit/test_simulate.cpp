#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "impulse_qvi/error.hpp"
#include "impulse_qvi/simulate.hpp"

using namespace impulse_qvi;

namespace {

ProblemSpec pure_jump(const LevyMeasure1D& nu) {
  CoefficientChoices c;
  c.running_cost = {"constant", {{"value", 1.0}}};
  return make_problem(c, nu, 1.0);
}

LevyQuadrature quad_for(const LevyMeasure1D& nu, std::vector<double> breaks = {}) {
  QuadratureOptions o;
  o.profile_gamma = nu.kind == LevyKind::power_law ? 1.6 : 2.0;
  o.breakpoints = std::move(breaks);
  return build_quadrature(nu, 1.0, 64, o);
}

struct ThreadCap {
  explicit ThreadCap(const char* n) { setenv("IMPULSE_QVI_THREADS", n, 1); }
  ~ThreadCap() { unsetenv("IMPULSE_QVI_THREADS"); }
};

}  // namespace

TEST_SUITE("simulate") {
  TEST_CASE("compensated compound Poisson jumps are a martingale") {
    auto nu = LevyMeasure1D::compound_poisson({{0.5, 2.0}});
    ProblemSpec spec = pure_jump(nu);
    SimConfig cfg;
    cfg.horizon = 1.0;
    cfg.dt = 1e-2;
    cfg.paths = 100000;
    cfg.delta_sim = 0.1;
    PathEnsemble ens = simulate_paths(spec, quad_for(nu), cfg, nullptr, 0.3);
    double m = 0.0, v = 0.0;
    for (double x : ens.terminal) m += x;
    m /= static_cast<double>(cfg.paths);
    for (double x : ens.terminal) v += (x - m) * (x - m);
    v /= static_cast<double>(cfg.paths - 1);
    double hw = 1.96 * std::sqrt(v / static_cast<double>(cfg.paths));
    CHECK(std::abs(m - 0.3) <= 3.0 * hw);
    // Poisson count with mean 2: variance of 0.5 N
    CHECK(v == doctest::Approx(0.5).epsilon(0.03));
  }

  TEST_CASE("constant cost without impulses discounts to 1/r") {
    ProblemSpec spec = pure_jump(LevyMeasure1D::zero());
    SimConfig cfg;
    cfg.horizon = 12.0;
    cfg.dt = 0.05;
    cfg.paths = 200;
    PolicyValue v = evaluate_policy(spec, quad_for(LevyMeasure1D::zero()), cfg, nullptr, 0.0);
    CHECK(std::abs(v.mean - 1.0) <= v.half_width + 1e-12);
    CHECK(v.horizon_bound == doctest::Approx(std::exp(-12.0)));
  }

  TEST_CASE("ensembles do not depend on the worker count") {
    ProblemSpec spec = reference_problem();
    LevyQuadrature q = quad_for(spec.levy, {0.25});
    SimConfig cfg;
    cfg.horizon = 0.5;
    cfg.dt = 1e-2;
    cfg.paths = 257;
    cfg.delta_sim = 0.25;
    cfg.record_stride = 10;
    cfg.mode = CompensationMode::diffusion_surrogate;
    PathEnsemble a, b;
    {
      ThreadCap cap("1");
      a = simulate_paths(spec, q, cfg, nullptr, 0.0);
    }
    {
      ThreadCap cap("5");
      b = simulate_paths(spec, q, cfg, nullptr, 0.0);
    }
    CHECK(a.terminal == b.terminal);
    CHECK(a.cost == b.cost);
    CHECK(a.trajectories == b.trajectories);
    CHECK(a.trajectories.front().size() == 6);
  }

  TEST_CASE("impulse times increase and follow the policy") {
    ProblemSpec spec = reference_problem();
    LevyQuadrature q = quad_for(spec.levy, {0.25});
    Grid1D g = Grid1D::make(-3.0, 3.0, 61);
    ImpulsePolicy p = ImpulsePolicy::none(g);
    for (std::size_t i = 0; i < g.n; ++i) {
      if (std::abs(g.x(i)) > 1.5) {
        p.continuation[i] = false;
        p.xi_star[i] = -g.x(i);
      }
    }
    SimConfig cfg;
    cfg.horizon = 2.0;
    cfg.dt = 1e-2;
    cfg.paths = 200;
    cfg.delta_sim = 0.25;
    PathEnsemble e = simulate_paths(spec, q, cfg, &p, 2.0);
    for (const auto& imp : e.impulses) {
      REQUIRE_FALSE(imp.empty());
      CHECK(imp.front().time == 0.0);
      CHECK(imp.front().xi == doctest::Approx(-2.0));
      for (std::size_t k = 1; k < imp.size(); ++k) CHECK(imp[k].time > imp[k - 1].time);
    }
  }

  TEST_CASE("Zeno policies are stopped") {
    ProblemSpec spec = pure_jump(LevyMeasure1D::zero());
    Grid1D g = Grid1D::make(-1.0, 1.0, 3);
    ImpulsePolicy p = ImpulsePolicy::none(g);
    p.continuation.assign(3, false);
    p.xi_star = {2.0, 1.0, -1.0};  // every target is an action node again
    // one impulse per step at most, so the guard trips on the path count
    SimConfig cfg;
    cfg.horizon = 0.1;
    cfg.dt = 0.01;
    cfg.paths = 2;
    cfg.max_impulses = 5;
    CHECK_THROWS_WITH_AS(simulate_paths(spec, quad_for(LevyMeasure1D::zero()), cfg, &p, 0.0),
                         "Zeno policy", NumericalError);
  }

  TEST_CASE("step size guard") {
    ProblemSpec spec = reference_problem();
    SimConfig cfg;
    cfg.dt = 0.1;
    cfg.delta_sim = 0.01;
    CHECK_THROWS_WITH_AS(simulate_paths(spec, quad_for(spec.levy), cfg, nullptr, 0.0),
                         "step too large for jump intensity", InputError);
  }

  TEST_CASE("coupling with eps = 0 is exact and the dropped variance is reproduced") {
    CoefficientChoices c;
    auto nu = LevyMeasure1D::power_law(1.0, 1.5, 1.0);
    ProblemSpec spec = make_problem(c, nu, 1.0);
    LevyQuadrature q = quad_for(nu, {0.06, 0.1, 0.2});
    SimConfig cfg;
    cfg.horizon = 1.0;
    cfg.dt = 1e-3;
    cfg.paths = 5000;
    cfg.delta_sim = 0.06;
    cfg.mode = CompensationMode::diffusion_surrogate;
    auto sw = coupled_sweep(spec, q, cfg, {0.2, 0.1, 0.0}, {0.0}, 0.0);
    CHECK(sw[2][0].max_abs_difference == 0.0);
    CHECK(sw[2][0].sup_estimate == 0.0);
    for (int e = 0; e < 2; ++e) {
      double eps = sw[e][0].eps;
      double oracle = cfg.horizon * 2.0 * std::sqrt(eps) / 0.5;
      CHECK(std::abs(sw[e][0].terminal_moment - oracle) <= 3.0 * sw[e][0].terminal_half_width);
    }
    CHECK(sw[1][0].sup_estimate <= sw[0][0].sup_estimate + 2.0 * sw[0][0].half_width);
    double m = fit_M({sw[0][0], sw[1][0], [&] {
                        CouplingStats s = sw[1][0];
                        s.eps = 0.15;
                        return s;
                      }()});
    CHECK(std::isfinite(m));
    CHECK_THROWS_AS(fit_M({sw[0][0], sw[1][0]}), InputError);
  }

  TEST_CASE("psi statistics") {
    ProblemSpec spec = reference_problem();
    LevyQuadrature q = quad_for(spec.levy, {0.25});
    SimConfig cfg;
    cfg.horizon = 0.5;
    cfg.dt = 1e-2;
    cfg.paths = 500;
    cfg.delta_sim = 0.25;
    CHECK_THROWS_WITH_AS(psi_theta_stats(spec, q, cfg, 0.0, 1.0, 0.5, -2.0, -1.0),
                         "comparison rate below kappa", InputError);
    PsiStats s = psi_theta_stats(spec, q, cfg, -0.5, 0.5, 0.5, 0.0, -1.0);
    CHECK(s.psi0 == doctest::Approx(psi_theta(-0.5, 0.5, 0.0, 0.5)));
    CHECK(s.sup_estimate >= 0.0);
    // linear drift with additive noise contracts the coupling
    CHECK(s.ratio <= 1.0 + 1e-9);
    CHECK(psi_theta(1.0, 1.0, 1.0, 0.3) == 0.0);
  }
}
