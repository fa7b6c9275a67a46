#include <doctest.h>

#include <cmath>

#include "impulse_qvi/error.hpp"
#include "impulse_qvi/verify.hpp"

using namespace impulse_qvi;

namespace {

LevyQuadrature quad_with(double gamma) {
  QuadratureOptions o;
  o.profile_gamma = gamma;
  o.breakpoints = {0.05, 0.1, 0.2};
  return build_quadrature(LevyMeasure1D::power_law(1.0, 1.5, 1.0), 1.0, 64, o);
}

CouplingStats stat(double eps, double sup, double lambda) {
  CouplingStats s;
  s.eps = eps;
  s.sup_estimate = sup;
  s.half_width = 0.01 * sup;
  s.lambda = lambda;
  s.ratio = lambda > 0.0 ? (sup + s.half_width) / (lambda * lambda) : 0.0;
  return s;
}

}  // namespace

TEST_SUITE("verify") {
  TEST_CASE("Lipschitz check") {
    Grid1D g = Grid1D::make(-1.0, 1.0, 21);
    ValueField u = ValueField::sample(g, [](double x) { return 0.5 * std::abs(x); });
    VerificationReport r = verify_lipschitz_u(u, 0.5);
    CHECK(r.pass);
    CHECK(r.measured == doctest::Approx(0.5));
    CHECK(r.margin == doctest::Approx(1.05));
    CHECK_FALSE(verify_lipschitz_u(u, 0.45).pass);
    CHECK(margin_of(1.0, 0.0) == HUGE_VAL);
  }

  TEST_CASE("semi-concavity fits") {
    Grid1D g = Grid1D::make(-3.0, 3.0, 301);
    ValueField sq = ValueField::sample(g, [](double x) { return x * x; });
    SemiConcavityFit fit;
    VerificationReport r = verify_semiconcavity(sq, 2.0, &fit);
    CHECK(r.pass);
    REQUIRE(fit.constant.size() == 3);
    for (double c : fit.constant) CHECK(c == doctest::Approx(2.0).epsilon(1e-6));
    ValueField cap = ValueField::sample(g, [](double x) { return -x * x; });
    CHECK(verify_semiconcavity(cap, 2.0).pass);
    ValueField kink = ValueField::sample(g, [](double x) { return std::abs(x); });
    VerificationReport k = verify_semiconcavity(kink, 2.0);
    CHECK_FALSE(k.pass);
    CHECK(k.detail.find("not semi-concave at resolution") != std::string::npos);
  }

  TEST_CASE("I3 bound is within a factor two for the quadratic profile") {
    ProblemSpec spec = reference_problem();
    LevyQuadrature q = quad_with(2.0);
    Grid1D g = Grid1D::make(-6.0, 6.0, 601);
    std::vector<TestFunction> tests = {test_function("half_square")};
    VerificationReport r =
        verify_eps_lp_estimate(spec, q, g, tests, {-2.0, 2.0}, {1.0, 0.5, 0.1}, {1.0, 2.0, 0.0}, 20.0, 2.0);
    CHECK(r.pass);
    CHECK(r.metrics["sum_rule"] <= 1e-10);
    CHECK(r.metrics["tightest_I3_factor"] >= 1.0);
    CHECK(r.metrics["tightest_I3_factor"] <= 2.0 + 1e-6);
  }

  TEST_CASE("Lp estimate on the reference profile") {
    ProblemSpec spec = reference_problem();
    LevyQuadrature q = quad_with(1.6);
    Grid1D g = Grid1D::make(-6.0, 6.0, 601);
    VerificationReport r = verify_eps_lp_estimate(spec, q, g, standard_test_functions(), {-2.0, 2.0},
                                                  {1.0, 0.25, 0.05}, {1.0, 4.0, 0.0}, 20.0, 1.6);
    INFO(r.detail);
    CHECK(r.pass);
    CHECK_THROWS_AS(verify_eps_lp_estimate(spec, q, g, standard_test_functions(), {-5.5, 2.0},
                                           {1.0}, {1.0}, 20.0, 1.6),
                    InputError);
    CHECK_THROWS_AS(verify_eps_lp_estimate(spec, q, g, standard_test_functions(), {-2.0, 2.0},
                                           {1.0}, {1.0}, 20.0, 1.5),
                    InputError);
    CHECK_THROWS_AS(test_function("tanh"), InputError);
  }

  TEST_CASE("Hoelder quotient of I") {
    ProblemSpec spec = reference_problem();
    LevyQuadrature q = quad_with(1.6);
    Grid1D g = Grid1D::make(-6.0, 6.0, 601);
    std::vector<LpWindow> w = {{0.1, 1.0}, {0.1, 1.5}, {0.1, 2.0}};
    VerificationReport kink = verify_holder_I(spec, q, g, test_function("x_abs_x"), 1.0, 1.6, w);
    INFO(kink.detail);
    CHECK(kink.pass);
    CHECK(kink.metrics["exponent"] == doctest::Approx(0.2));
    VerificationReport flat = verify_holder_I(spec, q, g, test_function("half_square"), 1.0, 1.6, w);
    CHECK(flat.pass);
    VerificationReport bad = verify_holder_I(spec, q, g, test_function("x_abs_x"), 0.5, 1.6, w);
    CHECK_FALSE(bad.pass);
  }

  TEST_CASE("coupling bound on synthetic statistics") {
    std::vector<CouplingStats> sw = {stat(0.3, 2.0, 1.5), stat(0.2, 1.6, 1.35), stat(0.1, 1.2, 1.15)};
    CouplingStats control = stat(0.0, 0.0, 0.0);
    VerificationReport r = verify_coupling_bound(sw, control);
    CHECK(r.pass);
    CHECK(std::isfinite(r.metrics["M"]));
    control.max_abs_difference = 1e-300;
    CHECK_FALSE(verify_coupling_bound(sw, control).pass);
    control.max_abs_difference = 0.0;
    sw[2].sup_estimate = 5.0;
    CHECK_FALSE(verify_coupling_bound(sw, control).pass);
  }

  TEST_CASE("Monte Carlo allowance") {
    Grid1D g = Grid1D::make(-1.0, 1.0, 21);
    Grid1D c = Grid1D::make(-1.0, 1.0, 11);
    ValueField fine = ValueField::sample(g, [](double x) { return x * x; });
    ValueField coarse = ValueField::sample(c, [](double x) { return x * x + 0.01; });
    CHECK(mc_allowance(fine, coarse, 0.4, 2.0 / 3.0, 0.4, 1e-2) ==
          doctest::Approx(0.02 + 2.0 / 3.0 * 0.4 * 0.1));
  }
}
