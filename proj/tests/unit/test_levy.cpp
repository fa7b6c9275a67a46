#include <doctest.h>

#include <cmath>
#include <vector>

#include "impulse_qvi/error.hpp"
#include "impulse_qvi/levy.hpp"
#include "impulse_qvi/model.hpp"

using namespace impulse_qvi;

namespace {

QuadratureOptions profile(double gamma) {
  QuadratureOptions o;
  o.profile_gamma = gamma;
  o.breakpoints = {0.05, 0.1, 0.2};
  return o;
}

double closed_s2(double c, double g, double eta) { return 2.0 * c * std::pow(eta, 2.0 - g) / (2.0 - g); }

}  // namespace

TEST_SUITE("levy") {
  TEST_CASE("small-jump second moment matches its closed form") {
    auto nu = LevyMeasure1D::power_law(1.0, 1.5, 1.0);
    for (double eta : {1.0, 0.5, 0.1, 0.01}) {
      LevyQuadrature q = build_quadrature(nu, eta, 64, profile(1.6));
      CHECK(q.second_moment_below(eta) == doctest::Approx(closed_s2(1.0, 1.5, eta)).epsilon(1e-6));
      CHECK(q.small_second_moment == doctest::Approx(closed_s2(1.0, 1.5, eta)).epsilon(1e-6));
    }
    auto nu2 = LevyMeasure1D::power_law(2.0, 0.7, 2.0);
    LevyQuadrature q2 = build_quadrature(nu2, 0.3, 64, profile(1.0));
    CHECK(q2.second_moment_below(0.3) == doctest::Approx(closed_s2(2.0, 0.7, 0.3)).epsilon(1e-6));
  }

  TEST_CASE("module of integrability at eta = 1 for the reference profile") {
    auto nu = LevyMeasure1D::power_law(1.0, 1.5, 1.0);
    LevyQuadrature q = build_quadrature(nu, 1.0, 64, profile(1.6));
    CHECK(q.module_of_integrability(1.0) == doctest::Approx(20.0).epsilon(1e-12));
    // with the quadratic profile r(eta) is s^2(eta)
    LevyQuadrature q2 = build_quadrature(nu, 1.0, 64, profile(2.0));
    CHECK(q2.module_of_integrability(0.25) == doctest::Approx(closed_s2(1.0, 1.5, 0.25)).epsilon(1e-9));
  }

  TEST_CASE("Lambda of the truncation error") {
    auto nu = LevyMeasure1D::power_law(1.0, 1.5, 1.0);
    LevyQuadrature q = build_quadrature(nu, 1.0, 64, profile(1.6));
    JumpFunction j = make_problem(CoefficientChoices{}, nu, 1.0).jump;
    std::vector<double> xs = {0.0};
    TruncationReport r = lambda_norms(j, 0.1, q, xs);
    CHECK(r.lambda == doctest::Approx(1.34898).epsilon(1e-4));
    for (double eps : {0.2, 0.1, 0.05}) {
      double n2 = std::sqrt(2.0 * std::pow(eps, 0.5) / 0.5);
      double n4 = std::pow(2.0 * std::pow(eps, 2.5) / 2.5, 0.25);
      TruncationReport t = lambda_norms(j, eps, q, xs);
      CHECK(t.norm2 == doctest::Approx(n2).epsilon(1e-6));
      CHECK(t.norm4 == doctest::Approx(n4).epsilon(1e-6));
      CHECK(t.lambda == doctest::Approx(n2 + n4).epsilon(1e-6));
    }
  }

  TEST_CASE("compound Poisson atom below the level") {
    auto nu = LevyMeasure1D::compound_poisson({{0.5, 2.0}});
    LevyQuadrature q = build_quadrature(nu, 1.0, 64);
    JumpFunction j = make_problem(CoefficientChoices{}, nu, 1.0).jump;
    std::vector<double> xs = {0.0};
    TruncationReport r = lambda_norms(j, 0.6, q, xs);
    CHECK(r.norm2 * r.norm2 == doctest::Approx(0.5).epsilon(1e-12));
    TruncationReport above = lambda_norms(j, 0.4, q, xs);
    CHECK(above.lambda == 0.0);
  }

  TEST_CASE("guarded inputs") {
    CHECK_THROWS_WITH_AS(LevyMeasure1D::power_law(1.0, 2.5, 1.0),
                         "infinite quadratic small-jump mass", InputError);
    CHECK_THROWS_AS(LevyMeasure1D::power_law(-1.0, 1.5, 1.0), InputError);
    CHECK_THROWS_AS(LevyMeasure1D::compound_poisson({{0.5, -1.0}}), InputError);
    auto nu = LevyMeasure1D::power_law(1.0, 1.5, 1.0);
    CHECK_THROWS_AS(build_quadrature(nu, 0.0, 64), InputError);
    CHECK_THROWS_AS(build_quadrature(nu, 2.0, 64), InputError);
    TruncationReport r;
    r.lambda = 1.0;
    CHECK_THROWS_WITH_AS(error_bound(r, 1.0, 1.0, 1.0, 2.0), "discount too small for this alpha",
                         InputError);
    CHECK(error_bound(r, 1.0, 4.0, 1.0, 0.0) == doctest::Approx(2.0));
  }

  TEST_CASE("truncation composes to the larger level") {
    JumpFunction j = make_problem(CoefficientChoices{}, LevyMeasure1D::power_law(1.0, 1.5), 1.0).jump;
    JumpFunction a = truncate_jump(truncate_jump(j, 0.1), 0.05);
    CHECK(a.truncation == doctest::Approx(0.1));
    CHECK(a(0.0, 0.08) == 0.0);
    CHECK(a(0.0, 0.2) == doctest::Approx(0.2));
    CHECK(a(0.0, -0.1) == 0.0);  // j0 <= eps is dropped
  }

  TEST_CASE("inverse CDF marks stay in the restricted support") {
    auto nu = LevyMeasure1D::power_law(1.0, 1.5, 1.0);
    for (double us : {0.1, 0.6}) {
      for (double u : {0.0, 0.3, 0.999999}) {
        double z = nu.sample_mark(0.2, 1.0, us, u);
        CHECK(std::abs(z) > 0.2 - 1e-12);
        CHECK(std::abs(z) <= 1.0 + 1e-12);
        CHECK((z > 0) == (us >= 0.5));
      }
    }
    CHECK(nu.tail_mass(0.2, 1.0) == doctest::Approx(2.0 * (std::pow(0.2, -1.5) - 1.0) / 1.5));
  }

  TEST_CASE("quadrature integrates the full second moment") {
    auto nu = LevyMeasure1D::power_law(1.0, 1.5, 1.0);
    LevyQuadrature q = build_quadrature(nu, 1.0, 64, profile(1.6));
    double s = q.integrate([](double z) { return z * z; }, 0.0, 2.0);
    CHECK(s == doctest::Approx(4.0).epsilon(1e-6));
    double odd = q.integrate([](double z) { return z; }, 0.05, 2.0);
    CHECK(std::abs(odd) < 1e-12);
  }
}
