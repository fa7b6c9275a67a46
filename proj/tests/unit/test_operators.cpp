#include <doctest.h>

#include <cmath>

#include "impulse_qvi/error.hpp"
#include "impulse_qvi/operators.hpp"

using namespace impulse_qvi;

namespace {

LevyQuadrature reference_quad() {
  QuadratureOptions o;
  o.profile_gamma = 1.6;
  o.breakpoints = {0.05, 0.1, 0.2};
  return build_quadrature(LevyMeasure1D::power_law(1.0, 1.5, 1.0), 1.0, 64, o);
}

}  // namespace

TEST_SUITE("operators") {
  TEST_CASE("I of a half square equals the second moment over two") {
    ProblemSpec spec = reference_problem();
    LevyQuadrature q = reference_quad();
    Grid1D g = Grid1D::make(-5.0, 5.0, 401);
    ValueField f = ValueField::sample(g, [](double x) { return 0.5 * x * x; });
    f.slope_left = f.observed_slope_left();
    f.slope_right = f.observed_slope_right();
    for (std::size_t i : {100u, 200u, 300u}) {
      CHECK(apply_I(f, q, spec, i) == doctest::Approx(2.0).epsilon(1e-3));
    }
  }

  TEST_CASE("the eta split adds up and linear functions see nothing") {
    ProblemSpec spec = reference_problem();
    LevyQuadrature q = reference_quad();
    Grid1D g = Grid1D::make(-5.0, 5.0, 401);
    ValueField s = ValueField::sample(g, [](double x) { return std::sin(x); });
    ValueField lin = ValueField::sample(g, [](double x) { return 3.0 * x - 1.0; }, -3.0, 3.0);
    for (double eta : {1.0, 0.5, 0.1, 0.01}) {
      IDecomposition d = decompose_I(s, q, spec, 200, eta);
      CHECK(std::abs(d.sum() - apply_I(s, q, spec, 200)) < 1e-12);
      IDecomposition z = decompose_I(lin, q, spec, 150, eta);
      CHECK(std::abs(z.small) < 1e-10);
      CHECK(std::abs(z.sum()) < 1e-10);
    }
    CHECK_THROWS_AS(decompose_I(s, q, spec, 200, 1.5), InputError);
  }

  TEST_CASE("assembled operator is an M-matrix and matches the direct action") {
    ProblemSpec spec = reference_problem();
    LevyQuadrature q = reference_quad();
    Grid1D g = Grid1D::make(-10.0, 10.0, 201);
    OperatorMatrix op = assemble_A(spec, g, q, JumpTreatment::full(), 0.5, 0.5);
    for (Eigen::Index i = 0; i < op.A.rows(); ++i) {
      CHECK(op.A(i, i) > 0.0);
      double off = 0.0;
      for (Eigen::Index k = 0; k < op.A.cols(); ++k) {
        if (k == i) continue;
        CHECK(op.A(i, k) <= 0.0);
        off += op.A(i, k);
      }
      CHECK(op.A(i, i) + off == doctest::Approx(spec.discount).epsilon(1e-9));
    }
    ValueField f = ValueField::sample(g, [](double x) { return std::cos(x) + 0.1 * x * x; }, 0.5, 0.5);
    Eigen::VectorXd direct = apply_A_direct(spec, f, q, JumpTreatment::full());
    Eigen::VectorXd mat = op.apply(f.values);
    CHECK((direct - mat).lpNorm<Eigen::Infinity>() < 1e-9);
  }

  TEST_CASE("local operator needs interior nodes") {
    ProblemSpec spec = reference_problem();
    LevyQuadrature q = reference_quad();
    Grid1D g = Grid1D::make(-1.0, 1.0, 21);
    LocalCoefficients c = local_coefficients(spec, g, q, JumpTreatment::full());
    ValueField f = ValueField::sample(g, [](double x) { return x * x; });
    CHECK_THROWS_WITH_AS(apply_Ld(f, c, 0), "exterior stencil", InputError);
    // a phi'' + b phi' with b(x) = -x/2 and a = 0.08
    CHECK(apply_Ld(f, c, 15) == doctest::Approx(0.16 - 0.5 * g.x(15) * 2.0 * g.x(15)).epsilon(0.05));
  }

  TEST_CASE("upwinding keeps a pure drift monotone on a coarse grid") {
    CoefficientChoices c = reference_problem().choices;
    c.volatility = {"zero", {}};
    c.drift = {"constant", {{"value", 1.0}}};
    ProblemSpec spec = make_problem(c, LevyMeasure1D::zero(), 1.0);
    LevyQuadrature q = build_quadrature(LevyMeasure1D::zero(), 1.0, 64);
    CHECK_NOTHROW(assemble_A(spec, Grid1D::make(-1.0, 1.0, 11), q, JumpTreatment::full(), 0.0, 0.0));
  }

  TEST_CASE("intervention operator") {
    Grid1D g = Grid1D::make(-2.0, 2.0, 41);
    ValueField u = ValueField::sample(g, [](double x) { return x * x; }, 0.0, 0.0);
    InterventionResult m = intervention_operator(u, [](double) { return 0.5; }, default_xi_grid(g));
    for (std::size_t i = 0; i < g.n; ++i) {
      CHECK(m.mu.values[i] == doctest::Approx(0.5).epsilon(1e-12));
      CHECK(g.x(i) + m.xi_star[i] == doctest::Approx(0.0).epsilon(1e-9));
    }
    CHECK_THROWS_AS(intervention_operator(u, [](double) { return 0.5; }, {}), InputError);
  }

  TEST_CASE("grid and field basics") {
    CHECK_THROWS_AS(Grid1D::make(0.0, 1.0, 2), InputError);
    CHECK_THROWS_AS(Grid1D::make(1.0, 0.0, 10), InputError);
    Grid1D g = Grid1D::make(-1.0, 1.0, 5);
    CHECK(g.x(4) == 1.0);
    CHECK(g.nearest(0.26) == 3);
    CHECK(g.nearest(-7.0) == 0);
    ValueField f = ValueField::sample(g, [](double x) { return x; }, -1.0, 1.0);
    CHECK(f.at(0.25) == doctest::Approx(0.25));
    CHECK(f.at(2.0) == doctest::Approx(2.0));
    CHECK(f.at(-3.0) == doctest::Approx(-3.0));
    CHECK(f.at_index(-2) == doctest::Approx(-2.0));
    CHECK(f.lipschitz_quotient() == doctest::Approx(1.0));
  }

  TEST_CASE("jump treatments") {
    CHECK(JumpTreatment::full().keeps(1e-12));
    CHECK_FALSE(JumpTreatment::strict(0.1).keeps(0.1));
    CHECK(JumpTreatment::strict(0.1).keeps(0.11));
    CHECK_FALSE(JumpTreatment::diffusion(0.1).keeps(0.05));
    CHECK(JumpTreatment::diffusion(0.1).keeps(0.1));
    ProblemSpec spec = reference_problem();
    LevyQuadrature q = reference_quad();
    Grid1D g = Grid1D::make(-1.0, 1.0, 21);
    LocalCoefficients c = local_coefficients(spec, g, q, JumpTreatment::diffusion(0.1));
    // half of s^2(0.1) = 2 sqrt(0.1)
    CHECK(c.correction[5] == doctest::Approx(2.0 * std::sqrt(0.1)).epsilon(1e-5));
  }
}
