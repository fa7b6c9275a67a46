#include <doctest.h>

#include <cmath>

#include "impulse_qvi/error.hpp"
#include "impulse_qvi/levy.hpp"
#include "impulse_qvi/model.hpp"

using namespace impulse_qvi;

namespace {

struct Reference {
  ProblemSpec spec = reference_problem();
  AssumptionProfile profile = default_profile(spec);
  LevyQuadrature quad;
  SamplingPlan plan;

  Reference() {
    QuadratureOptions o;
    o.profile_gamma = profile.gamma;
    quad = build_quadrature(spec.levy, 1.0, 64, o);
    plan.lower = -10.0;
    plan.upper = 10.0;
    plan.points = 48;
  }
};

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("reference beta is -1 and C_u is 2/3") {
    Reference r;
    ModelConstants c = estimate_beta(r.spec, r.profile, r.quad, r.plan);
    CHECK(std::abs(c.beta + 1.0) < 1e-12);
    CHECK(c.beta_volatility == doctest::Approx(0.0));
    CHECK(c.beta_jump == doctest::Approx(0.0));
    CHECK(c.beta <= c.beta_cap);
    auto cu = c.value_lipschitz(r.profile.lipschitz_cost, r.spec.discount);
    REQUIRE(cu.has_value());
    CHECK(*cu == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  }

  TEST_CASE("kappa dominates beta") {
    Reference r;
    ModelConstants c = estimate_beta(r.spec, r.profile, r.quad, r.plan);
    c = estimate_kappa(r.spec, r.quad, r.plan, c);
    CHECK(c.kappa >= c.beta - 1e-12);
    CHECK(c.triples > 0);
  }

  TEST_CASE("assumptions hold on the reference instance") {
    Reference r;
    AssumptionReport rep = check_assumptions(r.spec, r.profile, r.quad, r.plan);
    for (const HypothesisResult& h : rep.results) {
      INFO(h.id << " " << h.note);
      CHECK(h.pass);
    }
    CHECK(rep.all_pass());
    CHECK(rep.at("H5").measured == doctest::Approx(20.0).epsilon(1e-6));
  }

  TEST_CASE("a constant impulse cost violates the growth requirement") {
    CoefficientChoices c = reference_problem().choices;
    c.transaction_cost = {"constant", {{"K", 1.0}}};
    ProblemSpec spec = make_problem(c, LevyMeasure1D::power_law(1.0, 1.5), 1.0);
    Reference r;
    AssumptionReport rep = check_assumptions(spec, default_profile(spec), r.quad, r.plan);
    CHECK_FALSE(rep.at("H9").pass);
  }

  TEST_CASE("an understated Lipschitz constant is caught") {
    Reference r;
    AssumptionProfile p = r.profile;
    p.lipschitz_drift = 0.25;
    AssumptionReport rep = check_assumptions(r.spec, p, r.quad, r.plan);
    CHECK_FALSE(rep.at("H1").pass);
  }

  TEST_CASE("registry rejects unknown names and parameters") {
    CoefficientChoices c;
    c.drift = {"cubic", {}};
    CHECK_THROWS_AS(make_problem(c, LevyMeasure1D::zero(), 1.0), InputError);
    c = CoefficientChoices{};
    c.volatility = {"constant", {{"sigma", 0.4}, {"speed", 1.0}}};
    CHECK_THROWS_AS(make_problem(c, LevyMeasure1D::zero(), 1.0), InputError);
    c = CoefficientChoices{};
    c.jump = {"modulated", {{"a", 1.5}}};
    CHECK_THROWS_AS(make_problem(c, LevyMeasure1D::zero(), 1.0), InputError);
    c = CoefficientChoices{};
    c.transaction_cost = {"constant", {{"K", 0.0}}};
    CHECK_THROWS_AS(make_problem(c, LevyMeasure1D::zero(), 1.0), InputError);
  }

  TEST_CASE("reference coefficients") {
    ProblemSpec s = reference_problem();
    CHECK(s.drift(2.0) == doctest::Approx(-1.0));
    CHECK(s.volatility(5.0) == doctest::Approx(0.4));
    CHECK(s.diffusion(0.0) == doctest::Approx(0.08));
    CHECK(s.running_cost(0.0) == doctest::Approx(0.0));
    CHECK(s.transaction_cost(-3.0) == doctest::Approx(1.3));
    CHECK(s.jump(1.7, 0.3) == doctest::Approx(0.3));
  }

  TEST_CASE("modulated jumps keep an integrable envelope") {
    CoefficientChoices c = reference_problem().choices;
    c.jump = {"modulated", {{"a", 0.3}}};
    ProblemSpec spec = make_problem(c, LevyMeasure1D::power_law(1.0, 1.5), 1.0);
    AssumptionProfile p = default_profile(spec);
    QuadratureOptions o;
    o.profile_gamma = p.gamma;
    o.bound_scale = spec.jump.bound_scale;
    LevyQuadrature q = build_quadrature(spec.levy, 1.0, 64, o);
    SamplingPlan plan;
    plan.lower = -4.0;
    plan.upper = 4.0;
    plan.points = 32;
    AssumptionReport rep = check_assumptions(spec, p, q, plan);
    for (const HypothesisResult& h : rep.results) {
      INFO(h.id << " " << h.note);
      CHECK(h.pass);
    }
    ModelConstants mc = estimate_beta(spec, p, q, plan);
    CHECK(mc.beta > -1.0);
    CHECK(mc.beta <= mc.beta_cap);
  }

  TEST_CASE("discount thresholds") {
    ModelConstants c;
    c.beta = -1.0;
    c.kappa = 0.5;
    c.alpha = 0.8;
    DiscountReport d = check_discount_rate(c, 1.0);
    CHECK(d.lipschitz_pass);
    CHECK(d.uniform_pass);
    CHECK(d.semiconcave_pass);
    c.beta = 3.0;
    c.alpha = 3.5;
    DiscountReport e = check_discount_rate(c, 1.0);
    CHECK_FALSE(e.lipschitz_pass);
    CHECK_FALSE(c.value_lipschitz(1.0, 1.0).has_value());
  }

  TEST_CASE("only the scalar case is built") {
    ProblemSpec s = reference_problem();
    CHECK(s.dimension == 1);
  }
}
