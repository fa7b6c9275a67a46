#include <doctest.h>

#include <string>

#include "impulse_qvi/config.hpp"
#include "impulse_qvi/error.hpp"

using namespace impulse_qvi;

namespace {

std::string minimal(const std::string& extra) {
  return "model: {dimension: 1, discount: 1.0}\n"
         "levy: {kind: power_law, c: 1.0, gamma: 1.5, z_max: 1.0}\n" +
         extra;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("shipped reference config matches the built-in one") {
    RunConfig a = load_config(std::string(IMPULSE_QVI_CONFIG_DIR) + "/reference.yaml");
    RunConfig b = reference_config();
    CHECK(a.grid.n == 801);
    CHECK(a.grid.n == b.grid.n);
    CHECK(a.discount == 1.0);
    CHECK(a.levy.order == doctest::Approx(1.5));
    CHECK(a.verify.coupling.delta_sim == doctest::Approx(0.06));
    CHECK(a.verify.coupling.mode == CompensationMode::diffusion_surrogate);
    CHECK(a.verify.holder_windows.size() == 3);
    CHECK(a.verify.mc_points.size() == 5);
    ProblemSpec s = a.problem();
    CHECK(s.transaction_cost(2.0) == doctest::Approx(1.2));
    CHECK(s.running_cost(0.0) == doctest::Approx(0.0));
    CHECK(a.hash().size() == 16);
    CHECK(a.hash() == load_config(std::string(IMPULSE_QVI_CONFIG_DIR) + "/reference.yaml").hash());
  }

  TEST_CASE("defaults fill missing sections") {
    RunConfig c = parse_config(minimal(""));
    CHECK(c.solve.solver == ObstacleSolver::policy_iteration);
    CHECK(c.verify.eps_list.size() == 3);
  }

  TEST_CASE("rejected inputs") {
    CHECK_THROWS_WITH_AS(parse_config("model: {dimension: 2}\n"), "only dimension 1 is supported",
                         InputError);
    CHECK_THROWS_AS(parse_config(minimal("grid: {lower: -1, upper: 1, n: 11, spacing: 2}\n")),
                    InputError);
    CHECK_THROWS_AS(parse_config(minimal("grid: {lower: -1, upper: 1, n: many}\n")), InputError);
    CHECK_THROWS_AS(parse_config(minimal("solve: {solver: newton}\n")), InputError);
    CHECK_THROWS_AS(parse_config(minimal("verify: {slack: 0.2}\n")), InputError);
    CHECK_THROWS_AS(parse_config(minimal("extras: {}\n")), InputError);
    CHECK_THROWS_AS(parse_config("levy: {kind: power_law, gamma: 2.5}\n"), InputError);
    CHECK_THROWS_AS(parse_config("model: [1, 2\n"), InputError);
    CHECK_THROWS_WITH_AS(load_config("/nonexistent/x.yaml"), "cannot read config '/nonexistent/x.yaml'",
                         InputError);
  }
}
