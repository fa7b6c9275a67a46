#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "impulse_qvi/error.hpp"
#include "impulse_qvi/model.hpp"

namespace impulse_qvi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void unknown(const std::string& what, const std::string& name) {
  throw InputError("unknown " + what + " '" + name + "'");
}

void require_known_params(const CoefficientChoice& c, std::initializer_list<const char*> keys) {
  for (const auto& [k, v] : c.params) {
    bool ok = std::any_of(keys.begin(), keys.end(), [&](const char* s) { return k == s; });
    if (!ok) throw InputError("parameter '" + k + "' is not recognized by '" + c.name + "'");
    if (!std::isfinite(v)) throw InputError("parameter '" + k + "' must be finite");
  }
}

ScalarFunction make_drift(const CoefficientChoice& c) {
  if (c.name == "zero") {
    require_known_params(c, {});
    return [](double) { return 0.0; };
  }
  if (c.name == "constant") {
    require_known_params(c, {"value"});
    double v = c.param("value", 0.0);
    return [v](double) { return v; };
  }
  if (c.name == "linear") {
    require_known_params(c, {"theta", "mean"});
    double theta = c.param("theta", 0.5);
    double mean = c.param("mean", 0.0);
    return [theta, mean](double x) { return -theta * (x - mean); };
  }
  unknown("drift", c.name);
}

ScalarFunction make_volatility(const CoefficientChoice& c) {
  if (c.name == "zero") {
    require_known_params(c, {});
    return [](double) { return 0.0; };
  }
  if (c.name == "constant") {
    require_known_params(c, {"sigma"});
    double s = c.param("sigma", 0.0);
    return [s](double) { return s; };
  }
  if (c.name == "tanh") {
    require_known_params(c, {"sigma", "amplitude", "scale"});
    double s = c.param("sigma", 0.4);
    double amp = c.param("amplitude", 0.1);
    double scale = c.param("scale", 1.0);
    if (!(scale > 0.0)) throw InputError("tanh volatility needs scale > 0");
    return [s, amp, scale](double x) { return s + amp * std::tanh(x / scale); };
  }
  unknown("volatility", c.name);
}

JumpFunction make_jump(const CoefficientChoice& c) {
  JumpFunction j;
  if (c.name == "additive") {
    require_known_params(c, {});
    j.amplitude = [](double, double z) { return z; };
    j.x_derivative = [](double, double) { return 0.0; };
    j.lipschitz_envelope = [](double) { return 0.0; };
    j.bound_scale = 1.0;
    j.state_independent = true;
    j.odd_in_mark = true;
    return j;
  }
  if (c.name == "modulated") {
    // j(x, z) = z (1 + a min(|z|^p, 1) sin x)
    require_known_params(c, {"a", "p"});
    double a = c.param("a", 0.1);
    double p = c.param("p", 0.6);
    if (!(std::abs(a) < 1.0)) throw InputError("modulated jump needs |a| < 1");
    if (!(p >= 0.0)) throw InputError("modulated jump needs p >= 0");
    auto g = [p](double z) { return std::min(std::pow(std::abs(z), p), 1.0); };
    j.amplitude = [a, g](double x, double z) { return z * (1.0 + a * g(z) * std::sin(x)); };
    j.x_derivative = [a, g](double x, double z) { return z * a * g(z) * std::cos(x); };
    j.lipschitz_envelope = [a, g](double z) { return std::abs(a) * std::abs(z) * g(z); };
    j.bound_scale = 1.0 + std::abs(a);
    j.state_independent = (a == 0.0);
    j.odd_in_mark = true;
    return j;
  }
  unknown("jump", c.name);
}

ScalarFunction make_running_cost(const CoefficientChoice& c) {
  if (c.name == "zero") {
    require_known_params(c, {});
    return [](double) { return 0.0; };
  }
  if (c.name == "constant") {
    require_known_params(c, {"value"});
    double v = c.param("value", 1.0);
    if (v < 0.0) throw InputError("running cost must be nonnegative");
    return [v](double) { return v; };
  }
  if (c.name == "smooth_abs") {
    require_known_params(c, {"eps", "offset"});
    double eps = c.param("eps", 0.1);
    double offset = c.param("offset", eps);
    if (!(eps > 0.0)) throw InputError("smooth_abs needs eps > 0");
    if (offset > eps) throw InputError("smooth_abs needs offset <= eps so that f >= 0");
    double e2 = eps * eps;
    return [e2, offset](double x) { return std::sqrt(e2 + x * x) - offset; };
  }
  if (c.name == "quadratic") {
    require_known_params(c, {"scale"});
    double s = c.param("scale", 1.0);
    if (s < 0.0) throw InputError("running cost must be nonnegative");
    return [s](double x) { return s * x * x; };
  }
  if (c.name == "abs") {
    require_known_params(c, {"scale"});
    double s = c.param("scale", 1.0);
    if (s < 0.0) throw InputError("running cost must be nonnegative");
    return [s](double x) { return s * std::abs(x); };
  }
  unknown("running cost", c.name);
}

ScalarFunction make_transaction_cost(const CoefficientChoice& c) {
  if (c.name == "constant") {
    require_known_params(c, {"K"});
    double k = c.param("K", 1.0);
    if (!(k > 0.0)) throw InputError("impulse cost needs K > 0");
    return [k](double) { return k; };
  }
  if (c.name == "affine") {
    require_known_params(c, {"K", "k"});
    double fixed = c.param("K", 1.0);
    double prop = c.param("k", 0.1);
    if (!(fixed > 0.0) || !(prop >= 0.0)) throw InputError("impulse cost needs K > 0 and k >= 0");
    return [fixed, prop](double xi) { return fixed + prop * std::abs(xi); };
  }
  unknown("transaction cost", c.name);
}

}  // namespace

double CoefficientChoice::param(const std::string& key, double fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

std::string CoefficientChoice::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << name << "{";
  bool first = true;
  for (const auto& [k, v] : params) {
    os << (first ? "" : ",") << k << "=" << v;
    first = false;
  }
  os << "}";
  return os.str();
}

double ProblemSpec::diffusion(double x) const {
  double s = volatility(x);
  return 0.5 * s * s;
}

std::string ProblemSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "n=" << dimension << ";drift=" << choices.drift.describe()
     << ";volatility=" << choices.volatility.describe() << ";jump=" << choices.jump.describe()
     << ";levy=" << levy.describe() << ";running=" << choices.running_cost.describe()
     << ";transaction=" << choices.transaction_cost.describe() << ";r=" << discount;
  return os.str();
}

ProblemSpec make_problem(const CoefficientChoices& choices, const LevyMeasure1D& levy,
                         double discount) {
  if (!(discount > 0.0) || !std::isfinite(discount)) {
    throw InputError("discount rate must be positive and finite");
  }
  ProblemSpec spec;
  spec.choices = choices;
  spec.drift = make_drift(choices.drift);
  spec.volatility = make_volatility(choices.volatility);
  spec.jump = make_jump(choices.jump);
  spec.levy = levy;
  spec.running_cost = make_running_cost(choices.running_cost);
  spec.transaction_cost = make_transaction_cost(choices.transaction_cost);
  spec.discount = discount;
  return spec;
}

ProblemSpec reference_problem() {
  CoefficientChoices c;
  c.drift = {"linear", {{"theta", 0.5}}};
  c.volatility = {"constant", {{"sigma", 0.4}}};
  c.jump = {"additive", {}};
  c.running_cost = {"smooth_abs", {{"eps", 0.1}, {"offset", 0.1}}};
  c.transaction_cost = {"affine", {{"K", 1.0}, {"k", 0.1}}};
  return make_problem(c, LevyMeasure1D::power_law(1.0, 1.5, 1.0), 1.0);
}

AssumptionProfile default_profile(const ProblemSpec& spec) {
  AssumptionProfile p;
  const auto& c = spec.choices;

  if (c.drift.name == "linear") p.lipschitz_drift = std::abs(c.drift.param("theta", 0.5));

  if (c.volatility.name == "tanh") {
    p.lipschitz_volatility =
        std::abs(c.volatility.param("amplitude", 0.1)) / c.volatility.param("scale", 1.0);
  }

  const std::string& f = c.running_cost.name;
  if (f == "smooth_abs") {
    p.lipschitz_cost = 1.0;
  } else if (f == "abs") {
    p.lipschitz_cost = c.running_cost.param("scale", 1.0);
  } else if (f == "quadratic") {
    // Lipschitz on the unit ball only; H3 is expected to fail on wider boxes.
    p.lipschitz_cost = 2.0 * c.running_cost.param("scale", 1.0);
  }

  double curvature = 0.0;
  if (f == "smooth_abs") {
    curvature = 0.5 / c.running_cost.param("eps", 0.1);
  } else if (f == "quadratic") {
    curvature = c.running_cost.param("scale", 1.0);
  } else if (f == "abs") {
    curvature = kInf;
  }
  for (double radius : {1.0, 10.0, 100.0}) p.semiconcavity.push_back({radius, curvature});

  const LevyMeasure1D& nu = spec.levy;
  const double k = spec.jump.bound_scale;
  p.gamma = nu.kind == LevyKind::power_law ? std::min(2.0, std::max(1.0, nu.order + 0.1)) : 2.0;
  double big = nu.bound_moment(2.0, 1.0, kInf, k);
  double small = nu.bound_moment(p.gamma, 0.0, 1.0, k);
  p.integrability = std::max(big, small) * (1.0 + 1e-9);

  if (c.jump.name == "modulated") {
    double a = std::abs(c.jump.param("a", 0.1));
    double pw = c.jump.param("p", 0.6);
    double zmax = nu.kind == LevyKind::power_law ? nu.z_max : 0.0;
    for (const Atom& at : nu.atoms) zmax = std::max(zmax, std::abs(at.mark));
    double m = zmax * std::min(std::pow(zmax, pw), 1.0);
    p.nondegeneracy = a * m < 1.0 ? 1.0 - a * m : 0.0;
    p.jacobian_upper = 1.0 + a * m;
    p.jacobian_lower = a * m < 1.0 ? 1.0 / (1.0 - a * m) : kInf;
    p.jump_regularity = a * std::pow(1.0 + a, std::max(0.0, 1.0 - p.gamma)) *
                        std::pow(std::max(1.0, zmax), 2.0 + pw) * (1.0 + 1e-9);
  }

  if (c.volatility.name == "constant") {
    p.ellipticity = spec.diffusion(0.0);
  } else if (c.volatility.name == "tanh") {
    double lo = std::abs(c.volatility.param("sigma", 0.4)) -
                std::abs(c.volatility.param("amplitude", 0.1));
    p.ellipticity = lo > 0.0 ? 0.5 * lo * lo : 0.0;
  }

  p.transaction_floor = spec.transaction_cost(0.0);
  return p;
}

}  // namespace impulse_qvi
