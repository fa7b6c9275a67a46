#include "impulse_qvi/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "impulse_qvi/error.hpp"
#include "impulse_qvi/parallel.hpp"

namespace impulse_qvi {

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kInf = std::numeric_limits<double>::infinity();

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string hash_of(const std::string& name, const std::vector<double>& values,
                    const std::string& extra = {}) {
  std::ostringstream os;
  os.precision(17);
  os << name << '|' << extra;
  for (double v : values) os << '|' << v;
  return fnv1a_hex(os.str());
}

std::string field_signature(const ValueField& f) {
  std::ostringstream os;
  os.precision(17);
  os << f.grid.lower << ',' << f.grid.upper << ',' << f.grid.n << ',' << f.slope_left << ','
     << f.slope_right;
  for (Eigen::Index i = 0; i < f.values.size(); ++i) os << ',' << f.values[i];
  return os.str();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::vector<std::size_t> window_nodes(const Grid1D& grid, LpWindow w) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < grid.n; ++i) {
    double x = grid.x(i);
    if (x >= w.lower - 1e-12 && x <= w.upper + 1e-12) out.push_back(i);
  }
  return out;
}

double lp_norm(const std::vector<double>& v, double p, double h) {
  if (v.empty()) return 0.0;
  if (p <= 0.0) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  double s = 0.0;
  for (double x : v) s += std::pow(std::abs(x), p);
  return std::pow(s * h, 1.0 / p);
}

double largest_jump(const LevyQuadrature& quad) {
  double m = 0.0;
  for (std::size_t q = 0; q < quad.size(); ++q) m = std::max(m, quad.bound(q));
  return m;
}

ValueField sample_field(const Grid1D& grid, const ScalarFunction& phi) {
  ValueField f = ValueField::sample(grid, phi);
  f.slope_left = f.observed_slope_left();
  f.slope_right = f.observed_slope_right();
  return f;
}

}  // namespace

double margin_of(double bound, double measured) {
  if (measured == 0.0) return bound >= 0.0 ? kInf : -kInf;
  return bound / measured;
}

VerificationReport verify_lipschitz_u(const ValueField& u, double value_lipschitz, double factor) {
  auto t0 = Clock::now();
  VerificationReport rep;
  rep.name = "lipschitz_u";
  rep.inputs_hash = hash_of(rep.name, {value_lipschitz, factor}, field_signature(u));
  rep.measured = u.lipschitz_quotient();
  rep.bound = factor * value_lipschitz;
  rep.margin = margin_of(rep.bound, rep.measured);
  rep.pass = std::isfinite(rep.measured) && rep.measured <= rep.bound;
  rep.metrics["C_u"] = value_lipschitz;
  rep.detail = "max |u_{i+1} - u_i| / h = " + fmt(rep.measured) + " against " + fmt(factor) +
               " C_u = " + fmt(rep.bound);
  rep.runtime_seconds = seconds_since(t0);
  return rep;
}

UniformConvergence verify_uniform_convergence(const ProblemSpec& spec, const Grid1D& grid,
                                              const LevyQuadrature& quad,
                                              const std::vector<double>& eps_list,
                                              const std::vector<FittedRate>& rates, double beta,
                                              double lipschitz_f, const SolveConfig& config) {
  auto t0 = Clock::now();
  if (eps_list.size() < 3) throw InputError("uniform convergence needs at least three eps values");
  for (std::size_t k = 1; k < eps_list.size(); ++k) {
    if (!(eps_list[k] < eps_list[k - 1])) throw InputError("eps list must be strictly decreasing");
  }
  const double r = spec.discount;
  std::vector<FittedRate> usable;
  for (const FittedRate& fr : rates) {
    if (fr.alpha > beta && fr.alpha < 2.0 * r && std::isfinite(fr.m) && fr.m >= 0.0) {
      usable.push_back(fr);
    }
  }
  if (usable.empty()) throw InputError("no fitted rate with beta < alpha < 2r");

  UniformConvergence out;
  VerificationReport& rep = out.report;
  rep.name = "uniform_convergence";
  std::vector<double> hashed = eps_list;
  for (const FittedRate& fr : usable) {
    hashed.push_back(fr.alpha);
    hashed.push_back(fr.m);
  }
  hashed.push_back(beta);
  hashed.push_back(lipschitz_f);
  rep.inputs_hash = hash_of(rep.name, hashed, spec.describe());

  std::vector<double> xs = grid.nodes();
  std::vector<std::optional<QviSolution>> solved(eps_list.size());
  parallel_for(eps_list.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      SolveConfig cfg = config;
      cfg.eps = eps_list[k];
      solved[k] = solve_qvi(spec, grid, quad, cfg);
    }
  });
  for (auto& s : solved) out.solutions.push_back(std::move(*s));
  for (double eps : eps_list) {
    SweepRow row;
    row.eps = eps;
    TruncationReport tr = lambda_norms(spec.jump, eps, quad, xs);
    row.lambda = tr.lambda;
    row.bound = kInf;
    for (const FittedRate& fr : usable) {
      double c = error_bound(tr, lipschitz_f, fr.m, r, fr.alpha);
      if (c < row.bound) {
        row.bound = c;
        row.best_alpha = fr.alpha;
      }
    }
    out.rows.push_back(row);
  }

  bool pass = true;
  double worst_ratio = -1.0;
  std::ostringstream detail;
  const std::size_t n = eps_list.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      double d =
          (out.solutions[a].u.values - out.solutions[b].u.values).lpNorm<Eigen::Infinity>();
      double c = out.rows[a].bound + out.rows[b].bound;
      if (b == a + 1) out.rows[a].diff_next = d;
      double ratio = c > 0.0 ? d / c : (d > 0.0 ? kInf : 0.0);
      if (ratio > worst_ratio) {
        worst_ratio = ratio;
        rep.measured = d;
        rep.bound = c;
      }
      if (!(d <= c)) {
        pass = false;
        detail << "pair (" << fmt(eps_list[a]) << ", " << fmt(eps_list[b]) << ") difference "
               << fmt(d) << " exceeds " << fmt(c) << "; ";
      }
    }
  }
  for (std::size_t a = 1; a + 1 < n; ++a) {
    if (!(out.rows[a].diff_next < out.rows[a - 1].diff_next)) {
      pass = false;
      detail << "differences not strictly decreasing at eps " << fmt(eps_list[a]) << "; ";
    }
  }
  rep.pass = pass;
  rep.margin = margin_of(rep.bound, rep.measured);
  for (std::size_t a = 0; a < n; ++a) {
    rep.metrics["C_eps_" + fmt(eps_list[a])] = out.rows[a].bound;
    rep.metrics["lambda_eps_" + fmt(eps_list[a])] = out.rows[a].lambda;
  }
  if (pass) detail << n * (n - 1) / 2 << " pairs within C(eps) + C(eps'), differences decreasing";
  rep.detail = detail.str();
  rep.runtime_seconds = seconds_since(t0);
  return out;
}

VerificationReport verify_semiconcavity(const ValueField& field, double radius,
                                        SemiConcavityFit* fit, const ValueField* u_for_transfer,
                                        const ImpulsePolicy* policy, double tolerance) {
  auto t0 = Clock::now();
  VerificationReport rep;
  rep.name = "semiconcavity";
  rep.inputs_hash = hash_of(rep.name, {radius, tolerance}, field_signature(field));

  const Grid1D& grid = field.grid;
  const double h = grid.h();
  const double scale = std::max(1.0, field.values.lpNorm<Eigen::Infinity>());
  const long ks[3] = {1, 2, 4};
  SemiConcavityFit local;
  SemiConcavityFit& out = fit ? *fit : local;
  out = {};

  bool any_node = false;
  bool all_flat = true;
  for (long k : ks) {
    double z = static_cast<double>(k) * h;
    double best = -kInf;
    double best_raw = -kInf;
    for (std::size_t i = 4; i + 4 < grid.n; ++i) {
      if (!(std::abs(grid.x(i)) < radius)) continue;
      any_node = true;
      auto ii = static_cast<long>(i);
      double d2 = field.at_index(ii + k) - 2.0 * field.values[ii] + field.at_index(ii - k);
      best_raw = std::max(best_raw, d2);
      best = std::max(best, d2 / (z * z));
    }
    if (best_raw > tolerance * scale) all_flat = false;
    out.z.push_back(z);
    out.constant.push_back(best);
  }
  if (!any_node) throw InputError("no interior node inside the semi-concavity radius");

  double cmax = *std::max_element(out.constant.begin(), out.constant.end());
  double cmin = *std::min_element(out.constant.begin(), out.constant.end());
  bool stable = all_flat || (cmin > 0.0 && cmax <= 2.0 * cmin);
  rep.measured = all_flat ? std::max(cmax, 0.0) : cmax;
  rep.bound = all_flat ? 0.0 : 2.0 * cmin;
  for (std::size_t k = 0; k < out.z.size(); ++k) rep.metrics["C_r_z" + std::to_string(ks[k])] = out.constant[k];

  std::ostringstream detail;
  if (stable) {
    detail << (all_flat ? "second differences nonpositive" : "C_r = " + fmt(cmax) + " stable under z -> 2z, 4z");
  } else {
    detail << "not semi-concave at resolution (fits " << fmt(out.constant[0]) << ", "
           << fmt(out.constant[1]) << ", " << fmt(out.constant[2]) << ")";
  }

  bool transfer_ok = true;
  if (u_for_transfer && policy) {
    const ValueField& u = *u_for_transfer;
    const double tscale = std::max(1.0, u.values.lpNorm<Eigen::Infinity>());
    double worst = -kInf;
    for (std::size_t i = 0; i < grid.n; ++i) {
      if (policy->continuation[i] || policy->xi_star[i] == 0.0) continue;
      auto ii = static_cast<long>(i);
      long t = ii + std::lround(policy->xi_star[i] / h);
      for (long k : ks) {
        if (ii - k < 0 || ii + k >= static_cast<long>(grid.n)) continue;
        double lhs = field.at_index(ii + k) - 2.0 * field.values[ii] + field.at_index(ii - k);
        double rhs = u.at_index(t + k) - 2.0 * u.at_index(t) + u.at_index(t - k);
        worst = std::max(worst, lhs - rhs);
        ++out.transfer_checked;
      }
    }
    out.worst_transfer = out.transfer_checked ? worst : 0.0;
    transfer_ok = out.worst_transfer <= tolerance * tscale;
    rep.metrics["transfer_checked"] = static_cast<double>(out.transfer_checked);
    rep.metrics["transfer_worst"] = out.worst_transfer;
    detail << "; transfer inequality at " << out.transfer_checked << " action stencils, worst "
           << fmt(out.worst_transfer);
  }

  rep.pass = stable && transfer_ok;
  rep.margin = margin_of(rep.bound, rep.measured);
  rep.detail = detail.str();
  rep.runtime_seconds = seconds_since(t0);
  return rep;
}

std::vector<TestFunction> standard_test_functions() {
  return {
      {"half_square", [](double x) { return 0.5 * x * x; }, [](double) { return 1.0; }},
      {"sine", [](double x) { return std::sin(x); }, [](double x) { return -std::sin(x); }},
      {"gaussian", [](double x) { return std::exp(-x * x); },
       [](double x) { return (4.0 * x * x - 2.0) * std::exp(-x * x); }},
      {"log_cosh", [](double x) { return std::log(std::cosh(x)); },
       [](double x) {
         double c = std::cosh(x);
         return 1.0 / (c * c);
       }},
      {"cubic", [](double x) { return x * x * x / 6.0; }, [](double x) { return x; }},
  };
}

TestFunction test_function(const std::string& name) {
  if (name == "x_abs_x") {
    return {name, [](double x) { return x * std::abs(x); },
            [](double x) { return x > 0.0 ? 2.0 : (x < 0.0 ? -2.0 : 0.0); }};
  }
  for (TestFunction& t : standard_test_functions()) {
    if (t.name == name) return t;
  }
  throw InputError("unknown test function '" + name + "'");
}

VerificationReport verify_eps_lp_estimate(const ProblemSpec& spec, const LevyQuadrature& quad,
                                          const Grid1D& grid,
                                          const std::vector<TestFunction>& tests,
                                          LpWindow window, const std::vector<double>& etas,
                                          const std::vector<double>& ps, double integrability,
                                          double gamma, double slack) {
  auto t0 = Clock::now();
  if (tests.empty() || etas.empty() || ps.empty()) throw InputError("empty test set");
  if (std::abs(gamma - quad.profile_gamma) > 1e-12) {
    throw InputError("gamma differs from the quadrature profile");
  }
  const double reach = largest_jump(quad);
  const double h = grid.h();
  if (window.lower - reach < grid.lower - 1e-12 || window.upper + reach > grid.upper + 1e-12) {
    throw InputError("window too close to grid edge");
  }
  const std::vector<std::size_t> inner = window_nodes(grid, window);
  const std::vector<std::size_t> outer =
      window_nodes(grid, {window.lower - reach, window.upper + reach});
  if (inner.empty()) throw InputError("window holds no grid node");

  VerificationReport rep;
  rep.name = "eps_lp_estimate";
  std::vector<double> hashed = {window.lower, window.upper, integrability, gamma, slack};
  hashed.insert(hashed.end(), etas.begin(), etas.end());
  hashed.insert(hashed.end(), ps.begin(), ps.end());
  std::string names = spec.describe();
  for (const TestFunction& t : tests) names += "|" + t.name;
  rep.inputs_hash = hash_of(rep.name, hashed, names);

  double worst = 0.0;
  double worst_sum_rule = 0.0;
  double tight = kInf;
  std::size_t checks = 0;
  std::ostringstream fails;
  for (const TestFunction& t : tests) {
    ValueField field = sample_field(grid, t.phi);
    double c_phi = 0.0;
    for (std::size_t k = 1; k < outer.size(); ++k) {
      c_phi = std::max(c_phi, std::abs(field.values[outer[k]] - field.values[outer[k - 1]]) / h);
    }
    for (double eta : etas) {
      if (!(eta > 0.0 && eta <= 1.0)) throw InputError("eta must lie in (0, 1]");
      std::vector<double> i1(inner.size()), i2(inner.size()), i3(inner.size());
      std::vector<double> rule(inner.size());
      parallel_for(inner.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
          IDecomposition d = decompose_I(field, quad, spec, inner[k], eta);
          i1[k] = d.big;
          i2[k] = d.shell;
          i3[k] = d.small;
          double full = apply_I(field, quad, spec, inner[k]);
          rule[k] = std::abs(d.sum() - full) / (1.0 + std::abs(full));
        }
      });
      for (double v : rule) worst_sum_rule = std::max(worst_sum_rule, v);

      std::vector<double> second;
      for (std::size_t idx : window_nodes(grid, {window.lower - eta, window.upper + eta})) {
        second.push_back(t.second(grid.x(idx)));
      }
      const double pref = std::pow(eta, 2.0 - gamma) * quad.module_of_integrability(eta);
      for (double p : ps) {
        double meas = lp_norm(i3, p, h);
        double bnd = pref * lp_norm(second, p, h);
        ++checks;
        double ratio = bnd > 0.0 ? meas / bnd : (meas > 0.0 ? kInf : 0.0);
        if (ratio > worst) {
          worst = ratio;
          rep.measured = meas;
          rep.bound = bnd;
        }
        if (meas > 0.0) tight = std::min(tight, bnd / meas);
        if (!(meas <= bnd * (1.0 + slack))) {
          fails << t.name << " eta=" << fmt(eta) << " p=" << (p <= 0.0 ? std::string("inf") : fmt(p))
                << " I3 " << fmt(meas) << " > " << fmt(bnd) << "; ";
        }
      }
      double s1 = lp_norm(i1, 0.0, h);
      double b1 = c_phi * integrability;
      double s2 = lp_norm(i2, 0.0, h);
      double b2 = 2.0 * c_phi * integrability * std::pow(eta, 1.0 - gamma);
      checks += 2;
      if (!(s1 <= b1 * (1.0 + slack))) {
        fails << t.name << " eta=" << fmt(eta) << " I1 " << fmt(s1) << " > " << fmt(b1) << "; ";
      }
      if (!(s2 <= b2 * (1.0 + slack))) {
        fails << t.name << " eta=" << fmt(eta) << " I2 " << fmt(s2) << " > " << fmt(b2) << "; ";
      }
      if (b1 > 0.0) worst = std::max(worst, s1 / b1);
      if (b2 > 0.0) worst = std::max(worst, s2 / b2);
    }
  }
  const bool sum_ok = worst_sum_rule <= 1e-10;
  if (!sum_ok) fails << "sum rule off by " << fmt(worst_sum_rule) << "; ";
  rep.pass = fails.str().empty();
  rep.margin = worst > 0.0 ? 1.0 / worst : kInf;
  rep.metrics["worst_ratio"] = worst;
  rep.metrics["tightest_I3_factor"] = tight;
  rep.metrics["sum_rule"] = worst_sum_rule;
  rep.metrics["checks"] = static_cast<double>(checks);
  rep.detail = rep.pass ? std::to_string(checks) + " bounds hold; tightest I3 factor " + fmt(tight)
                        : fails.str();
  rep.runtime_seconds = seconds_since(t0);
  return rep;
}

VerificationReport verify_holder_I(const ProblemSpec& spec, const LevyQuadrature& quad,
                                   const Grid1D& grid, const TestFunction& test,
                                   double holder_alpha, double gamma,
                                   const std::vector<LpWindow>& windows) {
  auto t0 = Clock::now();
  if (windows.size() < 2) throw InputError("need at least two windows");
  VerificationReport rep;
  rep.name = "holder_I";
  std::vector<double> hashed = {holder_alpha, gamma};
  for (const LpWindow& w : windows) {
    hashed.push_back(w.lower);
    hashed.push_back(w.upper);
  }
  rep.inputs_hash = hash_of(rep.name, hashed, spec.describe() + "|" + test.name);

  const double exponent = 0.5 * (2.0 * holder_alpha - gamma);
  rep.metrics["exponent"] = exponent;
  if (!(exponent > 0.0)) {
    rep.pass = false;
    rep.detail = "exponent (2 alpha - gamma)/2 = " + fmt(exponent) + " is not positive";
    rep.runtime_seconds = seconds_since(t0);
    return rep;
  }
  const double reach = largest_jump(quad);
  for (const LpWindow& w : windows) {
    if (w.lower - reach < grid.lower - 1e-12 || w.upper + reach > grid.upper + 1e-12) {
      throw InputError("window too close to grid edge");
    }
  }
  const double h = grid.h();
  ValueField field = sample_field(grid, test.phi);

  std::vector<double> fitted;
  std::ostringstream detail;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    std::vector<std::size_t> nodes = window_nodes(grid, windows[w]);
    if (nodes.size() < 2) throw InputError("window holds fewer than two nodes");
    std::vector<double> iphi(nodes.size());
    parallel_for(nodes.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t k = b; k < e; ++k) iphi[k] = apply_I(field, quad, spec, nodes[k]);
    });
    double q = 0.0;
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      for (std::size_t b = a + 1; b < nodes.size(); ++b) {
        double dx = grid.x(nodes[b]) - grid.x(nodes[a]);
        q = std::max(q, std::abs(iphi[b] - iphi[a]) / std::pow(dx, exponent));
      }
    }
    // C^{1,alpha} norm of phi on the window enlarged by the largest jump.
    std::vector<std::size_t> big =
        window_nodes(grid, {windows[w].lower - reach, windows[w].upper + reach});
    std::vector<double> d1;
    double sup0 = 0.0;
    for (std::size_t k = 0; k < big.size(); ++k) {
      sup0 = std::max(sup0, std::abs(field.values[big[k]]));
      auto ii = static_cast<long>(big[k]);
      d1.push_back((field.at_index(ii + 1) - field.at_index(ii - 1)) / (2.0 * h));
    }
    double sup1 = 0.0;
    for (double v : d1) sup1 = std::max(sup1, std::abs(v));
    double semi = 0.0;
    for (std::size_t a = 0; a < d1.size(); ++a) {
      for (std::size_t b = a + 1; b < d1.size(); ++b) {
        double dx = grid.x(big[b]) - grid.x(big[a]);
        semi = std::max(semi, std::abs(d1[b] - d1[a]) / std::pow(dx, holder_alpha));
      }
    }
    double norm = sup1 + sup0 + sup1 + semi;  // C_phi + ||phi||_{C^{1,alpha}}
    double c = norm > 0.0 ? q / norm : 0.0;
    fitted.push_back(c);
    rep.metrics["C_window_" + std::to_string(w)] = c;
    rep.metrics["quotient_window_" + std::to_string(w)] = q;
    if (w == 0) {
      rep.measured = q;
    }
  }
  const double c0 = fitted.front();
  bool pass = true;
  double worst = 1.0;
  for (std::size_t w = 1; w < fitted.size(); ++w) {
    double c = fitted[w];
    if (c0 == 0.0 && c == 0.0) continue;
    double ratio = (c0 > 0.0 && c > 0.0) ? std::max(c / c0, c0 / c) : kInf;
    worst = std::max(worst, ratio);
    if (!(ratio <= 3.0)) pass = false;
  }
  rep.bound = 3.0;
  rep.measured = worst;
  rep.margin = margin_of(3.0, worst);
  rep.pass = pass;
  detail << "exponent " << fmt(exponent) << ", C fitted " << fmt(c0) << ", worst window ratio "
         << fmt(worst);
  if (c0 == 0.0) detail << " (I phi constant on the windows)";
  rep.detail = detail.str();
  rep.runtime_seconds = seconds_since(t0);
  return rep;
}

double mc_allowance(const ValueField& fine, const ValueField& coarse, double x,
                    double value_lipschitz, double sigma_sup, double dt) {
  if (!(dt > 0.0) || !(sigma_sup >= 0.0)) throw InputError("allowance needs dt > 0, sigma >= 0");
  return 2.0 * std::abs(fine.at(x) - coarse.at(x)) + value_lipschitz * sigma_sup * std::sqrt(dt);
}

VerificationReport verify_value_vs_montecarlo(const ProblemSpec& spec, const LevyQuadrature& quad,
                                              const ValueField& u, const ImpulsePolicy& policy,
                                              const SimConfig& config,
                                              const std::vector<double>& points,
                                              const std::vector<double>& allowances,
                                              std::vector<McPoint>* details) {
  auto t0 = Clock::now();
  if (points.empty() || points.size() != allowances.size()) {
    throw InputError("one allowance per evaluation point is required");
  }
  VerificationReport rep;
  rep.name = "value_vs_montecarlo";
  std::vector<double> hashed = points;
  hashed.insert(hashed.end(), allowances.begin(), allowances.end());
  hashed.insert(hashed.end(), {config.horizon, config.dt, static_cast<double>(config.paths),
                               static_cast<double>(config.seed), config.delta_sim});
  rep.inputs_hash = hash_of(rep.name, hashed, spec.describe() + "|" + field_signature(u));

  const std::vector<ImpulsePolicy> perturbed = {
      policy.with_region_shift(2), policy.with_region_shift(-2), policy.with_target_offset(1)};
  const char* labels[3] = {"grow", "shrink", "offset"};

  std::vector<McPoint> rows;
  std::ostringstream fails;
  double worst = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    McPoint row;
    row.x = points[k];
    row.u = u.at(points[k]);
    row.allowance = allowances[k];
    row.solver = evaluate_policy(spec, quad, config, &policy, row.x);
    const double gap = std::abs(row.solver.mean - row.u);
    const double bnd = row.allowance + 3.0 * row.solver.half_width;
    if (bnd > 0.0 && gap / bnd > worst) {
      worst = gap / bnd;
      rep.measured = gap;
      rep.bound = bnd;
    }
    if (row.solver.clt_half_width > 0.1 * std::abs(row.u)) {
      fails << "x=" << fmt(row.x) << " half-width " << fmt(row.solver.clt_half_width)
            << " above 10% of u; more paths needed; ";
    }
    if (!(row.solver.mean >= row.u - row.allowance)) {
      fails << "x=" << fmt(row.x) << " J = " << fmt(row.solver.mean) << " below u - allowance = "
            << fmt(row.u - row.allowance) << "; ";
    }
    if (!(gap <= bnd)) {
      fails << "x=" << fmt(row.x) << " |J - u| = " << fmt(gap) << " > " << fmt(bnd) << "; ";
    }
    for (std::size_t p = 0; p < perturbed.size(); ++p) {
      PolicyValue v = evaluate_policy(spec, quad, config, &perturbed[p], row.x);
      double hw = std::max(v.half_width, row.solver.half_width);
      if (!(v.mean >= row.solver.mean - 2.0 * hw)) {
        fails << "x=" << fmt(row.x) << " " << labels[p] << " policy beats the solver by "
              << fmt(row.solver.mean - v.mean) << "; ";
      }
      rep.metrics[std::string(labels[p]) + "_x" + fmt(row.x)] = v.mean - row.solver.mean;
      row.perturbed.push_back(v);
    }
    rep.metrics["J_x" + fmt(row.x)] = row.solver.mean;
    rep.metrics["u_x" + fmt(row.x)] = row.u;
    rep.metrics["hw_x" + fmt(row.x)] = row.solver.half_width;
    rows.push_back(std::move(row));
  }
  rep.pass = fails.str().empty();
  rep.margin = margin_of(rep.bound, rep.measured);
  rep.detail = rep.pass ? std::to_string(points.size()) +
                              " points within allowance plus 3 half-widths; no perturbed policy "
                              "better by 2 half-widths"
                        : fails.str();
  if (details) *details = std::move(rows);
  rep.runtime_seconds = seconds_since(t0);
  return rep;
}

VerificationReport verify_coupling_bound(const std::vector<CouplingStats>& sweep,
                                         const CouplingStats& control) {
  auto t0 = Clock::now();
  VerificationReport rep;
  rep.name = "coupling_bound";
  std::vector<double> hashed;
  for (const CouplingStats& s : sweep) {
    hashed.insert(hashed.end(), {s.eps, s.alpha, s.sup_estimate, s.half_width, s.lambda});
  }
  hashed.insert(hashed.end(), {control.eps, control.max_abs_difference});
  rep.inputs_hash = hash_of(rep.name, hashed);

  std::ostringstream fails;
  double m = kInf;
  try {
    m = fit_M(sweep);
  } catch (const InputError& e) {
    fails << e.what() << "; ";
  }
  double rmin = kInf;
  double rmax = 0.0;
  for (const CouplingStats& s : sweep) {
    if (!(s.lambda > 0.0)) continue;
    rmin = std::min(rmin, s.ratio);
    rmax = std::max(rmax, s.ratio);
  }
  const double spread = rmin > 0.0 ? rmax / rmin : kInf;
  if (!std::isfinite(m)) fails << "fitted M not finite; ";
  if (!(spread < 10.0)) fails << "ratio spread " << fmt(spread) << " not below 10; ";
  if (control.max_abs_difference != 0.0) {
    fails << "eps = 0 control differs by " << fmt(control.max_abs_difference) << "; ";
  }
  std::vector<CouplingStats> sorted = sweep;
  std::sort(sorted.begin(), sorted.end(),
            [](const CouplingStats& a, const CouplingStats& b) { return a.eps < b.eps; });
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    double hw = std::max(sorted[k].half_width, sorted[k - 1].half_width);
    if (!(sorted[k - 1].sup_estimate <= sorted[k].sup_estimate + 2.0 * hw)) {
      fails << "estimate not monotone between eps " << fmt(sorted[k - 1].eps) << " and "
            << fmt(sorted[k].eps) << "; ";
    }
  }
  rep.measured = spread;
  rep.bound = 10.0;
  rep.margin = margin_of(10.0, spread);
  rep.metrics["M"] = m;
  rep.metrics["ratio_min"] = rmin;
  rep.metrics["ratio_max"] = rmax;
  rep.metrics["control_max_abs"] = control.max_abs_difference;
  rep.pass = fails.str().empty();
  rep.detail = rep.pass ? "M = " + fmt(m) + ", ratio spread " + fmt(spread) + ", control exact"
                        : fails.str();
  rep.runtime_seconds = seconds_since(t0);
  return rep;
}

}  // namespace impulse_qvi
