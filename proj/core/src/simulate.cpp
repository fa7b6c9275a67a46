#include "impulse_qvi/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "impulse_qvi/error.hpp"
#include "impulse_qvi/parallel.hpp"

namespace impulse_qvi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct MeanHalfWidth {
  double mean = 0.0;
  double half_width = 0.0;
};

/// Mean and 1.96 sd / sqrt(P), accumulated in index order.
MeanHalfWidth summarize(const std::vector<double>& v) {
  MeanHalfWidth out;
  if (v.empty()) return out;
  double s = 0.0;
  for (double x : v) s += x;
  out.mean = s / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    double var = ss / static_cast<double>(v.size() - 1);
    out.half_width = 1.96 * std::sqrt(var / static_cast<double>(v.size()));
  }
  return out;
}

/// Jump machinery shared by all simulators: intensity of simulated marks,
/// compensators for kept marks and the Gaussian variance of dropped ones.
class Dynamics {
 public:
  Dynamics(const ProblemSpec& spec, const LevyQuadrature& quad, const SimConfig& config)
      : spec_(spec), quad_(quad), config_(config) {
    config.validate();
    const LevyMeasure1D& nu = quad.measure;
    scale_ = spec.jump.bound_scale;
    if (!nu.is_zero()) {
      if (!quad.empty() && config.delta_sim < quad.smallest_node() * scale_ * (1.0 - 1e-12) &&
          nu.kind == LevyKind::power_law) {
        throw InputError("delta_sim below the smallest quadrature node");
      }
      lambda_ = nu.tail_mass(std::max(config.delta_sim, spec.jump.truncation), scale_);
      if (!(lambda_ * config.dt <= 0.1)) throw InputError("step too large for jump intensity");
    }
    zero_comp_ = nu.symmetric() && spec.jump.odd_in_mark;
  }

  double lambda() const { return lambda_; }
  const ProblemSpec& spec() const { return spec_; }

  /// sum over marks with j0 > level of w j(x, z); zero for symmetric nu and odd j.
  double compensator(double x, double level) const {
    if (zero_comp_ || quad_.empty()) return 0.0;
    if (spec_.jump.state_independent) return cached(comp_cache_, level, [&] {
      return raw_compensator(0.0, level);
    });
    return raw_compensator(x, level);
  }

  /// sum over marks with lo < j0 <= hi of w j(x, z)^2.
  double band_variance(double x, double lo, double hi) const {
    if (quad_.empty() || !(hi > lo)) return 0.0;
    if (spec_.jump.state_independent) {
      for (const auto& [band, v] : var_cache_) {
        if (band.first == lo && band.second == hi) return v;
      }
      double v = raw_variance(0.0, lo, hi);
      var_cache_.push_back({{lo, hi}, v});
      return v;
    }
    return raw_variance(x, lo, hi);
  }

  double sample_mark(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double us = unit(rng);
    double uz = unit(rng);
    return quad_.measure.sample_mark(std::max(config_.delta_sim, spec_.jump.truncation), scale_,
                                     us, uz);
  }

  double jump(double x, double z, double level) const {
    if (!(scale_ * std::abs(z) > level)) return 0.0;
    return spec_.jump(x, z);
  }

  double next_arrival(std::mt19937_64& rng, double t) const {
    if (!(lambda_ > 0.0)) return kInf;
    std::exponential_distribution<double> e(lambda_);
    return t + e(rng);
  }

 private:
  template <class F>
  double cached(std::vector<std::pair<double, double>>& cache, double key, F&& make) const {
    for (const auto& [k, v] : cache) {
      if (k == key) return v;
    }
    double v = make();
    cache.emplace_back(key, v);
    return v;
  }

  double raw_compensator(double x, double level) const {
    double s = 0.0;
    for (std::size_t q = 0; q < quad_.size(); ++q) {
      double j0 = quad_.bound(q);
      if (j0 > level && j0 > spec_.jump.truncation) {
        s += quad_.weights[q] * spec_.jump.amplitude(x, quad_.nodes[q]);
      }
    }
    return s;
  }

  double raw_variance(double x, double lo, double hi) const {
    double s = 0.0;
    for (std::size_t q = 0; q < quad_.size(); ++q) {
      double j0 = quad_.bound(q);
      if (j0 > lo && j0 <= hi && j0 > spec_.jump.truncation) {
        double j = spec_.jump.amplitude(x, quad_.nodes[q]);
        s += quad_.weights[q] * j * j;
      }
    }
    return s;
  }

  const ProblemSpec& spec_;
  const LevyQuadrature& quad_;
  const SimConfig& config_;
  double scale_ = 1.0;
  double lambda_ = 0.0;
  bool zero_comp_ = true;
  // Caches are filled before the parallel section (see warm()).
  mutable std::vector<std::pair<double, double>> comp_cache_;
  mutable std::vector<std::pair<std::pair<double, double>, double>> var_cache_;

 public:
  /// Pre-fills the caches so path workers only read them.
  void warm(const std::vector<double>& levels, const std::vector<std::pair<double, double>>& bands) {
    for (double l : levels) compensator(0.0, l);
    for (const auto& [lo, hi] : bands) band_variance(0.0, lo, hi);
  }
};

/// Bands (lo, hi] of dropped marks below delta_sim, split at the given levels.
std::vector<std::pair<double, double>> surrogate_bands(double delta, std::vector<double> levels) {
  std::vector<double> cuts{0.0, delta};
  for (double l : levels) {
    if (l > 0.0 && l < delta) cuts.push_back(l);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<std::pair<double, double>> bands;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) bands.emplace_back(cuts[i], cuts[i + 1]);
  return bands;
}

}  // namespace

std::size_t SimConfig::steps() const {
  return static_cast<std::size_t>(std::llround(horizon / dt));
}

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw InputError("dt must be positive");
  if (!(horizon >= dt)) throw InputError("horizon must be at least dt");
  if (paths < 1) throw InputError("at least one path is required");
  if (!(delta_sim >= 0.0)) throw InputError("delta_sim must be nonnegative");
}

PathEnsemble simulate_paths(const ProblemSpec& spec, const LevyQuadrature& quad,
                            const SimConfig& config, const ImpulsePolicy* policy, double x0) {
  Dynamics dyn(spec, quad, config);
  const double delta = std::max(config.delta_sim, spec.jump.truncation);
  const bool surrogate = config.mode == CompensationMode::diffusion_surrogate;
  dyn.warm({delta}, {{0.0, delta}});

  const std::size_t P = config.paths;
  const std::size_t steps = config.steps();
  const double dt = config.dt;
  const double sqdt = std::sqrt(dt);
  const double r = spec.discount;
  const double step_weight = (1.0 - std::exp(-r * dt)) / r;

  PathEnsemble ens;
  ens.config = config;
  ens.jump_intensity = dyn.lambda();
  ens.terminal.assign(P, 0.0);
  ens.cost.assign(P, 0.0);
  ens.visited_sup_f.assign(P, 0.0);
  ens.impulses.assign(P, {});
  ens.seeds.assign(P, 0);
  if (config.record_stride > 0) ens.trajectories.assign(P, {});

  parallel_for(P, [&](std::size_t begin, std::size_t end) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t p = begin; p < end; ++p) {
      normal.reset();  // the polar method caches a spare variate
      const std::uint64_t seed = mix_seed(config.seed, p);
      std::mt19937_64 rng(seed);
      ens.seeds[p] = seed;
      double x = x0;
      double cost = 0.0;
      double sup_f = 0.0;
      double next = dyn.next_arrival(rng, 0.0);
      std::vector<double>* traj = config.record_stride ? &ens.trajectories[p] : nullptr;
      if (traj) traj->push_back(x);
      for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double disc = std::exp(-r * t);
        double xi = 0.0;
        if (policy && policy->acts(x, xi) && xi != 0.0) {
          if (ens.impulses[p].size() >= config.max_impulses) throw NumericalError("Zeno policy");
          cost += disc * spec.transaction_cost(xi);
          x += xi;
          ens.impulses[p].push_back({t, xi});
        }
        const double fx = spec.running_cost(x);
        sup_f = std::max(sup_f, fx);
        cost += disc * step_weight * fx;

        double dw = sqdt * normal(rng);
        double nx = x + (spec.drift(x) - dyn.compensator(x, delta)) * dt + spec.volatility(x) * dw;
        if (surrogate) {
          double g = normal(rng);
          double v = dyn.band_variance(x, 0.0, delta);
          if (v > 0.0) nx += std::sqrt(v * dt) * g;
        }
        while (next < t + dt) {
          double z = dyn.sample_mark(rng);
          nx += dyn.jump(x, z, delta);
          next = dyn.next_arrival(rng, next);
        }
        x = nx;
        if (!std::isfinite(x)) throw NumericalError("non-finite state in simulation");
        if (traj && (k + 1) % config.record_stride == 0) traj->push_back(x);
      }
      ens.terminal[p] = x;
      ens.cost[p] = cost;
      ens.visited_sup_f[p] = sup_f;
    }
  });
  return ens;
}

PolicyValue evaluate_policy(const ProblemSpec& spec, const LevyQuadrature& quad,
                            const SimConfig& config, const ImpulsePolicy* policy, double x0) {
  if (!(spec.discount > 0.0)) throw InputError("discount rate must be positive");
  SimConfig cfg = config;
  cfg.record_stride = 0;
  PathEnsemble ens = simulate_paths(spec, quad, cfg, policy, x0);
  MeanHalfWidth s = summarize(ens.cost);
  double sup_f = 0.0;
  for (double v : ens.visited_sup_f) sup_f = std::max(sup_f, v);
  if (policy) {
    for (std::size_t i = 0; i < policy->grid.n; ++i) {
      sup_f = std::max(sup_f, spec.running_cost(policy->grid.x(i)));
    }
  }
  PolicyValue out;
  out.mean = s.mean;
  out.clt_half_width = s.half_width;
  out.horizon_bound = std::exp(-spec.discount * cfg.horizon) * sup_f / spec.discount;
  out.half_width = out.clt_half_width + out.horizon_bound;
  out.paths = ens.cost.size();
  double n = 0.0;
  for (const auto& v : ens.impulses) n += static_cast<double>(v.size());
  out.mean_impulses = n / static_cast<double>(out.paths);
  return out;
}

std::vector<std::vector<CouplingStats>> coupled_sweep(const ProblemSpec& spec,
                                                      const LevyQuadrature& quad,
                                                      const SimConfig& config,
                                                      const std::vector<double>& eps_list,
                                                      const std::vector<double>& alphas,
                                                      double x0) {
  if (eps_list.empty()) throw InputError("empty eps list");
  if (alphas.empty()) throw InputError("empty alpha list");
  for (double e : eps_list) {
    if (!(e >= 0.0)) throw InputError("truncation level must be nonnegative");
  }
  Dynamics dyn(spec, quad, config);
  const double delta = std::max(config.delta_sim, spec.jump.truncation);
  const bool surrogate = config.mode == CompensationMode::diffusion_surrogate;
  const auto bands = surrogate ? surrogate_bands(delta, eps_list)
                               : std::vector<std::pair<double, double>>{};
  std::vector<double> levels{delta};
  for (double e : eps_list) levels.push_back(std::max(delta, e));
  dyn.warm(levels, bands);

  const std::size_t P = config.paths;
  const std::size_t E = eps_list.size();
  const std::size_t A = alphas.size();
  const std::size_t steps = config.steps();
  const double dt = config.dt;
  const double sqdt = std::sqrt(dt);

  // per path: sup for every (eps, alpha), terminal |D|^2 per eps, max |D| per eps
  std::vector<double> sups(P * E * A, 0.0);
  std::vector<double> terms(P * E, 0.0);
  std::vector<double> maxabs(P * E, 0.0);

  parallel_for(P, [&](std::size_t begin, std::size_t end) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> y(E), ny(E), noise_y(E), g(bands.size());
    std::vector<double> decay(A);
    for (std::size_t p = begin; p < end; ++p) {
      normal.reset();  // the polar method caches a spare variate
      std::mt19937_64 rng(mix_seed(config.seed, p));
      double x = x0;
      std::fill(y.begin(), y.end(), x0);
      double next = dyn.next_arrival(rng, 0.0);
      for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double dw = sqdt * normal(rng);
        for (auto& gb : g) gb = normal(rng);

        double noise_x = 0.0;
        std::fill(noise_y.begin(), noise_y.end(), 0.0);
        for (std::size_t b = 0; b < bands.size(); ++b) {
          double v = dyn.band_variance(x, bands[b].first, bands[b].second);
          if (v > 0.0) noise_x += std::sqrt(v * dt) * g[b];
          for (std::size_t e = 0; e < E; ++e) {
            if (bands[b].first >= eps_list[e]) {
              double vy = dyn.band_variance(y[e], bands[b].first, bands[b].second);
              if (vy > 0.0) noise_y[e] += std::sqrt(vy * dt) * g[b];
            }
          }
        }

        double nx = x + (spec.drift(x) - dyn.compensator(x, delta)) * dt + spec.volatility(x) * dw;
        if (noise_x != 0.0) nx += noise_x;
        for (std::size_t e = 0; e < E; ++e) {
          double lvl = std::max(delta, eps_list[e]);
          double v = y[e];
          ny[e] = v + (spec.drift(v) - dyn.compensator(v, lvl)) * dt + spec.volatility(v) * dw;
          if (noise_y[e] != 0.0) ny[e] += noise_y[e];
        }
        while (next < t + dt) {
          double z = dyn.sample_mark(rng);
          nx += dyn.jump(x, z, delta);
          for (std::size_t e = 0; e < E; ++e) {
            ny[e] += dyn.jump(y[e], z, std::max(delta, eps_list[e]));
          }
          next = dyn.next_arrival(rng, next);
        }
        x = nx;
        const double t1 = t + dt;
        for (std::size_t a = 0; a < A; ++a) decay[a] = std::exp(-alphas[a] * t1);
        for (std::size_t e = 0; e < E; ++e) {
          y[e] = ny[e];
          double d = x - y[e];
          double d2 = d * d;
          maxabs[p * E + e] = std::max(maxabs[p * E + e], std::abs(d));
          for (std::size_t a = 0; a < A; ++a) {
            double& s = sups[(p * E + e) * A + a];
            s = std::max(s, d2 * decay[a]);
          }
        }
        if (!std::isfinite(x)) throw NumericalError("non-finite state in simulation");
      }
      for (std::size_t e = 0; e < E; ++e) {
        double d = x - y[e];
        terms[p * E + e] = d * d;
      }
    }
  });

  std::vector<double> sample_x{x0};
  std::vector<std::vector<CouplingStats>> out(E, std::vector<CouplingStats>(A));
  std::vector<double> col(P);
  for (std::size_t e = 0; e < E; ++e) {
    TruncationReport tr = lambda_norms(spec.jump, eps_list[e], quad, sample_x);
    for (std::size_t p = 0; p < P; ++p) col[p] = terms[p * E + e];
    MeanHalfWidth term = summarize(col);
    double mx = 0.0;
    for (std::size_t p = 0; p < P; ++p) mx = std::max(mx, maxabs[p * E + e]);
    for (std::size_t a = 0; a < A; ++a) {
      for (std::size_t p = 0; p < P; ++p) col[p] = sups[(p * E + e) * A + a];
      MeanHalfWidth s = summarize(col);
      CouplingStats& cs = out[e][a];
      cs.eps = eps_list[e];
      cs.alpha = alphas[a];
      cs.sup_estimate = s.mean;
      cs.half_width = s.half_width;
      cs.terminal_moment = term.mean;
      cs.terminal_half_width = term.half_width;
      cs.lambda = tr.lambda;
      cs.ratio = tr.lambda > 0.0 ? (s.mean + s.half_width) / (tr.lambda * tr.lambda) : 0.0;
      cs.max_abs_difference = mx;
      cs.paths = P;
    }
  }
  return out;
}

std::vector<CouplingStats> coupled_sup_difference(const ProblemSpec& spec,
                                                  const LevyQuadrature& quad,
                                                  const SimConfig& config, double eps,
                                                  const std::vector<double>& alphas, double x0) {
  return coupled_sweep(spec, quad, config, {eps}, alphas, x0).front();
}

CouplingStats coupled_sup_difference(const ProblemSpec& spec, const LevyQuadrature& quad,
                                     const SimConfig& config, double eps, double alpha,
                                     double x0) {
  return coupled_sup_difference(spec, quad, config, eps, std::vector<double>{alpha}, x0).front();
}

double psi_theta(double x, double xp, double z, double theta) {
  double d = x - xp;
  double w = theta * theta * (1.0 - theta) * (1.0 - theta);
  double e = theta * x + (1.0 - theta) * xp - z;
  return w * d * d * d * d + e * e;
}

PsiStats psi_theta_stats(const ProblemSpec& spec, const LevyQuadrature& quad,
                         const SimConfig& config, double x, double xp, double theta,
                         double alpha, double kappa) {
  if (!(alpha > kappa)) throw InputError("comparison rate below kappa");
  if (!(theta >= 0.0 && theta <= 1.0)) throw InputError("theta must lie in [0, 1]");
  Dynamics dyn(spec, quad, config);
  const double delta = std::max(config.delta_sim, spec.jump.truncation);
  const bool surrogate = config.mode == CompensationMode::diffusion_surrogate;
  dyn.warm({delta}, {{0.0, delta}});

  const std::size_t P = config.paths;
  const std::size_t steps = config.steps();
  const double dt = config.dt;
  const double sqdt = std::sqrt(dt);
  const double z0 = theta * x + (1.0 - theta) * xp;

  std::vector<double> sups(P), ints(P), maxes(P);
  parallel_for(P, [&](std::size_t begin, std::size_t end) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t p = begin; p < end; ++p) {
      normal.reset();  // the polar method caches a spare variate
      std::mt19937_64 rng(mix_seed(config.seed, p));
      double s[3] = {x, xp, z0};
      double next = dyn.next_arrival(rng, 0.0);
      double psi = psi_theta(s[0], s[1], s[2], theta);
      double sup = psi, integral = 0.0, mx = psi;
      for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        integral += psi * std::exp(-alpha * t) * dt;
        const double dw = sqdt * normal(rng);
        const double g = surrogate ? normal(rng) : 0.0;
        double ns[3];
        for (int i = 0; i < 3; ++i) {
          double v = s[i];
          ns[i] = v + (spec.drift(v) - dyn.compensator(v, delta)) * dt + spec.volatility(v) * dw;
          if (surrogate) {
            double var = dyn.band_variance(v, 0.0, delta);
            if (var > 0.0) ns[i] += std::sqrt(var * dt) * g;
          }
        }
        while (next < t + dt) {
          double z = dyn.sample_mark(rng);
          for (int i = 0; i < 3; ++i) ns[i] += dyn.jump(s[i], z, delta);
          next = dyn.next_arrival(rng, next);
        }
        for (int i = 0; i < 3; ++i) s[i] = ns[i];
        psi = psi_theta(s[0], s[1], s[2], theta);
        sup = std::max(sup, psi * std::exp(-alpha * (t + dt)));
        mx = std::max(mx, psi);
      }
      sups[p] = sup;
      ints[p] = integral;
      maxes[p] = mx;
    }
  });

  PsiStats out;
  out.theta = theta;
  out.alpha = alpha;
  out.psi0 = psi_theta(x, xp, z0, theta);
  MeanHalfWidth s = summarize(sups);
  out.sup_estimate = s.mean;
  out.half_width = s.half_width;
  out.integral_estimate = summarize(ints).mean;
  out.ratio = out.psi0 > 0.0 ? out.sup_estimate / out.psi0 : 0.0;
  out.normalized = out.ratio / (1.0 + 1.0 / (alpha - kappa));
  for (double m : maxes) out.max_abs_psi = std::max(out.max_abs_psi, m);
  out.paths = P;
  return out;
}

double fit_M(const std::vector<CouplingStats>& sweeps) {
  std::vector<double> eps;
  double m = 0.0;
  for (const CouplingStats& s : sweeps) {
    if (!(s.lambda > 0.0)) continue;
    m = std::max(m, (s.sup_estimate + s.half_width) / (s.lambda * s.lambda));
    if (std::find(eps.begin(), eps.end(), s.eps) == eps.end()) eps.push_back(s.eps);
  }
  if (eps.size() < 3) throw InputError("fit_M needs at least three distinct eps values");
  return m;
}

}  // namespace impulse_qvi
