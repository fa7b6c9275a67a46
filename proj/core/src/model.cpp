#include "impulse_qvi/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "impulse_qvi/error.hpp"
#include "impulse_qvi/parallel.hpp"

namespace impulse_qvi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTiny = 1e-12;
const double kThetas[] = {0.0, 0.25, 0.5, 0.75, 1.0};

struct NonFinite {
  double x;
  double y;
};

double checked(double v, double x, double y = std::numeric_limits<double>::quiet_NaN()) {
  if (!std::isfinite(v)) throw NonFinite{x, y};
  return v;
}

/// Running supremum with the pair that attains it. Ties keep the earlier pair,
/// so chunked reductions merged in order are partition independent.
struct Sup {
  double value = -kInf;
  double x = 0.0;
  double y = 0.0;

  void take(double v, double a, double b) {
    if (v > value) {
      value = v;
      x = a;
      y = b;
    }
  }
  void merge(const Sup& o) { take(o.value, o.x, o.y); }
};

bool within(double measured, double declared, double slack) {
  return measured <= declared * (1.0 + slack) + kTiny;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(9);
  os << v;
  return os.str();
}

/// Runs one hypothesis check; non-finite evaluations fail only that check.
template <class F>
HypothesisResult run_check(const std::string& id, F&& body) {
  HypothesisResult res;
  res.id = id;
  try {
    body(res);
  } catch (const NonFinite& nf) {
    res.pass = false;
    res.worst_x = nf.x;
    res.worst_y = nf.y;
    res.note = "non-finite evaluation at x=" + fmt(nf.x);
  }
  return res;
}

double central_derivative(const ScalarFunction& g, double x) {
  double h = 1e-6 * std::max(1.0, std::abs(x));
  return (g(x + h) - g(x - h)) / (2.0 * h);
}

/// Pairs (i, k) with i < k over the first `limit` points.
template <class F>
void for_pairs(const std::vector<double>& pts, std::size_t limit, F&& f) {
  std::size_t n = std::min(limit, pts.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = i + 1; k < n; ++k) {
      if (pts[i] != pts[k]) f(pts[i], pts[k]);
    }
  }
}

/// Power-law measures only: an integrand whose mass near 0 does not shrink
/// when the window narrows by two decades is treated as divergent.
bool looks_divergent(const LevyQuadrature& quad, const std::function<double(double)>& g) {
  if (quad.measure.kind != LevyKind::power_law) return false;
  double zmax = quad.measure.z_max * quad.bound_scale;
  double wide = quad.integrate(g, 0.0, 1e-4 * zmax);
  double narrow = quad.integrate(g, 0.0, 1e-6 * zmax);
  return wide > 0.0 && narrow > 0.9 * wide;
}

constexpr std::size_t kJumpPairLimit = 48;

}  // namespace

std::vector<double> SamplingPlan::sample() const {
  if (!(upper > lower)) throw InputError("sampling box needs upper > lower");
  std::vector<double> out;
  out.reserve(points + extra_points.size());
  if (points > 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::size_t> strata(points);
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    std::shuffle(strata.begin(), strata.end(), rng);
    double width = (upper - lower) / static_cast<double>(points);
    for (std::size_t i = 0; i < points; ++i) {
      out.push_back(lower + width * (static_cast<double>(strata[i]) + unit(rng)));
    }
  }
  out.insert(out.end(), extra_points.begin(), extra_points.end());
  return out;
}

bool AssumptionReport::all_pass() const {
  return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass; });
}

const HypothesisResult& AssumptionReport::at(const std::string& id) const {
  for (const auto& r : results) {
    if (r.id == id) return r;
  }
  throw InputError("no hypothesis '" + id + "' in report");
}

AssumptionReport check_assumptions(const ProblemSpec& spec, const AssumptionProfile& profile,
                                   const LevyQuadrature& quad, const SamplingPlan& samples) {
  const std::vector<double> pts = samples.sample();
  if (pts.size() < 2) throw InputError("sampling plan needs at least two points");
  const double slack = profile.slack;
  const JumpFunction& j = spec.jump;
  const bool has_jumps = !quad.empty();
  AssumptionReport rep;

  rep.results.push_back(run_check("H1", [&](HypothesisResult& r) {
    Sup qb, qs, qj;
    for_pairs(pts, pts.size(), [&](double x, double y) {
      double d = std::abs(x - y);
      qb.take(checked(std::abs(spec.drift(x) - spec.drift(y)), x, y) / d, x, y);
      qs.take(checked(std::abs(spec.volatility(x) - spec.volatility(y)), x, y) / d, x, y);
    });
    if (has_jumps && !j.state_independent) {
      for_pairs(pts, kJumpPairLimit, [&](double x, double y) {
        double d = std::abs(x - y);
        for (double z : quad.nodes) {
          double dj = checked(std::abs(j.amplitude(x, z) - j.amplitude(y, z)), x, y);
          double env = checked(j.lipschitz_envelope(z), x, y);
          double ratio = dj <= kTiny * d ? 0.0 : (env > 0.0 ? dj / (env * d) : kInf);
          qj.take(ratio, x, y);
        }
      });
    }
    r.measured = std::max(qb.value, qs.value);
    r.declared = std::max(profile.lipschitz_drift, profile.lipschitz_volatility);
    std::vector<std::string> bad;
    if (!within(qb.value, profile.lipschitz_drift, slack)) {
      bad.push_back("drift quotient " + fmt(qb.value));
      r.worst_x = qb.x;
      r.worst_y = qb.y;
    }
    if (!within(qs.value, profile.lipschitz_volatility, slack)) {
      bad.push_back("volatility quotient " + fmt(qs.value));
      r.worst_x = qs.x;
      r.worst_y = qs.y;
    }
    if (qj.value > 1.0 + slack) {
      bad.push_back("jump exceeds C_j envelope by factor " + fmt(qj.value));
      r.worst_x = qj.x;
      r.worst_y = qj.y;
    }
    if (has_jumps && !j.state_independent) {
      for (int q : {1, 2, 4}) {
        auto g = [&](double z) { return std::pow(j.lipschitz_envelope(z), q); };
        double total = quad.integrate(g, 0.0, kInf);
        if (!std::isfinite(total) || looks_divergent(quad, g)) {
          bad.push_back("C_j not in L^" + std::to_string(q) + "(nu)");
        }
      }
    }
    r.pass = bad.empty();
    for (const auto& b : bad) r.note += (r.note.empty() ? "" : "; ") + b;
  }));

  rep.results.push_back(run_check("H2", [&](HypothesisResult& r) {
    std::vector<double> db(pts.size()), ds(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      db[i] = checked(central_derivative(spec.drift, pts[i]), pts[i]);
      ds[i] = checked(central_derivative(spec.volatility, pts[i]), pts[i]);
    }
    Sup s;
    std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = i + 1; k < n; ++k) {
        double d2 = (pts[i] - pts[k]) * (pts[i] - pts[k]);
        if (d2 == 0.0) continue;
        double v = (db[i] - db[k]) * (db[i] - db[k]) + (ds[i] - ds[k]) * (ds[i] - ds[k]);
        if (has_jumps && !j.state_independent && i < kJumpPairLimit && k < kJumpPairLimit) {
          for (std::size_t q = 0; q < quad.size(); ++q) {
            double z = quad.nodes[q];
            double dj = j.x_derivative(pts[i], z) - j.x_derivative(pts[k], z);
            v += quad.weights[q] * checked(dj * dj, pts[i], pts[k]);
          }
        }
        s.take(v / d2, pts[i], pts[k]);
      }
    }
    r.measured = s.value;
    r.declared = std::numeric_limits<double>::quiet_NaN();
    r.worst_x = s.x;
    r.worst_y = s.y;
    r.pass = std::isfinite(s.value);
    r.note = "finite-difference constant; not used downstream";
  }));

  rep.results.push_back(run_check("H3", [&](HypothesisResult& r) {
    Sup s;
    for (double x : pts) {
      double fx = checked(spec.running_cost(x), x);
      if (fx < 0.0) throw NonFinite{x, x};
      s.take(std::abs(checked(central_derivative(spec.running_cost, x), x)), x, x);
    }
    for_pairs(pts, pts.size(), [&](double x, double y) {
      double q = std::abs(spec.running_cost(x) - spec.running_cost(y)) / std::abs(x - y);
      s.take(checked(q, x, y), x, y);
    });
    r.measured = s.value;
    r.declared = profile.lipschitz_cost;
    r.worst_x = s.x;
    r.worst_y = s.y;
    r.pass = within(s.value, profile.lipschitz_cost, slack);
    if (!r.pass) r.note = "Lipschitz quotient " + fmt(s.value) + " exceeds C_f";
  }));

  rep.results.push_back(run_check("H4", [&](HypothesisResult& r) {
    if (profile.semiconcavity.empty()) {
      r.pass = false;
      r.note = "no semi-concavity constants declared";
      return;
    }
    r.pass = true;
    double worst_ratio = -kInf;
    for (const auto& b : profile.semiconcavity) {
      std::vector<double> inside;
      for (double x : pts) {
        if (std::abs(x) < b.radius) inside.push_back(x);
      }
      Sup s;
      for (double x : inside) {
        double h = 1e-4 * std::max(1.0, std::abs(x));
        const auto& f = spec.running_cost;
        double second = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        s.take(checked(0.5 * second, x), x, x);
      }
      for_pairs(inside, inside.size(), [&](double x, double y) {
        const auto& f = spec.running_cost;
        double d = x - y;
        double c = 2.0 * (f(x) + f(y) - 2.0 * f(0.5 * (x + y))) / (d * d);
        s.take(checked(c, x, y), x, y);
      });
      if (inside.empty()) continue;
      bool ok = std::isfinite(b.constant) && within(s.value, b.constant, slack);
      double ratio = std::isfinite(b.constant) && b.constant > 0.0 ? s.value / b.constant : kInf;
      if (!ok || ratio > worst_ratio) {
        worst_ratio = ratio;
        r.measured = s.value;
        r.declared = b.constant;
        r.worst_x = s.x;
        r.worst_y = s.y;
      }
      if (!ok) {
        r.pass = false;
        r.note += (r.note.empty() ? "" : "; ") + std::string("radius ") + fmt(b.radius) +
                  ": measured " + fmt(s.value) + " vs C_r " + fmt(b.constant);
      }
    }
  }));

  rep.results.push_back(run_check("H5", [&](HypothesisResult& r) {
    const LevyMeasure1D& nu = quad.measure;
    double big = quad.bound_moment(2.0, 1.0, kInf);
    double small = nu.kind == LevyKind::power_law
                       ? nu.bound_moment(profile.gamma, 0.0, 1.0, quad.bound_scale)
                       : quad.bound_moment(profile.gamma, 0.0, 1.0);
    r.measured = std::max(big, small);
    r.declared = profile.integrability;
    r.pass = within(r.measured, profile.integrability, slack);
    if (!(profile.gamma > 0.0 && profile.gamma <= 2.0)) {
      r.pass = false;
      r.note = "profile gamma outside (0, 2]";
    }
    if (!r.pass && r.note.empty()) r.note = "moments exceed C_0";
    Sup over;
    for (double x : pts) {
      for (double z : quad.nodes) {
        double v = checked(j.amplitude(x, z), x, z);
        over.take(std::abs(v) - j.bound(z), x, z);
      }
    }
    if (over.value > kTiny * (1.0 + std::abs(over.value))) {
      r.pass = false;
      r.worst_x = over.x;
      r.worst_y = over.y;
      r.note += (r.note.empty() ? "" : "; ") + std::string("|j| exceeds j0");
    }
  }));

  rep.results.push_back(run_check("H6", [&](HypothesisResult& r) {
    const double c0 = profile.nondegeneracy;
    double lo = 1.0, hi = 1.0;
    double jlo = 1.0, jhi = 1.0;
    if (has_jumps && !j.state_independent) {
      for_pairs(pts, kJumpPairLimit, [&](double x, double y) {
        double d = x - y;
        for (double z : quad.nodes) {
          double dj = checked(j.amplitude(x, z) - j.amplitude(y, z), x, y);
          for (double th : kThetas) {
            double ratio = std::abs(d + th * dj) / std::abs(d);
            if (ratio < lo) {
              lo = ratio;
              r.worst_x = x;
              r.worst_y = y;
            }
            hi = std::max(hi, ratio);
          }
        }
      });
      for (double x : pts) {
        for (double z : quad.nodes) {
          double det = 1.0 + checked(j.x_derivative(x, z), x, z);
          jlo = std::min(jlo, det);
          jhi = std::max(jhi, det);
        }
      }
    }
    r.measured = lo;
    r.declared = c0;
    bool ratio_ok = c0 > 0.0 && c0 <= 1.0 && lo >= c0 * (1.0 - slack) &&
                    hi <= (1.0 / c0) * (1.0 + slack);
    bool jac_ok = profile.jacobian_lower >= 1.0 && profile.jacobian_upper >= 1.0 &&
                  jlo >= (1.0 / profile.jacobian_lower) * (1.0 - slack) &&
                  jhi <= profile.jacobian_upper * (1.0 + slack);
    r.pass = ratio_ok && jac_ok;
    if (!ratio_ok) r.note = "ratio range [" + fmt(lo) + ", " + fmt(hi) + "] outside c_0 band";
    if (!jac_ok) {
      r.note += (r.note.empty() ? "" : "; ") + std::string("Jacobian range [") + fmt(jlo) +
                ", " + fmt(jhi) + "] outside [1/c_1, C_1]";
    }
  }));

  rep.results.push_back(run_check("H7", [&](HypothesisResult& r) {
    Sup s;
    s.take(0.0, 0.0, 0.0);
    if (has_jumps && !j.state_independent) {
      const double g = profile.gamma;
      for (double x : pts) {
        for (double z : quad.nodes) {
          double j0 = j.bound(z);
          if (!(j0 > 0.0)) continue;
          double dj = checked(j.x_derivative(x, z), x, z);
          s.take(std::abs(dj) / std::pow(j0, g - 1.0), x, z);
          double shifted = checked(j.x_derivative(x + j.amplitude(x, z), z), x, z);
          s.take(std::abs(dj - shifted) / std::pow(j0, g), x, z);
        }
      }
    }
    r.measured = s.value;
    r.declared = profile.jump_regularity;
    r.worst_x = s.x;
    r.worst_y = s.y;
    r.pass = within(s.value, profile.jump_regularity, slack);
    if (!r.pass) r.note = "required M_gamma " + fmt(s.value);
  }));

  rep.results.push_back(run_check("H8", [&](HypothesisResult& r) {
    double lo = kInf;
    for (double x : pts) {
      double a = checked(spec.diffusion(x), x);
      if (a < lo) {
        lo = a;
        r.worst_x = x;
      }
    }
    r.measured = lo;
    r.declared = profile.ellipticity;
    r.pass = profile.ellipticity > 0.0 && lo >= profile.ellipticity * (1.0 - slack);
    if (!(profile.ellipticity > 0.0)) {
      r.note = "ellipticity constant must be positive";
    } else if (!r.pass) {
      r.note = "a(x) drops to " + fmt(lo);
    }
  }));

  rep.results.push_back(run_check("H9", [&](HypothesisResult& r) {
    const auto& B = spec.transaction_cost;
    const double K = profile.transaction_floor;
    std::vector<double> xis;
    for (double x : pts) {
      xis.push_back(x);
      xis.push_back(-x);
    }
    for_pairs(pts, std::min<std::size_t>(pts.size(), 64), [&](double x, double y) {
      xis.push_back(x - y);
    });
    double lo = kInf;
    for (double xi : xis) {
      double b = checked(B(xi), xi);
      if (b < lo) {
        lo = b;
        r.worst_x = xi;
      }
    }
    Sup sub;
    sub.take(-kInf, 0.0, 0.0);
    for_pairs(pts, std::min<std::size_t>(pts.size(), 64), [&](double x, double y) {
      sub.take(B(x + y) + K - B(x) - B(y), x, y);
    });
    bool growth = true;
    for (double sign : {-1.0, 1.0}) {
      double prev = -kInf;
      for (double R : {1e1, 1e2, 1e3, 1e4}) {
        double b = checked(B(sign * R), sign * R);
        if (!(b > prev)) growth = false;
        prev = b;
      }
    }
    r.measured = lo;
    r.declared = K;
    std::vector<std::string> bad;
    if (!(K > 0.0)) bad.push_back("K must be positive");
    if (lo < K * (1.0 - slack)) bad.push_back("B drops to " + fmt(lo) + " below K");
    if (sub.value > kTiny * (1.0 + K)) {
      bad.push_back("subadditivity gap " + fmt(sub.value));
      r.worst_x = sub.x;
      r.worst_y = sub.y;
    }
    if (!growth) bad.push_back("B does not grow without bound");
    r.pass = bad.empty();
    for (const auto& b : bad) r.note += (r.note.empty() ? "" : "; ") + b;
  }));

  return rep;
}

std::optional<double> ModelConstants::value_lipschitz(double lipschitz_cost,
                                                      double discount) const {
  double gap = discount - 0.5 * beta;
  if (!(gap > 0.0)) return std::nullopt;
  return lipschitz_cost / gap;
}

ModelConstants estimate_beta(const ProblemSpec& spec, const AssumptionProfile& profile,
                             const LevyQuadrature& quad, const SamplingPlan& samples) {
  const std::vector<double> pts = samples.sample();
  const JumpFunction& j = spec.jump;
  const bool jump_terms = !quad.empty() && !j.state_independent;
  const std::size_t n = pts.size();

  struct Best {
    Sup total;
    double bb = 0.0, bs = 0.0, bj = 0.0;
    std::size_t pairs = 0;
  };
  std::vector<Best> chunks(n);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Best& best = chunks[i];
      double x = pts[i];
      double bx = spec.drift(x), sx = spec.volatility(x);
      for (std::size_t k = i + 1; k < n; ++k) {
        double y = pts[k];
        double d = x - y;
        if (std::abs(d) <= 1e-14 * std::max(1.0, std::abs(x))) continue;
        double d2 = d * d;
        double b = d * (bx - spec.drift(y)) / d2;
        double ds = sx - spec.volatility(y);
        double s = ds * ds / d2;
        double jj = 0.0;
        if (jump_terms) {
          for (std::size_t q = 0; q < quad.size(); ++q) {
            double z = quad.nodes[q];
            double dj = j.amplitude(x, z) - j.amplitude(y, z);
            // |d + dj|^2 - |d|^2 - 2 d dj, evaluated without cancellation
            jj += quad.weights[q] * dj * dj;
          }
          jj /= d2;
        }
        double total = 2.0 * b + s + jj;
        ++best.pairs;
        if (total > best.total.value) {
          best.total.take(total, x, y);
          best.bb = b;
          best.bs = s;
          best.bj = jj;
        }
      }
    }
  });

  ModelConstants mc;
  Best overall;
  for (const Best& b : chunks) {
    overall.pairs += b.pairs;
    if (b.total.value > overall.total.value) {
      overall.total = b.total;
      overall.bb = b.bb;
      overall.bs = b.bs;
      overall.bj = b.bj;
    }
  }
  if (overall.pairs == 0) throw InputError("empty pair set");
  mc.beta = overall.total.value;
  mc.beta_drift = overall.bb;
  mc.beta_volatility = overall.bs;
  mc.beta_jump = overall.bj;
  mc.pairs = overall.pairs;

  double jump_cap = 0.0;
  if (!quad.empty() && !j.state_independent) {
    jump_cap = quad.integrate(
        [&](double z) {
          double c = j.lipschitz_envelope(z);
          return 2.0 * c + c * c;
        },
        0.0, kInf);
  }
  mc.beta_cap = 2.0 * profile.lipschitz_drift +
                profile.lipschitz_volatility * profile.lipschitz_volatility + jump_cap;
  return mc;
}

ModelConstants estimate_kappa(const ProblemSpec& spec, const LevyQuadrature& quad,
                              const SamplingPlan& samples, ModelConstants constants) {
  const std::vector<double> pts = samples.sample();
  const std::size_t n = pts.size();
  if (n < 2) throw InputError("empty pair set");
  const JumpFunction& j = spec.jump;
  const bool jump_terms = !quad.empty() && !j.state_independent;

  struct Triple {
    double x, xp, y, theta;
  };
  std::vector<Triple> triples;
  // Endpoint triples reproduce every beta pair, so kappa >= beta by construction.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = i + 1; k < n; ++k) triples.push_back({pts[0], pts[i], pts[k], 0.0});
  }
  std::mt19937_64 rng(mix_seed(samples.seed, 0x6b617070));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t rep = 0; rep < 4; ++rep) {
      std::size_t a = pick(rng), b = pick(rng);
      for (double th : kThetas) triples.push_back({pts[i], pts[a], pts[b], th});
      // y on the segment probes the quartic terms where the cross term vanishes
      double m = 0.5 * (pts[i] + pts[a]);
      triples.push_back({pts[i], pts[a], m, 0.5});
    }
  }

  struct Best {
    double total = -kInf;
    double kb = 0.0, ks = 0.0, kj = 0.0;
    std::size_t count = 0;
  };
  const std::size_t T = triples.size();
  std::vector<Best> chunks(T);
  parallel_for(T, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const Triple& tr = triples[t];
      const double th = tr.theta;
      const double w = th * th * (1.0 - th) * (1.0 - th);
      const double d = tr.x - tr.xp;
      const double d2 = d * d;
      const double m = th * tr.x + (1.0 - th) * tr.xp;
      const double e = m - tr.y;
      const double psi = w * d2 * d2 + e * e;
      if (!(psi > 1e-24)) continue;

      const double bx = spec.drift(tr.x), bxp = spec.drift(tr.xp), by = spec.drift(tr.y);
      const double sx = spec.volatility(tr.x), sxp = spec.volatility(tr.xp),
                   sy = spec.volatility(tr.y);
      const double ds = sx - sxp;

      double kb = 2.0 * w * d2 * d * (bx - bxp) + e * (th * bx + (1.0 - th) * bxp - by);
      double comb = th * sx + (1.0 - th) * sxp - sy;
      double ks = 6.0 * w * d2 * ds * ds + comb * comb;
      double kj = 0.0;
      if (!quad.empty()) {
        for (std::size_t q = 0; q < quad.size(); ++q) {
          double z = quad.nodes[q];
          double jx = j.amplitude(tr.x, z);
          double jxp = jump_terms ? j.amplitude(tr.xp, z) : jx;
          double jy = jump_terms ? j.amplitude(tr.y, z) : jx;
          double dj = jx - jxp;
          // (d + dj)^4 - d^4 - 4 d^3 dj
          double quart = dj * dj * (6.0 * d2 + 4.0 * d * dj + dj * dj);
          double c = th * jx + (1.0 - th) * jxp - jy;
          kj += quad.weights[q] * (w * quart + c * c);
        }
      }
      double total = (2.0 * kb + ks + kj) / psi;
      Best& best = chunks[t];
      best.count = 1;
      best.total = total;
      best.kb = kb / psi;
      best.ks = ks / psi;
      best.kj = kj / psi;
    }
  });

  Best overall;
  for (const Best& b : chunks) {
    overall.count += b.count;
    if (b.count && b.total > overall.total) {
      overall.total = b.total;
      overall.kb = b.kb;
      overall.ks = b.ks;
      overall.kj = b.kj;
    }
  }
  if (overall.count == 0) throw InputError("empty pair set");
  constants.kappa = overall.total;
  constants.kappa_drift = overall.kb;
  constants.kappa_volatility = overall.ks;
  constants.kappa_jump = overall.kj;
  constants.triples = overall.count;
  if (constants.pairs > 0 && constants.kappa < constants.beta - 1e-9 * (1.0 + std::abs(constants.beta))) {
    throw NumericalError("kappa below beta; sample sets differ");
  }
  return constants;
}

DiscountReport check_discount_rate(const ModelConstants& c, double r) {
  DiscountReport rep;
  rep.lipschitz_threshold = 0.5 * c.beta;
  rep.lipschitz_pass = r > rep.lipschitz_threshold;

  rep.uniform_threshold = 0.5 * c.alpha;
  rep.uniform_pass = c.alpha > c.beta && r > rep.uniform_threshold;

  rep.semiconcave_threshold = std::max(c.alpha, c.kappa);
  rep.semiconcave_pass = c.alpha >= c.kappa && r > c.alpha;

  std::vector<std::string> notes;
  if (!rep.lipschitz_pass) notes.push_back("r <= beta/2: C_u undefined");
  if (!(c.alpha > c.beta)) notes.push_back("alpha <= beta: uniform convergence unverifiable");
  else if (!rep.uniform_pass) notes.push_back("r <= alpha/2");
  if (c.alpha < c.kappa) notes.push_back("alpha < kappa: semi-concavity unverifiable at this alpha");
  else if (!rep.semiconcave_pass) notes.push_back("r <= alpha");
  for (const auto& s : notes) rep.note += (rep.note.empty() ? "" : "; ") + s;
  return rep;
}

}  // namespace impulse_qvi
