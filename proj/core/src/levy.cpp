#include "impulse_qvi/levy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "impulse_qvi/error.hpp"

namespace impulse_qvi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct GaussRule {
  std::vector<double> x;  // on [-1, 1]
  std::vector<double> w;
};

GaussRule gauss_legendre(std::size_t n) {
  GaussRule rule;
  rule.x.resize(n);
  rule.w.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = pk;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute derivative at the converged root for the weight.
    double p0 = 1.0;
    double p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
      p0 = p1;
      p1 = pk;
    }
    dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
    rule.x[i] = x;
    rule.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

std::vector<double> merge_edges(std::vector<double> edges) {
  std::sort(edges.begin(), edges.end());
  std::vector<double> out;
  for (double e : edges) {
    if (out.empty() || e > out.back() * (1.0 + 1e-12)) out.push_back(e);
  }
  return out;
}

LevyQuadrature power_law_quadrature(const LevyMeasure1D& m, double eta, std::size_t n_nodes,
                                    const QuadratureOptions& opt) {
  const double k = opt.bound_scale;
  const double c = m.intensity;
  const double g = m.order;

  std::vector<double> levels = opt.breakpoints;
  levels.push_back(eta);
  levels.push_back(1.0);

  double cutoff = opt.inner_cutoff * m.z_max;
  for (double lvl : levels) {
    if (lvl > 0.0) cutoff = std::min(cutoff, 1e-3 * lvl / k);
  }

  const std::size_t order = std::max<std::size_t>(2, opt.gauss_order);
  const std::size_t panels = std::max<std::size_t>(4, n_nodes / (2 * order));
  std::vector<double> edges;
  const double log_lo = std::log(cutoff);
  const double log_hi = std::log(m.z_max);
  for (std::size_t p = 0; p <= panels; ++p) {
    edges.push_back(std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(p) /
                                          static_cast<double>(panels)));
  }
  edges.front() = cutoff;
  edges.back() = m.z_max;
  for (double lvl : levels) {
    double z = lvl / k;
    if (z > cutoff && z < m.z_max) edges.push_back(z);
  }
  edges = merge_edges(std::move(edges));

  GaussRule rule = gauss_legendre(order);
  std::vector<double> pos_nodes;
  std::vector<double> pos_weights;

  // Innermost panel: one node carrying the exact second moment of [0, cutoff].
  double inner = 0.5 * cutoff;
  pos_nodes.push_back(inner);
  pos_weights.push_back(c * std::pow(cutoff, 2.0 - g) / (2.0 - g) / (inner * inner));

  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    double ta = std::log(edges[p]);
    double tb = std::log(edges[p + 1]);
    double half = 0.5 * (tb - ta);
    double mid = 0.5 * (tb + ta);
    for (std::size_t i = order; i-- > 0;) {  // ascending in t
      double t = mid + half * rule.x[i];
      double z = std::exp(t);
      pos_nodes.push_back(z);
      pos_weights.push_back(c * std::exp(-g * t) * half * rule.w[i]);
    }
  }

  LevyQuadrature quad;
  quad.measure = m;
  quad.bound_scale = k;
  quad.profile_gamma = opt.profile_gamma;
  quad.split = eta;
  quad.nodes.reserve(2 * pos_nodes.size());
  quad.weights.reserve(2 * pos_nodes.size());
  for (std::size_t i = pos_nodes.size(); i-- > 0;) {
    quad.nodes.push_back(-pos_nodes[i]);
    quad.weights.push_back(pos_weights[i]);
  }
  for (std::size_t i = 0; i < pos_nodes.size(); ++i) {
    quad.nodes.push_back(pos_nodes[i]);
    quad.weights.push_back(pos_weights[i]);
  }
  quad.breakpoints = merge_edges(levels);
  return quad;
}

}  // namespace

LevyMeasure1D LevyMeasure1D::zero() { return {}; }

LevyMeasure1D LevyMeasure1D::power_law(double c, double order, double z_max) {
  if (!(order < 2.0)) throw InputError("infinite quadratic small-jump mass");
  if (!(c > 0.0) || !(order > 0.0) || !(z_max > 0.0)) {
    throw InputError("power_law requires c > 0, 0 < gamma < 2, z_max > 0");
  }
  LevyMeasure1D m;
  m.kind = LevyKind::power_law;
  m.intensity = c;
  m.order = order;
  m.z_max = z_max;
  return m;
}

LevyMeasure1D LevyMeasure1D::compound_poisson(std::vector<Atom> atoms) {
  LevyMeasure1D m;
  m.kind = LevyKind::compound_poisson;
  for (const Atom& a : atoms) {
    if (!(a.mass >= 0.0) || !std::isfinite(a.mark)) {
      throw InputError("compound_poisson atoms need finite marks and nonnegative masses");
    }
    if (a.mass > 0.0 && a.mark != 0.0) m.atoms.push_back(a);
  }
  std::sort(m.atoms.begin(), m.atoms.end(),
            [](const Atom& a, const Atom& b) { return a.mark < b.mark; });
  if (m.atoms.empty()) m.kind = LevyKind::zero;
  return m;
}

bool LevyMeasure1D::is_zero() const { return kind == LevyKind::zero; }

bool LevyMeasure1D::symmetric() const {
  switch (kind) {
    case LevyKind::zero:
    case LevyKind::power_law:
      return true;
    case LevyKind::compound_poisson: {
      for (const Atom& a : atoms) {
        bool found = std::any_of(atoms.begin(), atoms.end(), [&](const Atom& b) {
          return b.mark == -a.mark && b.mass == a.mass;
        });
        if (!found) return false;
      }
      return true;
    }
  }
  return false;
}

std::string LevyMeasure1D::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case LevyKind::zero:
      os << "zero";
      break;
    case LevyKind::power_law:
      os << "power_law(c=" << intensity << ",gamma=" << order << ",z_max=" << z_max << ")";
      break;
    case LevyKind::compound_poisson:
      os << "compound_poisson(";
      for (const Atom& a : atoms) os << "[" << a.mark << "," << a.mass << "]";
      os << ")";
      break;
  }
  return os.str();
}

double LevyMeasure1D::bound_moment(double p, double lo, double hi, double scale) const {
  switch (kind) {
    case LevyKind::zero:
      return 0.0;
    case LevyKind::compound_poisson: {
      double s = 0.0;
      for (const Atom& a : atoms) {
        double j0 = scale * std::abs(a.mark);
        if (j0 >= lo && j0 < hi) s += a.mass * std::pow(j0, p);
      }
      return s;
    }
    case LevyKind::power_law: {
      double a = std::max(0.0, lo / scale);
      double b = std::min(hi / scale, z_max);
      if (!(b > a)) return 0.0;
      double e = p - order;
      double pref = 2.0 * intensity * std::pow(scale, p);
      if (a == 0.0) {
        if (e <= 0.0) return kInf;
        return pref * std::pow(b, e) / e;
      }
      if (std::abs(e) < 1e-14) return pref * std::log(b / a);
      return pref * (std::pow(b, e) - std::pow(a, e)) / e;
    }
  }
  return 0.0;
}

double LevyMeasure1D::tail_mass(double lo, double scale) const {
  switch (kind) {
    case LevyKind::zero:
      return 0.0;
    case LevyKind::compound_poisson: {
      double s = 0.0;
      for (const Atom& a : atoms) {
        if (scale * std::abs(a.mark) > lo) s += a.mass;
      }
      return s;
    }
    case LevyKind::power_law: {
      double a = lo / scale;
      if (a >= z_max) return 0.0;
      if (a <= 0.0) return kInf;
      return 2.0 * intensity / order * (std::pow(a, -order) - std::pow(z_max, -order));
    }
  }
  return 0.0;
}

double LevyMeasure1D::sample_mark(double lo, double scale, double uniform_sign,
                                  double uniform_size) const {
  switch (kind) {
    case LevyKind::zero:
      return 0.0;
    case LevyKind::compound_poisson: {
      double total = tail_mass(lo, scale);
      double target = uniform_size * total;
      double acc = 0.0;
      double last = 0.0;
      for (const Atom& a : atoms) {
        if (scale * std::abs(a.mark) <= lo) continue;
        acc += a.mass;
        last = a.mark;
        if (target < acc) return a.mark;
      }
      return last;
    }
    case LevyKind::power_law: {
      double a = lo / scale;
      double ta = std::pow(a, -order);
      double tb = std::pow(z_max, -order);
      double size = std::pow(ta - uniform_size * (ta - tb), -1.0 / order);
      return uniform_sign < 0.5 ? -size : size;
    }
  }
  return 0.0;
}

double JumpFunction::bound(double z) const { return bound_scale * std::abs(z); }

double JumpFunction::operator()(double x, double z) const {
  if (!(bound(z) > truncation)) return 0.0;
  return amplitude(x, z);
}

JumpFunction truncate_jump(const JumpFunction& jump, double eps) {
  if (eps < 0.0) throw InputError("truncation level must be nonnegative");
  JumpFunction out = jump;
  out.truncation = std::max(jump.truncation, eps);
  return out;
}

double LevyQuadrature::bound(std::size_t q) const { return bound_scale * std::abs(nodes[q]); }

double LevyQuadrature::smallest_node() const {
  double m = kInf;
  for (double z : nodes) m = std::min(m, std::abs(z));
  return m;
}

double LevyQuadrature::bound_moment(double p, double lo, double hi) const {
  double s = 0.0;
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    double j0 = bound(q);
    if (j0 >= lo && j0 < hi) s += weights[q] * std::pow(j0, p);
  }
  return s;
}

double LevyQuadrature::second_moment_below(double eta) const {
  return bound_moment(2.0, 0.0, eta);
}

double LevyQuadrature::module_of_integrability(double eta) const {
  if (measure.kind == LevyKind::power_law) {
    return measure.bound_moment(profile_gamma, 0.0, eta, bound_scale);
  }
  return bound_moment(profile_gamma, 0.0, eta);
}

double LevyQuadrature::integrate(const std::function<double(double)>& g, double lo,
                                 double hi) const {
  double s = 0.0;
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    double j0 = bound(q);
    if (j0 >= lo && j0 < hi) s += weights[q] * g(nodes[q]);
  }
  return s;
}

LevyQuadrature build_quadrature(const LevyMeasure1D& measure, double eta, std::size_t n_nodes,
                                const QuadratureOptions& options) {
  if (!(eta > 0.0)) throw InputError("quadrature split eta must be positive");
  if (n_nodes < 16) throw InputError("quadrature needs at least 16 nodes");
  if (!(options.bound_scale > 0.0)) throw InputError("jump bound scale must be positive");

  LevyQuadrature quad;
  switch (measure.kind) {
    case LevyKind::zero:
      quad.measure = measure;
      break;
    case LevyKind::compound_poisson:
      quad.measure = measure;
      for (const Atom& a : measure.atoms) {
        quad.nodes.push_back(a.mark);
        quad.weights.push_back(a.mass);
      }
      break;
    case LevyKind::power_law: {
      if (measure.order >= 2.0) throw InputError("infinite quadratic small-jump mass");
      if (eta > measure.z_max * options.bound_scale * (1.0 + 1e-12)) {
        throw InputError("quadrature split eta exceeds the support of nu");
      }
      std::size_t n = n_nodes;
      for (;;) {
        quad = power_law_quadrature(measure, eta, n, options);
        double exact = measure.bound_moment(2.0, 0.0, eta, options.bound_scale);
        double approx = quad.second_moment_below(eta);
        if (std::abs(approx - exact) <= options.moment_tolerance * exact) break;
        n *= 2;
        if (n > options.max_nodes) {
          throw NumericalError("quadrature failed to resolve the small-jump second moment");
        }
      }
      break;
    }
  }
  quad.bound_scale = options.bound_scale;
  quad.profile_gamma = options.profile_gamma;
  quad.split = eta;
  std::vector<double> levels = options.breakpoints;
  levels.push_back(eta);
  levels.push_back(1.0);
  quad.breakpoints = merge_edges(levels);
  quad.small_second_moment = quad.second_moment_below(eta);
  quad.integrability_module = quad.module_of_integrability(eta);
  return quad;
}

TruncationReport lambda_norms(const JumpFunction& jump, double eps, const LevyQuadrature& quad,
                              std::span<const double> sample_x) {
  TruncationReport rep;
  rep.eps = eps;
  if (eps <= jump.truncation) return rep;

  bool any_below = false;
  for (std::size_t q = 0; q < quad.size(); ++q) {
    double j0 = quad.bound(q);
    if (j0 > jump.truncation && j0 <= eps) any_below = true;
  }
  if (!any_below) {
    if (quad.measure.kind == LevyKind::power_law) {
      throw InputError("quadrature too coarse for eps");
    }
    return rep;
  }

  std::vector<double> xs(sample_x.begin(), sample_x.end());
  if (jump.state_independent || xs.empty()) xs.assign(1, 0.0);

  double best2 = -1.0;
  double best4 = -1.0;
  for (double x : xs) {
    double s2 = 0.0;
    double s4 = 0.0;
    for (std::size_t q = 0; q < quad.size(); ++q) {
      double j0 = quad.bound(q);
      if (!(j0 > jump.truncation && j0 <= eps)) continue;
      double v = jump.amplitude(x, quad.nodes[q]);
      double v2 = v * v;
      s2 += quad.weights[q] * v2;
      s4 += quad.weights[q] * v2 * v2;
    }
    if (s2 > best2) {
      best2 = s2;
      rep.argmax_x = x;
    }
    best4 = std::max(best4, s4);
  }
  rep.norm2 = std::sqrt(std::max(0.0, best2));
  rep.norm4 = std::pow(std::max(0.0, best4), 0.25);
  rep.lambda = rep.norm2 + rep.norm4;
  return rep;
}

double error_bound(const TruncationReport& report, double lipschitz_f, double fitted_m,
                   double discount, double alpha) {
  if (!(discount > 0.5 * alpha)) throw InputError("discount too small for this alpha");
  if (!(fitted_m >= 0.0)) throw InputError("fitted M must be nonnegative");
  return lipschitz_f * std::sqrt(fitted_m) * report.lambda / (discount - 0.5 * alpha);
}

void attach_error_bound(TruncationReport& report, double lipschitz_f, double fitted_m,
                        double discount, double alpha) {
  report.alpha = alpha;
  report.bound = error_bound(report, lipschitz_f, fitted_m, discount, alpha);
}

}  // namespace impulse_qvi
