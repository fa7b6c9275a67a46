#include "impulse_qvi/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "impulse_qvi/error.hpp"
#include "impulse_qvi/parallel.hpp"

namespace impulse_qvi {

namespace {

using Keys = std::set<std::string>;

void only_keys(const YAML::Node& node, const std::string& where, const Keys& keys) {
  if (!node) return;
  if (!node.IsMap()) throw InputError("section '" + where + "' must be a map");
  for (const auto& kv : node) {
    auto k = kv.first.as<std::string>();
    if (!keys.count(k)) throw InputError("unknown key '" + k + "' in '" + where + "'");
  }
}

template <class T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where) {
  if (!node || !node[key]) return;
  try {
    out = node[key].as<T>();
  } catch (const YAML::Exception&) {
    throw InputError("bad value for '" + where + "." + key + "'");
  }
}

void read_list(const YAML::Node& node, const char* key, std::vector<double>& out,
               const std::string& where) {
  if (!node || !node[key]) return;
  try {
    out = node[key].as<std::vector<double>>();
  } catch (const YAML::Exception&) {
    throw InputError("'" + where + "." + key + "' must be a list of numbers");
  }
}

/// Accepts `key: name` or `key: {name: ..., params: {...}}`.
void read_choice(const YAML::Node& node, const char* key, CoefficientChoice& out,
                 const std::string& where) {
  if (!node || !node[key]) return;
  const YAML::Node c = node[key];
  const std::string path = where + "." + key;
  try {
    if (c.IsScalar()) {
      out = {c.as<std::string>(), {}};
      return;
    }
    only_keys(c, path, {"name", "params"});
    if (!c["name"]) throw InputError("'" + path + "' needs a name");
    out.name = c["name"].as<std::string>();
    out.params.clear();
    if (c["params"]) {
      if (!c["params"].IsMap()) throw InputError("'" + path + ".params' must be a map");
      for (const auto& kv : c["params"]) {
        out.params[kv.first.as<std::string>()] = kv.second.as<double>();
      }
    }
  } catch (const YAML::Exception&) {
    throw InputError("bad coefficient choice '" + path + "'");
  }
}

void read_sim(const YAML::Node& node, SimConfig& sim, const std::string& where) {
  read(node, "horizon", sim.horizon, where);
  read(node, "dt", sim.dt, where);
  read(node, "paths", sim.paths, where);
  read(node, "seed", sim.seed, where);
  read(node, "delta_sim", sim.delta_sim, where);
  read(node, "record_stride", sim.record_stride, where);
  read(node, "max_impulses", sim.max_impulses, where);
  if (node && node["mode"]) {
    auto m = node["mode"].as<std::string>();
    if (m == "compensate_drift") {
      sim.mode = CompensationMode::compensate_drift;
    } else if (m == "diffusion_surrogate") {
      sim.mode = CompensationMode::diffusion_surrogate;
    } else {
      throw InputError("unknown simulation mode '" + m + "'");
    }
  }
}

const Keys kProfileKeys = {"lipschitz_drift", "lipschitz_volatility", "lipschitz_cost",
                           "gamma",           "integrability",        "nondegeneracy",
                           "jacobian_lower",  "jacobian_upper",       "jump_regularity",
                           "ellipticity",     "transaction_floor",    "slack"};

}  // namespace

ProblemSpec RunConfig::problem() const { return make_problem(choices, levy, discount); }

AssumptionProfile RunConfig::profile(const ProblemSpec& spec) const {
  AssumptionProfile p = default_profile(spec);
  for (const auto& [k, v] : assumption_overrides) {
    if (k == "lipschitz_drift") p.lipschitz_drift = v;
    else if (k == "lipschitz_volatility") p.lipschitz_volatility = v;
    else if (k == "lipschitz_cost") p.lipschitz_cost = v;
    else if (k == "gamma") p.gamma = v;
    else if (k == "integrability") p.integrability = v;
    else if (k == "nondegeneracy") p.nondegeneracy = v;
    else if (k == "jacobian_lower") p.jacobian_lower = v;
    else if (k == "jacobian_upper") p.jacobian_upper = v;
    else if (k == "jump_regularity") p.jump_regularity = v;
    else if (k == "ellipticity") p.ellipticity = v;
    else if (k == "transaction_floor") p.transaction_floor = v;
    else if (k == "slack") p.slack = v;
  }
  return p;
}

LevyQuadrature RunConfig::quadrature(const ProblemSpec& spec,
                                     const AssumptionProfile& profile) const {
  QuadratureOptions opt;
  opt.bound_scale = spec.jump.bound_scale;
  opt.profile_gamma = profile.gamma;
  opt.breakpoints = verify.eps_list;
  opt.breakpoints.insert(opt.breakpoints.end(), verify.coupling_eps.begin(),
                         verify.coupling_eps.end());
  opt.breakpoints.push_back(simulate.delta_sim);
  opt.breakpoints.push_back(verify.coupling.delta_sim);
  return build_quadrature(levy, quad_eta, quad_nodes, opt);
}

std::string RunConfig::hash() const { return fnv1a_hex(text); }

RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw InputError(std::string("config does not parse: ") + e.what());
  }
  if (!root.IsMap()) throw InputError("config must be a map of sections");
  only_keys(root, "config",
            {"model", "levy", "costs", "assumptions", "grid", "solve", "simulate", "verify"});

  RunConfig cfg = reference_config();
  try {
    const YAML::Node model = root["model"];
    only_keys(model, "model", {"dimension", "discount", "drift", "volatility", "jump"});
    int dim = 1;
    read(model, "dimension", dim, "model");
    if (dim != 1) throw InputError("only dimension 1 is supported");
    read(model, "discount", cfg.discount, "model");
    read_choice(model, "drift", cfg.choices.drift, "model");
    read_choice(model, "volatility", cfg.choices.volatility, "model");
    read_choice(model, "jump", cfg.choices.jump, "model");

    const YAML::Node levy = root["levy"];
    only_keys(levy, "levy", {"kind", "c", "gamma", "z_max", "atoms", "eta", "n_nodes"});
    if (levy) {
      std::string kind = "power_law";
      read(levy, "kind", kind, "levy");
      if (kind == "zero") {
        cfg.levy = LevyMeasure1D{};
      } else if (kind == "power_law") {
        double c = cfg.levy.intensity, g = cfg.levy.order, zm = cfg.levy.z_max;
        read(levy, "c", c, "levy");
        read(levy, "gamma", g, "levy");
        read(levy, "z_max", zm, "levy");
        cfg.levy = LevyMeasure1D::power_law(c, g, zm);
      } else if (kind == "compound_poisson") {
        std::vector<Atom> atoms;
        if (!levy["atoms"] || !levy["atoms"].IsSequence()) {
          throw InputError("compound_poisson needs an atoms list of [mark, mass]");
        }
        for (const auto& a : levy["atoms"]) {
          auto pair = a.as<std::vector<double>>();
          if (pair.size() != 2) throw InputError("each atom is [mark, mass]");
          atoms.push_back({pair[0], pair[1]});
        }
        cfg.levy = LevyMeasure1D::compound_poisson(atoms);
      } else {
        throw InputError("unknown levy kind '" + kind + "'");
      }
      read(levy, "eta", cfg.quad_eta, "levy");
      read(levy, "n_nodes", cfg.quad_nodes, "levy");
    }

    const YAML::Node costs = root["costs"];
    only_keys(costs, "costs", {"running", "transaction"});
    read_choice(costs, "running", cfg.choices.running_cost, "costs");
    read_choice(costs, "transaction", cfg.choices.transaction_cost, "costs");

    const YAML::Node as = root["assumptions"];
    Keys akeys = kProfileKeys;
    akeys.insert("sampling");
    only_keys(as, "assumptions", akeys);
    if (as) {
      for (const auto& kv : as) {
        auto k = kv.first.as<std::string>();
        if (k == "sampling") continue;
        cfg.assumption_overrides[k] = kv.second.as<double>();
      }
      const YAML::Node s = as["sampling"];
      only_keys(s, "assumptions.sampling", {"lower", "upper", "points", "seed"});
      read(s, "lower", cfg.sampling.lower, "assumptions.sampling");
      read(s, "upper", cfg.sampling.upper, "assumptions.sampling");
      read(s, "points", cfg.sampling.points, "assumptions.sampling");
      read(s, "seed", cfg.sampling.seed, "assumptions.sampling");
    }

    const YAML::Node grid = root["grid"];
    only_keys(grid, "grid", {"lower", "upper", "n"});
    double lo = cfg.grid.lower, hi = cfg.grid.upper;
    std::size_t n = cfg.grid.n;
    read(grid, "lower", lo, "grid");
    read(grid, "upper", hi, "grid");
    read(grid, "n", n, "grid");
    cfg.grid = Grid1D::make(lo, hi, n);

    const YAML::Node solve = root["solve"];
    only_keys(solve, "solve",
              {"tol_outer", "tol_inner", "max_outer", "eps", "solver", "rho", "slope_cap"});
    read(solve, "tol_outer", cfg.solve.tol_outer, "solve");
    read(solve, "tol_inner", cfg.solve.tol_inner, "solve");
    read(solve, "max_outer", cfg.solve.max_outer, "solve");
    read(solve, "eps", cfg.solve.eps, "solve");
    read(solve, "rho", cfg.solve.rho, "solve");
    read(solve, "slope_cap", cfg.solve.slope_cap, "solve");
    if (solve && solve["solver"]) {
      auto s = solve["solver"].as<std::string>();
      if (s == "policy_iteration") {
        cfg.solve.solver = ObstacleSolver::policy_iteration;
      } else if (s == "penalization") {
        cfg.solve.solver = ObstacleSolver::penalization;
      } else {
        throw InputError("unknown obstacle solver '" + s + "'");
      }
    }

    const YAML::Node sim = root["simulate"];
    only_keys(sim, "simulate",
              {"horizon", "dt", "paths", "seed", "delta_sim", "mode", "record_stride",
               "max_impulses", "x0"});
    read_sim(sim, cfg.simulate, "simulate");
    read(sim, "x0", cfg.x0, "simulate");

    const YAML::Node ver = root["verify"];
    only_keys(ver, "verify",
              {"lipschitz_factor", "eps_list", "alphas", "coupling_eps", "coupling_alpha",
               "coupling_x0", "coupling", "etas", "ps", "lp_window", "slack", "holder_alpha",
               "holder_function", "holder_windows", "semiconcavity_radius", "mc_points"});
    VerifyConfig& v = cfg.verify;
    read(ver, "lipschitz_factor", v.lipschitz_factor, "verify");
    read_list(ver, "eps_list", v.eps_list, "verify");
    read_list(ver, "alphas", v.alphas, "verify");
    read_list(ver, "coupling_eps", v.coupling_eps, "verify");
    read(ver, "coupling_alpha", v.coupling_alpha, "verify");
    read(ver, "coupling_x0", v.coupling_x0, "verify");
    if (ver && ver["coupling"]) {
      only_keys(ver["coupling"], "verify.coupling",
                {"horizon", "dt", "paths", "seed", "delta_sim", "mode", "record_stride",
                 "max_impulses"});
      read_sim(ver["coupling"], v.coupling, "verify.coupling");
    }
    read_list(ver, "etas", v.etas, "verify");
    read_list(ver, "ps", v.ps, "verify");
    read(ver, "lp_window", v.lp_window, "verify");
    read(ver, "slack", v.slack, "verify");
    read(ver, "holder_alpha", v.holder_alpha, "verify");
    read(ver, "holder_function", v.holder_function, "verify");
    test_function(v.holder_function);
    if (ver && ver["holder_windows"]) {
      v.holder_windows.clear();
      for (const auto& w : ver["holder_windows"]) {
        auto pair = w.as<std::vector<double>>();
        if (pair.size() != 2 || !(pair[0] < pair[1])) {
          throw InputError("each holder window is [lower, upper] with lower < upper");
        }
        v.holder_windows.push_back({pair[0], pair[1]});
      }
    }
    read(ver, "semiconcavity_radius", v.semiconcavity_radius, "verify");
    read_list(ver, "mc_points", v.mc_points, "verify");
  } catch (const YAML::Exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  if (!(cfg.verify.slack >= 0.0 && cfg.verify.slack <= 0.05)) {
    throw InputError("verify.slack must lie in [0, 0.05]");
  }
  cfg.simulate.validate();
  cfg.text = YAML::Dump(root);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

RunConfig reference_config() {
  RunConfig cfg;
  ProblemSpec ref = reference_problem();
  cfg.choices = ref.choices;
  cfg.levy = ref.levy;
  cfg.discount = ref.discount;
  cfg.sampling.lower = -10.0;
  cfg.sampling.upper = 10.0;
  cfg.sampling.points = 64;
  cfg.grid = Grid1D::make(-10.0, 10.0, 801);
  cfg.simulate.horizon = 10.0;
  cfg.simulate.dt = 1e-2;
  cfg.simulate.paths = 20000;
  cfg.simulate.delta_sim = 0.25;
  cfg.simulate.mode = CompensationMode::diffusion_surrogate;
  cfg.verify.coupling.horizon = 2.0;
  cfg.verify.coupling.dt = 1e-3;
  cfg.verify.coupling.paths = 4000;
  cfg.verify.coupling.delta_sim = 0.06;
  cfg.verify.coupling.mode = CompensationMode::diffusion_surrogate;
  cfg.text = "reference";
  return cfg;
}

}  // namespace impulse_qvi
