#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "artifacts.hpp"
#include "impulse_qvi/error.hpp"
#include "impulse_qvi/experiments.hpp"
#include "plot.hpp"

#ifndef IMPULSE_QVI_VERSION
#define IMPULSE_QVI_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace impulse_qvi;
using namespace impulse_qvi::cli;

namespace {

constexpr int kOk = 0;
constexpr int kInput = 2;
constexpr int kNumerical = 3;
constexpr int kVerification = 4;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<double> eps;
  std::string out = "out";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "YAML run configuration (reference instance if omitted)");
  cmd->add_option("--seed", c.seed, "Master seed for simulation and coupling");
  cmd->add_option("--eps", c.eps, "Truncation levels (comma separated)")->delimiter(',');
  cmd->add_option("--out", c.out, "Output directory");
}

RunConfig load(const Common& c) {
  RunConfig cfg = c.config.empty() ? reference_config() : load_config(c.config);
  if (c.seed) {
    cfg.simulate.seed = *c.seed;
    cfg.verify.coupling.seed = *c.seed;
  }
  return cfg;
}

std::string prepare_out(const Common& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw InputError("cannot create output directory '" + c.out + "'");
  return c.out;
}

json base_manifest(const std::string& command, const RunConfig& cfg, const std::string& started) {
  json m;
  m["command"] = command;
  m["toolkit_version"] = IMPULSE_QVI_VERSION;
  m["config_hash"] = cfg.hash();
  m["config"] = cfg.text;
  m["seed"] = cfg.simulate.seed;
  m["started_at"] = started;
  m["outputs"] = json::object();
  return m;
}

void finish_manifest(json& m, const std::string& dir, const std::string& verdict) {
  m["finished_at"] = utc_now();
  m["verdict"] = verdict;
  std::ofstream os(dir + "/manifest.json");
  if (!os) throw InputError("cannot write manifest in '" + dir + "'");
  os << m.dump(2) << '\n';
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

int cmd_solve(const Common& c, bool dump_operator) {
  const std::string started = utc_now();
  RunConfig cfg = load(c);
  if (!c.eps.empty()) cfg.solve.eps = c.eps.front();
  const std::string dir = prepare_out(c);
  ExperimentContext ctx(cfg);
  const QviSolution& sol = ctx.solution();

  json m = base_manifest("solve", cfg, started);
  write_value_field(dir + "/value_field.csv", sol);
  write_trace(dir + "/trace.csv", sol.trace);
  m["outputs"]["value_field"] = dir + "/value_field.csv";
  m["outputs"]["trace"] = dir + "/trace.csv";
  if (dump_operator) {
    sol.op.write_csv(dir + "/operator.csv");
    m["outputs"]["operator"] = dir + "/operator.csv";
  }

  m["grid"] = {{"lower", cfg.grid.lower}, {"upper", cfg.grid.upper}, {"n", cfg.grid.n}};
  m["eps"] = cfg.solve.eps;
  m["iterations"] = sol.trace.size();
  m["residuals"] = {{"r1", sol.audit.continuation},
                    {"r2", sol.audit.obstacle},
                    {"r3", sol.audit.action}};
  m["monotone"] = sol.monotone;
  m["penalized"] = sol.penalized;
  m["warnings"] = sol.warnings;
  m["action_nodes"] = sol.policy.action_count();
  m["target_violations"] = sol.policy.target_violations;
  m["xi_edge_hits"] = sol.mu.edge_hits;
  m["beta"] = ctx.constants().beta;

  VerificationReport lip = verify_lipschitz_u(sol.u, ctx.value_lipschitz(),
                                              cfg.verify.lipschitz_factor);
  m["lipschitz_check"] = to_json(lip);
  m["C_u"] = finite_or_null(ctx.value_lipschitz());

  json lam = json::array();
  std::vector<double> xs = cfg.grid.nodes();
  for (double e : cfg.verify.eps_list) {
    TruncationReport tr = lambda_norms(ctx.spec().jump, e, ctx.quadrature(), xs);
    lam.push_back({{"eps", e}, {"lambda", tr.lambda}, {"norm2", tr.norm2}, {"norm4", tr.norm4}});
  }
  m["lambda_table"] = lam;

  AssumptionReport ar =
      check_assumptions(ctx.spec(), ctx.profile(), ctx.quadrature(), cfg.sampling);
  json hyp = json::array();
  for (const HypothesisResult& h : ar.results) {
    hyp.push_back({{"id", h.id},
                   {"pass", h.pass},
                   {"measured", finite_or_null(h.measured)},
                   {"declared", finite_or_null(h.declared)},
                   {"note", h.note}});
  }
  m["assumptions"] = hyp;
  DiscountReport dr = check_discount_rate(ctx.constants(), ctx.spec().discount);
  m["discount"] = {{"lipschitz_pass", dr.lipschitz_pass}, {"note", dr.note}};

  finish_manifest(m, dir, lip.pass ? "ok" : "lipschitz check failed");
  std::cout << "solved " << cfg.grid.n << " nodes in " << sol.trace.size()
            << " outer iterations; action nodes " << sol.policy.action_count() << "; r1 "
            << sol.audit.continuation << " r2 " << sol.audit.obstacle << " r3 "
            << sol.audit.action << '\n';
  return kOk;
}

int cmd_simulate(const Common& c, bool no_policy, std::optional<double> x0) {
  const std::string started = utc_now();
  RunConfig cfg = load(c);
  const std::string dir = prepare_out(c);
  ExperimentContext ctx(cfg);
  const ImpulsePolicy* policy = no_policy ? nullptr : &ctx.solution().policy;
  const double start = x0.value_or(cfg.x0);
  PathEnsemble ens = simulate_paths(ctx.spec(), ctx.quadrature(), cfg.simulate, policy, start);
  write_paths(dir + "/paths.csv", ens);

  double mean = 0.0;
  for (double v : ens.cost) mean += v;
  mean /= static_cast<double>(ens.cost.size());
  double var = 0.0;
  for (double v : ens.cost) var += (v - mean) * (v - mean);
  var /= static_cast<double>(std::max<std::size_t>(1, ens.cost.size() - 1));

  json m = base_manifest("simulate", cfg, started);
  m["outputs"]["paths"] = dir + "/paths.csv";
  m["x0"] = start;
  m["policy"] = no_policy ? "none" : "solver";
  m["paths"] = ens.cost.size();
  m["mean_cost"] = mean;
  m["clt_half_width"] = 1.96 * std::sqrt(var / static_cast<double>(ens.cost.size()));
  m["jump_intensity"] = ens.jump_intensity;
  finish_manifest(m, dir, "ok");
  std::cout << "simulated " << ens.cost.size() << " paths; mean discounted cost " << mean << '\n';
  return kOk;
}

int cmd_sweep(const Common& c) {
  const std::string started = utc_now();
  RunConfig cfg = load(c);
  if (!c.eps.empty()) cfg.verify.eps_list = c.eps;
  const std::string dir = prepare_out(c);
  ExperimentContext ctx(cfg);
  UniformConvergence uc = verify_uniform_convergence(
      ctx.spec(), cfg.grid, ctx.quadrature(), cfg.verify.eps_list, ctx.fitted_rates(),
      ctx.constants().beta, ctx.profile().lipschitz_cost, ctx.solve_config());
  write_sweep(dir + "/sweep.csv", uc.rows);

  json m = base_manifest("sweep", cfg, started);
  m["outputs"]["sweep"] = dir + "/sweep.csv";
  m["report"] = to_json(uc.report);
  finish_manifest(m, dir, uc.report.pass ? "pass" : "fail");
  std::cout << "eps,lambda,C_eps,diff_next\n";
  for (const SweepRow& r : uc.rows) {
    std::cout << r.eps << ',' << r.lambda << ',' << r.bound << ',' << r.diff_next << '\n';
  }
  return uc.report.pass ? kOk : kVerification;
}

int cmd_verify(const Common& c, const std::vector<std::string>& selected) {
  const std::string started = utc_now();
  RunConfig cfg = load(c);
  const std::string dir = prepare_out(c);
  json m = base_manifest("verify", cfg, started);
  json reports = json::array();
  bool all = true;
  if (!selected.empty()) {
    ExperimentContext ctx(cfg);
    for (const std::string& name : selected) {
      VerificationReport r = run_experiment(ctx, name);
      all = all && r.pass;
      reports.push_back(to_json(r));
      std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    }
  }
  {
    std::ofstream os(dir + "/report.json");
    if (!os) throw InputError("cannot write report in '" + dir + "'");
    os << reports.dump(2) << '\n';
  }
  m["outputs"]["report"] = dir + "/report.json";
  m["experiments"] = selected;
  finish_manifest(m, dir, all ? "pass" : "fail");
  return all ? kOk : kVerification;
}

int cmd_plot(const std::string& manifest_path, const std::string& out) {
  std::ifstream in(manifest_path);
  if (!in) throw InputError("missing manifest '" + manifest_path + "'");
  json m;
  try {
    in >> m;
  } catch (const json::exception&) {
    throw InputError("manifest '" + manifest_path + "' is not valid JSON");
  }
  const std::string dir = out.empty() ? fs::path(manifest_path).parent_path().string() : out;
  auto output = [&](const char* key) -> std::string {
    if (!m.contains("outputs") || !m["outputs"].contains(key)) {
      throw InputError(std::string("manifest lists no '") + key + "' output");
    }
    return m["outputs"][key].get<std::string>();
  };

  CsvTable vf = read_csv(output("value_field"));
  std::vector<double> x = vf.numbers("x");
  Chart overlay;
  overlay.title = "value function and intervention operator";
  overlay.xlabel = "x";
  overlay.ylabel = "value";
  overlay.series.push_back({"u", x, vf.numbers("u"), "#1f77b4", false, false});
  overlay.series.push_back({"Mu", x, vf.numbers("Mu"), "#d62728", true, false});
  const std::size_t rc = vf.column("region");
  const double h = x.size() > 1 ? x[1] - x[0] : 0.0;
  for (std::size_t i = 0; i < vf.rows.size();) {
    if (vf.rows[i][rc] != "A") {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < vf.rows.size() && vf.rows[j + 1][rc] == "A") ++j;
    overlay.shaded.emplace_back(x[i] - 0.5 * h, x[j] + 0.5 * h);
    i = j + 1;
  }
  write_svg(dir + "/value_field.svg", overlay);

  CsvTable tr = read_csv(output("trace"));
  Chart trace;
  trace.title = "outer iteration";
  trace.xlabel = "iteration";
  trace.ylabel = "sup-norm step";
  trace.logy = true;
  trace.series.push_back({"||u_k+1 - u_k||", tr.numbers("iteration"), tr.numbers("delta"),
                          "#2ca02c", false, true});
  write_svg(dir + "/trace.svg", trace);

  Chart conv;
  conv.title = "truncation convergence";
  conv.xlabel = "eps";
  conv.ylabel = "size";
  conv.logx = true;
  conv.logy = true;
  if (m.contains("lambda_table")) {
    Series lam{"Lambda(eps)", {}, {}, "#9467bd", false, true};
    for (const auto& row : m["lambda_table"]) {
      lam.x.push_back(row["eps"].get<double>());
      lam.y.push_back(row["lambda"].get<double>());
    }
    conv.series.push_back(lam);
  }
  if (m.contains("outputs") && m["outputs"].contains("sweep")) {
    CsvTable sw = read_csv(output("sweep"));
    conv.series.push_back({"C(eps)", sw.numbers("eps"), sw.numbers("C_eps"), "#d62728", true, true});
    conv.series.push_back(
        {"||u_eps - u_next||", sw.numbers("eps"), sw.numbers("diff_next"), "#1f77b4", false, true});
  }
  write_svg(dir + "/convergence.svg", conv);
  std::cout << "wrote value_field.svg, trace.svg, convergence.svg to " << dir << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Impulse control QVI toolkit for jump diffusions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", IMPULSE_QVI_VERSION);

  Common solve_opts, sim_opts, sweep_opts, verify_opts;
  bool dump_operator = false;
  auto* solve = app.add_subcommand("solve", "Solve the discrete QVI and write the value field");
  add_common(solve, solve_opts);
  solve->add_flag("--dump-operator", dump_operator, "Also write the assembled A and g");

  bool no_policy = false;
  std::optional<double> x0;
  auto* sim = app.add_subcommand("simulate", "Simulate the controlled SDE under the solver policy");
  add_common(sim, sim_opts);
  sim->add_flag("--no-policy", no_policy, "Never intervene");
  sim->add_option("--x0", x0, "Initial state (simulate.x0 otherwise)");

  auto* sweep = app.add_subcommand("sweep", "Solve over an eps list and tabulate convergence");
  add_common(sweep, sweep_opts);

  std::string experiments;
  std::map<std::string, bool> flags;
  for (const std::string& n : experiment_names()) flags[n] = false;
  auto* verify = app.add_subcommand("verify", "Run verification experiments");
  add_common(verify, verify_opts);
  auto* experiments_opt =
      verify->add_option("--experiments", experiments,
                         "Comma-separated experiment names; empty selects none")
          ->expected(0, 1);
  for (const std::string& n : experiment_names()) {
    verify->add_flag("--" + n, flags[n], "Select the " + n + " experiment");
  }

  std::string manifest;
  std::string plot_out;
  auto* plot = app.add_subcommand("plot", "Render SVG figures from a run manifest");
  plot->add_option("manifest", manifest, "manifest.json written by solve")->required();
  plot->add_option("--out", plot_out, "Output directory (manifest directory otherwise)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  try {
    if (*solve) return cmd_solve(solve_opts, dump_operator);
    if (*sim) return cmd_simulate(sim_opts, no_policy, x0);
    if (*sweep) return cmd_sweep(sweep_opts);
    if (*verify) {
      std::vector<std::string> selected;
      const bool listed = experiments_opt->count() > 0;
      if (listed) {
        std::stringstream ss(experiments);
        std::string item;
        while (std::getline(ss, item, ',')) {
          if (!item.empty()) selected.push_back(item);
        }
      }
      for (const std::string& n : experiment_names()) {
        if (flags[n] && std::find(selected.begin(), selected.end(), n) == selected.end()) {
          selected.push_back(n);
        }
      }
      bool any_flag = std::any_of(flags.begin(), flags.end(), [](const auto& kv) { return kv.second; });
      if (!listed && !any_flag) selected = experiment_names();
      for (const std::string& n : selected) {
        if (std::find(experiment_names().begin(), experiment_names().end(), n) ==
            experiment_names().end()) {
          throw InputError("unknown experiment '" + n + "'");
        }
      }
      return cmd_verify(verify_opts, selected);
    }
    if (*plot) return cmd_plot(manifest, plot_out);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
  return kInput;
}
