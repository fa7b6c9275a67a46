#include "artifacts.hpp"

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "impulse_qvi/error.hpp"

namespace impulse_qvi::cli {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open '" + path + "' for writing");
  return os;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string utc_now() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_value_field(const std::string& path, const QviSolution& sol) {
  std::ofstream os = open_out(path);
  os << "x,u,Mu,region,xi_star,Au_minus_f\n";
  const Grid1D& g = sol.u.grid;
  for (std::size_t i = 0; i < g.n; ++i) {
    os << format_double(g.x(i)) << ',' << format_double(sol.u.values[i]) << ','
       << format_double(sol.mu.mu.values[i]) << ',' << (sol.policy.continuation[i] ? 'C' : 'A')
       << ',' << format_double(sol.policy.continuation[i] ? 0.0 : sol.policy.xi_star[i]) << ','
       << format_double(sol.residual[i]) << '\n';
  }
}

void write_trace(const std::string& path, const std::vector<IterationRecord>& trace) {
  std::ofstream os = open_out(path);
  os << "iteration,delta,max_increase,inner,stopped\n";
  for (const IterationRecord& r : trace) {
    os << r.iteration << ',' << format_double(r.delta) << ',' << format_double(r.max_increase)
       << ',' << r.inner << ',' << r.stopped << '\n';
  }
}

void write_paths(const std::string& path, const PathEnsemble& ens) {
  std::ofstream os = open_out(path);
  os << "path,terminal,impulses,cost\n";
  for (std::size_t p = 0; p < ens.cost.size(); ++p) {
    os << p << ',' << format_double(ens.terminal[p]) << ',' << ens.impulses[p].size() << ','
       << format_double(ens.cost[p]) << '\n';
  }
}

void write_sweep(const std::string& path, const std::vector<SweepRow>& rows) {
  std::ofstream os = open_out(path);
  os << "eps,lambda,C_eps,diff_next,best_alpha\n";
  for (const SweepRow& r : rows) {
    os << format_double(r.eps) << ',' << format_double(r.lambda) << ',' << format_double(r.bound)
       << ',' << format_double(r.diff_next) << ',' << format_double(r.best_alpha) << '\n';
  }
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == name) return k;
  }
  throw InputError("CSV has no column '" + name + "'");
}

std::vector<double> CsvTable::numbers(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    const char* s = row[c].c_str();
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(s, &end);
    if (end == s || *end != '\0' || errno == ERANGE) {
      throw InputError("CSV column '" + name + "' holds a non-number '" + row[c] + "'");
    }
    out.push_back(v);
  }
  return out;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("missing CSV '" + path + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw InputError("empty CSV '" + path + "'");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != t.header.size()) throw InputError("ragged CSV '" + path + "'");
    t.rows.push_back(std::move(row));
  }
  if (t.rows.empty()) throw InputError("CSV '" + path + "' has no rows");
  return t;
}

nlohmann::json to_json(const VerificationReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["inputs_hash"] = r.inputs_hash;
  j["measured"] = r.measured;
  j["bound"] = r.bound;
  j["margin"] = std::isfinite(r.margin) ? nlohmann::json(r.margin) : nlohmann::json("inf");
  j["pass"] = r.pass;
  j["runtime_seconds"] = r.runtime_seconds;
  j["detail"] = r.detail;
  nlohmann::json m = nlohmann::json::object();
  for (const auto& [k, v] : r.metrics) m[k] = v;
  j["metrics"] = m;
  return j;
}

}  // namespace impulse_qvi::cli
