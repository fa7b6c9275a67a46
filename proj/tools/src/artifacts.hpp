#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "impulse_qvi/qvi.hpp"
#include "impulse_qvi/simulate.hpp"
#include "impulse_qvi/verify.hpp"

namespace impulse_qvi::cli {

/// Columns x, u, Mu, region (C or A), xi_star, Au_minus_f.
void write_value_field(const std::string& path, const QviSolution& sol);
void write_trace(const std::string& path, const std::vector<IterationRecord>& trace);
/// One row per path: path, terminal, impulses, cost.
void write_paths(const std::string& path, const PathEnsemble& ens);
void write_sweep(const std::string& path, const std::vector<SweepRow>& rows);

/// Header plus rows of fields. Throws InputError when the file is missing,
/// empty or ragged.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
  std::vector<double> numbers(const std::string& name) const;
};
CsvTable read_csv(const std::string& path);

std::string format_double(double v);
std::string utc_now();

nlohmann::json to_json(const VerificationReport& r);

}  // namespace impulse_qvi::cli
