#pragma once

// CSV datasets, chain files, run configuration and summary tables.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "abundance/data.hpp"
#include "abundance/mcmc.hpp"
#include "abundance/priors.hpp"
#include "abundance/sim_study.hpp"

namespace abundance::io {

namespace fs = std::filesystem;

/// Columns: year, day, size_class, catch, recaptures, then x_* (day
/// covariates, shared by classes) and z_* (year covariates, constant within a
/// year). Intercepts are implicit. Every (year, day, class) must appear once.
/// Errors are ValidationError carrying "source:line".
CRDataset parse_cr_csv(std::istream& in, const std::string& source = "<input>");
CRDataset ingest_cr_csv(const fs::path& path);

/// Columns: year, day, size_class, count, effort_hours, x_*, z_*.
CPUEDataset parse_cpue_csv(std::istream& in, const std::string& source = "<input>");
CPUEDataset ingest_cpue_csv(const fs::path& path);

/// Every *.csv in `dir`, keyed by file stem.
std::map<std::string, CPUEDataset> ingest_cpue_dir(const fs::path& dir);

void write_cr_csv(std::ostream& out, const CRDataset& data);
void write_cpue_csv(std::ostream& out, const CPUEDataset& data);

/// temp minus the mean temperature of the same calendar day across years.
/// Dates are ISO "YYYY-MM-DD".
std::vector<double> relative_temperature(const std::vector<std::string>& dates,
                                         const std::vector<double>& temps);

/// Chain file: one "# {json}" header line, a column line, then
/// "iteration,parameter,index,value" rows with 17 significant digits.
void write_chains(std::ostream& out, const PosteriorChains& chains);
PosteriorChains read_chains(std::istream& in, const std::string& source = "<input>");
void save_chains(const fs::path& path, const PosteriorChains& chains);
PosteriorChains load_chains(const fs::path& path);

/// Per-parameter posterior mean and 95% interval, then acceptance rates.
void write_summary_csv(std::ostream& out, const PosteriorChains& chains);

/// Writes through a sibling temporary file and renames it into place.
void atomic_write(const fs::path& path, const std::function<void(std::ostream&)>& body);

struct SimSettings {
  std::string scenario = "I";
  std::string preset = "desk";
  std::optional<int> replicates;
  std::optional<int> days;
};

/// Command settings from a JSON file. Unknown keys are rejected. Input paths
/// and the seed have no default.
struct RunConfig {
  std::optional<fs::path> data;
  std::optional<fs::path> cr_chains;
  std::optional<fs::path> out;
  std::optional<std::uint64_t> seed;
  McmcConfig mcmc;
  Priors priors;
  std::optional<std::string> coefficient_map;
  SimSettings sim;
};

RunConfig parse_run_config(const std::string& json_text, const std::string& source = "<config>");
RunConfig load_run_config(const fs::path& path);

/// One row per class with the replicate's metrics (status column marks
/// failures).
void write_replicate_csv(std::ostream& out, const sim::ReplicateResult& result, int n_classes);

/// One row per scenario: MAD, N coverage and U coverage per class and
/// method, plus completed and failed counts.
void write_scenario_summary_csv(std::ostream& out, const std::vector<sim::ScenarioSummary>& rows);

/// Truth table written by `simulate`: year, size_class, N.
void write_truth_csv(std::ostream& out, const std::vector<int>& years, const Eigen::MatrixXd& truth);
Eigen::MatrixXd read_truth_csv(const fs::path& path, std::vector<int>* years = nullptr);

/// %.17g
std::string format_double(double v);

}  // namespace abundance::io
