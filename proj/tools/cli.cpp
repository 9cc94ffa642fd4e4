#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "abundance/cpue_naive.hpp"
#include "abundance/cpue_transfer.hpp"
#include "abundance/cr_model.hpp"
#include "abundance/errors.hpp"
#include "abundance/io.hpp"
#include "abundance/plot.hpp"
#include "abundance/sim_study.hpp"
#include "abundance/trend.hpp"

namespace abundance::cli {

namespace {

namespace fs = std::filesystem;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string data;
  std::string cr_chains;
  std::string coefficient_map;
  std::string scenario;
  std::string preset;
  std::optional<int> replicates;
  std::optional<int> days;
  std::string truth;
  std::string naive_chains;
  std::string transfer_chains;
  std::vector<std::string> chains;
};

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

io::RunConfig settings(const Flags& f) {
  io::RunConfig rc = f.config.empty() ? io::RunConfig{} : io::load_run_config(f.config);
  if (f.seed) rc.seed = f.seed;
  if (!f.out.empty()) rc.out = f.out;
  if (!f.data.empty()) rc.data = f.data;
  if (!f.cr_chains.empty()) rc.cr_chains = f.cr_chains;
  if (!f.coefficient_map.empty()) rc.coefficient_map = f.coefficient_map;
  if (!f.scenario.empty()) rc.sim.scenario = f.scenario;
  if (!f.preset.empty()) rc.sim.preset = f.preset;
  if (f.replicates) rc.sim.replicates = f.replicates;
  if (f.days) rc.sim.days = f.days;
  if (!rc.out) rc.out = "out";
  return rc;
}

std::uint64_t need_seed(const io::RunConfig& rc) {
  if (!rc.seed) throw Usage("a seed is required (--seed or \"seed\" in the config)");
  return *rc.seed;
}

fs::path need_data(const io::RunConfig& rc) {
  if (!rc.data) throw Usage("an input dataset is required (--data or \"data\" in the config)");
  return *rc.data;
}

int workers() {
  if (const char* env = std::getenv("ABUNDANCE_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void write_fit(const fs::path& dir, const std::string& prefix, const PosteriorChains& chains, std::ostream& out) {
  io::save_chains(dir / (prefix + "_chains.csv"), chains);
  io::atomic_write(dir / (prefix + "_summary.csv"), [&](std::ostream& o) { io::write_summary_csv(o, chains); });
  out << "wrote " << (dir / (prefix + "_chains.csv")).string() << " and " << prefix << "_summary.csv\n";
  for (const auto& [name, rate] : chains.acceptance) out << "  acceptance " << name << " = " << rate << '\n';
}

sim::ScenarioSpec scenario_from(const io::RunConfig& rc) {
  auto spec = sim::scenario_spec(sim::parse_scenario(rc.sim.scenario));
  sim::apply_preset(spec, sim::parse_preset(rc.sim.preset));
  if (rc.sim.replicates) spec.replicates = *rc.sim.replicates;
  if (rc.sim.days) spec.days.assign(static_cast<std::size_t>(spec.years), *rc.sim.days);
  return spec;
}

int cmd_simulate(const Flags& f, std::ostream& out) {
  const auto rc = settings(f);
  const auto seed = need_seed(rc);
  auto spec = scenario_from(rc);
  spec.seed = seed;
  sim::validate(spec);
  const stats::RngStream base(seed, 0);
  auto r_pop = base.split(1), r_cr = base.split(2), r_cpue = base.split(3), r_eff = base.split(4);
  const auto pop = sim::generate_population(spec, r_pop);
  CRDataset cr = sim::generate_cr_data(pop, spec.beta_cr, spec.sigma2, spec, r_cr);
  CPUEDataset cpue = spec.beta_cpue ? sim::regenerate_cpue(pop, cr, *spec.beta_cpue, spec.sigma2, r_cpue)
                                    : sim::derive_cpue(cr);
  // Electrofishing hours on the capture-recapture days, recorded as a
  // detection covariate the CPUE data do not share.
  for (auto& x : cr.x) {
    x.conservativeResize(Eigen::NoChange, x.cols() + 1);
    for (Eigen::Index k = 0; k < x.rows(); ++k) x(k, x.cols() - 1) = 1.0 + 2.0 * r_eff.uniform();
  }
  cr.x_names.push_back("effort");

  const fs::path dir = *rc.out;
  io::atomic_write(dir / "cr.csv", [&](std::ostream& o) { io::write_cr_csv(o, cr); });
  io::atomic_write(dir / "cpue.csv", [&](std::ostream& o) { io::write_cpue_csv(o, cpue); });
  io::atomic_write(dir / "truth.csv",
                   [&](std::ostream& o) { io::write_truth_csv(o, cr.years, pop.N.cast<double>()); });
  out << "wrote cr.csv, cpue.csv and truth.csv to " << dir.string() << '\n';
  return kOk;
}

McmcConfig mcmc_for(const io::RunConfig& rc, std::uint64_t seed) {
  McmcConfig c = rc.mcmc;
  c.seed = seed;
  return c;
}

int cmd_fit_cr(const Flags& f, std::ostream& out) {
  const auto rc = settings(f);
  const auto seed = need_seed(rc);
  const auto data = io::ingest_cr_csv(need_data(rc));
  const auto chains = cr::fit_cr(data, rc.priors, mcmc_for(rc, seed), stats::RngStream(seed, 1));
  write_fit(*rc.out, "cr", chains, out);
  return kOk;
}

std::map<std::string, CPUEDataset> cpue_inputs(const fs::path& path) {
  if (fs::is_directory(path)) return io::ingest_cpue_dir(path);
  return {{"", io::ingest_cpue_csv(path)}};
}

std::string prefixed(const std::string& model, const std::string& segment) {
  return segment.empty() ? model : model + "_" + segment;
}

int cmd_fit_cpue(const Flags& f, std::ostream& out) {
  const auto rc = settings(f);
  const auto seed = need_seed(rc);
  std::uint64_t stream = 0;
  for (const auto& [segment, data] : cpue_inputs(need_data(rc))) {
    const auto chains =
        cpue::fit_cpue_naive(data, rc.priors, mcmc_for(rc, seed), stats::RngStream(seed, 2).split(stream++));
    write_fit(*rc.out, prefixed("naive", segment), chains, out);
  }
  return kOk;
}

int cmd_fit_transfer(const Flags& f, std::ostream& out) {
  const auto rc = settings(f);
  if (!rc.cr_chains) throw Usage("fit-transfer requires --cr-chains");
  const auto seed = need_seed(rc);
  const auto inputs = cpue_inputs(need_data(rc));
  auto source = std::make_shared<const PosteriorChains>(io::load_chains(*rc.cr_chains));
  if (source->model != "cr-model") throw ValidationError(rc.cr_chains->string() + " does not hold capture-recapture chains");
  std::uint64_t stream = 0;
  for (const auto& [segment, data] : inputs) {
    std::optional<transfer::CoefficientMap> map;
    if (rc.coefficient_map) map = transfer::parse_coefficient_map(*rc.coefficient_map);
    const auto spec = transfer::make_transfer_spec(source, data.x_names, map);
    out << "coefficient map " << transfer::format_coefficient_map(spec.map) << '\n';
    const auto chains = transfer::fit_cpue_transfer(data, spec, rc.priors, mcmc_for(rc, seed),
                                                    stats::RngStream(seed, 3).split(stream++));
    write_fit(*rc.out, prefixed("transfer", segment), chains, out);
  }
  return kOk;
}

int cmd_sim_study(const Flags& f, std::ostream& out, std::ostream& err) {
  const auto rc = settings(f);
  auto spec = scenario_from(rc);
  spec.seed = need_seed(rc);
  spec.mcmc.adapt = rc.mcmc.adapt;
  spec.mcmc.inner_sweeps = rc.mcmc.inner_sweeps;
  spec.mcmc.abundance_update = rc.mcmc.abundance_update;
  spec.priors = rc.priors;
  sim::validate(spec);
  const fs::path dir = *rc.out;
  const int J = spec.n_classes();
  const auto results = sim::run_replicates(spec, workers(), [&](const sim::ReplicateResult& r) {
    err << "replicate " << r.replicate + 1 << "/" << spec.replicates << (r.failed ? " failed: " + r.error : " done")
        << '\n';
  });
  for (const auto& r : results) {
    char name[32];
    std::snprintf(name, sizeof name, "replicate_%03d.csv", r.replicate + 1);
    io::atomic_write(dir / name, [&](std::ostream& o) { io::write_replicate_csv(o, r, J); });
  }
  const auto summary = sim::aggregate(spec.id, spec.sigma2, results);
  io::atomic_write(dir / "summary.csv", [&](std::ostream& o) { io::write_scenario_summary_csv(o, {summary}); });
  out << "scenario " << sim::to_string(spec.id) << ": " << summary.completed << " completed, " << summary.failed
      << " failed; wrote " << results.size() << " replicate files and summary.csv to " << dir.string() << '\n';
  return kOk;
}

// Abundance-scale draws of a stored fit: CR abundance N, naive lambda / phat
// (phat from the CR chains) or transfer lambda*.
Eigen::MatrixXd abundance_draws(const PosteriorChains& c, const PosteriorChains* cr_source) {
  if (c.model == "cr-model") return c.draws("N");
  if (c.model == "cpue-transfer") return transfer::extract_abundance_star(c);
  if (c.model == "cpue-naive") {
    if (!cr_source) throw Usage("naive chains need --cr-chains to rescale by detection");
    auto it = cr_source->numeric_meta.find("phat");
    if (it == cr_source->numeric_meta.end()) throw ValidationError("CR chains carry no detection estimate");
    return cpue::rescale_naive(cpue::lambda_draws(c), it->second);
  }
  throw ValidationError("unknown model '" + c.model + "'");
}

std::string summary_name(const fs::path& chains) {
  std::string stem = chains.stem().string();
  const std::string suffix = "_chains";
  if (stem.size() > suffix.size() && stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0)
    stem.resize(stem.size() - suffix.size());
  return stem + "_summary.csv";
}

int cmd_summarize(const Flags& f, std::ostream& out) {
  const auto rc = settings(f);
  if (f.chains.empty()) throw Usage("summarize needs at least one chain file");
  std::optional<PosteriorChains> cr_source;
  if (rc.cr_chains) cr_source = io::load_chains(*rc.cr_chains);
  std::optional<Eigen::MatrixXd> truth;
  if (!f.truth.empty()) truth = io::read_truth_csv(f.truth);

  std::ostringstream metrics;
  metrics << "chains,model,size_class,mad,n_coverage,u_covered\n";
  for (const auto& p : f.chains) {
    const auto chains = io::load_chains(p);
    const fs::path target = fs::path(*rc.out) / summary_name(p);
    io::atomic_write(target, [&](std::ostream& o) { io::write_summary_csv(o, chains); });
    out << "wrote " << target.string() << '\n';
    if (!truth) continue;
    const Eigen::MatrixXd draws = abundance_draws(chains, cr_source ? &*cr_source : nullptr);
    const auto T = truth->rows(), J = truth->cols();
    if (draws.cols() != T * J) throw ValidationError(p + ": chains do not match the truth table");
    for (Eigen::Index j = 0; j < J; ++j) {
      std::vector<int> years(static_cast<std::size_t>(T));
      std::vector<double> means(years.size()), tv(years.size()), flat;
      int covered = 0;
      for (Eigen::Index t = 0; t < T; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        years[ti] = static_cast<int>(t);
        const Eigen::VectorXd col = draws.col(t * J + j);
        means[ti] = col.mean();
        tv[ti] = (*truth)(t, j);
        if (trend::interval({col.data(), static_cast<std::size_t>(col.size())}, 0.95).contains(tv[ti])) ++covered;
      }
      for (Eigen::Index s = 0; s < draws.rows(); ++s)
        for (Eigen::Index t = 0; t < T; ++t) flat.push_back(draws(s, t * J + j));
      const auto u = trend::mk_posterior(flat, static_cast<std::size_t>(T));
      const bool u_cov = trend::interval(u, 0.95).contains(trend::mann_kendall_u(tv));
      metrics << fs::path(p).filename().string() << ',' << chains.model << ',' << j + 1 << ','
              << io::format_double(trend::mad_from_truth({years, means}, {years, tv})) << ','
              << io::format_double(static_cast<double>(covered) / static_cast<double>(T)) << ',' << (u_cov ? 1 : 0)
              << '\n';
    }
  }
  if (truth) {
    const fs::path target = fs::path(*rc.out) / "metrics.csv";
    io::atomic_write(target, [&](std::ostream& o) { o << metrics.str(); });
    out << "wrote " << target.string() << '\n';
  }
  return kOk;
}

int cmd_plot(const Flags& f, std::ostream& out) {
  const auto rc = settings(f);
  if (f.naive_chains.empty() && f.transfer_chains.empty())
    throw Usage("plot needs --naive-chains and/or --transfer-chains");
  std::optional<PosteriorChains> cr_source;
  if (rc.cr_chains) cr_source = io::load_chains(*rc.cr_chains);
  plot::Series s;
  const PosteriorChains* any = nullptr;
  std::optional<PosteriorChains> naive, star;
  if (!f.naive_chains.empty()) {
    naive = io::load_chains(f.naive_chains);
    s.naive = abundance_draws(*naive, cr_source ? &*cr_source : nullptr);
    any = &*naive;
  }
  if (!f.transfer_chains.empty()) {
    star = io::load_chains(f.transfer_chains);
    s.transfer = abundance_draws(*star, nullptr);
    any = &*star;
  }
  const auto& shape = any->param(any->model == "cpue-naive" ? "log_lambda" : "log_lambda_star").shape;
  s.n_classes = static_cast<int>(shape.at(1));
  auto yit = any->numeric_meta.find("years");
  if (yit == any->numeric_meta.end()) throw ValidationError("chains carry no year labels");
  for (double y : yit->second) s.years.push_back(static_cast<int>(y));
  if (!f.truth.empty()) s.truth = io::read_truth_csv(f.truth);
  const fs::path dir = *rc.out;
  io::atomic_write(dir / "trajectories.svg", [&](std::ostream& o) { plot::write_trajectory_svg(o, s); });
  io::atomic_write(dir / "mann_kendall.svg", [&](std::ostream& o) { plot::write_mann_kendall_svg(o, s); });
  out << "wrote trajectories.svg and mann_kendall.svg to " << dir.string() << '\n';
  return kOk;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Capture-recapture and CPUE abundance estimation with detection transfer"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", f.seed, "random seed");
    sub->add_option("--out", f.out, "output directory");
  };
  auto* simulate = app.add_subcommand("simulate", "write a synthetic CR/CPUE dataset pair and its truth");
  common(simulate);
  simulate->add_option("--scenario", f.scenario, "I..VII");
  simulate->add_option("--days", f.days, "sampling days per year");

  auto* fit_cr = app.add_subcommand("fit-cr", "fit the capture-recapture model");
  common(fit_cr);
  fit_cr->add_option("--data", f.data, "CR csv");

  auto* fit_cpue = app.add_subcommand("fit-cpue", "fit the naive CPUE model");
  common(fit_cpue);
  fit_cpue->add_option("--data", f.data, "CPUE csv or a directory of them");

  auto* fit_transfer = app.add_subcommand("fit-transfer", "fit the CPUE model with transferred detection");
  common(fit_transfer);
  fit_transfer->add_option("--data", f.data, "CPUE csv or a directory of them");
  fit_transfer->add_option("--cr-chains", f.cr_chains, "chain file from fit-cr");
  fit_transfer->add_option("--coefficient-map", f.coefficient_map, "cr_idx:cpue_col,...");

  auto* sim_study = app.add_subcommand("sim-study", "run a simulation scenario");
  common(sim_study);
  sim_study->add_option("--scenario", f.scenario, "I..VII");
  sim_study->add_option("--replicates", f.replicates, "replicate count");
  sim_study->add_option("--preset", f.preset, "paper or desk");
  sim_study->add_option("--days", f.days, "sampling days per year");

  auto* summarize = app.add_subcommand("summarize", "recompute summaries (and metrics against a truth table)");
  common(summarize);
  summarize->add_option("chains", f.chains, "chain files")->required();
  summarize->add_option("--cr-chains", f.cr_chains, "CR chains (detection rescaling of naive fits)");
  summarize->add_option("--truth", f.truth, "truth.csv from simulate");

  auto* plot = app.add_subcommand("plot", "draw abundance trajectories and Mann-Kendall posteriors");
  common(plot);
  plot->add_option("--naive-chains", f.naive_chains, "chain file from fit-cpue");
  plot->add_option("--transfer-chains", f.transfer_chains, "chain file from fit-transfer");
  plot->add_option("--cr-chains", f.cr_chains, "CR chains (detection rescaling of naive fits)");
  plot->add_option("--truth", f.truth, "truth.csv from simulate");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(f, out);
    if (fit_cr->parsed()) return cmd_fit_cr(f, out);
    if (fit_cpue->parsed()) return cmd_fit_cpue(f, out);
    if (fit_transfer->parsed()) return cmd_fit_transfer(f, out);
    if (sim_study->parsed()) return cmd_sim_study(f, out, err);
    if (summarize->parsed()) return cmd_summarize(f, out);
    if (plot->parsed()) return cmd_plot(f, out);
  } catch (const Usage& e) {
    err << "usage error: " << e.what() << '\n';
    return kValidation;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const FitError& e) {
    err << "fit failed: " << e.what() << '\n';
    return kFit;
  } catch (const NotPositiveDefinite& e) {
    err << "fit failed: " << e.what() << '\n';
    return kFit;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

int cli_dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return cli_dispatch(args, std::cout, std::cerr);
}

}  // namespace abundance::cli
