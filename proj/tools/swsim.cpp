// Command-line front end: generate, fit, simulate, summarize.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "swsim/config.hpp"
#include "swsim/harness.hpp"
#include "swsim/inference.hpp"
#include "swsim/io.hpp"
#include "swsim/lmm.hpp"
#include "swsim/modelspec.hpp"
#include "swsim/version.hpp"

namespace fs = std::filesystem;
using swsim::ConfigError;
using swsim::DataError;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::optional<int> workers;
  std::optional<double> alpha;
  std::string models;
  std::string scenarios;
  std::string thetas;
  std::string steps;
};

template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& what) {
  std::vector<T> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::stringstream is(item);
    T value{};
    if (!(is >> value) || !is.eof()) throw ConfigError({"invalid " + what + " '" + item + "'"});
    values.push_back(value);
  }
  if (values.empty()) throw ConfigError({"empty " + what + " list"});
  return values;
}

swsim::RunConfig resolve_config(const Flags& f) {
  swsim::RunConfig c = f.config.empty() ? swsim::RunConfig{} : swsim::load_run_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.reps) c.reps = *f.reps;
  if (f.workers) c.workers = *f.workers;
  if (f.alpha) c.alpha = *f.alpha;
  if (!f.models.empty()) {
    try {
      c.models = swsim::parse_model_ids(f.models);
    } catch (const std::invalid_argument& e) {
      throw ConfigError({e.what()});
    }
  }
  if (!f.scenarios.empty()) c.scenarios = parse_list<std::string>(f.scenarios, "scenario");
  if (!f.thetas.empty()) c.thetas = parse_list<double>(f.thetas, "theta");
  if (!f.steps.empty()) c.steps = parse_list<int>(f.steps, "step count");
  swsim::validate(c);
  return c;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  body(out);
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

int cmd_generate(const Flags& flags, const std::string& out_path, const std::string& design_path,
                 const std::string& panel_path) {
  const auto config = resolve_config(flags);
  const auto& name = config.scenarios.front();
  const double theta = config.thetas.front();
  const int steps = config.steps.front();
  const auto scenario = swsim::resolve_scenario(config, name, theta, steps);
  const auto design = swsim::standard_swd(config.clusters, steps, config.period_length);
  const auto trial = swsim::simulate_trial(scenario, design, config.seed, config.rerandomize);

  write_file(out_path, [&](std::ostream& o) { swsim::write_observations_csv(o, trial.table); });
  if (!design_path.empty())
    write_file(design_path, [&](std::ostream& o) { swsim::write_design_csv(o, trial.design); });
  if (!panel_path.empty())
    write_file(panel_path, [&](std::ostream& o) { swsim::write_panel_csv(o, trial.panel); });
  std::cout << trial.table.size() << " rows written to " << out_path << '\n';
  return 0;
}

int cmd_fit(const std::string& data_path, int model, double alpha) {
  std::ifstream in(data_path);
  if (!in) throw DataError(0, "cannot open '" + data_path + "'");
  const auto table = swsim::read_observations_csv(in);
  const auto matrices = swsim::build_matrices(table, swsim::formulation(model));
  const swsim::MixedModelSystem system(matrices);
  const auto fit = swsim::fit_reml(system);
  const int column = matrices.column("exposed");
  const auto df = swsim::satterthwaite_df(system, fit, column);
  auto test = swsim::wald_t_test(fit, df.df, column, alpha);
  test.df_fallback = df.fallback;

  nlohmann::json j;
  j["model"] = model;
  j["fit"] = swsim::fit_to_json(fit);
  j["test"] = swsim::test_to_json(test);
  j["test"]["coefficient"] = "exposed";
  j["test"]["alpha"] = alpha;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_simulate(const Flags& flags, const std::string& out_dir) {
  auto config = resolve_config(flags);
  if (!out_dir.empty()) config.out = out_dir;
  const fs::path dir(config.out);
  fs::create_directories(dir);

  const auto start = std::chrono::steady_clock::now();
  std::vector<swsim::ReplicateResult> results;
  std::ofstream replicates(dir / "replicates.csv", std::ios::binary);
  if (!replicates) throw std::runtime_error("cannot write '" + (dir / "replicates.csv").string() + "'");
  swsim::write_replicates_header(replicates);

  nlohmann::json manifest;
  manifest["version"] = swsim::kVersion;
  manifest["config_hash"] = swsim::config_hash(config);
  manifest["master_seed"] = config.seed;
  manifest["config"] = swsim::to_json(config);
  auto write_manifest = [&](const std::string& status) {
    manifest["status"] = status;
    manifest["records"] = results.size();
    manifest["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file(dir / "manifest.json", [&](std::ostream& o) { o << manifest.dump(2) << '\n'; });
  };

  try {
    swsim::run_grid(swsim::make_grid(config), [&](const swsim::ReplicateResult& r) {
      swsim::write_replicate_row(replicates, r);
      if (!replicates) throw std::runtime_error("write to replicates.csv failed");
      if (!r.error.empty())
        std::cerr << "fit failed (scenario " << r.scenario << ", theta " << r.theta << ", steps "
                  << r.steps << ", replicate " << r.replicate << ", model " << r.model
                  << "): " << r.error << '\n';
      results.push_back(r);
    });
    replicates.flush();
    if (!replicates) throw std::runtime_error("write to replicates.csv failed");
  } catch (...) {
    manifest["outputs"] = {{"replicates", "replicates.csv"}};
    write_manifest("aborted");
    throw;
  }

  const auto summaries = swsim::summarize(results);
  write_file(dir / "summary.csv", [&](std::ostream& o) { swsim::write_summary_csv(o, summaries); });

  nlohmann::json empty_cells = nlohmann::json::array();
  for (const auto& s : summaries)
    if (s.n_converged == 0)
      empty_cells.push_back({{"scenario", s.scenario}, {"theta", s.theta}, {"steps", s.steps},
                             {"model", s.model}});
  manifest["outputs"] = {{"replicates", "replicates.csv"}, {"summary", "summary.csv"}};
  manifest["cells_without_converged_fit"] = empty_cells;
  write_manifest("complete");

  std::cout << results.size() << " replicate records, " << summaries.size()
            << " summary rows written to " << dir.string() << '\n';
  return empty_cells.empty() ? 0 : kExitRuntime;
}

int cmd_summarize(const std::string& in_path, const std::string& out_path) {
  std::ifstream in(in_path);
  if (!in) throw DataError(0, "cannot open '" + in_path + "'");
  const auto results = swsim::read_replicates_csv(in);
  if (results.empty()) throw DataError(0, "no replicate records in '" + in_path + "'");
  const auto summaries = swsim::summarize(results);
  if (out_path.empty() || out_path == "-")
    swsim::write_summary_csv(std::cout, summaries);
  else
    write_file(out_path, [&](std::ostream& o) { swsim::write_summary_csv(o, summaries); });
  return 0;
}

void add_run_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--scenario", f.scenarios, "comma-separated scenario names (a,b,c,d)");
  cmd->add_option("--theta", f.thetas, "comma-separated intervention effects");
  cmd->add_option("--steps", f.steps, "comma-separated step counts");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cohort stepped-wedge trial simulation and mixed-model analysis"};
  app.set_version_flag("--version", swsim::kVersion);
  app.require_subcommand(1);

  Flags flags;
  std::string out_path, design_path, panel_path, data_path, out_dir, replicates_path;
  int model = 4;
  double fit_alpha = 0.05;

  auto* generate = app.add_subcommand("generate", "simulate one dataset and write it as CSV");
  add_run_flags(generate, flags);
  generate->add_option("--out", out_path, "output CSV path")->required();
  generate->add_option("--design", design_path, "also write the allocation as CSV");
  generate->add_option("--panel", panel_path, "also write the cohort panel as CSV");

  auto* fit = app.add_subcommand("fit", "fit one model to a dataset CSV and print JSON");
  fit->add_option("data", data_path, "observation CSV")->required();
  fit->add_option("--model", model, "model id 1..6")->check(CLI::Range(1, 6));
  fit->add_option("--alpha", fit_alpha, "significance level")->check(CLI::Range(0.0, 1.0));

  auto* simulate = app.add_subcommand("simulate", "run the Monte Carlo grid");
  add_run_flags(simulate, flags);
  simulate->add_option("--reps", flags.reps, "replicates per cell");
  simulate->add_option("--workers", flags.workers, "worker threads");
  simulate->add_option("--out", out_dir, "output directory");
  simulate->add_option("--alpha", flags.alpha, "significance level");
  simulate->add_option("--model", flags.models, "comma-separated model ids");

  auto* summarize = app.add_subcommand("summarize", "aggregate a replicate CSV");
  summarize->add_option("replicates", replicates_path, "replicate CSV")->required();
  summarize->add_option("--out", out_path, "summary CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*generate) return cmd_generate(flags, out_path, design_path, panel_path);
    if (*fit) return cmd_fit(data_path, model, fit_alpha);
    if (*simulate) return cmd_simulate(flags, out_dir);
    if (*summarize) return cmd_summarize(replicates_path, out_path);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
