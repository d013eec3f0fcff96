// Experiment driver: one binary, one subcommand per experiment kind plus
// `sweep` for parameter grids. Every run writes rows.csv and summary.json
// (carrying the config hash) into --output.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dilute/errors.hpp"
#include "dilute/experiment.hpp"

using dilute::ExperimentConfig;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitCapacity = 3;

void add_common_flags(CLI::App* cmd, std::string& config_path, ExperimentConfig& cfg) {
  cmd->add_option("--config", config_path, "JSON config file (flags override it)");
  cmd->add_option("--seed", cfg.seed, "master seed");
  cmd->add_option("--replicas", cfg.replicas, "Monte Carlo replicas");
  cmd->add_option("--threads", cfg.threads, "thread budget (0: DILUTE_THREADS or hardware)");
  cmd->add_option("--output", cfg.output_dir, "output directory");
  cmd->add_option("--law", cfg.law, "bernoulli | smoothed_bernoulli | uniform_dilute");
  cmd->add_option("--rho", cfg.rho, "disorder density");
  cmd->add_option("--dimension", cfg.dimension, "lattice dimension");
  cmd->add_option("--kernel-file", cfg.kernel_file, "kernel JSON (sets preset=file)");
}

// merge precedence: defaults < config file < explicit flags
ExperimentConfig merge_config(const CLI::App* cmd, const std::string& config_path,
                              const ExperimentConfig& flag_values, const std::string& kind) {
  ExperimentConfig cfg = flag_values;
  if (!config_path.empty()) {
    ExperimentConfig file_cfg = ExperimentConfig::from_file(config_path);
    // overlay: any flag the user actually passed wins over the file
    nlohmann::json merged = nlohmann::json::parse(file_cfg.to_json());
    nlohmann::json flags = nlohmann::json::parse(flag_values.to_json());
    static const std::map<std::string, std::string> flag_to_key = {
        {"--seed", "seed"},           {"--replicas", "replicas"},
        {"--threads", "threads"},     {"--output", "output_dir"},
        {"--law", "law"},             {"--rho", "rho"},
        {"--dimension", "dimension"}, {"--kernel-file", "kernel_file"},
        {"--box-side", "box_side"},   {"--alpha", "alpha"},
        {"--energy", "energy"},       {"--eps", "eps"},
        {"--s", "s"},                 {"--periodization", "periodization"},
        {"--theta-resolution", "theta_resolution"},
        {"--event-energy", "event_energy"},
        {"--alpha-prime", "alpha_prime"},
        {"--gamma", "gamma"},         {"--event-constant", "event_constant"},
        {"--samples", "samples"},     {"--varrho", "varrho"},
        {"--mesh", "mesh"},           {"--box-length", "box_length"},
        {"--energies", "energies"},   {"--rho-grid", "rho_grid"},
        {"--distances", "distances"}, {"--eps-list", "eps_list"},
        {"--constant-D", "constant_D"}, {"--constant-c", "constant_c"},
        {"--xi-degree", "xi_degree"}, {"--disorder", "continuum_disorder"}};
    for (const auto& [flag, key] : flag_to_key) {
      const CLI::Option* opt = cmd->get_option_no_throw(flag);
      if (opt && opt->count() > 0) merged[key] = flags.at(key);
    }
    cfg = ExperimentConfig::from_json(merged.dump());
  }
  cfg.kind = kind;
  if (!cfg.kernel_file.empty()) cfg.kernel_preset = "file";
  return cfg;
}

int dispatch(const ExperimentConfig& cfg) {
  const dilute::ExperimentRecord rec = dilute::run_experiment(cfg);
  std::cout << "wrote " << rec.rows_path << " (" << rec.row_count << " rows), summary "
            << rec.summary_path << ", config " << rec.config_hash << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dilute: Monte Carlo laboratory for diluted random lattice operators"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string config_path;

  auto* ids = app.add_subcommand("ids", "finite-volume integrated density of states");
  add_common_flags(ids, config_path, cfg);
  ids->add_option("--box-side", cfg.box_side, "odd box side");
  ids->add_option("--energies", cfg.energies, "energy grid")->expected(-1);
  ids->add_option("--rho-grid", cfg.rho_grid, "run the tail scan over this grid")->expected(-1);
  ids->add_option("--alpha", cfg.alpha, "tail exponent: probes E = rho^alpha");

  auto* floquet = app.add_subcommand("floquet", "periodic approximation fibers");
  add_common_flags(floquet, config_path, cfg);
  floquet->add_option("--periodization", cfg.periodization, "cell half-period N");
  floquet->add_option("--theta-resolution", cfg.theta_resolution, "quadrature points per axis");
  floquet->add_option("--energies", cfg.energies, "energy grid")->expected(-1);
  floquet->add_option("--event-energy", cfg.event_energy,
                      "also estimate P[some fiber has an eigenvalue <= E]");

  auto* green = app.add_subcommand("green", "box Green's function fractional moments");
  add_common_flags(green, config_path, cfg);
  green->add_option("--energy", cfg.energy, "real energy E");
  green->add_option("--eps", cfg.eps, "imaginary shift");
  green->add_option("--eps-list", cfg.eps_list, "sweep of imaginary shifts")->expected(-1);
  green->add_option("--s", cfg.s, "fractional exponent");
  green->add_option("--distances", cfg.distances, "site distances |n|")->expected(-1);
  green->add_option("--alpha", cfg.alpha, "tail exponent for the reference rate");
  green->add_option("--constant-D", cfg.constant_D, "criterion constant D");
  green->add_option("--constant-c", cfg.constant_c, "criterion kernel rate c");
  green->add_option("--xi-degree", cfg.xi_degree, "criterion polynomial degree");

  auto* ldp = app.add_subcommand("ldp", "scale plans and block-mean deviation events");
  add_common_flags(ldp, config_path, cfg);
  ldp->add_option("--alpha", cfg.alpha, "tail exponent");
  ldp->add_option("--alpha-prime", cfg.alpha_prime, "intermediate exponent");
  ldp->add_option("--gamma", cfg.gamma, "periodization exponent");
  ldp->add_option("--event-constant", cfg.event_constant, "threshold constant C");
  ldp->add_option("--samples", cfg.samples, "Monte Carlo samples");

  auto* continuum = app.add_subcommand("continuum", "discretized continuum models");
  add_common_flags(continuum, config_path, cfg);
  continuum->add_option("--varrho", cfg.varrho, "Bernoulli probability / Poisson intensity");
  continuum->add_option("--mesh", cfg.mesh, "grid spacing");
  continuum->add_option("--box-length", cfg.box_length, "box length");
  continuum->add_option("--energies", cfg.energies, "energy grid")->expected(-1);
  continuum->add_option("--rho-grid", cfg.rho_grid, "tail scan over varrho")->expected(-1);
  continuum->add_option("--alpha", cfg.alpha, "tail exponent");
  continuum->add_option("--disorder", cfg.continuum_disorder, "poisson | bernoulli_lattice");

  auto* sweep = app.add_subcommand("sweep", "Cartesian parameter sweep of a config template");
  std::string sweep_file;
  sweep->add_option("--config", sweep_file,
                    "JSON with {\"base\": <config>, \"sweep\": {param: [values...]}}")
      ->required();
  std::string manifest = "";
  sweep->add_option("--manifest", manifest, "manifest path (default <output>/manifest.json)");

  try {
    app.parse(argc, argv);

    if (sweep->parsed()) {
      std::ifstream in(sweep_file);
      if (!in) throw dilute::ValidationError("cannot open sweep file: " + sweep_file);
      std::stringstream ss;
      ss << in.rdbuf();
      const auto j = nlohmann::json::parse(ss.str());
      ExperimentConfig base = ExperimentConfig::from_json(j.at("base").dump());
      std::map<std::string, std::vector<std::string>> grid;
      for (const auto& [key, vals] : j.at("sweep").items()) {
        std::vector<std::string> list;
        for (const auto& v : vals) list.push_back(v.dump());
        grid[key] = list;
      }
      if (manifest.empty()) manifest = base.output_dir + "/manifest.json";
      const auto points = dilute::run_sweep(base, grid, manifest);
      std::cout << "swept " << points.size() << " points, manifest " << manifest << "\n";
      return kExitOk;
    }

    const CLI::App* active = app.get_subcommands().front();
    return dispatch(merge_config(active, config_path, cfg, active->get_name()));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  } catch (const dilute::CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return kExitCapacity;
  } catch (const dilute::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
