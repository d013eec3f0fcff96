#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dilute/errors.hpp"

namespace dilute {

// Flat typed configuration for every experiment kind. Serialization is
// canonical (sorted keys, %.17g floats), so the config hash is a stable
// identity: identical configs reproduce identical row bytes.
struct ExperimentConfig {
  std::string kind = "ids";  // ids | floquet | green | ldp | continuum
  std::uint64_t seed = 1;
  long replicas = 100;
  int threads = 0;  // 0: DILUTE_THREADS env or hardware
  std::string output_dir = "out";

  // hopping kernel
  std::string kernel_preset = "laplacian";  // laplacian | file
  std::string kernel_file;
  int dimension = 1;

  // disorder law
  std::string law = "bernoulli";  // bernoulli | smoothed_bernoulli | uniform_dilute
  double rho = 0.1;
  std::string mollifier = "triangular";  // triangular | smooth_bump

  // ids
  std::vector<double> energies;
  int box_side = 201;
  std::vector<double> rho_grid;  // non-empty: run the tail scan instead
  double alpha = 4.5;

  // floquet
  int periodization = 6;  // N
  int theta_resolution = 3;
  double event_energy = -1.0;  // >= 0: also estimate the fiber event probability

  // green
  double energy = 0.0;
  double eps = 1e-3;
  std::vector<double> eps_list;
  double s = 0.2;
  std::vector<int> distances;
  double constant_D = 8.0;
  double constant_c = 0.5;
  int xi_degree = 1;

  // ldp
  double alpha_prime = 3.0;
  double gamma = 1.0;
  double event_constant = 1.0;
  long samples = 100000;

  // continuum
  std::string continuum_disorder = "poisson";  // poisson | bernoulli_lattice
  double varrho = 0.1;
  double mesh = 0.1;
  double box_length = 200.0;

  std::string to_json() const;                    // canonical
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
  std::string config_hash() const;                // fnv1a64 of the canonical form
  void validate() const;
};

struct ExperimentRecord {
  std::string config_hash;
  std::string kind;
  std::string rows_path;
  std::string summary_path;
  long row_count = 0;
  bool completed = false;
};

// Dispatches to the experiment runner, writes rows.csv incrementally and
// summary.json last; a sentinel INCOMPLETE file marks partial runs.
ExperimentRecord run_experiment(const ExperimentConfig& config);

struct SweepPoint {
  std::map<std::string, std::string> overrides;  // parameter -> value (JSON fragment)
  ExperimentRecord record;
};

// Cartesian product over the grid values applied on top of the template.
// Each point gets a derived seed (unless the grid sweeps "seed") and its own
// subdirectory; colliding output paths refuse upfront.
std::vector<SweepPoint> run_sweep(const ExperimentConfig& base,
                                  const std::map<std::string, std::vector<std::string>>& grid,
                                  const std::string& manifest_path);

}  // namespace dilute
