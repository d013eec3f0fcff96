#include "dilute/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dilute/continuum.hpp"
#include "dilute/disorder.hpp"
#include "dilute/floquet.hpp"
#include "dilute/green.hpp"
#include "dilute/io.hpp"
#include "dilute/lattice.hpp"
#include "dilute/scales.hpp"
#include "dilute/spectra.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dilute {

namespace {

json to_json_obj(const ExperimentConfig& c) {
  json j;
  j["kind"] = c.kind;
  j["seed"] = c.seed;
  j["replicas"] = c.replicas;
  j["threads"] = c.threads;
  j["output_dir"] = c.output_dir;
  j["kernel_preset"] = c.kernel_preset;
  j["kernel_file"] = c.kernel_file;
  j["dimension"] = c.dimension;
  j["law"] = c.law;
  j["rho"] = c.rho;
  j["mollifier"] = c.mollifier;
  j["energies"] = c.energies;
  j["box_side"] = c.box_side;
  j["rho_grid"] = c.rho_grid;
  j["alpha"] = c.alpha;
  j["periodization"] = c.periodization;
  j["theta_resolution"] = c.theta_resolution;
  j["event_energy"] = c.event_energy;
  j["energy"] = c.energy;
  j["eps"] = c.eps;
  j["eps_list"] = c.eps_list;
  j["s"] = c.s;
  j["distances"] = c.distances;
  j["constant_D"] = c.constant_D;
  j["constant_c"] = c.constant_c;
  j["xi_degree"] = c.xi_degree;
  j["alpha_prime"] = c.alpha_prime;
  j["gamma"] = c.gamma;
  j["event_constant"] = c.event_constant;
  j["samples"] = c.samples;
  j["continuum_disorder"] = c.continuum_disorder;
  j["varrho"] = c.varrho;
  j["mesh"] = c.mesh;
  j["box_length"] = c.box_length;
  return j;
}

ExperimentConfig from_json_obj(const json& j) {
  ExperimentConfig d;  // defaults
  ExperimentConfig c;
  c.kind = j.value("kind", d.kind);
  c.seed = j.value("seed", d.seed);
  c.replicas = j.value("replicas", d.replicas);
  c.threads = j.value("threads", d.threads);
  c.output_dir = j.value("output_dir", d.output_dir);
  c.kernel_preset = j.value("kernel_preset", d.kernel_preset);
  c.kernel_file = j.value("kernel_file", d.kernel_file);
  c.dimension = j.value("dimension", d.dimension);
  c.law = j.value("law", d.law);
  c.rho = j.value("rho", d.rho);
  c.mollifier = j.value("mollifier", d.mollifier);
  c.energies = j.value("energies", d.energies);
  c.box_side = j.value("box_side", d.box_side);
  c.rho_grid = j.value("rho_grid", d.rho_grid);
  c.alpha = j.value("alpha", d.alpha);
  c.periodization = j.value("periodization", d.periodization);
  c.theta_resolution = j.value("theta_resolution", d.theta_resolution);
  c.event_energy = j.value("event_energy", d.event_energy);
  c.energy = j.value("energy", d.energy);
  c.eps = j.value("eps", d.eps);
  c.eps_list = j.value("eps_list", d.eps_list);
  c.s = j.value("s", d.s);
  c.distances = j.value("distances", d.distances);
  c.constant_D = j.value("constant_D", d.constant_D);
  c.constant_c = j.value("constant_c", d.constant_c);
  c.xi_degree = j.value("xi_degree", d.xi_degree);
  c.alpha_prime = j.value("alpha_prime", d.alpha_prime);
  c.gamma = j.value("gamma", d.gamma);
  c.event_constant = j.value("event_constant", d.event_constant);
  c.samples = j.value("samples", d.samples);
  c.continuum_disorder = j.value("continuum_disorder", d.continuum_disorder);
  c.varrho = j.value("varrho", d.varrho);
  c.mesh = j.value("mesh", d.mesh);
  c.box_length = j.value("box_length", d.box_length);
  return c;
}

HoppingKernel make_kernel(const ExperimentConfig& c) {
  if (c.kernel_preset == "laplacian") return HoppingKernel::laplacian(c.dimension);
  if (c.kernel_preset == "file") return HoppingKernel::from_json_file(c.kernel_file);
  throw ValidationError("unknown kernel preset: " + c.kernel_preset);
}

DisorderSpec make_law(const std::string& law, double rho, const std::string& mollifier) {
  if (law == "bernoulli") return DisorderSpec::bernoulli(rho);
  if (law == "uniform_dilute") return DisorderSpec::uniform_dilute(rho);
  if (law == "smoothed_bernoulli") {
    const Mollifier m =
        mollifier == "smooth_bump" ? Mollifier::smooth_bump() : Mollifier::triangular();
    return DisorderSpec::smoothed_bernoulli(rho, m);
  }
  throw ValidationError("unknown disorder law: " + law);
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

class RunWriter {
 public:
  RunWriter(const ExperimentConfig& config, std::vector<std::string> header)
      : config_(config) {
    fs::create_directories(config.output_dir);
    rows_path_ = (fs::path(config.output_dir) / "rows.csv").string();
    summary_path_ = (fs::path(config.output_dir) / "summary.json").string();
    sentinel_path_ = (fs::path(config.output_dir) / "INCOMPLETE").string();
    std::ofstream(sentinel_path_) << "run in progress\n";
    rows_.open(rows_path_, std::ios::trunc | std::ios::binary);
    if (!rows_) throw ValidationError("cannot open " + rows_path_);
    rows_ << csv_row(header);
    rows_.flush();
  }

  void row(const std::vector<std::string>& fields) {
    rows_ << csv_row(fields);
    rows_.flush();
    ++count_;
  }

  ExperimentRecord finish(json summary_extra) {
    rows_.close();
    json summary;
    summary["config_hash"] = config_.config_hash();
    summary["kind"] = config_.kind;
    summary["row_count"] = count_;
    summary["timestamp"] = timestamp_utc();
    summary["version"] = "0.1.0";
    summary["config"] = json::parse(config_.to_json());
    summary["results"] = std::move(summary_extra);
    std::ofstream(summary_path_, std::ios::trunc | std::ios::binary) << summary.dump(2) << "\n";
    fs::remove(sentinel_path_);
    ExperimentRecord rec;
    rec.config_hash = config_.config_hash();
    rec.kind = config_.kind;
    rec.rows_path = rows_path_;
    rec.summary_path = summary_path_;
    rec.row_count = count_;
    rec.completed = true;
    return rec;
  }

 private:
  ExperimentConfig config_;
  std::ofstream rows_;
  std::string rows_path_, summary_path_, sentinel_path_;
  long count_ = 0;
};

ExperimentRecord run_ids(const ExperimentConfig& c) {
  const HoppingKernel kernel = make_kernel(c);
  if (!c.rho_grid.empty()) {
    RunWriter w(c, {"rho", "energy", "estimate", "ci", "hits", "box_side", "replicas",
                    "upper_bound_only", "seed"});
    json extra;
    if (c.replicas > 0) {
      const TailFit fit = lifschitz_scan(
          kernel, [&](double rho) { return make_law(c.law, rho, c.mollifier); }, c.rho_grid,
          c.alpha, c.replicas, c.seed, c.threads);
      for (const auto& p : fit.points)
        w.row({double_repr(p.rho), double_repr(p.energy), double_repr(p.estimate),
               double_repr(p.ci_half), std::to_string(p.hits), std::to_string(p.box_side),
               std::to_string(p.replicas), p.upper_bound_only ? "1" : "0",
               std::to_string(c.seed)});
      extra["fitted_exponent"] = fit.fitted_exponent;
      extra["r2"] = fit.r2;
      extra["regression_points"] = fit.regression_points;
      extra["decay_superlinear"] = fit.decay_superlinear;
      extra["alpha_below_threshold"] = fit.alpha_below_threshold;
    }
    return w.finish(extra);
  }
  RunWriter w(c, {"E", "estimate", "ci", "replicas", "box_side", "seed"});
  json extra;
  if (c.replicas > 0) {
    Box box;
    box.dimension = c.dimension;
    box.half_side = (c.box_side - 1) / 2;
    const DisorderSpec spec = make_law(c.law, c.rho, c.mollifier);
    const IdsCurve curve =
        estimate_ids(kernel, spec, box, c.energies, c.replicas, c.seed, c.threads);
    for (const auto& p : curve.points)
      w.row({double_repr(p.energy), double_repr(p.estimate), double_repr(p.ci_half),
             std::to_string(c.replicas), std::to_string(c.box_side), std::to_string(c.seed)});
    extra["law"] = curve.law_name;
  }
  return w.finish(extra);
}

ExperimentRecord run_floquet(const ExperimentConfig& c) {
  const HoppingKernel kernel = make_kernel(c);
  const DisorderSpec spec = make_law(c.law, c.rho, c.mollifier);
  RunWriter w(c, {"E", "ids_estimate", "ci"});
  json extra;
  if (c.replicas > 0) {
    const PeriodicIds ids = periodic_ids(kernel, spec, c.periodization, c.theta_resolution,
                                         c.energies, c.replicas, c.seed, c.threads);
    for (std::size_t i = 0; i < ids.energies.size(); ++i)
      w.row({double_repr(ids.energies[i]), double_repr(ids.estimates[i]),
             double_repr(ids.ci_half[i])});
    if (c.event_energy >= 0.0) {
      const EventProbability ev = prob_omega_event(kernel, spec, c.event_energy, c.periodization,
                                                   c.theta_resolution, c.replicas, c.seed,
                                                   c.threads);
      extra["event"] = {{"energy", c.event_energy},
                        {"estimate", ev.estimate},
                        {"ci", ev.ci_half},
                        {"hits", ev.hits},
                        {"trials", ev.trials},
                        {"upper_bound_only", ev.upper_bound_only}};
    }
  }
  return w.finish(extra);
}

ExperimentRecord run_green(const ExperimentConfig& c) {
  const HoppingKernel kernel = make_kernel(c);
  const DisorderSpec spec = make_law(c.law, c.rho, c.mollifier);
  RunWriter w(c, {"distance", "moment", "ci", "eps"});
  json extra;
  if (c.replicas > 0) {
    std::vector<int> distances = c.distances;
    if (distances.empty())
      for (int n = 2; n <= 30; n += 2) distances.push_back(n);
    std::vector<double> eps_values = c.eps_list;
    if (eps_values.empty()) eps_values.push_back(c.eps);
    json fits = json::array();
    for (double eps : eps_values) {
      const DecayFit fit = localization_length_fit(kernel, spec, c.energy, eps, c.s, distances,
                                                   c.replicas, c.seed, c.threads);
      for (std::size_t i = 0; i < fit.distances.size(); ++i)
        w.row({double_repr(fit.distances[i]), double_repr(fit.moments[i].mean),
               double_repr(fit.moments[i].ci_half), double_repr(eps)});
      fits.push_back({{"eps", eps},
                      {"rate", fit.rate},
                      {"slope", fit.fit.slope},
                      {"intercept", fit.fit.intercept},
                      {"r2", fit.fit.r2}});
    }
    extra["fits"] = fits;
    const double delta =
        default_decay_rate(c.rho, c.alpha, std::clamp(c.energy, 0.0, std::pow(c.rho, c.alpha)));
    extra["delta_reference"] = delta;
    extra["s"] = c.s;

    // finite-volume criterion with Monte Carlo moments behind it
    int max_dist = 0;
    for (int d : distances) max_dist = std::max(max_dist, std::abs(d));
    const int inner_L = 3;
    const int sim_half = max_dist + 20;
    const MomentModel model =
        make_mc_moment_model(make_kernel(c), spec, c.energy, c.eps, c.s, sim_half, inner_L,
                             std::min<long>(c.replicas, 200), mix_seed(c.seed, 77), c.threads);
    CriterionConstants constants;
    constants.D = c.constant_D;
    constants.c = c.constant_c;
    constants.xi_degree = c.xi_degree;
    constants.delta = delta;
    const CriterionResult crit = fm_criterion_lhs(model, c.dimension, inner_L, c.rho, c.s,
                                                  constants);
    extra["criterion"] = {{"value", crit.value},
                          {"satisfied", crit.satisfied},
                          {"terms", crit.terms},
                          {"shells", crit.shells_used},
                          {"D", c.constant_D},
                          {"c", c.constant_c},
                          {"xi_degree", c.xi_degree},
                          {"delta", delta}};
  }
  return w.finish(extra);
}

ExperimentRecord run_ldp(const ExperimentConfig& c) {
  const DisorderSpec spec = make_law(c.law, c.rho, c.mollifier);
  const ScalePlan plan = build_scale_plan(c.rho, c.alpha, c.alpha_prime, c.gamma, c.dimension);
  RunWriter w(c, {"sign", "threshold", "frequency", "ci", "upper_bound_only", "chernoff_bound",
                  "binomial_oracle"});
  json extra;
  if (c.samples > 0) {
    for (const EventSign sign : {EventSign::plus, EventSign::minus}) {
      const double threshold = sign == EventSign::plus
                                   ? c.event_constant * std::pow(c.rho, 1.0 + plan.epsilon)
                                   : c.event_constant * std::pow(c.rho, 1.0 - plan.epsilon);
      const EventProbability freq = block_mean_event_probability(
          spec, plan, sign, c.event_constant, c.samples, c.seed, c.threads);
      const ChernoffBound bound = chernoff_bound(
          spec, plan.block_cells, threshold,
          sign == EventSign::plus ? TailSide::lower : TailSide::upper);
      std::string oracle = "";
      if (spec.law() == DisorderSpec::Law::bernoulli) {
        const long R = plan.block_cells;
        const long k = static_cast<long>(std::floor(threshold * R));
        const double tail = sign == EventSign::plus
                                ? binomial_cdf(R, k, spec.rho())
                                : 1.0 - binomial_cdf(R, static_cast<long>(
                                                            std::ceil(threshold * R)) - 1,
                                                     spec.rho());
        oracle = double_repr(tail);
      }
      w.row({sign == EventSign::plus ? "+" : "-", double_repr(threshold),
             double_repr(freq.estimate), double_repr(freq.ci_half),
             freq.upper_bound_only ? "1" : "0", double_repr(bound.bound), oracle});
    }
  }
  extra["plan"] = {{"rho", plan.rho},
                   {"alpha", plan.alpha},
                   {"alpha_prime", plan.alpha_prime},
                   {"gamma", plan.gamma},
                   {"side_N", plan.side_N()},
                   {"side_L", plan.side_L()},
                   {"side_K", plan.side_K()},
                   {"side_L_prime", plan.side_L_prime()},
                   {"side_K_prime", plan.side_K_prime()},
                   {"epsilon", plan.epsilon},
                   {"block_cells", plan.block_cells},
                   {"separation_ok", plan.separation_ok},
                   {"threshold_ok", plan.threshold_ok},
                   {"degenerate", plan.degenerate},
                   {"warnings", plan.warnings}};
  return w.finish(extra);
}

ExperimentRecord run_continuum(const ExperimentConfig& c) {
  ContinuumModel model;
  model.dimension = c.dimension;
  model.disorder = c.continuum_disorder == "poisson" ? ContinuumDisorder::poisson
                                                     : ContinuumDisorder::bernoulli_lattice;
  model.varrho = c.varrho;
  model.mesh = c.mesh;
  model.box.dimension = c.dimension;
  model.box.half_length[0] = c.box_length / 2.0;
  model.box.half_length[1] = c.box_length / 2.0;

  if (!c.rho_grid.empty()) {
    RunWriter w(c, {"varrho", "energy", "estimate", "ci", "hits", "box_length", "replicas",
                    "upper_bound_only", "seed"});
    json extra;
    if (c.replicas > 0) {
      const TailFit fit =
          continuum_lifschitz_scan(model, c.rho_grid, c.alpha, c.replicas, c.seed, c.threads);
      for (const auto& p : fit.points)
        w.row({double_repr(p.rho), double_repr(p.energy), double_repr(p.estimate),
               double_repr(p.ci_half), std::to_string(p.hits), std::to_string(p.box_side),
               std::to_string(p.replicas), p.upper_bound_only ? "1" : "0",
               std::to_string(c.seed)});
      extra["fitted_exponent"] = fit.fitted_exponent;
      extra["r2"] = fit.r2;
    }
    return w.finish(extra);
  }

  RunWriter w(c, {"E", "estimate", "ci", "replicas", "box_length", "seed"});
  json extra;
  if (c.replicas > 0) {
    const IdsCurve curve = continuum_ids(model, c.energies, c.replicas, c.seed, c.threads);
    for (const auto& p : curve.points)
      w.row({double_repr(p.energy), double_repr(p.estimate), double_repr(p.ci_half),
             std::to_string(c.replicas), double_repr(c.box_length), std::to_string(c.seed)});
    extra["law"] = curve.law_name;
  }
  return w.finish(extra);
}

}  // namespace

std::string ExperimentConfig::to_json() const { return to_json_obj(*this).dump(2); }

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  return from_json_obj(json::parse(text));
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string ExperimentConfig::config_hash() const {
  // the hash identifies the experiment, not where it writes
  json j = to_json_obj(*this);
  j.erase("output_dir");
  j.erase("threads");
  return hex64(fnv1a64(j.dump()));
}

void ExperimentConfig::validate() const {
  static const std::set<std::string> kinds = {"ids", "floquet", "green", "ldp", "continuum"};
  if (!kinds.count(kind)) throw ValidationError("unknown experiment kind: " + kind);
  if (replicas < 0) throw ValidationError("replicas must be nonnegative");
  if (box_side < 1 || box_side % 2 == 0)
    throw ValidationError("box side must be a positive odd integer");
  if (output_dir.empty()) throw ValidationError("output_dir must be set");
}

ExperimentRecord run_experiment(const ExperimentConfig& config) {
  config.validate();
  if (config.kind == "ids") return run_ids(config);
  if (config.kind == "floquet") return run_floquet(config);
  if (config.kind == "green") return run_green(config);
  if (config.kind == "ldp") return run_ldp(config);
  return run_continuum(config);
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& base,
                                  const std::map<std::string, std::vector<std::string>>& grid,
                                  const std::string& manifest_path) {
  if (grid.empty()) throw ValidationError("sweep grid is empty");

  // Cartesian expansion in sorted-key, row-major order
  std::vector<std::string> keys;
  long total = 1;
  for (const auto& [k, vals] : grid) {
    if (vals.empty()) throw ValidationError("sweep grid has an empty value list: " + k);
    keys.push_back(k);
    total *= static_cast<long>(vals.size());
  }

  std::vector<SweepPoint> points;
  std::set<std::string> dirs;
  const bool seed_swept = grid.count("seed") > 0;

  for (long index = 0; index < total; ++index) {
    SweepPoint point;
    json j = json::parse(base.to_json());
    long rem = index;
    for (auto it = keys.rbegin(); it != keys.rend(); ++it) {
      const auto& vals = grid.at(*it);
      const std::string& raw = vals[rem % vals.size()];
      rem /= static_cast<long>(vals.size());
      json v;
      try {
        v = json::parse(raw);
      } catch (const json::exception&) {
        v = raw;  // bare string value
      }
      j[*it] = v;
      point.overrides[*it] = raw;
    }
    ExperimentConfig c = from_json_obj(j);
    if (!seed_swept) c.seed = mix_seed(base.seed, static_cast<std::uint64_t>(index));
    char sub[32];
    std::snprintf(sub, sizeof(sub), "point_%04ld", index);
    c.output_dir = (fs::path(base.output_dir) / sub).string();
    if (!dirs.insert(c.output_dir).second)
      throw ValidationError("sweep output path collision: " + c.output_dir);
    point.record = run_experiment(c);
    points.push_back(std::move(point));
  }

  json manifest = json::array();
  for (long i = 0; i < static_cast<long>(points.size()); ++i) {
    json entry;
    entry["index"] = i;
    entry["overrides"] = points[i].overrides;
    entry["rows"] = points[i].record.rows_path;
    entry["summary"] = points[i].record.summary_path;
    entry["config_hash"] = points[i].record.config_hash;
    entry["completed"] = points[i].record.completed;
    manifest.push_back(entry);
  }
  const fs::path parent = fs::path(manifest_path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream(manifest_path, std::ios::trunc | std::ios::binary) << manifest.dump(2) << "\n";
  return points;
}

}  // namespace dilute
