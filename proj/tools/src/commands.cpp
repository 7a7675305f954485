#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "dirclip/analytics.hpp"
#include "dirclip/csv.hpp"
#include "dirclip/dataset.hpp"
#include "dirclip/error.hpp"
#include "dirclip/eval.hpp"
#include "dirclip/run_log.hpp"

namespace dirclip::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_manifest(const fs::path& dir, const std::string& command, const json& arguments,
                    const json& results) {
  json m{{"format", "dirclip-artifact"},
         {"format_version", 1},
         {"library_version", kVersion},
         {"command", command},
         {"arguments", arguments},
         {"results", results}};
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw Error("cannot write " + (dir / "manifest.json").string());
  out << m.dump(2) << '\n';
}

std::vector<std::string> class_columns(const std::string& prefix, std::size_t k) {
  std::vector<std::string> cols;
  for (std::size_t c = 0; c < k; ++c) cols.push_back(prefix + std::to_string(c));
  return cols;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

ToyDataset load_dataset(const DatasetSource& src) {
  if (src.path) return read_dataset_csv(*src.path);
  return generate_dataset(src.generator, src.seed);
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.network.hidden_layers = {10, 10, 10, 10, 10};
  c.posterior.param_prior = PriorSpec::normal(1.0);
  c.sampler.kind = SamplerKind::HMC;
  return c;
}

ExperimentConfig config_or_default(const std::string& path) {
  return path.empty() ? default_config() : load_config(path);
}

TrainingProblem make_problem(const ExperimentConfig& cfg, const ToyDataset& ds) {
  TrainingProblem p;
  p.network = cfg.network;
  p.inputs = ds.points;
  p.labels = ds.labels;
  p.posterior = cfg.posterior;
  p.validate();
  return p;
}

ExperimentConfig config_from_run(const fs::path& run) {
  std::ifstream in(run / "manifest.json");
  if (!in) throw ConfigError("no manifest.json in " + run.string());
  const json m = json::parse(in);
  if (!m.contains("config") || m.at("config").is_null()) {
    throw ConfigError(run.string() + ": manifest has no config echo");
  }
  return parse_config(m.at("config").dump());
}

// --- subcommands --------------------------------------------------------

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  std::size_t chains = 0;
  std::size_t threads = 0;
};

int cmd_generate_dataset(const Common& o) {
  ExperimentConfig cfg = config_or_default(o.config);
  if (o.seed_set) cfg.dataset.seed = o.seed;
  if (cfg.dataset.path) throw ConfigError("dataset.path: generate-dataset needs a generator spec");
  const ToyDataset ds = generate_dataset(cfg.dataset.generator, cfg.dataset.seed);
  const fs::path dir = o.out.empty() ? fs::path("dataset") : fs::path(o.out);
  fs::create_directories(dir);
  write_dataset_csv(ds, dir / "dataset.csv");
  write_manifest(dir, "generate-dataset", json::parse(to_json(cfg)),
                 {{"points", ds.size()}, {"mislabeled", ds.spec.n_mislabeled}});
  return kExitOk;
}

int cmd_sample(const Common& o) {
  if (o.config.empty()) throw ConfigError("--config: required for sample");
  ExperimentConfig cfg = load_config(o.config);
  if (o.seed_set) cfg.seed = o.seed;
  if (o.chains) cfg.chains = o.chains;
  if (o.threads) cfg.threads = o.threads;
  if (!o.out.empty()) cfg.output = o.out;
  cfg.validate();

  const ToyDataset ds = load_dataset(cfg.dataset);
  const TrainingProblem problem = make_problem(cfg, ds);
  for (const auto& w : problem.posterior.warnings()) std::cerr << "warning: " << w << '\n';
  const RunLog log = run_chains(problem, cfg.chains, cfg.sampler, cfg.seed, cfg.threads);

  fs::create_directories(cfg.output);
  write_run_log(log, cfg.output, to_json(cfg));
  write_dataset_csv(ds, cfg.output / "dataset.csv");

  int code = kExitOk;
  for (const auto& c : log.chains) {
    std::cerr << "chain " << c.index << ": ";
    if (log.kind == SamplerKind::HMC) std::cerr << "acceptance " << c.acceptance_rate() << ", ";
    std::cerr << c.nonfinite_events << " non-finite events\n";
    if (c.failure) {
      std::cerr << "chain " << c.index << " failed: " << *c.failure << '\n';
      code = kExitNumerical;
    }
  }
  return code;
}

struct EvalOptions {
  std::string run;
  std::size_t resolution = 60;
  double margin = 1.0;
};

int cmd_eval(const Common& o, const EvalOptions& e) {
  if (e.run.empty()) throw ConfigError("--run: required for eval");
  const fs::path run(e.run);
  const ExperimentConfig cfg = config_from_run(run);
  const RunLog log = read_run_log(run);
  const ToyDataset ds = read_dataset_csv(run / "dataset.csv");
  const Ensemble ensemble{log.network, log.all_samples()};
  ensemble.validate();
  const std::size_t k = log.network.num_classes;
  const fs::path dir = o.out.empty() ? run / "eval" : fs::path(o.out);
  fs::create_directories(dir);

  const Metrics per = evaluate(ensemble, ds.points, ds.labels, EvalMode::PerSample);
  const Metrics ens = evaluate(ensemble, ds.points, ds.labels, EvalMode::Ensemble);
  {
    CsvWriter w(dir / "metrics.csv", {"mode", "accuracy", "mean_log_likelihood", "mean_confidence"});
    for (const auto& [name, m] : {std::pair{"per_sample", &per}, std::pair{"ensemble", &ens}}) {
      w.row_cells({name, format_double(m->accuracy), format_double(m->mean_log_likelihood),
                   format_double(m->mean_confidence)});
    }
  }
  {
    CsvWriter w(dir / "per_sample_accuracy.csv", {"chain", "sample", "accuracy"});
    std::size_t flat = 0;
    for (const auto& c : log.chains) {
      if (c.failure) continue;
      for (std::size_t s = 0; s < c.samples.size(); ++s, ++flat) {
        w.row_cells({std::to_string(c.index), std::to_string(s),
                     format_double(per.per_sample_accuracy[flat])});
      }
    }
  }
  {
    const Matrix probs = posterior_predictive(ensemble, ds.points);
    CsvWriter w(dir / "predictions.csv", concat({"x", "y", "label", "mislabeled"}, class_columns("p_class", k)));
    for (std::size_t i = 0; i < ds.size(); ++i) {
      std::vector<std::string> cells{format_double(ds.points(i, 0)), format_double(ds.points(i, 1)),
                                     std::to_string(ds.labels[i]), ds.mislabeled[i] ? "1" : "0"};
      for (std::size_t c = 0; c < k; ++c) cells.push_back(format_double(probs(i, c)));
      w.row_cells(cells);
    }
  }

  json rhat = nullptr;
  std::vector<std::vector<ParamVector>> chains;
  for (const auto& c : log.chains) {
    if (!c.failure) chains.push_back(c.samples);
  }
  const bool can_rhat = chains.size() >= 2 &&
                        std::all_of(chains.begin(), chains.end(), [&](const auto& c) {
                          return c.size() >= 4 && c.size() == chains.front().size();
                        });
  if (can_rhat) {
    const RHat rp = parameter_space_r_hat(chains);
    const RHat rf = function_space_r_hat(log.network, chains, ds.points);
    CsvWriter w(dir / "rhat.csv", {"space", "value", "degenerate"});
    w.row_cells({"parameter", format_double(rp.value), rp.degenerate ? "1" : "0"});
    w.row_cells({"function", format_double(rf.value), rf.degenerate ? "1" : "0"});
    rhat = {{"parameter", rp.value}, {"function", rf.value}};
  }

  if (log.network.input_dim == 2) {
    double x0 = ds.points(0, 0), x1 = x0, y0 = ds.points(0, 1), y1 = y0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      x0 = std::min(x0, ds.points(i, 0));
      x1 = std::max(x1, ds.points(i, 0));
      y0 = std::min(y0, ds.points(i, 1));
      y1 = std::max(y1, ds.points(i, 1));
    }
    const BoundingBox box{x0 - e.margin, x1 + e.margin, y0 - e.margin, y1 + e.margin};
    const BoundaryGrid g = decision_boundary_grid(ensemble, box, e.resolution);
    CsvWriter w(dir / "boundary_grid.csv", concat({"x", "y"}, class_columns("p_class", k)));
    for (std::size_t r = 0; r < g.points.rows(); ++r) {
      std::vector<double> row{g.points(r, 0), g.points(r, 1)};
      for (std::size_t c = 0; c < k; ++c) row.push_back(g.probs(r, c));
      w.row(row);
    }
  }

  for (const auto& [name, sel] : {std::pair{"logprob_cdf_all.csv", CdfSelector::AllClasses},
                                  std::pair{"logprob_cdf_true.csv", CdfSelector::TrueClass}}) {
    const CdfTable t = logprob_cdf(ensemble, ds.points, ds.labels, sel);
    CsvWriter w(dir / name, {"log_prob", "cdf"});
    for (std::size_t i = 0; i < t.values.size(); ++i) w.row({t.values[i], t.cdf[i]});
  }

  write_manifest(dir, "eval",
                 {{"run", e.run}, {"resolution", e.resolution}, {"margin", e.margin},
                  {"config", json::parse(to_json(cfg))}},
                 {{"ensemble_accuracy", ens.accuracy},
                  {"per_sample_accuracy", per.accuracy},
                  {"ensemble_mean_log_likelihood", ens.mean_log_likelihood},
                  {"n_samples", ensemble.samples.size()},
                  {"r_hat", rhat}});
  std::cout << "ensemble accuracy " << ens.accuracy << ", per-sample accuracy " << per.accuracy
            << '\n';
  return kExitOk;
}

struct PhaseOptions {
  std::size_t k = 10;
  std::size_t alpha_steps = 99;
  double alpha_min = 0.01, alpha_max = 0.99;
  std::size_t p_steps = 99;
  std::size_t k_sweep_max = 0;
};

int cmd_phase_diagram(const Common& o, const PhaseOptions& p) {
  if (p.k < 2) throw ConfigError("--k: must be >= 2");
  if (p.alpha_steps < 2 || p.p_steps < 1) throw ConfigError("--alpha-steps/--p-steps: grid too small");
  const auto alphas = linspace(p.alpha_min, p.alpha_max, p.alpha_steps);
  // Wrong-class probabilities strictly inside (0, 1).
  std::vector<double> probs;
  for (std::size_t j = 1; j <= p.p_steps; ++j) {
    probs.push_back(static_cast<double>(j) / static_cast<double>(p.p_steps + 1));
  }
  const fs::path dir = o.out.empty() ? fs::path("phase-diagram") : fs::path(o.out);
  fs::create_directories(dir);
  const PhaseDiagram d = phase_diagram(p.k, alphas, probs);
  {
    CsvWriter w(dir / "phase_diagram.csv", {"alpha", "p_wrong", "delta_log_true", "positive"});
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      for (std::size_t j = 0; j < probs.size(); ++j) {
        w.row_cells({format_double(alphas[i]), format_double(probs[j]), format_double(d.at(i, j)),
                     d.at(i, j) > 0.0 ? "1" : "0"});
      }
    }
  }
  json sweep = nullptr;
  if (p.k_sweep_max >= 2) {
    CsvWriter w(dir / "critical_alpha.csv", {"k", "critical_alpha", "boundary_alpha"});
    for (std::size_t k = 2; k <= p.k_sweep_max; ++k) {
      const PhaseDiagram dk = phase_diagram(k, alphas, probs);
      w.row_cells({std::to_string(k), format_double(critical_alpha(k)),
                   format_double(dk.boundary_alpha())});
    }
    sweep = p.k_sweep_max;
  }
  const double boundary = d.boundary_alpha();
  write_manifest(dir, "phase-diagram",
                 {{"k", p.k}, {"alpha_min", p.alpha_min}, {"alpha_max", p.alpha_max},
                  {"alpha_steps", p.alpha_steps}, {"p_steps", p.p_steps}, {"k_sweep_max", sweep}},
                 {{"critical_alpha", critical_alpha(p.k)},
                  {"boundary_alpha", std::isnan(boundary) ? json(nullptr) : json(boundary)}});
  std::cout << "critical alpha " << critical_alpha(p.k) << ", grid boundary " << boundary << '\n';
  return kExitOk;
}

struct CdfOptions {
  std::vector<double> temperatures{1.0, 0.3, 0.1, 0.03};
  std::size_t points = 1001;
  std::size_t mc_samples = 0;
};

double empirical_cdf(const std::vector<double>& sorted, double z) {
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), z);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

int cmd_cdf(const Common& o, const CdfOptions& c) {
  if (c.points < 2) throw ConfigError("--points: must be >= 2");
  for (double t : c.temperatures) {
    if (!(t > 0.0) || t > 1.0) throw ConfigError("--t: temperatures must lie in (0, 1]");
  }
  const fs::path dir = o.out.empty() ? fs::path("cdf") : fs::path(o.out);
  fs::create_directories(dir);
  std::vector<std::string> header{"temperature", "z", "cdf_cold", "cdf_upper_bound"};
  if (c.mc_samples > 0) header = concat(header, {"empirical_cold", "empirical_upper_bound"});
  CsvWriter w(dir / "cdf.csv", header);
  json ks = json::array();
  const auto zs = linspace(0.0, 1.0, c.points);
  for (std::size_t ti = 0; ti < c.temperatures.size(); ++ti) {
    const double t = c.temperatures[ti];
    RejectionSample cold, up;
    if (c.mc_samples > 0) {
      cold = rejection_sample_unit([t](double z) { return cold_likelihood_density(z, t); }, 1.0,
                                   c.mc_samples, o.seed + 2 * ti);
      up = rejection_sample_unit([t](double z) { return upper_bound_density(z, t); }, 1.0,
                                 c.mc_samples, o.seed + 2 * ti + 1);
      ks.push_back({{"temperature", t},
                    {"cold", ks_distance(cold.samples, [t](double z) { return cdf_cold(z, t); })},
                    {"upper_bound",
                     ks_distance(up.samples, [t](double z) { return cdf_upper_bound(z, t); })}});
    }
    for (double z : zs) {
      std::vector<double> row{t, z, cdf_cold(z, t), cdf_upper_bound(z, t)};
      if (c.mc_samples > 0) {
        row.push_back(empirical_cdf(cold.samples, z));
        row.push_back(empirical_cdf(up.samples, z));
      }
      w.row(row);
    }
  }
  write_manifest(dir, "cdf",
                 {{"t", c.temperatures}, {"points", c.points}, {"mc_samples", c.mc_samples},
                  {"seed", o.seed}},
                 {{"sup_distance", ks}});
  return kExitOk;
}

struct WassersteinOptions {
  double t_min = 1e-4, t_max = 1.0;
  std::size_t steps = 121;
  std::size_t nodes = 100000;
};

int cmd_wasserstein(const Common& o, const WassersteinOptions& wo) {
  if (!(wo.t_min > 0.0) || !(wo.t_max > wo.t_min) || wo.t_max > 1.0) {
    throw ConfigError("--t-min/--t-max: need 0 < t-min < t-max <= 1");
  }
  if (wo.steps < 2 || wo.nodes < 2) throw ConfigError("--steps/--nodes: must be >= 2");
  const auto ts = logspace(std::log10(wo.t_min), std::log10(wo.t_max), wo.steps);
  const auto ws = wasserstein_curve(ts, wo.nodes);
  const fs::path dir = o.out.empty() ? fs::path("wasserstein") : fs::path(o.out);
  fs::create_directories(dir);
  CsvWriter w(dir / "wasserstein.csv", {"temperature", "distance"});
  for (std::size_t i = 0; i < ts.size(); ++i) w.row({ts[i], ws[i]});
  const auto peak = std::max_element(ws.begin(), ws.end()) - ws.begin();
  write_manifest(dir, "wasserstein",
                 {{"t_min", wo.t_min}, {"t_max", wo.t_max}, {"steps", wo.steps}, {"nodes", wo.nodes}},
                 {{"argmax_temperature", ts[static_cast<std::size_t>(peak)]},
                  {"max_distance", ws[static_cast<std::size_t>(peak)]}});
  return kExitOk;
}

struct FlowCliOptions {
  std::string density = "posterior";
  FlowOptions flow;
  std::size_t rejection_samples = 0;
};

int cmd_flow(const Common& o, FlowCliOptions f) {
  if (f.density == "prior") {
    f.flow.density = FlowDensity::Prior;
  } else if (f.density == "likelihood") {
    f.flow.density = FlowDensity::Likelihood;
  } else if (f.density == "posterior") {
    f.flow.density = FlowDensity::Posterior;
  } else {
    throw ConfigError("--density: expected prior, likelihood or posterior");
  }
  f.flow.seed = o.seed;
  const FlowResult r = simplex_flow(f.flow);
  const std::size_t k = f.flow.num_classes;
  const fs::path dir = o.out.empty() ? fs::path("flow") : fs::path(o.out);
  fs::create_directories(dir);
  {
    CsvWriter w(dir / "trajectories.csv", concat({"particle", "point"}, class_columns("p_class", k)));
    for (std::size_t n = 0; n < r.trajectories.size(); ++n) {
      for (std::size_t t = 0; t < r.trajectories[n].size(); ++t) {
        std::vector<std::string> cells{std::to_string(n), std::to_string(t)};
        for (double p : r.trajectories[n][t]) cells.push_back(format_double(p));
        w.row_cells(cells);
      }
    }
  }
  {
    CsvWriter w(dir / "corners.csv", {"class", "fraction"});
    for (std::size_t c = 0; c < k; ++c) w.row_cells({std::to_string(c), format_double(r.corner_fraction[c])});
  }
  json results{{"wrong_corner_fraction", r.wrong_corner_fraction},
               {"clamp_events", r.clamp_events},
               {"max_simplex_error", r.max_simplex_error}};
  if (f.rejection_samples > 0 && f.flow.density == FlowDensity::Posterior) {
    results["rejection_low_true_mass"] = dirichlet_posterior_low_true_mass(
        k, f.flow.alpha, f.flow.label, f.rejection_samples, o.seed);
  }
  write_manifest(dir, "flow",
                 {{"density", f.density}, {"k", k}, {"alpha", f.flow.alpha}, {"label", f.flow.label},
                  {"particles", f.flow.n_particles}, {"step", f.flow.step_size},
                  {"steps", f.flow.n_steps}, {"record_every", f.flow.record_every},
                  {"rejection_samples", f.rejection_samples}, {"seed", o.seed}},
                 results);
  std::cout << "wrong-corner fraction " << r.wrong_corner_fraction << '\n';
  return kExitOk;
}

struct SliceOptions {
  std::string run;
  std::size_t bias_index = 0;
  double theta_min = -20.0, theta_max = 20.0;
  std::size_t theta_steps = 401;
  std::string prior = "dirichlet";
  double alpha = 0.1, clip = -10.0, sigma = 1.0;
  std::size_t fit_epochs = 3000;
};

int cmd_slice(const Common& o, const SliceOptions& s) {
  PriorSpec prior;
  if (s.prior == "dirichlet") {
    prior = PriorSpec::dirichlet(s.alpha);
  } else if (s.prior == "dirclip") {
    prior = PriorSpec::dirclip(s.alpha, s.clip);
  } else if (s.prior == "normal") {
    prior = PriorSpec::normal(s.sigma);
  } else {
    throw ConfigError("--prior: expected dirichlet, dirclip or normal");
  }
  prior.validate();
  if (s.theta_steps < 2 || !(s.theta_max > s.theta_min)) throw ConfigError("--theta-*: invalid grid");

  ExperimentConfig cfg;
  ParamVector params;
  ToyDataset ds;
  if (!s.run.empty()) {
    cfg = config_from_run(s.run);
    const RunLog log = read_run_log(s.run);
    const auto all = log.all_samples();
    if (all.empty()) throw ConfigError(s.run + ": run has no samples");
    params = all.back();
    ds = read_dataset_csv(fs::path(s.run) / "dataset.csv");
  } else {
    cfg = config_or_default(o.config);
    if (o.seed_set) cfg.seed = o.seed;
    ds = load_dataset(cfg.dataset);
    TrainingProblem problem = make_problem(cfg, ds);
    problem.posterior.prediction_prior.reset();
    problem.posterior.param_prior = PriorSpec::uniform();
    Rng rng = Rng::keyed(cfg.seed, 4, 0);
    params = fit_map(problem, init_params(cfg.network, rng), s.fit_epochs, 0.03, 10.0, ds.size(),
                     cfg.seed);
  }
  const auto thetas = linspace(s.theta_min, s.theta_max, s.theta_steps);
  const auto curve = divergence_slice(cfg.network, params, ds.points, ds.labels, s.bias_index,
                                      thetas, prior);
  const fs::path dir = o.out.empty() ? fs::path("slice") : fs::path(o.out);
  fs::create_directories(dir);
  CsvWriter w(dir / "slice.csv", {"theta", "prior_logpdf", "posterior_logpdf"});
  for (const auto& p : curve) w.row({p.theta, p.prior_logpdf, p.posterior_logpdf});
  json results = json::object();
  if (prior.family == PriorFamily::DirClip) {
    results["dirclip_bound"] =
        dirclip_total_bound(ds.size(), cfg.network.num_classes, prior.alpha, prior.clip);
  }
  write_manifest(dir, "slice",
                 {{"run", s.run}, {"config", json::parse(to_json(cfg))}, {"bias_index", s.bias_index},
                  {"theta_min", s.theta_min}, {"theta_max", s.theta_max},
                  {"theta_steps", s.theta_steps}, {"prior", s.prior}, {"alpha", s.alpha},
                  {"clip", s.clip}, {"sigma", s.sigma}, {"fit_epochs", s.fit_epochs}},
                 results);
  return kExitOk;
}

struct SweepOptions {
  double scale_min = 1e-2, scale_max = 10.0;
  std::size_t steps = 10;
  std::size_t prior_samples = 50;
};

int cmd_sweep(const Common& o, const SweepOptions& s) {
  if (!(s.scale_min > 0.0) || !(s.scale_max > s.scale_min)) {
    throw ConfigError("--scale-min/--scale-max: need 0 < min < max");
  }
  if (s.steps < 2) throw ConfigError("--steps: must be >= 2");
  ExperimentConfig cfg = config_or_default(o.config);
  const ToyDataset ds = load_dataset(cfg.dataset);
  const auto scales = logspace(std::log10(s.scale_min), std::log10(s.scale_max), s.steps);
  const auto curve = prior_confidence_sweep(cfg.network, scales, s.prior_samples, ds.points, o.seed);
  const fs::path dir = o.out.empty() ? fs::path("sweep") : fs::path(o.out);
  fs::create_directories(dir);
  CsvWriter w(dir / "sweep.csv", {"scale", "mean_confidence"});
  std::vector<double> conf;
  for (const auto& p : curve) {
    w.row({p.scale, p.mean_confidence});
    conf.push_back(p.mean_confidence);
  }
  write_manifest(dir, "sweep",
                 {{"config", json::parse(to_json(cfg))}, {"scale_min", s.scale_min},
                  {"scale_max", s.scale_max}, {"steps", s.steps},
                  {"prior_samples", s.prior_samples}, {"seed", o.seed}},
                 {{"spearman", spearman(scales, conf)},
                  {"uniform_confidence", 1.0 / static_cast<double>(cfg.network.num_classes)}});
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Bayesian neural network priors over predictions: samplers and analytics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  Common common;
  auto add_common = [&](CLI::App* sub, bool config, bool chains) {
    if (config) sub->add_option("--config", common.config, "Experiment config (JSON)");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { common.seed = s; common.seed_set = true; }, "Base seed");
    sub->add_option("--out", common.out, "Output directory");
    if (chains) {
      sub->add_option("--chains", common.chains, "Number of chains")->check(CLI::PositiveNumber);
      sub->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
    }
  };

  std::function<int()> action;

  auto* gen = app.add_subcommand("generate-dataset", "Generate the 2D toy dataset");
  add_common(gen, true, false);
  gen->callback([&] { action = [&] { return cmd_generate_dataset(common); }; });

  auto* sample = app.add_subcommand("sample", "Run sampler chains and write a run log");
  add_common(sample, true, true);
  sample->callback([&] { action = [&] { return cmd_sample(common); }; });

  EvalOptions eval_opts;
  auto* eval = app.add_subcommand("eval", "Evaluate a run log");
  add_common(eval, false, false);
  eval->add_option("--run", eval_opts.run, "Run log directory")->required();
  eval->add_option("--resolution", eval_opts.resolution, "Decision-boundary grid resolution");
  eval->add_option("--margin", eval_opts.margin, "Grid margin around the data");
  eval->callback([&] { action = [&] { return cmd_eval(common, eval_opts); }; });

  PhaseOptions phase_opts;
  auto* phase = app.add_subcommand("phase-diagram", "Sign of the true-class update over (alpha, p)");
  add_common(phase, false, false);
  phase->add_option("--k", phase_opts.k, "Number of classes");
  phase->add_option("--alpha-min", phase_opts.alpha_min);
  phase->add_option("--alpha-max", phase_opts.alpha_max);
  phase->add_option("--alpha-steps", phase_opts.alpha_steps);
  phase->add_option("--p-steps", phase_opts.p_steps);
  phase->add_option("--k-sweep-max", phase_opts.k_sweep_max, "Also tabulate the boundary for K = 2..N");
  phase->callback([&] { action = [&] { return cmd_phase_diagram(common, phase_opts); }; });

  CdfOptions cdf_opts;
  auto* cdf = app.add_subcommand("cdf", "Cold-likelihood and upper-bound CDFs");
  add_common(cdf, false, false);
  cdf->add_option("--t", cdf_opts.temperatures, "Temperatures");
  cdf->add_option("--points", cdf_opts.points, "z grid size");
  cdf->add_option("--mc-samples", cdf_opts.mc_samples, "Rejection samples per CDF (0 = none)");
  cdf->callback([&] { action = [&] { return cmd_cdf(common, cdf_opts); }; });

  WassersteinOptions w_opts;
  auto* wass = app.add_subcommand("wasserstein", "Wasserstein distance over temperature");
  add_common(wass, false, false);
  wass->add_option("--t-min", w_opts.t_min);
  wass->add_option("--t-max", w_opts.t_max);
  wass->add_option("--steps", w_opts.steps);
  wass->add_option("--nodes", w_opts.nodes, "Quadrature nodes");
  wass->callback([&] { action = [&] { return cmd_wasserstein(common, w_opts); }; });

  FlowCliOptions flow_opts;
  auto* flow = app.add_subcommand("flow", "Gradient flow of particles on the simplex");
  add_common(flow, false, false);
  flow->add_option("--density", flow_opts.density, "prior, likelihood or posterior");
  flow->add_option("--k", flow_opts.flow.num_classes);
  flow->add_option("--alpha", flow_opts.flow.alpha);
  flow->add_option("--label", flow_opts.flow.label);
  flow->add_option("--particles", flow_opts.flow.n_particles);
  flow->add_option("--step", flow_opts.flow.step_size);
  flow->add_option("--steps", flow_opts.flow.n_steps);
  flow->add_option("--record-every", flow_opts.flow.record_every);
  flow->add_option("--rejection-samples", flow_opts.rejection_samples);
  flow->callback([&] { action = [&] { return cmd_flow(common, flow_opts); }; });

  SliceOptions slice_opts;
  auto* slice = app.add_subcommand("slice", "Log-density along one output-layer bias");
  add_common(slice, true, false);
  slice->add_option("--run", slice_opts.run, "Take parameters from this run log");
  slice->add_option("--bias-index", slice_opts.bias_index);
  slice->add_option("--theta-min", slice_opts.theta_min);
  slice->add_option("--theta-max", slice_opts.theta_max);
  slice->add_option("--theta-steps", slice_opts.theta_steps);
  slice->add_option("--prior", slice_opts.prior, "dirichlet, dirclip or normal");
  slice->add_option("--alpha", slice_opts.alpha);
  slice->add_option("--clip", slice_opts.clip);
  slice->add_option("--sigma", slice_opts.sigma);
  slice->add_option("--fit-epochs", slice_opts.fit_epochs);
  slice->callback([&] { action = [&] { return cmd_slice(common, slice_opts); }; });

  SweepOptions sweep_opts;
  auto* sweep = app.add_subcommand("sweep", "Prior confidence as a function of prior scale");
  add_common(sweep, true, false);
  sweep->add_option("--scale-min", sweep_opts.scale_min);
  sweep->add_option("--scale-max", sweep_opts.scale_max);
  sweep->add_option("--steps", sweep_opts.steps);
  sweep->add_option("--prior-samples", sweep_opts.prior_samples);
  sweep->callback([&] { action = [&] { return cmd_sweep(common, sweep_opts); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    return action ? action() : kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace dirclip::cli
