#include "config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "dirclip/error.hpp"

namespace dirclip::cli {

namespace {

using nlohmann::json;

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

// Object view that remembers its path and rejects keys it was not asked for.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(name() + ": expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    for (const auto& [key, _] : j_.items()) {
      bool known = false;
      for (const char* k : keys) known = known || key == k;
      if (!known) throw ConfigError(join(path_, key) + ": unknown key");
    }
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const json& at(const char* key) const {
    if (!j_.contains(key)) throw ConfigError(join(path_, key) + ": required key is missing");
    return j_.at(key);
  }
  std::string path(const char* key) const { return join(path_, key); }

  double number(const char* key) const {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(path(key) + ": expected a number");
    return v.get<double>();
  }
  double number_or(const char* key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }
  std::uint64_t count(const char* key) const {
    const json& v = at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw ConfigError(path(key) + ": expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }
  std::uint64_t count_or(const char* key, std::uint64_t fallback) const {
    return has(key) ? count(key) : fallback;
  }
  std::string text(const char* key) const {
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(path(key) + ": expected a string");
    return v.get<std::string>();
  }
  bool flag_or(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_boolean()) throw ConfigError(path(key) + ": expected true or false");
    return v.get<bool>();
  }

 private:
  std::string name() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
};

NetworkConfig parse_network(const Fields& f) {
  f.allow({"input_dim", "hidden_layers", "num_classes", "activation"});
  NetworkConfig n;
  n.input_dim = f.count_or("input_dim", 2);
  n.num_classes = f.count_or("num_classes", 2);
  const json& h = f.at("hidden_layers");
  if (!h.is_array()) throw ConfigError(f.path("hidden_layers") + ": expected an array");
  for (const auto& w : h) {
    if (!w.is_number_integer() || w.get<std::int64_t>() < 1) {
      throw ConfigError(f.path("hidden_layers") + ": widths must be positive integers");
    }
    n.hidden_layers.push_back(w.get<std::size_t>());
  }
  if (f.has("activation") && f.text("activation") != "relu") {
    throw ConfigError(f.path("activation") + ": only \"relu\" is supported");
  }
  return n;
}

PriorSpec parse_prior(const Fields& f) {
  const std::string family = f.text("family");
  if (family == "uniform") {
    f.allow({"family"});
    return PriorSpec::uniform();
  }
  if (family == "normal") {
    f.allow({"family", "sigma"});
    return PriorSpec::normal(f.number("sigma"));
  }
  if (family == "dirichlet") {
    f.allow({"family", "alpha"});
    return PriorSpec::dirichlet(f.number("alpha"));
  }
  if (family == "dirclip") {
    f.allow({"family", "alpha", "clip"});
    return PriorSpec::dirclip(f.number("alpha"), f.number("clip"));
  }
  if (family == "ndg") {
    f.allow({"family", "alpha"});
    return PriorSpec::ndg(f.number("alpha"));
  }
  if (family == "confidence") {
    f.allow({"family", "temperature"});
    return PriorSpec::confidence(f.number("temperature"));
  }
  throw ConfigError(f.path("family") + ": unknown prior family \"" + family + "\"");
}

LikelihoodSpec parse_likelihood(const Fields& f) {
  const std::string kind = f.text("kind");
  LikelihoodSpec l;
  if (kind == "categorical") {
    f.allow({"kind"});
    l.kind = LikelihoodKind::Categorical;
  } else if (kind == "ndg") {
    f.allow({"kind", "alpha"});
    l.kind = LikelihoodKind::NDGQuadratic;
    l.ndg_alpha = f.number("alpha");
  } else if (kind == "none") {
    f.allow({"kind"});
    l.kind = LikelihoodKind::None;
  } else {
    throw ConfigError(f.path("kind") + ": unknown likelihood \"" + kind + "\"");
  }
  return l;
}

PosteriorSpec parse_posterior(const Fields& f) {
  f.allow({"param_prior", "prediction_prior", "likelihood", "temperature"});
  PosteriorSpec p;
  p.param_prior = parse_prior(Fields(f.at("param_prior"), f.path("param_prior")));
  if (f.has("prediction_prior")) {
    p.prediction_prior = parse_prior(Fields(f.at("prediction_prior"), f.path("prediction_prior")));
  }
  if (f.has("likelihood")) p.likelihood = parse_likelihood(Fields(f.at("likelihood"), f.path("likelihood")));
  p.temperature = f.number_or("temperature", 1.0);
  return p;
}

ChainConfig parse_sampler(const Fields& f) {
  f.allow({"kind", "hmc", "sghmc", "pretrain"});
  ChainConfig c;
  const std::string kind = f.text("kind");
  if (kind == "hmc") {
    c.kind = SamplerKind::HMC;
    if (f.has("sghmc")) throw ConfigError(f.path("sghmc") + ": not allowed when kind is \"hmc\"");
    const Fields h(f.at("hmc"), f.path("hmc"));
    h.allow({"leapfrog_steps", "step_size", "n_samples", "n_warmup"});
    c.hmc.leapfrog_steps = h.count("leapfrog_steps");
    c.hmc.step_size = h.number("step_size");
    c.hmc.n_samples = h.count("n_samples");
    c.hmc.n_warmup = h.count_or("n_warmup", 0);
  } else if (kind == "sghmc") {
    c.kind = SamplerKind::SGHMC;
    if (f.has("hmc")) throw ConfigError(f.path("hmc") + ": not allowed when kind is \"sghmc\"");
    const Fields s(f.at("sghmc"), f.path("sghmc"));
    s.allow({"friction", "batch_size", "schedule"});
    // Friction has no default on purpose.
    c.sghmc.friction = s.number("friction");
    c.sghmc.batch_size = s.count("batch_size");
    const Fields sc(s.at("schedule"), s.path("schedule"));
    sc.allow({"max_lr", "max_temperature", "epochs"});
    c.sghmc.schedule.max_lr = sc.number("max_lr");
    c.sghmc.schedule.max_temperature = sc.number("max_temperature");
    c.sghmc.schedule.epochs = sc.count("epochs");
  } else {
    throw ConfigError(f.path("kind") + ": expected \"hmc\" or \"sghmc\"");
  }
  if (f.has("pretrain")) {
    const Fields p(f.at("pretrain"), f.path("pretrain"));
    p.allow({"objective", "epochs", "learning_rate", "friction"});
    PretrainConfig pt;
    const std::string objective = p.text("objective");
    if (objective == "max_likelihood") {
      pt.objective = PretrainObjective::MaximumLikelihood;
    } else if (objective == "posterior") {
      pt.objective = PretrainObjective::Posterior;
    } else {
      throw ConfigError(p.path("objective") + ": expected \"max_likelihood\" or \"posterior\"");
    }
    pt.epochs = p.count("epochs");
    pt.learning_rate = p.number("learning_rate");
    pt.friction = p.number("friction");
    c.pretrain = pt;
  }
  return c;
}

std::array<double, 2> parse_point(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(path + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

DatasetSource parse_dataset(const Fields& f) {
  f.allow({"path", "generator", "seed"});
  DatasetSource d;
  if (f.has("path") && f.has("generator")) {
    throw ConfigError(f.path("path") + ": give either \"path\" or \"generator\", not both");
  }
  if (f.has("path")) d.path = f.text("path");
  d.seed = f.count_or("seed", 0);
  if (f.has("generator")) {
    const Fields g(f.at("generator"), f.path("generator"));
    g.allow({"points_per_class", "center0", "center1", "spread", "n_mislabeled", "mislabeled_offset"});
    ToyDatasetSpec s;
    s.points_per_class = g.count_or("points_per_class", s.points_per_class);
    if (g.has("center0")) s.center0 = parse_point(g.at("center0"), g.path("center0"));
    if (g.has("center1")) s.center1 = parse_point(g.at("center1"), g.path("center1"));
    s.spread = g.number_or("spread", s.spread);
    s.n_mislabeled = g.count_or("n_mislabeled", s.n_mislabeled);
    s.mislabeled_offset = g.number_or("mislabeled_offset", s.mislabeled_offset);
    d.generator = s;
  }
  return d;
}

json prior_json(const PriorSpec& p) {
  switch (p.family) {
    case PriorFamily::Uniform: return {{"family", "uniform"}};
    case PriorFamily::NormalParams: return {{"family", "normal"}, {"sigma", p.sigma}};
    case PriorFamily::Dirichlet: return {{"family", "dirichlet"}, {"alpha", p.alpha}};
    case PriorFamily::DirClip: return {{"family", "dirclip"}, {"alpha", p.alpha}, {"clip", p.clip}};
    case PriorFamily::NDG: return {{"family", "ndg"}, {"alpha", p.alpha}};
    case PriorFamily::Confidence: return {{"family", "confidence"}, {"temperature", p.temperature}};
  }
  return {};
}

}  // namespace

void ExperimentConfig::validate() const {
  network.validate();
  if (network.input_dim != 2 && !dataset.path) {
    throw ConfigError("network.input_dim: the dataset generator produces 2D points");
  }
  posterior.validate();
  dataset.generator.validate();
  if (chains < 1) throw ConfigError("chains: must be >= 1");
  if (threads < 1) throw ConfigError("threads: must be >= 1");
  if (sampler.kind == SamplerKind::HMC) {
    if (!(sampler.hmc.step_size > 0.0)) throw ConfigError("sampler.hmc.step_size: must be > 0");
    if (sampler.hmc.n_samples < 1) throw ConfigError("sampler.hmc.n_samples: must be >= 1");
  } else {
    sampler.sghmc.schedule.validate();
    if (!(sampler.sghmc.friction > 0.0)) throw ConfigError("sampler.sghmc.friction: must be > 0");
    if (sampler.sghmc.schedule.max_lr * sampler.sghmc.friction > 1.0) {
      throw ConfigError("sampler.sghmc: max_lr * friction must be <= 1");
    }
    if (sampler.sghmc.batch_size < 1) throw ConfigError("sampler.sghmc.batch_size: must be >= 1");
  }
  if (sampler.pretrain) {
    const auto& p = *sampler.pretrain;
    if (!(p.learning_rate > 0.0) || !(p.friction > 0.0) || p.learning_rate * p.friction > 1.0) {
      throw ConfigError("sampler.pretrain: need learning_rate > 0, friction > 0, product <= 1");
    }
  }
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  const Fields f(j, "");
  f.allow({"network", "posterior", "sampler", "dataset", "seed", "chains", "threads", "output"});
  ExperimentConfig c;
  c.network = parse_network(Fields(f.at("network"), "network"));
  c.posterior = parse_posterior(Fields(f.at("posterior"), "posterior"));
  c.sampler = parse_sampler(Fields(f.at("sampler"), "sampler"));
  if (f.has("dataset")) c.dataset = parse_dataset(Fields(f.at("dataset"), "dataset"));
  c.seed = f.count_or("seed", 0);
  c.chains = f.count_or("chains", 2);
  c.threads = f.count_or("threads", 1);
  if (f.has("output")) c.output = f.text("output");
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_json(const ExperimentConfig& c) {
  json j;
  j["network"] = {{"input_dim", c.network.input_dim},
                  {"hidden_layers", c.network.hidden_layers},
                  {"num_classes", c.network.num_classes},
                  {"activation", "relu"}};
  json post{{"param_prior", prior_json(c.posterior.param_prior)},
            {"temperature", c.posterior.temperature}};
  if (c.posterior.prediction_prior) post["prediction_prior"] = prior_json(*c.posterior.prediction_prior);
  switch (c.posterior.likelihood.kind) {
    case LikelihoodKind::Categorical: post["likelihood"] = {{"kind", "categorical"}}; break;
    case LikelihoodKind::NDGQuadratic:
      post["likelihood"] = {{"kind", "ndg"}, {"alpha", c.posterior.likelihood.ndg_alpha}};
      break;
    case LikelihoodKind::None: post["likelihood"] = {{"kind", "none"}}; break;
  }
  j["posterior"] = post;

  json s;
  if (c.sampler.kind == SamplerKind::HMC) {
    s["kind"] = "hmc";
    s["hmc"] = {{"leapfrog_steps", c.sampler.hmc.leapfrog_steps},
                {"step_size", c.sampler.hmc.step_size},
                {"n_samples", c.sampler.hmc.n_samples},
                {"n_warmup", c.sampler.hmc.n_warmup}};
  } else {
    const auto& g = c.sampler.sghmc;
    s["kind"] = "sghmc";
    s["sghmc"] = {{"friction", g.friction},
                  {"batch_size", g.batch_size},
                  {"schedule", {{"max_lr", g.schedule.max_lr},
                                {"max_temperature", g.schedule.max_temperature},
                                {"epochs", g.schedule.epochs}}}};
  }
  if (c.sampler.pretrain) {
    const auto& p = *c.sampler.pretrain;
    s["pretrain"] = {{"objective", p.objective == PretrainObjective::MaximumLikelihood
                                       ? "max_likelihood"
                                       : "posterior"},
                     {"epochs", p.epochs},
                     {"learning_rate", p.learning_rate},
                     {"friction", p.friction}};
  }
  j["sampler"] = s;

  json d{{"seed", c.dataset.seed}};
  if (c.dataset.path) {
    d["path"] = c.dataset.path->string();
  } else {
    const auto& g = c.dataset.generator;
    d["generator"] = {{"points_per_class", g.points_per_class},
                      {"center0", g.center0},
                      {"center1", g.center1},
                      {"spread", g.spread},
                      {"n_mislabeled", g.n_mislabeled},
                      {"mislabeled_offset", g.mislabeled_offset}};
  }
  j["dataset"] = d;
  j["seed"] = c.seed;
  j["chains"] = c.chains;
  j["threads"] = c.threads;
  j["output"] = c.output.string();
  return j.dump(2);
}

}  // namespace dirclip::cli
