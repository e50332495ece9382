#include "mfbounds/config.hpp"

#include <fstream>

#include "mfbounds/error.hpp"
#include "mfbounds/lp_oracle.hpp"

namespace mfb {

namespace {

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, where + "." + key + ": " + e.what());
  }
}

template <class T>
void get_optional(const json& j, const char* key, T& out, const std::string& where) {
  if (j.contains(key)) out = get<T>(j, key, where);
}

ConstraintFamily family_from_json(const json& j, const std::string& where) {
  reject_unknown_keys(j, {"payoff", "strikes"}, where);
  ConstraintFamily f{get<std::string>(j, "payoff", where), {}};
  get_optional(j, "strikes", f.strikes, where);
  const bool templated = f.payoff.find("{K}") != std::string::npos;
  if (templated && f.strikes.empty()) fail(ErrorKind::Config, where + ": payoff uses {K} but lists no strikes");
  if (!templated && !f.strikes.empty()) fail(ErrorKind::Config, where + ": strikes given for a payoff without {K}");
  return f;
}

std::vector<ConstraintFamily> families_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) fail(ErrorKind::Config, where + " must be an array");
  std::vector<ConstraintFamily> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(family_from_json(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

json to_json(const ConstraintFamily& f) { return json{{"payoff", f.payoff}, {"strikes", f.strikes}}; }

json to_json(const std::vector<ConstraintFamily>& fs) {
  json out = json::array();
  for (const auto& f : fs) out.push_back(to_json(f));
  return out;
}

}  // namespace

std::vector<int> OracleConfig::grid_for(int dimension) const {
  if (grid.empty()) return std::vector<int>(static_cast<std::size_t>(dimension), 50);
  if (grid.size() == 1) return std::vector<int>(static_cast<std::size_t>(dimension), grid.front());
  if (static_cast<int>(grid.size()) != dimension) {
    fail(ErrorKind::Config, "oracle.grid has " + std::to_string(grid.size()) + " entries for " +
                                std::to_string(dimension) + " assets");
  }
  return grid;
}

const MarketSpec& RunConfig::require_market() const {
  if (!market) fail(ErrorKind::Config, "config has no market");
  return *market;
}

const TargetSpec& RunConfig::require_target() const {
  if (!target) fail(ErrorKind::Config, "config has no target");
  return *target;
}

RunConfig config_from_json(const json& j) {
  const std::string where = "config";
  reject_unknown_keys(j,
                      {"schema_version", "seed", "threads", "output_dir", "market", "reference", "target",
                       "constraints", "trainer", "pricing", "oracle", "experiment", "timing"},
                      where);
  RunConfig c;
  get_optional(j, "schema_version", c.schema_version, where);
  if (c.schema_version < 1 || c.schema_version > kSchemaVersion) {
    fail(ErrorKind::Config, "unsupported schema_version " + std::to_string(c.schema_version));
  }
  get_optional(j, "seed", c.seed, where);
  get_optional(j, "threads", c.threads, where);
  if (c.threads < 1) fail(ErrorKind::Config, "threads must be at least 1");
  get_optional(j, "output_dir", c.output_dir, where);
  if (j.contains("market")) c.market = market_from_json(j.at("market"));
  if (j.contains("reference")) {
    try {
      c.reference = reference_kind_from_string(get<std::string>(j, "reference", where));
    } catch (const Error& e) {
      fail(ErrorKind::Config, std::string("reference: ") + e.what());
    }
  }
  if (j.contains("target")) {
    const json& t = j.at("target");
    reject_unknown_keys(t, {"payoff", "strikes"}, "target");
    TargetSpec spec{get<std::string>(t, "payoff", "target"), {}};
    get_optional(t, "strikes", spec.strikes, "target");
    if (spec.payoff.find("{K}") != std::string::npos && spec.strikes.empty()) {
      fail(ErrorKind::Config, "target payoff uses {K} but lists no strikes");
    }
    c.target = spec;
  }
  if (j.contains("constraints")) c.constraints = families_from_json(j.at("constraints"), "constraints");
  if (j.contains("trainer")) {
    if (j.at("trainer").contains("seed")) {
      fail(ErrorKind::Config, "trainer.seed is not configurable; training seeds derive from the root seed");
    }
    c.trainer = trainer_from_json(j.at("trainer"));
  }
  if (j.contains("pricing")) {
    const json& p = j.at("pricing");
    reject_unknown_keys(p, {"samples", "measure"}, "pricing");
    get_optional(p, "samples", c.pricing.samples, "pricing");
    get_optional(p, "measure", c.pricing.measure, "pricing");
    if (c.pricing.measure != "copula" && c.pricing.measure != "discrete") {
      fail(ErrorKind::Config, "pricing.measure must be 'copula' or 'discrete'");
    }
    if (c.pricing.samples < 1000) fail(ErrorKind::Config, "pricing.samples must be at least 1000");
  }
  if (j.contains("oracle")) {
    const json& o = j.at("oracle");
    reject_unknown_keys(o, {"grid", "max_variables", "coupling_samples"}, "oracle");
    get_optional(o, "grid", c.oracle.grid, "oracle");
    get_optional(o, "max_variables", c.oracle.max_variables, "oracle");
    get_optional(o, "coupling_samples", c.oracle.coupling_samples, "oracle");
    for (int n : c.oracle.grid) {
      if (n < 1) fail(ErrorKind::Config, "oracle.grid entries must be positive");
    }
  }
  if (j.contains("experiment")) {
    const json& e = j.at("experiment");
    reject_unknown_keys(e, {"bundle", "cases", "convergence_strike"}, "experiment");
    get_optional(e, "bundle", c.experiment.bundle, "experiment");
    if (e.contains("convergence_strike")) c.experiment.convergence_strike = get<double>(e, "convergence_strike", "experiment");
    if (e.contains("cases")) {
      const json& cases = e.at("cases");
      if (!cases.is_array()) fail(ErrorKind::Config, "experiment.cases must be an array");
      for (std::size_t i = 0; i < cases.size(); ++i) {
        const std::string w = "experiment.cases[" + std::to_string(i) + "]";
        reject_unknown_keys(cases[i], {"name", "extends", "constraints"}, w);
        CaseConfig cc;
        cc.name = get<std::string>(cases[i], "name", w);
        get_optional(cases[i], "extends", cc.extends, w);
        if (cases[i].contains("constraints")) cc.constraints = families_from_json(cases[i].at("constraints"), w + ".constraints");
        c.experiment.cases.push_back(std::move(cc));
      }
    }
    if (!c.experiment.bundle.empty() && !c.experiment.cases.empty()) {
      fail(ErrorKind::Config, "experiment takes either a bundle or explicit cases, not both");
    }
  }
  if (j.contains("timing")) {
    const json& t = j.at("timing");
    reject_unknown_keys(t, {"dims", "iterations"}, "timing");
    get_optional(t, "dims", c.timing.dims, "timing");
    get_optional(t, "iterations", c.timing.iterations, "timing");
    for (int d : c.timing.dims) {
      if (d < 1) fail(ErrorKind::Config, "timing.dims entries must be positive");
    }
    if (c.timing.iterations < 1) fail(ErrorKind::Config, "timing.iterations must be positive");
  }
  return c;
}

json to_json(const RunConfig& c) {
  json trainer = to_json(c.trainer);
  trainer.erase("seed");
  json j{{"schema_version", c.schema_version},
         {"seed", c.seed},
         {"threads", c.threads},
         {"output_dir", c.output_dir},
         {"reference", to_string(c.reference)},
         {"constraints", to_json(c.constraints)},
         {"trainer", trainer},
         {"pricing", {{"samples", c.pricing.samples}, {"measure", c.pricing.measure}}},
         {"oracle",
          {{"grid", c.oracle.grid},
           {"max_variables", c.oracle.max_variables},
           {"coupling_samples", c.oracle.coupling_samples}}},
         {"timing", {{"dims", c.timing.dims}, {"iterations", c.timing.iterations}}}};
  if (c.market) j["market"] = to_json(*c.market);
  if (c.target) j["target"] = json{{"payoff", c.target->payoff}, {"strikes", c.target->strikes}};
  json e = json::object();
  if (!c.experiment.bundle.empty()) e["bundle"] = c.experiment.bundle;
  if (!c.experiment.cases.empty()) {
    json cases = json::array();
    for (const auto& cc : c.experiment.cases) {
      json one{{"name", cc.name}, {"constraints", to_json(cc.constraints)}};
      if (!cc.extends.empty()) one["extends"] = cc.extends;
      cases.push_back(one);
    }
    e["cases"] = cases;
  }
  if (c.experiment.convergence_strike) e["convergence_strike"] = *c.experiment.convergence_strike;
  if (!e.empty()) j["experiment"] = e;
  return j;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Config, path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

ExperimentBundle resolve_experiment(const RunConfig& config) {
  if (!config.experiment.bundle.empty()) {
    auto b = make_bundle(config.experiment.bundle, config.trainer, config.seed, config.pricing.samples);
    if (config.experiment.convergence_strike) b.convergence_strike = *config.experiment.convergence_strike;
    if (config.target && !config.target->strikes.empty()) {
      for (auto& c : b.cases) c.strikes = config.target->strikes;
    }
    validate_nesting(b.cases);
    return b;
  }
  const MarketSpec& market = config.require_market();
  const TargetSpec& target = config.require_target();
  ExperimentBundle b;
  b.name = "custom";
  if (config.experiment.convergence_strike) {
    b.convergence_strike = *config.experiment.convergence_strike;
  } else if (!target.strikes.empty()) {
    b.convergence_strike = target.strikes.front();
  }
  std::vector<CaseConfig> declared = config.experiment.cases;
  if (declared.empty()) declared.push_back({"case", "", config.constraints});
  for (const auto& cc : declared) {
    ExperimentCase c;
    c.name = cc.name;
    c.parent = cc.extends;
    c.market = market;
    c.reference = config.reference;
    c.target = target.payoff;
    c.strikes = target.strikes.empty() ? std::vector<double>{0.0} : target.strikes;
    c.trainer = config.trainer;
    c.pricing_samples = config.pricing.samples;
    c.seed = config.seed;
    if (!cc.extends.empty()) {
      auto parent = std::find_if(b.cases.begin(), b.cases.end(), [&](const ExperimentCase& p) { return p.name == cc.extends; });
      if (parent == b.cases.end()) fail(ErrorKind::Config, "case " + cc.name + " extends unknown case " + cc.extends);
      c.constraints = parent->constraints;
    }
    c.constraints.insert(c.constraints.end(), cc.constraints.begin(), cc.constraints.end());
    b.cases.push_back(std::move(c));
  }
  validate_nesting(b.cases);
  return b;
}

ReferenceMeasure make_reference(const RunConfig& config) {
  const MarketSpec& market = config.require_market();
  switch (config.reference) {
    case ReferenceKind::Product:
      return ReferenceMeasure::product(market);
    case ReferenceKind::Copula:
      return ReferenceMeasure::copula(market);
    case ReferenceKind::Discrete: {
      auto instance = discretize(market, config.oracle.grid_for(market.dimension()), config.oracle.max_variables);
      return ReferenceMeasure::discrete(market, instance.marginals);
    }
  }
  fail(ErrorKind::Config, "unknown reference measure");
}

}  // namespace mfb
