#include "mfbounds/serialize.hpp"

#include "mfbounds/error.hpp"

namespace mfb {

void reject_unknown_keys(const json& object, const std::set<std::string>& allowed, const std::string& where) {
  if (!object.is_object()) fail(ErrorKind::Config, where + " must be a JSON object");
  for (const auto& [key, value] : object.items()) {
    if (!allowed.contains(key)) fail(ErrorKind::Config, "unknown key '" + key + "' in " + where);
  }
}

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

}  // namespace

json to_json(const MarketSpec& spec) {
  json rho = json::array();
  for (Eigen::Index r = 0; r < spec.rho.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < spec.rho.cols(); ++c) row.push_back(spec.rho(r, c));
    rho.push_back(row);
  }
  return json{{"s0", spec.s0}, {"sigma", spec.sigma}, {"rho", rho}, {"maturity", spec.maturity}, {"rate", spec.rate}};
}

MarketSpec market_from_json(const json& j) {
  const std::string where = "market";
  reject_unknown_keys(j, {"s0", "sigma", "rho", "rho_offdiag", "maturity", "rate"}, where);
  MarketSpec spec;
  spec.sigma = get<std::vector<double>>(j, "sigma", where);
  const auto d = spec.sigma.size();
  if (j.at("s0").is_array()) {
    spec.s0 = get<std::vector<double>>(j, "s0", where);
  } else {
    spec.s0.assign(d, get<double>(j, "s0", where));
  }
  if (j.contains("rho") == j.contains("rho_offdiag")) {
    fail(ErrorKind::Config, "market needs exactly one of 'rho' and 'rho_offdiag'");
  }
  if (j.contains("rho")) {
    const auto rows = get<std::vector<std::vector<double>>>(j, "rho", where);
    spec.rho.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows.size()) fail(ErrorKind::Config, "market.rho must be square");
      for (std::size_t c = 0; c < rows.size(); ++c) spec.rho(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  } else {
    const double off = get<double>(j, "rho_offdiag", where);
    spec.rho = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d), off);
    spec.rho.diagonal().setOnes();
  }
  spec.maturity = get<double>(j, "maturity", where);
  get_optional(j, "rate", spec.rate, where);
  try {
    spec.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Config, std::string("market: ") + e.what());
  }
  return spec;
}

json to_json(const TrainerConfig& c) {
  return json{{"gamma", c.gamma},
              {"batch_size", c.batch_size},
              {"iterations", c.iterations},
              {"learning_rate", c.learning_rate},
              {"lr_decay", c.lr_decay},
              {"lr_decay_fraction", c.lr_decay_fraction},
              {"eval_samples", c.eval_samples},
              {"slack_samples", c.slack_samples},
              {"slack_tolerance", c.slack_tolerance},
              {"hidden_layers", c.hidden_layers},
              {"width", c.width},
              {"seed", c.seed}};
}

TrainerConfig trainer_from_json(const json& j, TrainerConfig c) {
  const std::string where = "trainer";
  reject_unknown_keys(j,
                      {"gamma", "batch_size", "iterations", "learning_rate", "lr_decay", "lr_decay_fraction",
                       "eval_samples", "slack_samples", "slack_tolerance", "hidden_layers", "width", "seed"},
                      where);
  get_optional(j, "gamma", c.gamma, where);
  get_optional(j, "batch_size", c.batch_size, where);
  get_optional(j, "iterations", c.iterations, where);
  get_optional(j, "learning_rate", c.learning_rate, where);
  get_optional(j, "lr_decay", c.lr_decay, where);
  get_optional(j, "lr_decay_fraction", c.lr_decay_fraction, where);
  get_optional(j, "eval_samples", c.eval_samples, where);
  get_optional(j, "slack_samples", c.slack_samples, where);
  get_optional(j, "slack_tolerance", c.slack_tolerance, where);
  get_optional(j, "hidden_layers", c.hidden_layers, where);
  get_optional(j, "width", c.width, where);
  get_optional(j, "seed", c.seed, where);
  try {
    c.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Config, std::string("trainer: ") + e.what());
  }
  return c;
}

json to_json(const PricedInstrument& p) {
  return json{{"payoff", p.payoff.to_string()}, {"price", p.price},   {"stderr", p.stderr_},
              {"n", p.n_samples},               {"seed", p.seed},     {"measure", p.measure}};
}

PricedInstrument instrument_from_json(const json& j, int dimension) {
  const std::string where = "instrument";
  reject_unknown_keys(j, {"payoff", "price", "stderr", "n", "seed", "measure"}, where);
  PricedInstrument p{parse_payoff(get<std::string>(j, "payoff", where), dimension)};
  p.price = get<double>(j, "price", where);
  get_optional(j, "stderr", p.stderr_, where);
  get_optional(j, "n", p.n_samples, where);
  get_optional(j, "seed", p.seed, where);
  get_optional(j, "measure", p.measure, where);
  return p;
}

json to_json(const SlackStats& s) {
  return json{{"n", s.n},     {"mean", s.mean}, {"stddev", s.stddev}, {"q01", s.q01},
              {"q05", s.q05}, {"q50", s.q50},   {"q95", s.q95},       {"q99", s.q99},
              {"tolerance", s.tolerance}, {"violation_fraction", s.violation_fraction}};
}

json to_json(const BoundResult& r, std::size_t trace_stride) {
  if (trace_stride == 0) trace_stride = 1;
  json trace = json::array();
  json trace_iterations = json::array();
  for (std::size_t t = 0; t < r.trace.size(); ++t) {
    if (t % trace_stride == 0 || t + 1 == r.trace.size()) {
      trace.push_back(r.trace[t]);
      trace_iterations.push_back(t + 1);
    }
  }
  return json{{"direction", to_string(r.direction)},
              {"bound", r.bound},
              {"fresh_eval", r.fresh_eval},
              {"fresh_cost", r.fresh_cost},
              {"fresh_penalty", r.fresh_penalty},
              {"b_values", r.b_values},
              {"slack", to_json(r.slack)},
              {"seconds", r.seconds},
              {"trace_stride", trace_stride},
              {"trace_iterations", trace_iterations},
              {"trace", trace},
              {"trainer", to_json(r.config)}};
}

json to_json(const DualState& s) {
  return json{{"widths", s.layout.widths()},
              {"assets", s.assets},
              {"constraints", s.constraints},
              {"input_scales", s.input_scales},
              {"params", s.params},
              {"adam",
               {{"step", s.adam.step},
                {"beta1", s.adam.beta1},
                {"beta2", s.adam.beta2},
                {"epsilon", s.adam.epsilon},
                {"first_moment", s.adam.first_moment},
                {"second_moment", s.adam.second_moment}}}};
}

DualState dual_state_from_json(const json& j) {
  const std::string where = "checkpoint";
  reject_unknown_keys(j, {"widths", "assets", "constraints", "input_scales", "params", "adam"}, where);
  DualState s;
  s.layout = MlpLayout(get<std::vector<int>>(j, "widths", where));
  s.assets = get<int>(j, "assets", where);
  s.constraints = get<int>(j, "constraints", where);
  s.input_scales = get<std::vector<double>>(j, "input_scales", where);
  s.params = get<std::vector<double>>(j, "params", where);
  const json& a = j.at("adam");
  s.adam.step = get<std::int64_t>(a, "step", where);
  s.adam.beta1 = get<double>(a, "beta1", where);
  s.adam.beta2 = get<double>(a, "beta2", where);
  s.adam.epsilon = get<double>(a, "epsilon", where);
  s.adam.first_moment = get<std::vector<double>>(a, "first_moment", where);
  s.adam.second_moment = get<std::vector<double>>(a, "second_moment", where);
  const std::size_t expected = s.layout.parameter_count() * static_cast<std::size_t>(s.assets) +
                               static_cast<std::size_t>(s.constraints);
  if (s.params.size() != expected || s.adam.first_moment.size() != expected ||
      s.adam.second_moment.size() != expected || s.input_scales.size() != static_cast<std::size_t>(s.assets)) {
    fail(ErrorKind::Config, "checkpoint buffers do not match its layout");
  }
  return s;
}

namespace {

json coupling_json(const std::vector<CouplingAtom>& coupling) {
  json out = json::array();
  for (const auto& c : coupling) out.push_back(json{{"atoms", c.atoms}, {"mass", c.mass}});
  return out;
}

}  // namespace

json to_json(const PrimalResult& r) {
  json active = json::array();
  for (const auto& a : r.active) active.push_back(json{{"index", a.index}, {"side", a.side}});
  return json{{"status", lp::to_string(r.status)},
              {"optimum", r.optimum},
              {"iterations", r.iterations},
              {"marginal_residual", r.marginal_residual},
              {"active_constraints", active},
              {"coupling", coupling_json(r.coupling)}};
}

json to_json(const FeasibilityReport& r) {
  json out{{"feasible", r.feasible}, {"infeasibility", r.infeasibility}};
  if (r.feasible) {
    out["witness"] = coupling_json(r.coupling);
  } else {
    out["certificate"] = json{{"kind", "uniform_strong_arbitrage"},
                              {"marginal_payoffs", r.certificate.marginal_payoffs},
                              {"weights", r.certificate.weights},
                              {"cost", r.certificate.cost},
                              {"payoff_floor", r.certificate.floor}};
  }
  return out;
}

}  // namespace mfb
