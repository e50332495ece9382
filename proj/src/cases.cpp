#include <algorithm>
#include <map>

#include "mfbounds/error.hpp"
#include "mfbounds/experiments.hpp"

namespace mfb {

MarketSpec experiment1_market() { return MarketSpec::uniform({0.3, 0.4, 0.5}, 10.0, 0.5, 1.5); }

MarketSpec experiment2_market() {
  MarketSpec spec;
  spec.s0.assign(6, 10.0);
  spec.sigma = {0.3, 0.4, 0.5, 0.35, 0.45, 0.55};
  spec.rho.resize(6, 6);
  spec.rho << 1.00, 0.45, 0.35, 0.44, 0.50, 0.30,  //
      0.45, 1.00, 0.38, 0.36, 0.41, 0.43,          //
      0.35, 0.38, 1.00, 0.44, 0.32, 0.42,          //
      0.44, 0.36, 0.44, 1.00, 0.46, 0.29,          //
      0.50, 0.41, 0.32, 0.46, 1.00, 0.60,          //
      0.30, 0.43, 0.42, 0.29, 0.60, 1.00;
  spec.maturity = 1.5;
  return spec;
}

namespace {

std::vector<double> strike_range(double first, double last, double step) {
  std::vector<double> out;
  for (double k = first; k <= last + 1e-9; k += step) out.push_back(std::round(k * 1e6) / 1e6);
  return out;
}

struct CaseSpec {
  std::string parent;
  std::vector<ConstraintFamily> added;
};

const std::string kE1Target = "(max(x1, x2, x3) - {K})^+";
const std::string kE2Target = "(avg(x1, x2, x3, x4, x5, x6) - {K})^+";

const std::string kPhi1 = "(max(x1, x2) - {K})^+";
const std::string kPhi2 = "(max(x2, x3) - {K})^+";
const std::string kPhi3 = "(max(x1, x3) - {K})^+";
const std::string kPhi4 = "(max(x1, x2, x3) - {K})^+";

const std::string kCallOnMin6 = "(min(x1, x2, x3, x4, x5, x6) - {K})^+";
const std::string kCallOnMax6 = "(max(x1, x2, x3, x4, x5, x6) - {K})^+";
const std::vector<std::string> kBaskets5 = {
    "(avg(x1, x2, x3, x4, x5) - {K})^+",
    "(avg(x2, x3, x4, x5, x6) - {K})^+",
    "(avg(x1, x2, x3, x5, x6) - {K})^+",
};
const std::vector<std::string> kPutOnMinPairs = {
    "({K} - min(x1, x2))^+",
    "({K} - min(x3, x4))^+",
    "({K} - min(x5, x6))^+",
};

std::vector<ConstraintFamily> families(const std::vector<std::string>& payoffs, const std::vector<double>& strikes) {
  std::vector<ConstraintFamily> out;
  for (const auto& p : payoffs) out.push_back({p, strikes});
  return out;
}

/// Constraint strikes for the six-asset cases. The desk variant keeps every other strike.
struct E2Strikes {
  std::vector<double> extremes;
  std::vector<double> baskets;
  std::vector<double> puts;
};

E2Strikes e2_strikes(bool desk) {
  E2Strikes s{strike_range(6.5, 13.5, 1.0), strike_range(6.6, 13.6, 1.0), strike_range(6.75, 13.75, 1.0)};
  if (desk) {
    auto every_other = [](const std::vector<double>& v) {
      std::vector<double> out;
      for (std::size_t i = 0; i < v.size(); i += 2) out.push_back(v[i]);
      return out;
    };
    s = {every_other(s.extremes), every_other(s.baskets), every_other(s.puts)};
  }
  return s;
}

std::map<std::string, CaseSpec> case_table(bool desk) {
  const E2Strikes k2 = e2_strikes(desk);
  std::map<std::string, CaseSpec> t;
  t["E1.0"] = {"", {}};
  t["E1.1"] = {"E1.0", {{kPhi1, {6}}}};
  t["E1.2"] = {"E1.1", {{kPhi2, {6}}}};
  t["E1.3"] = {"E1.2", {{kPhi3, {5, 6, 7}}}};
  t["E1.4"] = {"E1.3", {{kPhi4, {5, 7}}}};
  t["E1.5"] = {"E1.0", {{kPhi1, {6, 9, 11, 13, 15}}}};
  t["E1.6"] = {"E1.5", {{kPhi2, {6, 11, 13, 15}}}};
  t["E1.7"] = {"E1.6", {{kPhi3, {5, 6, 7, 11, 13}}}};
  t["E1.8"] = {"E1.7", {{kPhi4, {5, 7}}}};

  t["E2.0"] = {"", {}};
  t["E2.1"] = {"E2.0", {{kCallOnMin6, k2.extremes}}};
  t["E2.2"] = {"E2.1", {{kCallOnMax6, k2.extremes}}};
  t["E2.3"] = {"E2.2", families(kBaskets5, k2.baskets)};
  t["E2.4"] = {"E2.0", families(kPutOnMinPairs, k2.puts)};
  t["E2.5"] = {"E2.4", {{kCallOnMin6, k2.extremes}}};
  t["E2.6"] = {"E2.5", {{kCallOnMax6, k2.extremes}}};
  t["E2.7"] = {"E2.6", families(kBaskets5, k2.baskets)};
  t["E2.8"] = {"E2.0", families(kBaskets5, k2.baskets)};
  return t;
}

ExperimentCase build_case(const std::string& name, const TrainerConfig& trainer, Seed seed,
                          std::size_t pricing_samples, bool desk) {
  const auto table = case_table(desk);
  if (!table.contains(name)) fail(ErrorKind::Config, "unknown experiment case '" + name + "'");
  ExperimentCase c;
  c.name = name;
  c.parent = table.at(name).parent;
  const bool first = name.rfind("E1.", 0) == 0;
  c.market = first ? experiment1_market() : experiment2_market();
  c.target = first ? kE1Target : kE2Target;
  c.strikes = first ? strike_range(2, 14, 1) : strike_range(6.5, 13.5, 1.0);
  if (!first && desk) c.strikes = {7.5, 9.5, 11.5, 13.5};
  c.trainer = trainer;
  c.seed = seed;
  c.pricing_samples = pricing_samples;

  std::vector<std::string> chain;
  for (std::string n = name; !n.empty(); n = table.at(n).parent) chain.push_back(n);
  std::reverse(chain.begin(), chain.end());
  for (const auto& n : chain) {
    const auto& added = table.at(n).added;
    c.constraints.insert(c.constraints.end(), added.begin(), added.end());
  }
  return c;
}

}  // namespace

ExperimentCase make_case(const std::string& name, const TrainerConfig& trainer, Seed seed,
                         std::size_t pricing_samples) {
  return build_case(name, trainer, seed, pricing_samples, false);
}

std::vector<std::string> bundle_names() { return {"E1", "E1-extended", "E2", "E2-relevant", "E2-desk"}; }

ExperimentBundle make_bundle(const std::string& name, const TrainerConfig& trainer, Seed seed,
                             std::size_t pricing_samples) {
  ExperimentBundle b;
  b.name = name;
  std::vector<std::string> names;
  bool desk = false;
  if (name == "E1") {
    names = {"E1.0", "E1.1", "E1.2", "E1.3", "E1.4"};
  } else if (name == "E1-extended") {
    names = {"E1.0", "E1.5", "E1.6", "E1.7", "E1.8"};
  }
  if (name.rfind("E1", 0) == 0 && !names.empty()) {
    b.notes.push_back("case 2 adds (max(x2, x3) - K)^+ as written in the case list; the pair is taken literally");
  } else if (name == "E2") {
    names = {"E2.0", "E2.1", "E2.2", "E2.3"};
    b.convergence_strike = 10.5;
  } else if (name == "E2-relevant") {
    names = {"E2.0", "E2.4", "E2.5", "E2.6", "E2.7", "E2.8"};
    b.convergence_strike = 10.5;
  } else if (name == "E2-desk") {
    names = {"E2.0", "E2.7", "E2.8"};
    desk = true;
    b.convergence_strike = 9.5;
    b.notes.push_back("reduced variant: every other constraint strike, target strikes 7.5, 9.5, 11.5, 13.5");
  } else {
    fail(ErrorKind::Config, "unknown experiment bundle '" + name + "'");
  }
  for (const auto& n : names) b.cases.push_back(build_case(n, trainer, seed, pricing_samples, desk));
  return b;
}

std::vector<std::string> ConstraintFamily::render() const {
  if (strikes.empty()) return {payoff};
  std::vector<std::string> out;
  for (double k : strikes) out.push_back(instantiate_strike(payoff, k));
  return out;
}

std::vector<std::string> ExperimentCase::instrument_texts() const {
  std::vector<std::string> out;
  for (const auto& f : constraints) {
    for (const auto& text : f.render()) out.push_back(parse_payoff(text, market.dimension()).to_string());
  }
  return out;
}

void validate_nesting(const std::vector<ExperimentCase>& cases) {
  for (const auto& c : cases) {
    if (c.parent.empty()) continue;
    const auto parent = std::find_if(cases.begin(), cases.end(), [&](const ExperimentCase& p) { return p.name == c.parent; });
    if (parent == cases.end()) continue;
    const auto& pc = parent->constraints;
    if (pc.size() > c.constraints.size() || !std::equal(pc.begin(), pc.end(), c.constraints.begin())) {
      fail(ErrorKind::Config, "case " + c.name + " does not extend the constraint set of " + c.parent);
    }
  }
}

}  // namespace mfb
