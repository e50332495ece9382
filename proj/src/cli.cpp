#include "mfbounds/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <thread>

#include "mfbounds/error.hpp"
#include "mfbounds/lp_oracle.hpp"

namespace fs = std::filesystem;

namespace mfb {

DirectionChoice direction_choice_from_string(const std::string& name) {
  if (name == "upper") return DirectionChoice::Upper;
  if (name == "lower") return DirectionChoice::Lower;
  if (name == "both") return DirectionChoice::Both;
  fail(ErrorKind::Argument, "direction must be upper, lower or both, got '" + name + "'");
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Config, path.string() + ": " + e.what());
  }
}

template <class Writer>
void write_csv(const fs::path& path, Writer&& writer) {
  std::ostringstream s;
  writer(s);
  write_text(path, s.str());
}

/// A target instance: the payoff at one strike, or the literal payoff.
struct TargetJob {
  std::optional<double> strike;
  PayoffExpr payoff;
  Seed seed = 0;
};

std::vector<TargetJob> target_jobs(const RunConfig& config) {
  const TargetSpec& t = config.require_target();
  const int d = config.require_market().dimension();
  std::vector<TargetJob> jobs;
  if (t.strikes.empty()) {
    jobs.push_back({std::nullopt, parse_payoff(t.payoff, d), derive_seed(config.seed, "train-literal")});
  } else {
    for (double k : t.strikes) jobs.push_back({k, parse_payoff(instantiate_strike(t.payoff, k), d), training_seed(config.seed, k)});
  }
  return jobs;
}

std::vector<PayoffExpr> constraint_payoffs(const RunConfig& config) {
  const int d = config.require_market().dimension();
  std::vector<PayoffExpr> out;
  for (const auto& f : config.constraints) {
    for (const auto& text : f.render()) out.push_back(parse_payoff(text, d));
  }
  return out;
}

/// Prices `payoffs` on the configured measure with common random numbers.
std::vector<PricedInstrument> price_all(const RunConfig& config, const std::vector<PayoffExpr>& payoffs, json& seeds) {
  if (payoffs.empty()) return {};
  const MarketSpec& market = config.require_market();
  if (config.pricing.measure == "copula") {
    seeds["pricing"] = pricing_seed(config.seed);
    return price_mc(market, payoffs, config.pricing.samples, pricing_seed(config.seed));
  }
  const auto instance = discretize(market, config.oracle.grid_for(market.dimension()), config.oracle.max_variables);
  const Seed coupling_seed = derive_seed(config.seed, "coupling");
  seeds["coupling"] = coupling_seed;
  const auto coupling = benchmark_grid_coupling(market, instance.marginals, config.oracle.coupling_samples, coupling_seed,
                                                config.oracle.max_variables);
  std::vector<PricedInstrument> out;
  for (const auto& p : payoffs) out.push_back(price_on_grid(instance.marginals, coupling, p));
  return out;
}

std::vector<PricedInstrument> instruments_from_document(const json& doc, int dimension) {
  if (!doc.contains("instruments") || !doc.at("instruments").is_array()) {
    fail(ErrorKind::Config, "instruments file has no 'instruments' array");
  }
  std::vector<PricedInstrument> out;
  for (const auto& j : doc.at("instruments")) out.push_back(instrument_from_json(j, dimension));
  return out;
}

/// Loads instruments from `path`, from out/instruments.json, or prices them now.
std::vector<PricedInstrument> obtain_instruments(const RunConfig& config, const fs::path& out,
                                                 const std::optional<fs::path>& path, json& provenance) {
  const int d = config.require_market().dimension();
  if (path) {
    provenance = path->string();
    return instruments_from_document(read_json(*path), d);
  }
  if (config.constraints.empty()) {
    provenance = nullptr;
    return {};
  }
  const fs::path existing = out / "instruments.json";
  if (fs::exists(existing)) {
    provenance = existing.string();
    return instruments_from_document(read_json(existing), d);
  }
  const json doc = cmd_generate(config, out);
  provenance = existing.string();
  return instruments_from_document(doc, d);
}

std::string strike_key(const std::optional<double>& k) { return k ? format_number(*k) : std::string("literal"); }

json with_strike(json j, const std::optional<double>& k) {
  j["strike"] = k ? json(*k) : json(nullptr);
  return j;
}

std::string environment_cpu() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) return line.substr(colon + 2);
    }
  }
  return "unknown";
}

json environment() {
  return json{{"cpu", environment_cpu()},
              {"hardware_threads", std::thread::hardware_concurrency()},
              {"compiler", __VERSION__},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)}};
}

}  // namespace

json cmd_generate(const RunConfig& config, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  json seeds = json::object();
  const auto constraints = constraint_payoffs(config);
  std::vector<PayoffExpr> payoffs = constraints;
  std::vector<TargetJob> targets;
  if (config.target) {
    targets = target_jobs(config);
    for (const auto& t : targets) payoffs.push_back(t.payoff);
  }
  const auto priced = price_all(config, payoffs, seeds);
  json doc{{"config", to_json(config)}, {"seeds", seeds}, {"instruments", json::array()}, {"targets", json::array()}};
  for (std::size_t i = 0; i < constraints.size(); ++i) doc["instruments"].push_back(to_json(priced[i]));
  for (std::size_t i = 0; i < targets.size(); ++i) {
    doc["targets"].push_back(with_strike(to_json(priced[constraints.size() + i]), targets[i].strike));
  }
  doc["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_json(out / "instruments.json", doc);
  return doc;
}

json cmd_bound(const RunConfig& config, const fs::path& out, DirectionChoice direction,
               const std::optional<fs::path>& instruments) {
  json provenance;
  const auto priced = obtain_instruments(config, out, instruments, provenance);
  auto jobs = target_jobs(config);

  BoundProblem base{make_reference(config), jobs.front().payoff, {}, Direction::Upper};
  for (const auto& p : priced) base.constraints.push_back({p.payoff, p.price});
  base.deduplicate();

  const bool upper = direction != DirectionChoice::Lower;
  const bool lower = direction != DirectionChoice::Upper;
  std::vector<BoundResult> uppers(jobs.size());
  std::vector<BoundResult> lowers(jobs.size());
  std::vector<std::function<void()>> work;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    BoundProblem problem = base;
    problem.target = jobs[i].payoff;
    problem.validate();
    TrainerConfig cfg = config.trainer;
    cfg.seed = jobs[i].seed;
    if (upper) work.emplace_back([&uppers, problem, cfg, i] { uppers[i] = train(problem, cfg); });
    if (lower) work.emplace_back([&lowers, problem, cfg, i] { lowers[i] = lower_bound(problem, cfg); });
  }
  run_parallel(work, config.threads);

  json doc{{"config", to_json(config)},
           {"direction", direction == DirectionChoice::Both ? "both" : (upper ? "upper" : "lower")},
           {"instruments_file", provenance},
           {"constraints_used", base.constraints.size()},
           {"results", json::array()}};
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    json r{{"payoff", jobs[i].payoff.to_string()}, {"training_seed", jobs[i].seed}};
    r = with_strike(r, jobs[i].strike);
    if (upper) r["upper"] = to_json(uppers[i]);
    if (lower) r["lower"] = to_json(lowers[i]);
    doc["results"].push_back(r);
    std::cout << "K=" << strike_key(jobs[i].strike);
    if (upper) std::cout << " upper=" << uppers[i].bound;
    if (lower) std::cout << " lower=" << lowers[i].bound;
    std::cout << '\n';
  }
  write_json(out / "result.json", doc);
  return doc;
}

json cmd_verify(const RunConfig& config, const fs::path& out, const std::optional<fs::path>& instruments,
                const std::optional<fs::path>& bound_result) {
  const MarketSpec& market = config.require_market();
  if (market.dimension() > 3) {
    fail(ErrorKind::SizeCap, "the LP oracle handles at most 3 assets; got " + std::to_string(market.dimension()));
  }
  const auto instance = discretize(market, config.oracle.grid_for(market.dimension()), config.oracle.max_variables);
  json provenance;
  const auto priced = obtain_instruments(config, out, instruments, provenance);
  const auto bands = banded(priced);

  json doc{{"config", to_json(config)},
           {"instruments_file", provenance},
           {"grid", config.oracle.grid_for(market.dimension())},
           {"cells", instance.cells()}};
  json bands_json = json::array();
  for (const auto& b : bands) bands_json.push_back(json{{"payoff", b.payoff.to_string()}, {"price", b.price}, {"tolerance", b.tolerance}});
  doc["constraints"] = bands_json;

  const auto feasibility = check_feasibility(instance, bands);
  doc["feasibility"] = to_json(feasibility);
  if (!feasibility.feasible) {
    write_json(out / "lp_report.json", doc);
    fail(ErrorKind::Infeasible, "constraint prices admit no consistent coupling; certificate written to " +
                                    (out / "lp_report.json").string());
  }

  json dual_results = json::array();
  if (bound_result) dual_results = read_json(*bound_result).value("results", json::array());

  doc["targets"] = json::array();
  if (config.target) {
    for (const auto& job : target_jobs(config)) {
      const auto hi = solve_primal(instance, job.payoff, bands, Optimize::Max);
      const auto lo = solve_primal(instance, job.payoff, bands, Optimize::Min);
      json t = with_strike(json{{"payoff", job.payoff.to_string()}, {"max", to_json(hi)}, {"min", to_json(lo)}}, job.strike);
      for (const auto& r : dual_results) {
        const bool same = r.at("strike").is_null() ? !job.strike
                                                   : (job.strike && std::abs(r.at("strike").get<double>() - *job.strike) < 1e-12);
        if (!same) continue;
        if (r.contains("upper")) {
          const double b = r.at("upper").at("bound").get<double>();
          t["dual_upper"] = b;
          t["relative_gap_upper"] = (b - hi.optimum) / std::max(std::abs(hi.optimum), 1e-12);
        }
        if (r.contains("lower")) {
          const double b = r.at("lower").at("bound").get<double>();
          t["dual_lower"] = b;
          t["relative_gap_lower"] = (lo.optimum - b) / std::max(std::abs(lo.optimum), 1e-12);
        }
      }
      std::cout << "K=" << strike_key(job.strike) << " lp_max=" << hi.optimum << " lp_min=" << lo.optimum << '\n';
      doc["targets"].push_back(t);
    }
  }
  write_json(out / "lp_report.json", doc);
  return doc;
}

namespace {

json case_manifest(const ExperimentCase& c, const CaseTable& t) {
  json instruments = json::array();
  for (const auto& p : t.instruments) instruments.push_back(to_json(p));
  json seeds = json::array();
  for (std::size_t s = 0; s < t.rows.size(); ++s) seeds.push_back(json{{"strike", t.rows[s].strike}, {"seed", t.training_seeds[s]}});
  json slack = json::array();
  for (std::size_t s = 0; s < t.upper_results.size(); ++s) {
    slack.push_back(json{{"strike", t.rows[s].strike}, {"upper", to_json(t.upper_results[s].slack)}});
  }
  return json{{"name", c.name},       {"parent", c.parent},          {"target", c.target},
              {"strikes", c.strikes}, {"instruments", instruments}, {"pricing_seed", t.pricing_seed},
              {"training_seeds", seeds}, {"slack", slack},          {"seconds", t.seconds}};
}

RunOptions run_options(const RunConfig& config, DirectionChoice direction) {
  return {direction != DirectionChoice::Lower, direction != DirectionChoice::Upper, config.threads};
}

}  // namespace

json cmd_sweep(const RunConfig& config, const fs::path& out, DirectionChoice direction) {
  const auto bundle = resolve_experiment(config);
  std::vector<CaseTable> tables;
  json cases = json::array();
  for (const auto& c : bundle.cases) {
    std::cerr << "case " << c.name << ": " << c.strikes.size() << " strikes\n";
    tables.push_back(run_case(c, run_options(config, direction)));
    write_csv(out / ("case_" + c.name + ".csv"), [&](std::ostream& s) { write_case_csv(s, tables.back()); });
    cases.push_back(case_manifest(c, tables.back()));
  }
  write_csv(out / "sweep.csv", [&](std::ostream& s) { write_sweep_csv(s, tables); });
  json manifest{{"config", to_json(config)}, {"command", "sweep"}, {"bundle", bundle.name},
                {"notes", bundle.notes},     {"cases", cases},      {"environment", environment()}};
  write_json(out / "manifest.json", manifest);
  return manifest;
}

json cmd_convergence(const RunConfig& config, const fs::path& out) {
  const auto bundle = resolve_experiment(config);
  const auto t0 = std::chrono::steady_clock::now();
  const auto table = run_convergence(bundle.cases, bundle.convergence_strike, config.threads);
  write_csv(out / "convergence.csv", [&](std::ostream& s) { write_convergence_csv(s, table); });
  json finals = json::array();
  for (std::size_t i = 0; i < table.cases.size(); ++i) {
    const auto& tr = table.traces[i];
    const std::size_t begin = tr.size() * 4 / 5;
    finals.push_back(json{{"case", table.cases[i]},
                          {"bound", table.bounds[i]},
                          {"final_loss", tr.empty() ? 0.0 : tr.back()},
                          {"stability_last_fifth", tr.size() > 1000 ? moving_average_stability(tr, begin, tr.size(), 1000) : 0.0}});
  }
  json manifest{{"config", to_json(config)},
                {"command", "convergence"},
                {"bundle", bundle.name},
                {"notes", bundle.notes},
                {"strike", table.strike},
                {"training_seed", training_seed(config.seed, table.strike)},
                {"pricing_seed", pricing_seed(config.seed)},
                {"cases", finals},
                {"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
                {"environment", environment()}};
  write_json(out / "manifest.json", manifest);
  return manifest;
}

json cmd_timing(const RunConfig& config, const fs::path& out) {
  TrainerConfig trainer = config.trainer;
  trainer.iterations = config.timing.iterations;
  trainer.seed = derive_seed(config.seed, "timing");
  const auto rows = run_timing(config.timing.dims, trainer);
  write_csv(out / "timing.csv", [&](std::ostream& s) { write_timing_csv(s, rows); });
  json table = json::array();
  for (const auto& r : rows) {
    table.push_back(json{{"dimension", r.dimension}, {"seconds", r.seconds}, {"iterations", r.iterations}, {"bound", r.bound}});
    std::cout << "d=" << r.dimension << " seconds=" << r.seconds << '\n';
  }
  json manifest{{"config", to_json(config)}, {"command", "timing"}, {"training_seed", trainer.seed},
                {"rows", table},             {"environment", environment()}};
  write_json(out / "manifest.json", manifest);
  return manifest;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Model-free price bounds for multi-asset options"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::int64_t> iterations;
  std::string direction = "both";
  std::string instruments;
  std::string bound_result;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "Root seed (overrides seed)");
    sub->add_option("--threads", threads, "Worker threads; 1 is bitwise reproducible")->check(CLI::PositiveNumber);
    sub->add_option("--iterations", iterations, "Training iterations (overrides the trainer and timing settings)")
        ->check(CLI::PositiveNumber);
  };

  auto* generate = app.add_subcommand("generate", "Price the constraint instruments");
  common(generate);
  auto* bound = app.add_subcommand("bound", "Train upper and/or lower bounds");
  common(bound);
  bound->add_option("--direction", direction, "upper, lower or both")->check(CLI::IsMember({"upper", "lower", "both"}));
  bound->add_option("--instruments", instruments, "instruments.json to use")->check(CLI::ExistingFile);
  auto* verify = app.add_subcommand("verify", "LP oracle on the discretized market");
  common(verify);
  verify->add_option("--instruments", instruments, "instruments.json to use")->check(CLI::ExistingFile);
  verify->add_option("--bound-result", bound_result, "result.json to compare against")->check(CLI::ExistingFile);
  auto* sweep = app.add_subcommand("sweep", "Bounds over the strike grid for every case");
  common(sweep);
  sweep->add_option("--direction", direction, "upper, lower or both")->check(CLI::IsMember({"upper", "lower", "both"}));
  auto* convergence = app.add_subcommand("convergence", "Per-iteration traces at one strike");
  common(convergence);
  auto* timing = app.add_subcommand("timing", "Wall time against dimension");
  common(timing);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    RunConfig config = load_config(config_path);
    if (seed) config.seed = *seed;
    if (threads) config.threads = *threads;
    if (iterations) {
      config.trainer.iterations = *iterations;
      config.timing.iterations = *iterations;
    }
    if (!out_dir.empty()) config.output_dir = out_dir;
    const fs::path out = config.output_dir;
    const auto dir = direction_choice_from_string(direction);
    const auto opt_path = [](const std::string& s) { return s.empty() ? std::optional<fs::path>() : fs::path(s); };

    if (generate->parsed()) {
      const json doc = cmd_generate(config, out);
      std::cout << doc.at("instruments").size() << " instruments priced -> " << (out / "instruments.json").string() << '\n';
    } else if (bound->parsed()) {
      cmd_bound(config, out, dir, opt_path(instruments));
    } else if (verify->parsed()) {
      cmd_verify(config, out, opt_path(instruments), opt_path(bound_result));
    } else if (sweep->parsed()) {
      cmd_sweep(config, out, dir);
    } else if (convergence->parsed()) {
      cmd_convergence(config, out);
    } else if (timing->parsed()) {
      cmd_timing(config, out);
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace mfb
