#include "mfbounds/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <iomanip>
#include <sstream>
#include <thread>

#include "mfbounds/error.hpp"

namespace mfb {

Seed pricing_seed(Seed root) { return derive_seed(root, "pricing"); }

Seed training_seed(Seed root, double strike) { return derive_seed(root, "train-K" + format_number(strike)); }

void run_parallel(std::vector<std::function<void()>>& jobs, int threads) {
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        jobs[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

/// Re-raises an error from a (case, strike) job with that context, keeping its kind.
template <class F>
auto with_context(const std::string& name, double strike, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), "case " + name + ", K=" + format_number(strike) + ": " + e.what());
  }
}

ReferenceMeasure make_reference(const ExperimentCase& c) {
  switch (c.reference) {
    case ReferenceKind::Product:
      return ReferenceMeasure::product(c.market);
    case ReferenceKind::Copula:
      return ReferenceMeasure::copula(c.market);
    case ReferenceKind::Discrete:
      break;
  }
  fail(ErrorKind::Config, "experiment cases support the product and copula reference measures only");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

CaseTable run_case(const ExperimentCase& c, const RunOptions& options) { return run_case_at(c, c.strikes, options); }

CaseTable run_case_at(const ExperimentCase& c, const std::vector<double>& strikes, const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  const int d = c.market.dimension();
  CaseTable table;
  table.name = c.name;
  table.pricing_seed = pricing_seed(c.seed);

  // Constraints and targets share one pricing batch, so every case of a bundle
  // sees the same price for the same instrument.
  std::vector<PayoffExpr> payoffs;
  for (const auto& text : c.instrument_texts()) payoffs.push_back(parse_payoff(text, d));
  const std::size_t n_constraints = payoffs.size();
  for (double k : strikes) payoffs.push_back(parse_payoff(instantiate_strike(c.target, k), d));
  auto priced = price_mc(c.market, payoffs, c.pricing_samples, table.pricing_seed);
  table.instruments.assign(priced.begin(), priced.begin() + static_cast<std::ptrdiff_t>(n_constraints));

  BoundProblem base{make_reference(c), payoffs[n_constraints], {}, Direction::Upper};
  for (const auto& p : table.instruments) base.constraints.push_back({p.payoff, p.price});
  base.deduplicate();
  base.validate();

  const std::size_t m = strikes.size();
  table.rows.resize(m);
  table.upper_results.resize(options.upper ? m : 0);
  table.lower_results.resize(options.lower ? m : 0);
  std::vector<std::function<void()>> jobs;
  for (std::size_t s = 0; s < m; ++s) {
    const auto& ref = priced[n_constraints + s];
    table.rows[s] = {strikes[s], std::nullopt, std::nullopt, ref.price, ref.stderr_};
    TrainerConfig cfg = c.trainer;
    cfg.seed = training_seed(c.seed, strikes[s]);
    table.training_seeds.push_back(cfg.seed);
    BoundProblem problem = base;
    problem.target = ref.payoff;
    if (options.upper) {
      jobs.emplace_back([&table, &c, problem, cfg, s, k = strikes[s]] {
        table.upper_results[s] = with_context(c.name, k, [&] { return train(problem, cfg); });
      });
    }
    if (options.lower) {
      jobs.emplace_back([&table, &c, problem, cfg, s, k = strikes[s]] {
        table.lower_results[s] = with_context(c.name, k, [&] { return lower_bound(problem, cfg); });
      });
    }
  }
  run_parallel(jobs, options.threads);
  for (std::size_t s = 0; s < m; ++s) {
    if (options.upper) table.rows[s].upper = table.upper_results[s].bound;
    if (options.lower) table.rows[s].lower = table.lower_results[s].bound;
  }
  table.seconds = seconds_since(t0);
  return table;
}

ConvergenceTable run_convergence(const std::vector<ExperimentCase>& cases, double strike, int threads) {
  ConvergenceTable out;
  out.strike = strike;
  out.traces.resize(cases.size());
  out.bounds.resize(cases.size());
  std::vector<std::function<void()>> jobs;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    out.cases.push_back(cases[i].name);
    jobs.emplace_back([&out, &cases, strike, i] {
      auto t = run_case_at(cases[i], {strike}, {.upper = true, .lower = false, .threads = 1});
      out.traces[i] = std::move(t.upper_results.front().trace);
      out.bounds[i] = t.upper_results.front().bound;
    });
  }
  run_parallel(jobs, threads);
  return out;
}

MarketSpec timing_market(int dimension) {
  require(dimension >= 1, "timing dimension must be positive");
  const std::vector<double> vols = experiment2_market().sigma;
  std::vector<double> sigma(static_cast<std::size_t>(dimension));
  for (int j = 0; j < dimension; ++j) sigma[static_cast<std::size_t>(j)] = vols[static_cast<std::size_t>(j) % vols.size()];
  return MarketSpec::uniform(sigma, 10.0, 0.4, 1.5);
}

std::vector<TimingRow> run_timing(const std::vector<int>& dimensions, const TrainerConfig& trainer) {
  std::vector<TimingRow> rows;
  for (int d : dimensions) {
    const MarketSpec spec = timing_market(d);
    std::vector<int> all(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) all[static_cast<std::size_t>(j)] = j + 1;
    BoundProblem problem{ReferenceMeasure::product(spec), builtin(PayoffKind::BasketCall, all, 10.0, d), {},
                         Direction::Upper};
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = train(problem, trainer);
    rows.push_back({d, seconds_since(t0), trainer.iterations, r.bound});
  }
  return rows;
}

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

}  // namespace

void write_case_csv(std::ostream& out, const CaseTable& table) {
  out << "strike,upper,lower,reference,stderr\n";
  for (const auto& r : table.rows) {
    out << fmt(r.strike) << ',' << fmt(r.upper) << ',' << fmt(r.lower) << ',' << fmt(r.reference) << ','
        << fmt(r.stderr_) << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<CaseTable>& tables) {
  if (tables.empty()) return;
  const auto& first = tables.front();
  out << "strike,reference,stderr";
  for (const auto& t : tables) {
    const bool has_upper = !t.upper_results.empty();
    const bool has_lower = !t.lower_results.empty();
    if (has_upper) out << ",upper_" << t.name;
    if (has_lower) out << ",lower_" << t.name;
  }
  out << '\n';
  for (std::size_t s = 0; s < first.rows.size(); ++s) {
    out << fmt(first.rows[s].strike) << ',' << fmt(first.rows[s].reference) << ',' << fmt(first.rows[s].stderr_);
    for (const auto& t : tables) {
      if (t.rows.size() != first.rows.size() || t.rows[s].strike != first.rows[s].strike) {
        fail(ErrorKind::Argument, "sweep tables must share the strike grid");
      }
      if (!t.upper_results.empty()) out << ',' << fmt(t.rows[s].upper);
      if (!t.lower_results.empty()) out << ',' << fmt(t.rows[s].lower);
    }
    out << '\n';
  }
}

void write_convergence_csv(std::ostream& out, const ConvergenceTable& table, std::size_t stride) {
  if (stride == 0) stride = 1;
  out << "iteration";
  for (const auto& name : table.cases) out << ',' << name;
  out << '\n';
  std::size_t len = 0;
  for (const auto& t : table.traces) len = std::max(len, t.size());
  for (std::size_t it = 0; it < len; ++it) {
    if (it % stride != 0 && it + 1 != len) continue;
    out << it + 1;
    for (const auto& t : table.traces) {
      out << ',';
      if (it < t.size()) out << fmt(t[it]);
    }
    out << '\n';
  }
}

void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows) {
  out << "dimension,iterations,seconds,bound\n";
  for (const auto& r : rows) out << r.dimension << ',' << r.iterations << ',' << fmt(r.seconds) << ',' << fmt(r.bound) << '\n';
}

}  // namespace mfb
