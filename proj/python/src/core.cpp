// Python bindings. Structured values cross the boundary as JSON text; the
// mfbounds package decodes them.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "mfbounds/cli.hpp"
#include "mfbounds/config.hpp"
#include "mfbounds/dual_solver.hpp"
#include "mfbounds/error.hpp"
#include "mfbounds/lp_oracle.hpp"
#include "mfbounds/payoff.hpp"
#include "mfbounds/pricer.hpp"
#include "mfbounds/rng.hpp"
#include "mfbounds/serialize.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace mfb;

namespace {

std::string kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Argument: return "argument";
    case ErrorKind::Config: return "config";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Binding: return "binding";
    case ErrorKind::Evaluation: return "evaluation";
    case ErrorKind::Factorization: return "factorization";
    case ErrorKind::TrainingAbort: return "training_abort";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::SizeCap: return "size_cap";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

MarketSpec market_of(const std::string& text) { return market_from_json(json::parse(text)); }

RunConfig config_of(const std::string& text) { return config_from_json(json::parse(text)); }

ReferenceMeasure reference_of(const MarketSpec& market, const std::string& kind, const std::vector<int>& grid) {
  switch (reference_kind_from_string(kind)) {
    case ReferenceKind::Product:
      return ReferenceMeasure::product(market);
    case ReferenceKind::Copula:
      return ReferenceMeasure::copula(market);
    case ReferenceKind::Discrete:
      return ReferenceMeasure::discrete(market, discretize(market, grid).marginals);
  }
  fail(ErrorKind::Config, "unknown reference measure");
}

std::vector<BandedConstraint> bands_of(const std::vector<std::tuple<std::string, double, double>>& constraints,
                                       int d) {
  std::vector<BandedConstraint> out;
  for (const auto& [text, price, tolerance] : constraints) out.push_back({parse_payoff(text, d), price, tolerance});
  return out;
}

std::optional<fs::path> optional_path(const std::optional<std::string>& p) {
  return p ? std::optional<fs::path>(*p) : std::nullopt;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Model-free price bounds for multi-asset options";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> storage;
  storage.call_once_and_store_result([&]() { return py::object(py::exception<Error>(m, "Error", PyExc_RuntimeError)); });
  py::register_exception_translator([](std::exception_ptr p) {
    const auto raise = [](const std::string& what, const std::string& kind, int code) {
      const py::object& type = storage.get_stored();
      py::object err = type(py::str(what));
      err.attr("kind") = kind;
      err.attr("exit_code") = code;
      PyErr_SetObject(type.ptr(), err.ptr());
    };
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      raise(e.what(), kind_name(e.kind()), exit_code(e.kind()));
    } catch (const json::exception& e) {
      raise(e.what(), "config", 2);
    }
  });

  m.def("derive_seed", &derive_seed, py::arg("root"), py::arg("label"), py::arg("index") = 0);

  m.def("canonical_payoff", [](const std::string& text, int dimension) { return parse_payoff(text, dimension).to_string(); },
        py::arg("text"), py::arg("dimension"));

  m.def("eval_payoff",
        [](const std::string& text, const Eigen::MatrixXd& values) {
          return eval_payoff(parse_payoff(text, static_cast<int>(values.cols())), values);
        },
        py::arg("text"), py::arg("values"));

  m.def("price_mc",
        [](const std::string& market, const std::vector<std::string>& payoffs, std::size_t samples, Seed seed) {
          const MarketSpec spec = market_of(market);
          std::vector<PayoffExpr> exprs;
          for (const auto& p : payoffs) exprs.push_back(parse_payoff(p, spec.dimension()));
          std::vector<PricedInstrument> priced;
          {
            py::gil_scoped_release release;
            priced = price_mc(spec, exprs, samples, seed);
          }
          json out = json::array();
          for (const auto& p : priced) out.push_back(to_json(p));
          return out.dump();
        },
        py::arg("market"), py::arg("payoffs"), py::arg("samples"), py::arg("seed"));

  m.def("black_scholes_call",
        [](const std::string& market, int asset, double strike) {
          return price_closed_form_call(market_of(market), asset - 1, strike);
        },
        py::arg("market"), py::arg("asset"), py::arg("strike"));

  m.def("train_bound",
        [](const std::string& market, const std::string& reference, const std::vector<int>& grid,
           const std::string& target, const std::vector<std::pair<std::string, double>>& constraints,
           const std::string& direction, const std::string& trainer, std::size_t trace_stride) {
          const MarketSpec spec = market_of(market);
          const int d = spec.dimension();
          BoundProblem problem{reference_of(spec, reference, grid.empty() ? std::vector<int>(d, 50) : grid),
                               parse_payoff(target, d), {}, Direction::Upper};
          for (const auto& [text, price] : constraints) problem.constraints.push_back({parse_payoff(text, d), price});
          problem.deduplicate();
          problem.validate();
          const TrainerConfig cfg = trainer_from_json(json::parse(trainer));
          if (direction != "upper" && direction != "lower") fail(ErrorKind::Argument, "direction must be 'upper' or 'lower'");
          BoundResult r;
          {
            py::gil_scoped_release release;
            r = direction == "upper" ? train(problem, cfg) : lower_bound(problem, cfg);
          }
          return to_json(r, trace_stride).dump();
        },
        py::arg("market"), py::arg("reference"), py::arg("grid"), py::arg("target"), py::arg("constraints"),
        py::arg("direction"), py::arg("trainer"), py::arg("trace_stride"));

  m.def("lp_bounds",
        [](const std::string& market, const std::vector<int>& grid, const std::string& target,
           const std::vector<std::tuple<std::string, double, double>>& constraints) {
          const MarketSpec spec = market_of(market);
          const auto instance = discretize(spec, grid);
          const auto bands = bands_of(constraints, spec.dimension());
          const auto f = parse_payoff(target, spec.dimension());
          json out;
          {
            py::gil_scoped_release release;
            out = json{{"max", to_json(solve_primal(instance, f, bands, Optimize::Max))},
                       {"min", to_json(solve_primal(instance, f, bands, Optimize::Min))}};
          }
          return out.dump();
        },
        py::arg("market"), py::arg("grid"), py::arg("target"), py::arg("constraints"));

  m.def("check_feasibility",
        [](const std::string& market, const std::vector<int>& grid,
           const std::vector<std::tuple<std::string, double, double>>& constraints) {
          const MarketSpec spec = market_of(market);
          const auto instance = discretize(spec, grid);
          FeasibilityReport report;
          {
            py::gil_scoped_release release;
            report = check_feasibility(instance, bands_of(constraints, spec.dimension()));
          }
          return to_json(report).dump();
        },
        py::arg("market"), py::arg("grid"), py::arg("constraints"));

  m.def("load_config", [](const std::string& path) { return to_json(load_config(path)).dump(); }, py::arg("path"));
  m.def("normalize_config", [](const std::string& text) { return to_json(config_of(text)).dump(); }, py::arg("config"));

  m.def("generate",
        [](const std::string& config, const std::string& out) {
          const RunConfig c = config_of(config);
          py::gil_scoped_release release;
          fs::create_directories(out);
          return cmd_generate(c, out).dump();
        },
        py::arg("config"), py::arg("out"));

  m.def("bound",
        [](const std::string& config, const std::string& out, const std::string& direction,
           const std::optional<std::string>& instruments) {
          const RunConfig c = config_of(config);
          const DirectionChoice choice = direction_choice_from_string(direction);
          py::gil_scoped_release release;
          fs::create_directories(out);
          return cmd_bound(c, out, choice, optional_path(instruments)).dump();
        },
        py::arg("config"), py::arg("out"), py::arg("direction"), py::arg("instruments") = std::nullopt);

  m.def("verify",
        [](const std::string& config, const std::string& out, const std::optional<std::string>& instruments,
           const std::optional<std::string>& bound_result) {
          const RunConfig c = config_of(config);
          py::gil_scoped_release release;
          fs::create_directories(out);
          return cmd_verify(c, out, optional_path(instruments), optional_path(bound_result)).dump();
        },
        py::arg("config"), py::arg("out"), py::arg("instruments") = std::nullopt,
        py::arg("bound_result") = std::nullopt);

  m.def("sweep",
        [](const std::string& config, const std::string& out, const std::string& direction) {
          const RunConfig c = config_of(config);
          const DirectionChoice choice = direction_choice_from_string(direction);
          py::gil_scoped_release release;
          fs::create_directories(out);
          return cmd_sweep(c, out, choice).dump();
        },
        py::arg("config"), py::arg("out"), py::arg("direction"));

  m.def("convergence",
        [](const std::string& config, const std::string& out) {
          const RunConfig c = config_of(config);
          py::gil_scoped_release release;
          fs::create_directories(out);
          return cmd_convergence(c, out).dump();
        },
        py::arg("config"), py::arg("out"));

  m.def("timing",
        [](const std::string& config, const std::string& out) {
          const RunConfig c = config_of(config);
          py::gil_scoped_release release;
          fs::create_directories(out);
          return cmd_timing(c, out).dump();
        },
        py::arg("config"), py::arg("out"));
}
