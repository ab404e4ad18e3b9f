#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <string>

#include "hsgd/harness.hpp"

namespace py = pybind11;
using namespace hsgd;

namespace {

AggregationRule rule_from(const std::string& name) {
  if (name == "balanced") return AggregationRule::kBalanced;
  if (name == "tau_weighted") return AggregationRule::kTauWeighted;
  if (name == "fednova") return AggregationRule::kFedNova;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown aggregation rule '" + name + "' (balanced, tau_weighted, fednova)");
}

std::vector<ParamVector> to_params(const std::vector<std::vector<double>>& rows) {
  std::vector<ParamVector> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.emplace_back(r);
  return out;
}

std::vector<double> to_list(const ParamVector& v) {
  const auto s = v.values();
  return {s.begin(), s.end()};
}

py::dict record_dict(const RoundRecord& r) {
  py::dict d;
  d["round"] = r.round;
  d["epoch"] = r.epoch;
  d["lr"] = r.lr;
  d["train_loss"] = r.train_loss;
  d["val_acc"] = r.val_acc;
  d["sim_wall_s"] = r.sim_wall_s;
  d["sim_block_s"] = r.sim_block_s;
  d["agg_count"] = r.agg_count;
  d["grad_steps"] = r.grad_steps;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Simulator for system-aware biased local SGD on heterogeneous workers";

  static py::exception<Error> hsgd_error(m, "HsgdError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(hsgd_error, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def("aggregation_weights",
        [](const std::string& rule, const std::vector<std::size_t>& taus) {
          return aggregation_weights(rule_from(rule), taus);
        },
        py::arg("rule"), py::arg("taus"));

  m.def("aggregate",
        [](const std::string& rule, const std::vector<std::vector<double>>& models,
           const std::vector<std::size_t>& taus, std::optional<std::vector<double>> round_start) {
          const auto params = to_params(models);
          std::optional<ParamVector> start;
          if (round_start) start.emplace(*round_start);
          return to_list(aggregate(rule_from(rule), params, taus, start ? &*start : nullptr));
        },
        py::arg("rule"), py::arg("models"), py::arg("taus"), py::arg("round_start") = py::none());

  m.def("share_counts",
        [](std::size_t n, std::size_t p_s, std::size_t p_f, double alpha, double lam) {
          const auto c = share_counts(n, p_s, p_f, alpha, lam);
          py::dict d;
          d["pool_exact"] = c.pool_exact;
          d["slow_exact"] = c.slow_exact;
          d["fast_exact"] = c.fast_exact;
          d["pool"] = c.pool;
          d["slow_total"] = c.slow_total;
          d["fast_per_worker"] = c.fast_per_worker;
          d["lambda_valid"] = c.lambda_valid;
          return d;
        },
        py::arg("n"), py::arg("p_s"), py::arg("p_f"), py::arg("alpha"), py::arg("lam"));

  m.def("lambda_exceeds_dataset", &lambda_exceeds_dataset, py::arg("p_s"), py::arg("p_f"),
        py::arg("alpha"), py::arg("lam"));
  m.def("derive_tau_s", &derive_tau_s, py::arg("tau_f"), py::arg("alpha"));

  m.def("round_timing",
        [](const std::vector<std::size_t>& taus, const std::vector<double>& iter_costs,
           double agg_cost) {
          if (taus.size() != iter_costs.size() || taus.empty()) {
            throw Error(ErrorCode::kLengthMismatch, "round_timing: taus and iter_costs differ");
          }
          const auto [lo, hi] = std::minmax_element(iter_costs.begin(), iter_costs.end());
          std::vector<WorkerSpec> ws;
          for (std::size_t i = 0; i < taus.size(); ++i) {
            const auto cls = iter_costs[i] > *lo ? WorkerClass::kSlow : WorkerClass::kFast;
            ws.push_back({i, cls, taus[i], iter_costs[i], 1});
          }
          const auto t = round_timing(ws, CostModel{*lo, *hi, agg_cost});
          py::dict d;
          d["compute_time"] = t.compute_time;
          d["blocking_time"] = t.blocking_time;
          d["round_wall"] = t.round_wall;
          d["agg_count"] = t.agg_count;
          return d;
        },
        py::arg("taus"), py::arg("iter_costs"), py::arg("agg_cost") = 0.0);

  m.def("gradient_check",
        [](std::size_t instances, std::uint64_t seed, double h) {
          const auto r = gradient_check(instances, seed, h);
          py::dict d;
          d["instances"] = r.instances;
          d["max_relative_error"] = r.max_relative_error;
          d["coordinates_checked"] = r.coordinates_checked;
          d["coordinates_skipped"] = r.coordinates_skipped;
          return d;
        },
        py::arg("instances") = 100, py::arg("seed") = 0, py::arg("h") = 1e-5);

  py::class_<ExperimentConfig>(m, "Config")
      .def_property_readonly("algorithm", [](const ExperimentConfig& c) { return to_string(c.algorithm); })
      .def_property_readonly("aggregation",
                             [](const ExperimentConfig& c) { return to_string(c.aggregation); })
      .def_property_readonly("sampler_mode",
                             [](const ExperimentConfig& c) { return to_string(c.sampler_mode); })
      .def_readonly("alpha", &ExperimentConfig::alpha)
      .def_readonly("lam", &ExperimentConfig::lambda)
      .def_readonly("tau_f", &ExperimentConfig::tau_f)
      .def_property_readonly("tau_s", &ExperimentConfig::tau_s)
      .def_readonly("p_s", &ExperimentConfig::p_s)
      .def_readonly("p_f", &ExperimentConfig::p_f)
      .def_readonly("seeds", &ExperimentConfig::seeds)
      .def_readonly("canonical_text", &ExperimentConfig::canonical_text)
      .def_property_readonly("config_hash",
                             [](const ExperimentConfig& c) { return config_hash(c.canonical_text); });

  m.def("parse_config", &parse_config, py::arg("text"), py::arg("base_dir") = std::filesystem::path{});
  m.def("load_config", &load_config, py::arg("path"));

  py::class_<ExperimentResult>(m, "Result")
      .def_property_readonly("records",
                             [](const ExperimentResult& r) {
                               py::list runs;
                               for (const auto& run : r.runs) {
                                 py::list rows;
                                 for (const auto& rec : run.records) rows.append(record_dict(rec));
                                 runs.append(rows);
                               }
                               return runs;
                             })
      .def_property_readonly("final_accs",
                             [](const ExperimentResult& r) {
                               std::vector<double> out;
                               for (const auto& run : r.runs) out.push_back(run.final_acc);
                               return out;
                             })
      .def_property_readonly("final_params",
                             [](const ExperimentResult& r) {
                               std::vector<std::vector<double>> out;
                               for (const auto& run : r.runs) out.push_back(to_list(run.final_params));
                               return out;
                             })
      .def("records_csv", [](const ExperimentResult& r) { return records_csv(r); })
      .def("summary_json", [](const ExperimentResult& r) { return summary_json(r.summary); });

  m.def("run",
        [](const ExperimentConfig& c, std::optional<std::size_t> threads) {
          py::gil_scoped_release release;
          return run(c, RunOptions{threads});
        },
        py::arg("config"), py::arg("threads") = py::none());

  m.def("sweep_lambda",
        [](const ExperimentConfig& c, const std::vector<double>& lambdas,
           const std::vector<std::size_t>& tau_s_rows, bool train) {
          py::gil_scoped_release release;
          return lambda_grid_csv(sweep_lambda(c, lambdas, tau_s_rows, train));
        },
        py::arg("config"), py::arg("lambdas"), py::arg("tau_s_rows"), py::arg("train") = false);

  m.def("timing_breakdown", [](const ExperimentConfig& c) {
    py::list rows;
    for (const auto& t : timing_breakdown(c)) {
      py::dict d;
      d["algorithm"] = t.algorithm;
      d["worker"] = t.worker;
      d["worker_class"] = t.worker_class == WorkerClass::kSlow ? "slow" : "fast";
      d["tau"] = t.tau;
      d["compute_s"] = t.compute_s;
      d["blocking_s"] = t.blocking_s;
      d["agg_s"] = t.agg_s;
      d["round_wall_s"] = t.round_wall_s;
      rows.append(d);
    }
    return rows;
  });
}
