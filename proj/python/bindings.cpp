#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "comeback/cohort.hpp"
#include "comeback/errors.hpp"
#include "comeback/graph.hpp"
#include "comeback/metrics.hpp"
#include "comeback/pipeline.hpp"
#include "comeback/predict.hpp"
#include "comeback/stats.hpp"
#include "comeback/synth.hpp"

namespace py = pybind11;
using namespace comeback;

namespace {

py::dict test_dict(const stats::TestResult& r) {
  py::dict d;
  d["method"] = std::string(stats::to_string(r.method));
  d["statistic"] = r.statistic;
  d["p_value"] = r.p_value;
  d["effect"] = r.effect;
  d["n1"] = r.n1;
  d["n2"] = r.n2;
  d["exact"] = r.exact;
  d["df"] = r.df;
  return d;
}

predict::Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  predict::Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols) throw ParameterError("ragged matrix rows");
    for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

std::vector<std::pair<int, int>> edge_list(const std::vector<std::pair<int, int>>& edges, std::size_t n) {
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n) {
      throw ParameterError("edge endpoint out of range");
    }
  }
  return edges;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Comeback researcher analysis core";
  m.attr("__version__") = std::string(pipeline::kVersion);

  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("gap_entropy", [](std::vector<int> years) { return gap_entropy(years); }, py::arg("years"));
  m.def("h_index", [](std::vector<int> counts) { return h_index(counts); }, py::arg("citations"));
  m.def(
      "classify_author",
      [](std::vector<int> years, int end_year, int threshold) {
        return std::string(to_string(classify_author(years, end_year, threshold)));
      },
      py::arg("years"), py::arg("end_year"), py::arg("gap_threshold") = 3);

  m.def(
      "modularity",
      [](std::size_t n, const std::vector<std::pair<int, int>>& edges, const std::vector<int>& community,
         double resolution) {
        const auto g = undirected_from_edges(n, edge_list(edges, n));
        return modularity(g, community, resolution);
      },
      py::arg("n"), py::arg("edges"), py::arg("community"), py::arg("resolution") = 1.0);
  m.def(
      "louvain",
      [](std::size_t n, const std::vector<std::pair<int, int>>& edges, double resolution, std::uint64_t seed) {
        const auto p = louvain(undirected_from_edges(n, edge_list(edges, n)), resolution, seed);
        py::dict d;
        d["community"] = p.community;
        d["community_count"] = p.community_count;
        d["modularity"] = p.modularity;
        d["level_modularity"] = p.level_modularity;
        return d;
      },
      py::arg("n"), py::arg("edges"), py::arg("resolution") = 1.0, py::arg("seed") = 0);
  m.def("normalized_mutual_information",
        [](const std::vector<int>& a, const std::vector<int>& b) { return normalized_mutual_information(a, b); });
  m.def(
      "planted_block_graph",
      [](int blocks, int size, double p_in, double p_out, std::uint64_t seed) {
        const auto g = synth::planted_block_graph(blocks, size, p_in, p_out, seed);
        py::dict d;
        d["n"] = g.node_count;
        d["edges"] = g.edges;
        d["labels"] = g.labels;
        return d;
      },
      py::arg("blocks"), py::arg("block_size"), py::arg("p_in"), py::arg("p_out"), py::arg("seed") = 0);

  m.def("welch_t", [](std::vector<double> x, std::vector<double> y) { return test_dict(stats::welch_t(x, y)); });
  m.def(
      "mann_whitney_u",
      [](std::vector<double> x, std::vector<double> y, std::size_t threshold) {
        return test_dict(stats::mann_whitney_u(x, y, threshold));
      },
      py::arg("x"), py::arg("y"), py::arg("exact_threshold") = 12);
  m.def("ks_test", [](std::vector<double> x, std::vector<double> y) { return test_dict(stats::ks_test(x, y)); });
  m.def("cliffs_delta", [](std::vector<double> x, std::vector<double> y) { return stats::cliffs_delta(x, y); });
  m.def("cohens_d", [](std::vector<double> x, std::vector<double> y) { return stats::cohens_d(x, y); });
  m.def(
      "bootstrap_mean_diff_ci",
      [](std::vector<double> x, std::vector<double> y, std::size_t n, double confidence, std::uint64_t seed,
         unsigned threads) {
        const auto ci = stats::bootstrap_mean_diff_ci(x, y, n, confidence, seed, threads);
        py::dict d;
        d["mean_diff"] = ci.mean_diff;
        d["lo"] = ci.lo;
        d["hi"] = ci.hi;
        d["n_resamples"] = ci.n_resamples;
        d["confidence"] = ci.confidence;
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("n_resamples") = 10000, py::arg("confidence") = 0.95,
      py::arg("seed") = 0, py::arg("threads") = 1);
  m.def("spearman", [](std::vector<double> x, std::vector<double> y) { return stats::spearman(x, y); });
  m.def("partial_spearman", [](std::vector<double> x, std::vector<double> y, std::vector<double> z) {
    return stats::partial_spearman(x, y, z);
  });
  m.def(
      "benjamini_hochberg",
      [](std::vector<double> p, double alpha) {
        const auto r = stats::benjamini_hochberg(p, alpha);
        return std::make_pair(std::vector<bool>(r.rejected.begin(), r.rejected.end()), r.adjusted);
      },
      py::arg("p_values"), py::arg("alpha") = 0.05);
  m.def("kaplan_meier", [](std::vector<double> durations, std::vector<bool> events) {
    const auto c = stats::kaplan_meier(durations, events);
    py::dict d;
    d["times"] = c.times;
    d["survival"] = c.survival;
    d["at_risk"] = c.at_risk;
    d["events"] = c.events;
    d["censored"] = c.censored;
    return d;
  });
  m.def("log_rank", [](std::vector<double> da, std::vector<bool> ea, std::vector<double> db, std::vector<bool> eb) {
    return test_dict(stats::log_rank({std::move(da), std::move(ea)}, {std::move(db), std::move(eb)}));
  });

  m.def("rank_auc", [](std::vector<double> s, std::vector<int> y) { return predict::rank_auc(s, y); });
  m.def(
      "evaluate_classifier",
      [](std::vector<double> probs, std::vector<int> labels, double threshold) {
        const auto r = predict::evaluate_classifier(probs, labels, threshold);
        py::dict d;
        d["accuracy"] = r.accuracy;
        d["precision"] = r.precision;
        d["recall"] = r.recall;
        d["f1"] = r.f1;
        d["roc_auc"] = r.roc_auc;
        d["roc_points"] = r.roc_points;
        return d;
      },
      py::arg("probabilities"), py::arg("labels"), py::arg("threshold") = 0.5);
  m.def(
      "train_logistic",
      [](const std::vector<std::vector<double>>& X, std::vector<int> y, double l2) {
        predict::LogisticOptions o;
        o.l2_strength = l2;
        const auto model = predict::train_logistic(to_matrix(X), y, o);
        py::dict d;
        d["w"] = model.w;
        d["b"] = model.b;
        d["converged"] = model.converged;
        d["iterations"] = model.iterations;
        return d;
      },
      py::arg("X"), py::arg("y"), py::arg("l2") = 1.0);
  m.def(
      "shapley_attributions",
      [](const std::function<double(std::vector<double>)>& model, std::vector<double> instance,
         const std::vector<std::vector<double>>& background) {
        const predict::ModelFn fn = [&](std::span<const double> x) {
          return model(std::vector<double>(x.begin(), x.end()));
        };
        const auto r = predict::shapley_attributions(fn, instance, to_matrix(background));
        py::dict d;
        d["phi"] = r.phi;
        d["base_value"] = r.base_value;
        d["prediction"] = r.prediction;
        return d;
      },
      py::arg("model"), py::arg("instance"), py::arg("background"));

  m.def(
      "_generate_corpus",
      [](const std::string& config_json) {
        const auto config = synth::SynthConfig::from_json(nlohmann::json::parse(config_json));
        const auto corpus = synth::generate_corpus(config);
        std::ostringstream out;
        write_jsonl(out, corpus.papers);
        return std::make_pair(out.str(), corpus.truth.to_json().dump());
      },
      py::arg("config_json"));
  m.def(
      "_run_pipeline",
      [](const std::string& config_json, bool force) {
        const auto config = pipeline::PipelineConfig::from_json(nlohmann::json::parse(config_json));
        std::vector<std::pair<std::string, bool>> out;
        {
          py::gil_scoped_release release;
          for (const auto& o : pipeline::run_pipeline(config, force)) out.emplace_back(o.stage, o.ran);
        }
        return out;
      },
      py::arg("config_json"), py::arg("force") = false);
}
