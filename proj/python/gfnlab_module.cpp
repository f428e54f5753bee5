#include "gfnlab/errors.hpp"
#include "gfnlab/features.hpp"
#include "gfnlab/folds.hpp"
#include "gfnlab/harness.hpp"
#include "gfnlab/models.hpp"
#include "gfnlab/reports.hpp"
#include "gfnlab/sparse.hpp"
#include "gfnlab/synthetic.hpp"
#include "gfnlab/tu_dataset.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace gfnlab;

namespace {

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

Graph graph_from_edges(std::size_t num_nodes, const std::vector<std::pair<NodeId, NodeId>>& edges) {
  return Graph::from_edges(num_nodes, edges);
}

std::vector<std::pair<NodeId, NodeId>> edge_list(const Graph& g) {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(g.edge_count());
  for (NodeId u = 0; u < g.num_nodes(); ++u)
    for (NodeId v : g.neighbors(u))
      if (u < v) out.emplace_back(u, v);
  return out;
}

FeatureSpec make_spec(bool use_degree, bool include_raw, int K, double epsilon, bool raw_degree) {
  FeatureSpec s;
  s.use_degree = use_degree;
  s.include_raw = include_raw;
  s.K = K;
  s.epsilon = epsilon;
  s.degree_encoding = raw_degree ? DegreeEncoding::Raw : DegreeEncoding::OneHot;
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Graph filtering and set-function models for graph classification";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<StructuralError>(m, "StructuralError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);

  py::class_<Graph>(m, "Graph")
      .def(py::init(&graph_from_edges), py::arg("num_nodes"), py::arg("edges"))
      .def_property_readonly("num_nodes", &Graph::num_nodes)
      .def_property_readonly("edge_count", &Graph::edge_count)
      .def("degree", &Graph::degree)
      .def("neighbors", [](const Graph& g, NodeId v) {
        require(v < g.num_nodes(), "neighbors: node out of range");
        const auto n = g.neighbors(v);
        return std::vector<NodeId>(n.begin(), n.end());
      })
      .def("edges", &edge_list)
      .def("permuted", [](const Graph& g, const std::vector<NodeId>& perm) {
        require(perm.size() == g.num_nodes(), "permuted: permutation length != num_nodes");
        return g.permuted(perm);
      })
      .def("__eq__", [](const Graph& a, const Graph& b) { return a == b; })
      .def("__repr__", [](const Graph& g) {
        return "<Graph nodes=" + std::to_string(g.num_nodes()) + " edges=" + std::to_string(g.edge_count()) + ">";
      });

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("name", &Dataset::name)
      .def_readonly("num_classes", &Dataset::num_classes)
      .def_readonly("feature_dim", &Dataset::feature_dim)
      .def("__len__", &Dataset::size)
      .def("labels", &Dataset::labels)
      .def("graph", [](const Dataset& d, std::size_t i) -> const Graph& {
        require(i < d.size(), "graph: index out of range");
        return d.graphs[i].graph;
      }, py::return_value_policy::reference_internal)
      .def("node_features", [](const Dataset& d, std::size_t i) {
        require(i < d.size(), "node_features: index out of range");
        return d.graphs[i].node_features;
      })
      .def("fingerprint", &Dataset::fingerprint);

  m.def("parse_tu_dataset", [](const std::filesystem::path& dir, const std::string& name, bool normalize) {
    TuParseOptions o;
    o.normalize_attributes = normalize;
    return parse_tu_dataset(dir, name, o);
  }, py::arg("directory"), py::arg("name"), py::arg("normalize_attributes") = false);
  m.def("generate_synthetic_dataset", &generate_synthetic_dataset, py::arg("num_graphs"), py::arg("seed") = 0);
  m.def("generate_dense_dataset", [](std::size_t n, std::uint64_t seed) { return generate_dense_dataset(n, seed); },
        py::arg("num_graphs"), py::arg("seed") = 0);

  m.def("node_degrees", &node_degrees, py::arg("graph"));
  m.def("degree_one_hot", [](const std::vector<double>& d, std::size_t cap) { return degree_one_hot(d, cap); },
        py::arg("degrees"), py::arg("max_bucket"));
  m.def("normalized_adjacency", [](const Graph& g, double eps) {
    require(eps > 0.0, "normalized_adjacency: epsilon must be positive");
    return normalized_adjacency(g, eps).matrix.to_dense();
  }, py::arg("graph"), py::arg("epsilon") = 1.0, "Dense copy of the normalized adjacency.");
  m.def("spmm", [](const Graph& g, const MatrixD& x, double eps) { return spmm(normalized_adjacency(g, eps), x); },
        py::arg("graph"), py::arg("x"), py::arg("epsilon") = 1.0);

  m.def("augment", [](const Graph& g, const MatrixD& x, int K, bool use_degree, bool include_raw, std::size_t cap,
                      double eps, bool raw_degree) {
    const auto f = augment(g, x, make_spec(use_degree, include_raw, K, eps, raw_degree), cap);
    return py::make_tuple(f.matrix, f.column_names());
  }, py::arg("graph"), py::arg("x"), py::arg("K") = 3, py::arg("use_degree") = true, py::arg("include_raw") = true,
        py::arg("degree_cap") = 1, py::arg("epsilon") = 1.0, py::arg("raw_degree") = false,
        "Returns (matrix, column_names).");

  m.def("stratified_kfold", [](const std::vector<int>& labels, int num_classes, int k, std::uint64_t seed) {
    return stratified_kfold(labels, num_classes, k, seed).assignments;
  }, py::arg("labels"), py::arg("num_classes"), py::arg("k"), py::arg("seed") = 0);

  m.def("collapse_linear_gcn", [](const std::vector<MatrixD>& weights, const Graph& g, const MatrixD& x, double eps) {
    return collapse_linear_gcn<double>(weights, normalized_adjacency(g, eps), x);
  }, py::arg("weights"), py::arg("graph"), py::arg("x"), py::arg("epsilon") = 1.0);

  m.def("parameter_count", [](const std::string& kind, long input_dim, int num_classes, int hidden, int layers) {
    ModelConfig c = ModelConfig::defaults(parse_model_kind(kind), num_classes);
    c.hidden_dim = hidden;
    c.num_conv_layers = layers;
    return parameter_count(c, input_dim);
  }, py::arg("kind"), py::arg("input_dim"), py::arg("num_classes"), py::arg("hidden") = 128, py::arg("layers") = 3);

  m.def("run_cv", [](const Dataset& ds, const std::string& model, int folds, int epochs, int batch, double lr,
                     std::uint64_t seed, int K, bool use_degree, bool include_raw, int hidden, int jobs) {
    ModelConfig mc = ModelConfig::defaults(parse_model_kind(model), ds.num_classes);
    mc.hidden_dim = hidden;
    if (K >= 0) mc.features.K = K;
    mc.features.use_degree = use_degree;
    mc.features.include_raw = include_raw;
    TrainConfig tc;
    tc.epochs = epochs;
    tc.batch_size = batch;
    tc.lr = lr;
    tc.seed = seed;
    CvOptions cv;
    cv.jobs = jobs;
    CVReport report;
    {
      py::gil_scoped_release release;
      report = run_cv(ds, mc, tc, folds, seed, cv);
    }
    return to_python(to_json(report));
  }, py::arg("dataset"), py::arg("model") = "gfn", py::arg("folds") = 10, py::arg("epochs") = 100,
        py::arg("batch") = 128, py::arg("lr") = 0.001, py::arg("seed") = 0, py::arg("K") = -1,
        py::arg("use_degree") = true, py::arg("include_raw") = true, py::arg("hidden") = 128, py::arg("jobs") = 1,
        "Cross-validation report as a dict. K=-1 keeps the model's default depth.");

  m.def("summary_line", [](const py::object& report) {
    const std::string s = py::module_::import("json").attr("dumps")(report).cast<std::string>();
    return summary_line(cv_report_from_json(nlohmann::json::parse(s)));
  }, py::arg("report"));

  m.def("set_warnings_enabled", &set_warnings_enabled, py::arg("enabled"));
}
