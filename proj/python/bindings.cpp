#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "xltm/pipeline.hpp"

namespace py = pybind11;
using namespace xltm;

namespace {

EmbeddingMatrix embedding_matrix(const Matrix& data, std::vector<std::string> ids) {
  if (ids.empty())
    for (Eigen::Index i = 0; i < data.rows(); ++i) ids.push_back(std::to_string(i));
  return {std::move(ids), data};
}

py::dict refined_dict(const RefinedEmbeddings& r) {
  py::dict d;
  d["data"] = r.data;
  d["ids"] = r.ids;
  d["method"] = to_string(r.method);
  d["removed_dims"] = r.removed_dims;
  d["removed_t"] = r.removed_t;
  d["singular_values"] = r.singular_values ? py::cast(*r.singular_values) : py::none();
  return d;
}

py::dict corpus_dict(const Corpus& c) {
  py::list tokens;
  for (const auto& doc : c.documents()) tokens.append(doc.tokens);
  py::dict d;
  d["ids"] = c.ids();
  d["langs"] = c.labels();
  d["tokens"] = tokens;
  return d;
}

}  // namespace

PYBIND11_MODULE(_xltm, m) {
  m.doc() = "Cross-lingual clustering topic model core";

  py::register_exception<Error>(m, "XltmError", PyExc_RuntimeError);

  m.def("load_corpus", [](const std::string& path, bool allow_empty) {
    return corpus_dict(load_corpus(path, {.allow_empty = allow_empty, .require_bilingual = true}));
  }, py::arg("path"), py::arg("allow_empty") = false);

  m.def("load_embeddings", [](const std::string& path) {
    const auto e = load_embeddings(path);
    return py::make_tuple(e.ids, e.data);
  }, py::arg("path"), "Returns (ids, matrix).");

  m.def("write_embeddings", [](const std::string& path, const std::vector<std::string>& ids, const Matrix& data) {
    write_embeddings(path, embedding_matrix(data, ids));
  }, py::arg("path"), py::arg("ids"), py::arg("data"));

  m.def("truncated_svd", [](const Matrix& E, std::size_t r, std::uint64_t seed) {
    const auto s = truncated_svd(E, r, seed);
    return py::make_tuple(s.U, s.S, s.Vt);
  }, py::arg("E"), py::arg("r"), py::arg("seed"), "Returns (U, S, Vt).");

  m.def("ldd_t_statistics", [](const Matrix& X, const std::vector<std::string>& labels) {
    const auto rep = ldd_t_statistics(X, labels);
    std::vector<double> t;
    for (const auto& d : rep.dims) t.push_back(d.t);
    py::dict d;
    d["languages"] = rep.languages;
    d["t"] = t;
    d["sorted_dims"] = rep.sorted_dims;
    return d;
  }, py::arg("X"), py::arg("labels"));

  m.def("refine", [](const Matrix& E, const std::string& method, std::size_t r, const std::vector<std::string>& labels,
                     std::uint64_t seed, std::size_t svdlr_remove) {
    RefineOptions opts;
    opts.svdlr_remove = svdlr_remove;
    return refined_dict(refine(embedding_matrix(E, {}), parse_refine_method(method), r, labels, seed, opts));
  }, py::arg("E"), py::arg("method"), py::arg("r"), py::arg("labels"), py::arg("seed"), py::arg("svdlr_remove") = 1);

  m.def("kmeans_fit", [](const Matrix& X, std::size_t K, std::uint64_t seed, std::size_t n_init) {
    KMeansOptions opts;
    opts.n_init = n_init;
    const auto a = kmeans_fit(X, K, seed, opts);
    py::dict d;
    d["labels"] = a.labels;
    d["centroids"] = a.centroids;
    d["inertia"] = a.inertia;
    d["iterations_run"] = a.iterations_run;
    d["inertia_history"] = a.inertia_history;
    return d;
  }, py::arg("X"), py::arg("K"), py::arg("seed"), py::arg("n_init") = KMeansOptions{}.n_init);

  m.def("adjusted_rand_index", &adjusted_rand_index, py::arg("a"), py::arg("b"));

  m.def("cluster_language_balance", [](const std::vector<int>& labels, std::size_t K, const std::vector<std::string>& langs) {
    ClusterAssignment a;
    a.labels = labels;
    a.K = K;
    return cluster_language_balance(a, langs);
  }, py::arg("labels"), py::arg("K"), py::arg("langs"));

  m.def("npmi", &npmi, py::arg("joint"), py::arg("df1"), py::arg("df2"), py::arg("M"));
  m.def("topic_quality", &topic_quality, py::arg("mean_cnpmi"), py::arg("diversity"));

  m.def("_generate_synthetic", [](const std::string& spec_json) {
    const auto data = generate_synthetic(synth_spec_from_json(nlohmann::json::parse(spec_json)));
    py::dict d = corpus_dict(data.corpus);
    d["embeddings"] = data.embeddings.data;
    d["topic"] = data.truth.topic;
    py::list pairs;
    for (const auto& p : data.comparable.pairs) pairs.append(py::make_tuple(p.l1_tokens, p.l2_tokens));
    d["comparable"] = pairs;
    return d;
  }, py::arg("spec_json"));

  m.def("_run_pipeline", [](const std::string& config_json, std::uint64_t seed) {
    const auto config = pipeline_config_from_json(nlohmann::json::parse(config_json));
    RunReport report;
    {
      py::gil_scoped_release release;
      report = run_pipeline(config, seed);
    }
    return to_json(report).dump();
  }, py::arg("config_json"), py::arg("seed"));
}
