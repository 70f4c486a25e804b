#include "xltm/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "xltm/provider.hpp"

namespace xltm {
namespace {

constexpr std::string_view kModule = "cli";

[[noreturn]] void fail(const std::string& message) { throw Error(kModule, message); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("cannot write " + path.string());
  out << text;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<std::size_t> id_order(const std::vector<std::string>& ids) {
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  return order;
}

std::vector<std::string> topic_languages(const Corpus& corpus, const std::optional<ComparableCorpus>& cc) {
  if (cc && cc->languages) {
    const auto& [l1, l2] = *cc->languages;
    const std::set<std::string> declared{l1, l2};
    const std::set<std::string> present(corpus.languages().begin(), corpus.languages().end());
    if (declared != present)
      fail("comparable corpus languages (" + l1 + ", " + l2 + ") do not match the corpus languages");
    return {l1, l2};
  }
  return corpus.languages();
}

std::string seed_file(const std::string& stem, std::uint64_t seed, const std::string& ext) {
  return stem + "_seed" + std::to_string(seed) + ext;
}

}  // namespace

SubSeeds sub_seeds(std::uint64_t seed) {
  return {derive_seed(seed, kSynthStream), derive_seed(seed, kSvdStream), derive_seed(seed, kKMeansStream)};
}

void validate(const PipelineConfig& c) {
  const int sources = int(c.embeddings.has_value()) + int(c.provider_config.has_value()) + int(c.synthetic.has_value());
  if (sources != 1)
    fail("exactly one embedding source is required (--embeddings, --provider-config or --synthetic), got " +
         std::to_string(sources));
  if (!c.synthetic && !c.corpus) fail("--corpus is required unless --synthetic is used");
  if (c.clusters < 1) fail("clusters must be >= 1");
  if (c.topn < 1) fail("topn must be >= 1");
  if (c.method != RefineMethod::oe && c.rank < 1) fail("rank must be >= 1");
  if (c.seeds.empty()) fail("at least one seed is required");
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  // Null values (as written by to_json) mean "not set".
  auto has = [&](const char* key) { return j.contains(key) && !j.at(key).is_null(); };
  try {
    if (has("corpus")) c.corpus = j.at("corpus").get<std::string>();
    if (has("embeddings")) c.embeddings = j.at("embeddings").get<std::string>();
    if (has("provider_config")) c.provider_config = j.at("provider_config").get<std::string>();
    if (has("synthetic")) c.synthetic = synth_spec_from_json(j.at("synthetic"));
    if (has("method")) c.method = parse_refine_method(j.at("method").get<std::string>());
    if (has("rank")) c.rank = j.at("rank").get<std::size_t>();
    if (has("clusters")) c.clusters = j.at("clusters").get<std::size_t>();
    if (has("topn")) c.topn = j.at("topn").get<std::size_t>();
    if (has("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (has("comparable")) c.comparable = j.at("comparable").get<std::string>();
    if (has("out")) c.out = j.at("out").get<std::string>();
    if (has("svdlr_remove")) c.refine_options.svdlr_remove = j.at("svdlr_remove").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("invalid pipeline config (") + e.what() + ")");
  }
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config " + path.string());
  try {
    return pipeline_config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    fail("malformed config " + path.string() + " (" + e.what() + ")");
  }
}

nlohmann::json to_json(const PipelineConfig& c) {
  auto opt_path = [](const std::optional<std::filesystem::path>& p) -> nlohmann::json {
    return p ? nlohmann::json(p->generic_string()) : nlohmann::json(nullptr);
  };
  return {{"corpus", opt_path(c.corpus)},
          {"embeddings", opt_path(c.embeddings)},
          {"provider_config", opt_path(c.provider_config)},
          {"synthetic", c.synthetic ? to_json(*c.synthetic) : nlohmann::json(nullptr)},
          {"method", to_string(c.method)},
          {"rank", c.rank},
          {"clusters", c.clusters},
          {"topn", c.topn},
          {"seeds", c.seeds},
          {"comparable", opt_path(c.comparable)},
          {"out", c.out.generic_string()},
          {"svdlr_remove", c.refine_options.svdlr_remove}};
}

PipelineInputs resolve_inputs(const PipelineConfig& config, std::uint64_t seed) {
  validate(config);
  PipelineInputs in;
  if (config.synthetic) {
    SynthSpec spec = *config.synthetic;
    spec.seed = sub_seeds(seed).synthetic;
    SynthData data = generate_synthetic(spec);
    in.corpus = std::move(data.corpus);
    in.embeddings = std::move(data.embeddings);
    in.comparable = std::move(data.comparable);
    in.truth = std::move(data.truth);
  } else {
    in.corpus = load_corpus(*config.corpus);
    if (config.embeddings) {
      in.embeddings = align_corpus_embeddings(in.corpus, load_embeddings(*config.embeddings));
    } else {
      in.embeddings = fetch_embeddings(load_provider_config(*config.provider_config), in.corpus);
    }
  }
  if (config.comparable) in.comparable = load_comparable_pairs(*config.comparable);
  return in;
}

RunReport run_pipeline(const PipelineConfig& config, const PipelineInputs& inputs, std::uint64_t seed) {
  validate(config);
  if (inputs.corpus.languages().size() != 2)
    fail("the pipeline needs a bilingual corpus, found " + std::to_string(inputs.corpus.languages().size()) +
         " language(s)");
  if (inputs.embeddings.ids != inputs.corpus.ids()) fail("embeddings are not aligned with the corpus");

  RunReport rep;
  rep.config = config;
  rep.config.seeds = {seed};
  rep.seed = seed;
  rep.seeds = sub_seeds(seed);

  const auto labels = inputs.corpus.labels();
  rep.refined = refine(inputs.embeddings, config.method, config.rank, labels, rep.seeds.svd, config.refine_options);

  KMeansOptions km;
  km.seeding_order = id_order(inputs.corpus.ids());
  rep.assignment = kmeans_fit(rep.refined.data, config.clusters, rep.seeds.kmeans, km);
  rep.language_balance = cluster_language_balance(rep.assignment, labels);
  if (inputs.truth) rep.ari_vs_truth = adjusted_rand_index(rep.assignment.labels, inputs.truth->topic);

  const auto counts = cluster_term_counts(inputs.corpus, rep.assignment.labels, config.clusters);
  const auto scores = ctfidf_scores(counts);
  rep.top_words = top_words_per_language(scores, inputs.corpus, config.topn,
                                         topic_languages(inputs.corpus, inputs.comparable));

  if (inputs.comparable) {
    const auto model = build_cooccurrence(*inputs.comparable, query_vocab(rep.top_words));
    EvalConfig ec{to_string(config.method), config.rank, config.clusters, config.topn, {}};
    rep.evaluation = evaluate_topics(rep.top_words, model, ec, seed);
  }
  return rep;
}

RunReport run_pipeline(const PipelineConfig& config, std::uint64_t seed) {
  return run_pipeline(config, resolve_inputs(config, seed), seed);
}

nlohmann::json to_json(const RunReport& r) {
  nlohmann::json refine_json = {{"method", to_string(r.refined.method)},
                                {"r_requested", r.refined.r_requested},
                                {"r_effective", r.refined.data.cols()},
                                {"removed_dims", r.refined.removed_dims},
                                {"removed_t", r.refined.removed_t}};
  refine_json["removed_dim"] = r.refined.removed_dim() ? nlohmann::json(*r.refined.removed_dim()) : nlohmann::json(nullptr);
  if (r.refined.singular_values) {
    const auto& s = *r.refined.singular_values;
    refine_json["singular_values"] = std::vector<double>(s.data(), s.data() + s.size());
  }
  nlohmann::json diagnostics = {{"language_balance", r.language_balance},
                                {"mean_language_balance", mean(r.language_balance)}};
  if (r.ari_vs_truth) diagnostics["ari_vs_truth"] = *r.ari_vs_truth;

  return {{"config", to_json(r.config)},
          {"seed", r.seed},
          {"sub_seeds", {{"synthetic", r.seeds.synthetic}, {"svd", r.seeds.svd}, {"kmeans", r.seeds.kmeans}}},
          {"refine", refine_json},
          {"clustering",
           {{"K", r.assignment.K},
            {"seed", r.assignment.seed},
            {"inertia", r.assignment.inertia},
            {"iterations_run", r.assignment.iterations_run}}},
          {"diagnostics", diagnostics},
          {"topics", to_json(r.top_words)},
          {"evaluation", r.evaluation ? to_json(*r.evaluation)
                                      : nlohmann::json{{"status", "skipped"}, {"reason", "no comparable corpus"}}}};
}

void write_run_outputs(const std::filesystem::path& dir, const RunReport& r) {
  std::filesystem::create_directories(dir);
  write_json(dir / seed_file("topics", r.seed, ".json"), to_json(r.top_words));
  write_text(dir / seed_file("topics", r.seed, ".md"), to_markdown(r.top_words));
  write_json(dir / seed_file("assignment", r.seed, ".json"), to_json(r.assignment));
  write_json(dir / seed_file("run", r.seed, ".json"), to_json(r));
  if (r.evaluation) write_json(dir / seed_file("eval", r.seed, ".json"), to_json(*r.evaluation));
}

std::optional<EvalReport> run_all_seeds(const PipelineConfig& config, std::vector<RunReport>* reports) {
  validate(config);
  std::optional<PipelineInputs> shared;
  if (!config.synthetic) shared = resolve_inputs(config, config.seeds.front());

  std::vector<EvalReport> evals;
  for (auto seed : config.seeds) {
    RunReport rep = shared ? run_pipeline(config, *shared, seed) : run_pipeline(config, seed);
    write_run_outputs(config.out, rep);
    if (rep.evaluation) evals.push_back(*rep.evaluation);
    if (reports) reports->push_back(std::move(rep));
  }
  if (evals.empty()) return std::nullopt;
  EvalReport agg = aggregate_runs(evals);
  write_json(config.out / "eval_report.json", to_json(agg));
  return agg;
}

BenchmarkResult run_benchmark(const PipelineConfig& config, const BenchmarkSweep& sweep) {
  if (sweep.methods.empty() || sweep.ranks.empty() || sweep.seeds.empty()) fail("nothing to run");
  PipelineConfig base = config;
  base.seeds = sweep.seeds;
  validate(base);
  if (!base.synthetic && !base.comparable) fail("benchmark needs a comparable corpus for evaluation");

  // File-backed inputs are shared by every cell; synthetic ones vary with seed.
  std::optional<PipelineInputs> shared;
  std::map<std::uint64_t, PipelineInputs> per_seed;
  if (base.synthetic) {
    for (auto s : sweep.seeds) per_seed.emplace(s, resolve_inputs(base, s));
  } else {
    shared = resolve_inputs(base, sweep.seeds.front());
  }
  auto inputs_for = [&](std::uint64_t s) -> const PipelineInputs& { return shared ? *shared : per_seed.at(s); };

  BenchmarkResult result;
  result.methods = sweep.methods;
  result.ranks = sweep.ranks;
  std::optional<EvalReport> oe_cache;
  for (auto r : sweep.ranks) {
    for (auto method : sweep.methods) {
      BenchmarkCell cell;
      cell.method = method;
      cell.r = r;
      if (method == RefineMethod::oe && oe_cache) {
        cell.report = *oe_cache;
        cell.report.config.r = r;
      } else {
        PipelineConfig c = base;
        c.method = method;
        c.rank = r;
        std::vector<EvalReport> runs;
        for (auto s : sweep.seeds) runs.push_back(*run_pipeline(c, inputs_for(s), s).evaluation);
        cell.report = aggregate_runs(runs);
        if (method == RefineMethod::oe) oe_cache = cell.report;
      }
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

std::string benchmark_markdown(const BenchmarkResult& result) {
  std::ostringstream md;
  auto cell = [](const MetricSummary& s) { return fixed3(s.mean) + " ± " + fixed3(s.std); };
  for (auto r : result.ranks) {
    md << "### r = " << r << "\n\n| Method | CNPMI | Diversity | TQ |\n|---|---|---|---|\n";
    for (const auto& c : result.cells) {
      if (c.r != r) continue;
      md << "| " << to_string(c.method) << " | " << cell(c.report.cnpmi) << " | " << cell(c.report.diversity)
         << " | " << cell(c.report.tq) << " |\n";
    }
    md << '\n';
  }
  return md.str();
}

std::string benchmark_csv(const BenchmarkResult& result) {
  std::ostringstream csv;
  csv << "method,r,runs,cnpmi_mean,cnpmi_std,diversity_mean,diversity_std,tq_mean,tq_std\n";
  for (const auto& c : result.cells) {
    const auto& rep = c.report;
    csv << to_string(c.method) << ',' << c.r << ',' << rep.per_seed.size() << ',' << fixed6(rep.cnpmi.mean) << ','
        << fixed6(rep.cnpmi.std) << ',' << fixed6(rep.diversity.mean) << ',' << fixed6(rep.diversity.std) << ','
        << fixed6(rep.tq.mean) << ',' << fixed6(rep.tq.std) << '\n';
  }
  return csv.str();
}

std::string dimension_series_csv(const BenchmarkResult& result) {
  std::ostringstream csv;
  csv << "method,r,cnpmi_mean,cnpmi_std\n";
  for (auto method : result.methods) {
    if (method == RefineMethod::oe) continue;
    for (const auto& c : result.cells)
      if (c.method == method)
        csv << to_string(method) << ',' << c.r << ',' << fixed6(c.report.cnpmi.mean) << ','
            << fixed6(c.report.cnpmi.std) << '\n';
  }
  return csv.str();
}

nlohmann::json to_json(const BenchmarkResult& result) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : result.cells)
    cells.push_back({{"method", to_string(c.method)}, {"r", c.r}, {"report", to_json(c.report)}});
  std::vector<std::string> methods;
  for (auto m : result.methods) methods.push_back(to_string(m));
  return {{"methods", methods}, {"ranks", result.ranks}, {"cells", cells}};
}

void write_benchmark_outputs(const std::filesystem::path& dir, const BenchmarkResult& result) {
  std::filesystem::create_directories(dir);
  write_text(dir / "benchmark.md", benchmark_markdown(result));
  write_text(dir / "benchmark.csv", benchmark_csv(result));
  write_text(dir / "dimension_series.csv", dimension_series_csv(result));
  write_json(dir / "benchmark.json", to_json(result));
}

}  // namespace xltm
