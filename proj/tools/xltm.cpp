// xltm command line: run, benchmark, diagnose, synth, embed.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "xltm/pipeline.hpp"
#include "xltm/provider.hpp"

using namespace xltm;

namespace {

struct PipelineFlags {
  std::string config, corpus, embeddings, provider_config, synthetic, method, comparable, out;
  std::size_t rank = 0, clusters = 0, topn = 0, svdlr_remove = 0;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, CLI::Option*> opts;

  void attach(CLI::App* app) {
    opts["config"] = app->add_option("--config", config, "JSON config file; flags override its values")->check(CLI::ExistingFile);
    opts["corpus"] = app->add_option("--corpus", corpus, "Corpus JSONL");
    opts["embeddings"] = app->add_option("--embeddings", embeddings, "EMB1 or JSONL embeddings aligned by id");
    opts["provider-config"] = app->add_option("--provider-config", provider_config, "Embedding provider JSON");
    opts["synthetic"] = app->add_option("--synthetic", synthetic, "Synthetic spec JSON file, or 'default'");
    opts["method"] = app->add_option("--method", method, "oe, svd, usvd or svdlr");
    opts["rank"] = app->add_option("--rank", rank, "Refined dimension r");
    opts["clusters"] = app->add_option("--clusters", clusters, "Number of clusters K");
    opts["topn"] = app->add_option("--topn", topn, "Top words per topic and language N");
    opts["seeds"] = app->add_option("--seeds", seeds, "Run seeds, comma separated")->delimiter(',');
    opts["comparable"] = app->add_option("--comparable", comparable, "Comparable pairs JSONL for evaluation");
    opts["out"] = app->add_option("--out", out, "Output directory");
    opts["svdlr-remove"] = app->add_option("--svdlr-remove", svdlr_remove, "Columns removed by svdlr");
  }

  bool given(const std::string& name) const { return opts.at(name)->count() > 0; }

  PipelineConfig resolve() const {
    PipelineConfig c = config.empty() ? PipelineConfig{} : load_pipeline_config(config);
    if (given("corpus")) c.corpus = corpus;
    if (given("embeddings")) c.embeddings = embeddings;
    if (given("provider-config")) c.provider_config = provider_config;
    if (given("synthetic")) c.synthetic = load_spec(synthetic);
    if (given("method")) c.method = parse_refine_method(method);
    if (given("rank")) c.rank = rank;
    if (given("clusters")) c.clusters = clusters;
    if (given("topn")) c.topn = topn;
    if (given("seeds")) c.seeds = seeds;
    if (given("comparable")) c.comparable = comparable;
    if (given("out")) c.out = out;
    if (given("svdlr-remove")) c.refine_options.svdlr_remove = svdlr_remove;
    validate(c);
    return c;
  }

  static SynthSpec load_spec(const std::string& arg) {
    if (arg == "default") return SynthSpec{};
    std::ifstream in(arg);
    if (!in) throw Error("cli", "cannot open synthetic spec " + arg);
    try {
      return synth_spec_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error("cli", "malformed synthetic spec " + arg + " (" + e.what() + ")");
    }
  }
};

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cli", "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

void print_summary(const std::vector<RunReport>& runs, const std::optional<EvalReport>& agg) {
  for (const auto& r : runs) {
    std::printf("seed %llu: method=%s r'=%lld K=%zu mean language balance %.3f", static_cast<unsigned long long>(r.seed),
                to_string(r.refined.method).c_str(), static_cast<long long>(r.refined.data.cols()), r.assignment.K,
                mean(r.language_balance));
    if (r.ari_vs_truth) std::printf(", ARI vs truth %.3f", *r.ari_vs_truth);
    if (r.evaluation)
      std::printf(", CNPMI %.3f, Diversity %.3f, TQ %.3f", r.evaluation->cnpmi.mean, r.evaluation->diversity.mean,
                  r.evaluation->tq.mean);
    std::printf("\n");
  }
  if (agg)
    std::printf("aggregate over %zu seeds: CNPMI %.3f ± %.3f, Diversity %.3f ± %.3f, TQ %.3f ± %.3f\n",
                agg->per_seed.size(), agg->cnpmi.mean, agg->cnpmi.std, agg->diversity.mean, agg->diversity.std,
                agg->tq.mean, agg->tq.std);
  else
    std::printf("evaluation skipped: no comparable corpus\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-lingual clustering topic model with dimension refinement"};
  app.require_subcommand(1);

  PipelineFlags run_flags;
  auto* run = app.add_subcommand("run", "Refine, cluster, extract topics and evaluate for every seed");
  run_flags.attach(run);

  PipelineFlags bench_flags;
  std::vector<std::string> methods{"oe", "svd", "usvd", "svdlr"};
  std::vector<std::size_t> ranks;
  auto* bench = app.add_subcommand("benchmark", "Sweep methods x ranks x seeds and tabulate the aggregates");
  bench_flags.attach(bench);
  bench->add_option("--methods", methods, "Methods to sweep, comma separated")->delimiter(',')->capture_default_str();
  bench->add_option("--ranks", ranks, "Ranks to sweep, comma separated (default: --rank)")->delimiter(',');

  PipelineFlags diag_flags;
  std::size_t top = 3, bins = 50;
  auto* diag = app.add_subcommand("diagnose", "Per-dimension language t-statistics and histograms");
  diag_flags.attach(diag);
  diag->add_option("--top", top, "Dimensions to histogram")->capture_default_str();
  diag->add_option("--bins", bins, "Histogram bins")->capture_default_str();

  std::string spec_path, synth_out = "synthetic";
  std::optional<std::uint64_t> synth_seed;
  auto* synth = app.add_subcommand("synth", "Write a planted-topic synthetic dataset");
  synth->add_option("--spec", spec_path, "Synthetic spec JSON (default spec if omitted)")->check(CLI::ExistingFile);
  synth->add_option("--seed", synth_seed, "Override the spec seed");
  synth->add_option("--out", synth_out, "Output directory")->capture_default_str();

  std::string embed_corpus, embed_provider, embed_out = "embeddings.emb1";
  auto* embed = app.add_subcommand("embed", "Fetch document embeddings from a provider");
  embed->add_option("--corpus", embed_corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  embed->add_option("--provider-config", embed_provider, "Provider JSON")->required()->check(CLI::ExistingFile);
  embed->add_option("--out", embed_out, "Output EMB1 file")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const PipelineConfig config = run_flags.resolve();
      std::vector<RunReport> reports;
      const auto agg = run_all_seeds(config, &reports);
      print_summary(reports, agg);
      std::printf("outputs in %s\n", config.out.string().c_str());
    } else if (bench->parsed()) {
      const PipelineConfig config = bench_flags.resolve();
      BenchmarkSweep sweep;
      for (const auto& m : methods) sweep.methods.push_back(parse_refine_method(m));
      sweep.ranks = bench->count("--ranks") ? ranks : std::vector<std::size_t>{config.rank};
      sweep.seeds = config.seeds;
      const auto result = run_benchmark(config, sweep);
      write_benchmark_outputs(config.out, result);
      std::printf("%s", benchmark_markdown(result).c_str());
      std::printf("outputs in %s\n", config.out.string().c_str());
    } else if (diag->parsed()) {
      PipelineConfig config = diag_flags.resolve();
      if (!diag_flags.given("method")) config.method = RefineMethod::oe;
      const std::uint64_t seed = config.seeds.front();
      const PipelineInputs inputs = resolve_inputs(config, seed);
      const auto labels = inputs.corpus.labels();
      const auto refined =
          refine(inputs.embeddings, config.method, config.rank, labels, sub_seeds(seed).svd, config.refine_options);
      std::filesystem::create_directories(config.out);
      const auto report = ldd_t_statistics(refined.data, labels);
      write_json_file(config.out / "ldd_report.json", to_json(report));
      write_json_file(config.out / "histograms.json",
                      to_json(export_dimension_histograms(refined.data, labels, top, bins)));
      std::printf("%s embeddings (%lld dims); top dimensions by |t|:\n", to_string(config.method).c_str(),
                  static_cast<long long>(refined.data.cols()));
      for (std::size_t i = 0; i < std::min(top, report.sorted_dims.size()); ++i) {
        const auto& d = report.dims[report.sorted_dims[i]];
        std::printf("  dim %zu: t = %.3f\n", d.dim, d.t);
      }
      std::printf("outputs in %s\n", config.out.string().c_str());
    } else if (synth->parsed()) {
      SynthSpec spec = spec_path.empty() ? SynthSpec{} : PipelineFlags::load_spec(spec_path);
      if (synth_seed) spec.seed = *synth_seed;
      const SynthData data = generate_synthetic(spec);
      write_synthetic(synth_out, data);
      std::printf("%zu documents, %zu comparable pairs, %lld dims written to %s\n", data.corpus.size(),
                  data.comparable.size(), static_cast<long long>(data.embeddings.dim()), synth_out.c_str());
    } else if (embed->parsed()) {
      const Corpus corpus = load_corpus(embed_corpus);
      const EmbeddingMatrix emb = fetch_embeddings(load_provider_config(embed_provider), corpus);
      write_embeddings(embed_out, emb);
      std::printf("%lld x %lld embeddings written to %s\n", static_cast<long long>(emb.rows()),
                  static_cast<long long>(emb.dim()), embed_out.c_str());
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
