#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "xltm/cluster.hpp"
#include "xltm/corpus_io.hpp"
#include "xltm/eval.hpp"
#include "xltm/refine.hpp"
#include "xltm/synth.hpp"
#include "xltm/topics.hpp"

namespace xltm {

/// Sub-seed streams derived from one run seed with derive_seed().
enum SeedStream : std::uint64_t { kSynthStream = 1, kSvdStream = 2, kKMeansStream = 3 };

struct SubSeeds {
  std::uint64_t synthetic = 0;
  std::uint64_t svd = 0;
  std::uint64_t kmeans = 0;
};

SubSeeds sub_seeds(std::uint64_t seed);

/// Exactly one of embeddings / provider_config / synthetic selects the
/// embedding source. With `synthetic`, the corpus and comparable pairs are
/// generated too, and SynthSpec::seed is replaced by the run's
/// synthetic sub-seed.
struct PipelineConfig {
  std::optional<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> embeddings;
  std::optional<std::filesystem::path> provider_config;
  std::optional<SynthSpec> synthetic;
  RefineMethod method = RefineMethod::usvd;
  std::size_t rank = 100;
  std::size_t clusters = 50;
  std::size_t topn = 15;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::optional<std::filesystem::path> comparable;
  std::filesystem::path out = "out";
  RefineOptions refine_options;
};

void validate(const PipelineConfig& config);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
nlohmann::json to_json(const PipelineConfig& config);

struct PipelineInputs {
  Corpus corpus;
  EmbeddingMatrix embeddings;  ///< aligned to corpus order
  std::optional<ComparableCorpus> comparable;
  std::optional<SynthTruth> truth;
};

/// Loads or generates the corpus, embeddings and comparable pairs.
PipelineInputs resolve_inputs(const PipelineConfig& config, std::uint64_t seed);

struct RunReport {
  PipelineConfig config;
  std::uint64_t seed = 0;
  SubSeeds seeds;
  RefinedEmbeddings refined;
  ClusterAssignment assignment;
  TopicTopWords top_words;
  std::optional<EvalReport> evaluation;
  std::vector<double> language_balance;
  std::optional<double> ari_vs_truth;
};

/// embed/load -> refine -> k-means -> term counts -> c-TF-IDF -> top words
/// -> (with a comparable corpus) CNPMI, Diversity and TQ.
RunReport run_pipeline(const PipelineConfig& config, const PipelineInputs& inputs, std::uint64_t seed);
RunReport run_pipeline(const PipelineConfig& config, std::uint64_t seed);

nlohmann::json to_json(const RunReport& report);
/// topics_seed<S>.{json,md}, assignment_seed<S>.json, run_seed<S>.json and,
/// when evaluated, eval_seed<S>.json.
void write_run_outputs(const std::filesystem::path& dir, const RunReport& report);

/// All configured seeds, with outputs written under config.out. Returns the
/// aggregated evaluation (written as eval_report.json) when one exists.
std::optional<EvalReport> run_all_seeds(const PipelineConfig& config, std::vector<RunReport>* reports = nullptr);

struct BenchmarkSweep {
  std::vector<RefineMethod> methods;
  std::vector<std::size_t> ranks;
  std::vector<std::uint64_t> seeds;
};

struct BenchmarkCell {
  RefineMethod method = RefineMethod::oe;
  std::size_t r = 0;
  EvalReport report;
};

struct BenchmarkResult {
  std::vector<std::size_t> ranks;
  std::vector<RefineMethod> methods;
  std::vector<BenchmarkCell> cells;  ///< rank-major, then method
};

BenchmarkResult run_benchmark(const PipelineConfig& config, const BenchmarkSweep& sweep);

/// One table per rank: rows are methods, columns CNPMI / Diversity / TQ.
std::string benchmark_markdown(const BenchmarkResult& result);
std::string benchmark_csv(const BenchmarkResult& result);
/// CNPMI against rank for every refining method.
std::string dimension_series_csv(const BenchmarkResult& result);
nlohmann::json to_json(const BenchmarkResult& result);
/// benchmark.{md,csv,json} and dimension_series.csv.
void write_benchmark_outputs(const std::filesystem::path& dir, const BenchmarkResult& result);

}  // namespace xltm
