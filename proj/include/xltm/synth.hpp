#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "xltm/corpus_io.hpp"

namespace xltm {

/// Mean shift of +offset for the first language and -offset for the second.
struct LddAxis {
  std::size_t axis = 0;
  double offset = 0.0;
};

struct SynthSpec {
  std::size_t num_topics = 5;
  std::size_t docs_per_topic_lang = 50;
  std::size_t dim = 64;
  /// Minimum pairwise distance between topic centers; centers have this norm.
  double separation = 6.0;
  double noise = 1.0;
  std::vector<LddAxis> ldd_axes{{0, 5.0}};
  std::vector<std::string> languages{"en", "zh"};
  std::size_t words_per_topic = 20;
  std::size_t background_words = 10;
  double background_rate = 0.2;
  std::size_t doc_length = 20;
  std::size_t pairs_per_topic = 40;
  std::uint64_t seed = 1;
};

void validate(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthSpec& spec);

struct SynthTruth {
  std::vector<int> topic;
  std::vector<std::string> lang;
  std::vector<LddAxis> ldd_axes;
};

struct SynthData {
  Corpus corpus;
  EmbeddingMatrix embeddings;
  ComparableCorpus comparable;
  SynthTruth truth;
};

/// Planted-topic bilingual corpus, embeddings and comparable pairs; a pure
/// function of `spec`, including its seed.
SynthData generate_synthetic(const SynthSpec& spec);

nlohmann::json to_json(const SynthTruth& truth);

/// Writes corpus.jsonl, embeddings.emb1, comparable.jsonl and truth.json.
void write_synthetic(const std::filesystem::path& dir, const SynthData& data);

}  // namespace xltm
