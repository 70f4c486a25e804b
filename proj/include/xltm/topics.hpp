#pragma once

#include <numbers>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "xltm/corpus_io.hpp"

namespace xltm {

/// Token counts per (cluster, vocab id).
struct ClusterTermCounts {
  std::size_t K = 0;
  /// table[k] maps vocab id -> tf, only ids with tf > 0.
  std::vector<std::map<int, long long>> table;
  std::vector<long long> cluster_totals;
  /// Average token count per cluster.
  double A = 0.0;
  /// Total frequency per vocab id across clusters.
  std::vector<long long> f;
};

/// labels[i] is the cluster of corpus document i, in [0, K).
ClusterTermCounts cluster_term_counts(const Corpus& corpus, const std::vector<int>& labels, std::size_t K);

struct TopicWordScores {
  /// scores[k] maps vocab id -> c-TF-IDF weight.
  std::vector<std::map<int, double>> scores;
  std::string method = "ctfidf";
};

/// tf * log(1 + A / f); natural log unless another base is given.
TopicWordScores ctfidf_scores(const ClusterTermCounts& counts, double log_base = std::numbers::e);

struct ScoredWord {
  std::string word;
  double score = 0.0;
};

struct TopicWords {
  /// Indexed like TopicTopWords::languages.
  std::vector<std::vector<ScoredWord>> words;
  std::vector<bool> shortfall;
};

struct TopicTopWords {
  std::size_t N = 0;
  /// Ordered (l1, l2): index 0 is matched against the l1 side of a
  /// comparable corpus.
  std::vector<std::string> languages;
  std::vector<TopicWords> topics;
};

/// Top-N words per topic and language: descending score, ties by surface.
/// `languages` fixes the output order; empty means the corpus languages.
TopicTopWords top_words_per_language(const TopicWordScores& scores, const Corpus& corpus, std::size_t N,
                                     std::vector<std::string> languages = {});

nlohmann::json to_json(const TopicTopWords& top);
std::string to_markdown(const TopicTopWords& top);

}  // namespace xltm
