#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "xltm/corpus_io.hpp"
#include "xltm/topics.hpp"

namespace xltm {

/// Words to track on each side of the comparable corpus.
struct QueryVocab {
  std::set<std::string> l1;
  std::set<std::string> l2;
};

QueryVocab query_vocab(const TopicTopWords& top);

/// Document-pair presence counts over a query vocabulary.
struct CooccurrenceModel {
  std::size_t M = 0;
  std::map<std::string, std::size_t> df_l1;
  std::map<std::string, std::size_t> df_l2;
  /// (l1 word, l2 word) -> pairs with the first on the l1 side and the
  /// second on the l2 side. Only non-zero entries are stored.
  std::map<std::pair<std::string, std::string>, std::size_t> joint;

  std::size_t df1(const std::string& w) const;
  std::size_t df2(const std::string& w) const;
  std::size_t joint_count(const std::string& w1, const std::string& w2) const;
  double pr_l1(const std::string& w) const { return static_cast<double>(df1(w)) / static_cast<double>(M); }
  double pr_l2(const std::string& w) const { return static_cast<double>(df2(w)) / static_cast<double>(M); }
  double pr_joint(const std::string& w1, const std::string& w2) const {
    return static_cast<double>(joint_count(w1, w2)) / static_cast<double>(M);
  }
};

CooccurrenceModel build_cooccurrence(const ComparableCorpus& cc, const QueryVocab& vocab);

/// NPMI of an (l1, l2) word pair from raw counts. Zero joint or zero
/// marginal gives -1; Pr(i,j) = Pr(i) = Pr(j) gives 1.
double npmi(std::size_t joint, std::size_t df1, std::size_t df2, std::size_t M);

struct CnpmiResult {
  std::vector<double> per_topic;
  double mean = 0.0;
  /// Topics with an empty word list in either language (scored -1).
  std::vector<std::size_t> flagged_topics;
};

/// Mean NPMI over every available cross-language pair of each topic.
CnpmiResult topic_cnpmi(const TopicTopWords& top, const CooccurrenceModel& model);

struct DiversityResult {
  double value = 0.0;
  bool shortfall = false;
};

/// Unique words per language over all topics, divided by K * 2 * N.
DiversityResult topic_diversity(const TopicTopWords& top);

double topic_quality(double mean_cnpmi, double diversity);

struct EvalConfig {
  std::string method;
  std::size_t r = 0;
  std::size_t K = 0;
  std::size_t N = 0;
  std::vector<std::uint64_t> seeds;
};

struct SeedRecord {
  std::uint64_t seed = 0;
  double cnpmi_mean = 0.0;
  std::vector<double> cnpmi_per_topic;
  double diversity = 0.0;
  double tq = 0.0;
  std::vector<std::size_t> flagged_topics;
  bool diversity_shortfall = false;
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;
};

struct EvalReport {
  EvalConfig config;
  std::vector<SeedRecord> per_seed;
  MetricSummary cnpmi, diversity, tq;
  /// Set when fewer than two runs were aggregated (std reported as 0).
  bool std_undefined = true;
};

/// Single-seed report from a topic word list and co-occurrence model.
EvalReport evaluate_topics(const TopicTopWords& top, const CooccurrenceModel& model, EvalConfig config,
                           std::uint64_t seed);

/// Mean and sample standard deviation per metric over runs that differ only
/// in seed.
EvalReport aggregate_runs(const std::vector<EvalReport>& reports);

nlohmann::json to_json(const EvalReport& report);

}  // namespace xltm
