#include "xltm/topics.hpp"

#include <algorithm>
#include <sstream>

namespace xltm {
namespace {

constexpr std::string_view kModule = "topics";

[[noreturn]] void fail(const std::string& message) { throw Error(kModule, message); }

}  // namespace

ClusterTermCounts cluster_term_counts(const Corpus& corpus, const std::vector<int>& labels, std::size_t K) {
  if (labels.size() != corpus.size())
    fail(std::to_string(labels.size()) + " cluster labels for " + std::to_string(corpus.size()) + " documents");
  if (K < 1) fail("K must be >= 1");

  ClusterTermCounts c;
  c.K = K;
  c.table.resize(K);
  c.cluster_totals.assign(K, 0);
  c.f.assign(corpus.vocab().size(), 0);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= K)
      fail("cluster label " + std::to_string(labels[i]) + " out of range for K=" + std::to_string(K));
    const auto k = static_cast<std::size_t>(labels[i]);
    for (int w : corpus.token_ids(i)) {
      ++c.table[k][w];
      ++c.cluster_totals[k];
      ++c.f[static_cast<std::size_t>(w)];
    }
  }
  long long total = 0;
  for (auto t : c.cluster_totals) total += t;
  c.A = static_cast<double>(total) / static_cast<double>(K);
  return c;
}

TopicWordScores ctfidf_scores(const ClusterTermCounts& counts, double log_base) {
  if (!(log_base > 1.0)) fail("log base must be > 1");
  const double log_scale = std::log(log_base);
  TopicWordScores out;
  out.scores.resize(counts.K);
  for (std::size_t k = 0; k < counts.K; ++k) {
    for (const auto& [w, tf] : counts.table[k]) {
      const long long fw = counts.f.at(static_cast<std::size_t>(w));
      if (fw < 1) fail("word id " + std::to_string(w) + " has tf > 0 but zero total frequency");
      const double idf = std::log1p(counts.A / static_cast<double>(fw)) / log_scale;
      out.scores[k][w] = static_cast<double>(tf) * idf;
    }
  }
  return out;
}

TopicTopWords top_words_per_language(const TopicWordScores& scores, const Corpus& corpus, std::size_t N,
                                     std::vector<std::string> languages) {
  if (N < 1) fail("N must be >= 1");
  if (languages.empty()) languages = corpus.languages();

  TopicTopWords out;
  out.N = N;
  out.languages = languages;
  const auto& vocab = corpus.vocab();
  for (const auto& table : scores.scores) {
    TopicWords topic;
    topic.words.resize(languages.size());
    topic.shortfall.assign(languages.size(), false);
    for (std::size_t l = 0; l < languages.size(); ++l) {
      std::vector<ScoredWord> cands;
      for (const auto& [w, score] : table) {
        const auto& entry = vocab.entry(w);
        if (entry.lang == languages[l]) cands.push_back({entry.surface, score});
      }
      std::sort(cands.begin(), cands.end(), [](const ScoredWord& a, const ScoredWord& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.word < b.word;
      });
      if (cands.size() > N) cands.resize(N);
      topic.shortfall[l] = cands.size() < N;
      topic.words[l] = std::move(cands);
    }
    out.topics.push_back(std::move(topic));
  }
  return out;
}

nlohmann::json to_json(const TopicTopWords& top) {
  nlohmann::json topics = nlohmann::json::array();
  for (std::size_t k = 0; k < top.topics.size(); ++k) {
    const auto& t = top.topics[k];
    nlohmann::json words = nlohmann::json::object();
    nlohmann::json shortfall = nlohmann::json::object();
    for (std::size_t l = 0; l < top.languages.size(); ++l) {
      nlohmann::json list = nlohmann::json::array();
      for (const auto& w : t.words[l]) list.push_back({{"word", w.word}, {"score", w.score}});
      words[top.languages[l]] = std::move(list);
      shortfall[top.languages[l]] = static_cast<bool>(t.shortfall[l]);
    }
    topics.push_back({{"id", k}, {"top_words", words}, {"shortfall", shortfall}});
  }
  return {{"N", top.N}, {"languages", top.languages}, {"topics", topics}};
}

std::string to_markdown(const TopicTopWords& top) {
  std::ostringstream md;
  md << "| Topic |";
  for (const auto& l : top.languages) md << ' ' << l << " |";
  md << "\n|---|";
  for (std::size_t l = 0; l < top.languages.size(); ++l) md << "---|";
  md << '\n';
  for (std::size_t k = 0; k < top.topics.size(); ++k) {
    md << "| #" << k << " |";
    for (std::size_t l = 0; l < top.languages.size(); ++l) {
      md << ' ';
      const auto& words = top.topics[k].words[l];
      for (std::size_t i = 0; i < words.size(); ++i) md << (i ? ", " : "") << words[i].word;
      if (top.topics[k].shortfall[l]) md << (words.empty() ? "" : " ") << "(" << words.size() << "/" << top.N << ")";
      md << " |";
    }
    md << '\n';
  }
  return md.str();
}

}  // namespace xltm
