#include "xltm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace xltm {
namespace {

constexpr std::string_view kModule = "eval";

[[noreturn]] void fail(const std::string& message) { throw Error(kModule, message); }

template <typename Map>
std::size_t lookup(const Map& map, const typename Map::key_type& key) {
  auto it = map.find(key);
  return it == map.end() ? 0 : it->second;
}

std::vector<std::string> present(const std::vector<std::string>& tokens, const std::set<std::string>& vocab) {
  std::unordered_set<std::string> seen;
  std::vector<std::string> out;
  for (const auto& t : tokens)
    if (vocab.contains(t) && seen.insert(t).second) out.push_back(t);
  return out;
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  const double n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

bool same_config(const EvalConfig& a, const EvalConfig& b) {
  return a.method == b.method && a.r == b.r && a.K == b.K && a.N == b.N;
}

}  // namespace

QueryVocab query_vocab(const TopicTopWords& top) {
  if (top.languages.size() != 2) fail("topic words must cover exactly 2 languages");
  QueryVocab q;
  for (const auto& t : top.topics) {
    for (const auto& w : t.words[0]) q.l1.insert(w.word);
    for (const auto& w : t.words[1]) q.l2.insert(w.word);
  }
  return q;
}

std::size_t CooccurrenceModel::df1(const std::string& w) const { return lookup(df_l1, w); }
std::size_t CooccurrenceModel::df2(const std::string& w) const { return lookup(df_l2, w); }
std::size_t CooccurrenceModel::joint_count(const std::string& w1, const std::string& w2) const {
  return lookup(joint, {w1, w2});
}

CooccurrenceModel build_cooccurrence(const ComparableCorpus& cc, const QueryVocab& vocab) {
  if (cc.pairs.empty()) fail("empty comparable corpus");
  if (vocab.l1.empty() && vocab.l2.empty()) fail("empty query vocabulary");
  CooccurrenceModel model;
  model.M = cc.pairs.size();
  for (const auto& pair : cc.pairs) {
    const auto side1 = present(pair.l1_tokens, vocab.l1);
    const auto side2 = present(pair.l2_tokens, vocab.l2);
    for (const auto& w : side1) ++model.df_l1[w];
    for (const auto& w : side2) ++model.df_l2[w];
    for (const auto& a : side1)
      for (const auto& b : side2) ++model.joint[{a, b}];
  }
  return model;
}

double npmi(std::size_t joint, std::size_t df1, std::size_t df2, std::size_t M) {
  if (joint == 0 || df1 == 0 || df2 == 0) return -1.0;
  if (joint == df1 && joint == df2) return 1.0;
  const double pij = static_cast<double>(joint) / static_cast<double>(M);
  // Ratio from integer products so exact independence gives log(1) = 0.
  const double ratio = (static_cast<double>(joint) * static_cast<double>(M)) /
                       (static_cast<double>(df1) * static_cast<double>(df2));
  return std::clamp(std::log(ratio) / -std::log(pij), -1.0, 1.0);
}

CnpmiResult topic_cnpmi(const TopicTopWords& top, const CooccurrenceModel& model) {
  if (top.languages.size() != 2) fail("topic words must cover exactly 2 languages");
  if (model.M == 0) fail("co-occurrence model is empty");
  if (top.topics.empty()) fail("no topics to score");
  CnpmiResult out;
  out.per_topic.reserve(top.topics.size());
  for (std::size_t k = 0; k < top.topics.size(); ++k) {
    const auto& w1 = top.topics[k].words[0];
    const auto& w2 = top.topics[k].words[1];
    if (w1.empty() || w2.empty()) {
      out.per_topic.push_back(-1.0);
      out.flagged_topics.push_back(k);
      continue;
    }
    double sum = 0.0;
    for (const auto& a : w1) {
      const std::size_t d1 = model.df1(a.word);
      for (const auto& b : w2) sum += npmi(model.joint_count(a.word, b.word), d1, model.df2(b.word), model.M);
    }
    out.per_topic.push_back(sum / static_cast<double>(w1.size() * w2.size()));
  }
  out.mean = summarize(out.per_topic).mean;
  return out;
}

DiversityResult topic_diversity(const TopicTopWords& top) {
  if (top.languages.size() != 2) fail("topic words must cover exactly 2 languages");
  if (top.topics.empty()) fail("no topics to score");
  if (top.N < 1) fail("N must be >= 1");
  DiversityResult out;
  std::set<std::string> unique[2];
  for (const auto& t : top.topics) {
    for (std::size_t l = 0; l < 2; ++l) {
      for (const auto& w : t.words[l]) unique[l].insert(w.word);
      if (t.words[l].size() < top.N) out.shortfall = true;
    }
  }
  out.value = static_cast<double>(unique[0].size() + unique[1].size()) /
              static_cast<double>(top.topics.size() * 2 * top.N);
  return out;
}

double topic_quality(double mean_cnpmi, double diversity) { return std::max(0.0, mean_cnpmi) * diversity; }

EvalReport evaluate_topics(const TopicTopWords& top, const CooccurrenceModel& model, EvalConfig config,
                           std::uint64_t seed) {
  const CnpmiResult cnpmi = topic_cnpmi(top, model);
  const DiversityResult div = topic_diversity(top);
  SeedRecord rec;
  rec.seed = seed;
  rec.cnpmi_mean = cnpmi.mean;
  rec.cnpmi_per_topic = cnpmi.per_topic;
  rec.diversity = div.value;
  rec.tq = topic_quality(cnpmi.mean, div.value);
  rec.flagged_topics = cnpmi.flagged_topics;
  rec.diversity_shortfall = div.shortfall;

  EvalReport report;
  config.seeds = {seed};
  report.config = std::move(config);
  report.per_seed.push_back(std::move(rec));
  return aggregate_runs({report});
}

EvalReport aggregate_runs(const std::vector<EvalReport>& reports) {
  if (reports.empty()) fail("no reports to aggregate");
  EvalReport out;
  out.config = reports.front().config;
  out.config.seeds.clear();
  for (const auto& r : reports) {
    if (!same_config(r.config, out.config))
      fail("mixed configs: " + r.config.method + "/r=" + std::to_string(r.config.r) + " vs " +
           out.config.method + "/r=" + std::to_string(out.config.r));
    for (const auto& rec : r.per_seed) {
      out.per_seed.push_back(rec);
      out.config.seeds.push_back(rec.seed);
    }
  }
  std::vector<double> c, d, q;
  for (const auto& rec : out.per_seed) {
    c.push_back(rec.cnpmi_mean);
    d.push_back(rec.diversity);
    q.push_back(rec.tq);
  }
  out.cnpmi = summarize(c);
  out.diversity = summarize(d);
  out.tq = summarize(q);
  out.std_undefined = out.per_seed.size() < 2;
  return out;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json per_seed = nlohmann::json::array();
  for (const auto& rec : report.per_seed)
    per_seed.push_back({{"seed", rec.seed},
                        {"cnpmi_mean", rec.cnpmi_mean},
                        {"cnpmi_per_topic", rec.cnpmi_per_topic},
                        {"diversity", rec.diversity},
                        {"tq", rec.tq},
                        {"flagged_topics", rec.flagged_topics},
                        {"diversity_shortfall", rec.diversity_shortfall}});
  auto summary = [](const MetricSummary& s) { return nlohmann::json{{"mean", s.mean}, {"std", s.std}}; };
  return {{"config",
           {{"method", report.config.method},
            {"r", report.config.r},
            {"K", report.config.K},
            {"N", report.config.N},
            {"seeds", report.config.seeds}}},
          {"per_seed", per_seed},
          {"aggregate", {{"cnpmi", summary(report.cnpmi)}, {"diversity", summary(report.diversity)}, {"tq", summary(report.tq)}}},
          {"std_undefined", report.std_undefined}};
}

}  // namespace xltm
