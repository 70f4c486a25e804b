#include "xltm/synth.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace xltm {
namespace {

constexpr std::string_view kModule = "synth";
constexpr int kCenterAttempts = 64;

[[noreturn]] void fail(const std::string& message) { throw Error(kModule, message); }

enum Stream : std::uint64_t { kCenters = 1, kNoise = 2, kTokens = 3, kShuffle = 4, kPairs = 5 };

Matrix draw_centers(const SynthSpec& spec, Rng& rng) {
  const auto G = static_cast<Eigen::Index>(spec.num_topics);
  const auto d = static_cast<Eigen::Index>(spec.dim);
  Matrix centers(G, d);
  for (int attempt = 0; attempt < kCenterAttempts; ++attempt) {
    for (Eigen::Index g = 0; g < G; ++g) {
      for (Eigen::Index j = 0; j < d; ++j) centers(g, j) = rng.normal();
      const double norm = centers.row(g).norm();
      if (norm > 0.0) centers.row(g) *= spec.separation / norm;
    }
    bool ok = true;
    for (Eigen::Index a = 0; a < G && ok; ++a)
      for (Eigen::Index b = a + 1; b < G && ok; ++b)
        ok = (centers.row(a) - centers.row(b)).norm() >= spec.separation;
    if (ok) return centers;
  }
  fail("could not place " + std::to_string(spec.num_topics) + " centers at separation " +
       std::to_string(spec.separation) + " in " + std::to_string(spec.dim) + " dimensions after " +
       std::to_string(kCenterAttempts) + " attempts");
}

std::string topic_word(const std::string& lang, std::size_t topic, std::size_t j) {
  return lang + "_t" + std::to_string(topic) + "_w" + std::to_string(j);
}

std::string background_word(const std::string& lang, std::size_t j) {
  return lang + "_bg" + std::to_string(j);
}

// Zipf-weighted draw over n items.
std::size_t zipf(std::size_t n, const std::vector<double>& cumulative, Rng& rng) {
  const double u = rng.uniform() * cumulative[n - 1];
  std::size_t lo = 0, hi = n - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (cumulative[mid] > u)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

std::vector<double> zipf_cumulative(std::size_t n) {
  std::vector<double> c(n);
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    acc += 1.0 / static_cast<double>(j + 1);
    c[j] = acc;
  }
  return c;
}

struct TokenSampler {
  const SynthSpec& spec;
  std::vector<double> topic_cdf = zipf_cumulative(spec.words_per_topic);
  std::vector<double> bg_cdf = zipf_cumulative(std::max<std::size_t>(spec.background_words, 1));

  std::vector<std::string> draw(std::size_t topic, const std::string& lang, Rng& rng) const {
    std::vector<std::string> tokens;
    tokens.reserve(spec.doc_length);
    for (std::size_t t = 0; t < spec.doc_length; ++t) {
      if (spec.background_words > 0 && rng.uniform() < spec.background_rate)
        tokens.push_back(background_word(lang, zipf(spec.background_words, bg_cdf, rng)));
      else
        tokens.push_back(topic_word(lang, topic, zipf(spec.words_per_topic, topic_cdf, rng)));
    }
    return tokens;
  }
};

}  // namespace

void validate(const SynthSpec& spec) {
  if (spec.num_topics < 2) fail("num_topics must be >= 2");
  if (spec.docs_per_topic_lang < 2) fail("docs_per_topic_lang must be >= 2");
  if (spec.dim <= spec.ldd_axes.size())
    fail("dim=" + std::to_string(spec.dim) + " must exceed the number of ldd axes (" +
         std::to_string(spec.ldd_axes.size()) + ")");
  std::set<std::size_t> axes;
  for (const auto& a : spec.ldd_axes) {
    if (a.axis >= spec.dim) fail("ldd axis " + std::to_string(a.axis) + " outside dim " + std::to_string(spec.dim));
    if (!axes.insert(a.axis).second) fail("ldd axis " + std::to_string(a.axis) + " listed twice");
    if (!(a.offset >= 0.0)) fail("ldd offset must be >= 0");
  }
  if (!(spec.noise > 0.0)) fail("noise must be > 0");
  if (!(spec.separation > 0.0)) fail("separation must be > 0");
  if (spec.languages.size() != 2 || spec.languages[0] == spec.languages[1] || spec.languages[0].empty() ||
      spec.languages[1].empty())
    fail("exactly two distinct non-empty languages are required");
  if (spec.words_per_topic < 1) fail("words_per_topic must be >= 1");
  if (spec.doc_length < 1) fail("doc_length must be >= 1");
  if (spec.pairs_per_topic < 1) fail("pairs_per_topic must be >= 1");
  if (!(spec.background_rate >= 0.0 && spec.background_rate <= 1.0)) fail("background_rate must be in [0, 1]");
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec s;
  try {
    s.num_topics = j.value("num_topics", s.num_topics);
    s.docs_per_topic_lang = j.value("docs_per_topic_lang", s.docs_per_topic_lang);
    s.dim = j.value("dim", s.dim);
    s.separation = j.value("separation", s.separation);
    s.noise = j.value("noise", s.noise);
    if (j.contains("ldd_axes")) {
      s.ldd_axes.clear();
      for (const auto& a : j.at("ldd_axes"))
        s.ldd_axes.push_back({a.at("axis").get<std::size_t>(), a.at("offset").get<double>()});
    }
    s.languages = j.value("languages", s.languages);
    s.words_per_topic = j.value("words_per_topic", s.words_per_topic);
    s.background_words = j.value("background_words", s.background_words);
    s.background_rate = j.value("background_rate", s.background_rate);
    s.doc_length = j.value("doc_length", s.doc_length);
    s.pairs_per_topic = j.value("pairs_per_topic", s.pairs_per_topic);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("invalid synthetic spec (") + e.what() + ")");
  }
  validate(s);
  return s;
}

nlohmann::json to_json(const SynthSpec& s) {
  nlohmann::json axes = nlohmann::json::array();
  for (const auto& a : s.ldd_axes) axes.push_back({{"axis", a.axis}, {"offset", a.offset}});
  return {{"num_topics", s.num_topics},
          {"docs_per_topic_lang", s.docs_per_topic_lang},
          {"dim", s.dim},
          {"separation", s.separation},
          {"noise", s.noise},
          {"ldd_axes", axes},
          {"languages", s.languages},
          {"words_per_topic", s.words_per_topic},
          {"background_words", s.background_words},
          {"background_rate", s.background_rate},
          {"doc_length", s.doc_length},
          {"pairs_per_topic", s.pairs_per_topic},
          {"seed", s.seed}};
}

SynthData generate_synthetic(const SynthSpec& spec) {
  validate(spec);
  Rng center_rng(derive_seed(spec.seed, kCenters));
  Rng noise_rng(derive_seed(spec.seed, kNoise));
  Rng token_rng(derive_seed(spec.seed, kTokens));
  Rng shuffle_rng(derive_seed(spec.seed, kShuffle));
  Rng pair_rng(derive_seed(spec.seed, kPairs));

  const Matrix centers = draw_centers(spec, center_rng);
  const std::size_t m = spec.num_topics * 2 * spec.docs_per_topic_lang;

  // Fisher-Yates over (topic, language, replicate) slots.
  std::vector<std::size_t> slot(m);
  for (std::size_t i = 0; i < m; ++i) slot[i] = i;
  for (std::size_t i = m - 1; i > 0; --i) std::swap(slot[i], slot[shuffle_rng.below(i + 1)]);

  const TokenSampler sampler{spec};
  const auto d = static_cast<Eigen::Index>(spec.dim);
  std::vector<Document> docs;
  docs.reserve(m);
  SynthData out;
  out.embeddings.data.resize(static_cast<Eigen::Index>(m), d);
  out.embeddings.ids.reserve(m);
  const int width = static_cast<int>(std::to_string(m - 1).size());
  for (std::size_t row = 0; row < m; ++row) {
    const std::size_t s = slot[row];
    const std::size_t topic = s / (2 * spec.docs_per_topic_lang);
    const std::size_t lang = (s / spec.docs_per_topic_lang) % 2;
    std::string id = std::to_string(row);
    id = "doc" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id;

    auto e = out.embeddings.data.row(static_cast<Eigen::Index>(row));
    for (Eigen::Index j = 0; j < d; ++j) e(j) = centers(static_cast<Eigen::Index>(topic), j) + spec.noise * noise_rng.normal();
    const double sign = lang == 0 ? 1.0 : -1.0;
    for (const auto& a : spec.ldd_axes) e(static_cast<Eigen::Index>(a.axis)) += sign * a.offset;

    docs.push_back({id, spec.languages[lang], sampler.draw(topic, spec.languages[lang], token_rng)});
    out.embeddings.ids.push_back(id);
    out.truth.topic.push_back(static_cast<int>(topic));
    out.truth.lang.push_back(spec.languages[lang]);
  }
  out.truth.ldd_axes = spec.ldd_axes;
  out.corpus = Corpus(std::move(docs));

  out.comparable.languages = std::make_pair(spec.languages[0], spec.languages[1]);
  for (std::size_t g = 0; g < spec.num_topics; ++g)
    for (std::size_t p = 0; p < spec.pairs_per_topic; ++p)
      out.comparable.pairs.push_back(
          {sampler.draw(g, spec.languages[0], pair_rng), sampler.draw(g, spec.languages[1], pair_rng)});
  return out;
}

nlohmann::json to_json(const SynthTruth& truth) {
  nlohmann::json axes = nlohmann::json::array();
  for (const auto& a : truth.ldd_axes) axes.push_back({{"axis", a.axis}, {"offset", a.offset}});
  return {{"topic", truth.topic}, {"lang", truth.lang}, {"ldd_axes", axes}};
}

void write_synthetic(const std::filesystem::path& dir, const SynthData& data) {
  std::filesystem::create_directories(dir);
  write_corpus(dir / "corpus.jsonl", data.corpus);
  write_embeddings(dir / "embeddings.emb1", data.embeddings);
  write_comparable_pairs(dir / "comparable.jsonl", data.comparable);
  std::ofstream truth(dir / "truth.json");
  if (!truth) fail("cannot write " + (dir / "truth.json").string());
  truth << to_json(data.truth).dump(2) << '\n';
}

}  // namespace xltm
