#include <doctest.h>

#include <cstring>

#include "oracles.hpp"
#include "test_util.hpp"
#include "xltm/cluster.hpp"
#include "xltm/synth.hpp"

using namespace xltm;

namespace {

double max_abs_t_excluding(const SynthData& data, std::size_t skip, std::size_t* argmax = nullptr) {
  const auto& X = data.embeddings.data;
  double best = 0.0;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (static_cast<std::size_t>(j) == skip) continue;
    std::vector<double> a, b;
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      (data.truth.lang[static_cast<std::size_t>(i)] == data.corpus.languages()[0] ? a : b).push_back(X(i, j));
    const double t = std::abs(oracle::welch_t(a, b));
    if (t > best) {
      best = t;
      if (argmax) *argmax = static_cast<std::size_t>(j);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("default spec shape") {
  const auto data = generate_synthetic(SynthSpec{});
  CHECK(data.corpus.size() == 500);
  CHECK(data.embeddings.rows() == 500);
  CHECK(data.embeddings.dim() == 64);
  CHECK(data.truth.topic.size() == 500);
  CHECK(data.truth.lang.size() == 500);
  CHECK(data.embeddings.ids == data.corpus.ids());
  CHECK(data.corpus.languages() == std::vector<std::string>{"en", "zh"});
  CHECK(data.comparable.pairs.size() == 5 * 40);
  for (std::size_t i = 0; i < data.corpus.size(); ++i) CHECK(data.corpus.document(i).lang == data.truth.lang[i]);
}

TEST_CASE("same seed gives bit-identical output") {
  SynthSpec spec;
  spec.seed = 77;
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  CHECK(std::memcmp(a.embeddings.data.data(), b.embeddings.data.data(),
                    sizeof(double) * static_cast<std::size_t>(a.embeddings.data.size())) == 0);
  CHECK(a.corpus.ids() == b.corpus.ids());
  for (std::size_t i = 0; i < a.corpus.size(); ++i) CHECK(a.corpus.document(i).tokens == b.corpus.document(i).tokens);
  CHECK(a.truth.topic == b.truth.topic);
  spec.seed = 78;
  CHECK(generate_synthetic(spec).embeddings.data != a.embeddings.data);
}

TEST_CASE("no planted offset keeps every |t| below 3") {
  SynthSpec spec;
  spec.ldd_axes = {{0, 0.0}};
  spec.docs_per_topic_lang = 40;  // m = 400
  const auto data = generate_synthetic(spec);
  REQUIRE(data.corpus.size() == 400);
  CHECK(max_abs_t_excluding(data, spec.dim) < 3.0);
}

TEST_CASE("planted axis dominates by a factor of five") {
  const auto data = generate_synthetic(SynthSpec{});
  std::size_t argmax = 99;
  const double planted = max_abs_t_excluding(data, 64, &argmax);
  CHECK(argmax == 0);
  CHECK(planted >= 5.0 * max_abs_t_excluding(data, 0));
}

TEST_CASE("planted topics are recoverable from raw embeddings without an offset") {
  SynthSpec spec;
  spec.ldd_axes = {{0, 0.0}};
  for (std::uint64_t seed : {1, 2, 3}) {
    spec.seed = seed;
    const auto data = generate_synthetic(spec);
    const auto a = kmeans_fit(data.embeddings.data, spec.num_topics, seed);
    CHECK(adjusted_rand_index(a.labels, data.truth.topic) >= 0.95);
  }
}

TEST_CASE("comparable pairs share per-topic vocabulary") {
  const auto data = generate_synthetic(SynthSpec{});
  for (const auto& p : data.comparable.pairs) {
    REQUIRE(!p.l1_tokens.empty());
    REQUIRE(!p.l2_tokens.empty());
    CHECK(p.l1_tokens[0].rfind("en_", 0) == 0);
    CHECK(p.l2_tokens[0].rfind("zh_", 0) == 0);
  }
  REQUIRE(data.comparable.languages.has_value());
  CHECK(data.comparable.languages->first == "en");
}

TEST_CASE("spec validation") {
  SynthSpec s;
  s.num_topics = 1;
  CHECK_THROWS_WITH_AS(validate(s), doctest::Contains("num_topics"), Error);
  s = {};
  s.dim = 1;
  CHECK_THROWS_AS(validate(s), Error);
  s = {};
  s.noise = 0.0;
  CHECK_THROWS_AS(validate(s), Error);
  s = {};
  s.ldd_axes = {{0, -1.0}};
  CHECK_THROWS_AS(validate(s), Error);
  s = {};
  s.languages = {"en", "en"};
  CHECK_THROWS_AS(validate(s), Error);
  s = {};
  s.num_topics = 10;
  s.dim = 2;
  CHECK_THROWS_WITH_AS(generate_synthetic(s), doctest::Contains("64 attempts"), Error);
}

TEST_CASE("spec JSON round trip and written files") {
  SynthSpec s;
  s.num_topics = 3;
  s.docs_per_topic_lang = 4;
  s.dim = 8;
  s.ldd_axes = {{1, 2.5}, {3, 1.0}};
  const auto back = synth_spec_from_json(to_json(s));
  CHECK(back.num_topics == 3);
  CHECK(back.ldd_axes.size() == 2);
  CHECK(back.ldd_axes[1].offset == 1.0);
  CHECK_THROWS_AS(synth_spec_from_json(nlohmann::json{{"num_topics", "x"}}), Error);

  xltm::testing::TempDir dir;
  const auto data = generate_synthetic(s);
  write_synthetic(dir.path(), data);
  const auto corpus = load_corpus(dir / "corpus.jsonl");
  const auto emb = load_embeddings(dir / "embeddings.emb1");
  CHECK(corpus.ids() == data.corpus.ids());
  CHECK(emb.rows() == 24);
  CHECK(load_comparable_pairs(dir / "comparable.jsonl").size() == data.comparable.size());
  const auto truth = nlohmann::json::parse(xltm::testing::read_file(dir / "truth.json"));
  CHECK(truth["topic"].size() == 24);
  CHECK(truth["lang"].size() == 24);
  CHECK(truth["ldd_axes"].size() == 2);
}
