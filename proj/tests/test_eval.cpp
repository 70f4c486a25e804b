#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "xltm/eval.hpp"

using namespace xltm;

namespace {

using WordLists = std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>;

TopicTopWords make_top(const WordLists& lists, std::size_t N) {
  TopicTopWords top;
  top.N = N;
  top.languages = {"en", "zh"};
  for (const auto& [a, b] : lists) {
    TopicWords t;
    t.words.resize(2);
    for (const auto& w : a) t.words[0].push_back({w, 1.0});
    for (const auto& w : b) t.words[1].push_back({w, 1.0});
    t.shortfall = {a.size() < N, b.size() < N};
    top.topics.push_back(std::move(t));
  }
  return top;
}

ComparableCorpus make_cc(const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>& pairs) {
  ComparableCorpus cc;
  for (const auto& [a, b] : pairs) cc.pairs.push_back({a, b});
  return cc;
}

EvalReport report_with(double cnpmi, double div, std::uint64_t seed, const std::string& method = "usvd") {
  EvalReport r;
  r.config = {method, 100, 50, 15, {seed}};
  r.per_seed.push_back({seed, cnpmi, {cnpmi}, div, topic_quality(cnpmi, div), {}, false});
  return r;
}

}  // namespace

TEST_CASE("co-occurrence worked example") {
  const auto cc = make_cc({{{"wi"}, {"wj"}}, {{"wi"}, {"x"}}, {{"y"}, {"wj"}}, {{"y"}, {"x"}}});
  const auto model = build_cooccurrence(cc, {{"wi", "absent"}, {"wj"}});
  CHECK(model.M == 4);
  CHECK(model.pr_l1("wi") == 0.5);
  CHECK(model.pr_l2("wj") == 0.5);
  CHECK(model.pr_joint("wi", "wj") == 0.25);
  CHECK(model.df1("absent") == 0);
  CHECK(npmi(model.joint_count("wi", "wj"), model.df1("wi"), model.df2("wj"), model.M) == 0.0);
}

TEST_CASE("presence counting ignores repeats") {
  const auto cc = make_cc({{{"w", "w", "w", "w", "w"}, {"v"}}, {{"u"}, {"v", "v"}}});
  const auto model = build_cooccurrence(cc, {{"w"}, {"v"}});
  CHECK(model.df1("w") == 1);
  CHECK(model.df2("v") == 2);
  CHECK(model.joint_count("w", "v") == 1);
}

TEST_CASE("analytic NPMI cases") {
  CHECK(npmi(2, 2, 2, 4) == 1.0);
  CHECK(npmi(1, 2, 2, 4) == 0.0);
  CHECK(npmi(0, 2, 2, 4) == -1.0);
  CHECK(npmi(0, 0, 2, 4) == -1.0);
  CHECK(npmi(0, 2, 0, 4) == -1.0);
}

TEST_CASE("cooccurrence invariants and oracle agreement on small corpora") {
  std::mt19937_64 gen(71);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t M = 1 + gen() % 20;
    std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> pairs;
    for (std::size_t p = 0; p < M; ++p) {
      std::vector<std::string> a, b;
      for (std::size_t t = 0, n = gen() % 6; t < n; ++t) a.push_back("a" + std::to_string(gen() % 15));
      for (std::size_t t = 0, n = gen() % 6; t < n; ++t) b.push_back("b" + std::to_string(gen() % 15));
      pairs.emplace_back(a, b);
    }
    WordLists lists;
    const std::size_t K = 1 + gen() % 4, N = 1 + gen() % 4;
    for (std::size_t k = 0; k < K; ++k) {
      std::vector<std::string> a, b;
      std::set<std::string> sa, sb;
      while (sa.size() < N) sa.insert("a" + std::to_string(gen() % 15));
      while (sb.size() < N) sb.insert("b" + std::to_string(gen() % 15));
      lists.emplace_back(std::vector<std::string>(sa.begin(), sa.end()), std::vector<std::string>(sb.begin(), sb.end()));
    }
    const auto top = make_top(lists, N);
    const auto model = build_cooccurrence(make_cc(pairs), query_vocab(top));
    for (const auto& [key, j] : model.joint) {
      CHECK(j <= std::min(model.df1(key.first), model.df2(key.second)));
      CHECK(model.df1(key.first) <= M);
    }
    const auto res = topic_cnpmi(top, model);
    double mean = 0;
    for (std::size_t k = 0; k < K; ++k) {
      double s = 0;
      for (const auto& w1 : lists[k].first)
        for (const auto& w2 : lists[k].second) s += oracle::npmi_scan(w1, w2, pairs);
      s /= static_cast<double>(N * N);
      CHECK(std::abs(res.per_topic[k] - s) <= 1e-12);
      mean += s;
    }
    CHECK(std::abs(res.mean - mean / static_cast<double>(K)) <= 1e-12);
  }
}

TEST_CASE("empty-list topic scores -1 and is flagged") {
  const auto top = make_top({{{"a"}, {"b"}}, {{"a"}, {}}}, 1);
  const auto model = build_cooccurrence(make_cc({{{"a"}, {"b"}}, {{"c"}, {"d"}}}), query_vocab(top));
  const auto res = topic_cnpmi(top, model);
  CHECK(res.per_topic[0] == 1.0);
  CHECK(res.per_topic[1] == -1.0);
  CHECK(res.flagged_topics == std::vector<std::size_t>{1});
  CHECK(res.mean == 0.0);
}

TEST_CASE("shortfall topics average over the available pairs") {
  const auto top = make_top({{{"a", "c"}, {"b"}}}, 2);
  const auto cc = make_cc({{{"a"}, {"b"}}, {{"c"}, {"d"}}});
  const auto res = topic_cnpmi(top, build_cooccurrence(cc, query_vocab(top)));
  CHECK(res.per_topic[0] == doctest::Approx((1.0 + -1.0) / 2.0));
}

TEST_CASE("diversity examples") {
  CHECK(topic_diversity(make_top({{{"a", "b"}, {"x", "y"}}, {{"a", "c"}, {"x", "y"}}}, 2)).value == 0.625);
  WordLists same(50, {{"a", "b"}, {"x", "y"}});
  CHECK(topic_diversity(make_top(same, 2)).value == doctest::Approx(0.02));
  CHECK(topic_diversity(make_top({{{"a", "b"}, {"x", "y"}}, {{"c", "d"}, {"z", "w"}}}, 2)).value == 1.0);
  const auto shortfall = topic_diversity(make_top({{{"a"}, {"x", "y"}}}, 2));
  CHECK(shortfall.value == 0.75);
  CHECK(shortfall.shortfall);
}

TEST_CASE("topic quality") {
  CHECK(std::abs(topic_quality(-0.244, 0.570) - 0.000) <= 0.0005);
  CHECK(std::abs(topic_quality(0.171, 0.603) - 0.103) <= 0.0005);
  CHECK(topic_quality(0.0, 1.0) == 0.0);
}

TEST_CASE("metric bounds on fuzzed inputs") {
  std::mt19937_64 gen(73);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> pairs;
    for (std::size_t p = 0, M = 1 + gen() % 10; p < M; ++p) {
      std::vector<std::string> a, b;
      for (std::size_t t = 0, n = gen() % 5; t < n; ++t) a.push_back(std::to_string(gen() % 8));
      for (std::size_t t = 0, n = gen() % 5; t < n; ++t) b.push_back(std::to_string(gen() % 8));
      pairs.emplace_back(a, b);
    }
    WordLists lists;
    const std::size_t N = 1 + gen() % 3;
    for (std::size_t k = 0, K = 1 + gen() % 4; k < K; ++k) {
      std::vector<std::string> a, b;
      for (std::size_t t = 0, n = gen() % (N + 1); t < n; ++t) a.push_back(std::to_string(gen() % 8));
      for (std::size_t t = 0, n = gen() % (N + 1); t < n; ++t) b.push_back(std::to_string(gen() % 8));
      lists.emplace_back(a, b);
    }
    const auto top = make_top(lists, N);
    const auto q = query_vocab(top);
    if (q.l1.empty() && q.l2.empty()) continue;
    const auto res = topic_cnpmi(top, build_cooccurrence(make_cc(pairs), q));
    for (double v : res.per_topic) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
    const double div = topic_diversity(top).value;
    CHECK(div >= 0.0);
    CHECK(div <= 1.0);
    const double tq = topic_quality(res.mean, div);
    if (res.mean <= 0) CHECK(tq == 0.0);
  }
}

TEST_CASE("aggregate_runs") {
  SUBCASE("identical reports") {
    std::vector<EvalReport> r;
    for (std::uint64_t s = 1; s <= 5; ++s) r.push_back(report_with(0.3, 0.5, s));
    const auto agg = aggregate_runs(r);
    CHECK(agg.cnpmi.mean == doctest::Approx(0.3));
    CHECK(agg.cnpmi.std == doctest::Approx(0.0));
    CHECK(agg.per_seed.size() == 5);
    CHECK(agg.config.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
    CHECK(!agg.std_undefined);
  }
  SUBCASE("two values") {
    const auto agg = aggregate_runs({report_with(0.1, 0.5, 1), report_with(0.2, 0.5, 2)});
    CHECK(agg.cnpmi.mean == doctest::Approx(0.15));
    CHECK(agg.cnpmi.std == doctest::Approx(0.070711).epsilon(1e-5));
  }
  SUBCASE("single report") {
    const auto agg = aggregate_runs({report_with(0.4, 0.5, 9)});
    CHECK(agg.cnpmi.mean == 0.4);
    CHECK(agg.cnpmi.std == 0.0);
    CHECK(agg.std_undefined);
  }
  SUBCASE("mixed configs") {
    CHECK_THROWS_WITH_AS(aggregate_runs({report_with(0.1, 0.5, 1), report_with(0.1, 0.5, 2, "svd")}),
                         doctest::Contains("mixed configs"), Error);
  }
}

TEST_CASE("eval report JSON shape") {
  const auto top = make_top({{{"a"}, {"b"}}}, 1);
  const auto model = build_cooccurrence(make_cc({{{"a"}, {"b"}}}), query_vocab(top));
  const auto rep = evaluate_topics(top, model, {"usvd", 16, 1, 1, {}}, 3);
  const auto j = to_json(rep);
  CHECK(j["config"]["method"] == "usvd");
  CHECK(j["config"]["seeds"] == nlohmann::json::array({3}));
  CHECK(j["per_seed"][0]["seed"] == 3);
  CHECK(j["aggregate"]["tq"].contains("std"));
  CHECK(rep.per_seed[0].tq == doctest::Approx(1.0));
}

TEST_CASE("eval errors") {
  CHECK_THROWS_WITH_AS(build_cooccurrence(ComparableCorpus{}, {{"a"}, {}}), doctest::Contains("empty"), Error);
  CHECK_THROWS_AS(aggregate_runs({}), Error);
}
