#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

// Eigen must come before httplib: <resolv.h> defines a _res macro.
#include "test_util.hpp"
#include "xltm/provider.hpp"

#include <httplib.h>
#include <json.hpp>

using namespace xltm;
using nlohmann::json;

namespace {

/// Local HTTP server on an ephemeral port, stopped on destruction.
class MockServer {
 public:
  explicit MockServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/embed", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/embed"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

/// Vector i for text "t<i> ..." is [i, i+1, ..., i+d-1].
void echo_vectors(const httplib::Request& req, httplib::Response& res, std::size_t d) {
  const auto body = json::parse(req.body);
  json out = json::array();
  for (const auto& t : body["texts"]) {
    const auto s = t.get<std::string>();
    const int i = std::stoi(s.substr(1, s.find(' ') - 1));
    json v = json::array();
    for (std::size_t j = 0; j < d; ++j) v.push_back(i + static_cast<int>(j));
    out.push_back(v);
  }
  res.set_content(json{{"embeddings", out}}.dump(), "application/json");
}

Corpus numbered(int m) {
  std::vector<Document> docs;
  for (int i = 0; i < m; ++i) docs.push_back({"doc" + std::to_string(i), i % 2 ? "zh" : "en", {"t" + std::to_string(i), "x"}});
  return Corpus(docs);
}

ProviderConfig config_for(const MockServer& s) {
  ProviderConfig c;
  c.endpoint = s.endpoint();
  c.model = "mock";
  c.initial_backoff = std::chrono::milliseconds(1);
  c.timeout = std::chrono::milliseconds(5000);
  return c;
}

}  // namespace

TEST_CASE("empty corpus makes no request") {
  ProviderConfig c;
  c.endpoint = "http://127.0.0.1:1/unreachable";
  const auto emb = fetch_embeddings(c, Corpus({}, true));
  CHECK(emb.rows() == 0);
}

TEST_CASE("two vectors of length four in request order") {
  std::atomic<int> calls{0};
  std::string model_seen, first_text;
  MockServer s([&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    const auto body = json::parse(req.body);
    model_seen = body["model"];
    first_text = body["texts"][0];
    echo_vectors(req, res, 4);
  });
  const auto emb = fetch_embeddings(config_for(s), numbered(2));
  CHECK(calls == 1);
  CHECK(model_seen == "mock");
  CHECK(first_text == "t0 x");
  REQUIRE(emb.rows() == 2);
  REQUIRE(emb.dim() == 4);
  CHECK(emb.ids == std::vector<std::string>{"doc0", "doc1"});
  CHECK(emb.data(1, 0) == 1.0);
  CHECK(emb.data(1, 3) == 4.0);
}

TEST_CASE("response count mismatch") {
  MockServer s([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"embeddings":[[1,2,3,4]]})", "application/json");
  });
  CHECK_THROWS_WITH_AS(fetch_embeddings(config_for(s), numbered(2)), doctest::Contains("response count mismatch"), Error);
}

TEST_CASE("inconsistent vector lengths across batches") {
  MockServer s([](const httplib::Request& req, httplib::Response& res) {
    const bool first = json::parse(req.body)["texts"][0] == "t0 x";
    echo_vectors(req, res, first ? 3 : 4);
  });
  auto c = config_for(s);
  c.batch_size = 1;
  CHECK_THROWS_WITH_AS(fetch_embeddings(c, numbered(2)), doctest::Contains("inconsistent vector lengths"), Error);
}

TEST_CASE("transient failures are retried") {
  std::atomic<int> calls{0};
  MockServer s([&](const httplib::Request& req, httplib::Response& res) {
    if (++calls <= 2) {
      res.status = 503;
      return;
    }
    echo_vectors(req, res, 2);
  });
  const auto emb = fetch_embeddings(config_for(s), numbered(3));
  CHECK(calls == 3);
  CHECK(emb.rows() == 3);
}

TEST_CASE("retries are bounded") {
  std::atomic<int> calls{0};
  MockServer s([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 500;
  });
  auto c = config_for(s);
  c.max_retries = 2;
  CHECK_THROWS_WITH_AS(fetch_embeddings(c, numbered(1)), doctest::Contains("failed after 3 attempts"), Error);
  CHECK(calls == 3);
}

TEST_CASE("client errors are not retried") {
  std::atomic<int> calls{0};
  MockServer s([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 400;
  });
  CHECK_THROWS_AS(fetch_embeddings(config_for(s), numbered(1)), Error);
  CHECK(calls == 1);
}

TEST_CASE("batches and concurrency keep corpus order") {
  MockServer s([](const httplib::Request& req, httplib::Response& res) { echo_vectors(req, res, 3); });
  auto c = config_for(s);
  c.batch_size = 3;
  c.concurrency = 4;
  const auto emb = fetch_embeddings(c, numbered(20));
  REQUIRE(emb.rows() == 20);
  for (int i = 0; i < 20; ++i) CHECK(emb.data(i, 0) == i);
}

TEST_CASE("auth token comes from the named environment variable") {
  std::string auth;
  MockServer s([&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    echo_vectors(req, res, 2);
  });
  auto c = config_for(s);
  c.auth_env = "XLTM_TEST_PROVIDER_TOKEN";
  ::unsetenv(c.auth_env.c_str());
  CHECK_THROWS_WITH_AS(fetch_embeddings(c, numbered(1)), doctest::Contains("is not set"), Error);
  ::setenv(c.auth_env.c_str(), "sekrit", 1);
  fetch_embeddings(c, numbered(1));
  CHECK(auth == "Bearer sekrit");
  ::unsetenv(c.auth_env.c_str());
}

TEST_CASE("provider config file") {
  xltm::testing::TempDir dir;
  xltm::testing::write_file(dir / "p.json",
                            R"({"endpoint":"http://localhost:9/e","model":"m","batch_size":8,"max_retries":0,"auth_env":"TOK"})");
  const auto c = load_provider_config(dir / "p.json");
  CHECK(c.batch_size == 8);
  CHECK(c.max_retries == 0);
  CHECK(c.auth_env == "TOK");

  xltm::testing::write_file(dir / "bad.json", R"({"endpoint":"http://x/e","batch_size":0})");
  CHECK_THROWS_WITH_AS(load_provider_config(dir / "bad.json"), doctest::Contains("batch_size"), Error);
  xltm::testing::write_file(dir / "secret.json", R"({"endpoint":"http://x/e","api_key":"abc"})");
  CHECK_THROWS_WITH_AS(load_provider_config(dir / "secret.json"), doctest::Contains("environment variable"), Error);

  ProviderConfig neg;
  neg.endpoint = "http://x/e";
  neg.max_retries = -1;
  CHECK_THROWS_AS(validate(neg), Error);
}

TEST_CASE("document text joins tokens with single spaces") {
  CHECK(document_text({"a", "en", {"x", "y", "z"}}) == "x y z");
}
