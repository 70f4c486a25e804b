#include "xltm/provider.hpp"

#include <cstdlib>
#include <fstream>
#include <future>
#include <optional>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace xltm {
namespace {

constexpr std::string_view kModule = "corpus-io";

[[noreturn]] void fail(const std::string& message) { throw Error(kModule, message); }

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) fail("endpoint '" + url + "' has no scheme");
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") fail("unsupported endpoint scheme '" + scheme + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool transient(int status) { return status == 408 || status == 429 || status >= 500; }

using Batch = std::vector<std::vector<double>>;

Batch post_batch(const ProviderConfig& config, const Endpoint& endpoint,
                 const std::optional<std::string>& token, const std::vector<std::string>& texts,
                 std::size_t first_doc) {
  const nlohmann::json body = {{"texts", texts}, {"model", config.model}};
  const std::string payload = body.dump();
  httplib::Headers headers;
  if (token) headers.emplace("Authorization", "Bearer " + *token);

  auto backoff = config.initial_backoff;
  std::string last_error;
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    httplib::Client client(endpoint.base);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    auto res = client.Post(endpoint.path, headers, payload, "application/json");
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      if (transient(res->status)) continue;
      fail("batch at document " + std::to_string(first_doc) + ": " + last_error);
    }

    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
      fail("batch at document " + std::to_string(first_doc) + ": malformed response (" + e.what() + ")");
    }
    if (!reply.is_object() || !reply.contains("embeddings") || !reply["embeddings"].is_array())
      fail("batch at document " + std::to_string(first_doc) + ": response lacks 'embeddings'");
    const auto& vectors = reply["embeddings"];
    if (vectors.size() != texts.size())
      fail("response count mismatch: sent " + std::to_string(texts.size()) + " texts, got " +
           std::to_string(vectors.size()) + " embeddings");
    Batch out;
    out.reserve(vectors.size());
    for (const auto& v : vectors) {
      if (!v.is_array()) fail("embedding entries must be arrays");
      std::vector<double> row;
      row.reserve(v.size());
      for (const auto& x : v) {
        if (!x.is_number()) fail("embedding values must be numbers");
        row.push_back(x.get<double>());
      }
      out.push_back(std::move(row));
    }
    return out;
  }
  fail("batch at document " + std::to_string(first_doc) + " failed after " +
       std::to_string(config.max_retries + 1) + " attempts: " + last_error);
}

}  // namespace

void validate(const ProviderConfig& config) {
  if (config.endpoint.empty()) fail("provider endpoint is empty");
  if (config.batch_size < 1) fail("provider batch_size must be >= 1");
  if (config.max_retries < 0) fail("provider max_retries must be >= 0");
  if (config.concurrency < 1) fail("provider concurrency must be >= 1");
  split_endpoint(config.endpoint);
}

ProviderConfig load_provider_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open provider config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail("malformed provider config (" + std::string(e.what()) + ")");
  }
  ProviderConfig c;
  try {
    c.endpoint = j.at("endpoint").get<std::string>();
    c.model = j.value("model", std::string{});
    const auto batch = j.value("batch_size", std::int64_t{96});
    if (batch < 1) fail("provider batch_size must be >= 1");
    c.batch_size = static_cast<std::size_t>(batch);
    c.max_retries = j.value("max_retries", 3);
    c.timeout = std::chrono::milliseconds(j.value("timeout_ms", 30000));
    c.initial_backoff = std::chrono::milliseconds(j.value("backoff_ms", 500));
    c.auth_env = j.value("auth_env", std::string{});
    const auto conc = j.value("concurrency", std::int64_t{1});
    if (conc < 1) fail("provider concurrency must be >= 1");
    c.concurrency = static_cast<std::size_t>(conc);
  } catch (const nlohmann::json::exception& e) {
    fail("invalid provider config (" + std::string(e.what()) + ")");
  }
  if (j.contains("token") || j.contains("api_key"))
    fail("provider config must name an environment variable (auth_env), not hold the secret");
  validate(c);
  return c;
}

std::string document_text(const Document& doc) {
  std::string text;
  for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
    if (i) text.push_back(' ');
    text += doc.tokens[i];
  }
  return text;
}

EmbeddingMatrix fetch_embeddings(const ProviderConfig& config, const Corpus& corpus) {
  EmbeddingMatrix emb;
  if (corpus.size() == 0) return emb;
  validate(config);
  const Endpoint endpoint = split_endpoint(config.endpoint);

  std::optional<std::string> token;
  if (!config.auth_env.empty()) {
    const char* value = std::getenv(config.auth_env.c_str());
    if (value == nullptr) fail("environment variable " + config.auth_env + " is not set");
    token = value;
  }

  const std::size_t n = corpus.size();
  const std::size_t batches = (n + config.batch_size - 1) / config.batch_size;
  std::vector<Batch> results(batches);

  auto run = [&](std::size_t b) {
    const std::size_t begin = b * config.batch_size;
    const std::size_t end = std::min(n, begin + config.batch_size);
    std::vector<std::string> texts;
    texts.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) texts.push_back(document_text(corpus.document(i)));
    results[b] = post_batch(config, endpoint, token, texts, begin);
  };

  for (std::size_t wave = 0; wave < batches; wave += config.concurrency) {
    const std::size_t wave_end = std::min(batches, wave + config.concurrency);
    if (wave_end - wave == 1) {
      run(wave);
      continue;
    }
    std::vector<std::future<void>> inflight;
    for (std::size_t b = wave; b < wave_end; ++b)
      inflight.push_back(std::async(std::launch::async, run, b));
    // get() on every future so no thread outlives the wave; rethrow the first error.
    std::exception_ptr first;
    for (auto& f : inflight) {
      try {
        f.get();
      } catch (...) {
        if (!first) first = std::current_exception();
      }
    }
    if (first) std::rethrow_exception(first);
  }

  const std::size_t d = results.front().front().size();
  emb.ids = corpus.ids();
  emb.data.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::size_t row = 0;
  for (const auto& batch : results) {
    for (const auto& v : batch) {
      if (v.size() != d)
        fail("inconsistent vector lengths: document " + std::to_string(row) + " has " +
             std::to_string(v.size()) + ", expected " + std::to_string(d));
      for (std::size_t j = 0; j < d; ++j)
        emb.data(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) = v[j];
      ++row;
    }
  }
  validate(emb);
  return emb;
}

}  // namespace xltm
