#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "xltm/corpus_io.hpp"

namespace xltm {

/// Remote embedding provider. The auth token is never stored: `auth_env`
/// names the environment variable holding it.
struct ProviderConfig {
  std::string endpoint;  ///< e.g. "https://api.example.com/v1/embed"
  std::string model;
  std::size_t batch_size = 96;
  int max_retries = 3;
  std::chrono::milliseconds timeout{30000};
  std::chrono::milliseconds initial_backoff{500};
  std::string auth_env;
  /// Batches in flight at once. Output order never depends on it.
  std::size_t concurrency = 1;
};

void validate(const ProviderConfig& config);
ProviderConfig load_provider_config(const std::filesystem::path& path);

/// Text sent for a document: tokens joined by single spaces.
std::string document_text(const Document& doc);

/// POSTs {"texts":[...],"model":...} per batch and expects
/// {"embeddings":[[...],...]}. Retries connection errors, 408, 429 and 5xx
/// with exponential backoff; other statuses fail immediately.
EmbeddingMatrix fetch_embeddings(const ProviderConfig& config, const Corpus& corpus);

}  // namespace xltm
