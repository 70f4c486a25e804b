#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xltm/common.hpp"

namespace xltm {

struct Document {
  std::string id;
  std::string lang;
  std::vector<std::string> tokens;
};

/// (surface, language) vocabulary key. The same surface in two languages is
/// two entries.
struct VocabEntry {
  std::string surface;
  std::string lang;

  auto operator<=>(const VocabEntry&) const = default;
};

class Vocabulary {
 public:
  /// Returns the id of `entry`, inserting it if new.
  int add(const VocabEntry& entry);
  std::optional<int> find(const VocabEntry& entry) const;
  const VocabEntry& entry(int id) const { return entries_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return entries_.size(); }
  const std::vector<VocabEntry>& entries() const { return entries_; }

 private:
  std::map<VocabEntry, int> index_;
  std::vector<VocabEntry> entries_;
};

/// Tokenized documents plus their (surface, lang) vocabulary. Ids are assigned
/// in order of first occurrence.
class Corpus {
 public:
  Corpus() = default;
  /// Validates ids/langs and builds the vocabulary. Throws on duplicate or
  /// empty ids, empty langs, or empty token lists unless `allow_empty`.
  explicit Corpus(std::vector<Document> documents, bool allow_empty = false);

  const std::vector<Document>& documents() const { return documents_; }
  const Document& document(std::size_t i) const { return documents_.at(i); }
  std::size_t size() const { return documents_.size(); }
  /// Distinct language codes, sorted.
  const std::vector<std::string>& languages() const { return languages_; }
  const Vocabulary& vocab() const { return vocab_; }
  /// Vocabulary ids of document i's tokens, in token order.
  const std::vector<int>& token_ids(std::size_t i) const { return token_ids_.at(i); }
  std::vector<std::string> ids() const;
  std::vector<std::string> labels() const;
  std::size_t total_tokens() const;

 private:
  std::vector<Document> documents_;
  std::vector<std::string> languages_;
  Vocabulary vocab_;
  std::vector<std::vector<int>> token_ids_;
};

struct CorpusLoadOptions {
  bool allow_empty = false;
  /// Reject corpora with more than two languages.
  bool require_bilingual = true;
};

Corpus load_corpus(const std::filesystem::path& path, const CorpusLoadOptions& options = {});
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);

/// m x d document representations. Stored as float64; files hold float32.
struct EmbeddingMatrix {
  std::vector<std::string> ids;
  Matrix data;

  std::size_t rows() const { return static_cast<std::size_t>(data.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(data.cols()); }
};

/// Checks ids/rows agreement, id uniqueness and finiteness.
void validate(const EmbeddingMatrix& emb);

/// Reads EMB1 (detected by magic) or the JSONL fallback.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
/// EMB1 layout: "EMB1", uint32 LE header length, compact JSON header
/// {"m","d","dtype":"f32","ids"}, then m*d float32 LE values row-major.
void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& emb);
void write_embeddings_jsonl(const std::filesystem::path& path, const EmbeddingMatrix& emb);

/// Reorders `emb` rows to follow corpus document order. Throws listing every
/// missing and extra id.
EmbeddingMatrix align_corpus_embeddings(const Corpus& corpus, const EmbeddingMatrix& emb);

struct ComparablePair {
  std::vector<std::string> l1_tokens;
  std::vector<std::string> l2_tokens;
};

struct ComparableCorpus {
  std::vector<ComparablePair> pairs;
  /// Language codes of the two sides when the file declares them
  /// (l1_lang / l2_lang fields).
  std::optional<std::pair<std::string, std::string>> languages;

  std::size_t size() const { return pairs.size(); }
};

ComparableCorpus load_comparable_pairs(const std::filesystem::path& path);
void write_comparable_pairs(const std::filesystem::path& path, const ComparableCorpus& cc);

}  // namespace xltm
