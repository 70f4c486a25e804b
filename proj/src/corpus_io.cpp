#include "xltm/corpus_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace xltm {
namespace {

constexpr std::string_view kModule = "corpus-io";
constexpr char kMagic[4] = {'E', 'M', 'B', '1'};

using nlohmann::json;

[[noreturn]] void fail(const std::string& message) { throw Error(kModule, message); }

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) fail("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) fail("cannot write " + path.string());
  return out;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

std::string at_line(std::size_t line_no) { return "line " + std::to_string(line_no) + ": "; }

json parse_line(const std::string& line, std::size_t line_no) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) fail(at_line(line_no) + "expected a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    fail(at_line(line_no) + "malformed JSON (" + e.what() + ")");
  }
}

std::vector<std::string> string_array(const json& j, const char* field, std::size_t line_no) {
  auto it = j.find(field);
  if (it == j.end()) fail(at_line(line_no) + "missing field '" + field + "'");
  if (!it->is_array()) fail(at_line(line_no) + "field '" + field + "' must be an array");
  std::vector<std::string> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_string()) fail(at_line(line_no) + "field '" + field + "' must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::string string_field(const json& j, const char* field, std::size_t line_no) {
  auto it = j.find(field);
  if (it == j.end()) fail(at_line(line_no) + "missing field '" + field + "'");
  if (!it->is_string()) fail(at_line(line_no) + "field '" + field + "' must be a string");
  return it->get<std::string>();
}

std::uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

EmbeddingMatrix read_emb1(const std::string& bytes) {
  if (bytes.size() < 8) fail("truncated EMB1 header");
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t header_len = read_u32_le(raw + 4);
  if (bytes.size() < 8 + static_cast<std::size_t>(header_len)) fail("truncated EMB1 header");

  json header;
  try {
    header = json::parse(bytes.substr(8, header_len));
  } catch (const json::parse_error& e) {
    fail(std::string("malformed EMB1 header (") + e.what() + ")");
  }
  if (!header.is_object() || !header.contains("m") || !header.contains("d") ||
      !header.contains("ids"))
    fail("EMB1 header needs m, d and ids");
  if (header.value("dtype", std::string("f32")) != "f32")
    fail("unsupported dtype '" + header["dtype"].get<std::string>() + "'");
  if (!header["m"].is_number_unsigned() || !header["d"].is_number_unsigned())
    fail("EMB1 header m and d must be non-negative integers");

  const auto m = header["m"].get<std::size_t>();
  const auto d = header["d"].get<std::size_t>();
  EmbeddingMatrix emb;
  emb.ids = header["ids"].get<std::vector<std::string>>();
  if (emb.ids.size() != m)
    fail("header declares m=" + std::to_string(m) + " but lists " +
         std::to_string(emb.ids.size()) + " ids");

  const std::size_t payload = bytes.size() - 8 - header_len;
  if (payload != m * d * 4)
    fail("payload length mismatch: expected " + std::to_string(m * d) + " float32 values, found " +
         std::to_string(payload / 4) + (payload % 4 ? " plus trailing bytes" : ""));

  emb.data.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  const unsigned char* p = raw + 8 + header_len;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < d; ++j, p += 4) {
      const float f = std::bit_cast<float>(read_u32_le(p));
      emb.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f;
    }
  }
  validate(emb);
  return emb;
}

EmbeddingMatrix read_embedding_jsonl(std::istream& in) {
  EmbeddingMatrix emb;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    json j = parse_line(line, line_no);
    std::string id = string_field(j, "id", line_no);
    auto it = j.find("embedding");
    if (it == j.end() || !it->is_array()) fail(at_line(line_no) + "missing array field 'embedding'");
    std::vector<double> row;
    row.reserve(it->size());
    for (const auto& v : *it) {
      if (!v.is_number()) fail(at_line(line_no) + "embedding values must be numbers");
      row.push_back(v.get<double>());
    }
    if (!rows.empty() && row.size() != rows.front().size())
      fail(at_line(line_no) + "embedding length " + std::to_string(row.size()) +
           " differs from previous rows (" + std::to_string(rows.front().size()) + ")");
    emb.ids.push_back(std::move(id));
    rows.push_back(std::move(row));
  }
  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto d = rows.empty() ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.front().size());
  emb.data.resize(m, d);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < d; ++j) emb.data(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  validate(emb);
  return emb;
}

}  // namespace

int Vocabulary::add(const VocabEntry& entry) {
  auto [it, inserted] = index_.try_emplace(entry, static_cast<int>(entries_.size()));
  if (inserted) entries_.push_back(entry);
  return it->second;
}

std::optional<int> Vocabulary::find(const VocabEntry& entry) const {
  auto it = index_.find(entry);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Corpus::Corpus(std::vector<Document> documents, bool allow_empty)
    : documents_(std::move(documents)) {
  std::set<std::string> seen;
  std::set<std::string> langs;
  token_ids_.reserve(documents_.size());
  for (const auto& doc : documents_) {
    if (doc.id.empty()) fail("document with empty id");
    if (doc.lang.empty()) fail("document '" + doc.id + "' has an empty lang");
    if (!seen.insert(doc.id).second) fail("duplicate document id '" + doc.id + "'");
    if (doc.tokens.empty() && !allow_empty) fail("document '" + doc.id + "' has no tokens");
    langs.insert(doc.lang);
    std::vector<int> ids;
    ids.reserve(doc.tokens.size());
    for (const auto& tok : doc.tokens) ids.push_back(vocab_.add({tok, doc.lang}));
    token_ids_.push_back(std::move(ids));
  }
  languages_.assign(langs.begin(), langs.end());
}

std::vector<std::string> Corpus::ids() const {
  std::vector<std::string> out;
  out.reserve(documents_.size());
  for (const auto& d : documents_) out.push_back(d.id);
  return out;
}

std::vector<std::string> Corpus::labels() const {
  std::vector<std::string> out;
  out.reserve(documents_.size());
  for (const auto& d : documents_) out.push_back(d.lang);
  return out;
}

std::size_t Corpus::total_tokens() const {
  std::size_t n = 0;
  for (const auto& d : documents_) n += d.tokens.size();
  return n;
}

Corpus load_corpus(const std::filesystem::path& path, const CorpusLoadOptions& options) {
  auto in = open_in(path);
  std::vector<Document> docs;
  std::unordered_map<std::string, std::size_t> first_line;
  std::set<std::string> langs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    json j = parse_line(line, line_no);
    Document doc;
    doc.id = string_field(j, "id", line_no);
    doc.lang = string_field(j, "lang", line_no);
    doc.tokens = string_array(j, "tokens", line_no);
    if (doc.id.empty()) fail(at_line(line_no) + "empty id");
    if (doc.lang.empty()) fail(at_line(line_no) + "empty lang");
    if (auto [it, inserted] = first_line.try_emplace(doc.id, line_no); !inserted)
      fail("duplicate id '" + doc.id + "' on lines " + std::to_string(it->second) + " and " +
           std::to_string(line_no));
    if (doc.tokens.empty() && !options.allow_empty)
      fail(at_line(line_no) + "document '" + doc.id + "' has no tokens");
    langs.insert(doc.lang);
    if (options.require_bilingual && langs.size() > 2)
      fail(at_line(line_no) + "more than two languages in a bilingual corpus");
    docs.push_back(std::move(doc));
  }
  if (docs.empty()) fail("empty corpus: " + path.string());
  return Corpus(std::move(docs), options.allow_empty);
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  auto out = open_out(path);
  for (const auto& doc : corpus.documents()) {
    json j = {{"id", doc.id}, {"lang", doc.lang}, {"tokens", doc.tokens}};
    out << j.dump() << '\n';
  }
}

void validate(const EmbeddingMatrix& emb) {
  if (emb.ids.size() != emb.rows())
    fail(std::to_string(emb.ids.size()) + " ids for " + std::to_string(emb.rows()) + " rows");
  std::set<std::string> seen;
  for (const auto& id : emb.ids)
    if (!seen.insert(id).second) fail("duplicate embedding id '" + id + "'");
  for (Eigen::Index i = 0; i < emb.data.rows(); ++i)
    for (Eigen::Index j = 0; j < emb.data.cols(); ++j)
      if (!std::isfinite(emb.data(i, j)))
        fail("non-finite value at row " + std::to_string(i) + " ('" +
             emb.ids[static_cast<std::size_t>(i)] + "'), column " + std::to_string(j));
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string bytes = buffer.str();

  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0) return read_emb1(bytes);
  if (bytes.size() >= 3 && bytes.compare(0, 3, "EMB") == 0)
    fail("unsupported EMB version '" + bytes.substr(0, 4) + "'");
  const auto first = bytes.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && bytes[first] != '{') fail("bad magic: not EMB1 or JSONL");
  std::istringstream text(bytes);
  return read_embedding_jsonl(text);
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& emb) {
  validate(emb);
  nlohmann::ordered_json header;
  header["m"] = emb.rows();
  header["d"] = emb.dim();
  header["dtype"] = "f32";
  header["ids"] = emb.ids;
  const std::string header_text = header.dump();

  std::string bytes(kMagic, 4);
  put_u32_le(bytes, static_cast<std::uint32_t>(header_text.size()));
  bytes += header_text;
  bytes.reserve(bytes.size() + emb.rows() * emb.dim() * 4);
  for (Eigen::Index i = 0; i < emb.data.rows(); ++i)
    for (Eigen::Index j = 0; j < emb.data.cols(); ++j)
      put_u32_le(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(emb.data(i, j))));

  auto out = open_out(path, std::ios::out | std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail("short write to " + path.string());
}

void write_embeddings_jsonl(const std::filesystem::path& path, const EmbeddingMatrix& emb) {
  validate(emb);
  auto out = open_out(path);
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    std::vector<double> row(emb.dim());
    for (std::size_t j = 0; j < emb.dim(); ++j)
      row[j] = emb.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    out << json{{"id", emb.ids[i]}, {"embedding", row}}.dump() << '\n';
  }
}

EmbeddingMatrix align_corpus_embeddings(const Corpus& corpus, const EmbeddingMatrix& emb) {
  std::unordered_map<std::string, std::size_t> row_of;
  row_of.reserve(emb.ids.size());
  for (std::size_t i = 0; i < emb.ids.size(); ++i) row_of.emplace(emb.ids[i], i);

  std::vector<std::string> missing;
  std::vector<std::size_t> order;
  order.reserve(corpus.size());
  std::set<std::string> wanted;
  for (const auto& doc : corpus.documents()) {
    wanted.insert(doc.id);
    auto it = row_of.find(doc.id);
    if (it == row_of.end())
      missing.push_back(doc.id);
    else
      order.push_back(it->second);
  }
  std::vector<std::string> extra;
  for (const auto& id : emb.ids)
    if (!wanted.contains(id)) extra.push_back(id);

  if (!missing.empty() || !extra.empty()) {
    std::string msg;
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
      return s;
    };
    if (!missing.empty()) msg += "missing embedding for " + join(missing);
    if (!extra.empty()) msg += std::string(msg.empty() ? "" : "; ") + "extra embedding for " + join(extra);
    fail(msg);
  }

  EmbeddingMatrix out;
  out.ids = corpus.ids();
  out.data.resize(static_cast<Eigen::Index>(order.size()), emb.data.cols());
  for (std::size_t i = 0; i < order.size(); ++i)
    out.data.row(static_cast<Eigen::Index>(i)) = emb.data.row(static_cast<Eigen::Index>(order[i]));
  return out;
}

ComparableCorpus load_comparable_pairs(const std::filesystem::path& path) {
  auto in = open_in(path);
  ComparableCorpus cc;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    json j = parse_line(line, line_no);
    ComparablePair pair;
    pair.l1_tokens = string_array(j, "l1_tokens", line_no);
    pair.l2_tokens = string_array(j, "l2_tokens", line_no);
    if (j.contains("l1_lang") || j.contains("l2_lang")) {
      std::pair<std::string, std::string> langs{string_field(j, "l1_lang", line_no),
                                                string_field(j, "l2_lang", line_no)};
      if (cc.languages && *cc.languages != langs)
        fail(at_line(line_no) + "language pair differs from earlier lines");
      cc.languages = std::move(langs);
    }
    cc.pairs.push_back(std::move(pair));
  }
  if (cc.pairs.empty()) fail("empty comparable corpus: " + path.string());
  return cc;
}

void write_comparable_pairs(const std::filesystem::path& path, const ComparableCorpus& cc) {
  auto out = open_out(path);
  for (const auto& pair : cc.pairs) {
    json j = {{"l1_tokens", pair.l1_tokens}, {"l2_tokens", pair.l2_tokens}};
    if (cc.languages) {
      j["l1_lang"] = cc.languages->first;
      j["l2_lang"] = cc.languages->second;
    }
    out << j.dump() << '\n';
  }
}

}  // namespace xltm
