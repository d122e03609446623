#include "storygraph/embeddings.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "storygraph/error.hpp"
#include "storygraph/random.hpp"

namespace storygraph {

const std::vector<float>* PretrainedVectors::find(const std::string& token) const {
  auto it = vectors.find(token);
  return it == vectors.end() ? nullptr : &it->second;
}

PretrainedVectors parse_pretrained_vectors(std::istream& in, std::size_t dim,
                                           const std::unordered_set<std::string>* keep) {
  PretrainedVectors out;
  out.dim = dim;
  std::size_t wrong_arity = 0;
  std::string line;
  std::vector<float> values;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++out.lines_read;
    const char* p = line.data();
    const char* end = p + line.size();
    const char* tok_end = p;
    while (tok_end < end && *tok_end != ' ' && *tok_end != '\t') ++tok_end;
    std::string token(p, tok_end);
    p = tok_end;

    values.clear();
    bool ok = true;
    while (p < end) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p == end) break;
      float v = 0.0f;
      const auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc() || !std::isfinite(v)) {
        ok = false;
        break;
      }
      values.push_back(v);
      p = next;
    }
    if (!ok || values.size() != dim) {
      ++out.skipped_lines;
      if (ok) ++wrong_arity;
      continue;
    }
    if (keep && keep->count(token) == 0) continue;
    out.vectors.try_emplace(std::move(token), values);
  }
  if (out.lines_read > 0 && 2 * wrong_arity > out.lines_read) {
    fail(ErrorCode::DimensionMismatch, "most vector lines do not have " + std::to_string(dim) +
                                           " components (" + std::to_string(wrong_arity) + " of " +
                                           std::to_string(out.lines_read) + ")");
  }
  return out;
}

PretrainedVectors load_pretrained_vectors(const std::filesystem::path& path, std::size_t dim,
                                          const std::unordered_set<std::string>* keep) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::FileNotFound, "vector file not found: " + path.string());
  return parse_pretrained_vectors(in, dim, keep);
}

std::string_view provenance_name(Provenance p) noexcept {
  switch (p) {
    case Provenance::Unknown: return "unknown";
    case Provenance::Pretrained: return "pretrained";
    case Provenance::Random: return "random";
  }
  return "?";
}

Vocabulary::Vocabulary() {
  index_.emplace(std::string(kUnknownToken), kUnknownId);
  tokens_.emplace_back(kUnknownToken);
  counts_.push_back(0);
}

std::uint32_t Vocabulary::add(const std::string& token, std::uint64_t count) {
  auto [it, inserted] = index_.try_emplace(token, static_cast<std::uint32_t>(tokens_.size()));
  if (inserted) {
    tokens_.push_back(token);
    counts_.push_back(0);
  }
  counts_[it->second] += count;
  return it->second;
}

std::uint32_t Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnknownId : it->second;
}

TokenizedDocument Vocabulary::encode(const TextDocument& doc) const {
  TokenizedDocument out{doc.doc_id, {}, doc.level, doc.story_point};
  out.tokens.reserve(doc.tokens.size());
  for (const auto& t : doc.tokens) out.tokens.push_back(id(t));
  return out;
}

std::vector<TokenizedDocument> Vocabulary::encode(std::span<const TextDocument> docs) const {
  std::vector<TokenizedDocument> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(encode(d));
  return out;
}

double EmbeddingTable::oov_rate() const {
  std::size_t random = 0;
  std::size_t total = 0;
  for (auto p : provenance) {
    if (p == Provenance::Unknown) continue;
    ++total;
    if (p == Provenance::Random) ++random;
  }
  return total == 0 ? 0.0 : static_cast<double>(random) / static_cast<double>(total);
}

VocabularyBuild build_vocab(std::span<const TextDocument> train_docs,
                            const PretrainedVectors& pretrained, std::uint64_t seed,
                            std::size_t dim) {
  if (train_docs.empty()) fail(ErrorCode::EmptyTrainingSet, "no training documents");
  if (pretrained.dim != 0 && !pretrained.vectors.empty() && pretrained.dim != dim) {
    fail(ErrorCode::DimensionMismatch, "pretrained vectors have dimension " +
                                           std::to_string(pretrained.dim) + ", expected " +
                                           std::to_string(dim));
  }
  VocabularyBuild out;
  for (const auto& doc : train_docs) {
    for (const auto& t : doc.tokens) out.vocabulary.add(t);
  }

  auto& table = out.table;
  table.rows = out.vocabulary.size();
  table.dim = dim;
  table.values.assign(table.rows * dim, 0.0);
  table.provenance.assign(table.rows, Provenance::Unknown);
  Rng rng(seed);
  for (std::size_t r = 1; r < table.rows; ++r) {
    auto row = table.row(r);
    if (const auto* vec = pretrained.find(out.vocabulary.token(static_cast<std::uint32_t>(r)))) {
      for (std::size_t k = 0; k < dim; ++k) row[k] = static_cast<double>((*vec)[k]);
      table.provenance[r] = Provenance::Pretrained;
    } else {
      for (auto& v : row) v = uniform_real(rng, -kOovInitRange, kOovInitRange);
      table.provenance[r] = Provenance::Random;
    }
  }
  return out;
}

void write_vocabulary(std::ostream& out, const Vocabulary& vocab, const EmbeddingTable& table) {
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto id = static_cast<std::uint32_t>(i);
    out << vocab.token(id) << '\t' << id << '\t' << vocab.count(id) << '\t'
        << provenance_name(i < table.provenance.size() ? table.provenance[i] : Provenance::Unknown)
        << '\n';
  }
}

}  // namespace storygraph
