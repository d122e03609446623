#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "storygraph/corpus.hpp"

namespace storygraph {

inline constexpr std::size_t kGloveDim = 300;
inline constexpr std::uint32_t kUnknownId = 0;
inline constexpr std::string_view kUnknownToken = "<unk>";

struct PretrainedVectors {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<float>> vectors;
  std::size_t lines_read = 0;
  std::size_t skipped_lines = 0;

  const std::vector<float>* find(const std::string& token) const;
};

/// Whitespace-separated "token v1 ... vd" lines. Lines with the wrong arity
/// or unparseable reals are skipped. When `keep` is given only those tokens
/// are retained, which keeps memory bounded for large vector files.
PretrainedVectors load_pretrained_vectors(const std::filesystem::path& path, std::size_t dim,
                                          const std::unordered_set<std::string>* keep = nullptr);
PretrainedVectors parse_pretrained_vectors(std::istream& in, std::size_t dim,
                                           const std::unordered_set<std::string>* keep = nullptr);

enum class Provenance : std::uint8_t { Unknown = 0, Pretrained = 1, Random = 2 };

std::string_view provenance_name(Provenance p) noexcept;

class Vocabulary {
 public:
  Vocabulary();

  /// Returns the id of `token`, inserting it if absent.
  std::uint32_t add(const std::string& token, std::uint64_t count = 1);
  std::uint32_t id(const std::string& token) const;  // kUnknownId when absent
  const std::string& token(std::uint32_t id) const { return tokens_.at(id); }
  std::uint64_t count(std::uint32_t id) const { return counts_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  bool contains(const std::string& token) const { return index_.count(token) != 0; }

  /// Unseen tokens map to the unknown id.
  TokenizedDocument encode(const TextDocument& doc) const;
  std::vector<TokenizedDocument> encode(std::span<const TextDocument> docs) const;

 private:
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> counts_;
};

/// V x d row-major matrix with per-row provenance.
struct EmbeddingTable {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> values;
  std::vector<Provenance> provenance;

  std::span<const double> row(std::size_t r) const { return {values.data() + r * dim, dim}; }
  std::span<double> row(std::size_t r) { return {values.data() + r * dim, dim}; }

  /// Fraction of non-unknown rows that were randomly initialized.
  double oov_rate() const;
};

inline constexpr double kOovInitRange = 0.01;

struct VocabularyBuild {
  Vocabulary vocabulary;
  EmbeddingTable table;
};

/// Vocabulary over the training tokens in first-seen order. Rows come from
/// `pretrained` where present (its dim must equal `dim`); others are uniform in
/// [-0.01, 0.01] under `seed`; the unknown row is zero.
VocabularyBuild build_vocab(std::span<const TextDocument> train_docs,
                            const PretrainedVectors& pretrained, std::uint64_t seed,
                            std::size_t dim = kGloveDim);

/// One "token<TAB>id<TAB>count<TAB>provenance" line per entry.
void write_vocabulary(std::ostream& out, const Vocabulary& vocab, const EmbeddingTable& table);

}  // namespace storygraph
