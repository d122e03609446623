#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace storygraph {

enum class CoarseTag { Noun, Verb, Adj, Adv, Det, Pron, Adp, Conj, Num, Part, Other };

std::string_view tag_name(CoarseTag tag) noexcept;

/// Assigns exactly one coarse tag per token. Implementations must return a
/// sequence of the same length as the input; pos_filter checks this.
class PosTagger {
 public:
  virtual ~PosTagger() = default;
  virtual std::vector<CoarseTag> tag(std::span<const std::string> tokens) const = 0;
};

/// Most-frequent-tag lexicon for closed-class and common open-class words,
/// falling back to suffix rules and finally to Noun.
class LexiconTagger final : public PosTagger {
 public:
  LexiconTagger();

  /// Adds or overrides entries from a "word<TAB>TAG" file (TAG as printed by
  /// tag_name). Returns the number of entries read.
  std::size_t load_lexicon(const std::filesystem::path& path);
  void set(std::string word, CoarseTag tag);

  CoarseTag tag_word(std::string_view word) const;
  std::vector<CoarseTag> tag(std::span<const std::string> tokens) const override;

 private:
  std::unordered_map<std::string, CoarseTag> lexicon_;
};

}  // namespace storygraph
