#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "storygraph/pos_tagger.hpp"

namespace storygraph {

/// The sixteen agile projects of the story-point corpus, in report order.
inline constexpr std::array<std::string_view, 16> kProjects = {
    "appceleratorstudio", "aptanastudio", "bamboo",   "clover",
    "datamanagement",     "duracloud",    "jirasoftware", "mesos",
    "moodle",             "mule",         "mulestudio", "springxd",
    "talenddataquality",  "talendesb",    "titanium", "usergrid"};

struct Issue {
  std::string project;
  std::string issue_key;
  std::string title;
  std::string description;
  int story_point = 1;
};

enum class StoryPointLevel : int { Small = 0, Medium = 1, Large = 2, Huge = 3 };

inline constexpr int kLevelCount = 4;

std::string_view level_name(StoryPointLevel level) noexcept;

/// Small [1,5], Medium [6,15], Large [16,40], Huge >= 41 (no upper cap).
/// Throws InvalidStoryPoint for sp < 1.
StoryPointLevel bucket_level(int story_point);

struct CsvFormat {
  char delimiter = ',';
  std::string key_column = "issuekey";
  std::string title_column = "title";
  std::string description_column = "description";
  std::string story_point_column = "storypoint";
};

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t issues_loaded = 0;
  std::size_t skipped_story_point = 0;
  std::size_t skipped_duplicate_key = 0;
  std::size_t skipped_short_row = 0;
  std::size_t empty_documents = 0;
  std::size_t filter_fallbacks = 0;

  std::string to_string() const;
};

/// Parses delimiter-separated text with quoted fields (RFC 4180 style,
/// quoted fields may span lines). Returns rows of fields.
std::vector<std::vector<std::string>> parse_delimited(std::string_view text, char delimiter);

/// Loads one project file. The project name defaults to the file stem.
std::vector<Issue> load_issues(const std::filesystem::path& path, const CsvFormat& format = {},
                               LoadReport* report = nullptr,
                               std::optional<std::string> project = std::nullopt);

/// Lowercased alphanumeric runs; a hyphen or apostrophe is kept only between
/// two alphanumerics. Every other byte separates tokens.
std::vector<std::string> tokenize(std::string_view text);

struct FilterCounter {
  std::size_t documents = 0;
  std::size_t fallbacks = 0;
};

/// Keeps tokens tagged Noun or Verb. If nothing survives the original
/// sequence is returned and the fallback is counted.
std::vector<std::string> pos_filter(std::span<const std::string> tokens, const PosTagger& tagger,
                                    FilterCounter* counter = nullptr);

enum class TextMode { Raw, VerbNoun };

std::string_view text_mode_name(TextMode mode) noexcept;
TextMode parse_text_mode(std::string_view name);

/// An issue after preprocessing; tokens are still strings because the
/// vocabulary is only known once the training split is fixed.
struct TextDocument {
  std::string doc_id;
  std::vector<std::string> tokens;
  StoryPointLevel level = StoryPointLevel::Small;
  int story_point = 1;
};

/// Title and description joined by one space, tokenized, optionally
/// verb-noun filtered. Issues with no tokens are dropped and counted.
std::vector<TextDocument> make_documents(std::span<const Issue> issues, TextMode mode,
                                         const PosTagger* tagger = nullptr,
                                         LoadReport* report = nullptr);

/// A document encoded against a training vocabulary (see Vocabulary::encode).
struct TokenizedDocument {
  std::string doc_id;
  std::vector<std::uint32_t> tokens;
  StoryPointLevel level = StoryPointLevel::Small;
  int raw_story_point = 1;
};

template <typename Doc>
struct Split {
  std::vector<Doc> train;
  std::vector<Doc> validation;
  std::vector<Doc> test;
  std::uint64_t seed = 0;
};

using DatasetSplit = Split<TextDocument>;

inline constexpr double kTestFraction = 0.20;
inline constexpr double kDefaultValidationFraction = 0.10;

/// Seeded shuffle, then round(0.2 N) test documents; of the remainder
/// round(validation_fraction * rest) become validation.
DatasetSplit split_dataset(std::span<const TextDocument> docs, std::uint64_t seed,
                           double validation_fraction = kDefaultValidationFraction);

/// Order-sensitive hash of the doc ids in each part; identifies a split.
std::uint64_t split_fingerprint(const DatasetSplit& split);

}  // namespace storygraph
