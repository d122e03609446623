#include "storygraph/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "storygraph/error.hpp"
#include "storygraph/random.hpp"

namespace storygraph {
namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Integer story point; accepts integral decimals such as "5.0".
std::optional<int> parse_story_point(std::string_view field) {
  const std::string s = trim(field);
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  if (!std::isfinite(value) || value != std::floor(value) || value < 1.0 || value > 1e9) {
    return std::nullopt;
  }
  return static_cast<int>(value);
}

}  // namespace

std::string_view level_name(StoryPointLevel level) noexcept {
  switch (level) {
    case StoryPointLevel::Small: return "Small";
    case StoryPointLevel::Medium: return "Medium";
    case StoryPointLevel::Large: return "Large";
    case StoryPointLevel::Huge: return "Huge";
  }
  return "?";
}

StoryPointLevel bucket_level(int story_point) {
  if (story_point < 1) {
    fail(ErrorCode::InvalidStoryPoint, "story point must be >= 1, got " + std::to_string(story_point));
  }
  if (story_point <= 5) return StoryPointLevel::Small;
  if (story_point <= 15) return StoryPointLevel::Medium;
  if (story_point <= 40) return StoryPointLevel::Large;
  return StoryPointLevel::Huge;
}

std::string LoadReport::to_string() const {
  std::ostringstream os;
  os << "rows_read=" << rows_read << " issues_loaded=" << issues_loaded
     << " skipped_story_point=" << skipped_story_point
     << " skipped_duplicate_key=" << skipped_duplicate_key
     << " skipped_short_row=" << skipped_short_row << " empty_documents=" << empty_documents
     << " filter_fallbacks=" << filter_fallbacks;
  return os.str();
}

std::vector<std::vector<std::string>> parse_delimited(std::string_view text, char delimiter) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_has_content = false;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    if (row_has_content || row.size() > 1 || !row.front().empty()) rows.push_back(std::move(row));
    row.clear();
    row_has_content = false;
  };

  // Skip a UTF-8 byte order mark.
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      in_quotes = true;
      row_has_content = true;
    } else if (c == delimiter) {
      end_field();
      row_has_content = true;
    } else if (c == '\n') {
      end_row();
    } else if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') continue;
      end_row();
    } else {
      field.push_back(c);
    }
  }
  if (!field.empty() || !row.empty() || row_has_content) end_row();
  return rows;
}

std::vector<Issue> load_issues(const std::filesystem::path& path, const CsvFormat& format,
                               LoadReport* report, std::optional<std::string> project) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::FileNotFound, "dataset file not found: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  const auto rows = parse_delimited(text, format.delimiter);
  if (rows.empty()) fail(ErrorCode::MalformedHeader, "missing header row in " + path.string());

  const auto& header = rows.front();
  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (lower(trim(header[i])) == lower(name)) return i;
    }
    fail(ErrorCode::MalformedHeader,
         "required column '" + name + "' absent from header of " + path.string());
  };
  const std::size_t key_col = column(format.key_column);
  const std::size_t title_col = column(format.title_column);
  const std::size_t desc_col = column(format.description_column);
  const std::size_t sp_col = column(format.story_point_column);
  const std::size_t needed = std::max({key_col, title_col, desc_col, sp_col}) + 1;

  const std::string project_name = project ? *project : path.stem().string();
  LoadReport local;
  std::vector<Issue> issues;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    ++local.rows_read;
    if (row.size() < needed) {
      ++local.skipped_short_row;
      continue;
    }
    const auto sp = parse_story_point(row[sp_col]);
    if (!sp) {
      ++local.skipped_story_point;
      continue;
    }
    std::string key = trim(row[key_col]);
    if (!seen.insert(key).second) {
      ++local.skipped_duplicate_key;
      continue;
    }
    issues.push_back(Issue{project_name, std::move(key), row[title_col], row[desc_col], *sp});
  }
  local.issues_loaded = issues.size();
  if (report) {
    report->rows_read += local.rows_read;
    report->issues_loaded += local.issues_loaded;
    report->skipped_story_point += local.skipped_story_point;
    report->skipped_duplicate_key += local.skipped_duplicate_key;
    report->skipped_short_row += local.skipped_short_row;
  }
  if (issues.empty()) fail(ErrorCode::EmptyDataset, "no valid rows in " + path.string());
  return issues;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (is_word_char(c)) {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      continue;
    }
    const bool joiner = (c == '-' || c == '\'') && !current.empty() && i + 1 < text.size() &&
                        is_word_char(text[i + 1]);
    if (joiner) {
      current.push_back(c);
      continue;
    }
    if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> pos_filter(std::span<const std::string> tokens, const PosTagger& tagger,
                                    FilterCounter* counter) {
  if (tokens.empty()) return {};
  const auto tags = tagger.tag(tokens);
  if (tags.size() != tokens.size()) {
    fail(ErrorCode::TaggerFailure, "tagger returned " + std::to_string(tags.size()) +
                                       " tags for " + std::to_string(tokens.size()) + " tokens");
  }
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tags[i] == CoarseTag::Noun || tags[i] == CoarseTag::Verb) kept.push_back(tokens[i]);
  }
  if (counter) ++counter->documents;
  if (kept.empty()) {
    if (counter) ++counter->fallbacks;
    return {tokens.begin(), tokens.end()};
  }
  return kept;
}

std::string_view text_mode_name(TextMode mode) noexcept {
  return mode == TextMode::Raw ? "raw" : "verb-noun";
}

TextMode parse_text_mode(std::string_view name) {
  if (name == "raw") return TextMode::Raw;
  if (name == "verb-noun" || name == "verbnoun") return TextMode::VerbNoun;
  fail(ErrorCode::InvalidArgument, "unknown text mode '" + std::string(name) + "'");
}

std::vector<TextDocument> make_documents(std::span<const Issue> issues, TextMode mode,
                                         const PosTagger* tagger, LoadReport* report) {
  LexiconTagger fallback_tagger;
  const PosTagger& active = tagger ? *tagger : fallback_tagger;
  FilterCounter counter;
  std::vector<TextDocument> docs;
  docs.reserve(issues.size());
  for (const auto& issue : issues) {
    auto tokens = tokenize(issue.title + " " + issue.description);
    if (tokens.empty()) {
      if (report) ++report->empty_documents;
      continue;
    }
    if (mode == TextMode::VerbNoun) tokens = pos_filter(tokens, active, &counter);
    docs.push_back(TextDocument{issue.issue_key, std::move(tokens), bucket_level(issue.story_point),
                                issue.story_point});
  }
  if (report) report->filter_fallbacks += counter.fallbacks;
  return docs;
}

DatasetSplit split_dataset(std::span<const TextDocument> docs, std::uint64_t seed,
                           double validation_fraction) {
  if (docs.size() < 10) {
    fail(ErrorCode::DatasetTooSmall,
         "need at least 10 documents to split, got " + std::to_string(docs.size()));
  }
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
    fail(ErrorCode::InvalidArgument, "validation fraction must be in [0, 1)");
  }
  std::vector<std::size_t> order(docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  shuffle(order, rng);

  const auto n = static_cast<double>(docs.size());
  const auto n_test = static_cast<std::size_t>(std::llround(kTestFraction * n));
  const std::size_t rest = docs.size() - n_test;
  const auto n_val =
      static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(rest)));

  DatasetSplit split;
  split.seed = seed;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& doc = docs[order[i]];
    if (i < n_test) {
      split.test.push_back(doc);
    } else if (i < n_test + n_val) {
      split.validation.push_back(doc);
    } else {
      split.train.push_back(doc);
    }
  }
  return split;
}

std::uint64_t split_fingerprint(const DatasetSplit& split) {
  std::uint64_t h = fnv1a("split");
  for (const auto* part : {&split.train, &split.validation, &split.test}) {
    h = fnv1a("|", h);
    for (const auto& d : *part) {
      h = fnv1a(d.doc_id, h);
      h = fnv1a("\n", h);
    }
  }
  return h;
}

}  // namespace storygraph
