#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace storygraph {

/// (feature index, weight) pairs with strictly increasing indices.
struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;

  bool empty() const { return entries.empty(); }
  double norm() const;
  double value(std::uint32_t feature) const;  // 0 when absent
};

inline constexpr std::size_t kMinNgram = 1;
inline constexpr std::size_t kMaxNgram = 4;

/// TF-IDF over word n-grams, n in [min_n, max_n]. Feature indices follow the
/// lexicographic order of the n-gram strings (tokens joined by one space).
class TfidfModel {
 public:
  std::size_t feature_count() const { return idf_.size(); }
  std::size_t document_count() const { return documents_; }
  std::size_t min_n() const { return min_n_; }
  std::size_t max_n() const { return max_n_; }

  /// -1 when the n-gram was not seen in training.
  std::int64_t feature(const std::string& ngram) const;
  double idf(std::uint32_t feature) const { return idf_.at(feature); }
  const std::string& ngram(std::uint32_t feature) const { return ngrams_.at(feature); }

  /// count * idf, then L2-normalized; unseen n-grams are ignored.
  SparseVector transform(std::span<const std::string> tokens) const;
  SparseVector transform_text(std::string_view text) const;

  friend TfidfModel tfidf_fit(std::span<const std::vector<std::string>> docs, std::size_t min_n,
                              std::size_t max_n);
  friend class BaselineCodec;

 private:
  std::size_t min_n_ = kMinNgram;
  std::size_t max_n_ = kMaxNgram;
  std::size_t documents_ = 0;
  std::vector<std::string> ngrams_;
  std::vector<double> idf_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// All n-grams of a token sequence, in order of appearance.
std::vector<std::string> ngrams(std::span<const std::string> tokens, std::size_t min_n,
                                std::size_t max_n);

/// Smoothed idf: ln((1 + N) / (1 + df)) + 1. Throws EmptyCorpus.
TfidfModel tfidf_fit(std::span<const std::vector<std::string>> docs, std::size_t min_n = kMinNgram,
                     std::size_t max_n = kMaxNgram);
TfidfModel tfidf_fit_texts(std::span<const std::string> texts, std::size_t min_n = kMinNgram,
                           std::size_t max_n = kMaxNgram);

enum class ForestTask { Classify, Regress };

struct ForestConfig {
  std::size_t trees = 100;
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;  // 0 = sqrt(F) for classification, F/3 for regression
  bool bootstrap = true;
  std::uint64_t seed = 42;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 for leaves
  double threshold = 0.0;     // go left when value <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::vector<double> value;  // leaf: class weights (classify) or {mean} (regress)
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // root at 0

  const TreeNode& leaf_for(const SparseVector& x) const;
  std::size_t depth() const;
};

struct Forest {
  ForestTask task = ForestTask::Classify;
  std::size_t classes = 0;
  std::size_t features = 0;
  std::vector<DecisionTree> trees;
};

/// Bootstrap-aggregated CART trees. Classification splits minimize weighted
/// Gini impurity, regression splits minimize squared error. For
/// classification `targets` holds class indices in [0, classes).
Forest rf_fit(std::span<const SparseVector> features, std::span<const double> targets,
              std::size_t feature_count, const ForestConfig& config, ForestTask task,
              std::size_t classes = 0);

/// Per-tree vote (majority of leaf weights), then majority with the lowest
/// class winning ties.
int rf_predict_class(const Forest& forest, const SparseVector& x);
/// Mean of the leaf means.
double rf_predict_value(const Forest& forest, const SparseVector& x);

/// Majority vote with lowest-index tie-break.
int majority_vote(std::span<const int> votes, std::size_t classes);

struct BaselineModel {
  TfidfModel tfidf;
  Forest forest;
};

/// Container: magic "SGRFMODL", u32 version, then tagged sections
/// "TFID" (n-gram table and idf) and "FRST" (trees), then an FNV-1a checksum.
void save_baseline(const std::filesystem::path& path, const BaselineModel& model);
BaselineModel load_baseline(const std::filesystem::path& path);
std::string serialize_baseline(const BaselineModel& model);
BaselineModel deserialize_baseline(std::string_view bytes);

}  // namespace storygraph
