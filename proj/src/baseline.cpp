#include "storygraph/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_set>

#include "storygraph/binary_io.hpp"
#include "storygraph/corpus.hpp"
#include "storygraph/error.hpp"
#include "storygraph/random.hpp"

namespace storygraph {

double SparseVector::norm() const {
  double s = 0.0;
  for (const auto& [i, w] : entries) s += w * w;
  return std::sqrt(s);
}

double SparseVector::value(std::uint32_t feature) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), feature,
                             [](const auto& e, std::uint32_t f) { return e.first < f; });
  return it != entries.end() && it->first == feature ? it->second : 0.0;
}

std::vector<std::string> ngrams(std::span<const std::string> tokens, std::size_t min_n,
                                std::size_t max_n) {
  std::vector<std::string> out;
  for (std::size_t n = min_n; n <= max_n; ++n) {
    if (n == 0 || tokens.size() < n) continue;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string g = tokens[i];
      for (std::size_t k = 1; k < n; ++k) {
        g.push_back(' ');
        g += tokens[i + k];
      }
      out.push_back(std::move(g));
    }
  }
  return out;
}

std::int64_t TfidfModel::feature(const std::string& ngram) const {
  auto it = index_.find(ngram);
  return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

TfidfModel tfidf_fit(std::span<const std::vector<std::string>> docs, std::size_t min_n,
                     std::size_t max_n) {
  if (docs.empty()) fail(ErrorCode::EmptyCorpus, "cannot fit TF-IDF on an empty corpus");
  if (min_n < 1 || max_n < min_n) fail(ErrorCode::InvalidArgument, "invalid n-gram range");
  std::map<std::string, std::uint64_t> df;
  for (const auto& doc : docs) {
    auto grams = ngrams(doc, min_n, max_n);
    std::sort(grams.begin(), grams.end());
    grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
    for (auto& g : grams) ++df[std::move(g)];
  }
  if (df.empty()) fail(ErrorCode::EmptyCorpus, "training corpus has no n-grams");

  TfidfModel m;
  m.min_n_ = min_n;
  m.max_n_ = max_n;
  m.documents_ = docs.size();
  const double n = static_cast<double>(docs.size());
  m.ngrams_.reserve(df.size());
  m.idf_.reserve(df.size());
  m.index_.reserve(df.size());
  for (auto& [gram, count] : df) {
    m.index_.emplace(gram, static_cast<std::uint32_t>(m.ngrams_.size()));
    m.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
    m.ngrams_.push_back(gram);
  }
  return m;
}

TfidfModel tfidf_fit_texts(std::span<const std::string> texts, std::size_t min_n, std::size_t max_n) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(texts.size());
  for (const auto& t : texts) docs.push_back(tokenize(t));
  return tfidf_fit(docs, min_n, max_n);
}

SparseVector TfidfModel::transform(std::span<const std::string> tokens) const {
  std::map<std::uint32_t, double> counts;
  for (const auto& g : ngrams(tokens, min_n_, max_n_)) {
    if (auto it = index_.find(g); it != index_.end()) counts[it->second] += 1.0;
  }
  SparseVector v;
  v.entries.reserve(counts.size());
  for (const auto& [f, c] : counts) v.entries.emplace_back(f, c * idf_[f]);
  const double norm = v.norm();
  if (norm > 0.0) {
    for (auto& e : v.entries) e.second /= norm;
  }
  return v;
}

SparseVector TfidfModel::transform_text(std::string_view text) const {
  const auto tokens = tokenize(text);
  return transform(tokens);
}

// ---------------------------------------------------------------------------
// Random forest

const TreeNode& DecisionTree::leaf_for(const SparseVector& x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x.value(static_cast<std::uint32_t>(n.feature)) <= n.threshold
                                     ? n.left
                                     : n.right);
  }
  return nodes[i];
}

std::size_t DecisionTree::depth() const {
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t best = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (nodes[i].feature >= 0) {
      stack.emplace_back(static_cast<std::size_t>(nodes[i].left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes[i].right), d + 1);
    }
  }
  return best;
}

namespace {

constexpr double kImpurityEpsilon = 1e-12;

// Weighted target statistics of a set of samples.
struct NodeStats {
  double weight = 0.0;
  std::size_t count = 0;
  std::vector<double> hist;  // classification
  double sum = 0.0;          // regression
  double sumsq = 0.0;

  void reset(std::size_t classes) {
    weight = 0.0;
    count = 0;
    hist.assign(classes, 0.0);
    sum = sumsq = 0.0;
  }
};

class TreeBuilder {
 public:
  TreeBuilder(std::span<const SparseVector> x, std::span<const double> y, std::size_t features,
              ForestTask task, std::size_t classes, const ForestConfig& config, std::uint64_t seed)
      : x_(x),
        y_(y),
        features_(features),
        task_(task),
        classes_(classes),
        config_(config),
        rng_(seed),
        stamp_(features, 0),
        slot_(features, -1),
        sample_stamp_(x.size(), 0),
        sample_value_(x.size(), 0.0) {
    mtry_ = config.max_features;
    if (mtry_ == 0) {
      mtry_ = task == ForestTask::Classify
                  ? static_cast<std::size_t>(std::sqrt(static_cast<double>(features)))
                  : features / 3;
    }
    mtry_ = std::clamp<std::size_t>(mtry_, 1, std::max<std::size_t>(features, 1));
  }

  DecisionTree build() {
    const std::size_t n = x_.size();
    weight_.assign(n, 0.0);
    if (config_.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) weight_[uniform_index(rng_, n)] += 1.0;
    } else {
      std::fill(weight_.begin(), weight_.end(), 1.0);
    }
    std::vector<std::uint32_t> root;
    for (std::size_t i = 0; i < n; ++i) {
      if (weight_[i] > 0.0) root.push_back(static_cast<std::uint32_t>(i));
    }
    tree_.nodes.clear();
    tree_.nodes.emplace_back();
    struct Work {
      std::size_t node;
      std::vector<std::uint32_t> samples;
      std::size_t depth;
    };
    std::vector<Work> stack;
    stack.push_back({0, std::move(root), 0});
    while (!stack.empty()) {
      Work w = std::move(stack.back());
      stack.pop_back();
      NodeStats stats = stats_of(w.samples);
      const bool depth_limited = config_.max_depth != 0 && w.depth >= config_.max_depth;
      Split split;
      if (!depth_limited && w.samples.size() >= 2 * config_.min_samples_leaf &&
          w.samples.size() >= 2 && impurity(stats) > kImpurityEpsilon) {
        split = find_split(w.samples, stats);
      }
      if (split.feature < 0) {
        make_leaf(w.node, stats);
        continue;
      }
      std::vector<std::uint32_t> left;
      std::vector<std::uint32_t> right;
      mark_values(w.samples, static_cast<std::uint32_t>(split.feature));
      for (auto s : w.samples) (value_of(s) <= split.threshold ? left : right).push_back(s);
      const auto l = tree_.nodes.size();
      tree_.nodes.emplace_back();
      const auto r = tree_.nodes.size();
      tree_.nodes.emplace_back();
      auto& node = tree_.nodes[w.node];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = static_cast<std::int32_t>(l);
      node.right = static_cast<std::int32_t>(r);
      stack.push_back({r, std::move(right), w.depth + 1});
      stack.push_back({l, std::move(left), w.depth + 1});
    }
    return std::move(tree_);
  }

 private:
  struct Split {
    std::int32_t feature = -1;
    double threshold = 0.0;
    double cost = 0.0;
  };

  void add(NodeStats& s, std::uint32_t sample, double sign) const {
    const double w = weight_[sample] * sign;
    s.weight += w;
    s.count = sign > 0 ? s.count + 1 : s.count - 1;
    if (task_ == ForestTask::Classify) {
      s.hist[static_cast<std::size_t>(y_[sample])] += w;
    } else {
      s.sum += w * y_[sample];
      s.sumsq += w * y_[sample] * y_[sample];
    }
  }

  NodeStats stats_of(std::span<const std::uint32_t> samples) const {
    NodeStats s;
    s.reset(classes_);
    for (auto i : samples) add(s, i, 1.0);
    return s;
  }

  // Weight times impurity: W * gini for classification, SSE for regression.
  double impurity(const NodeStats& s) const {
    if (s.weight <= 0.0) return 0.0;
    if (task_ == ForestTask::Classify) {
      double sq = 0.0;
      for (double h : s.hist) sq += h * h;
      return std::max(0.0, s.weight - sq / s.weight);
    }
    return std::max(0.0, s.sumsq - s.sum * s.sum / s.weight);
  }

  void make_leaf(std::size_t node, const NodeStats& s) {
    auto& n = tree_.nodes[node];
    n.feature = -1;
    if (task_ == ForestTask::Classify) {
      n.value = s.hist;
    } else {
      n.value = {s.weight > 0.0 ? s.sum / s.weight : 0.0};
    }
  }

  void mark_values(std::span<const std::uint32_t> samples, std::uint32_t feature) {
    ++value_stamp_;
    for (auto s : samples) {
      const double v = x_[s].value(feature);
      sample_value_[s] = v;
      sample_stamp_[s] = value_stamp_;
    }
  }
  double value_of(std::uint32_t s) const {
    return sample_stamp_[s] == value_stamp_ ? sample_value_[s] : 0.0;
  }

  // Best threshold on one feature. `entries` are the node's nonzero values of
  // that feature; all other node samples have value 0.
  Split evaluate(std::int32_t feature, std::vector<std::pair<double, std::uint32_t>>& entries,
                 const NodeStats& total) const {
    Split best;
    std::sort(entries.begin(), entries.end());
    NodeStats zeros = total;
    for (const auto& [v, s] : entries) add(zeros, s, -1.0);

    // Items in ascending value: negatives, the zero block, positives.
    struct Item {
      double value;
      std::int64_t sample;  // -1 for the zero block
    };
    std::vector<Item> items;
    items.reserve(entries.size() + 1);
    bool zero_placed = zeros.count == 0;
    for (const auto& [v, s] : entries) {
      if (!zero_placed && v > 0.0) {
        items.push_back({0.0, -1});
        zero_placed = true;
      }
      items.push_back({v, static_cast<std::int64_t>(s)});
    }
    if (!zero_placed) items.push_back({0.0, -1});

    NodeStats left;
    left.reset(classes_);
    const std::size_t min_leaf = config_.min_samples_leaf;
    for (std::size_t i = 0; i + 1 < items.size(); ++i) {
      if (items[i].sample < 0) {
        left.weight += zeros.weight;
        left.count += zeros.count;
        for (std::size_t c = 0; c < left.hist.size(); ++c) left.hist[c] += zeros.hist[c];
        left.sum += zeros.sum;
        left.sumsq += zeros.sumsq;
      } else {
        add(left, static_cast<std::uint32_t>(items[i].sample), 1.0);
      }
      if (items[i + 1].value <= items[i].value) continue;
      if (left.count < min_leaf || total.count - left.count < min_leaf) continue;
      NodeStats right = total;
      right.weight -= left.weight;
      right.count -= left.count;
      for (std::size_t c = 0; c < right.hist.size(); ++c) right.hist[c] -= left.hist[c];
      right.sum -= left.sum;
      right.sumsq -= left.sumsq;
      const double cost = impurity(left) + impurity(right);
      if (best.feature < 0 || cost < best.cost) {
        double thr = 0.5 * (items[i].value + items[i + 1].value);
        if (thr >= items[i + 1].value) thr = items[i].value;
        best = {feature, thr, cost};
      }
    }
    return best;
  }

  Split find_split(std::span<const std::uint32_t> samples, const NodeStats& stats) {
    // Features with at least one nonzero in this node; the rest are constant.
    ++stamp_id_;
    std::vector<std::uint32_t> present;
    for (auto s : samples) {
      for (const auto& [f, v] : x_[s].entries) {
        if (stamp_[f] != stamp_id_) {
          stamp_[f] = stamp_id_;
          present.push_back(f);
        }
      }
    }
    if (present.empty()) return {};
    std::sort(present.begin(), present.end());

    // Sampling mtry of all F features without replacement, restricted to the
    // present ones (selection sampling, present features first).
    std::vector<std::uint32_t> chosen;
    std::vector<std::uint32_t> rest;
    std::size_t needed = mtry_;
    for (std::size_t t = 0; t < present.size(); ++t) {
      const std::uint64_t remaining = features_ - t;
      if (needed > 0 && uniform_index(rng_, remaining) < needed) {
        chosen.push_back(present[t]);
        --needed;
      } else {
        rest.push_back(present[t]);
      }
    }
    Split best = best_of(chosen, samples, stats);
    if (best.feature >= 0) return best;
    // No usable feature drawn: keep drawing until one splits.
    shuffle(rest, rng_);
    for (auto f : rest) {
      const std::vector<std::uint32_t> one{f};
      best = best_of(one, samples, stats);
      if (best.feature >= 0) return best;
    }
    return {};
  }

  Split best_of(std::span<const std::uint32_t> candidates, std::span<const std::uint32_t> samples,
                const NodeStats& stats) {
    if (candidates.empty()) return {};
    std::vector<std::vector<std::pair<double, std::uint32_t>>> values(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) slot_[candidates[i]] = static_cast<std::int32_t>(i);
    for (auto s : samples) {
      for (const auto& [f, v] : x_[s].entries) {
        const auto slot = slot_[f];
        if (slot >= 0 && v != 0.0) values[static_cast<std::size_t>(slot)].emplace_back(v, s);
      }
    }
    for (auto f : candidates) slot_[f] = -1;
    Split best;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const auto s = evaluate(static_cast<std::int32_t>(candidates[i]), values[i], stats);
      if (s.feature >= 0 && (best.feature < 0 || s.cost < best.cost)) best = s;
    }
    return best;
  }

  std::span<const SparseVector> x_;
  std::span<const double> y_;
  std::size_t features_;
  ForestTask task_;
  std::size_t classes_;
  const ForestConfig& config_;
  Rng rng_;
  std::size_t mtry_ = 1;
  std::vector<double> weight_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t stamp_id_ = 0;
  std::vector<std::int32_t> slot_;
  std::vector<std::uint32_t> sample_stamp_;
  std::vector<double> sample_value_;
  std::uint32_t value_stamp_ = 0;
  DecisionTree tree_;
};

}  // namespace

Forest rf_fit(std::span<const SparseVector> features, std::span<const double> targets,
              std::size_t feature_count, const ForestConfig& config, ForestTask task,
              std::size_t classes) {
  if (features.size() != targets.size()) {
    fail(ErrorCode::InvalidArgument, "feature and target counts differ");
  }
  if (features.size() < 2) fail(ErrorCode::DegenerateData, "random forest needs at least 2 samples");
  if (config.trees < 1) fail(ErrorCode::InvalidArgument, "forest needs at least one tree");
  Forest forest;
  forest.task = task;
  forest.features = feature_count;
  if (task == ForestTask::Classify) {
    if (classes == 0) {
      for (double t : targets) classes = std::max(classes, static_cast<std::size_t>(t) + 1);
    }
    for (double t : targets) {
      if (t < 0 || t != std::floor(t) || static_cast<std::size_t>(t) >= classes) {
        fail(ErrorCode::InvalidLabel, "classification target outside [0, classes)");
      }
    }
    forest.classes = classes;
  }
  for (const auto& x : features) {
    for (const auto& [f, v] : x.entries) {
      if (f >= feature_count) fail(ErrorCode::IndexOutOfRange, "feature index beyond feature count");
    }
  }
  forest.trees.reserve(config.trees);
  for (std::size_t t = 0; t < config.trees; ++t) {
    const auto seed = derive_seed(config.seed, "tree", std::to_string(t));
    TreeBuilder builder(features, targets, feature_count, task, forest.classes, config, seed);
    forest.trees.push_back(builder.build());
  }
  return forest;
}

int majority_vote(std::span<const int> votes, std::size_t classes) {
  std::vector<std::size_t> counts(classes, 0);
  for (int v : votes) ++counts.at(static_cast<std::size_t>(v));
  int best = 0;
  for (std::size_t c = 1; c < classes; ++c) {
    if (counts[c] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

int rf_predict_class(const Forest& forest, const SparseVector& x) {
  std::vector<int> votes;
  votes.reserve(forest.trees.size());
  for (const auto& tree : forest.trees) {
    const auto& hist = tree.leaf_for(x).value;
    int best = 0;
    for (std::size_t c = 1; c < hist.size(); ++c) {
      if (hist[c] > hist[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
    }
    votes.push_back(best);
  }
  return majority_vote(votes, forest.classes);
}

double rf_predict_value(const Forest& forest, const SparseVector& x) {
  double total = 0.0;
  for (const auto& tree : forest.trees) total += tree.leaf_for(x).value.at(0);
  return forest.trees.empty() ? 0.0 : total / static_cast<double>(forest.trees.size());
}

// ---------------------------------------------------------------------------
// Persistence

class BaselineCodec {
 public:
  static void write_tfidf(ByteWriter& w, const TfidfModel& m) {
    w.u64(m.min_n_);
    w.u64(m.max_n_);
    w.u64(m.documents_);
    w.u64(m.ngrams_.size());
    for (std::size_t i = 0; i < m.ngrams_.size(); ++i) {
      w.str(m.ngrams_[i]);
      w.f64(m.idf_[i]);
    }
  }
  static TfidfModel read_tfidf(ByteReader& r) {
    TfidfModel m;
    m.min_n_ = r.u64();
    m.max_n_ = r.u64();
    m.documents_ = r.u64();
    const auto n = r.count(12);
    for (std::uint64_t i = 0; i < n; ++i) {
      auto g = r.str();
      m.idf_.push_back(r.f64());
      m.index_.emplace(g, static_cast<std::uint32_t>(i));
      m.ngrams_.push_back(std::move(g));
    }
    return m;
  }
};

namespace {

constexpr std::string_view kBaselineMagic = "SGRFMODL";
constexpr std::uint32_t kBaselineVersion = 1;

}  // namespace

std::string serialize_baseline(const BaselineModel& model) {
  ByteWriter w;
  w.raw(kBaselineMagic);
  w.u32(kBaselineVersion);
  w.raw("TFID");
  BaselineCodec::write_tfidf(w, model.tfidf);
  w.raw("FRST");
  const auto& f = model.forest;
  w.u8(f.task == ForestTask::Classify ? 0 : 1);
  w.u64(f.classes);
  w.u64(f.features);
  w.u64(f.trees.size());
  for (const auto& t : f.trees) {
    w.u64(t.nodes.size());
    for (const auto& n : t.nodes) {
      w.i32(n.feature);
      w.f64(n.threshold);
      w.i32(n.left);
      w.i32(n.right);
      w.u32(static_cast<std::uint32_t>(n.value.size()));
      for (double v : n.value) w.f64(v);
    }
  }
  w.u64(fnv1a(w.bytes()));
  return w.take();
}

BaselineModel deserialize_baseline(std::string_view bytes) {
  if (bytes.size() < kBaselineMagic.size() + 12 || bytes.substr(0, kBaselineMagic.size()) != kBaselineMagic) {
    fail(ErrorCode::CorruptFile, "not a storygraph baseline file");
  }
  ByteReader r(bytes);
  r.raw(kBaselineMagic.size());
  const auto version = r.u32();
  if (version != kBaselineVersion) {
    fail(ErrorCode::VersionMismatch, "baseline format version " + std::to_string(version));
  }
  ByteReader trailer(bytes.substr(bytes.size() - 8));
  if (trailer.u64() != fnv1a(bytes.substr(0, bytes.size() - 8))) {
    fail(ErrorCode::CorruptFile, "baseline checksum mismatch");
  }
  BaselineModel m;
  if (r.raw(4) != "TFID") fail(ErrorCode::CorruptFile, "missing TFID section");
  m.tfidf = BaselineCodec::read_tfidf(r);
  if (r.raw(4) != "FRST") fail(ErrorCode::CorruptFile, "missing FRST section");
  auto& f = m.forest;
  f.task = r.u8() == 0 ? ForestTask::Classify : ForestTask::Regress;
  f.classes = r.u64();
  f.features = r.u64();
  const auto trees = r.count(8);
  for (std::uint64_t t = 0; t < trees; ++t) {
    DecisionTree tree;
    const auto nodes = r.count(24);
    for (std::uint64_t i = 0; i < nodes; ++i) {
      TreeNode n;
      n.feature = r.i32();
      n.threshold = r.f64();
      n.left = r.i32();
      n.right = r.i32();
      const auto k = r.u32();
      n.value = r.f64s(k);
      const auto limit = static_cast<std::int32_t>(nodes);
      if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= limit || n.right >= limit)) {
        fail(ErrorCode::CorruptFile, "tree child index out of range");
      }
      tree.nodes.push_back(std::move(n));
    }
    if (tree.nodes.empty()) fail(ErrorCode::CorruptFile, "empty tree");
    f.trees.push_back(std::move(tree));
  }
  if (r.remaining() != 8) fail(ErrorCode::CorruptFile, "unexpected trailing bytes in baseline file");
  return m;
}

void save_baseline(const std::filesystem::path& path, const BaselineModel& model) {
  write_file_bytes(path, serialize_baseline(model));
}

BaselineModel load_baseline(const std::filesystem::path& path) {
  return deserialize_baseline(read_file_bytes(path));
}

}  // namespace storygraph
