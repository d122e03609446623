#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "storygraph/corpus.hpp"

namespace storygraph {

inline constexpr std::size_t kDefaultWindow = 20;
inline constexpr std::uint64_t kDefaultMinEdgeFrequency = 2;
inline constexpr std::uint32_t kPublicEdge = 0;

constexpr std::uint64_t pair_key(std::uint32_t src, std::uint32_t dst) {
  return (static_cast<std::uint64_t>(src) << 32) | dst;
}
constexpr std::uint32_t pair_src(std::uint64_t key) { return static_cast<std::uint32_t>(key >> 32); }
constexpr std::uint32_t pair_dst(std::uint64_t key) { return static_cast<std::uint32_t>(key); }

/// Ordered (src -> dst) token pair -> number of position pairs (i, j) with
/// 0 < |i - j| <= w.
using PairCounts = std::unordered_map<std::uint64_t, std::uint64_t>;

PairCounts count_cooccurrences(std::span<const TokenizedDocument> docs, std::size_t window);

class EdgeTable {
 public:
  struct Entry {
    std::uint64_t count = 0;
    std::uint32_t index = kPublicEdge;
  };

  EdgeTable() = default;
  /// Pairs with count >= min_frequency get indices 1..E in (src, dst) order;
  /// every other pair shares the public index 0.
  EdgeTable(const PairCounts& counts, std::uint64_t min_frequency, std::size_t window);

  std::uint32_t lookup(std::uint32_t src, std::uint32_t dst) const;
  const Entry* find(std::uint32_t src, std::uint32_t dst) const;

  /// Number of edge parameters including the public one.
  std::size_t parameter_count() const { return dedicated_ + 1; }
  std::size_t dedicated_edges() const { return dedicated_; }
  /// Distinct ordered pairs seen in training, before thresholding.
  std::size_t distinct_pairs() const { return entries_.size(); }
  /// Distinct unordered pairs ({a,b} counted once).
  std::size_t distinct_undirected_pairs() const;

  std::uint64_t min_frequency() const { return min_frequency_; }
  std::size_t window() const { return window_; }

  /// (key, entry) in ascending key order; used for persistence.
  std::vector<std::pair<std::uint64_t, Entry>> sorted_entries() const;
  static EdgeTable from_entries(std::span<const std::pair<std::uint64_t, Entry>> entries,
                                std::uint64_t min_frequency, std::size_t window);

 private:
  std::unordered_map<std::uint64_t, Entry> entries_;
  std::size_t dedicated_ = 0;
  std::uint64_t min_frequency_ = kDefaultMinEdgeFrequency;
  std::size_t window_ = kDefaultWindow;
};

EdgeTable assign_edge_params(const PairCounts& counts, std::uint64_t min_frequency,
                             std::size_t window);

struct IncomingEdge {
  std::uint32_t source = 0;  // position in DocumentGraph::nodes
  std::uint32_t edge = kPublicEdge;

  friend bool operator==(const IncomingEdge&, const IncomingEdge&) = default;
};

struct DocumentGraph {
  std::string doc_id;
  std::vector<std::uint32_t> nodes;  // unique token ids, first-occurrence order
  std::vector<std::vector<IncomingEdge>> incoming;  // per node, sorted by source
  int label = 0;
  int raw_story_point = 1;

  std::size_t entry_count() const;
};

/// One node per distinct token; for each position pair (i -> j) within the
/// window an incoming entry on token_j's node from token_i's node, with
/// duplicates collapsed. Label defaults to the document's level code.
DocumentGraph build_graph(const TokenizedDocument& doc, std::size_t window, const EdgeTable& table);

std::vector<DocumentGraph> build_graphs(std::span<const TokenizedDocument> docs, std::size_t window,
                                        const EdgeTable& table);

struct GraphStats {
  std::string project;
  std::size_t training_size = 0;
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t undirected_edges = 0;
  double train_seconds = 0.0;
  bool empty = false;
};

/// Nodes are distinct tokens and edges distinct ordered token pairs across the
/// given training graphs.
GraphStats graph_stats(const std::string& project, std::span<const DocumentGraph> train_graphs,
                       double train_seconds);

}  // namespace storygraph
