#include "storygraph/graph.hpp"

#include <algorithm>
#include <unordered_set>

#include "storygraph/error.hpp"

namespace storygraph {

PairCounts count_cooccurrences(std::span<const TokenizedDocument> docs, std::size_t window) {
  if (window < 1) fail(ErrorCode::InvalidArgument, "window must be >= 1");
  PairCounts counts;
  for (const auto& doc : docs) {
    const auto& t = doc.tokens;
    const std::size_t n = t.size();
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t hi = std::min(n, i + window + 1);
      for (std::size_t j = i + 1; j < hi; ++j) {
        ++counts[pair_key(t[i], t[j])];
        ++counts[pair_key(t[j], t[i])];
      }
    }
  }
  return counts;
}

EdgeTable::EdgeTable(const PairCounts& counts, std::uint64_t min_frequency, std::size_t window)
    : min_frequency_(min_frequency), window_(window) {
  if (min_frequency < 1) fail(ErrorCode::InvalidArgument, "min edge frequency must be >= 1");
  std::vector<std::uint64_t> keys;
  keys.reserve(counts.size());
  for (const auto& [key, count] : counts) keys.push_back(key);
  std::sort(keys.begin(), keys.end());
  entries_.reserve(keys.size());
  for (auto key : keys) {
    const auto count = counts.at(key);
    Entry e{count, kPublicEdge};
    if (count >= min_frequency) e.index = static_cast<std::uint32_t>(++dedicated_);
    entries_.emplace(key, e);
  }
}

const EdgeTable::Entry* EdgeTable::find(std::uint32_t src, std::uint32_t dst) const {
  auto it = entries_.find(pair_key(src, dst));
  return it == entries_.end() ? nullptr : &it->second;
}

std::uint32_t EdgeTable::lookup(std::uint32_t src, std::uint32_t dst) const {
  const auto* e = find(src, dst);
  return e ? e->index : kPublicEdge;
}

std::size_t EdgeTable::distinct_undirected_pairs() const {
  std::size_t n = 0;
  for (const auto& [key, e] : entries_) {
    const auto s = pair_src(key);
    const auto d = pair_dst(key);
    if (s < d || (s == d) || !entries_.count(pair_key(d, s))) ++n;
  }
  return n;
}

std::vector<std::pair<std::uint64_t, EdgeTable::Entry>> EdgeTable::sorted_entries() const {
  std::vector<std::pair<std::uint64_t, Entry>> out(entries_.begin(), entries_.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

EdgeTable EdgeTable::from_entries(std::span<const std::pair<std::uint64_t, Entry>> entries,
                                  std::uint64_t min_frequency, std::size_t window) {
  EdgeTable t;
  t.min_frequency_ = min_frequency;
  t.window_ = window;
  t.entries_.reserve(entries.size());
  for (const auto& [key, e] : entries) {
    t.entries_.emplace(key, e);
    t.dedicated_ = std::max<std::size_t>(t.dedicated_, e.index);
  }
  return t;
}

EdgeTable assign_edge_params(const PairCounts& counts, std::uint64_t min_frequency,
                             std::size_t window) {
  return EdgeTable(counts, min_frequency, window);
}

std::size_t DocumentGraph::entry_count() const {
  std::size_t n = 0;
  for (const auto& in : incoming) n += in.size();
  return n;
}

DocumentGraph build_graph(const TokenizedDocument& doc, std::size_t window, const EdgeTable& table) {
  if (doc.tokens.empty()) fail(ErrorCode::EmptyDocument, "document '" + doc.doc_id + "' has no tokens");
  if (window < 1) fail(ErrorCode::InvalidArgument, "window must be >= 1");

  DocumentGraph g;
  g.doc_id = doc.doc_id;
  g.label = static_cast<int>(doc.level);
  g.raw_story_point = doc.raw_story_point;

  std::unordered_map<std::uint32_t, std::uint32_t> position;
  std::vector<std::uint32_t> node_of(doc.tokens.size());
  for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
    auto [it, inserted] =
        position.try_emplace(doc.tokens[i], static_cast<std::uint32_t>(g.nodes.size()));
    if (inserted) g.nodes.push_back(doc.tokens[i]);
    node_of[i] = it->second;
  }

  g.incoming.resize(g.nodes.size());
  const std::size_t n = doc.tokens.size();
  for (std::size_t j = 0; j < n; ++j) {
    auto& in = g.incoming[node_of[j]];
    const std::size_t lo = j > window ? j - window : 0;
    const std::size_t hi = std::min(n, j + window + 1);
    for (std::size_t i = lo; i < hi; ++i) {
      if (i == j) continue;
      in.push_back({node_of[i], table.lookup(doc.tokens[i], doc.tokens[j])});
    }
  }
  for (auto& in : g.incoming) {
    std::sort(in.begin(), in.end(), [](const IncomingEdge& a, const IncomingEdge& b) {
      return a.source != b.source ? a.source < b.source : a.edge < b.edge;
    });
    in.erase(std::unique(in.begin(), in.end()), in.end());
  }
  return g;
}

std::vector<DocumentGraph> build_graphs(std::span<const TokenizedDocument> docs, std::size_t window,
                                        const EdgeTable& table) {
  std::vector<DocumentGraph> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(build_graph(d, window, table));
  return out;
}

GraphStats graph_stats(const std::string& project, std::span<const DocumentGraph> train_graphs,
                       double train_seconds) {
  GraphStats s;
  s.project = project;
  s.training_size = train_graphs.size();
  s.train_seconds = train_seconds;
  if (train_graphs.empty()) {
    s.empty = true;
    s.train_seconds = 0.0;
    return s;
  }
  std::unordered_set<std::uint32_t> nodes;
  std::unordered_set<std::uint64_t> edges;
  for (const auto& g : train_graphs) {
    nodes.insert(g.nodes.begin(), g.nodes.end());
    for (std::size_t n = 0; n < g.nodes.size(); ++n) {
      for (const auto& e : g.incoming[n]) edges.insert(pair_key(g.nodes[e.source], g.nodes[n]));
    }
  }
  s.nodes = nodes.size();
  s.edges = edges.size();
  for (auto key : edges) {
    const auto a = pair_src(key);
    const auto b = pair_dst(key);
    if (a <= b || !edges.count(pair_key(b, a))) ++s.undirected_edges;
  }
  return s;
}

}  // namespace storygraph
