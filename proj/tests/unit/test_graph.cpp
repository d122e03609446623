#include "doctest.h"
#include "storygraph/error.hpp"
#include "storygraph/graph.hpp"
#include "support/synthetic.hpp"

using namespace storygraph;

namespace {

constexpr std::uint32_t a = 1, b = 2, c = 3;

TokenizedDocument doc(std::vector<std::uint32_t> tokens) {
  TokenizedDocument d;
  d.doc_id = "d";
  d.tokens = std::move(tokens);
  return d;
}

std::map<std::uint64_t, std::uint64_t> sorted(const PairCounts& counts) {
  return {counts.begin(), counts.end()};
}

}  // namespace

TEST_SUITE("graph") {
  TEST_CASE("co-occurrence counts") {
    const std::vector<TokenizedDocument> abc{doc({a, b, c})};
    CHECK(sorted(count_cooccurrences(abc, 1)) ==
          std::map<std::uint64_t, std::uint64_t>{
              {pair_key(a, b), 1}, {pair_key(b, a), 1}, {pair_key(b, c), 1}, {pair_key(c, b), 1}});

    const std::vector<TokenizedDocument> single{doc({a})};
    CHECK(count_cooccurrences(single, 5).empty());

    const std::vector<TokenizedDocument> aba{doc({a, b, a})};
    CHECK(sorted(count_cooccurrences(aba, 2)) ==
          std::map<std::uint64_t, std::uint64_t>{{pair_key(a, a), 2}, {pair_key(a, b), 2}, {pair_key(b, a), 2}});
  }

  TEST_CASE("edge table threshold") {
    PairCounts counts{{pair_key(a, b), 3}, {pair_key(b, c), 1}};
    const EdgeTable t(counts, 2, 20);
    CHECK(t.lookup(a, b) == 1);
    CHECK(t.lookup(b, c) == kPublicEdge);
    CHECK(t.lookup(c, a) == kPublicEdge);
    CHECK(t.parameter_count() == 2);
    CHECK(t.distinct_pairs() == 2);

    const EdgeTable all(counts, 1, 20);
    CHECK(all.lookup(a, b) == 1);
    CHECK(all.lookup(b, c) == 2);
    CHECK(all.dedicated_edges() == 2);
    CHECK(all.parameter_count() == 3);
  }

  TEST_CASE("undirected pair count") {
    PairCounts counts{{pair_key(a, b), 1}, {pair_key(b, a), 1}, {pair_key(a, a), 1}, {pair_key(b, c), 1}};
    const EdgeTable t(counts, 2, 20);
    CHECK(t.distinct_pairs() == 4);
    CHECK(t.distinct_undirected_pairs() == 3);
  }

  TEST_CASE("build_graph on [a,b,c], w=1") {
    const std::vector<TokenizedDocument> docs{doc({a, b, c})};
    const EdgeTable t(count_cooccurrences(docs, 1), 1, 1);
    const auto g = build_graph(docs[0], 1, t);
    CHECK(g.nodes == std::vector<std::uint32_t>{a, b, c});
    REQUIRE(g.incoming.size() == 3);
    CHECK(g.incoming[0] == std::vector<IncomingEdge>{{1, t.lookup(b, a)}});
    CHECK(g.incoming[1] == std::vector<IncomingEdge>{{0, t.lookup(a, b)}, {2, t.lookup(c, b)}});
    CHECK(g.incoming[2] == std::vector<IncomingEdge>{{1, t.lookup(b, c)}});
    CHECK(g.entry_count() == 4);
  }

  TEST_CASE("self entry and public fallback") {
    const std::vector<TokenizedDocument> train{doc({a, b})};
    const EdgeTable t(count_cooccurrences(train, 1), 1, 1);
    const auto aa = build_graph(doc({a, a}), 1, t);
    CHECK(aa.nodes.size() == 1);
    CHECK(aa.incoming[0] == std::vector<IncomingEdge>{{0, kPublicEdge}});

    const auto unseen = build_graph(doc({a, c}), 1, t);
    CHECK(unseen.incoming[1] == std::vector<IncomingEdge>{{0, kPublicEdge}});
    CHECK_THROWS_AS(build_graph(doc({}), 1, t), Error);
  }

  TEST_CASE("graph_stats") {
    const std::vector<TokenizedDocument> docs{doc({a, b, c}), doc({c, a})};
    const EdgeTable t(count_cooccurrences(docs, 1), 2, 1);
    const auto graphs = build_graphs(docs, 1, t);
    const auto s = graph_stats("p", graphs, 0.0);
    CHECK(s.training_size == 2);
    CHECK(s.nodes == 3);
    CHECK(s.edges == 6);  // ab ba bc cb ca ac
    CHECK(s.undirected_edges == 3);
    const auto e = graph_stats("p", std::vector<DocumentGraph>{}, 0.0);
    CHECK(e.empty);
    CHECK(e.nodes == 0);
  }

  TEST_CASE("random documents agree with position enumeration") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t w = 1 + uniform_index(rng, 5);
      std::vector<TokenizedDocument> docs;
      for (int i = 0; i < 4; ++i) docs.push_back(testing::random_document(rng, 30, 10));
      const auto counts = count_cooccurrences(docs, w);
      CHECK(sorted(counts) == testing::brute_force_pairs(docs, w));
      const EdgeTable t(counts, 2, w);
      for (const auto& d : docs) {
        const auto g = build_graph(d, w, t);
        const auto expected = testing::brute_force_incoming(d, w, t);
        REQUIRE(g.nodes.size() == expected.size());
        for (std::size_t n = 0; n < g.nodes.size(); ++n) {
          std::set<std::pair<std::uint32_t, std::uint32_t>> got;
          for (const auto& in : g.incoming[n]) got.insert({g.nodes[in.source], in.edge});
          CHECK(got == expected.at(g.nodes[n]));
          CHECK(got.size() == g.incoming[n].size());
        }
      }
    }
  }
}
