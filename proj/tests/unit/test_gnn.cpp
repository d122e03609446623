#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "storygraph/error.hpp"
#include "storygraph/gnn.hpp"
#include "support/synthetic.hpp"

using namespace storygraph;

namespace {

// Two words x (id 1) and y (id 2); edge x->y has index 1, y->x index 2.
struct Toy {
  ModelParameters params;
  DocumentGraph graph;
};

Toy toy() {
  Toy t;
  auto& p = t.params;
  p.vocab = 3;
  p.dim = 2;
  p.classes = 2;
  p.embeddings = {0, 0, 1, -2, 0.5, 3};
  p.edge_weights = {0.0, 2.0, -1.0};
  p.gates = {0.0, 0.0, std::log(3.0)};
  p.classifier = {1, 0.5, -1, 1};
  p.bias = {0.1, -0.2};
  t.graph.doc_id = "toy";
  t.graph.nodes = {1, 2};
  t.graph.incoming = {{{1, 2}}, {{0, 1}}};
  return t;
}

std::vector<double> softmax(std::vector<double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0;
  for (auto& v : z) s += (v = std::exp(v - m));
  for (auto& v : z) v /= s;
  return z;
}

}  // namespace

TEST_SUITE("gnn") {
  TEST_CASE("toy forward matches hand evaluation") {
    const auto t = toy();
    const auto tr = forward(t.params, t.graph, 0.0, nullptr, false);
    CHECK(tr.readout[0] == doctest::Approx(1.125).epsilon(1e-12));
    CHECK(tr.readout[1] == doctest::Approx(-1.25).epsilon(1e-12));
    CHECK(tr.logits[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(tr.logits[1] == 0.0);
    CHECK(tr.probabilities[0] == doctest::Approx(0.6456563062257954).epsilon(1e-12));
    CHECK(tr.probabilities[1] == doctest::Approx(0.35434369377420455).epsilon(1e-12));
    CHECK(tr.gate[1] == doctest::Approx(0.75));
  }

  TEST_CASE("identity gate on a single node") {
    auto t = toy();
    t.graph.nodes = {2};
    t.graph.incoming = {{}};
    t.params.gates[2] = 20.0;
    const auto tr = forward(t.params, t.graph, 0.0, nullptr, false);
    const std::vector<double> z{std::max(0.0, 0.5 * 1 + 3 * 0.5 + 0.1), std::max(0.0, -0.5 + 3 - 0.2)};
    const auto expected = softmax(z);
    CHECK(std::abs(tr.probabilities[0] - expected[0]) < 1e-6);
    CHECK(std::abs(tr.probabilities[1] - expected[1]) < 1e-6);
  }

  TEST_CASE("zero edges and closed gate leave only the bias") {
    auto t = toy();
    std::fill(t.params.edge_weights.begin(), t.params.edge_weights.end(), 0.0);
    std::fill(t.params.gates.begin(), t.params.gates.end(), -20.0);
    const auto tr = forward(t.params, t.graph, 0.0, nullptr, false);
    const auto expected = softmax({0.1, 0.0});
    CHECK(std::abs(tr.probabilities[0] - expected[0]) < 1e-6);
    CHECK(std::abs(tr.probabilities[1] - expected[1]) < 1e-6);
  }

  TEST_CASE("probabilities form a distribution and gates stay inside (0,1)") {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
      const auto inst = testing::random_instance(rng, 20, 8, 4, 10, 3, 2.0);
      const auto tr = forward(inst.params, inst.graph, 0.0, nullptr, false);
      double s = 0;
      for (double p : tr.probabilities) {
        CHECK(p >= 0.0);
        s += p;
      }
      CHECK(std::abs(s - 1.0) < 1e-9);
      for (double g : tr.gate) {
        CHECK(g > 0.0);
        CHECK(g < 1.0);
      }
    }
  }

  TEST_CASE("node order does not matter") {
    Rng rng(9);
    for (int i = 0; i < 50; ++i) {
      const auto inst = testing::random_instance(rng, 20, 8, 4, 10, 3);
      const auto& g = inst.graph;
      std::vector<std::uint32_t> perm(g.nodes.size());
      for (std::uint32_t k = 0; k < perm.size(); ++k) perm[k] = k;
      shuffle(perm, rng);  // new position of old node k is perm[k]
      DocumentGraph h = g;
      for (std::size_t k = 0; k < perm.size(); ++k) {
        h.nodes[perm[k]] = g.nodes[k];
        auto entries = g.incoming[k];
        for (auto& e : entries) e.source = perm[e.source];
        std::sort(entries.begin(), entries.end(),
                  [](const IncomingEdge& x, const IncomingEdge& y) { return x.source < y.source; });
        h.incoming[perm[k]] = entries;
      }
      const auto a = forward(inst.params, g, 0.0, nullptr, false).probabilities;
      const auto b = forward(inst.params, h, 0.0, nullptr, false).probabilities;
      for (std::size_t c = 0; c < a.size(); ++c) CHECK(std::abs(a[c] - b[c]) < 1e-12);
    }
  }

  TEST_CASE("forward errors") {
    auto t = toy();
    auto bad = t.graph;
    bad.nodes[0] = 7;
    CHECK_THROWS_AS(forward(t.params, bad, 0.0, nullptr, false), Error);
    bad = t.graph;
    bad.incoming[0][0].edge = 9;
    try {
      forward(t.params, bad, 0.0, nullptr, false);
      FAIL("expected IndexOutOfRange");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::IndexOutOfRange);
    }
    t.params.embeddings[2] = std::numeric_limits<double>::infinity();
    try {
      forward(t.params, t.graph, 0.0, nullptr, false);
      FAIL("expected NonFiniteActivation");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonFiniteActivation);
    }
  }

  TEST_CASE("dropout masks are inverted and only active in training") {
    const auto t = toy();
    Rng rng(1);
    const auto tr = forward(t.params, t.graph, 0.5, &rng, true);
    for (double m : tr.dropout_mask) CHECK((m == 0.0 || m == 2.0));
    const auto off = forward(t.params, t.graph, 0.5, &rng, false);
    for (double m : off.dropout_mask) CHECK(m == 1.0);
  }

  TEST_CASE("cross entropy") {
    CHECK(cross_entropy(std::vector<double>{1, 0, 0, 0}, 0) <= 1e-9);
    CHECK(cross_entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25}, 2) == doctest::Approx(std::log(4.0)));
    CHECK(cross_entropy(std::vector<double>{1, 0}, 1) == doctest::Approx(-std::log(kProbabilityClamp)));
    CHECK_THROWS_AS(cross_entropy(std::vector<double>{0.5, 0.5}, 2), Error);
    CHECK_THROWS_AS(cross_entropy(std::vector<double>{0.5, 0.5}, -1), Error);
  }

  TEST_CASE("analytic gradients match central differences") {
    Rng rng(2024);
    for (int i = 0; i < 20; ++i) {
      const auto inst = testing::random_instance(rng, 20, 8, 4, 10, 3);
      const double dropout = i % 2 ? 0.5 : 0.0;
      const auto r = testing::check_gradients(inst.params, inst.graph, inst.label, 1e-4, dropout, 100 + i);
      CHECK(r.checked > 0);
      CHECK(r.max_relative_error < 1e-4);
    }
  }

  TEST_CASE("toy gradients match central differences") {
    const auto t = toy();
    for (int label = 0; label < 2; ++label) {
      const auto r = testing::check_gradients(t.params, t.graph, label, 1e-4);
      CHECK(r.skipped_kinks == 0);
      CHECK(r.max_relative_error < 1e-6);
    }
  }

  TEST_CASE("words absent from the document get no gradient") {
    auto t = toy();
    t.params.vocab = 5;
    t.params.embeddings.resize(10, 0.3);
    t.params.gates.resize(5, 0.1);
    Gradients g(t.params);
    const auto tr = forward(t.params, t.graph, 0.0, nullptr, false);
    backward(tr, t.graph, t.params, 0, g);
    const auto dense = g.to_dense(t.params);
    for (std::size_t id : {0u, 3u, 4u}) {
      CHECK(dense.gates[id] == 0.0);
      for (std::size_t k = 0; k < 2; ++k) CHECK(dense.embeddings[id * 2 + k] == 0.0);
    }
    CHECK(g.touched_words() == std::vector<std::uint32_t>{1, 2});
  }

  TEST_CASE("a duplicated document doubles the gradient") {
    Rng rng(77);
    for (int i = 0; i < 10; ++i) {
      const auto inst = testing::random_instance(rng, 20, 8, 4, 10, 3);
      const auto tr = forward(inst.params, inst.graph, 0.0, nullptr, false);
      Gradients once(inst.params), twice(inst.params);
      backward(tr, inst.graph, inst.params, inst.label, once);
      backward(tr, inst.graph, inst.params, inst.label, twice);
      backward(tr, inst.graph, inst.params, inst.label, twice);
      const auto a = once.to_dense(inst.params);
      const auto b = twice.to_dense(inst.params);
      for (std::size_t k = 0; k < a.embeddings.size(); ++k) CHECK(b.embeddings[k] == doctest::Approx(2 * a.embeddings[k]));
      for (std::size_t k = 0; k < a.classifier.size(); ++k) CHECK(b.classifier[k] == doctest::Approx(2 * a.classifier[k]));
      for (std::size_t k = 0; k < a.edge_weights.size(); ++k) CHECK(b.edge_weights[k] == doctest::Approx(2 * a.edge_weights[k]));
    }
  }

  TEST_CASE("backward rejects a foreign trace") {
    const auto t = toy();
    const auto tr = forward(t.params, t.graph, 0.0, nullptr, false);
    DocumentGraph other = t.graph;
    other.nodes = {1};
    other.incoming = {{}};
    Gradients g(t.params);
    try {
      backward(tr, other, t.params, 0, g);
      FAIL("expected TraceMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TraceMismatch);
    }
  }

  TEST_CASE("argmax and story point prediction") {
    CHECK(argmax_lowest(std::vector<double>{0.1, 0.7, 0.1, 0.1}) == 1);
    CHECK(argmax_lowest(std::vector<double>{0.4, 0.1, 0.4, 0.1}) == 0);
    const auto t = toy();
    CHECK(predict(t.params, t.graph).label == 0);
    const std::vector<int> values{5, 8};
    CHECK(predict_story_point(t.params, t.graph, values) == 5);
    try {
      predict_story_point(t.params, t.graph, std::vector<int>{});
      FAIL("expected UnknownClassIndex");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownClassIndex);
    }
  }

  TEST_CASE("mean absolute error") {
    CHECK(mean_absolute_error(std::vector<int>{5}, std::vector<int>{5}) == 0.0);
    CHECK(mean_absolute_error(std::vector<int>{3, 8}, std::vector<int>{5, 8}) == doctest::Approx(1.0));
  }
}
