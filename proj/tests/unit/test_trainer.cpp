#include <cmath>

#include "doctest.h"
#include "storygraph/trainer.hpp"
#include "support/synthetic.hpp"

using namespace storygraph;

namespace {

// Documents whose first token decides the class, so a model can learn them.
struct Toyset {
  ModelParameters params;
  std::vector<DocumentGraph> train, validation;
};

Toyset separable(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<TokenizedDocument> docs;
  for (std::size_t i = 0; i < n; ++i) {
    auto d = testing::random_document(rng, 8, 6);
    const int cls = static_cast<int>(i % 2);
    for (auto& t : d.tokens) t += 2;  // ids 3..8 are shared filler
    d.tokens.insert(d.tokens.begin(), static_cast<std::uint32_t>(1 + cls));
    d.level = static_cast<StoryPointLevel>(cls);
    docs.push_back(d);
  }
  const EdgeTable table(count_cooccurrences(docs, 2), 2, 2);
  Toyset s;
  auto graphs = build_graphs(docs, 2, table);
  s.validation.assign(graphs.begin(), graphs.begin() + static_cast<long>(n / 5));
  s.train.assign(graphs.begin() + static_cast<long>(n / 5), graphs.end());
  EmbeddingTable emb;
  emb.rows = 9;
  emb.dim = 4;
  emb.values.resize(36);
  for (auto& v : emb.values) v = uniform_real(rng, -0.5, 0.5);
  emb.provenance.assign(9, Provenance::Random);
  s.params = init_parameters(emb, table.parameter_count(), 2, seed);
  return s;
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("default hyperparameters") {
    const TrainConfig c;
    CHECK(c.window == 20);
    CHECK(c.batch_size == 32);
    CHECK(c.dropout == 0.5);
    CHECK(c.min_edge_frequency == 2);
    CHECK(parse_class_mode("story-point") == ClassMode::StoryPointLabels);
    CHECK(class_mode_name(ClassMode::Level) == "level");
  }

  TEST_CASE("init_parameters") {
    EmbeddingTable emb;
    emb.rows = 3;
    emb.dim = 2;
    emb.values = {0, 0, 1, 2, 3, 4};
    emb.provenance.assign(3, Provenance::Random);
    const auto p = init_parameters(emb, 5, 4, 1);
    CHECK(p.embeddings == emb.values);
    CHECK(p.edge_weights == std::vector<double>(5, 1.0));
    CHECK(p.gates == std::vector<double>(3, 0.0));
    CHECK(p.bias == std::vector<double>(4, 0.0));
    const double limit = std::sqrt(6.0 / 6.0);
    for (double w : p.classifier) CHECK(std::abs(w) <= limit);
    CHECK(init_parameters(emb, 5, 4, 1) == p);
  }

  TEST_CASE("first adam step moves each touched parameter by the learning rate") {
    ModelParameters p;
    p.vocab = 2;
    p.dim = 1;
    p.classes = 1;
    p.embeddings = {0.0, 1.0};
    p.edge_weights = {1.0};
    p.gates = {0.0, 0.0};
    p.classifier = {0.5};
    p.bias = {0.0};
    TrainConfig c;
    c.learning_rate = 0.01;
    c.weight_decay = 0.0;
    AdamOptimizer opt(p, c);
    Gradients g(p);
    g.embedding_row(1)[0] = 3.0;
    g.classifier()[0] = -2.0;
    const auto before = p;
    opt.step(p, g);
    CHECK(p.embeddings[1] == doctest::Approx(1.0 - 0.01).epsilon(1e-6));
    CHECK(p.classifier[0] == doctest::Approx(0.5 + 0.01).epsilon(1e-6));
    CHECK(p.embeddings[0] == before.embeddings[0]);  // untouched row
    CHECK(p.gates == before.gates);
  }

  TEST_CASE("learning rate zero leaves parameters unchanged") {
    auto s = separable(1, 40);
    TrainConfig c;
    c.learning_rate = 0.0;
    c.max_epochs = 3;
    c.batch_size = 8;
    const auto before = evaluate(s.params, s.validation);
    const auto r = train(s.params, s.train, s.validation, c);
    CHECK(r.params == s.params);
    for (const auto& e : r.log) CHECK(e.validation_accuracy == before.accuracy);
  }

  TEST_CASE("training is deterministic and learns a separable set") {
    auto s = separable(2, 100);
    TrainConfig c;
    c.learning_rate = 0.05;
    c.max_epochs = 60;
    c.batch_size = 8;
    c.dropout = 0.0;
    const auto a = train(s.params, s.train, s.validation, c);
    const auto b = train(s.params, s.train, s.validation, c);
    CHECK(a.params == b.params);
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].train_loss == b.log[i].train_loss);
    CHECK(evaluate(a.params, s.train).accuracy >= 0.95);
    CHECK(evaluate(a.params, s.validation).accuracy >= 0.9);
  }

  TEST_CASE("early stopping keeps the best epoch") {
    auto s = separable(3, 60);
    TrainConfig c;
    c.learning_rate = 0.05;
    c.max_epochs = 300;
    c.patience = 3;
    c.batch_size = 8;
    const auto r = train(s.params, s.train, s.validation, c);
    CHECK(r.log.size() < 300);
    CHECK(r.log.size() <= r.best_epoch + c.patience);
    REQUIRE(r.best_epoch > 0);
    CHECK(r.log[r.best_epoch - 1].improved);
    CHECK(evaluate(r.params, s.validation).accuracy == r.log[r.best_epoch - 1].validation_accuracy);
  }

  TEST_CASE("evaluate reports story point MAE") {
    auto s = separable(4, 20);
    const std::vector<int> values{3, 8};
    for (auto& g : s.validation) g.raw_story_point = values[static_cast<std::size_t>(g.label)];
    const auto r = evaluate(s.params, s.validation, values);
    double mae = 0;
    for (std::size_t i = 0; i < s.validation.size(); ++i) {
      mae += std::abs(values[static_cast<std::size_t>(r.predicted[i])] - s.validation[i].raw_story_point);
    }
    CHECK(r.mae == doctest::Approx(mae / static_cast<double>(s.validation.size())));
  }
}
