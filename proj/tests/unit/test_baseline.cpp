#include <cmath>

#include "doctest.h"
#include "storygraph/baseline.hpp"
#include "storygraph/error.hpp"
#include "support/synthetic.hpp"

using namespace storygraph;

namespace {

SparseVector dense_to_sparse(const std::vector<double>& x) {
  SparseVector v;
  for (std::uint32_t f = 0; f < x.size(); ++f) {
    if (x[f] != 0.0) v.entries.push_back({f, x[f]});
  }
  return v;
}

double weighted_gini(const std::vector<int>& labels, std::size_t classes) {
  if (labels.empty()) return 0.0;
  std::vector<double> h(classes, 0.0);
  for (int y : labels) h[static_cast<std::size_t>(y)] += 1.0;
  const double n = static_cast<double>(labels.size());
  double g = 1.0;
  for (double c : h) g -= (c / n) * (c / n);
  return n * g;
}

// Lowest W*gini over every (feature, threshold) that separates the samples;
// infinity when no feature varies.
double brute_force_best(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                        std::size_t classes) {
  double best = INFINITY;
  for (std::size_t f = 0; f < x[0].size(); ++f) {
    for (const auto& pivot : x) {
      std::vector<int> l, r;
      for (std::size_t i = 0; i < x.size(); ++i) (x[i][f] <= pivot[f] ? l : r).push_back(y[i]);
      if (l.empty() || r.empty()) continue;
      best = std::min(best, weighted_gini(l, classes) + weighted_gini(r, classes));
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("baseline") {
  TEST_CASE("tfidf on a two document corpus") {
    const std::vector<std::vector<std::string>> docs{{"a", "b"}, {"a", "c"}};
    const auto m = tfidf_fit(docs);
    CHECK(m.feature_count() == 5);  // a, a b, a c, b, c
    CHECK(m.ngram(0) == "a");
    CHECK(m.ngram(1) == "a b");
    CHECK(m.idf(static_cast<std::uint32_t>(m.feature("a"))) == doctest::Approx(1.0));
    CHECK(m.idf(static_cast<std::uint32_t>(m.feature("b"))) == doctest::Approx(1.4054651081081644));
    const auto v = m.transform(std::vector<std::string>{"a", "b"});
    REQUIRE(v.entries.size() == 3);
    CHECK(v.value(static_cast<std::uint32_t>(m.feature("a"))) == doctest::Approx(0.4494364165239821));
    CHECK(v.value(static_cast<std::uint32_t>(m.feature("a b"))) == doctest::Approx(0.6316672017376245));
    CHECK(v.value(static_cast<std::uint32_t>(m.feature("b"))) == doctest::Approx(0.6316672017376245));
    CHECK(v.norm() == doctest::Approx(1.0));
    CHECK(m.feature("zzz") == -1);
  }

  TEST_CASE("tfidf edge cases") {
    const std::vector<std::vector<std::string>> docs{{"a", "b"}, {"a", "c"}};
    const auto m = tfidf_fit(docs);
    CHECK(m.transform_text("").empty());
    CHECK(m.transform_text("x y z").empty());
    CHECK_THROWS_AS(tfidf_fit(std::vector<std::vector<std::string>>{}), Error);
    CHECK(ngrams(std::vector<std::string>{"a", "b", "c"}, 1, 2) ==
          std::vector<std::string>{"a", "b", "c", "a b", "b c"});
  }

  TEST_CASE("tfidf vectors have unit norm") {
    Rng rng(8);
    std::vector<std::vector<std::string>> docs;
    for (int i = 0; i < 30; ++i) {
      std::vector<std::string> d;
      const auto n = 1 + uniform_index(rng, 12);
      for (std::size_t k = 0; k < n; ++k) d.push_back(std::string(1, static_cast<char>('a' + uniform_index(rng, 6))));
      docs.push_back(d);
    }
    const auto m = tfidf_fit(docs);
    for (const auto& d : docs) {
      const auto v = m.transform(d);
      CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
      for (std::size_t i = 1; i < v.entries.size(); ++i) CHECK(v.entries[i - 1].first < v.entries[i].first);
    }
  }

  TEST_CASE("root split matches a brute-force gini search") {
    Rng rng(31);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t n = 2 + uniform_index(rng, 7);
      const std::size_t features = 1 + uniform_index(rng, 3);
      const std::size_t classes = 2 + uniform_index(rng, 2);
      std::vector<std::vector<double>> x(n, std::vector<double>(features));
      std::vector<int> y(n);
      std::vector<SparseVector> xs;
      std::vector<double> targets;
      for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : x[i]) v = static_cast<double>(static_cast<int>(uniform_index(rng, 6)) - 2);
        y[i] = static_cast<int>(uniform_index(rng, classes));
        xs.push_back(dense_to_sparse(x[i]));
        targets.push_back(y[i]);
      }
      ForestConfig c;
      c.trees = 1;
      c.bootstrap = false;
      c.max_depth = 1;
      c.max_features = features;
      c.seed = static_cast<std::uint64_t>(trial);
      const auto forest = rf_fit(xs, targets, features, c, ForestTask::Classify, classes);
      const auto& root = forest.trees[0].nodes[0];
      const double oracle = brute_force_best(x, y, classes);
      const bool pure = weighted_gini(y, classes) < 1e-12;
      if (root.feature < 0) {
        CHECK((pure || std::isinf(oracle)));
        continue;
      }
      std::vector<int> l, r;
      for (std::size_t i = 0; i < n; ++i) {
        (x[i][static_cast<std::size_t>(root.feature)] <= root.threshold ? l : r).push_back(y[i]);
      }
      CHECK(weighted_gini(l, classes) + weighted_gini(r, classes) == doctest::Approx(oracle).epsilon(1e-12));
    }
  }

  TEST_CASE("separable one-feature set is learned exactly") {
    std::vector<SparseVector> xs;
    std::vector<double> y;
    for (int i = 0; i < 10; ++i) {
      const double v = i < 5 ? -1.0 - i : 1.0 + i;
      xs.push_back(SparseVector{{{0, v}}});
      y.push_back(i < 5 ? 0 : 1);
    }
    ForestConfig c;
    c.trees = 10;
    const auto f = rf_fit(xs, y, 1, c, ForestTask::Classify, 2);
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(rf_predict_class(f, xs[i]) == static_cast<int>(y[i]));
  }

  TEST_CASE("constant target and determinism") {
    Rng rng(4);
    std::vector<SparseVector> xs;
    std::vector<double> y;
    for (int i = 0; i < 20; ++i) {
      std::vector<double> d(5);
      for (auto& v : d) v = uniform_unit(rng) < 0.5 ? 0.0 : uniform_unit(rng);
      xs.push_back(dense_to_sparse(d));
      y.push_back(2);
    }
    ForestConfig c;
    c.trees = 5;
    const auto f = rf_fit(xs, y, 5, c, ForestTask::Classify, 4);
    for (const auto& x : xs) CHECK(rf_predict_class(f, x) == 2);

    for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<double>(i % 3);
    const auto a = rf_fit(xs, y, 5, c, ForestTask::Classify, 3);
    const auto b = rf_fit(xs, y, 5, c, ForestTask::Classify, 3);
    CHECK(serialize_baseline({tfidf_fit(std::vector<std::vector<std::string>>{{"x"}}), a}) ==
          serialize_baseline({tfidf_fit(std::vector<std::vector<std::string>>{{"x"}}), b}));
    CHECK_THROWS_AS(rf_fit(std::vector<SparseVector>{xs[0]}, std::vector<double>{0}, 5, c,
                           ForestTask::Classify, 2),
                    Error);
  }

  TEST_CASE("voting and averaging") {
    CHECK(majority_vote(std::vector<int>{1, 1, 2}, 3) == 1);
    CHECK(majority_vote(std::vector<int>{2, 0}, 3) == 0);
    Forest f;
    f.task = ForestTask::Regress;
    f.features = 1;
    for (double leaf : {2.0, 4.0}) {
      DecisionTree t;
      TreeNode n;
      n.value = {leaf};
      t.nodes.push_back(n);
      f.trees.push_back(t);
    }
    CHECK(rf_predict_value(f, SparseVector{}) == doctest::Approx(3.0));
  }

  TEST_CASE("regression forest fits a step") {
    std::vector<SparseVector> xs;
    std::vector<double> y;
    for (int i = 0; i < 20; ++i) {
      xs.push_back(SparseVector{{{0, static_cast<double>(i + 1)}}});
      y.push_back(i < 10 ? 3.0 : 13.0);
    }
    ForestConfig c;
    c.trees = 20;
    const auto f = rf_fit(xs, y, 1, c, ForestTask::Regress);
    CHECK(rf_predict_value(f, xs[0]) == doctest::Approx(3.0).epsilon(0.2));
    CHECK(rf_predict_value(f, xs[19]) == doctest::Approx(13.0).epsilon(0.1));
  }

  TEST_CASE("baseline container round trip and corruption") {
    const std::vector<std::string> texts{"fix login page", "add export dialog", "rewrite engine core",
                                         "fix typo label", "migrate schema cluster"};
    BaselineModel m;
    m.tfidf = tfidf_fit_texts(texts);
    std::vector<SparseVector> xs;
    for (const auto& t : texts) xs.push_back(m.tfidf.transform_text(t));
    ForestConfig c;
    c.trees = 7;
    m.forest = rf_fit(xs, std::vector<double>{0, 1, 3, 0, 2}, m.tfidf.feature_count(), c,
                      ForestTask::Classify, 4);
    const auto dir = testing::fresh_temp_dir("baseline");
    save_baseline(dir / "rf.bin", m);
    const auto back = load_baseline(dir / "rf.bin");
    CHECK(serialize_baseline(back) == serialize_baseline(m));
    for (const auto& t : texts) {
      CHECK(rf_predict_class(back.forest, back.tfidf.transform_text(t)) ==
            rf_predict_class(m.forest, m.tfidf.transform_text(t)));
    }
    auto bytes = serialize_baseline(m);
    bytes.pop_back();
    try {
      deserialize_baseline(bytes);
      FAIL("expected CorruptFile");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::CorruptFile);
    }
  }
}
