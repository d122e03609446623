#include <sstream>

#include "doctest.h"
#include "storygraph/embeddings.hpp"
#include "storygraph/error.hpp"

using namespace storygraph;

namespace {

std::string vector_line(const std::string& token, std::size_t n, double base) {
  std::ostringstream s;
  s << token;
  for (std::size_t i = 0; i < n; ++i) s << ' ' << base + 0.001 * static_cast<double>(i);
  return s.str();
}

}  // namespace

TEST_SUITE("embeddings") {
  TEST_CASE("parse 300-d lines and skip wrong arity") {
    std::istringstream in(vector_line("the", 300, 0.1) + "\n" + vector_line("bad", 299, 0.2) + "\n" +
                          vector_line("of", 300, -0.5) + "\n");
    const auto v = parse_pretrained_vectors(in, 300);
    CHECK(v.dim == 300);
    CHECK(v.vectors.size() == 2);
    CHECK(v.skipped_lines == 1);
    const auto* the = v.find("the");
    REQUIRE(the != nullptr);
    CHECK(the->size() == 300);
    CHECK((*the)[0] == doctest::Approx(0.1));
    CHECK(v.find("bad") == nullptr);
  }

  TEST_CASE("mostly wrong arity is a dimension mismatch") {
    std::istringstream in(vector_line("a", 100, 0.1) + "\n" + vector_line("b", 100, 0.1) + "\n");
    try {
      parse_pretrained_vectors(in, 300);
      FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
  }

  TEST_CASE("keep set bounds what is retained") {
    std::istringstream in(vector_line("a", 3, 0.1) + "\n" + vector_line("b", 3, 0.2) + "\n");
    const std::unordered_set<std::string> keep{"b"};
    const auto v = parse_pretrained_vectors(in, 3, &keep);
    CHECK(v.vectors.size() == 1);
    CHECK(v.find("b") != nullptr);
  }

  TEST_CASE("build_vocab mixes pretrained and random rows") {
    PretrainedVectors pre;
    pre.dim = 3;
    pre.vectors["a"] = {0.5f, -0.25f, 1.0f};
    const std::vector<TextDocument> docs{{"d", {"a", "b", "a"}, StoryPointLevel::Small, 1}};
    const auto vb = build_vocab(docs, pre, 11, 3);
    REQUIRE(vb.vocabulary.size() == 3);
    CHECK(vb.vocabulary.token(0) == kUnknownToken);
    const auto a = vb.vocabulary.id("a");
    const auto b = vb.vocabulary.id("b");
    CHECK(a == 1);
    CHECK(b == 2);
    CHECK(vb.vocabulary.count(a) == 2);
    CHECK(vb.table.row(a)[0] == 0.5);
    CHECK(vb.table.row(a)[1] == -0.25);
    for (double x : vb.table.row(b)) {
      CHECK(x >= -kOovInitRange);
      CHECK(x <= kOovInitRange);
    }
    for (double x : vb.table.row(0)) CHECK(x == 0.0);
    CHECK(vb.table.provenance[a] == Provenance::Pretrained);
    CHECK(vb.table.provenance[b] == Provenance::Random);
    CHECK(vb.table.oov_rate() == doctest::Approx(0.5));

    const auto again = build_vocab(docs, pre, 11, 3);
    CHECK(again.table.values == vb.table.values);
  }

  TEST_CASE("build_vocab errors") {
    PretrainedVectors none;
    CHECK_THROWS_AS(build_vocab(std::vector<TextDocument>{}, none, 1, 3), Error);
    PretrainedVectors pre;
    pre.dim = 4;
    pre.vectors["a"] = {1, 2, 3, 4};
    const std::vector<TextDocument> docs{{"d", {"a"}, StoryPointLevel::Small, 1}};
    try {
      build_vocab(docs, pre, 1, 3);
      FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
  }

  TEST_CASE("encode maps unseen tokens to unknown") {
    Vocabulary v;
    v.add("x");
    const auto doc = v.encode(TextDocument{"d", {"x", "y"}, StoryPointLevel::Medium, 8});
    CHECK(doc.tokens == std::vector<std::uint32_t>{1, kUnknownId});
    CHECK(doc.raw_story_point == 8);
    CHECK(doc.level == StoryPointLevel::Medium);
  }
}
