#include <sstream>

#include "doctest.h"
#include "storygraph/error.hpp"
#include "storygraph/experiment.hpp"
#include "support/synthetic.hpp"

using namespace storygraph;

namespace {

const std::vector<std::string> kTwo{"bamboo", "clover"};

std::filesystem::path synthetic_data() {
  static const auto dir = [] {
    auto d = testing::fresh_temp_dir("experiment_data");
    testing::write_synthetic_dataset(d, kTwo, 120, 5);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("report rendering") {
    ReportTable t;
    t.title = "x";
    t.comments = {{"seed", "42"}};
    t.columns = {"No", "Software"};
    CHECK(t.render(ReportFormat::Tsv) == "# x\n# seed=42\nNo\tSoftware\n");
    t.rows.push_back({"1", "bamboo"});
    CHECK(t.render(ReportFormat::Tsv) == "# x\n# seed=42\nNo\tSoftware\n1\tbamboo\n");
    const auto text = t.render(ReportFormat::Text);
    CHECK(text.find("| No | Software |") != std::string::npos);
    CHECK(text.find("| 1  | bamboo   |") != std::string::npos);
    CHECK(format_percent(0.8906) == "89.06%");
  }

  TEST_CASE("empty report is header only") {
    EvalReport r;
    const auto t = r.stats_table(false);
    CHECK(t.columns == std::vector<std::string>{"Project", "Size", "Nodes", "Edges", "TrainTime"});
    CHECK(t.rows.empty());
    const auto a = r.accuracy_table();
    CHECK(a.columns == std::vector<std::string>{"No", "Software", "TFIDF-RF", "GNN"});
  }

  TEST_CASE("parsers") {
    CHECK(parse_model_selection("tfidf-rf") == ModelSelection::TfidfRf);
    CHECK(parse_task("regress") == Task::StoryPointRegression);
    CHECK(parse_text_mode("verb-noun") == TextMode::VerbNoun);
    CHECK_THROWS_AS(parse_task("nope"), Error);
  }

  TEST_CASE("split is shared across models and modes") {
    auto c = testing::quick_config(synthetic_data(), testing::fresh_temp_dir("exp_split"), kTwo);
    const auto a = prepare_project(c, "bamboo");
    c.text_mode = TextMode::VerbNoun;
    LexiconTagger tagger;
    const auto b = prepare_project(c, "bamboo", &tagger);
    CHECK(a.split.train.size() + a.split.validation.size() + a.split.test.size() == 120);
    CHECK(a.load.skipped_story_point == 2);  // "abc" and empty
    std::vector<std::string> ids_a, ids_b;
    for (const auto& d : a.split.test) ids_a.push_back(d.doc_id);
    for (const auto& d : b.split.test) ids_b.push_back(d.doc_id);
    CHECK(ids_a == ids_b);
  }

  TEST_CASE("classification and regression run end to end") {
    const auto c = testing::quick_config(synthetic_data(), testing::fresh_temp_dir("exp_run"), kTwo);
    const auto cls = run_classification(c);
    REQUIRE(cls.rows.size() == 2);
    for (const auto& r : cls.rows) {
      REQUIRE(r.gnn_accuracy);
      REQUIRE(r.rf_accuracy);
      CHECK(*r.rf_accuracy > 0.5);
      CHECK(r.stats);
    }
    const auto table = cls.accuracy_table();
    CHECK(table.rows.size() == 3);
    CHECK(table.rows.back()[1] == "Average");

    const auto reg = run_regression(c);
    for (const auto& r : reg.rows) {
      REQUIRE(r.gnn_mae);
      REQUIRE(r.rf_mae);
      CHECK(*r.gnn_mae >= 0.0);
    }
  }

  TEST_CASE("reruns produce identical report files") {
    const auto out1 = testing::fresh_temp_dir("exp_det1");
    const auto out2 = testing::fresh_temp_dir("exp_det2");
    for (const auto& out : {out1, out2}) {
      auto c = testing::quick_config(synthetic_data(), out, kTwo);
      c.jobs = out == out1 ? 1 : 2;
      const auto r = run_classification(c);
      write_experiment(c, "classification", {{"accuracy", r.accuracy_table()}, {"graph_stats", r.stats_table(false)}});
    }
    auto a = testing::read_tree(out1);
    auto b = testing::read_tree(out2);
    // Only the echoed jobs setting may differ.
    for (auto* files : {&a, &b}) {
      for (auto& [name, text] : *files) {
        std::string cleaned;
        std::istringstream in(text);
        for (std::string line; std::getline(in, line);) {
          if (line.find("jobs") == std::string::npos) cleaned += line + "\n";
        }
        text = cleaned;
      }
    }
    CHECK(a == b);
  }

  TEST_CASE("stats and sweep") {
    auto c = testing::quick_config(synthetic_data(), testing::fresh_temp_dir("exp_stats"), kTwo);
    const auto stats = run_stats(c);
    REQUIRE(stats.rows.size() == 2);
    CHECK(stats.rows[0].stats->training_size == prepare_project(c, stats.rows[0].project).split.train.size());
    CHECK(stats.rows[0].stats->nodes > 10);

    c.windows = {1, 2, 5, 10};
    const auto sweep = run_window_sweep(c, false);
    REQUIRE(sweep.rows.size() == 8);
    for (std::size_t i = 1; i < 4; ++i) CHECK(sweep.rows[i].edges > sweep.rows[i - 1].edges);
    const auto edges = sweep.edges_table();
    CHECK(edges.columns == std::vector<std::string>{"window", "bamboo", "clover"});
    CHECK(edges.rows.size() == 4);
  }

  TEST_CASE("missing project file") {
    auto c = testing::quick_config(synthetic_data(), testing::fresh_temp_dir("exp_missing"), {"mesos"});
    try {
      prepare_project(c, "mesos");
      FAIL("expected FileNotFound");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::FileNotFound);
    }
  }
}
