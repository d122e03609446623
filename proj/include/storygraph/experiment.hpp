#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "storygraph/baseline.hpp"
#include "storygraph/corpus.hpp"
#include "storygraph/embeddings.hpp"
#include "storygraph/graph.hpp"
#include "storygraph/model_io.hpp"
#include "storygraph/report.hpp"
#include "storygraph/trainer.hpp"

namespace storygraph {

enum class ModelSelection { Gnn, TfidfRf, Both };
enum class Task { LevelClassification, StoryPointRegression };

std::string_view model_selection_name(ModelSelection m) noexcept;
ModelSelection parse_model_selection(std::string_view name);
std::string_view task_name(Task t) noexcept;
Task parse_task(std::string_view name);

inline const std::vector<std::size_t> kDefaultSweepWindows = {2, 5, 10, 20, 50, 100};

struct ExperimentConfig {
  std::filesystem::path data_dir;
  std::optional<std::filesystem::path> vectors_path;
  std::optional<std::filesystem::path> lexicon_path;
  std::vector<std::string> projects;  // empty = all sixteen
  ModelSelection models = ModelSelection::Both;
  TextMode text_mode = TextMode::Raw;
  Task task = Task::LevelClassification;
  std::vector<std::size_t> windows = kDefaultSweepWindows;
  TrainConfig train;
  ForestConfig forest;
  std::size_t embedding_dim = kGloveDim;
  std::uint64_t seed = 42;  // master seed; per-project streams are derived
  std::filesystem::path output_dir = "out";
  ReportFormat format = ReportFormat::Tsv;
  bool record_timings = false;  // wall-clock columns make reports non-reproducible
  bool save_models = false;
  std::size_t jobs = 1;
  CsvFormat csv;

  std::vector<std::string> selected_projects() const;
  /// key=value echo embedded in report headers and the config snapshot.
  std::vector<std::pair<std::string, std::string>> echo() const;
};

/// Issues of one project turned into documents and split.
struct PreparedProject {
  std::string name;
  LoadReport load;
  std::vector<TextDocument> documents;
  DatasetSplit split;
  std::uint64_t split_hash = 0;
};

std::filesystem::path project_file(const std::filesystem::path& data_dir, const std::string& project);

/// The split seed depends only on the master seed and the project, so every
/// model and text mode sees the same partition.
PreparedProject prepare_project(const ExperimentConfig& config, const std::string& project,
                                const PosTagger* tagger = nullptr);

/// Loads the configured vector file keeping only tokens in `needed`, or an
/// empty table when no file is configured.
PretrainedVectors load_vectors_for(const ExperimentConfig& config,
                                   const std::unordered_set<std::string>& needed);

struct GnnOutcome {
  SavedModel model;
  TrainResult training;
  EvalResult test;
  GraphStats stats;
  double oov_rate = 0.0;
  std::size_t dedicated_edges = 0;
};

/// Vocabulary, edge table and graphs from the split, then training and test
/// evaluation. In story-point mode classes are the distinct training story
/// points in ascending order.
GnnOutcome run_gnn(const std::string& project, const DatasetSplit& split,
                   const PretrainedVectors& pretrained, const ExperimentConfig& config,
                   ClassMode mode);

struct BaselineOutcome {
  BaselineModel model;
  double accuracy = 0.0;
  double mae = 0.0;
  double seconds = 0.0;
  std::size_t features = 0;
};

/// TF-IDF (1-4 grams) + random forest, fitted on train and validation
/// documents, scored on test.
BaselineOutcome run_baseline(const std::string& project, const DatasetSplit& split,
                             const ExperimentConfig& config, ForestTask task);

struct ProjectResult {
  std::string project;
  std::uint64_t split_hash = 0;
  std::size_t test_size = 0;
  std::optional<double> gnn_accuracy;
  std::optional<double> rf_accuracy;
  std::optional<double> gnn_mae;
  std::optional<double> rf_mae;
  std::optional<GraphStats> stats;
  double gnn_seconds = 0.0;
  double rf_seconds = 0.0;
  double oov_rate = 0.0;
  LoadReport load;
};

struct EvalReport {
  Task task = Task::LevelClassification;
  std::vector<ProjectResult> rows;
  std::vector<std::pair<std::string, std::string>> config_echo;

  ReportTable accuracy_table() const;    // No / Software / TFIDF-RF / GNN
  ReportTable regression_table() const;  // No / Software / TFIDF-RFR / GNN
  ReportTable stats_table(bool with_time) const;  // Project / Size / Nodes / Edges / TrainTime
  ReportTable timing_table() const;
};

EvalReport run_classification(const ExperimentConfig& config);
EvalReport run_regression(const ExperimentConfig& config);

/// Graph scale only (no training): Size / Nodes / Edges per project.
EvalReport run_stats(const ExperimentConfig& config);

struct SweepRow {
  std::string project;
  std::size_t window = 0;
  std::size_t edges = 0;
  std::size_t undirected_edges = 0;
  std::optional<double> accuracy;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<std::pair<std::string, std::string>> config_echo;

  ReportTable edges_table() const;     // window x project edge counts
  ReportTable accuracy_table() const;  // long format for plotting
};

/// Distinct-edge counts per window; with `train_models` also GNN accuracy.
SweepReport run_window_sweep(const ExperimentConfig& config, bool train_models = true);

/// Writes <output_dir>/<name>/{tables..., config.ini}. Returns the directory.
std::filesystem::path write_experiment(const ExperimentConfig& config, const std::string& name,
                                       const std::vector<std::pair<std::string, ReportTable>>& tables);

}  // namespace storygraph
