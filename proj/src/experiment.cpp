#include "storygraph/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "storygraph/binary_io.hpp"
#include "storygraph/error.hpp"
#include "storygraph/random.hpp"

namespace storygraph {
namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; the first exception in
// index order is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(jobs, n); ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

template <typename Fn>
auto with_project_context(const std::string& project, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), project + ": " + e.what());
  }
}

std::vector<PreparedProject> prepare_all(const ExperimentConfig& config, const PosTagger& tagger) {
  std::vector<PreparedProject> out;
  for (const auto& p : config.selected_projects()) {
    out.push_back(with_project_context(p, [&] { return prepare_project(config, p, &tagger); }));
  }
  return out;
}

std::unordered_set<std::string> token_union(const std::vector<PreparedProject>& projects) {
  std::unordered_set<std::string> tokens;
  for (const auto& p : projects) {
    for (const auto& d : p.documents) tokens.insert(d.tokens.begin(), d.tokens.end());
  }
  return tokens;
}

LexiconTagger make_tagger(const ExperimentConfig& config) {
  LexiconTagger tagger;
  if (config.lexicon_path) tagger.load_lexicon(*config.lexicon_path);
  return tagger;
}

std::optional<double> mean_of(const std::vector<ProjectResult>& rows,
                              std::optional<double> ProjectResult::*field) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.*field) {
      total += *(r.*field);
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return total / static_cast<double>(n);
}

std::string cell_percent(std::optional<double> v) { return v ? format_percent(*v) : "-"; }
std::string cell_fixed(std::optional<double> v) { return v ? format_fixed(*v, 2) : "-"; }

}  // namespace

std::string_view model_selection_name(ModelSelection m) noexcept {
  switch (m) {
    case ModelSelection::Gnn: return "gnn";
    case ModelSelection::TfidfRf: return "tfidf-rf";
    case ModelSelection::Both: return "both";
  }
  return "?";
}

ModelSelection parse_model_selection(std::string_view name) {
  if (name == "gnn") return ModelSelection::Gnn;
  if (name == "tfidf-rf" || name == "rf") return ModelSelection::TfidfRf;
  if (name == "both") return ModelSelection::Both;
  fail(ErrorCode::InvalidArgument, "unknown model selection '" + std::string(name) + "'");
}

std::string_view task_name(Task t) noexcept {
  return t == Task::LevelClassification ? "classify" : "regress";
}

Task parse_task(std::string_view name) {
  if (name == "classify" || name == "classification") return Task::LevelClassification;
  if (name == "regress" || name == "regression") return Task::StoryPointRegression;
  fail(ErrorCode::InvalidArgument, "unknown task '" + std::string(name) + "'");
}

std::vector<std::string> ExperimentConfig::selected_projects() const {
  if (!projects.empty()) return projects;
  return {kProjects.begin(), kProjects.end()};
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
  std::vector<std::string> ws;
  for (auto w : windows) ws.push_back(std::to_string(w));
  const auto& t = train;
  return {
      {"seed", std::to_string(seed)},
      {"projects", join(selected_projects(), ",")},
      {"models", std::string(model_selection_name(models))},
      {"task", std::string(task_name(task))},
      {"text_mode", std::string(text_mode_name(text_mode))},
      {"window", std::to_string(t.window)},
      {"sweep_windows", join(ws, ",")},
      {"min_edge_frequency", std::to_string(t.min_edge_frequency)},
      {"batch_size", std::to_string(t.batch_size)},
      {"dropout", format_fixed(t.dropout, 4)},
      {"optimizer", "adam(lazy-sparse)"},
      {"learning_rate", format_fixed(t.learning_rate, 6)},
      {"weight_decay", format_fixed(t.weight_decay, 6)},
      {"max_epochs", std::to_string(t.max_epochs)},
      {"patience", std::to_string(t.patience)},
      {"message_rounds", std::to_string(t.rounds)},
      {"split", "test=0.20 validation=" + format_fixed(t.validation_fraction, 2) + "_of_rest"},
      {"embedding_dim", std::to_string(embedding_dim)},
      {"vectors", vectors_path ? vectors_path->filename().string() : "none"},
      {"oov_init", "uniform[-0.01,0.01]"},
      {"tokenizer", "lowercase-alnum(internal-hyphen-apostrophe)"},
      {"tfidf", "ngrams=1-4 idf=ln((1+N)/(1+df))+1 l2"},
      {"forest", "trees=" + std::to_string(forest.trees) +
                     " max_depth=" + (forest.max_depth ? std::to_string(forest.max_depth) : "none") +
                     " min_leaf=" + std::to_string(forest.min_samples_leaf) +
                     " max_features=" +
                     (forest.max_features ? std::to_string(forest.max_features) : "sqrt|third")},
  };
}

std::filesystem::path project_file(const std::filesystem::path& data_dir, const std::string& project) {
  for (const char* ext : {".csv", ".tsv", ".txt"}) {
    auto p = data_dir / (project + ext);
    if (std::filesystem::exists(p)) return p;
  }
  return data_dir / (project + ".csv");
}

PreparedProject prepare_project(const ExperimentConfig& config, const std::string& project,
                                const PosTagger* tagger) {
  PreparedProject p;
  p.name = project;
  const auto issues = load_issues(project_file(config.data_dir, project), config.csv, &p.load, project);
  p.documents = make_documents(issues, config.text_mode, tagger, &p.load);
  p.split = split_dataset(p.documents, derive_seed(config.seed, project, "split"),
                          config.train.validation_fraction);
  p.split_hash = split_fingerprint(p.split);
  return p;
}

PretrainedVectors load_vectors_for(const ExperimentConfig& config,
                                   const std::unordered_set<std::string>& needed) {
  if (!config.vectors_path) {
    PretrainedVectors empty;
    empty.dim = config.embedding_dim;
    return empty;
  }
  return load_pretrained_vectors(*config.vectors_path, config.embedding_dim, &needed);
}

GnnOutcome run_gnn(const std::string& project, const DatasetSplit& split,
                   const PretrainedVectors& pretrained, const ExperimentConfig& config,
                   ClassMode mode) {
  return with_project_context(project, [&] {
    GnnOutcome out;
    auto vb = build_vocab(split.train, pretrained, derive_seed(config.seed, project, "embeddings"),
                          config.embedding_dim);
    out.oov_rate = vb.table.oov_rate();
    const auto train_docs = vb.vocabulary.encode(split.train);
    const auto val_docs = vb.vocabulary.encode(split.validation);
    const auto test_docs = vb.vocabulary.encode(split.test);

    const auto& tc = config.train;
    EdgeTable edges(count_cooccurrences(train_docs, tc.window), tc.min_edge_frequency, tc.window);
    out.dedicated_edges = edges.dedicated_edges();
    auto train_graphs = build_graphs(train_docs, tc.window, edges);
    auto val_graphs = build_graphs(val_docs, tc.window, edges);
    auto test_graphs = build_graphs(test_docs, tc.window, edges);

    std::vector<int> class_values;
    std::size_t classes = kLevelCount;
    if (mode == ClassMode::StoryPointLabels) {
      std::set<int> distinct;
      for (const auto& d : split.train) distinct.insert(d.story_point);
      class_values.assign(distinct.begin(), distinct.end());
      classes = class_values.size();
      auto relabel = [&](std::vector<DocumentGraph>& graphs) {
        for (auto& g : graphs) {
          auto it = std::lower_bound(class_values.begin(), class_values.end(), g.raw_story_point);
          g.label = it != class_values.end() && *it == g.raw_story_point
                        ? static_cast<int>(it - class_values.begin())
                        : -1;  // unseen story point: never an exact match
        }
      };
      relabel(train_graphs);
      relabel(val_graphs);
      relabel(test_graphs);
    }

    auto params = init_parameters(vb.table, edges.parameter_count(), classes,
                                  derive_seed(config.seed, project, "gnn-init"), tc.rounds);
    TrainConfig run_config = tc;
    run_config.class_mode = mode;
    run_config.seed = derive_seed(config.seed, project, "gnn-train");
    out.training = train(std::move(params), train_graphs, val_graphs, run_config, class_values);
    out.test = evaluate(out.training.params, test_graphs, class_values);
    out.stats = graph_stats(project, train_graphs, out.training.seconds);

    out.model.params = out.training.params;
    out.model.window = tc.window;
    out.model.min_edge_frequency = tc.min_edge_frequency;
    out.model.class_mode = mode;
    out.model.text_mode = config.text_mode;
    out.model.project = project;
    out.model.vocabulary = std::move(vb.vocabulary);
    out.model.edges = std::move(edges);
    out.model.class_values = std::move(class_values);
    return out;
  });
}

BaselineOutcome run_baseline(const std::string& project, const DatasetSplit& split,
                             const ExperimentConfig& config, ForestTask task) {
  return with_project_context(project, [&] {
    BaselineOutcome out;
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::vector<std::string>> fit_docs;
    std::vector<double> targets;
    for (const auto* part : {&split.train, &split.validation}) {
      for (const auto& d : *part) {
        fit_docs.push_back(d.tokens);
        targets.push_back(task == ForestTask::Classify ? static_cast<double>(d.level)
                                                       : static_cast<double>(d.story_point));
      }
    }
    out.model.tfidf = tfidf_fit(fit_docs);
    out.features = out.model.tfidf.feature_count();
    std::vector<SparseVector> x;
    x.reserve(fit_docs.size());
    for (const auto& d : fit_docs) x.push_back(out.model.tfidf.transform(d));
    ForestConfig fc = config.forest;
    fc.seed = derive_seed(config.seed, project, "forest");
    out.model.forest = rf_fit(x, targets, out.features, fc, task,
                              task == ForestTask::Classify ? kLevelCount : 0);
    out.seconds = seconds_since(start);

    std::size_t correct = 0;
    double abs_err = 0.0;
    for (const auto& d : split.test) {
      const auto v = out.model.tfidf.transform(d.tokens);
      if (task == ForestTask::Classify) {
        if (rf_predict_class(out.model.forest, v) == static_cast<int>(d.level)) ++correct;
      } else {
        abs_err += std::abs(rf_predict_value(out.model.forest, v) - d.story_point);
      }
    }
    const auto n = static_cast<double>(std::max<std::size_t>(split.test.size(), 1));
    out.accuracy = static_cast<double>(correct) / n;
    out.mae = abs_err / n;
    return out;
  });
}

namespace {

EvalReport run_models(const ExperimentConfig& config, Task task) {
  const auto tagger = make_tagger(config);
  auto prepared = prepare_all(config, tagger);
  const bool use_gnn = config.models != ModelSelection::TfidfRf;
  const bool use_rf = config.models != ModelSelection::Gnn;
  PretrainedVectors vectors;
  if (use_gnn) vectors = load_vectors_for(config, token_union(prepared));

  EvalReport report;
  report.task = task;
  report.config_echo = config.echo();
  report.rows.resize(prepared.size());
  parallel_for(prepared.size(), config.jobs, [&](std::size_t i) {
    const auto& p = prepared[i];
    auto& row = report.rows[i];
    row.project = p.name;
    row.split_hash = p.split_hash;
    row.test_size = p.split.test.size();
    row.load = p.load;
    if (use_gnn) {
      const auto mode =
          task == Task::LevelClassification ? ClassMode::Level : ClassMode::StoryPointLabels;
      auto g = run_gnn(p.name, p.split, vectors, config, mode);
      if (task == Task::LevelClassification) {
        row.gnn_accuracy = g.test.accuracy;
      } else {
        row.gnn_mae = g.test.mae;
      }
      row.stats = g.stats;
      row.gnn_seconds = g.training.seconds;
      row.oov_rate = g.oov_rate;
      if (config.save_models) {
        const auto dir = config.output_dir / "models";
        save_model(dir / (p.name + "." + std::string(task_name(task)) + ".gnn"), g.model);
      }
    }
    if (use_rf) {
      const auto ft = task == Task::LevelClassification ? ForestTask::Classify : ForestTask::Regress;
      auto b = run_baseline(p.name, p.split, config, ft);
      if (task == Task::LevelClassification) {
        row.rf_accuracy = b.accuracy;
      } else {
        row.rf_mae = b.mae;
      }
      row.rf_seconds = b.seconds;
      if (config.save_models) {
        const auto dir = config.output_dir / "models";
        save_baseline(dir / (p.name + "." + std::string(task_name(task)) + ".rf"), b.model);
      }
    }
  });
  return report;
}

}  // namespace

EvalReport run_classification(const ExperimentConfig& config) {
  return run_models(config, Task::LevelClassification);
}

EvalReport run_regression(const ExperimentConfig& config) {
  return run_models(config, Task::StoryPointRegression);
}

EvalReport run_stats(const ExperimentConfig& config) {
  const auto tagger = make_tagger(config);
  auto prepared = prepare_all(config, tagger);
  EvalReport report;
  report.config_echo = config.echo();
  report.rows.resize(prepared.size());
  parallel_for(prepared.size(), config.jobs, [&](std::size_t i) {
    const auto& p = prepared[i];
    auto& row = report.rows[i];
    row.project = p.name;
    row.split_hash = p.split_hash;
    row.test_size = p.split.test.size();
    row.load = p.load;
    row.stats = with_project_context(p.name, [&] {
      PretrainedVectors none;
      none.dim = config.embedding_dim;
      // Stats only need ids; a zero-width table avoids allocating embeddings.
      auto vb = build_vocab(p.split.train, none, 0, 0);
      const auto docs = vb.vocabulary.encode(p.split.train);
      const auto& tc = config.train;
      EdgeTable edges(count_cooccurrences(docs, tc.window), tc.min_edge_frequency, tc.window);
      const auto graphs = build_graphs(docs, tc.window, edges);
      return graph_stats(p.name, graphs, 0.0);
    });
  });
  return report;
}

ReportTable EvalReport::accuracy_table() const {
  ReportTable t;
  t.title = "story point level classification accuracy";
  t.comments = config_echo;
  t.columns = {"No", "Software", "TFIDF-RF", "GNN"};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    t.rows.push_back({std::to_string(i + 1), rows[i].project, cell_percent(rows[i].rf_accuracy),
                      cell_percent(rows[i].gnn_accuracy)});
  }
  t.rows.push_back({"", "Average", cell_percent(mean_of(rows, &ProjectResult::rf_accuracy)),
                    cell_percent(mean_of(rows, &ProjectResult::gnn_accuracy))});
  for (const auto& r : rows) t.comments.emplace_back("split_hash." + r.project, hex(r.split_hash));
  return t;
}

ReportTable EvalReport::regression_table() const {
  ReportTable t;
  t.title = "story point estimation mean absolute error";
  t.comments = config_echo;
  t.columns = {"No", "Software", "TFIDF-RFR", "GNN"};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    t.rows.push_back({std::to_string(i + 1), rows[i].project, cell_fixed(rows[i].rf_mae),
                      cell_fixed(rows[i].gnn_mae)});
  }
  t.rows.push_back({"", "Average", cell_fixed(mean_of(rows, &ProjectResult::rf_mae)),
                    cell_fixed(mean_of(rows, &ProjectResult::gnn_mae))});
  for (const auto& r : rows) t.comments.emplace_back("split_hash." + r.project, hex(r.split_hash));
  return t;
}

ReportTable EvalReport::stats_table(bool with_time) const {
  ReportTable t;
  t.title = "scale of graphs extracted from training data";
  t.comments = config_echo;
  t.comments.emplace_back("edges", "distinct ordered word pairs before thresholding");
  t.columns = {"Project", "Size", "Nodes", "Edges", "TrainTime"};
  for (const auto& r : rows) {
    if (!r.stats) continue;
    const auto& s = *r.stats;
    t.rows.push_back({r.project, std::to_string(s.training_size), std::to_string(s.nodes),
                      std::to_string(s.edges),
                      with_time && r.gnn_seconds > 0 ? format_fixed(s.train_seconds, 1) : "NA"});
  }
  return t;
}

ReportTable EvalReport::timing_table() const {
  ReportTable t;
  t.title = "wall-clock training seconds";
  t.columns = {"Project", "GNN", "TFIDF-RF"};
  double gnn = 0.0;
  double rf = 0.0;
  for (const auto& r : rows) {
    t.rows.push_back({r.project, format_fixed(r.gnn_seconds, 2), format_fixed(r.rf_seconds, 2)});
    gnn += r.gnn_seconds;
    rf += r.rf_seconds;
  }
  t.rows.push_back({"Total", format_fixed(gnn, 2), format_fixed(rf, 2)});
  return t;
}

SweepReport run_window_sweep(const ExperimentConfig& config, bool train_models) {
  const auto tagger = make_tagger(config);
  auto prepared = prepare_all(config, tagger);
  PretrainedVectors vectors;
  if (train_models) vectors = load_vectors_for(config, token_union(prepared));

  SweepReport report;
  report.config_echo = config.echo();
  const std::size_t nw = config.windows.size();
  report.rows.resize(prepared.size() * nw);
  parallel_for(report.rows.size(), config.jobs, [&](std::size_t i) {
    const auto& p = prepared[i / nw];
    const auto w = config.windows[i % nw];
    auto& row = report.rows[i];
    row.project = p.name;
    row.window = w;
    ExperimentConfig local = config;
    local.train.window = w;
    if (train_models) {
      auto g = run_gnn(p.name, p.split, vectors, local, ClassMode::Level);
      row.edges = g.stats.edges;
      row.undirected_edges = g.stats.undirected_edges;
      row.accuracy = g.test.accuracy;
    } else {
      with_project_context(p.name, [&] {
        PretrainedVectors none;
        auto vb = build_vocab(p.split.train, none, 0, 0);
        const auto docs = vb.vocabulary.encode(p.split.train);
        EdgeTable edges(count_cooccurrences(docs, w), local.train.min_edge_frequency, w);
        row.edges = edges.distinct_pairs();
        row.undirected_edges = edges.distinct_undirected_pairs();
        return 0;
      });
    }
  });
  return report;
}

ReportTable SweepReport::edges_table() const {
  ReportTable t;
  t.title = "distinct edges per sliding window";
  t.comments = config_echo;
  std::vector<std::string> projects;
  std::vector<std::size_t> windows;
  std::map<std::pair<std::size_t, std::string>, std::size_t> edges;
  for (const auto& r : rows) {
    if (std::find(projects.begin(), projects.end(), r.project) == projects.end()) projects.push_back(r.project);
    if (std::find(windows.begin(), windows.end(), r.window) == windows.end()) windows.push_back(r.window);
    edges[{r.window, r.project}] = r.edges;
  }
  t.columns = {"window"};
  t.columns.insert(t.columns.end(), projects.begin(), projects.end());
  for (auto w : windows) {
    std::vector<std::string> line{"w=" + std::to_string(w)};
    for (const auto& p : projects) line.push_back(std::to_string(edges[{w, p}]));
    t.rows.push_back(std::move(line));
  }
  return t;
}

ReportTable SweepReport::accuracy_table() const {
  ReportTable t;
  t.title = "window sensitivity";
  t.comments = config_echo;
  t.columns = {"project", "window", "edges", "undirected_edges", "accuracy"};
  for (const auto& r : rows) {
    t.rows.push_back({r.project, std::to_string(r.window), std::to_string(r.edges),
                      std::to_string(r.undirected_edges),
                      r.accuracy ? format_fixed(100.0 * *r.accuracy, 2) : "NA"});
  }
  return t;
}

std::filesystem::path write_experiment(const ExperimentConfig& config, const std::string& name,
                                       const std::vector<std::pair<std::string, ReportTable>>& tables) {
  const auto dir = config.output_dir / name;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  const std::string ext = config.format == ReportFormat::Tsv ? ".tsv" : ".txt";
  for (const auto& [file, table] : tables) emit_report(table, config.format, dir / (file + ext));
  std::ostringstream snapshot;
  for (const auto& [k, v] : config.echo()) snapshot << k << " = " << v << '\n';
  write_file_bytes(dir / "config.ini", snapshot.str());
  return dir;
}

}  // namespace storygraph
