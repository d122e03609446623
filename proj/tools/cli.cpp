#include "storygraph/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "storygraph/binary_io.hpp"
#include "storygraph/error.hpp"
#include "storygraph/experiment.hpp"
#include "storygraph/random.hpp"

namespace storygraph {
namespace {

struct Options {
  std::string data;
  std::string vectors;
  std::string lexicon;
  std::vector<std::string> projects;
  std::uint64_t seed = 42;
  std::size_t window = kDefaultWindow;
  std::size_t batch = 32;
  double dropout = 0.5;
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  std::size_t epochs = 300;
  std::size_t patience = 10;
  std::uint64_t k = kDefaultMinEdgeFrequency;
  std::size_t rounds = 1;
  double validation = kDefaultValidationFraction;
  std::size_t dim = kGloveDim;
  std::string text_mode = "raw";
  std::string task = "classify";
  std::string models = "both";
  std::string out = "out";
  std::string format = "tsv";
  bool timings = false;
  bool save_models = false;
  std::size_t jobs = 1;
  std::size_t trees = 100;
  std::size_t max_depth = 0;
  std::string model_path;
  std::vector<std::size_t> windows = kDefaultSweepWindows;
  bool no_train = false;
  bool train_for_time = false;
};

class DataDirMissing : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound: return 3;
    case ErrorCode::MalformedHeader:
    case ErrorCode::EmptyDataset:
    case ErrorCode::DatasetTooSmall:
    case ErrorCode::CorruptFile:
    case ErrorCode::VersionMismatch:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::EmptyTrainingSet:
    case ErrorCode::EmptyCorpus:
    case ErrorCode::DegenerateData: return 4;
    case ErrorCode::NonFiniteActivation: return 5;
    case ErrorCode::IoFailure: return 6;
    case ErrorCode::InvalidArgument: return 2;
    default: return 1;
  }
}

std::string quoted(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c == '\n' ? ' ' : c);
  }
  return out + "\"";
}

void add_data_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--data", o.data, "Dataset directory with one <project>.csv per project")
      ->envname("STORYGRAPH_DATA");
  cmd->add_option("--project", o.projects, "Project name(s); default all sixteen")->delimiter(',');
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--text-mode", o.text_mode, "raw | verb-noun")
      ->check(CLI::IsMember({"raw", "verb-noun"}));
  cmd->add_option("--lexicon", o.lexicon, "Extra word<TAB>TAG lexicon for the verb-noun filter");
  cmd->add_option("--validation", o.validation, "Validation fraction of the non-test documents");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--format", o.format, "Report format: tsv | text")
      ->check(CLI::IsMember({"tsv", "text"}));
  cmd->add_option("--jobs", o.jobs, "Projects processed in parallel");
}

void add_graph_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--window", o.window, "Sliding window offset w");
  cmd->add_option("--k", o.k, "Minimum co-occurrence count for a dedicated edge weight");
}

void add_model_options(CLI::App* cmd, Options& o) {
  add_graph_options(cmd, o);
  cmd->add_option("--vectors", o.vectors, "Pretrained word vectors (GloVe text format)");
  cmd->add_option("--dim", o.dim, "Embedding dimension");
  cmd->add_option("--batch", o.batch, "Mini-batch size");
  cmd->add_option("--dropout", o.dropout, "Dropout probability on node inputs");
  cmd->add_option("--lr", o.learning_rate, "Learning rate");
  cmd->add_option("--weight-decay", o.weight_decay, "L2 weight decay");
  cmd->add_option("--epochs", o.epochs, "Maximum epochs");
  cmd->add_option("--patience", o.patience, "Early-stopping patience in epochs");
  cmd->add_option("--rounds", o.rounds, "Message-passing rounds");
  cmd->add_option("--task", o.task, "classify (levels) | regress (story points as labels)")
      ->check(CLI::IsMember({"classify", "regress"}));
  cmd->add_flag("--timings", o.timings, "Record wall-clock times in reports (breaks byte-identical reruns)");
  cmd->add_flag("--save-models", o.save_models, "Write model files under <out>/models");
}

void add_forest_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--trees", o.trees, "Random forest size");
  cmd->add_option("--max-depth", o.max_depth, "Random forest depth limit (0 = none)");
}

ExperimentConfig to_config(const Options& o) {
  if (o.data.empty() || !std::filesystem::is_directory(o.data)) {
    throw DataDirMissing("dataset directory not found: " + (o.data.empty() ? "<unset>" : o.data));
  }
  ExperimentConfig c;
  c.data_dir = o.data;
  if (!o.vectors.empty()) c.vectors_path = o.vectors;
  if (!o.lexicon.empty()) c.lexicon_path = o.lexicon;
  c.projects = o.projects;
  c.models = parse_model_selection(o.models);
  c.text_mode = parse_text_mode(o.text_mode);
  c.task = parse_task(o.task);
  c.windows = o.windows;
  c.train.window = o.window;
  c.train.batch_size = o.batch;
  c.train.dropout = o.dropout;
  c.train.learning_rate = o.learning_rate;
  c.train.weight_decay = o.weight_decay;
  c.train.max_epochs = o.epochs;
  c.train.patience = o.patience;
  c.train.min_edge_frequency = o.k;
  c.train.rounds = o.rounds;
  c.train.validation_fraction = o.validation;
  c.train.seed = o.seed;
  c.forest.trees = o.trees;
  c.forest.max_depth = o.max_depth;
  c.embedding_dim = o.dim;
  c.seed = o.seed;
  c.output_dir = o.out;
  c.format = o.format == "text" ? ReportFormat::Text : ReportFormat::Tsv;
  c.record_timings = o.timings;
  c.save_models = o.save_models;
  c.jobs = std::max<std::size_t>(o.jobs, 1);
  for (const auto& p : c.projects) {
    if (!std::filesystem::exists(project_file(c.data_dir, p))) {
      fail(ErrorCode::FileNotFound, "no dataset file for project '" + p + "' in " + o.data);
    }
  }
  return c;
}

std::string single_project(const Options& o) {
  if (o.projects.size() != 1) {
    fail(ErrorCode::InvalidArgument, "exactly one --project is required for this command");
  }
  return o.projects.front();
}

void print_table(std::ostream& out, const ReportTable& t) { out << t.render(ReportFormat::Text); }

int cmd_prepare(const Options& o, std::ostream& out) {
  const auto config = to_config(o);
  LexiconTagger tagger;
  if (config.lexicon_path) tagger.load_lexicon(*config.lexicon_path);
  std::vector<PreparedProject> prepared;
  for (const auto& p : config.selected_projects()) prepared.push_back(prepare_project(config, p, &tagger));

  std::unordered_set<std::string> needed;
  for (const auto& p : prepared) {
    for (const auto& d : p.split.train) needed.insert(d.tokens.begin(), d.tokens.end());
  }
  const auto vectors = load_vectors_for(config, needed);
  const std::size_t dim = config.vectors_path ? config.embedding_dim : 0;

  const auto root = config.output_dir / "prepare";
  for (const auto& p : prepared) {
    const auto dir = root / p.name;
    std::ostringstream manifest;
    manifest << "# split_seed=" << p.split.seed << " split_hash=" << p.split_hash << '\n';
    manifest << "doc_id\tpart\tlevel\tstory_point\ttokens\n";
    auto emit = [&](const std::vector<TextDocument>& docs, std::string_view part) {
      for (const auto& d : docs) {
        manifest << d.doc_id << '\t' << part << '\t' << level_name(d.level) << '\t' << d.story_point
                 << '\t' << d.tokens.size() << '\n';
      }
    };
    emit(p.split.train, "train");
    emit(p.split.validation, "validation");
    emit(p.split.test, "test");

    const auto vb = build_vocab(p.split.train, vectors,
                                derive_seed(config.seed, p.name, "embeddings"), dim);
    std::ostringstream vocab;
    write_vocabulary(vocab, vb.vocabulary, vb.table);

    write_file_bytes(dir / "split.tsv", manifest.str());
    write_file_bytes(dir / "vocab.tsv", vocab.str());
    write_file_bytes(dir / "load_report.txt", p.load.to_string() + "\n");
    out << p.name << ": train=" << p.split.train.size() << " validation=" << p.split.validation.size()
        << " test=" << p.split.test.size() << " vocab=" << vb.vocabulary.size()
        << " oov_rate=" << format_fixed(vb.table.oov_rate(), 4) << " " << p.load.to_string() << '\n';
  }
  std::ostringstream snapshot;
  for (const auto& [k, v] : config.echo()) snapshot << k << " = " << v << '\n';
  write_file_bytes(root / "config.ini", snapshot.str());
  return 0;
}

int cmd_train(const Options& o, std::ostream& out) {
  auto config = to_config(o);
  const auto project = single_project(o);
  LexiconTagger tagger;
  if (config.lexicon_path) tagger.load_lexicon(*config.lexicon_path);
  const auto prepared = prepare_project(config, project, &tagger);
  std::unordered_set<std::string> needed;
  for (const auto& d : prepared.documents) needed.insert(d.tokens.begin(), d.tokens.end());
  const auto vectors = load_vectors_for(config, needed);
  const auto mode = config.task == Task::LevelClassification ? ClassMode::Level : ClassMode::StoryPointLabels;
  auto result = run_gnn(project, prepared.split, vectors, config, mode);

  const auto dir = config.output_dir / "train";
  const std::string stem = project + "." + std::string(task_name(config.task));
  save_model(dir / (stem + ".gnn"), result.model);
  ReportTable log;
  log.title = "training log";
  log.comments = config.echo();
  log.comments.emplace_back("best_epoch", std::to_string(result.training.best_epoch));
  log.columns = {"epoch", "train_loss", "validation_accuracy", "validation_mae", "improved"};
  for (const auto& e : result.training.log) {
    log.rows.push_back({std::to_string(e.epoch), format_fixed(e.train_loss, 6),
                        format_fixed(100.0 * e.validation_accuracy, 2), format_fixed(e.validation_mae, 4),
                        e.improved ? "yes" : "no"});
  }
  emit_report(log, ReportFormat::Tsv, dir / (stem + ".log.tsv"));
  out << "model=" << (dir / (stem + ".gnn")).string() << " epochs=" << result.training.log.size()
      << " best_epoch=" << result.training.best_epoch
      << " test_accuracy=" << format_percent(result.test.accuracy);
  if (mode == ClassMode::StoryPointLabels) out << " test_mae=" << format_fixed(result.test.mae, 2);
  out << " train_seconds=" << format_fixed(result.training.seconds, 2) << '\n';
  return 0;
}

int cmd_eval_model(const Options& o, std::ostream& out) {
  auto config = to_config(o);
  const auto project = single_project(o);
  const auto model = load_model(o.model_path);
  config.text_mode = model.text_mode;
  LexiconTagger tagger;
  if (config.lexicon_path) tagger.load_lexicon(*config.lexicon_path);
  const auto prepared = prepare_project(config, project, &tagger);
  auto graphs = build_graphs(model.vocabulary.encode(prepared.split.test), model.window, model.edges);
  if (model.class_mode == ClassMode::StoryPointLabels) {
    for (auto& g : graphs) {
      auto it = std::find(model.class_values.begin(), model.class_values.end(), g.raw_story_point);
      g.label = it == model.class_values.end() ? -1 : static_cast<int>(it - model.class_values.begin());
    }
  }
  const auto r = evaluate(model.params, graphs, model.class_values);
  out << "project=" << project << " test_size=" << graphs.size()
      << " accuracy=" << format_percent(r.accuracy);
  if (model.class_mode == ClassMode::StoryPointLabels) out << " mae=" << format_fixed(r.mae, 2);
  out << '\n';
  return 0;
}

void write_eval(const ExperimentConfig& config, const EvalReport& report, const std::string& name,
                std::ostream& out) {
  std::vector<std::pair<std::string, ReportTable>> tables;
  const auto main = report.task == Task::LevelClassification ? report.accuracy_table()
                                                             : report.regression_table();
  tables.emplace_back(report.task == Task::LevelClassification ? "accuracy" : "mae", main);
  if (config.models != ModelSelection::TfidfRf) {
    tables.emplace_back("graph_stats", report.stats_table(config.record_timings));
  }
  if (config.record_timings) tables.emplace_back("timings", report.timing_table());
  const auto dir = write_experiment(config, name, tables);
  print_table(out, main);
  out << "reports written to " << dir.string() << '\n';
}

int cmd_eval(const Options& o, std::ostream& out) {
  if (!o.model_path.empty()) return cmd_eval_model(o, out);
  const auto config = to_config(o);
  const auto report = config.task == Task::LevelClassification ? run_classification(config)
                                                               : run_regression(config);
  write_eval(config, report,
             config.task == Task::LevelClassification ? "classification" : "regression", out);
  return 0;
}

int cmd_baseline(const Options& o, std::ostream& out) {
  auto config = to_config(o);
  config.models = ModelSelection::TfidfRf;
  const auto report = config.task == Task::LevelClassification ? run_classification(config)
                                                               : run_regression(config);
  write_eval(config, report, "baseline-" + std::string(task_name(config.task)), out);
  return 0;
}

int cmd_stats(const Options& o, std::ostream& out) {
  auto config = to_config(o);
  EvalReport report;
  if (o.train_for_time) {
    config.models = ModelSelection::Gnn;
    report = run_classification(config);
  } else {
    report = run_stats(config);
  }
  const auto table = report.stats_table(config.record_timings);
  std::vector<std::pair<std::string, ReportTable>> tables{{"graph_stats", table}};
  if (config.record_timings && o.train_for_time) tables.emplace_back("timings", report.timing_table());
  const auto dir = write_experiment(config, "stats-" + std::string(text_mode_name(config.text_mode)), tables);
  print_table(out, table);
  out << "reports written to " << dir.string() << '\n';
  return 0;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  auto config = to_config(o);
  if (o.projects.empty()) config.projects = {"jirasoftware", "clover"};
  const auto report = run_window_sweep(config, !o.no_train);
  const auto edges = report.edges_table();
  const auto dir = write_experiment(config, "sweep", {{"edges", edges}, {"sensitivity", report.accuracy_table()}});
  print_table(out, edges);
  out << "reports written to " << dir.string() << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"storygraph: story point level estimation with text-level graph neural networks"};
  app.name("storygraph");
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "INI/TOML file with option defaults; flags override it");
  app.require_subcommand(1);
  Options o;

  auto* prepare = app.add_subcommand("prepare", "Tokenize, split and dump vocabularies");
  add_data_options(prepare, o);
  prepare->add_option("--vectors", o.vectors, "Pretrained word vectors (GloVe text format)");
  prepare->add_option("--dim", o.dim, "Embedding dimension");

  auto* train = app.add_subcommand("train", "Train the GNN on one project and save the model");
  add_data_options(train, o);
  add_model_options(train, o);

  auto* eval = app.add_subcommand("eval", "Evaluate a saved model, or run the full comparison");
  add_data_options(eval, o);
  add_model_options(eval, o);
  add_forest_options(eval, o);
  eval->add_option("--model", o.model_path, "Saved GNN model to evaluate on the project's test split");
  eval->add_option("--models", o.models, "gnn | tfidf-rf | both")
      ->check(CLI::IsMember({"gnn", "tfidf-rf", "both"}));

  auto* baseline = app.add_subcommand("baseline", "TF-IDF (1-4 grams) + random forest");
  add_data_options(baseline, o);
  add_forest_options(baseline, o);
  baseline->add_option("--task", o.task, "classify | regress")->check(CLI::IsMember({"classify", "regress"}));
  baseline->add_flag("--save-models", o.save_models, "Write model files under <out>/models");
  baseline->add_flag("--timings", o.timings, "Record wall-clock times in reports (breaks byte-identical reruns)");

  auto* stats = app.add_subcommand("stats", "Graph scale per project (size, nodes, edges)");
  add_data_options(stats, o);
  add_model_options(stats, o);
  stats->add_flag("--train", o.train_for_time, "Also train the GNN to measure training time");

  auto* sweep = app.add_subcommand("sweep", "Edge counts and accuracy across window sizes");
  add_data_options(sweep, o);
  add_model_options(sweep, o);
  sweep->add_option("--windows", o.windows, "Window sizes")->delimiter(',');
  sweep->add_flag("--no-train", o.no_train, "Only count edges");

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    (void)e;
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    (void)e;
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error code=UsageError exit=2 message=" << quoted(e.what()) << '\n';
    return 2;
  }

  try {
    if (*prepare) return cmd_prepare(o, out);
    if (*train) return cmd_train(o, out);
    if (*eval) return cmd_eval(o, out);
    if (*baseline) return cmd_baseline(o, out);
    if (*stats) return cmd_stats(o, out);
    if (*sweep) return cmd_sweep(o, out);
  } catch (const DataDirMissing& e) {
    err << "error code=DatasetDirectoryNotFound exit=2 message=" << quoted(e.what()) << '\n';
    return 2;
  } catch (const Error& e) {
    const int code = exit_code(e.code());
    err << "error code=" << error_name(e.code()) << " exit=" << code << " message=" << quoted(e.what())
        << '\n';
    return code;
  } catch (const std::exception& e) {
    err << "error code=Internal exit=1 message=" << quoted(e.what()) << '\n';
    return 1;
  }
  return 2;
}

}  // namespace storygraph
