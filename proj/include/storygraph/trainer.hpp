#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "storygraph/gnn.hpp"

namespace storygraph {

enum class ClassMode { Level, StoryPointLabels };

std::string_view class_mode_name(ClassMode mode) noexcept;
ClassMode parse_class_mode(std::string_view name);

struct TrainConfig {
  std::size_t window = kDefaultWindow;
  std::size_t batch_size = 32;
  double dropout = 0.5;
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t max_epochs = 300;
  std::size_t patience = 10;
  std::uint64_t seed = 42;
  std::uint64_t min_edge_frequency = kDefaultMinEdgeFrequency;
  ClassMode class_mode = ClassMode::Level;
  std::size_t rounds = 1;
  double validation_fraction = 0.10;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_accuracy = 0.0;
  double validation_mae = 0.0;
  bool improved = false;
};

struct TrainResult {
  ModelParameters params;  // best-validation parameters
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double seconds = 0.0;
};

/// Lazy adaptive-moment optimizer: rows of sparse parameters (embeddings,
/// gates, edges) are updated only when they received gradient in the step;
/// the classifier is updated densely. L2 decay is added to the gradient.
class AdamOptimizer {
 public:
  AdamOptimizer(const ModelParameters& shape, const TrainConfig& config);
  void step(ModelParameters& params, const Gradients& grads);
  std::uint64_t steps() const { return step_; }

 private:
  void update(double& param, double grad, double& m, double& v) const;

  double lr_, decay_, beta1_, beta2_, eps_;
  std::uint64_t step_ = 0;
  double correction1_ = 1.0;
  double correction2_ = 1.0;
  std::vector<double> m_emb_, v_emb_, m_gate_, v_gate_, m_edge_, v_edge_;
  std::vector<double> m_cls_, v_cls_, m_bias_, v_bias_;
};

struct EvalResult {
  double accuracy = 0.0;  // fraction in [0, 1]
  double mae = 0.0;       // only meaningful when class_values given
  std::vector<int> predicted;
};

/// Exact-match accuracy over graph labels; with class_values also the MAE of
/// predicted story points against raw_story_point.
EvalResult evaluate(const ModelParameters& params, std::span<const DocumentGraph> graphs,
                    std::span<const int> class_values = {});

/// Mini-batch training with per-epoch validation and early stopping. When
/// `class_values` is non-empty the model is selected on validation MAE,
/// otherwise on validation accuracy. Throws NonFiniteActivation with
/// epoch/batch context if the parameters stop being finite.
TrainResult train(ModelParameters initial, std::span<const DocumentGraph> train_graphs,
                  std::span<const DocumentGraph> validation_graphs, const TrainConfig& config,
                  std::span<const int> class_values = {});

}  // namespace storygraph
