#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "storygraph/embeddings.hpp"
#include "storygraph/graph.hpp"
#include "storygraph/random.hpp"

namespace storygraph {

/// Trainable state of the text-level GNN.
///
/// Per document graph, node n starts from its word embedding r_n. One
/// message-passing round computes
///   M_n  = elementwise max over incoming (a -> n) of w_e * r_a   (0 if none)
///   r'_n = (1 - eta_n) * M_n + eta_n * r_n,  eta_n = logistic(gate[token_n])
/// and the document is classified by softmax(relu(W * sum_n r'_n + b)).
struct ModelParameters {
  std::size_t vocab = 0;
  std::size_t dim = 0;
  std::size_t classes = 0;
  std::size_t rounds = 1;

  std::vector<double> embeddings;    // vocab x dim
  std::vector<double> edge_weights;  // one per edge parameter, index 0 public
  std::vector<double> gates;         // one pre-activation per vocabulary id
  std::vector<double> classifier;    // classes x dim
  std::vector<double> bias;          // classes

  std::size_t edge_count() const { return edge_weights.size(); }
  std::span<const double> embedding(std::size_t id) const {
    return {embeddings.data() + id * dim, dim};
  }

  bool all_finite() const;
  friend bool operator==(const ModelParameters&, const ModelParameters&) = default;
};

/// Embeddings copied from `table`; edge weights 1; gates 0; classifier
/// Glorot-uniform under `seed`; bias 0.
ModelParameters init_parameters(const EmbeddingTable& table, std::size_t edge_params,
                                std::size_t classes, std::uint64_t seed, std::size_t rounds = 1);

double logistic(double x);

struct ForwardTrace {
  std::size_t nodes = 0;
  std::size_t dim = 0;
  std::size_t rounds = 0;
  // reps[t] is N x d: reps[0] is the (dropped-out) input, reps[t+1] the
  // output of round t.
  std::vector<std::vector<double>> reps;
  std::vector<std::vector<double>> messages;
  // Per round, per (node, lane): index into graph.incoming[node] of the
  // winning entry, or -1 when the node has no incoming entries.
  std::vector<std::vector<std::int32_t>> argmax;
  std::vector<double> gate;          // eta per node
  std::vector<double> dropout_mask;  // N x d scale factors (1 when not training)
  std::vector<double> readout;       // d
  std::vector<double> pre_activation;  // classes
  std::vector<double> logits;          // relu(pre_activation)
  std::vector<double> probabilities;
};

/// Dropout is inverted (kept lanes scaled by 1/(1-p)) and applies to node
/// input representations only, when `training` is set.
ForwardTrace forward(const ModelParameters& params, const DocumentGraph& graph, double dropout,
                     Rng* rng, bool training);

inline constexpr double kProbabilityClamp = 1e-12;

/// -log(max(p[label], 1e-12)).
double cross_entropy(std::span<const double> probabilities, int label);

/// Gradient accumulator shaped like ModelParameters. Embedding, gate and edge
/// gradients are stored densely but only touched rows are tracked, so
/// clearing and optimizer steps stay proportional to the batch.
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(const ModelParameters& shape);

  void clear();

  std::span<double> embedding_row(std::uint32_t id);
  double& gate(std::uint32_t id);
  double& edge(std::uint32_t index);

  std::span<const double> embedding_row(std::uint32_t id) const {
    return {embeddings_.data() + id * dim_, dim_};
  }
  double gate(std::uint32_t id) const { return gates_[id]; }
  double edge(std::uint32_t index) const { return edges_[index]; }

  const std::vector<std::uint32_t>& touched_words() const { return words_; }
  const std::vector<std::uint32_t>& touched_edges() const { return edge_list_; }

  std::vector<double>& classifier() { return classifier_; }
  std::vector<double>& bias() { return bias_; }
  const std::vector<double>& classifier() const { return classifier_; }
  const std::vector<double>& bias() const { return bias_; }

  /// Dense copy with the same layout as ModelParameters.
  ModelParameters to_dense(const ModelParameters& shape) const;

 private:
  void touch_word(std::uint32_t id);

  std::size_t dim_ = 0;
  std::vector<double> embeddings_;
  std::vector<double> gates_;
  std::vector<double> edges_;
  std::vector<double> classifier_;
  std::vector<double> bias_;
  std::vector<char> word_touched_;
  std::vector<char> edge_touched_;
  std::vector<std::uint32_t> words_;
  std::vector<std::uint32_t> edge_list_;
};

/// Adds scale * d(cross_entropy)/d(params) for one document into `grads`.
/// Max-pool lanes route gradient only to the entry recorded in the trace.
void backward(const ForwardTrace& trace, const DocumentGraph& graph, const ModelParameters& params,
              int label, Gradients& grads, double scale = 1.0);

struct Prediction {
  int label = 0;
  std::vector<double> probabilities;
};

/// Dropout off; ties go to the lowest class index.
Prediction predict(const ModelParameters& params, const DocumentGraph& graph);

int argmax_lowest(std::span<const double> values);

/// Story-point value of the predicted class. `class_values[c]` is the story
/// point that class c stands for.
int predict_story_point(const ModelParameters& params, const DocumentGraph& graph,
                        std::span<const int> class_values);

double mean_absolute_error(std::span<const int> predicted, std::span<const int> actual);

}  // namespace storygraph
