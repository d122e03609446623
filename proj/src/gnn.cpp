#include "storygraph/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "storygraph/error.hpp"

namespace storygraph {
namespace {

bool finite_all(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_graph(const ModelParameters& params, const DocumentGraph& graph) {
  if (graph.nodes.empty()) fail(ErrorCode::EmptyDocument, "graph '" + graph.doc_id + "' has no nodes");
  if (graph.incoming.size() != graph.nodes.size()) {
    fail(ErrorCode::IndexOutOfRange, "graph '" + graph.doc_id + "' adjacency size mismatch");
  }
  for (std::size_t n = 0; n < graph.nodes.size(); ++n) {
    if (graph.nodes[n] >= params.vocab) {
      fail(ErrorCode::IndexOutOfRange, "graph '" + graph.doc_id + "' node token " +
                                           std::to_string(graph.nodes[n]) + " >= vocabulary " +
                                           std::to_string(params.vocab));
    }
    for (const auto& e : graph.incoming[n]) {
      if (e.source >= graph.nodes.size() || e.edge >= params.edge_count()) {
        fail(ErrorCode::IndexOutOfRange, "graph '" + graph.doc_id + "' has an out-of-range edge");
      }
    }
  }
}

}  // namespace

bool ModelParameters::all_finite() const {
  return finite_all(embeddings) && finite_all(edge_weights) && finite_all(gates) &&
         finite_all(classifier) && finite_all(bias);
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

ModelParameters init_parameters(const EmbeddingTable& table, std::size_t edge_params,
                                std::size_t classes, std::uint64_t seed, std::size_t rounds) {
  if (classes < 1) fail(ErrorCode::InvalidArgument, "need at least one class");
  if (edge_params < 1) fail(ErrorCode::InvalidArgument, "need at least the public edge");
  ModelParameters p;
  p.vocab = table.rows;
  p.dim = table.dim;
  p.classes = classes;
  p.rounds = rounds;
  p.embeddings = table.values;
  p.edge_weights.assign(edge_params, 1.0);
  p.gates.assign(table.rows, 0.0);
  p.classifier.resize(classes * table.dim);
  p.bias.assign(classes, 0.0);
  Rng rng(seed);
  const double limit = std::sqrt(6.0 / static_cast<double>(classes + table.dim));
  for (auto& w : p.classifier) w = uniform_real(rng, -limit, limit);
  return p;
}

ForwardTrace forward(const ModelParameters& params, const DocumentGraph& graph, double dropout,
                     Rng* rng, bool training) {
  check_graph(params, graph);
  const std::size_t N = graph.nodes.size();
  const std::size_t d = params.dim;
  const std::size_t C = params.classes;
  const bool drop = training && dropout > 0.0;
  if (drop && rng == nullptr) fail(ErrorCode::InvalidArgument, "dropout needs a generator");
  if (dropout < 0.0 || dropout >= 1.0) fail(ErrorCode::InvalidArgument, "dropout must be in [0, 1)");

  ForwardTrace tr;
  tr.nodes = N;
  tr.dim = d;
  tr.rounds = params.rounds;
  tr.dropout_mask.assign(N * d, 1.0);
  tr.reps.assign(params.rounds + 1, {});
  tr.messages.assign(params.rounds, {});
  tr.argmax.assign(params.rounds, {});

  auto& input = tr.reps[0];
  input.resize(N * d);
  const double keep_scale = drop ? 1.0 / (1.0 - dropout) : 1.0;
  for (std::size_t n = 0; n < N; ++n) {
    const auto emb = params.embedding(graph.nodes[n]);
    for (std::size_t k = 0; k < d; ++k) {
      double m = 1.0;
      if (drop) m = uniform_unit(*rng) < dropout ? 0.0 : keep_scale;
      tr.dropout_mask[n * d + k] = m;
      input[n * d + k] = emb[k] * m;
    }
  }

  tr.gate.resize(N);
  for (std::size_t n = 0; n < N; ++n) tr.gate[n] = logistic(params.gates[graph.nodes[n]]);

  for (std::size_t t = 0; t < params.rounds; ++t) {
    const auto& cur = tr.reps[t];
    auto& msg = tr.messages[t];
    auto& arg = tr.argmax[t];
    auto& next = tr.reps[t + 1];
    msg.assign(N * d, 0.0);
    arg.assign(N * d, -1);
    next.resize(N * d);
    for (std::size_t n = 0; n < N; ++n) {
      const auto& in = graph.incoming[n];
      double* m = msg.data() + n * d;
      std::int32_t* a = arg.data() + n * d;
      for (std::size_t e = 0; e < in.size(); ++e) {
        const double w = params.edge_weights[in[e].edge];
        const double* src = cur.data() + in[e].source * d;
        for (std::size_t k = 0; k < d; ++k) {
          const double v = w * src[k];
          // Strict comparison: the lowest source position wins ties.
          if (a[k] < 0 || v > m[k]) {
            m[k] = v;
            a[k] = static_cast<std::int32_t>(e);
          }
        }
      }
      const double eta = tr.gate[n];
      for (std::size_t k = 0; k < d; ++k) {
        next[n * d + k] = (1.0 - eta) * m[k] + eta * cur[n * d + k];
      }
    }
  }

  const auto& last = tr.reps[params.rounds];
  tr.readout.assign(d, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t k = 0; k < d; ++k) tr.readout[k] += last[n * d + k];
  }

  tr.pre_activation.resize(C);
  tr.logits.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    double z = params.bias[c];
    const double* w = params.classifier.data() + c * d;
    for (std::size_t k = 0; k < d; ++k) z += w[k] * tr.readout[k];
    tr.pre_activation[c] = z;
    tr.logits[c] = std::max(0.0, z);
  }
  const double top = *std::max_element(tr.logits.begin(), tr.logits.end());
  tr.probabilities.resize(C);
  double total = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    tr.probabilities[c] = std::exp(tr.logits[c] - top);
    total += tr.probabilities[c];
  }
  for (auto& p : tr.probabilities) p /= total;
  if (!finite_all(tr.probabilities) || !finite_all(tr.readout)) {
    fail(ErrorCode::NonFiniteActivation, "non-finite activation on graph '" + graph.doc_id + "'");
  }
  return tr;
}

double cross_entropy(std::span<const double> probabilities, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probabilities.size()) {
    fail(ErrorCode::InvalidLabel, "label " + std::to_string(label) + " outside " +
                                      std::to_string(probabilities.size()) + " classes");
  }
  return -std::log(std::max(probabilities[static_cast<std::size_t>(label)], kProbabilityClamp));
}

Gradients::Gradients(const ModelParameters& shape)
    : dim_(shape.dim),
      embeddings_(shape.embeddings.size(), 0.0),
      gates_(shape.gates.size(), 0.0),
      edges_(shape.edge_weights.size(), 0.0),
      classifier_(shape.classifier.size(), 0.0),
      bias_(shape.bias.size(), 0.0),
      word_touched_(shape.vocab, 0),
      edge_touched_(shape.edge_weights.size(), 0) {}

void Gradients::clear() {
  for (auto id : words_) {
    std::fill_n(embeddings_.begin() + static_cast<std::ptrdiff_t>(id * dim_), dim_, 0.0);
    gates_[id] = 0.0;
    word_touched_[id] = 0;
  }
  for (auto e : edge_list_) {
    edges_[e] = 0.0;
    edge_touched_[e] = 0;
  }
  words_.clear();
  edge_list_.clear();
  std::fill(classifier_.begin(), classifier_.end(), 0.0);
  std::fill(bias_.begin(), bias_.end(), 0.0);
}

void Gradients::touch_word(std::uint32_t id) {
  if (!word_touched_[id]) {
    word_touched_[id] = 1;
    words_.push_back(id);
  }
}

std::span<double> Gradients::embedding_row(std::uint32_t id) {
  touch_word(id);
  return {embeddings_.data() + id * dim_, dim_};
}

double& Gradients::gate(std::uint32_t id) {
  touch_word(id);
  return gates_[id];
}

double& Gradients::edge(std::uint32_t index) {
  if (!edge_touched_[index]) {
    edge_touched_[index] = 1;
    edge_list_.push_back(index);
  }
  return edges_[index];
}

ModelParameters Gradients::to_dense(const ModelParameters& shape) const {
  ModelParameters g;
  g.vocab = shape.vocab;
  g.dim = shape.dim;
  g.classes = shape.classes;
  g.rounds = shape.rounds;
  g.embeddings = embeddings_;
  g.edge_weights = edges_;
  g.gates = gates_;
  g.classifier = classifier_;
  g.bias = bias_;
  return g;
}

void backward(const ForwardTrace& trace, const DocumentGraph& graph, const ModelParameters& params,
              int label, Gradients& grads, double scale) {
  const std::size_t N = graph.nodes.size();
  const std::size_t d = params.dim;
  const std::size_t C = params.classes;
  if (trace.nodes != N || trace.dim != d || trace.rounds != params.rounds ||
      trace.probabilities.size() != C) {
    fail(ErrorCode::TraceMismatch, "trace does not belong to graph '" + graph.doc_id + "'");
  }
  if (label < 0 || static_cast<std::size_t>(label) >= C) {
    fail(ErrorCode::InvalidLabel, "label " + std::to_string(label) + " outside " +
                                      std::to_string(C) + " classes");
  }

  // Softmax + cross-entropy, then the relu mask.
  std::vector<double> d_pre(C);
  for (std::size_t c = 0; c < C; ++c) {
    double g = trace.probabilities[c] - (static_cast<int>(c) == label ? 1.0 : 0.0);
    d_pre[c] = trace.pre_activation[c] > 0.0 ? g * scale : 0.0;
  }

  std::vector<double> d_readout(d, 0.0);
  auto& gw = grads.classifier();
  auto& gb = grads.bias();
  for (std::size_t c = 0; c < C; ++c) {
    if (d_pre[c] == 0.0) continue;
    gb[c] += d_pre[c];
    const double* w = params.classifier.data() + c * d;
    double* gwc = gw.data() + c * d;
    for (std::size_t k = 0; k < d; ++k) {
      gwc[k] += d_pre[c] * trace.readout[k];
      d_readout[k] += d_pre[c] * w[k];
    }
  }

  // Sum readout: every node's final representation receives d_readout.
  std::vector<double> grad(N * d);
  for (std::size_t n = 0; n < N; ++n) std::copy(d_readout.begin(), d_readout.end(), grad.begin() + n * d);

  std::vector<double> d_eta(N, 0.0);
  std::vector<double> prev(N * d);
  for (std::size_t t = params.rounds; t-- > 0;) {
    const auto& cur = trace.reps[t];
    const auto& msg = trace.messages[t];
    const auto& arg = trace.argmax[t];
    for (std::size_t n = 0; n < N; ++n) {
      const double eta = trace.gate[n];
      for (std::size_t k = 0; k < d; ++k) {
        const double g = grad[n * d + k];
        prev[n * d + k] = eta * g;
        d_eta[n] += g * (cur[n * d + k] - msg[n * d + k]);
      }
    }
    for (std::size_t n = 0; n < N; ++n) {
      const double one_minus = 1.0 - trace.gate[n];
      const auto& in = graph.incoming[n];
      for (std::size_t k = 0; k < d; ++k) {
        const std::int32_t a = arg[n * d + k];
        if (a < 0) continue;
        const double dm = one_minus * grad[n * d + k];
        if (dm == 0.0) continue;
        const auto& entry = in[static_cast<std::size_t>(a)];
        grads.edge(entry.edge) += dm * cur[entry.source * d + k];
        prev[entry.source * d + k] += dm * params.edge_weights[entry.edge];
      }
    }
    grad.swap(prev);
  }

  for (std::size_t n = 0; n < N; ++n) {
    const auto id = graph.nodes[n];
    auto row = grads.embedding_row(id);
    for (std::size_t k = 0; k < d; ++k) row[k] += grad[n * d + k] * trace.dropout_mask[n * d + k];
    const double eta = trace.gate[n];
    grads.gate(id) += d_eta[n] * eta * (1.0 - eta);
  }
}

int argmax_lowest(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

Prediction predict(const ModelParameters& params, const DocumentGraph& graph) {
  auto trace = forward(params, graph, 0.0, nullptr, false);
  Prediction p;
  p.label = argmax_lowest(trace.probabilities);
  p.probabilities = std::move(trace.probabilities);
  return p;
}

int predict_story_point(const ModelParameters& params, const DocumentGraph& graph,
                        std::span<const int> class_values) {
  const auto p = predict(params, graph);
  if (static_cast<std::size_t>(p.label) >= class_values.size()) {
    fail(ErrorCode::UnknownClassIndex, "class " + std::to_string(p.label) + " has no story point");
  }
  return class_values[static_cast<std::size_t>(p.label)];
}

double mean_absolute_error(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size()) {
    fail(ErrorCode::InvalidArgument, "prediction and actual counts differ");
  }
  if (predicted.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) total += std::abs(predicted[i] - actual[i]);
  return total / static_cast<double>(predicted.size());
}

}  // namespace storygraph
