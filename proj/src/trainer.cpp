#include "storygraph/trainer.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "storygraph/error.hpp"

namespace storygraph {

std::string_view class_mode_name(ClassMode mode) noexcept {
  return mode == ClassMode::Level ? "level" : "story-point";
}

ClassMode parse_class_mode(std::string_view name) {
  if (name == "level") return ClassMode::Level;
  if (name == "story-point" || name == "sp") return ClassMode::StoryPointLabels;
  fail(ErrorCode::InvalidArgument, "unknown class mode '" + std::string(name) + "'");
}

AdamOptimizer::AdamOptimizer(const ModelParameters& shape, const TrainConfig& config)
    : lr_(config.learning_rate),
      decay_(config.weight_decay),
      beta1_(config.beta1),
      beta2_(config.beta2),
      eps_(config.epsilon),
      m_emb_(shape.embeddings.size(), 0.0),
      v_emb_(shape.embeddings.size(), 0.0),
      m_gate_(shape.gates.size(), 0.0),
      v_gate_(shape.gates.size(), 0.0),
      m_edge_(shape.edge_weights.size(), 0.0),
      v_edge_(shape.edge_weights.size(), 0.0),
      m_cls_(shape.classifier.size(), 0.0),
      v_cls_(shape.classifier.size(), 0.0),
      m_bias_(shape.bias.size(), 0.0),
      v_bias_(shape.bias.size(), 0.0) {}

void AdamOptimizer::update(double& param, double grad, double& m, double& v) const {
  const double g = grad + decay_ * param;
  m = beta1_ * m + (1.0 - beta1_) * g;
  v = beta2_ * v + (1.0 - beta2_) * g * g;
  const double m_hat = m / correction1_;
  const double v_hat = v / correction2_;
  param -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
}

void AdamOptimizer::step(ModelParameters& params, const Gradients& grads) {
  ++step_;
  correction1_ = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  correction2_ = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  const std::size_t d = params.dim;
  for (auto id : grads.touched_words()) {
    const auto g = grads.embedding_row(id);
    for (std::size_t k = 0; k < d; ++k) {
      const std::size_t i = id * d + k;
      update(params.embeddings[i], g[k], m_emb_[i], v_emb_[i]);
    }
    update(params.gates[id], grads.gate(id), m_gate_[id], v_gate_[id]);
  }
  for (auto e : grads.touched_edges()) {
    update(params.edge_weights[e], grads.edge(e), m_edge_[e], v_edge_[e]);
  }
  for (std::size_t i = 0; i < params.classifier.size(); ++i) {
    update(params.classifier[i], grads.classifier()[i], m_cls_[i], v_cls_[i]);
  }
  for (std::size_t i = 0; i < params.bias.size(); ++i) {
    update(params.bias[i], grads.bias()[i], m_bias_[i], v_bias_[i]);
  }
}

EvalResult evaluate(const ModelParameters& params, std::span<const DocumentGraph> graphs,
                    std::span<const int> class_values) {
  EvalResult r;
  if (graphs.empty()) return r;
  std::size_t correct = 0;
  std::vector<int> predicted_sp;
  std::vector<int> actual_sp;
  for (const auto& g : graphs) {
    const auto p = predict(params, g);
    r.predicted.push_back(p.label);
    if (p.label == g.label) ++correct;
    if (!class_values.empty()) {
      if (static_cast<std::size_t>(p.label) >= class_values.size()) {
        fail(ErrorCode::UnknownClassIndex, "class " + std::to_string(p.label) + " has no story point");
      }
      predicted_sp.push_back(class_values[static_cast<std::size_t>(p.label)]);
      actual_sp.push_back(g.raw_story_point);
    }
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(graphs.size());
  if (!class_values.empty()) r.mae = mean_absolute_error(predicted_sp, actual_sp);
  return r;
}

TrainResult train(ModelParameters initial, std::span<const DocumentGraph> train_graphs,
                  std::span<const DocumentGraph> validation_graphs, const TrainConfig& config,
                  std::span<const int> class_values) {
  if (train_graphs.empty()) fail(ErrorCode::EmptyTrainingSet, "no training graphs");
  if (config.batch_size < 1) fail(ErrorCode::InvalidArgument, "batch size must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  const bool by_mae = !class_values.empty();

  TrainResult result;
  ModelParameters params = std::move(initial);
  AdamOptimizer optimizer(params, config);
  Gradients grads(params);
  Rng order_rng(derive_seed(config.seed, "train", "order"));
  Rng dropout_rng(derive_seed(config.seed, "train", "dropout"));

  auto score = [&](const ModelParameters& p) { return evaluate(p, validation_graphs, class_values); };
  auto better = [&](const EvalResult& a, const EvalResult& b) {
    return by_mae ? a.mae < b.mae : a.accuracy > b.accuracy;
  };

  EvalResult best = score(params);
  result.params = params;
  result.best_epoch = 0;
  std::size_t since_improvement = 0;

  std::vector<std::size_t> order(train_graphs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle(order, order_rng);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - begin);
      grads.clear();
      for (std::size_t i = begin; i < end; ++i) {
        const auto& g = train_graphs[order[i]];
        ForwardTrace trace;
        try {
          trace = forward(params, g, config.dropout, &dropout_rng, true);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NonFiniteActivation) throw;
          fail(ErrorCode::NonFiniteActivation, std::string(e.what()) + " (epoch " +
                                                   std::to_string(epoch) + ", batch " +
                                                   std::to_string(batch_index) + ")");
        }
        loss_sum += cross_entropy(trace.probabilities, g.label);
        backward(trace, g, params, g.label, grads, scale);
      }
      optimizer.step(params, grads);
    }
    if (!params.all_finite()) {
      fail(ErrorCode::NonFiniteActivation,
           "parameters became non-finite in epoch " + std::to_string(epoch));
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(order.size());
    const auto current = score(params);
    entry.validation_accuracy = current.accuracy;
    entry.validation_mae = current.mae;
    if (better(current, best)) {
      best = current;
      result.params = params;
      result.best_epoch = epoch;
      since_improvement = 0;
      entry.improved = true;
    } else {
      ++since_improvement;
    }
    result.log.push_back(entry);
    if (validation_graphs.empty()) {
      // Nothing to select on; keep the latest parameters.
      result.params = params;
      result.best_epoch = epoch;
    } else if (since_improvement >= config.patience) {
      break;
    }
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace storygraph
