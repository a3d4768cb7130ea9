#pragma once

#include "mindplane/linalg.hpp"
#include "mindplane/signal_core.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mindplane::models {

struct TrainingSet {
  std::vector<std::vector<double>> features;
  std::vector<StateLabel> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t dimension() const { return features.empty() ? 0 : features.front().size(); }
  std::size_t count(StateLabel label) const;
  TrainingSet subset(std::span<const std::size_t> indices) const;
};

// Throws ValidationError on ragged/non-finite features or length mismatch;
// with require_both_classes, also when either class is missing.
void validate_training_set(const TrainingSet& set, bool require_both_classes);

// Per-dimension z-scoring.
struct Standardizer {
  std::vector<double> means;
  std::vector<double> stds;
  // Set when some dimension had zero variance and its std was clamped to 1.
  bool clamped = false;

  static Standardizer fit(const std::vector<std::vector<double>>& features);
  static Standardizer identity(std::size_t dim);

  std::vector<double> apply(std::span<const double> x) const;
  std::size_t dimension() const { return means.size(); }
};

struct Prediction {
  StateLabel label = StateLabel::relaxation();
  double score = 0.0;
};

// A score of exactly zero reads as relaxation.
inline StateLabel label_from_score(double score) {
  return score > 0.0 ? StateLabel::concentration() : StateLabel::relaxation();
}

// ---------------------------------------------------------------------------
// Linear SVM
// ---------------------------------------------------------------------------

struct SvmHyper {
  double lambda = 1e-3;       // L2 regularization strength
  int epochs = 20;            // shuffled passes over the data
  double initial_step = 0.1;  // eta_t = initial_step / (1 + lambda * initial_step * t)
  std::uint64_t seed = 0;
};

struct LinearSvmModel {
  std::vector<double> weights;
  double bias = 0.0;
  Standardizer standardization;
  SvmHyper hyper;

  std::size_t dimension() const { return weights.size(); }
};

// Soft-margin hinge loss minimized by seeded stochastic subgradient descent
// on z-scored features. Same (set, hyper) gives bit-identical weights.
LinearSvmModel svm_train(const TrainingSet& set, const SvmHyper& hyper);

// score = w . standardize(x) + b
Prediction svm_predict(const LinearSvmModel& m, std::span<const double> x);

// ---------------------------------------------------------------------------
// Feedforward network: 10 inputs -> 10 tanh hidden units -> 1 linear output
// ---------------------------------------------------------------------------

inline constexpr std::size_t kNetInputs = 10;
inline constexpr std::size_t kNetHidden = 10;

struct NnHyper {
  double learning_rate = 0.01;
  int epochs = 100;
  std::uint64_t seed = 0;
  // z-score inputs before the first layer (statistics from the training set)
  bool standardize = true;
};

struct FeedforwardNet {
  Matrix w1{kNetHidden, kNetInputs};
  std::vector<double> b1 = std::vector<double>(kNetHidden, 0.0);
  std::vector<double> w2 = std::vector<double>(kNetHidden, 0.0);
  double b2 = 0.0;
  Standardizer standardization = Standardizer::identity(kNetInputs);
  NnHyper hyper;
};

struct NnGradients {
  Matrix w1{kNetHidden, kNetInputs};
  std::vector<double> b1 = std::vector<double>(kNetHidden, 0.0);
  std::vector<double> w2 = std::vector<double>(kNetHidden, 0.0);
  double b2 = 0.0;
};

// Throws ValidationError if the shapes differ from 10 -> 10 -> 1.
void validate_network(const FeedforwardNet& net);

// Weights uniform in [-0.5, 0.5] drawn in order W1 (row-major), b1, W2, b2.
FeedforwardNet init_network(std::uint64_t seed);

// Raw output W2 tanh(W1 z + b1) + b2 for an already standardized input z.
double nn_forward(const FeedforwardNet& net, std::span<const double> z);

// Loss 0.5 (y - target)^2 and its gradient for a standardized input z.
double nn_loss(const FeedforwardNet& net, std::span<const double> z, double target);
NnGradients nn_gradients(const FeedforwardNet& net, std::span<const double> z, double target);

// Per-sample backpropagation at a fixed learning rate, epochs shuffled by
// seed. Labels are used as +-1 regression targets. If epoch_loss is given it
// receives the mean per-sample loss of every epoch.
FeedforwardNet nn_train(const TrainingSet& set, const NnHyper& hyper,
                        std::vector<double>* epoch_loss = nullptr);

Prediction nn_predict(const FeedforwardNet& net, std::span<const double> x);

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

struct FoldResult {
  std::size_t concentration_correct = 0;
  std::size_t concentration_total = 0;
  std::size_t relaxation_correct = 0;
  std::size_t relaxation_total = 0;

  void add(StateLabel truth, StateLabel predicted);
  double concentration_acc() const;
  double relaxation_acc() const;
  double overall_acc() const;
};

// Per-class and overall accuracy, pooled over folds.
struct AccuracyReport {
  double concentration_acc = 0.0;
  double relaxation_acc = 0.0;
  double overall_acc = 0.0;
  std::vector<FoldResult> per_fold;

  static AccuracyReport from_folds(std::vector<FoldResult> folds);

  // Fold rows plus a pooled row under "Concentration Relaxation All" columns.
  std::string table() const;
};

using Predictor = std::function<StateLabel(std::span<const double>)>;
using Trainer = std::function<Predictor(const TrainingSet&)>;

// Seeded stratified assignment of sample indices to k folds. Each class is
// shuffled and dealt round-robin, so per-fold class counts differ by at most one.
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const StateLabel> labels,
                                                       std::size_t k, std::uint64_t seed);

AccuracyReport cross_validate(const TrainingSet& set, std::size_t k, const Trainer& trainer,
                              std::uint64_t seed = 0);

} // namespace mindplane::models
