#include "mindplane/models.hpp"

#include "mindplane/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

namespace mindplane::models {

std::size_t TrainingSet::count(StateLabel label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

TrainingSet TrainingSet::subset(std::span<const std::size_t> indices) const {
  TrainingSet out;
  out.features.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (auto i : indices) {
    out.features.push_back(features.at(i));
    out.labels.push_back(labels.at(i));
  }
  return out;
}

void validate_training_set(const TrainingSet& set, bool require_both_classes) {
  if (set.features.size() != set.labels.size())
    throw ValidationError("training set: feature and label counts differ");
  if (set.features.empty()) throw ValidationError("training set is empty");
  const std::size_t dim = set.dimension();
  for (const auto& f : set.features) {
    if (f.size() != dim) throw ValidationError("training set: ragged feature vectors");
    for (double v : f)
      if (!std::isfinite(v)) throw ValidationError("training set: non-finite feature");
  }
  if (require_both_classes &&
      (set.count(StateLabel::concentration()) == 0 || set.count(StateLabel::relaxation()) == 0))
    throw ValidationError("training set must contain both classes");
}

Standardizer Standardizer::fit(const std::vector<std::vector<double>>& features) {
  if (features.empty()) throw ValidationError("cannot fit standardization on no data");
  const std::size_t dim = features.front().size();
  const auto n = static_cast<double>(features.size());
  Standardizer s;
  s.means.assign(dim, 0.0);
  s.stds.assign(dim, 0.0);
  for (const auto& f : features)
    for (std::size_t d = 0; d < dim; ++d) s.means[d] += f[d];
  for (auto& m : s.means) m /= n;
  for (const auto& f : features)
    for (std::size_t d = 0; d < dim; ++d) s.stds[d] += (f[d] - s.means[d]) * (f[d] - s.means[d]);
  for (auto& sd : s.stds) {
    sd = std::sqrt(sd / n);
    if (!(sd > 1e-12)) {
      sd = 1.0;
      s.clamped = true;
    }
  }
  return s;
}

Standardizer Standardizer::identity(std::size_t dim) {
  Standardizer s;
  s.means.assign(dim, 0.0);
  s.stds.assign(dim, 1.0);
  return s;
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
  if (x.size() != means.size())
    throw ValidationError("input has dimension " + std::to_string(x.size()) + ", model expects " +
                          std::to_string(means.size()));
  std::vector<double> out(x.size());
  for (std::size_t d = 0; d < x.size(); ++d) out[d] = (x[d] - means[d]) / stds[d];
  return out;
}

namespace {

void check_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) throw ValidationError("input contains a non-finite value");
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

} // namespace

// ---------------------------------------------------------------------------
// SVM

LinearSvmModel svm_train(const TrainingSet& set, const SvmHyper& hyper) {
  validate_training_set(set, true);
  if (hyper.epochs <= 0 || !(hyper.lambda > 0.0) || !(hyper.initial_step > 0.0))
    throw ValidationError("svm hyperparameters must be positive");

  LinearSvmModel m;
  m.hyper = hyper;
  m.standardization = Standardizer::fit(set.features);
  std::vector<std::vector<double>> z;
  z.reserve(set.size());
  for (const auto& f : set.features) z.push_back(m.standardization.apply(f));

  const std::size_t dim = set.dimension();
  m.weights.assign(dim, 0.0);
  std::mt19937_64 rng(hyper.seed);
  auto order = iota_indices(set.size());
  double t = 0.0;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (auto i : order) {
      t += 1.0;
      const double eta = hyper.initial_step / (1.0 + hyper.lambda * hyper.initial_step * t);
      const double y = set.labels[i].value();
      const double margin = y * (dot(m.weights, z[i]) + m.bias);
      const double shrink = 1.0 - eta * hyper.lambda;
      for (auto& w : m.weights) w *= shrink;
      if (margin < 1.0) {
        for (std::size_t d = 0; d < dim; ++d) m.weights[d] += eta * y * z[i][d];
        m.bias += eta * y;
      }
    }
  }
  return m;
}

Prediction svm_predict(const LinearSvmModel& m, std::span<const double> x) {
  if (x.size() != m.dimension())
    throw ValidationError("svm input has dimension " + std::to_string(x.size()) +
                          ", model expects " + std::to_string(m.dimension()));
  check_finite(x);
  const double score = dot(m.weights, m.standardization.apply(x)) + m.bias;
  return {label_from_score(score), score};
}

// ---------------------------------------------------------------------------
// Feedforward network

void validate_network(const FeedforwardNet& net) {
  if (net.w1.rows() != kNetHidden || net.w1.cols() != kNetInputs || net.b1.size() != kNetHidden ||
      net.w2.size() != kNetHidden || net.standardization.dimension() != kNetInputs)
    throw ValidationError("network must be 10 inputs -> 10 hidden -> 1 output");
}

FeedforwardNet init_network(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  FeedforwardNet net;
  for (std::size_t h = 0; h < kNetHidden; ++h)
    for (auto& w : net.w1.row(h)) w = u(rng);
  for (auto& b : net.b1) b = u(rng);
  for (auto& w : net.w2) w = u(rng);
  net.b2 = u(rng);
  return net;
}

namespace {

void check_net_input(std::span<const double> z) {
  if (z.size() != kNetInputs)
    throw ValidationError("network input has dimension " + std::to_string(z.size()) +
                          ", expected " + std::to_string(kNetInputs));
}

// Hidden activations tanh(W1 z + b1).
std::vector<double> hidden_layer(const FeedforwardNet& net, std::span<const double> z) {
  std::vector<double> h(kNetHidden);
  for (std::size_t j = 0; j < kNetHidden; ++j) h[j] = std::tanh(dot(net.w1.row(j), z) + net.b1[j]);
  return h;
}

} // namespace

double nn_forward(const FeedforwardNet& net, std::span<const double> z) {
  check_net_input(z);
  return dot(net.w2, hidden_layer(net, z)) + net.b2;
}

double nn_loss(const FeedforwardNet& net, std::span<const double> z, double target) {
  const double e = nn_forward(net, z) - target;
  return 0.5 * e * e;
}

NnGradients nn_gradients(const FeedforwardNet& net, std::span<const double> z, double target) {
  check_net_input(z);
  const auto h = hidden_layer(net, z);
  const double e = dot(net.w2, h) + net.b2 - target;

  NnGradients g;
  g.b2 = e;
  for (std::size_t j = 0; j < kNetHidden; ++j) {
    g.w2[j] = e * h[j];
    const double delta = e * net.w2[j] * (1.0 - h[j] * h[j]);
    g.b1[j] = delta;
    for (std::size_t i = 0; i < kNetInputs; ++i) g.w1(j, i) = delta * z[i];
  }
  return g;
}

FeedforwardNet nn_train(const TrainingSet& set, const NnHyper& hyper,
                        std::vector<double>* epoch_loss) {
  validate_training_set(set, false);
  if (set.dimension() != kNetInputs)
    throw ValidationError("network input has dimension " + std::to_string(set.dimension()) +
                          ", expected " + std::to_string(kNetInputs));
  if (hyper.epochs < 0 || !(hyper.learning_rate > 0.0))
    throw ValidationError("network hyperparameters must be positive");

  FeedforwardNet net = init_network(hyper.seed);
  net.hyper = hyper;
  if (hyper.standardize) net.standardization = Standardizer::fit(set.features);

  std::vector<std::vector<double>> z;
  z.reserve(set.size());
  for (const auto& f : set.features) z.push_back(net.standardization.apply(f));

  // Separate stream from the initializer so changing epochs never changes init.
  std::mt19937_64 rng(hyper.seed ^ 0x9e3779b97f4a7c15ULL);
  auto order = iota_indices(set.size());
  const double lr = hyper.learning_rate;
  if (epoch_loss) epoch_loss->clear();

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (auto i : order) {
      const double target = set.labels[i].value();
      loss_sum += nn_loss(net, z[i], target);
      const NnGradients g = nn_gradients(net, z[i], target);
      for (std::size_t j = 0; j < kNetHidden; ++j) {
        for (std::size_t k = 0; k < kNetInputs; ++k) net.w1(j, k) -= lr * g.w1(j, k);
        net.b1[j] -= lr * g.b1[j];
        net.w2[j] -= lr * g.w2[j];
      }
      net.b2 -= lr * g.b2;
    }
    if (epoch_loss) epoch_loss->push_back(loss_sum / static_cast<double>(set.size()));
  }
  return net;
}

Prediction nn_predict(const FeedforwardNet& net, std::span<const double> x) {
  check_net_input(x);
  check_finite(x);
  const double score = nn_forward(net, net.standardization.apply(x));
  return {label_from_score(score), score};
}

// ---------------------------------------------------------------------------
// Cross-validation

void FoldResult::add(StateLabel truth, StateLabel predicted) {
  const bool ok = truth == predicted;
  if (truth.is_concentration()) {
    ++concentration_total;
    concentration_correct += ok ? 1 : 0;
  } else {
    ++relaxation_total;
    relaxation_correct += ok ? 1 : 0;
  }
}

namespace {
double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}
} // namespace

double FoldResult::concentration_acc() const {
  return ratio(concentration_correct, concentration_total);
}
double FoldResult::relaxation_acc() const { return ratio(relaxation_correct, relaxation_total); }
double FoldResult::overall_acc() const {
  return ratio(concentration_correct + relaxation_correct, concentration_total + relaxation_total);
}

AccuracyReport AccuracyReport::from_folds(std::vector<FoldResult> folds) {
  FoldResult pooled;
  for (const auto& f : folds) {
    pooled.concentration_correct += f.concentration_correct;
    pooled.concentration_total += f.concentration_total;
    pooled.relaxation_correct += f.relaxation_correct;
    pooled.relaxation_total += f.relaxation_total;
  }
  AccuracyReport r;
  r.concentration_acc = pooled.concentration_acc();
  r.relaxation_acc = pooled.relaxation_acc();
  r.overall_acc = pooled.overall_acc();
  r.per_fold = std::move(folds);
  return r;
}

std::string AccuracyReport::table() const {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-8s %14s %11s %8s\n", "Fold", "Concentration", "Relaxation",
                "All");
  out << line;
  for (std::size_t i = 0; i < per_fold.size(); ++i) {
    const auto& f = per_fold[i];
    std::snprintf(line, sizeof line, "%-8zu %13.1f%% %10.1f%% %7.1f%%\n", i + 1,
                  100.0 * f.concentration_acc(), 100.0 * f.relaxation_acc(),
                  100.0 * f.overall_acc());
    out << line;
  }
  std::snprintf(line, sizeof line, "%-8s %13.1f%% %10.1f%% %7.1f%%\n", "Pooled",
                100.0 * concentration_acc, 100.0 * relaxation_acc, 100.0 * overall_acc);
  out << line;
  return out.str();
}

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const StateLabel> labels,
                                                       std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("cross-validation needs k >= 2");
  std::vector<std::size_t> conc, relax;
  for (std::size_t i = 0; i < labels.size(); ++i)
    (labels[i].is_concentration() ? conc : relax).push_back(i);
  if (conc.size() < k || relax.size() < k)
    throw ValidationError("cross-validation needs at least " + std::to_string(k) +
                          " samples per class");

  std::mt19937_64 rng(seed);
  std::shuffle(conc.begin(), conc.end(), rng);
  std::shuffle(relax.begin(), relax.end(), rng);

  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t next = 0;
  for (auto i : conc) folds[next++ % k].push_back(i);
  for (auto i : relax) folds[next++ % k].push_back(i);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

AccuracyReport cross_validate(const TrainingSet& set, std::size_t k, const Trainer& trainer,
                              std::uint64_t seed) {
  validate_training_set(set, true);
  const auto folds = stratified_folds(set.labels, k, seed);
  std::vector<FoldResult> results;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < k; ++g)
      if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
    std::sort(train.begin(), train.end());
    const Predictor predict = trainer(set.subset(train));
    FoldResult r;
    for (auto i : folds[f]) r.add(set.labels[i], predict(set.features[i]));
    results.push_back(r);
  }
  return AccuracyReport::from_folds(std::move(results));
}

} // namespace mindplane::models
