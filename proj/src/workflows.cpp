#include "mindplane/workflows.hpp"

#include "mindplane/csp.hpp"
#include "mindplane/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace mindplane::pipeline {

std::vector<EegSample> effective_segment(const Trial& trial, const SvmWorkflowOptions& opt) {
  if (trial.label.is_concentration())
    return extract_segment(trial, opt.concentration_from_s, opt.concentration_to_s);
  return extract_segment(trial, opt.relaxation_from_s, opt.relaxation_to_s);
}

std::vector<Window> sliding_windows(std::span<const EegSample> samples, std::size_t window_len) {
  std::vector<Window> out;
  if (samples.size() < window_len) return out;
  for (std::size_t end = window_len; end <= samples.size(); ++end)
    out.push_back(make_window(samples.subspan(end - window_len, window_len)));
  return out;
}

namespace {

void split_by_class(std::span<const Trial> trials, std::span<const std::size_t> use,
                    std::vector<std::size_t>& conc, std::vector<std::size_t>& relax) {
  for (auto i : use) (trials[i].label.is_concentration() ? conc : relax).push_back(i);
}

std::vector<Window> segment_windows(const Trial& t, const SvmWorkflowOptions& opt) {
  return sliding_windows(effective_segment(t, opt), opt.window_len);
}

} // namespace

models::SvmModelFile fit_csp_svm(std::span<const Trial> trials, std::span<const std::size_t> use,
                                 const ChannelSet& channels, const SvmWorkflowOptions& opt) {
  std::vector<std::size_t> conc, relax;
  split_by_class(trials, use, conc, relax);
  if (conc.empty() || relax.empty())
    throw ValidationError("CSP+SVM training needs trials of both classes");

  // One group per (concentration, relaxation) trial pair; the shorter class
  // list wraps around when the counts differ.
  std::vector<csp::SpatialFilterPair> group_filters;
  const std::size_t groups = std::max(conc.size(), relax.size());
  for (std::size_t g = 0; g < groups; ++g) {
    const auto wc = segment_windows(trials[conc[g % conc.size()]], opt);
    const auto wr = segment_windows(trials[relax[g % relax.size()]], opt);
    group_filters.push_back(
        csp::compute_filters(csp::class_covariance(wc), csp::class_covariance(wr)));
  }

  models::SvmModelFile model;
  model.meta.channels = channels;
  model.meta.window_len = opt.window_len;
  model.filters = csp::average_filters(group_filters);

  models::TrainingSet set;
  for (auto i : use) {
    for (const auto& w : segment_windows(trials[i], opt)) {
      set.features.push_back(csp::apply_filters(model.filters, w).v);
      set.labels.push_back(trials[i].label);
    }
  }
  model.svm = models::svm_train(set, opt.hyper);
  return model;
}

models::FoldResult evaluate_csp_svm(const models::SvmModelFile& model,
                                    std::span<const Trial> trials,
                                    std::span<const std::size_t> use,
                                    const SvmWorkflowOptions& opt) {
  models::FoldResult r;
  for (auto i : use)
    for (const auto& w : segment_windows(trials[i], opt))
      r.add(trials[i].label,
            models::svm_predict(model.svm, csp::apply_filters(model.filters, w).v).label);
  return r;
}

namespace {

void check_trials(std::span<const Trial> trials, const ChannelSet& channels) {
  std::size_t conc = 0, relax = 0;
  for (const auto& t : trials) {
    (t.label.is_concentration() ? conc : relax) += 1;
    for (const auto& s : t.samples)
      if (s.values.size() != channels.size())
        throw ValidationError("trial samples do not match the channel set");
  }
  if (conc != relax || conc == 0)
    throw ValidationError("class imbalance: " + std::to_string(conc) + " concentration vs " +
                          std::to_string(relax) + " relaxation trials");
}

template <typename Fit, typename Eval>
models::AccuracyReport trial_cv(std::span<const Trial> trials, const SvmWorkflowOptions& opt,
                                Fit fit, Eval eval) {
  std::vector<StateLabel> labels;
  for (const auto& t : trials) labels.push_back(t.label);
  const auto folds = models::stratified_folds(labels, opt.folds, opt.seed);
  std::vector<models::FoldResult> results;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < folds.size(); ++g)
      if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
    std::sort(train.begin(), train.end());
    const auto model = fit(train);
    results.push_back(eval(model, folds[f]));
  }
  return models::AccuracyReport::from_folds(std::move(results));
}

} // namespace

SvmWorkflowResult train_svm_workflow(std::span<const Trial> trials, const ChannelSet& channels,
                                     const SvmWorkflowOptions& opt) {
  check_trials(trials, channels);

  std::vector<std::size_t> conc, relax;
  std::vector<std::size_t> all(trials.size());
  std::iota(all.begin(), all.end(), 0);
  split_by_class(trials, all, conc, relax);
  if (opt.train_trials_per_class == 0 || opt.train_trials_per_class >= conc.size())
    throw ValidationError("train split must leave test trials in both classes");

  SvmWorkflowResult out;
  std::mt19937_64 rng(opt.seed);
  std::shuffle(conc.begin(), conc.end(), rng);
  std::shuffle(relax.begin(), relax.end(), rng);
  for (std::size_t i = 0; i < conc.size(); ++i) {
    auto& dst = i < opt.train_trials_per_class ? out.train_trials : out.test_trials;
    dst.push_back(conc[i]);
    dst.push_back(relax[i]);
  }
  std::sort(out.train_trials.begin(), out.train_trials.end());
  std::sort(out.test_trials.begin(), out.test_trials.end());

  out.model = fit_csp_svm(trials, out.train_trials, channels, opt);
  out.test_result = evaluate_csp_svm(out.model, trials, out.test_trials, opt);
  out.test_accuracy = out.test_result.overall_acc();
  out.accepted = out.test_accuracy > opt.accept_above;

  out.cv_report = trial_cv(
      trials, opt,
      [&](const std::vector<std::size_t>& train) { return fit_csp_svm(trials, train, channels, opt); },
      [&](const models::SvmModelFile& m, const std::vector<std::size_t>& test) {
        return evaluate_csp_svm(m, trials, test, opt);
      });
  return out;
}

namespace {

struct ThresholdRule {
  std::size_t channel = 0;
  double threshold = 0.0;
  double polarity = 1.0;  // +1: above threshold means concentration

  StateLabel predict(const Window& w) const {
    const auto row = w.data.row(channel);
    const double mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
    return polarity * (mean - threshold) > 0.0 ? StateLabel::concentration()
                                               : StateLabel::relaxation();
  }
};

ThresholdRule fit_threshold(std::span<const Trial> trials, std::span<const std::size_t> use,
                            const SvmWorkflowOptions& opt) {
  struct Point {
    double value;
    int label;
  };
  const std::size_t channels = trials[use.front()].samples.front().values.size();
  ThresholdRule best;
  std::size_t best_correct = 0;

  for (std::size_t c = 0; c < channels; ++c) {
    std::vector<Point> pts;
    for (auto i : use) {
      for (const auto& w : segment_windows(trials[i], opt)) {
        const auto row = w.data.row(c);
        pts.push_back({std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size()),
                       trials[i].label.value()});
      }
    }
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.value < b.value; });
    const std::size_t total_conc =
        static_cast<std::size_t>(std::count_if(pts.begin(), pts.end(), [](const Point& p) { return p.label == 1; }));
    // Cut k puts points [0, k) below the threshold and [k, n) above it.
    const std::size_t n = pts.size();
    const std::size_t relax_total = n - total_conc;
    std::size_t conc_below = 0;
    for (std::size_t k = 0; k <= n; ++k) {
      if (k > 0) conc_below += pts[k - 1].label == 1 ? 1 : 0;
      if (k > 0 && k < n && pts[k].value == pts[k - 1].value) continue;
      const std::size_t relax_below = k - conc_below;
      const std::size_t up_correct = (total_conc - conc_below) + relax_below;
      const std::size_t down_correct = conc_below + (relax_total - relax_below);
      const double cut = k == 0   ? pts.front().value - 1.0
                         : k == n ? pts.back().value + 1.0
                                  : 0.5 * (pts[k - 1].value + pts[k].value);
      if (up_correct > best_correct) {
        best_correct = up_correct;
        best = {c, cut, 1.0};
      }
      if (down_correct > best_correct) {
        best_correct = down_correct;
        best = {c, cut, -1.0};
      }
    }
  }
  return best;
}

} // namespace

models::AccuracyReport single_channel_baseline_cv(std::span<const Trial> trials,
                                                  const SvmWorkflowOptions& opt) {
  return trial_cv(
      trials, opt,
      [&](const std::vector<std::size_t>& train) { return fit_threshold(trials, train, opt); },
      [&](const ThresholdRule& rule, const std::vector<std::size_t>& test) {
        models::FoldResult r;
        for (auto i : test)
          for (const auto& w : segment_windows(trials[i], opt)) r.add(trials[i].label, rule.predict(w));
        return r;
      });
}

LookaheadPairs build_lookahead_pairs(std::span<const EegSample> samples,
                                     const models::SvmModelFile& svm, std::size_t lookahead) {
  const std::size_t len = svm.meta.window_len;
  if (samples.size() < len + lookahead)
    throw ValidationError("recording has " + std::to_string(samples.size()) +
                          " samples; look-ahead training needs at least " +
                          std::to_string(len + lookahead));

  // SVM label of the window ending at every t >= len - 1.
  std::vector<StateLabel> label_at(samples.size(), StateLabel::relaxation());
  std::vector<Window> windows(samples.size());
  for (std::size_t t = len - 1; t < samples.size(); ++t) {
    windows[t] = make_window(samples.subspan(t + 1 - len, len));
    label_at[t] =
        models::svm_predict(svm.svm, csp::apply_filters(svm.filters, windows[t]).v).label;
  }

  LookaheadPairs out;
  for (std::size_t t = len - 1; t + lookahead < samples.size(); ++t) {
    out.set.features.push_back(flatten_window(windows[t]));
    out.set.labels.push_back(label_at[t + lookahead]);
    out.window_end.push_back(t);
    out.target_end.push_back(t + lookahead);
  }
  return out;
}

NnWorkflowResult train_nn_workflow(const ingestion::SessionRecording& recording,
                                   const models::SvmModelFile& svm, const models::NnHyper& hyper) {
  if (!(recording.channels == svm.meta.channels))
    throw ValidationError("recording channels do not match the SVM model");
  const auto samples = recording.samples();
  auto pairs = build_lookahead_pairs(samples, svm);

  NnWorkflowResult out;
  out.pairs = pairs.set.size();
  out.model.meta = svm.meta;
  out.model.net = models::nn_train(pairs.set, hyper, &out.epoch_loss);
  return out;
}

double lookahead_agreement(const models::FnnModelFile& fnn,
                           const ingestion::SessionRecording& recording, std::size_t lookahead) {
  const auto samples = recording.samples();
  const std::size_t len = fnn.meta.window_len;
  std::size_t agree = 0, counted = 0;
  for (std::size_t t = len - 1; t + lookahead < samples.size(); ++t) {
    const auto& truth = recording.rows[t + lookahead].label;
    if (!truth) continue;
    const auto w = make_window(std::span(samples).subspan(t + 1 - len, len));
    agree += models::nn_predict(fnn.net, flatten_window(w)).label == *truth ? 1 : 0;
    ++counted;
  }
  if (counted == 0) throw ValidationError("recording has no labeled look-ahead targets");
  return static_cast<double>(agree) / static_cast<double>(counted);
}

LatencyStats benchmark_latency(const PipelineConfig& cfg, const models::ModelFile& model,
                               ingestion::SampleSource& source, std::size_t n_ticks) {
  LatencyStats stats;
  if (n_ticks == 0) return stats;
  validate_against_model(cfg, model);

  WindowBuffer buffer(cfg.channels.size(), cfg.window_len, cfg.gap_reset_ms);
  PlaneState plane{cfg.plane_start, cfg.plane_step};
  std::vector<double> durations;
  durations.reserve(n_ticks);
  while (durations.size() < n_ticks) {
    auto s = source.next();
    if (!s)
      throw ValidationError("source ran out after " + std::to_string(durations.size()) +
                            " ticks; benchmark needs n_ticks + window_len - 1 samples");
    auto w = buffer.push(s->sample);
    if (!w) continue;
    const auto start = std::chrono::steady_clock::now();
    const auto msg = classify_tick(cfg, model, *w, plane);
    const auto stop = std::chrono::steady_clock::now();
    (void)msg;
    durations.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
  }

  stats.ticks = durations.size();
  stats.mean_ms = std::accumulate(durations.begin(), durations.end(), 0.0) /
                  static_cast<double>(durations.size());
  std::sort(durations.begin(), durations.end());
  auto rank = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(durations.size())));
    return durations[std::clamp<std::size_t>(idx, 1, durations.size()) - 1];
  };
  stats.p50_ms = rank(0.50);
  stats.p99_ms = rank(0.99);
  stats.max_ms = durations.back();
  return stats;
}

} // namespace mindplane::pipeline
