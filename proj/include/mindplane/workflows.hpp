#pragma once

#include "mindplane/ingestion.hpp"
#include "mindplane/model_io.hpp"
#include "mindplane/models.hpp"
#include "mindplane/pipeline.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mindplane::pipeline {

struct SvmWorkflowOptions {
  std::uint64_t seed = 0;
  models::SvmHyper hyper;
  // Effective segments within each trial, seconds from trial start.
  double concentration_from_s = 2.0;
  double concentration_to_s = 6.0;
  double relaxation_from_s = 4.0;
  double relaxation_to_s = 8.0;
  std::size_t window_len = kDefaultWindowLen;
  std::size_t folds = 4;
  std::size_t train_trials_per_class = 15;  // 30 of 40 trials
  double accept_above = 0.80;
};

struct SvmWorkflowResult {
  models::SvmModelFile model;       // trained on the train split
  models::AccuracyReport cv_report; // k-fold over trials, window-level accuracy
  models::FoldResult test_result;   // held-out split, window-level
  double test_accuracy = 0.0;
  bool accepted = false;            // test_accuracy > accept_above
  std::vector<std::size_t> train_trials;
  std::vector<std::size_t> test_trials;
};

// Effective segment of a trial according to its label.
std::vector<EegSample> effective_segment(const Trial& trial, const SvmWorkflowOptions& opt);

// All stride-1 windows over consecutive samples.
std::vector<Window> sliding_windows(std::span<const EegSample> samples, std::size_t window_len);

// Fits CSP filters per (concentration, relaxation) trial pair, averages them,
// and trains the SVM on the CSP features of every effective-segment window.
models::SvmModelFile fit_csp_svm(std::span<const Trial> trials, std::span<const std::size_t> use,
                                 const ChannelSet& channels, const SvmWorkflowOptions& opt);

// Window-level accuracy of a CSP+SVM model over the given trials.
models::FoldResult evaluate_csp_svm(const models::SvmModelFile& model,
                                    std::span<const Trial> trials,
                                    std::span<const std::size_t> use,
                                    const SvmWorkflowOptions& opt);

// Seeded stratified train/test split of trials, CSP fitted on training trials
// only, acceptance when held-out accuracy exceeds accept_above. Also reports
// k-fold cross-validation over trials.
SvmWorkflowResult train_svm_workflow(std::span<const Trial> trials, const ChannelSet& channels,
                                     const SvmWorkflowOptions& opt);

// Same folds as train_svm_workflow's CV, but each fold's classifier is the
// best single channel's window mean against a fitted threshold.
models::AccuracyReport single_channel_baseline_cv(std::span<const Trial> trials,
                                                  const SvmWorkflowOptions& opt);

inline constexpr std::size_t kLookaheadSamples = 5;  // 0.5 s at 10 Hz

// NN training pairs: input = flattened window ending at sample t,
// target = SVM label of the window ending at t + lookahead.
struct LookaheadPairs {
  models::TrainingSet set;
  std::vector<std::size_t> window_end;    // t, per pair
  std::vector<std::size_t> target_end;    // t + lookahead, per pair
};

// N samples give N - window_len + 1 - lookahead pairs.
LookaheadPairs build_lookahead_pairs(std::span<const EegSample> samples,
                                     const models::SvmModelFile& svm,
                                     std::size_t lookahead = kLookaheadSamples);

struct NnWorkflowResult {
  models::FnnModelFile model;
  std::size_t pairs = 0;
  std::vector<double> epoch_loss;
};

NnWorkflowResult train_nn_workflow(const ingestion::SessionRecording& recording,
                                   const models::SvmModelFile& svm, const models::NnHyper& hyper);

// Fraction of windows (ending at t, with t + lookahead in range and labeled)
// where the network's label equals the recorded label of sample t + lookahead.
double lookahead_agreement(const models::FnnModelFile& fnn,
                           const ingestion::SessionRecording& recording,
                           std::size_t lookahead = kLookaheadSamples);

struct LatencyStats {
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p99_ms = 0.0;
  double max_ms = 0.0;
  std::size_t ticks = 0;
};

// Nearest-rank percentiles of per-tick classify_tick durations. Only the
// classification is timed, not window assembly.
LatencyStats benchmark_latency(const PipelineConfig& cfg, const models::ModelFile& model,
                               ingestion::SampleSource& source, std::size_t n_ticks);

} // namespace mindplane::pipeline
