#pragma once

#include "mindplane/recording.hpp"
#include "mindplane/signal_core.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace mindplane::ingestion {

// Pull interface shared by live, replayed and synthetic streams.
class SampleSource {
public:
  virtual ~SampleSource() = default;

  virtual const ChannelSet& channels() const = 0;
  // Next sample, or nullopt once the stream has ended.
  virtual std::optional<LabeledSample> next() = 0;
  // Samples lost to queue overflow (live sources only).
  virtual std::uint64_t drop_count() const { return 0; }
};

// In-memory rows, handed out in order.
class VectorSource : public SampleSource {
public:
  VectorSource(ChannelSet channels, std::vector<LabeledSample> rows);

  const ChannelSet& channels() const override { return channels_; }
  std::optional<LabeledSample> next() override;

private:
  ChannelSet channels_;
  std::vector<LabeledSample> rows_;
  std::size_t pos_ = 0;
};

// Sleeps so that sample i is released at start + i * 100 ms / speed.
// speed 0 disables pacing.
class Pacer {
public:
  explicit Pacer(double speed);
  void wait_for(std::size_t index);

private:
  double speed_;
  std::optional<std::chrono::steady_clock::time_point> start_;
};

// Replays a recording file at 10 Hz / speed. Timestamps are regenerated on
// the uniform 100 ms grid starting at 0; labels are passed through.
class CsvReplaySource : public SampleSource {
public:
  CsvReplaySource(const std::filesystem::path& path, double speed);

  const ChannelSet& channels() const override { return recording_.channels; }
  std::optional<LabeledSample> next() override;

  const SessionRecording& recording() const { return recording_; }

private:
  SessionRecording recording_;
  Pacer pacer_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

struct SyntheticConfig {
  std::uint64_t seed = 42;
  ChannelSet channels = ChannelSet::default_set();
  std::vector<double> conc_mean = {1.30, 0.94};
  std::vector<double> relax_mean = {0.70, 0.86};
  double noise_std = 0.2;
  // Weight of the shared source s(t) added identically to every channel.
  double common_source_gain = 0.15;
  // s(t+1) = rho * s(t) + N(0, 1). rho = 1 is a plain random walk; rho < 1
  // keeps the walk bounded over long sessions.
  double common_source_rho = 0.98;
};

// Throws ValidationError when the config breaks its invariants.
void validate_config(const SyntheticConfig& cfg);

SyntheticConfig load_synthetic_config(const std::filesystem::path& path);
std::string synthetic_config_json(const SyntheticConfig& cfg);

struct ScheduleSegment {
  std::optional<StateLabel> label;  // nullopt: rest / unlabeled
  double duration_s = 0.0;
};

// round(duration_s * 10)
std::size_t segment_samples(const ScheduleSegment& s);

// Alternating concentration/relaxation segments of 5-10 s (0.1 s resolution),
// starting with concentration, truncated to total_s.
std::vector<ScheduleSegment> free_control_schedule(std::uint64_t seed, double total_s = 120.0);

// Per 100 ms step and channel:
//   value = class_mean + gain * s(t) + N(0, noise_std)
// Rest segments use the midpoint of the two class means. The stream is a pure
// function of (cfg, schedule).
class SynthSource : public SampleSource {
public:
  SynthSource(SyntheticConfig cfg, std::vector<ScheduleSegment> schedule, double speed = 0.0);

  const ChannelSet& channels() const override { return cfg_.channels; }
  std::optional<LabeledSample> next() override;

  std::size_t total_samples() const { return total_; }

private:
  SyntheticConfig cfg_;
  std::vector<ScheduleSegment> schedule_;
  Pacer pacer_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  double common_ = 0.0;
  std::size_t segment_ = 0;
  std::size_t in_segment_ = 0;
  std::size_t index_ = 0;
  std::size_t total_ = 0;
};

std::vector<LabeledSample> synth_stream(const SyntheticConfig& cfg,
                                        const std::vector<ScheduleSegment>& schedule);

// ---------------------------------------------------------------------------
// Trial protocol
// ---------------------------------------------------------------------------

enum class Group { A, B };  // A: concentration block first; B: relaxation first

struct TrialProtocol {
  int n_trials_per_class = 20;
  double concentration_s = 10.0;
  double relaxation_s = 15.0;
  double rest_s = 120.0;
  Group group = Group::A;

  double duration_for(StateLabel label) const {
    return label.is_concentration() ? concentration_s : relaxation_s;
  }
};

void validate_protocol(const TrialProtocol& p);

// First block, rest, second block; one segment per trial.
std::vector<ScheduleSegment> protocol_schedule(const TrialProtocol& p);

struct PhaseMarker {
  enum class Kind { trial, rest, done };
  Kind kind = Kind::trial;
  std::optional<StateLabel> label;
  int trial_index = -1;  // 0-based within the session
  std::int64_t t_ms = 0;
  double duration_s = 0.0;
};

using MarkerCallback = std::function<void(const PhaseMarker&)>;

// Raised when the source ends before the protocol does.
class PartialSessionError : public std::runtime_error {
public:
  PartialSessionError(const std::string& what, std::vector<Trial> completed)
      : std::runtime_error(what), completed_(std::move(completed)) {}
  const std::vector<Trial>& completed() const { return completed_; }

private:
  std::vector<Trial> completed_;
};

// Runs the protocol against a source. Each phase spans duration seconds of
// sample timestamps measured from its first sample; rest samples are
// discarded. Returns 2 * n_trials_per_class trials in presentation order.
std::vector<Trial> run_protocol(const TrialProtocol& p, SampleSource& source,
                                const MarkerCallback& on_marker = {},
                                CsvRecorder* recorder = nullptr);

// Recovers trials from a labeled recording: each run of equally labeled rows
// is cut into consecutive trials of the protocol's duration for that label.
std::vector<Trial> split_trials(const SessionRecording& rec, const TrialProtocol& p);

// Drains up to max_samples (0 = until the source ends) into a CSV file.
SessionRecording record_session(SampleSource& source, const std::filesystem::path& path,
                                std::size_t max_samples = 0, bool labeled = true);

} // namespace mindplane::ingestion
