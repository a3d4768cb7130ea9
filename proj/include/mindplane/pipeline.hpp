#pragma once

#include "mindplane/ingestion.hpp"
#include "mindplane/model_io.hpp"
#include "mindplane/signal_core.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mindplane::pipeline {

enum class Mode { svm, fnn, manual };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

struct PipelineConfig {
  int tick_ms = static_cast<int>(kSamplePeriodMs);
  std::size_t window_len = kDefaultWindowLen;
  Mode mode = Mode::svm;
  ChannelSet channels = ChannelSet::default_set();
  std::string model_path;
  int broadcast_port = 8080;
  double plane_step = 0.02;
  double plane_start = 0.5;
  std::int64_t gap_reset_ms = kGapResetMs;
};

// Throws ValidationError if tick_ms is not the sample period or the shape is empty.
void validate_config(const PipelineConfig& cfg);
// Also checks that the model kind, channels and window length agree with cfg.
void validate_against_model(const PipelineConfig& cfg, const models::ModelFile& model);

PipelineConfig load_pipeline_config(const std::filesystem::path& path);
std::string pipeline_config_json(const PipelineConfig& cfg);

struct PlaneState {
  double y = 0.5;  // altitude fraction in [0, 1]
  double step = 0.02;
};

// y' = clamp(y + label * step, 0, 1)
PlaneState plane_update(PlaneState p, StateLabel label);

// One broadcast unit per tick.
struct StateMessage {
  std::int64_t t_ms = 0;
  StateLabel label = StateLabel::relaxation();
  double score = 0.0;
  double plane_y = 0.0;
  Mode mode = Mode::svm;
  std::uint64_t drop_count = 0;

  // {"t_ms":..,"label":..,"score":..,"plane_y":..,"mode":"..","drop_count":..}
  std::string to_json() const;
};

StateMessage parse_state_message(std::string_view json);

// Classifies one window with the model matching cfg.mode, advances the plane
// and returns the message for this tick. The message is stamped with the
// timestamp of the window's newest sample.
StateMessage classify_tick(const PipelineConfig& cfg, const models::ModelFile& model,
                           const Window& w, PlaneState& plane, std::uint64_t drop_count = 0);

// Owns the per-stream state of the tick loop: window buffer, model and plane.
// In manual mode there is no model and only apply_manual_label moves the plane.
class TickLoop {
public:
  TickLoop(PipelineConfig cfg, std::optional<models::ModelFile> model);

  // Feeds one sample; returns a message once a full window is available.
  // Samples with non-increasing timestamps are dropped and counted.
  // Manual mode ignores samples.
  std::optional<StateMessage> on_sample(const EegSample& s, std::uint64_t drop_count = 0);

  // Applies an externally supplied label (dev-mode manual control).
  StateMessage apply_manual_label(StateLabel label, std::int64_t t_ms);

  const PlaneState& plane() const { return plane_; }
  std::size_t rejected() const { return rejected_; }
  const PipelineConfig& config() const { return cfg_; }

private:
  PipelineConfig cfg_;
  std::optional<models::ModelFile> model_;
  WindowBuffer buffer_;
  PlaneState plane_;
  std::size_t rejected_ = 0;
  std::int64_t last_t_ms_ = 0;
};

using MessageSink = std::function<void(const StateMessage&)>;

// Pulls the source dry through a TickLoop, forwarding every message to sink.
// Returns the number of messages emitted.
std::size_t run_stream(TickLoop& loop, ingestion::SampleSource& source, const MessageSink& sink);

} // namespace mindplane::pipeline
