#pragma once

#include "mindplane/linalg.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mindplane {

inline constexpr int kSampleRateHz = 10;
inline constexpr std::int64_t kSamplePeriodMs = 1000 / kSampleRateHz;
inline constexpr std::size_t kDefaultWindowLen = 5;
inline constexpr std::int64_t kGapResetMs = 300;

enum class Electrode { F7, F8 };
// Declaration order doubles as the tie-break priority (gamma first).
enum class Band { gamma, beta, alpha };

struct ChannelId {
  Electrode electrode = Electrode::F7;
  Band band = Band::gamma;

  // "F7.gamma"
  std::string name() const;
  // "f7_gamma", the CSV column spelling
  std::string column() const;

  static ChannelId parse(std::string_view text);          // accepts name() form
  static std::optional<ChannelId> from_column(std::string_view column);

  friend auto operator<=>(const ChannelId&, const ChannelId&) = default;
};

std::string_view to_string(Band band);
std::string_view to_string(Electrode electrode);

// Non-empty ordered subset of the six (electrode, band) channels, no duplicates.
class ChannelSet {
public:
  explicit ChannelSet(std::vector<ChannelId> channels);

  // F7.gamma, F8.gamma
  static ChannelSet default_set();
  // All six, in CSV column order: gamma, beta, alpha; F7 before F8.
  static ChannelSet all();
  static ChannelSet parse(std::span<const std::string> names);

  std::size_t size() const { return channels_.size(); }
  const ChannelId& operator[](std::size_t i) const { return channels_[i]; }
  auto begin() const { return channels_.begin(); }
  auto end() const { return channels_.end(); }
  bool contains(Band band) const;
  std::optional<std::size_t> index_of(const ChannelId& id) const;
  std::vector<std::string> names() const;

  friend bool operator==(const ChannelSet&, const ChannelSet&) = default;

private:
  std::vector<ChannelId> channels_;
};

struct EegSample {
  std::int64_t timestamp_ms = 0;
  std::vector<double> values;  // one per channel of the active set

  friend bool operator==(const EegSample&, const EegSample&) = default;
};

class StateLabel {
public:
  static constexpr StateLabel concentration() { return StateLabel(1); }
  static constexpr StateLabel relaxation() { return StateLabel(-1); }
  // Throws ValidationError for anything other than +1 / -1.
  static StateLabel from_int(long long v);

  constexpr int value() const { return value_; }
  constexpr bool is_concentration() const { return value_ == 1; }

  friend constexpr bool operator==(StateLabel, StateLabel) = default;

private:
  constexpr explicit StateLabel(int v) : value_(v) {}
  int value_;
};

// C x T block of consecutive samples; column t is the sample at time t.
struct Window {
  Matrix data;
  std::int64_t start_ts = 0;
  std::int64_t end_ts = 0;  // timestamp of the newest sample

  std::size_t channels() const { return data.rows(); }
  std::size_t length() const { return data.cols(); }
};

struct Trial {
  StateLabel label = StateLabel::relaxation();
  std::vector<EegSample> samples;
  int nominal_duration_s = 10;
};

// Throws ValidationError if the sample count is not within +-2 of
// nominal_duration_s * 10.
void validate_trial(const Trial& trial);

// Sliding window over the most recent samples, stride one sample.
class WindowBuffer {
public:
  explicit WindowBuffer(std::size_t channel_count, std::size_t window_len = kDefaultWindowLen,
                        std::int64_t gap_reset_ms = kGapResetMs);

  // Appends s and returns the window of the newest window_len samples once
  // that many are buffered. A timestamp not strictly after the previous one
  // throws SampleRejected and leaves the buffer untouched; a jump of more
  // than gap_reset_ms discards everything buffered before s.
  std::optional<Window> push(const EegSample& s);

  void clear();
  std::size_t buffered() const { return samples_.size(); }
  std::size_t gap_resets() const { return gap_resets_; }
  std::size_t channel_count() const { return channel_count_; }
  std::size_t window_len() const { return window_len_; }

private:
  std::size_t channel_count_;
  std::size_t window_len_;
  std::int64_t gap_reset_ms_;
  std::deque<EegSample> samples_;
  std::optional<std::int64_t> last_ts_;
  std::size_t gap_resets_ = 0;
};

// Builds a window from consecutive samples (columns in the given order).
Window make_window(std::span<const EegSample> samples);

// Samples whose offset from the trial start lies in [start_s, end_s), i.e.
// indices floor(start_s*10) .. floor(end_s*10)-1.
std::vector<EegSample> extract_segment(const Trial& trial, double start_s, double end_s);

// Sample-major: [ch1(t1), ch2(t1), ch1(t2), ...].
std::vector<double> flatten_window(const Window& w);
Window unflatten_window(std::span<const double> v, std::size_t channels, std::size_t length,
                        std::int64_t start_ts = 0);

} // namespace mindplane
