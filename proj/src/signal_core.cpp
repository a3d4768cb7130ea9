#include "mindplane/signal_core.hpp"

#include "mindplane/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace mindplane {

std::string_view to_string(Band band) {
  switch (band) {
    case Band::gamma: return "gamma";
    case Band::beta: return "beta";
    case Band::alpha: return "alpha";
  }
  return "?";
}

std::string_view to_string(Electrode electrode) {
  return electrode == Electrode::F7 ? "F7" : "F8";
}

std::string ChannelId::name() const {
  return std::string(to_string(electrode)) + "." + std::string(to_string(band));
}

std::string ChannelId::column() const {
  std::string e(to_string(electrode));
  for (auto& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e + "_" + std::string(to_string(band));
}

namespace {

std::optional<ChannelId> parse_parts(std::string_view electrode, std::string_view band) {
  ChannelId id;
  if (electrode == "F7" || electrode == "f7") {
    id.electrode = Electrode::F7;
  } else if (electrode == "F8" || electrode == "f8") {
    id.electrode = Electrode::F8;
  } else {
    return std::nullopt;
  }
  if (band == "gamma") {
    id.band = Band::gamma;
  } else if (band == "beta") {
    id.band = Band::beta;
  } else if (band == "alpha") {
    id.band = Band::alpha;
  } else {
    return std::nullopt;
  }
  return id;
}

std::optional<ChannelId> split_and_parse(std::string_view text, char sep) {
  auto pos = text.find(sep);
  if (pos == std::string_view::npos) return std::nullopt;
  return parse_parts(text.substr(0, pos), text.substr(pos + 1));
}

} // namespace

ChannelId ChannelId::parse(std::string_view text) {
  if (auto id = split_and_parse(text, '.')) return *id;
  throw ValidationError("unknown channel '" + std::string(text) + "'");
}

std::optional<ChannelId> ChannelId::from_column(std::string_view column) {
  return split_and_parse(column, '_');
}

ChannelSet::ChannelSet(std::vector<ChannelId> channels) : channels_(std::move(channels)) {
  if (channels_.empty()) throw ValidationError("channel set must not be empty");
  std::set<ChannelId> seen(channels_.begin(), channels_.end());
  if (seen.size() != channels_.size()) throw ValidationError("channel set contains duplicates");
}

ChannelSet ChannelSet::default_set() {
  return ChannelSet({{Electrode::F7, Band::gamma}, {Electrode::F8, Band::gamma}});
}

ChannelSet ChannelSet::all() {
  std::vector<ChannelId> ids;
  for (Band b : {Band::gamma, Band::beta, Band::alpha})
    for (Electrode e : {Electrode::F7, Electrode::F8}) ids.push_back({e, b});
  return ChannelSet(std::move(ids));
}

ChannelSet ChannelSet::parse(std::span<const std::string> names) {
  std::vector<ChannelId> ids;
  for (const auto& n : names) ids.push_back(ChannelId::parse(n));
  return ChannelSet(std::move(ids));
}

bool ChannelSet::contains(Band band) const {
  return std::any_of(channels_.begin(), channels_.end(),
                     [band](const ChannelId& c) { return c.band == band; });
}

std::optional<std::size_t> ChannelSet::index_of(const ChannelId& id) const {
  auto it = std::find(channels_.begin(), channels_.end(), id);
  if (it == channels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - channels_.begin());
}

std::vector<std::string> ChannelSet::names() const {
  std::vector<std::string> out;
  for (const auto& c : channels_) out.push_back(c.name());
  return out;
}

StateLabel StateLabel::from_int(long long v) {
  if (v == 1) return concentration();
  if (v == -1) return relaxation();
  throw ValidationError("state label must be +1 or -1, got " + std::to_string(v));
}

void validate_trial(const Trial& trial) {
  const long expected = static_cast<long>(trial.nominal_duration_s) * kSampleRateHz;
  const long got = static_cast<long>(trial.samples.size());
  if (std::labs(expected - got) > 2)
    throw ValidationError("trial has " + std::to_string(got) + " samples, expected " +
                          std::to_string(expected) + " +-2");
}

WindowBuffer::WindowBuffer(std::size_t channel_count, std::size_t window_len,
                           std::int64_t gap_reset_ms)
    : channel_count_(channel_count), window_len_(window_len), gap_reset_ms_(gap_reset_ms) {
  if (channel_count_ == 0 || window_len_ == 0)
    throw ValidationError("window buffer needs at least one channel and one sample");
}

std::optional<Window> WindowBuffer::push(const EegSample& s) {
  if (s.values.size() != channel_count_)
    throw ValidationError("sample has " + std::to_string(s.values.size()) + " values, expected " +
                          std::to_string(channel_count_));
  for (double v : s.values)
    if (!std::isfinite(v)) throw ValidationError("sample contains a non-finite value");
  if (last_ts_ && s.timestamp_ms <= *last_ts_)
    throw SampleRejected("non-monotonic timestamp " + std::to_string(s.timestamp_ms) +
                         " after " + std::to_string(*last_ts_));

  if (last_ts_ && s.timestamp_ms - *last_ts_ > gap_reset_ms_ && !samples_.empty()) {
    samples_.clear();
    ++gap_resets_;
  }
  last_ts_ = s.timestamp_ms;
  samples_.push_back(s);
  if (samples_.size() > window_len_) samples_.pop_front();
  if (samples_.size() < window_len_) return std::nullopt;

  Window w{Matrix(channel_count_, window_len_), samples_.front().timestamp_ms,
           samples_.back().timestamp_ms};
  for (std::size_t t = 0; t < window_len_; ++t)
    for (std::size_t c = 0; c < channel_count_; ++c) w.data(c, t) = samples_[t].values[c];
  return w;
}

void WindowBuffer::clear() {
  samples_.clear();
  last_ts_.reset();
}

Window make_window(std::span<const EegSample> samples) {
  if (samples.empty()) throw ValidationError("window needs at least one sample");
  const std::size_t channels = samples.front().values.size();
  Window w{Matrix(channels, samples.size()), samples.front().timestamp_ms,
           samples.back().timestamp_ms};
  for (std::size_t t = 0; t < samples.size(); ++t) {
    if (samples[t].values.size() != channels)
      throw ValidationError("samples disagree on channel count");
    for (std::size_t c = 0; c < channels; ++c) w.data(c, t) = samples[t].values[c];
  }
  return w;
}

std::vector<EegSample> extract_segment(const Trial& trial, double start_s, double end_s) {
  if (!(start_s >= 0.0 && start_s < end_s && end_s <= trial.nominal_duration_s))
    throw BoundsError("segment [" + std::to_string(start_s) + ", " + std::to_string(end_s) +
                      ") outside trial of " + std::to_string(trial.nominal_duration_s) + " s");
  // epsilon: 2.3 * 10 == 22.999999999999996
  auto index = [](double seconds) {
    return static_cast<std::size_t>(std::floor(seconds * kSampleRateHz + 1e-9));
  };
  const std::size_t first = index(start_s);
  const std::size_t last = std::min(index(end_s), trial.samples.size());
  if (first >= last) throw BoundsError("segment starts beyond the recorded trial samples");
  return {trial.samples.begin() + static_cast<std::ptrdiff_t>(first),
          trial.samples.begin() + static_cast<std::ptrdiff_t>(last)};
}

std::vector<double> flatten_window(const Window& w) {
  std::vector<double> out;
  out.reserve(w.channels() * w.length());
  for (std::size_t t = 0; t < w.length(); ++t)
    for (std::size_t c = 0; c < w.channels(); ++c) out.push_back(w.data(c, t));
  return out;
}

Window unflatten_window(std::span<const double> v, std::size_t channels, std::size_t length,
                        std::int64_t start_ts) {
  if (v.size() != channels * length)
    throw ValidationError("flat vector has length " + std::to_string(v.size()) + ", expected " +
                          std::to_string(channels * length));
  Window w{Matrix(channels, length), start_ts,
           start_ts + static_cast<std::int64_t>(length == 0 ? 0 : length - 1) * kSamplePeriodMs};
  for (std::size_t t = 0; t < length; ++t)
    for (std::size_t c = 0; c < channels; ++c) w.data(c, t) = v[t * channels + c];
  return w;
}

} // namespace mindplane
