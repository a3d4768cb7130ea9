#include "mindplane/ingestion.hpp"

#include "mindplane/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <thread>

namespace mindplane::ingestion {

VectorSource::VectorSource(ChannelSet channels, std::vector<LabeledSample> rows)
    : channels_(std::move(channels)), rows_(std::move(rows)) {}

std::optional<LabeledSample> VectorSource::next() {
  if (pos_ >= rows_.size()) return std::nullopt;
  return rows_[pos_++];
}

Pacer::Pacer(double speed) : speed_(speed) {
  if (!(speed >= 0.0) || !std::isfinite(speed)) throw ValidationError("replay speed must be >= 0");
}

void Pacer::wait_for(std::size_t index) {
  if (speed_ == 0.0) return;
  const auto now = std::chrono::steady_clock::now();
  if (!start_) start_ = now;
  const auto offset = std::chrono::duration<double, std::milli>(
      static_cast<double>(index) * static_cast<double>(kSamplePeriodMs) / speed_);
  std::this_thread::sleep_until(*start_ +
                                std::chrono::duration_cast<std::chrono::nanoseconds>(offset));
}

CsvReplaySource::CsvReplaySource(const std::filesystem::path& path, double speed)
    : recording_(read_recording(path)), pacer_(speed) {}

std::optional<LabeledSample> CsvReplaySource::next() {
  if (pos_ >= recording_.rows.size()) return std::nullopt;
  pacer_.wait_for(pos_);
  LabeledSample s = recording_.rows[pos_];
  s.sample.timestamp_ms = static_cast<std::int64_t>(pos_) * kSamplePeriodMs;
  ++pos_;
  return s;
}

// ---------------------------------------------------------------------------
// Synthetic

void validate_config(const SyntheticConfig& cfg) {
  const std::size_t c = cfg.channels.size();
  if (cfg.conc_mean.size() != c || cfg.relax_mean.size() != c)
    throw ValidationError("synthetic config: class means need one entry per channel");
  if (!(cfg.noise_std > 0.0)) throw ValidationError("synthetic config: noise_std must be > 0");
  if (!(cfg.common_source_gain >= 0.0))
    throw ValidationError("synthetic config: common_source_gain must be >= 0");
  if (!(cfg.common_source_rho >= 0.0 && cfg.common_source_rho <= 1.0))
    throw ValidationError("synthetic config: common_source_rho must lie in [0, 1]");
  for (std::size_t i = 0; i < c; ++i)
    if (cfg.channels[i].band == Band::gamma && !(cfg.conc_mean[i] > cfg.relax_mean[i]))
      throw ValidationError("synthetic config: concentration gamma mean must exceed relaxation");
}

SyntheticConfig load_synthetic_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open synthetic config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("synthetic config: ") + e.what(), e.byte);
  }
  SyntheticConfig cfg;
  try {
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("channels"))
      cfg.channels = ChannelSet::parse(j.at("channels").get<std::vector<std::string>>());
    cfg.conc_mean = j.value("conc_mean", cfg.conc_mean);
    cfg.relax_mean = j.value("relax_mean", cfg.relax_mean);
    cfg.noise_std = j.value("noise_std", cfg.noise_std);
    cfg.common_source_gain = j.value("common_source_gain", cfg.common_source_gain);
    cfg.common_source_rho = j.value("common_source_rho", cfg.common_source_rho);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("synthetic config: ") + e.what());
  }
  validate_config(cfg);
  return cfg;
}

std::string synthetic_config_json(const SyntheticConfig& cfg) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["channels"] = cfg.channels.names();
  j["conc_mean"] = cfg.conc_mean;
  j["relax_mean"] = cfg.relax_mean;
  j["noise_std"] = cfg.noise_std;
  j["common_source_gain"] = cfg.common_source_gain;
  j["common_source_rho"] = cfg.common_source_rho;
  return j.dump(2);
}

std::size_t segment_samples(const ScheduleSegment& s) {
  return static_cast<std::size_t>(std::llround(s.duration_s * kSampleRateHz));
}

std::vector<ScheduleSegment> free_control_schedule(std::uint64_t seed, double total_s) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> tenths(50, 100);
  std::vector<ScheduleSegment> out;
  double used = 0.0;
  bool up = true;
  while (used + 1e-9 < total_s) {
    double d = tenths(rng) / 10.0;
    d = std::min(d, total_s - used);
    out.push_back({up ? StateLabel::concentration() : StateLabel::relaxation(), d});
    used += d;
    up = !up;
  }
  return out;
}

SynthSource::SynthSource(SyntheticConfig cfg, std::vector<ScheduleSegment> schedule, double speed)
    : cfg_(std::move(cfg)), schedule_(std::move(schedule)), pacer_(speed), rng_(cfg_.seed) {
  validate_config(cfg_);
  for (const auto& s : schedule_) {
    if (!(s.duration_s > 0.0)) throw ValidationError("schedule segments must have positive duration");
    total_ += segment_samples(s);
  }
}

std::optional<LabeledSample> SynthSource::next() {
  while (segment_ < schedule_.size() && in_segment_ >= segment_samples(schedule_[segment_])) {
    ++segment_;
    in_segment_ = 0;
  }
  if (segment_ >= schedule_.size()) return std::nullopt;
  pacer_.wait_for(index_);

  const auto& seg = schedule_[segment_];
  common_ = cfg_.common_source_rho * common_ + normal_(rng_);

  LabeledSample out;
  out.label = seg.label;
  out.sample.timestamp_ms = static_cast<std::int64_t>(index_) * kSamplePeriodMs;
  out.sample.values.resize(cfg_.channels.size());
  for (std::size_t c = 0; c < cfg_.channels.size(); ++c) {
    double mean = 0.5 * (cfg_.conc_mean[c] + cfg_.relax_mean[c]);
    if (seg.label) mean = seg.label->is_concentration() ? cfg_.conc_mean[c] : cfg_.relax_mean[c];
    out.sample.values[c] =
        mean + cfg_.common_source_gain * common_ + cfg_.noise_std * normal_(rng_);
  }
  ++in_segment_;
  ++index_;
  return out;
}

std::vector<LabeledSample> synth_stream(const SyntheticConfig& cfg,
                                        const std::vector<ScheduleSegment>& schedule) {
  SynthSource src(cfg, schedule);
  std::vector<LabeledSample> out;
  out.reserve(src.total_samples());
  while (auto s = src.next()) out.push_back(std::move(*s));
  return out;
}

// ---------------------------------------------------------------------------
// Protocol

void validate_protocol(const TrialProtocol& p) {
  if (p.n_trials_per_class <= 0 || !(p.concentration_s > 0.0) || !(p.relaxation_s > 0.0) ||
      !(p.rest_s >= 0.0))
    throw ValidationError("protocol durations and trial counts must be positive");
}

namespace {

struct Block {
  StateLabel label;
  double duration_s;
};

std::vector<Block> block_order(const TrialProtocol& p) {
  Block conc{StateLabel::concentration(), p.concentration_s};
  Block relax{StateLabel::relaxation(), p.relaxation_s};
  if (p.group == Group::A) return {conc, relax};
  return {relax, conc};
}

// Source wrapper allowing one sample of look-back.
class Peekable {
public:
  explicit Peekable(SampleSource& src) : src_(src) {}
  std::optional<LabeledSample> next() {
    if (held_) return std::exchange(held_, std::nullopt);
    return src_.next();
  }
  void put_back(LabeledSample s) { held_ = std::move(s); }

private:
  SampleSource& src_;
  std::optional<LabeledSample> held_;
};

} // namespace

std::vector<ScheduleSegment> protocol_schedule(const TrialProtocol& p) {
  validate_protocol(p);
  std::vector<ScheduleSegment> out;
  const auto blocks = block_order(p);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (b == 1 && p.rest_s > 0.0) out.push_back({std::nullopt, p.rest_s});
    for (int i = 0; i < p.n_trials_per_class; ++i)
      out.push_back({blocks[b].label, blocks[b].duration_s});
  }
  return out;
}

std::vector<Trial> run_protocol(const TrialProtocol& p, SampleSource& source,
                                const MarkerCallback& on_marker, CsvRecorder* recorder) {
  validate_protocol(p);
  Peekable in(source);
  std::vector<Trial> trials;
  int trial_index = 0;

  // Collects samples whose timestamp lies within duration_s of the phase's
  // first sample. Returns false if the source ended first.
  auto run_phase = [&](double duration_s, std::optional<StateLabel> label,
                       std::vector<EegSample>* keep) {
    auto first = in.next();
    if (!first) return false;
    const std::int64_t start = first->sample.timestamp_ms;
    const auto span_ms = static_cast<std::int64_t>(std::llround(duration_s * 1000.0));
    if (on_marker) {
      PhaseMarker m;
      m.kind = label ? PhaseMarker::Kind::trial : PhaseMarker::Kind::rest;
      m.label = label;
      m.trial_index = label ? trial_index : -1;
      m.t_ms = start;
      m.duration_s = duration_s;
      on_marker(m);
    }
    std::optional<LabeledSample> s = std::move(first);
    while (s && s->sample.timestamp_ms - start < span_ms) {
      if (recorder) recorder->write({s->sample, label});
      if (keep) keep->push_back(std::move(s->sample));
      s = in.next();
    }
    if (s) {
      in.put_back(std::move(*s));
      return true;
    }
    // Source ended: the phase is complete only if its time span was covered.
    return keep == nullptr ||
           static_cast<std::int64_t>(keep->size()) * kSamplePeriodMs >= span_ms - 2 * kSamplePeriodMs;
  };

  const auto blocks = block_order(p);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (b == 1 && p.rest_s > 0.0 && !run_phase(p.rest_s, std::nullopt, nullptr))
      throw PartialSessionError("source ended during the rest period", std::move(trials));
    for (int i = 0; i < p.n_trials_per_class; ++i) {
      Trial t;
      t.label = blocks[b].label;
      t.nominal_duration_s = static_cast<int>(std::lround(blocks[b].duration_s));
      if (!run_phase(blocks[b].duration_s, t.label, &t.samples))
        throw PartialSessionError("source ended during trial " + std::to_string(trial_index + 1),
                                  std::move(trials));
      trials.push_back(std::move(t));
      ++trial_index;
    }
  }
  if (on_marker) {
    PhaseMarker done;
    done.kind = PhaseMarker::Kind::done;
    on_marker(done);
  }
  return trials;
}

std::vector<Trial> split_trials(const SessionRecording& rec, const TrialProtocol& p) {
  validate_protocol(p);
  std::vector<Trial> out;
  std::size_t i = 0;
  while (i < rec.rows.size()) {
    if (!rec.rows[i].label) {
      ++i;
      continue;
    }
    const StateLabel label = *rec.rows[i].label;
    const double duration = p.duration_for(label);
    const auto span_ms = static_cast<std::int64_t>(std::llround(duration * 1000.0));
    std::size_t end = i;
    while (end < rec.rows.size() && rec.rows[end].label == label) ++end;

    // Cut the run [i, end) into consecutive trials of span_ms each.
    std::size_t pos = i;
    while (pos < end) {
      Trial t;
      t.label = label;
      t.nominal_duration_s = static_cast<int>(std::lround(duration));
      const std::int64_t start = rec.rows[pos].sample.timestamp_ms;
      while (pos < end && rec.rows[pos].sample.timestamp_ms - start < span_ms)
        t.samples.push_back(rec.rows[pos++].sample);
      validate_trial(t);
      out.push_back(std::move(t));
    }
    i = end;
  }
  return out;
}

SessionRecording record_session(SampleSource& source, const std::filesystem::path& path,
                                std::size_t max_samples, bool labeled) {
  CsvRecorder recorder(path, source.channels(), labeled);
  SessionRecording rec;
  rec.channels = source.channels();
  rec.labeled = labeled;
  while (max_samples == 0 || rec.rows.size() < max_samples) {
    auto s = source.next();
    if (!s) break;
    if (!labeled) s->label.reset();
    recorder.write(*s);
    rec.rows.push_back(std::move(*s));
  }
  return rec;
}

} // namespace mindplane::ingestion
