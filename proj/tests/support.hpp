#pragma once

#include "mindplane/ingestion.hpp"
#include "mindplane/workflows.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace mindplane::testing {

// Default generator: F7 gamma means 1.30 vs 0.70 with noise 0.2, i.e. a 3 sigma
// class separation, plus a shared drifting source on every channel.
inline ingestion::SyntheticConfig session_config(std::uint64_t seed) {
  ingestion::SyntheticConfig cfg;
  cfg.seed = seed;
  return cfg;
}

// 40 trials (20 per class) recorded through the protocol runner.
inline std::vector<Trial> synthetic_trials(const ingestion::SyntheticConfig& cfg,
                                           ingestion::Group group = ingestion::Group::A) {
  ingestion::TrialProtocol p;
  p.group = group;
  ingestion::SynthSource source(cfg, ingestion::protocol_schedule(p));
  return ingestion::run_protocol(p, source);
}

// A free-control recording with ground-truth labels from the schedule.
inline ingestion::SessionRecording free_control(const ingestion::SyntheticConfig& cfg,
                                                std::uint64_t schedule_seed, double seconds = 120.0) {
  ingestion::SessionRecording rec;
  rec.channels = cfg.channels;
  rec.labeled = true;
  rec.rows = ingestion::synth_stream(cfg, ingestion::free_control_schedule(schedule_seed, seconds));
  return rec;
}

class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("mindplane_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

} // namespace mindplane::testing
