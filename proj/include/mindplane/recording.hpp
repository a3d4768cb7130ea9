#pragma once

#include "mindplane/signal_core.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace mindplane::ingestion {

struct LabeledSample {
  EegSample sample;
  std::optional<StateLabel> label;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

// A session as stored on disk:
//   t_ms,f7_gamma,f8_gamma[,f7_beta,f8_beta,f7_alpha,f8_alpha][,label]
// label is 1, -1 or empty (unlabeled rows such as rest periods).
struct SessionRecording {
  ChannelSet channels = ChannelSet::default_set();
  std::vector<LabeledSample> rows;
  bool labeled = false;  // whether the label column is present

  std::vector<EegSample> samples() const;
};

// Shortest decimal text that parses back to exactly v.
std::string format_double(double v);

std::string csv_header(const ChannelSet& channels, bool labeled);

// Parses a recording. Errors cite the 1-based line number.
SessionRecording read_recording(const std::filesystem::path& path);

// Writes rows as they arrive, flushing after each one. Construction fails
// (IoError) without creating anything when the path cannot be opened.
class CsvRecorder {
public:
  CsvRecorder(const std::filesystem::path& path, ChannelSet channels, bool labeled);

  void write(const LabeledSample& row);
  std::size_t rows_written() const { return rows_; }

private:
  std::filesystem::path path_;
  ChannelSet channels_;
  bool labeled_;
  std::ofstream out_;
  std::size_t rows_ = 0;
};

void write_recording(const SessionRecording& rec, const std::filesystem::path& path);

} // namespace mindplane::ingestion
