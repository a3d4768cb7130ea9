#include "mindplane/recording.hpp"

#include "mindplane/error.hpp"

#include <charconv>
#include <cmath>
#include <string_view>

namespace mindplane::ingestion {

std::vector<EegSample> SessionRecording::samples() const {
  std::vector<EegSample> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.sample);
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_header(const ChannelSet& channels, bool labeled) {
  std::string h = "t_ms";
  for (const auto& c : channels) h += "," + c.column();
  if (labeled) h += ",label";
  return h;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* what) {
  T value{};
  const auto* end = field.data() + field.size();
  auto res = std::from_chars(field.data(), end, value);
  if (field.empty() || res.ec != std::errc{} || res.ptr != end)
    throw ParseError("non-numeric " + std::string(what) + " '" + std::string(field) + "'", line, "line");
  return value;
}

} // namespace

SessionRecording read_recording(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open recording " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError("recording " + path.string() + " is empty", 1, "line");
  auto header = split_fields(line);
  if (header.empty() || header.front() != "t_ms")
    throw ParseError("recording header must start with t_ms", 1, "line");

  SessionRecording rec;
  std::vector<ChannelId> ids;
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i] == "label" && i + 1 == header.size()) {
      rec.labeled = true;
      break;
    }
    auto id = ChannelId::from_column(header[i]);
    if (!id) throw ParseError("unknown column '" + std::string(header[i]) + "'", 1, "line");
    ids.push_back(*id);
  }
  try {
    rec.channels = ChannelSet(std::move(ids));
  } catch (const ValidationError& e) {
    throw ParseError(std::string("bad header: ") + e.what(), 1, "line");
  }

  const std::size_t columns = 1 + rec.channels.size() + (rec.labeled ? 1 : 0);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_fields(line);
    if (fields.size() != columns)
      throw ParseError("expected " + std::to_string(columns) + " columns, found " +
                           std::to_string(fields.size()),
                       line_no, "line");
    LabeledSample row;
    row.sample.timestamp_ms = parse_number<std::int64_t>(fields[0], line_no, "timestamp");
    for (std::size_t c = 0; c < rec.channels.size(); ++c) {
      const double v = parse_number<double>(fields[1 + c], line_no, "value");
      if (!std::isfinite(v)) throw ParseError("non-finite value", line_no, "line");
      row.sample.values.push_back(v);
    }
    if (rec.labeled && !fields.back().empty()) {
      const auto raw = parse_number<long long>(fields.back(), line_no, "label");
      if (raw != 1 && raw != -1) throw ParseError("label must be 1, -1 or empty", line_no, "line");
      row.label = StateLabel::from_int(raw);
    }
    if (!rec.rows.empty() && row.sample.timestamp_ms <= rec.rows.back().sample.timestamp_ms)
      throw ParseError("timestamps must increase", line_no, "line");
    rec.rows.push_back(std::move(row));
  }
  if (rec.rows.empty()) throw ParseError("recording " + path.string() + " has no rows", line_no, "line");
  return rec;
}

CsvRecorder::CsvRecorder(const std::filesystem::path& path, ChannelSet channels, bool labeled)
    : path_(path), channels_(std::move(channels)), labeled_(labeled) {
  out_.open(path, std::ios::out | std::ios::trunc);
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  out_ << csv_header(channels_, labeled_) << '\n';
  out_.flush();
  if (!out_) throw IoError("failed writing header to " + path.string());
}

void CsvRecorder::write(const LabeledSample& row) {
  if (row.sample.values.size() != channels_.size())
    throw ValidationError("row has " + std::to_string(row.sample.values.size()) +
                          " values, recording has " + std::to_string(channels_.size()) +
                          " channels");
  std::string line = std::to_string(row.sample.timestamp_ms);
  for (double v : row.sample.values) line += "," + format_double(v);
  if (labeled_) {
    line += ",";
    if (row.label) line += std::to_string(row.label->value());
  }
  out_ << line << '\n';
  out_.flush();
  if (!out_)
    throw IoError("write to " + path_.string() + " failed after " + std::to_string(rows_) +
                  " rows");
  ++rows_;
}

void write_recording(const SessionRecording& rec, const std::filesystem::path& path) {
  CsvRecorder recorder(path, rec.channels, rec.labeled);
  for (const auto& r : rec.rows) recorder.write(r);
}

} // namespace mindplane::ingestion
