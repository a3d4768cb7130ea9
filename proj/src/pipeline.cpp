#include "mindplane/pipeline.hpp"

#include "mindplane/csp.hpp"
#include "mindplane/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>

namespace mindplane::pipeline {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::svm: return "svm";
    case Mode::fnn: return "fnn";
    case Mode::manual: return "manual";
  }
  return "?";
}

Mode parse_mode(std::string_view text) {
  if (text == "svm") return Mode::svm;
  if (text == "fnn") return Mode::fnn;
  if (text == "manual") return Mode::manual;
  throw ValidationError("unknown mode '" + std::string(text) + "'");
}

void validate_config(const PipelineConfig& cfg) {
  if (cfg.tick_ms != static_cast<int>(1000 / kSampleRateHz))
    throw ValidationError("tick_ms must equal the sample period (" +
                          std::to_string(1000 / kSampleRateHz) + " ms)");
  if (cfg.window_len == 0) throw ValidationError("window_len must be positive");
  if (!(cfg.plane_step > 0.0 && cfg.plane_step <= 1.0))
    throw ValidationError("plane_step must lie in (0, 1]");
  if (!(cfg.plane_start >= 0.0 && cfg.plane_start <= 1.0))
    throw ValidationError("plane_start must lie in [0, 1]");
}

void validate_against_model(const PipelineConfig& cfg, const models::ModelFile& model) {
  validate_config(cfg);
  const auto kind = models::model_kind(model);
  if (kind != to_string(cfg.mode))
    throw ValidationError("config mode '" + std::string(to_string(cfg.mode)) +
                          "' does not match model kind '" + std::string(kind) + "'");
  const auto& meta = std::visit([](const auto& m) -> const models::ModelMetadata& { return m.meta; },
                                model);
  if (!(meta.channels == cfg.channels))
    throw ValidationError("model channels do not match the configured channel set");
  if (meta.window_len != cfg.window_len)
    throw ValidationError("model window_len does not match the configured window_len");
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("pipeline config: ") + e.what(), e.byte);
  }
  PipelineConfig cfg;
  try {
    cfg.tick_ms = j.value("tick_ms", cfg.tick_ms);
    cfg.window_len = j.value("window_len", cfg.window_len);
    if (j.contains("mode")) cfg.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("channels"))
      cfg.channels = ChannelSet::parse(j.at("channels").get<std::vector<std::string>>());
    cfg.model_path = j.value("model_path", cfg.model_path);
    cfg.broadcast_port = j.value("broadcast_port", cfg.broadcast_port);
    cfg.plane_step = j.value("plane_step", cfg.plane_step);
    cfg.plane_start = j.value("plane_start", cfg.plane_start);
    cfg.gap_reset_ms = j.value("gap_reset_ms", cfg.gap_reset_ms);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("pipeline config: ") + e.what());
  }
  validate_config(cfg);
  return cfg;
}

std::string pipeline_config_json(const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  j["tick_ms"] = cfg.tick_ms;
  j["window_len"] = cfg.window_len;
  j["mode"] = std::string(to_string(cfg.mode));
  j["channels"] = cfg.channels.names();
  j["model_path"] = cfg.model_path;
  j["broadcast_port"] = cfg.broadcast_port;
  j["plane_step"] = cfg.plane_step;
  j["plane_start"] = cfg.plane_start;
  j["gap_reset_ms"] = cfg.gap_reset_ms;
  return j.dump(2);
}

PlaneState plane_update(PlaneState p, StateLabel label) {
  p.y = std::clamp(p.y + label.value() * p.step, 0.0, 1.0);
  return p;
}

std::string StateMessage::to_json() const {
  nlohmann::ordered_json j;
  j["t_ms"] = t_ms;
  j["label"] = label.value();
  j["score"] = score;
  j["plane_y"] = plane_y;
  j["mode"] = std::string(to_string(mode));
  j["drop_count"] = drop_count;
  return j.dump();
}

StateMessage parse_state_message(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    StateMessage m;
    m.t_ms = j.at("t_ms").get<std::int64_t>();
    m.label = StateLabel::from_int(j.at("label").get<int>());
    m.score = j.at("score").get<double>();
    m.plane_y = j.at("plane_y").get<double>();
    m.mode = parse_mode(j.at("mode").get<std::string>());
    m.drop_count = j.at("drop_count").get<std::uint64_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("state message: ") + e.what());
  }
}

StateMessage classify_tick(const PipelineConfig& cfg, const models::ModelFile& model,
                           const Window& w, PlaneState& plane, std::uint64_t drop_count) {
  if (w.channels() != cfg.channels.size() || w.length() != cfg.window_len)
    throw ValidationError("window shape does not match the pipeline configuration");

  models::Prediction pred;
  if (cfg.mode == Mode::svm) {
    const auto* m = std::get_if<models::SvmModelFile>(&model);
    if (!m) throw ValidationError("svm mode requires an svm model");
    pred = models::svm_predict(m->svm, csp::apply_filters(m->filters, w).v);
  } else if (cfg.mode == Mode::fnn) {
    const auto* m = std::get_if<models::FnnModelFile>(&model);
    if (!m) throw ValidationError("fnn mode requires an fnn model");
    pred = models::nn_predict(m->net, flatten_window(w));
  } else {
    throw ValidationError("manual mode has no classifier");
  }
  plane = plane_update(plane, pred.label);

  StateMessage msg;
  msg.t_ms = w.end_ts;
  msg.label = pred.label;
  msg.score = pred.score;
  msg.plane_y = plane.y;
  msg.mode = cfg.mode;
  msg.drop_count = drop_count;
  return msg;
}

TickLoop::TickLoop(PipelineConfig cfg, std::optional<models::ModelFile> model)
    : cfg_(std::move(cfg)),
      model_(std::move(model)),
      buffer_(cfg_.channels.size(), cfg_.window_len, cfg_.gap_reset_ms),
      plane_{cfg_.plane_start, cfg_.plane_step} {
  if (cfg_.mode == Mode::manual) {
    validate_config(cfg_);
    if (model_) throw ValidationError("manual mode takes no model");
  } else {
    if (!model_) throw ValidationError("mode '" + std::string(to_string(cfg_.mode)) + "' needs a model");
    validate_against_model(cfg_, *model_);
  }
}

std::optional<StateMessage> TickLoop::on_sample(const EegSample& s, std::uint64_t drop_count) {
  if (!model_) return std::nullopt;
  std::optional<Window> w;
  try {
    w = buffer_.push(s);
  } catch (const SampleRejected&) {
    ++rejected_;
    return std::nullopt;
  }
  if (!w) return std::nullopt;
  StateMessage msg = classify_tick(cfg_, *model_, *w, plane_, drop_count);
  last_t_ms_ = msg.t_ms;
  return msg;
}

StateMessage TickLoop::apply_manual_label(StateLabel label, std::int64_t t_ms) {
  plane_ = plane_update(plane_, label);
  last_t_ms_ = std::max(last_t_ms_, t_ms);
  StateMessage msg;
  msg.t_ms = last_t_ms_;
  msg.label = label;
  msg.score = label.value();
  msg.plane_y = plane_.y;
  msg.mode = Mode::manual;
  return msg;
}

std::size_t run_stream(TickLoop& loop, ingestion::SampleSource& source, const MessageSink& sink) {
  std::size_t emitted = 0;
  while (auto s = source.next()) {
    if (auto msg = loop.on_sample(s->sample, source.drop_count())) {
      sink(*msg);
      ++emitted;
    }
  }
  return emitted;
}

} // namespace mindplane::pipeline
