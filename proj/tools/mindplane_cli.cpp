// mindplane command line: recording, training, serving and replay.

#include "mindplane/ahp.hpp"
#include "mindplane/error.hpp"
#include "mindplane/ingestion.hpp"
#include "mindplane/model_io.hpp"
#include "mindplane/net.hpp"
#include "mindplane/pipeline.hpp"
#include "mindplane/recording.hpp"
#include "mindplane/workflows.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <thread>

using namespace mindplane;
using nlohmann::ordered_json;

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string model;
  std::string source;
  double speed = -1.0;  // < 0: command default
  double seconds = 120.0;
};

void add_common(CLI::App* cmd, Common& c, bool with_source = true) {
  cmd->add_option("--config", c.config, "JSON config file");
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&c](std::uint64_t s) { c.seed = s; c.seed_set = true; }, "random seed");
  cmd->add_option("--model", c.model, "model file");
  if (with_source) {
    cmd->add_option("--source", c.source, "osc:<port> | csv:<path> | synth[:<config.json>]");
    cmd->add_option("--speed", c.speed, "replay speed for csv/synth sources (0 = unpaced)");
    cmd->add_option("--seconds", c.seconds, "length of a synthetic free-control stream");
  }
}

ingestion::SyntheticConfig synth_config(const std::string& path, const Common& c) {
  auto cfg = path.empty() ? ingestion::SyntheticConfig{} : ingestion::load_synthetic_config(path);
  if (c.seed_set) cfg.seed = c.seed;
  ingestion::validate_config(cfg);
  return cfg;
}

struct OpenedSource {
  std::unique_ptr<ingestion::SampleSource> source;
  net::OscUdpSource* osc = nullptr;  // set for live sources
};

// schedule: used by synthetic sources; defaults to a free-control session.
OpenedSource open_source(const Common& c, double default_speed,
                         std::optional<std::vector<ingestion::ScheduleSegment>> schedule = std::nullopt,
                         const ChannelSet& channels = ChannelSet::default_set()) {
  const std::string source_arg = c.source.empty() ? "synth" : c.source;
  const double speed = c.speed < 0 ? default_speed : c.speed;
  const auto colon = source_arg.find(':');
  const std::string kind = source_arg.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : source_arg.substr(colon + 1);

  OpenedSource out;
  if (kind == "osc") {
    const int port = arg.empty() ? net::kDefaultOscPort : std::stoi(arg);
    if (port < 0 || port > 65535) throw ValidationError("OSC port out of range: " + arg);
    auto osc = std::make_unique<net::OscUdpSource>(channels, static_cast<unsigned short>(port));
    std::cerr << "listening for OSC on udp port " << osc->port() << "\n";
    out.osc = osc.get();
    out.source = std::move(osc);
  } else if (kind == "csv") {
    if (arg.empty()) throw ValidationError("csv source needs a path: csv:<path>");
    out.source = std::make_unique<ingestion::CsvReplaySource>(arg, speed);
  } else if (kind == "synth") {
    const auto cfg = synth_config(arg, c);
    auto sched = schedule ? *schedule : ingestion::free_control_schedule(cfg.seed, c.seconds);
    out.source = std::make_unique<ingestion::SynthSource>(cfg, std::move(sched), speed);
  } else {
    throw ValidationError("unknown source '" + source_arg + "' (expected osc:<port>, csv:<path> or synth[:<cfg>])");
  }
  return out;
}

// Stops a live source once SIGINT/SIGTERM arrives.
class InterruptWatch {
public:
  explicit InterruptWatch(std::function<void()> on_interrupt)
      : thread_([this, f = std::move(on_interrupt)] {
          while (!done_) {
            if (g_interrupted) {
              f();
              return;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
          }
        }) {}
  ~InterruptWatch() {
    done_ = true;
    thread_.join();
  }

private:
  std::atomic<bool> done_{false};
  std::thread thread_;
};

pipeline::PipelineConfig pipeline_config(const Common& c, const std::optional<models::ModelFile>& model) {
  pipeline::PipelineConfig cfg;
  if (!c.config.empty()) {
    cfg = pipeline::load_pipeline_config(c.config);
  } else if (model) {
    // no config: take mode and shape from the model
    std::visit([&](const auto& m) { cfg.channels = m.meta.channels; cfg.window_len = m.meta.window_len; }, *model);
    cfg.mode = pipeline::parse_mode(models::model_kind(*model));
  }
  if (!c.model.empty()) cfg.model_path = c.model;
  pipeline::validate_config(cfg);
  return cfg;
}

std::optional<models::ModelFile> load_model_opt(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return models::load_model(path);
}

// ---------------------------------------------------------------------------

int cmd_synth(const Common& c, const std::string& out, const std::string& schedule, const std::string& group) {
  const auto cfg = synth_config(c.config, c);
  std::vector<ingestion::ScheduleSegment> sched;
  if (schedule == "free") {
    sched = ingestion::free_control_schedule(cfg.seed, c.seconds);
  } else if (schedule == "protocol") {
    ingestion::TrialProtocol p;
    p.group = group == "B" ? ingestion::Group::B : ingestion::Group::A;
    sched = ingestion::protocol_schedule(p);
  } else {
    throw ValidationError("schedule must be 'free' or 'protocol'");
  }
  ingestion::SynthSource src(cfg, sched, 0.0);
  auto rec = ingestion::record_session(src, out, 0, true);
  std::cerr << "wrote " << rec.rows.size() << " samples to " << out << "\n";
  return 0;
}

int cmd_record(const Common& c, const std::string& out, std::size_t max_samples, bool labeled) {
  auto opened = open_source(c, 1.0);
  InterruptWatch watch([&] { if (opened.osc) opened.osc->stop(); });
  auto rec = ingestion::record_session(*opened.source, out, max_samples, labeled);
  std::cerr << "recorded " << rec.rows.size() << " samples to " << out << " (dropped "
            << opened.source->drop_count() << ")\n";
  return 0;
}

ingestion::TrialProtocol make_protocol(const std::string& group, int trials) {
  ingestion::TrialProtocol p;
  p.group = group == "B" ? ingestion::Group::B : ingestion::Group::A;
  p.n_trials_per_class = trials;
  ingestion::validate_protocol(p);
  return p;
}

int cmd_protocol_run(const Common& c, const std::string& out, const std::string& group, int trials) {
  const auto p = make_protocol(group, trials);
  auto opened = open_source(c, 1.0, ingestion::protocol_schedule(p));
  InterruptWatch watch([&] { if (opened.osc) opened.osc->stop(); });
  ingestion::CsvRecorder recorder(out, opened.source->channels(), true);
  auto marker = [](const ingestion::PhaseMarker& m) {
    using K = ingestion::PhaseMarker::Kind;
    if (m.kind == K::trial)
      std::cerr << "[" << m.t_ms << " ms] trial " << m.trial_index + 1 << ": "
                << (m.label->is_concentration() ? "concentrate" : "relax") << " for " << m.duration_s << " s\n";
    else if (m.kind == K::rest)
      std::cerr << "[" << m.t_ms << " ms] rest for " << m.duration_s << " s\n";
    else
      std::cerr << "[" << m.t_ms << " ms] done\n";
  };
  try {
    auto result = ingestion::run_protocol(p, *opened.source, marker, &recorder);
    std::cerr << "completed " << result.size() << " trials, " << recorder.rows_written() << " rows in " << out << "\n";
  } catch (const ingestion::PartialSessionError& e) {
    std::cerr << "session ended early: " << e.what() << " (" << e.completed().size()
              << " trials kept in " << out << ")\n";
    return 1;
  }
  return 0;
}

int cmd_train_svm(const Common& c, const std::string& recording, const std::string& group, bool allow_rejected) {
  if (c.model.empty()) throw ValidationError("--model <output path> is required");
  const auto rec = ingestion::read_recording(recording);
  const auto p = make_protocol(group, 20);
  const auto trials = ingestion::split_trials(rec, p);
  pipeline::SvmWorkflowOptions opt;
  opt.seed = c.seed;
  opt.hyper.seed = c.seed;
  auto result = pipeline::train_svm_workflow(trials, rec.channels, opt);

  std::cout << "cross-validation (" << opt.folds << " folds over training trials, window level)\n"
            << result.cv_report.table() << "held-out test accuracy: " << result.test_accuracy << " over "
            << result.test_trials.size() << " trials\n"
            << "accepted: " << (result.accepted ? "yes" : "no") << "\n";
  if (!result.accepted && !allow_rejected) {
    std::cerr << "model not written: held-out accuracy must exceed " << opt.accept_above
              << " (use --allow-rejected to keep it anyway)\n";
    return 3;
  }
  result.model.meta.created_utc = models::utc_now_iso8601();
  models::save_model(result.model, c.model);
  std::cerr << "wrote " << c.model << "\n";
  return 0;
}

int cmd_train_nn(const Common& c, const std::string& recording, const std::string& svm_path, int epochs) {
  if (c.model.empty()) throw ValidationError("--model <output path> is required");
  const auto svm_file = models::load_model(svm_path);
  const auto* svm = std::get_if<models::SvmModelFile>(&svm_file);
  if (!svm) throw ValidationError(svm_path + " is not an svm model");
  const auto rec = ingestion::read_recording(recording);
  models::NnHyper hyper;
  hyper.seed = c.seed;
  if (epochs > 0) hyper.epochs = epochs;
  auto result = pipeline::train_nn_workflow(rec, *svm, hyper);
  std::cout << "training pairs: " << result.pairs << "\n";
  if (!result.epoch_loss.empty())
    std::cout << "loss: first epoch " << result.epoch_loss.front() << ", last epoch " << result.epoch_loss.back()
              << "\n";
  if (rec.labeled) std::cout << "look-ahead agreement on this recording: " << pipeline::lookahead_agreement(result.model, rec) << "\n";
  result.model.meta.created_utc = models::utc_now_iso8601();
  models::save_model(result.model, c.model);
  std::cerr << "wrote " << c.model << "\n";
  return 0;
}

struct ServeOptions {
  int port = -1;  // -1: from config
  bool dev = false;
  bool to_stdout = false;
  std::string ratings = "ratings.csv";
  std::string mode;
};

int cmd_serve(const Common& c, const ServeOptions& so, bool network) {
  auto model = load_model_opt(c.model);
  auto cfg = pipeline_config(c, model);
  if (!so.mode.empty()) cfg.mode = pipeline::parse_mode(so.mode);
  if (cfg.mode == pipeline::Mode::manual) {
    if (!so.dev) throw ValidationError("manual mode needs --dev");
    model.reset();
  } else {
    if (!model && !cfg.model_path.empty()) model = models::load_model(cfg.model_path);
    if (!model) throw ValidationError("--model is required in " + std::string(pipeline::to_string(cfg.mode)) + " mode");
    pipeline::validate_against_model(cfg, *model);
  }
  if (so.port >= 0) cfg.broadcast_port = so.port;

  pipeline::TickLoop loop(cfg, model);
  std::mutex loop_mu;

  std::unique_ptr<net::BroadcastServer> server;
  if (network) {
    net::ServerOptions opt;
    opt.port = static_cast<unsigned short>(cfg.broadcast_port);
    opt.dev_mode = so.dev;
    opt.ratings_path = so.ratings;
    opt.on_manual_label = [&](StateLabel label) {
      std::lock_guard lock(loop_mu);
      auto msg = loop.apply_manual_label(label, 0);
      if (so.to_stdout) std::cout << msg.to_json() << "\n" << std::flush;
      return msg;
    };
    server = std::make_unique<net::BroadcastServer>(opt);
    server->start();
    std::cerr << "broadcasting on ws://127.0.0.1:" << server->port() << "/ (mode " << pipeline::to_string(cfg.mode)
              << (so.dev ? ", dev" : "") << ")\n";
  }

  auto emit = [&](const pipeline::StateMessage& m) {
    if (so.to_stdout) std::cout << m.to_json() << "\n";
    if (server) server->broadcast(m);
  };

  if (cfg.mode == pipeline::Mode::manual) {
    while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    return 0;
  }

  auto opened = open_source(c, network ? 1.0 : 0.0, std::nullopt, cfg.channels);
  InterruptWatch watch([&] { if (opened.osc) opened.osc->stop(); });
  std::size_t n = 0;
  while (!g_interrupted) {
    auto row = opened.source->next();
    if (!row) break;
    std::optional<pipeline::StateMessage> msg;
    {
      std::lock_guard lock(loop_mu);
      msg = loop.on_sample(row->sample, opened.source->drop_count());
    }
    if (msg) {
      emit(*msg);
      ++n;
    }
  }
  std::cout << std::flush;
  std::cerr << n << " ticks, " << loop.rejected() << " samples rejected\n";
  return 0;
}

int cmd_select_channels(const Common& c, const std::string& recording, const std::string& group) {
  double a12 = 8.0, a13 = 3.0, a23 = 1.0 / 3.0;
  std::vector<ahp::ChannelOption> options;
  auto pair = [](Band b) { return ChannelSet({{Electrode::F7, b}, {Electrode::F8, b}}); };

  if (!c.config.empty()) {
    std::ifstream in(c.config);
    if (!in) throw IoError("cannot open " + c.config);
    // either [option, ...] or {"comparison": [a12, a13, a23], "options": [option, ...]}
    const auto j = nlohmann::json::parse(in);
    if (j.is_object() && j.contains("comparison")) {
      const auto v = j.at("comparison").get<std::vector<double>>();
      if (v.size() != 3) throw ValidationError("comparison must be [a12, a13, a23]");
      a12 = v[0], a13 = v[1], a23 = v[2];
    }
    const auto list = j.is_array() ? j : j.value("options", nlohmann::json::array());
    for (const auto& o : list)
      options.push_back(ahp::ChannelOption::make(
          ChannelSet::parse(o.at("channels").get<std::vector<std::string>>()), o.value("accuracy", 0.0)));
  }
  if (options.empty()) {
    options = {ahp::ChannelOption::make(pair(Band::gamma), 0.9238),
               ahp::ChannelOption::make(pair(Band::beta), 0.8416),
               ahp::ChannelOption::make(pair(Band::alpha), 0.714)};
  }

  if (!recording.empty()) {
    // measure c1 as cross-validated accuracy on a recorded protocol session
    const auto rec = ingestion::read_recording(recording);
    const auto trials = ingestion::split_trials(rec, make_protocol(group, 20));
    for (auto& o : options) {
      std::vector<Trial> sub;
      for (const auto& t : trials) {
        Trial s{t.label, {}, t.nominal_duration_s};
        for (const auto& smp : t.samples) {
          EegSample e{smp.timestamp_ms, {}};
          for (const auto& id : o.channels) {
            auto idx = rec.channels.index_of(id);
            if (!idx) throw ValidationError("recording lacks channel " + id.name());
            e.values.push_back(smp.values[*idx]);
          }
          s.samples.push_back(std::move(e));
        }
        sub.push_back(std::move(s));
      }
      pipeline::SvmWorkflowOptions opt;
      opt.seed = c.seed;
      o.accuracy = pipeline::train_svm_workflow(sub, o.channels, opt).cv_report.overall_acc;
    }
  }

  const auto a = ahp::ComparisonMatrix::from_upper(a12, a13, a23);
  const auto eig = ahp::principal_eigenvector(a);
  const auto& w = eig.priorities.w;
  ordered_json out;
  out["priorities"] = w;
  out["lambda_max"] = eig.lambda_max;
  out["consistency_ratio"] = ahp::consistency_ratio(a);
  auto rows = ordered_json::array();
  for (const auto& o : options)
    rows.push_back({{"channels", o.channels.names()},
                    {"accuracy", o.accuracy},
                    {"preknowledge", o.preknowledge},
                    {"channel_factor", o.channel_factor},
                    {"q", ahp::score_option(eig.priorities, o)}});
  out["options"] = rows;
  out["selected"] = ahp::select_channels(eig.priorities, options).channels.names();
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_benchmark(const Common& c, std::size_t ticks) {
  auto model = load_model_opt(c.model);
  if (!model) throw ValidationError("--model is required");
  auto cfg = pipeline_config(c, model);
  pipeline::validate_against_model(cfg, *model);
  Common src = c;
  if (src.source.empty()) src.seconds = std::max(c.seconds, (ticks + cfg.window_len) / 10.0 + 1.0);
  auto opened = open_source(src, 0.0, std::nullopt, cfg.channels);
  const auto stats = pipeline::benchmark_latency(cfg, *model, *opened.source, ticks);
  ordered_json j{{"mode", pipeline::to_string(cfg.mode)}, {"ticks", stats.ticks},  {"mean_ms", stats.mean_ms},
                 {"p50_ms", stats.p50_ms},                {"p99_ms", stats.p99_ms}, {"max_ms", stats.max_ms}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concentration/relaxation neurofeedback engine"};
  app.require_subcommand(1);

  Common c;
  std::string out, recording, svm_path, schedule = "free", group = "A";
  std::size_t max_samples = 0, ticks = 1000;
  int trials = 20, epochs = 0;
  bool unlabeled = false, allow_rejected = false;
  ServeOptions so;

  auto* synth = app.add_subcommand("synth", "write a synthetic session recording");
  add_common(synth, c, false);
  synth->add_option("--seconds", c.seconds, "length of a free-control session");
  synth->add_option("--out", out, "output CSV")->required();
  synth->add_option("--schedule", schedule, "free | protocol")->check(CLI::IsMember({"free", "protocol"}));
  synth->add_option("--group", group, "protocol order A | B")->check(CLI::IsMember({"A", "B"}));

  auto* record = app.add_subcommand("record", "record a stream to CSV");
  add_common(record, c);
  record->add_option("--out", out, "output CSV")->required();
  record->add_option("--max-samples", max_samples, "stop after this many samples (0 = until the stream ends)");
  record->add_flag("--unlabeled", unlabeled, "omit the label column");

  auto* protocol = app.add_subcommand("protocol-run", "run the 40-trial training protocol and record it");
  add_common(protocol, c);
  protocol->add_option("--out", out, "output CSV")->required();
  protocol->add_option("--group", group, "A: concentration first, B: relaxation first")
      ->check(CLI::IsMember({"A", "B"}));
  protocol->add_option("--trials", trials, "trials per class");

  auto* train_svm = app.add_subcommand("train-svm", "fit CSP filters and the SVM on a protocol recording");
  add_common(train_svm, c, false);
  train_svm->add_option("--recording", recording, "labeled protocol recording")->required();
  train_svm->add_option("--group", group, "protocol order of the recording")->check(CLI::IsMember({"A", "B"}));
  train_svm->add_flag("--allow-rejected", allow_rejected, "write the model even below the acceptance bar");

  auto* train_nn = app.add_subcommand("train-nn", "train the 0.5 s look-ahead network from SVM labels");
  add_common(train_nn, c, false);
  train_nn->add_option("--recording", recording, "free-control recording (120 s)")->required();
  train_nn->add_option("--svm", svm_path, "accepted svm model")->required();
  train_nn->add_option("--epochs", epochs, "training epochs");

  auto add_serve_flags = [&](CLI::App* cmd) {
    add_common(cmd, c);
    cmd->add_flag("--stdout", so.to_stdout, "print one JSON message per tick");
    cmd->add_option("--mode", so.mode, "svm | fnn | manual")->check(CLI::IsMember({"svm", "fnn", "manual"}));
  };
  auto* serve = app.add_subcommand("serve", "classify a live stream and broadcast the plane state");
  add_serve_flags(serve);
  serve->add_option("--port", so.port, "WebSocket/HTTP port (0 = ephemeral)");
  serve->add_flag("--dev", so.dev, "enable the manual-label endpoint");
  serve->add_option("--ratings", so.ratings, "ratings CSV");

  auto* replay = app.add_subcommand("replay", "classify a recording offline");
  add_serve_flags(replay);

  auto* select = app.add_subcommand("select-channels", "rank channel options with AHP");
  add_common(select, c, false);
  select->add_option("--recording", recording, "protocol recording used to measure accuracies");
  select->add_option("--group", group, "protocol order of the recording")->check(CLI::IsMember({"A", "B"}));

  auto* bench = app.add_subcommand("benchmark", "measure per-tick classification latency");
  add_common(bench, c);
  bench->add_option("--ticks", ticks, "ticks to time");

  CLI11_PARSE(app, argc, argv);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  try {
    if (*synth) return cmd_synth(c, out, schedule, group);
    if (*record) return cmd_record(c, out, max_samples, !unlabeled);
    if (*protocol) return cmd_protocol_run(c, out, group, trials);
    if (*train_svm) return cmd_train_svm(c, recording, group, allow_rejected);
    if (*train_nn) return cmd_train_nn(c, recording, svm_path, epochs);
    if (*serve) return cmd_serve(c, so, true);
    if (*replay) {
      so.to_stdout = true;
      return cmd_serve(c, so, false);
    }
    if (*select) return cmd_select_channels(c, recording, group);
    if (*bench) return cmd_benchmark(c, ticks);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
