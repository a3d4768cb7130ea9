#include "mindplane/error.hpp"
#include "mindplane/pipeline.hpp"
#include "support.hpp"

#include <doctest.h>

#include <json.hpp>

#include <fstream>
#include <random>

using namespace mindplane;
using namespace mindplane::pipeline;

namespace {

const StateLabel kC = StateLabel::concentration();
const StateLabel kR = StateLabel::relaxation();

// CSP+SVM model whose score is the constant bias.
models::SvmModelFile constant_svm(double bias) {
  models::SvmModelFile f;
  f.filters.w_T = {1.0, 0.0};
  f.filters.w_R = {0.0, 1.0};
  f.svm.weights.assign(2 * kDefaultWindowLen, 0.0);
  f.svm.bias = bias;
  f.svm.standardization = models::Standardizer::identity(2 * kDefaultWindowLen);
  return f;
}

// All-zero network: output 0, which reads as relaxation.
models::FnnModelFile zero_fnn() {
  models::FnnModelFile f;
  return f;
}

std::vector<EegSample> ramp(std::size_t n, std::int64_t t0 = 0) {
  std::vector<EegSample> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({t0 + static_cast<std::int64_t>(i) * 100, {1.0 + 0.1 * i, 2.0 - 0.05 * i}});
  return out;
}

PipelineConfig config(Mode mode) {
  PipelineConfig cfg;
  cfg.mode = mode;
  return cfg;
}

} // namespace

TEST_CASE("plane update moves one step per label and clamps") {
  PlaneState p{0.5, 0.02};
  CHECK(plane_update(p, kC).y == doctest::Approx(0.52));
  CHECK(plane_update(p, kR).y == doctest::Approx(0.48));
  CHECK(plane_update({0.99, 0.02}, kC).y == 1.0);
  CHECK(plane_update({1.0, 0.02}, kC).y == 1.0);
  CHECK(plane_update({0.01, 0.02}, kR).y == 0.0);
  for (int i = 0; i < 10; ++i) p = plane_update(p, kC);
  CHECK(p.y == doctest::Approx(0.70));
}

TEST_CASE("plane trajectory is a clamped fold of the labels") {
  std::mt19937_64 rng(21);
  std::bernoulli_distribution coin(0.6);
  PlaneState p{0.5, 0.02};
  int steps = 25;  // 0.5 expressed in units of the step
  for (int i = 0; i < 2000; ++i) {
    const auto l = coin(rng) ? kC : kR;
    p = plane_update(p, l);
    steps = std::clamp(steps + l.value(), 0, 50);
    CHECK(p.y == doctest::Approx(steps * 0.02).epsilon(1e-9));
  }
}

TEST_CASE("classify_tick with a positive svm score climbs") {
  const auto cfg = config(Mode::svm);
  const models::ModelFile model = constant_svm(3.2);
  PlaneState plane{0.5, 0.02};
  const auto w = make_window(ramp(5, 1000));
  const auto msg = classify_tick(cfg, model, w, plane, 7);
  CHECK(msg.label == kC);
  CHECK(msg.score == doctest::Approx(3.2));
  CHECK(msg.plane_y == doctest::Approx(0.52));
  CHECK(plane.y == msg.plane_y);
  CHECK(msg.t_ms == 1400);
  CHECK(msg.mode == Mode::svm);
  CHECK(msg.drop_count == 7);
}

TEST_CASE("a zero fnn output reads as relaxation and the plane sinks to the floor") {
  const auto cfg = config(Mode::fnn);
  const models::ModelFile model = zero_fnn();
  PlaneState plane{0.5, 0.02};
  const auto samples = ramp(40);
  for (std::size_t end = 5; end <= samples.size(); ++end) {
    const auto w = make_window(std::span(samples).subspan(end - 5, 5));
    const auto msg = classify_tick(cfg, model, w, plane);
    CHECK(msg.score == 0.0);
    CHECK(msg.label == kR);
    if (end == 14) CHECK(plane.y == doctest::Approx(0.5 - 0.02 * 10));
  }
  CHECK(plane.y == 0.0);
}

TEST_CASE("classify_tick rejects mismatched windows and models") {
  PlaneState plane;
  const models::ModelFile svm = constant_svm(1);
  CHECK_THROWS_AS(classify_tick(config(Mode::fnn), svm, make_window(ramp(5)), plane), ValidationError);
  CHECK_THROWS_AS(classify_tick(config(Mode::svm), svm, make_window(ramp(4)), plane), ValidationError);
  CHECK_THROWS_AS(classify_tick(config(Mode::manual), svm, make_window(ramp(5)), plane), ValidationError);
}

TEST_CASE("tick loop warms up for window_len - 1 samples") {
  TickLoop loop(config(Mode::svm), models::ModelFile{constant_svm(-1.0)});
  const auto samples = ramp(10);
  for (int i = 0; i < 4; ++i) CHECK_FALSE(loop.on_sample(samples[i]));
  for (int i = 4; i < 10; ++i) {
    const auto msg = loop.on_sample(samples[i]);
    REQUIRE(msg);
    CHECK(msg->t_ms == samples[i].timestamp_ms);
    CHECK(msg->label == kR);
  }
  CHECK(loop.plane().y == doctest::Approx(0.5 - 6 * 0.02));
}

TEST_CASE("tick loop drops out-of-order samples and counts them") {
  TickLoop loop(config(Mode::svm), models::ModelFile{constant_svm(1.0)});
  auto samples = ramp(6);
  for (int i = 0; i < 5; ++i) loop.on_sample(samples[i]);
  CHECK_FALSE(loop.on_sample(samples[2]));
  CHECK_FALSE(loop.on_sample(samples[4]));
  CHECK(loop.rejected() == 2);
  CHECK(loop.on_sample(samples[5]));
  CHECK(loop.plane().y == doctest::Approx(0.54));
}

TEST_CASE("a long gap restarts the warm-up") {
  TickLoop loop(config(Mode::svm), models::ModelFile{constant_svm(1.0)});
  for (const auto& s : ramp(5)) loop.on_sample(s);
  const auto later = ramp(5, 100000);
  for (int i = 0; i < 4; ++i) CHECK_FALSE(loop.on_sample(later[i]));
  CHECK(loop.on_sample(later[4]));
}

TEST_CASE("manual mode ignores samples and follows injected labels") {
  TickLoop loop(config(Mode::manual), std::nullopt);
  for (const auto& s : ramp(10)) CHECK_FALSE(loop.on_sample(s));
  auto msg = loop.apply_manual_label(kC, 500);
  CHECK(msg.mode == Mode::manual);
  CHECK(msg.label == kC);
  CHECK(msg.plane_y == doctest::Approx(0.52));
  msg = loop.apply_manual_label(kR, 100);
  CHECK(msg.t_ms == 500);  // never runs backwards
  CHECK(msg.plane_y == doctest::Approx(0.5));

  CHECK_THROWS_AS(TickLoop(config(Mode::manual), models::ModelFile{constant_svm(1)}), ValidationError);
  CHECK_THROWS_AS(TickLoop(config(Mode::svm), std::nullopt), ValidationError);
  CHECK_THROWS_AS(TickLoop(config(Mode::fnn), models::ModelFile{constant_svm(1)}), ValidationError);
}

TEST_CASE("state message json has a fixed field order and round-trips") {
  StateMessage m{1234, kC, 0.75, 0.62, Mode::fnn, 3};
  const auto text = m.to_json();
  CHECK(text == R"({"t_ms":1234,"label":1,"score":0.75,"plane_y":0.62,"mode":"fnn","drop_count":3})");
  const auto back = parse_state_message(text);
  CHECK(back.t_ms == 1234);
  CHECK(back.label == kC);
  CHECK(back.score == 0.75);
  CHECK(back.plane_y == 0.62);
  CHECK(back.mode == Mode::fnn);
  CHECK(back.drop_count == 3);
  CHECK_THROWS_AS(parse_state_message(R"({"t_ms":1})"), ValidationError);
  CHECK_THROWS_AS(parse_state_message(R"({"t_ms":1,"label":0,"score":0,"plane_y":0,"mode":"svm","drop_count":0})"),
                  ValidationError);
}

TEST_CASE("pipeline config validation and file form") {
  auto cfg = config(Mode::svm);
  CHECK_NOTHROW(validate_config(cfg));
  cfg.tick_ms = 50;
  CHECK_THROWS_AS(validate_config(cfg), ValidationError);
  cfg = config(Mode::svm);
  cfg.window_len = 0;
  CHECK_THROWS_AS(validate_config(cfg), ValidationError);
  cfg = config(Mode::svm);
  cfg.plane_step = 0;
  CHECK_THROWS_AS(validate_config(cfg), ValidationError);

  testing::TempDir dir("pcfg");
  cfg = config(Mode::fnn);
  cfg.plane_step = 0.05;
  cfg.broadcast_port = 9001;
  std::ofstream(dir / "c.json") << pipeline_config_json(cfg);
  const auto back = load_pipeline_config(dir / "c.json");
  CHECK(back.mode == Mode::fnn);
  CHECK(back.plane_step == 0.05);
  CHECK(back.broadcast_port == 9001);
  CHECK(back.channels == cfg.channels);

  std::ofstream(dir / "bad.json") << R"({"tick_ms": 250})";
  CHECK_THROWS_AS(load_pipeline_config(dir / "bad.json"), ValidationError);
  std::ofstream(dir / "broken.json") << "{";
  CHECK_THROWS_AS(load_pipeline_config(dir / "broken.json"), ParseError);
  std::ofstream(dir / "mode.json") << R"({"mode": "knn"})";
  CHECK_THROWS_AS(load_pipeline_config(dir / "mode.json"), ValidationError);
}

TEST_CASE("model and config must agree") {
  auto svm = constant_svm(1);
  CHECK_NOTHROW(validate_against_model(config(Mode::svm), svm));
  svm.meta.window_len = 6;
  CHECK_THROWS_AS(validate_against_model(config(Mode::svm), svm), ValidationError);
  svm = constant_svm(1);
  svm.meta.channels = ChannelSet::all();
  CHECK_THROWS_AS(validate_against_model(config(Mode::svm), svm), ValidationError);
}

TEST_CASE("run_stream emits one message per sample after warm-up, deterministically") {
  const auto cfg = testing::session_config(31);
  const auto sched = ingestion::free_control_schedule(4, 30.0);
  auto collect = [&] {
    ingestion::SynthSource src(cfg, sched);
    TickLoop loop(config(Mode::svm), models::ModelFile{constant_svm(0.0)});
    std::vector<std::string> out;
    const auto n = run_stream(loop, src, [&](const StateMessage& m) { out.push_back(m.to_json()); });
    CHECK(n == out.size());
    return out;
  };
  const auto a = collect();
  CHECK(a.size() == 300 - 4);
  CHECK(a == collect());
  // score exactly zero is relaxation: the plane falls to the floor and stays
  CHECK(parse_state_message(a.back()).plane_y == 0.0);
}
