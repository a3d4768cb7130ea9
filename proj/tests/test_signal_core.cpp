#include "mindplane/error.hpp"
#include "mindplane/signal_core.hpp"

#include <doctest.h>

#include <random>

using namespace mindplane;

namespace {

EegSample sample(std::int64_t t, double a, double b) { return {t, {a, b}}; }

Trial ramp_trial(StateLabel label, int seconds) {
  Trial t{label, {}, seconds};
  for (int i = 0; i < seconds * 10; ++i) t.samples.push_back(sample(i * 100, i, -i));
  return t;
}

} // namespace

TEST_CASE("channel ids and sets") {
  CHECK(ChannelId{Electrode::F8, Band::alpha}.name() == "F8.alpha");
  CHECK(ChannelId{Electrode::F7, Band::gamma}.column() == "f7_gamma");
  CHECK(ChannelId::parse("F8.beta") == ChannelId{Electrode::F8, Band::beta});
  CHECK(ChannelId::from_column("f8_alpha") == ChannelId{Electrode::F8, Band::alpha});
  CHECK_FALSE(ChannelId::from_column("tp9_gamma"));
  CHECK_THROWS_AS(ChannelId::parse("F9.gamma"), ValidationError);

  CHECK(ChannelSet::all().size() == 6);
  CHECK(ChannelSet::default_set().names() == std::vector<std::string>{"F7.gamma", "F8.gamma"});
  CHECK_THROWS_AS(ChannelSet({}), ValidationError);
  CHECK_THROWS_AS(ChannelSet({{Electrode::F7, Band::gamma}, {Electrode::F7, Band::gamma}}), ValidationError);
  CHECK(ChannelSet::all().contains(Band::alpha));
  CHECK_FALSE(ChannelSet::default_set().contains(Band::alpha));
}

TEST_CASE("state labels accept only +1 and -1") {
  CHECK(StateLabel::from_int(1) == StateLabel::concentration());
  CHECK(StateLabel::from_int(-1) == StateLabel::relaxation());
  CHECK_THROWS_AS(StateLabel::from_int(0), ValidationError);
  CHECK_THROWS_AS(StateLabel::from_int(2), ValidationError);
}

TEST_CASE("window buffer emits stride-1 windows") {
  WindowBuffer buf(2);
  for (int i = 0; i < 4; ++i) CHECK_FALSE(buf.push(sample(i * 100, i, 10 + i)));

  auto w = buf.push(sample(400, 4, 14));
  REQUIRE(w);
  CHECK(w->data == Matrix{{0, 1, 2, 3, 4}, {10, 11, 12, 13, 14}});
  CHECK(w->start_ts == 0);
  CHECK(w->end_ts == 400);

  auto w2 = buf.push(sample(500, 5, 15));
  REQUIRE(w2);
  CHECK(w2->data == Matrix{{1, 2, 3, 4, 5}, {11, 12, 13, 14, 15}});
  CHECK(w2->start_ts == 100);
}

TEST_CASE("window buffer rejects non-increasing timestamps without changing state") {
  WindowBuffer buf(2);
  for (int i = 0; i < 4; ++i) buf.push(sample(i * 100, i, i));
  CHECK_THROWS_AS(buf.push(sample(300, 9, 9)), SampleRejected);
  CHECK_THROWS_AS(buf.push(sample(200, 9, 9)), SampleRejected);
  CHECK(buf.buffered() == 4);
  auto w = buf.push(sample(400, 4, 4));
  REQUIRE(w);
  CHECK(w->data(0, 4) == 4);
  CHECK(w->data(0, 3) == 3);
}

TEST_CASE("window buffer validates samples") {
  WindowBuffer buf(2);
  CHECK_THROWS_AS(buf.push({0, {1.0}}), ValidationError);
  CHECK_THROWS_AS(buf.push({0, {1.0, std::nan("")}}), ValidationError);
  CHECK(buf.buffered() == 0);
}

TEST_CASE("a gap over 300 ms resets the buffer") {
  WindowBuffer buf(2);
  for (int i = 0; i < 4; ++i) buf.push(sample(i * 100, i, i));
  CHECK_FALSE(buf.push(sample(300 + 301, 1, 1)));
  CHECK(buf.buffered() == 1);
  CHECK(buf.gap_resets() == 1);

  // exactly 300 ms is not a gap
  WindowBuffer edge(2);
  edge.push(sample(0, 0, 0));
  edge.push(sample(300, 0, 0));
  CHECK(edge.buffered() == 2);
  CHECK(edge.gap_resets() == 0);
}

TEST_CASE("N monotonic samples give N-4 overlapping windows") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> step(50, 300);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 20; ++trial) {
    const int N = 5 + trial * 7;
    WindowBuffer buf(2);
    std::int64_t t = 0;
    std::vector<Window> out;
    for (int i = 0; i < N; ++i) {
      t += step(rng);
      if (auto w = buf.push({t, {n(rng), n(rng)}})) out.push_back(*w);
    }
    REQUIRE(out.size() == static_cast<std::size_t>(N - 4));
    for (std::size_t k = 1; k < out.size(); ++k)
      for (std::size_t c = 0; c < 4; ++c) {
        CHECK(out[k].data(0, c) == out[k - 1].data(0, c + 1));
        CHECK(out[k].data(1, c) == out[k - 1].data(1, c + 1));
      }
  }
}

TEST_CASE("extract_segment picks the effective windows of a trial") {
  const auto conc = ramp_trial(StateLabel::concentration(), 10);
  auto seg = extract_segment(conc, 2, 6);
  REQUIRE(seg.size() == 40);
  CHECK(seg.front().values[0] == 20);
  CHECK(seg.back().values[0] == 59);

  const auto relax = ramp_trial(StateLabel::relaxation(), 15);
  seg = extract_segment(relax, 4, 8);
  REQUIRE(seg.size() == 40);
  CHECK(seg.front().values[0] == 40);
  CHECK(seg.back().values[0] == 79);

  CHECK_THROWS_AS(extract_segment(conc, 8, 12), BoundsError);
  CHECK_THROWS_AS(extract_segment(conc, -1, 2), BoundsError);
  CHECK_THROWS_AS(extract_segment(conc, 5, 5), BoundsError);
}

TEST_CASE("extract_segment length is floor(b*10) - floor(a*10)") {
  const auto t = ramp_trial(StateLabel::relaxation(), 15);
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> tenths(0, 150);
  for (int k = 0; k < 200; ++k) {
    int a = tenths(rng), b = tenths(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    const double as = a / 10.0, bs = b / 10.0;
    CHECK(extract_segment(t, as, bs).size() == static_cast<std::size_t>(b - a));
  }
}

TEST_CASE("trial sample counts tolerate two samples of jitter") {
  auto t = ramp_trial(StateLabel::concentration(), 10);
  CHECK_NOTHROW(validate_trial(t));
  t.samples.resize(98);
  CHECK_NOTHROW(validate_trial(t));
  t.samples.resize(97);
  CHECK_THROWS_AS(validate_trial(t), ValidationError);
}

TEST_CASE("flatten is sample-major") {
  Window w{Matrix{{1, 2, 3, 4, 5}, {6, 7, 8, 9, 10}}, 0, 400};
  CHECK(flatten_window(w) == std::vector<double>{1, 6, 2, 7, 3, 8, 4, 9, 5, 10});

  Window zero{Matrix(2, 5, 0.0), 0, 400};
  CHECK(flatten_window(zero) == std::vector<double>(10, 0.0));
}

TEST_CASE("unflatten inverts flatten exactly") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 10);
  for (int k = 0; k < 100; ++k) {
    Matrix m(2, 5);
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 5; ++c) m(r, c) = n(rng);
    Window w{m, 1000, 1400};
    auto back = unflatten_window(flatten_window(w), 2, 5, 1000);
    CHECK(back.data == w.data);
    CHECK(back.start_ts == 1000);
    CHECK(back.end_ts == 1400);
  }
  CHECK_THROWS_AS(unflatten_window(std::vector<double>(9), 2, 5), ValidationError);
}
