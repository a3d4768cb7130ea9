#include "mindplane/error.hpp"
#include "mindplane/net.hpp"
#include "mindplane/osc.hpp"
#include "support.hpp"

#include <doctest.h>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <thread>

using namespace mindplane;
using namespace mindplane::net;

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using udp = asio::ip::udp;

namespace {

struct HttpReply {
  unsigned status = 0;
  std::string body;
  http::fields headers;
};

HttpReply request(unsigned short port, http::verb verb, const std::string& target, const std::string& body = "") {
  asio::io_context io;
  tcp::socket sock(io);
  sock.connect({asio::ip::make_address("127.0.0.1"), port});
  http::request<http::string_body> req{verb, target, 11};
  req.set(http::field::host, "127.0.0.1");
  req.set(http::field::content_type, "application/json");
  req.body() = body;
  req.prepare_payload();
  http::write(sock, req);
  beast::flat_buffer buf;
  http::response<http::string_body> res;
  http::read(sock, buf, res);
  HttpReply out{res.result_int(), res.body(), {}};
  for (const auto& f : res) out.headers.set(f.name_string(), f.value());
  return out;
}

HttpReply post(unsigned short port, const std::string& target, const std::string& body) {
  return request(port, http::verb::post, target, body);
}

template <typename Pred>
bool wait_for(Pred pred, std::chrono::milliseconds limit = std::chrono::milliseconds(3000)) {
  const auto end = std::chrono::steady_clock::now() + limit;
  while (std::chrono::steady_clock::now() < end) {
    if (pred()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return pred();
}

struct WsClient {
  asio::io_context io;
  websocket::stream<tcp::socket> ws{io};

  explicit WsClient(unsigned short port) {
    ws.next_layer().connect({asio::ip::make_address("127.0.0.1"), port});
    ws.handshake("127.0.0.1", "/");
  }

  std::string read() {
    beast::flat_buffer buf;
    ws.read(buf);
    return beast::buffers_to_string(buf.data());
  }
};

ServerOptions options(const testing::TempDir& dir, bool dev = false) {
  ServerOptions opt;
  opt.port = 0;
  opt.dev_mode = dev;
  opt.ratings_path = dir / "ratings.csv";
  return opt;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::uint8_t> muse(const std::string& band, std::vector<float> args) {
  osc::OscMessage m{"/muse/elements/" + band + "_absolute", std::string(args.size(), 'f'), std::move(args)};
  return osc::serialize_osc(m);
}

void send_udp(unsigned short port, const std::vector<std::uint8_t>& bytes) {
  asio::io_context io;
  udp::socket sock(io, udp::v4());
  sock.send_to(asio::buffer(bytes), {asio::ip::make_address("127.0.0.1"), port});
}

} // namespace

TEST_CASE("websocket clients receive every broadcast message in order") {
  testing::TempDir dir("ws");
  BroadcastServer server(options(dir));
  server.start();
  REQUIRE(server.port() != 0);

  WsClient a(server.port()), b(server.port());
  REQUIRE(wait_for([&] { return server.client_count() == 2; }));

  for (int i = 0; i < 10; ++i) {
    pipeline::StateMessage m;
    m.t_ms = i * 100;
    m.label = i % 2 ? StateLabel::concentration() : StateLabel::relaxation();
    m.plane_y = 0.5;
    server.broadcast(m);
  }
  for (auto* c : {&a, &b}) {
    for (int i = 0; i < 10; ++i) {
      const auto m = pipeline::parse_state_message(c->read());
      CHECK(m.t_ms == i * 100);
      CHECK(m.label.value() == (i % 2 ? 1 : -1));
    }
  }

  a.ws.close(websocket::close_code::normal);
  CHECK(wait_for([&] { return server.client_count() == 1; }));
  server.stop();
}

TEST_CASE("a stalled client loses its oldest frames without blocking others") {
  testing::TempDir dir("slow");
  BroadcastServer server(options(dir));
  server.start();
  WsClient slow(server.port());
  REQUIRE(wait_for([&] { return server.client_count() == 1; }));

  // 64 KiB frames fill the socket buffers of a client that never reads
  const std::string payload(64 * 1024, 'x');
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 600; ++i) server.broadcast_text(payload);
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(2));
  CHECK(wait_for([&] { return server.outbox_drops() > 0; }));

  WsClient fresh(server.port());
  REQUIRE(wait_for([&] { return server.client_count() == 2; }));
  server.broadcast_text("after");
  CHECK(fresh.read() == "after");
  server.stop();
}

TEST_CASE("POST /rating stores one row per session and model") {
  testing::TempDir dir("rating");
  BroadcastServer server(options(dir));
  server.start();
  const auto port = server.port();

  auto r = post(port, "/rating", R"({"session_id":"s1","model":"svm","points":9})");
  CHECK(r.status == 200);
  CHECK(r.headers[http::field::access_control_allow_origin] == "*");
  CHECK(post(port, "/rating", R"({"session_id":"s1","model":"fnn","points":4})").status == 200);
  CHECK(post(port, "/rating", R"({"session_id":"s1","model":"svm","points":8})").status == 200);

  const auto rows = server.ratings().load();
  REQUIRE(rows.size() == 2);
  const auto text = read_file(dir / "ratings.csv");
  CHECK(text.rfind("session_id,model,points,utc\n", 0) == 0);
  CHECK(text.find("s1,svm,8,") != std::string::npos);
  CHECK(text.find("s1,svm,9,") == std::string::npos);
  CHECK(text.find("s1,fnn,4,") != std::string::npos);

  for (const char* bad : {R"({"session_id":"s1","model":"svm","points":0})",
                          R"({"session_id":"s1","model":"svm","points":11})",
                          R"({"session_id":"s1","model":"svm","points":7.5})",
                          R"({"session_id":"s1","model":"knn","points":5})",
                          R"({"session_id":"a,b","model":"svm","points":5})",
                          R"({"model":"svm","points":5})", "not json"}) {
    CAPTURE(bad);
    CHECK(post(port, "/rating", bad).status == 400);
  }
  CHECK(server.ratings().load().size() == 2);
  CHECK(request(port, http::verb::get, "/rating").status == 405);
  server.stop();
}

TEST_CASE("manual labels need dev mode") {
  testing::TempDir dir("manual");
  SUBCASE("forbidden outside dev mode") {
    auto opt = options(dir);
    opt.on_manual_label = [](StateLabel) { return pipeline::StateMessage{}; };
    BroadcastServer server(opt);
    server.start();
    CHECK(post(server.port(), "/manual-label", R"({"label":1})").status == 403);
    server.stop();
  }
  SUBCASE("dev mode without a handler is unavailable") {
    BroadcastServer server(options(dir, true));
    server.start();
    CHECK(post(server.port(), "/manual-label", R"({"label":1})").status == 503);
    server.stop();
  }
  SUBCASE("dev mode applies and broadcasts the label") {
    pipeline::PipelineConfig cfg;
    cfg.mode = pipeline::Mode::manual;
    pipeline::TickLoop loop(cfg, std::nullopt);
    auto opt = options(dir, true);
    opt.on_manual_label = [&](StateLabel l) { return loop.apply_manual_label(l, 0); };
    BroadcastServer server(opt);
    server.start();
    WsClient client(server.port());
    REQUIRE(wait_for([&] { return server.client_count() == 1; }));

    auto r = post(server.port(), "/manual-label", R"({"label":1})");
    REQUIRE(r.status == 200);
    CHECK(pipeline::parse_state_message(r.body).plane_y == doctest::Approx(0.52));
    const auto pushed = pipeline::parse_state_message(client.read());
    CHECK(pushed.mode == pipeline::Mode::manual);
    CHECK(pushed.label == StateLabel::concentration());
    CHECK(pushed.plane_y == doctest::Approx(0.52));

    CHECK(post(server.port(), "/manual-label", R"({"label":0})").status == 400);
    CHECK(post(server.port(), "/manual-label", R"({})").status == 400);
    CHECK(loop.plane().y == doctest::Approx(0.52));
    server.stop();
  }
}

TEST_CASE("health, preflight and unknown routes") {
  testing::TempDir dir("routes");
  BroadcastServer server(options(dir));
  server.start();
  const auto h = request(server.port(), http::verb::get, "/health");
  CHECK(h.status == 200);
  CHECK(nlohmann::json::parse(h.body)["status"] == "ok");
  const auto pre = request(server.port(), http::verb::options, "/rating");
  CHECK(pre.status == 204);
  CHECK(pre.headers[http::field::access_control_allow_methods].find("POST") != std::string::npos);
  CHECK(request(server.port(), http::verb::get, "/nope").status == 404);
  CHECK(request(server.port(), http::verb::post, "/health").status == 405);
  server.stop();
}

TEST_CASE("OSC datagrams over UDP become samples") {
  OscUdpSource src(ChannelSet::default_set(), 0);
  REQUIRE(src.port() != 0);

  send_udp(src.port(), {1, 2, 3});
  send_udp(src.port(), muse("alpha", {1, 2, 3, 4}));
  send_udp(src.port(), muse("gamma", {0.1f, 0.8f, 0.7f, 0.2f}));
  auto s = src.next();
  REQUIRE(s);
  CHECK(s->sample.values == std::vector<double>{static_cast<double>(0.8f), static_cast<double>(0.7f)});
  CHECK_FALSE(s->label);

  send_udp(src.port(), muse("gamma", {0, 5, 6, 0}));
  auto t = src.next();
  REQUIRE(t);
  CHECK(t->sample.values == std::vector<double>{5, 6});
  CHECK(t->sample.timestamp_ms > s->sample.timestamp_ms);
  CHECK(src.malformed() == 1);
  CHECK(src.drop_count() == 0);

  std::thread stopper([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    src.stop();
  });
  CHECK_FALSE(src.next());
  stopper.join();
}

TEST_CASE("binding a port in use fails with IoError") {
  OscUdpSource first(ChannelSet::default_set(), 0);
  CHECK_THROWS_AS(OscUdpSource(ChannelSet::default_set(), first.port()), IoError);
}
