#include "mindplane/net.hpp"

#include "mindplane/error.hpp"
#include "mindplane/osc.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include <array>
#include <chrono>
#include <deque>
#include <mutex>
#include <vector>

namespace mindplane::net {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using udp = asio::ip::udp;

// ---------------------------------------------------------------------------
// OSC over UDP
// ---------------------------------------------------------------------------

struct OscUdpSource::Impl {
  explicit Impl(ChannelSet channels) : assembler(std::move(channels)) {}

  asio::io_context io;
  udp::socket socket{io};
  udp::endpoint sender;
  std::array<std::uint8_t, 65536> buf{};
  osc::SampleAssembler assembler;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::int64_t last_ts = -1;
  std::function<void()> receive;
};

OscUdpSource::OscUdpSource(ChannelSet channels, unsigned short port, std::size_t queue_capacity)
    : channels_(channels), queue_(queue_capacity), impl_(std::make_unique<Impl>(std::move(channels))) {
  try {
    impl_->socket.open(udp::v4());
    impl_->socket.bind(udp::endpoint(udp::v4(), port));
  } catch (const boost::system::system_error& e) {
    throw IoError("cannot bind OSC port " + std::to_string(port) + ": " + e.what());
  }
  port_ = impl_->socket.local_endpoint().port();

  impl_->receive = [this] {
    auto& im = *impl_;
    im.socket.async_receive_from(asio::buffer(im.buf), im.sender, [this](boost::system::error_code ec, std::size_t n) {
      if (ec) return;  // socket closed
      auto& im = *impl_;
      try {
        auto msg = osc::parse_osc(std::span<const std::uint8_t>(im.buf.data(), n));
        if (auto reading = osc::decode_muse(msg)) {
          if (auto values = im.assembler.add(*reading)) {
            auto now = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - im.start)
                           .count();
            im.last_ts = std::max<std::int64_t>(now, im.last_ts + 1);
            queue_.push(EegSample{im.last_ts, std::move(*values)});
          }
        }
      } catch (const ParseError&) {
        ++malformed_;
      }
      im.receive();
    });
  };
  impl_->receive();
  thread_ = std::thread([this] { impl_->io.run(); });
}

OscUdpSource::~OscUdpSource() { stop(); }

void OscUdpSource::stop() {
  queue_.close();
  if (!thread_.joinable()) return;
  asio::post(impl_->io, [this] {
    boost::system::error_code ignored;
    impl_->socket.close(ignored);
    impl_->io.stop();
  });
  thread_.join();
}

std::optional<ingestion::LabeledSample> OscUdpSource::next() {
  auto s = queue_.pop();
  if (!s) return std::nullopt;
  return ingestion::LabeledSample{std::move(*s), std::nullopt};
}

// ---------------------------------------------------------------------------
// Broadcast / HTTP server
// ---------------------------------------------------------------------------

namespace {

class WsSession;

} // namespace

namespace detail {

struct ServerState {
  explicit ServerState(ServerOptions o) : opt(std::move(o)), ratings(opt.ratings_path) {}

  void accept();
  void deliver(std::shared_ptr<const std::string> text);
  void add_client(const std::shared_ptr<WsSession>& s);

  ServerOptions opt;
  pipeline::RatingStore ratings;
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::thread thread;
  unsigned short port = 0;
  std::atomic<std::uint64_t> drops{0};

  mutable std::mutex clients_mu;
  std::vector<std::weak_ptr<WsSession>> clients;
};

} // namespace detail

using detail::ServerState;

namespace {

using SharedText = std::shared_ptr<const std::string>;

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
  WsSession(tcp::socket socket, ServerState& server)
      : ws_(std::move(socket)), server_(server) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.text(true);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->open_ = true;
      self->server_.add_client(self);
      self->read();
    });
  }

  // io thread only
  void enqueue(SharedText text) {
    if (!open_) return;
    if (outbox_.size() >= server_.opt.outbox_capacity) {
      outbox_.pop_front();
      ++server_.drops;
    }
    outbox_.push_back(std::move(text));
    if (!writing_) write();
  }

  void close() {
    open_ = false;
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).socket().close(ignored);
  }

  bool open() const { return open_; }

private:
  void read() {
    ws_.async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->open_ = false;
        return;
      }
      self->in_.consume(self->in_.size());  // clients have nothing to say
      self->read();
    });
  }

  void write() {
    if (outbox_.empty() || !open_) {
      writing_ = false;
      return;
    }
    writing_ = true;
    inflight_ = std::move(outbox_.front());
    outbox_.pop_front();
    ws_.async_write(asio::buffer(*inflight_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->open_ = false;
        self->writing_ = false;
        return;
      }
      self->write();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  ServerState& server_;
  beast::flat_buffer in_;
  std::deque<SharedText> outbox_;
  SharedText inflight_;
  bool writing_ = false;
  std::atomic<bool> open_{false};
};

using Response = http::response<http::string_body>;

Response json_response(const http::request<http::string_body>& req, http::status status, std::string body) {
  Response res{status, req.version()};
  res.set(http::field::content_type, "application/json");
  res.set(http::field::access_control_allow_origin, "*");
  res.keep_alive(req.keep_alive());
  res.body() = std::move(body);
  res.prepare_payload();
  return res;
}

Response error_response(const http::request<http::string_body>& req, http::status status, const std::string& what) {
  return json_response(req, status, nlohmann::json{{"error", what}}.dump());
}

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
  HttpSession(tcp::socket socket, ServerState& server) : stream_(std::move(socket)), server_(server) {}

  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->on_request();
    });
  }

private:
  void on_request() {
    if (websocket::is_upgrade(req_)) {
      stream_.expires_never();
      std::make_shared<WsSession>(stream_.release_socket(), server_)->run(std::move(req_));
      return;
    }
    res_ = handle();
    http::async_write(stream_, res_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (self->res_.keep_alive()) {
        self->read();
      } else {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      }
    });
  }

  Response handle() {
    std::string target(req_.target());
    if (auto q = target.find('?'); q != std::string::npos) target.resize(q);

    if (req_.method() == http::verb::options) {
      Response res{http::status::no_content, req_.version()};
      res.set(http::field::access_control_allow_origin, "*");
      res.set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
      res.set(http::field::access_control_allow_headers, "Content-Type");
      res.keep_alive(req_.keep_alive());
      res.prepare_payload();
      return res;
    }

    if (target == "/health") {
      if (req_.method() != http::verb::get) return error_response(req_, http::status::method_not_allowed, "use GET");
      nlohmann::ordered_json j{{"status", "ok"}, {"clients", client_count()}};
      return json_response(req_, http::status::ok, j.dump());
    }

    if (target == "/rating") {
      if (req_.method() != http::verb::post) return error_response(req_, http::status::method_not_allowed, "use POST");
      try {
        auto rating = pipeline::parse_rating(req_.body());
        server_.ratings.submit(rating);
        return json_response(req_, http::status::ok, R"({"ok":true})");
      } catch (const ValidationError& e) {
        return error_response(req_, http::status::bad_request, e.what());
      } catch (const Error& e) {
        return error_response(req_, http::status::internal_server_error, e.what());
      }
    }

    if (target == "/manual-label") {
      if (req_.method() != http::verb::post) return error_response(req_, http::status::method_not_allowed, "use POST");
      if (!server_.opt.dev_mode) return error_response(req_, http::status::forbidden, "manual labels need dev mode");
      if (!server_.opt.on_manual_label)
        return error_response(req_, http::status::service_unavailable, "no manual label handler");
      StateLabel label = StateLabel::relaxation();
      try {
        const auto j = nlohmann::json::parse(req_.body());
        const auto& v = j.at("label");
        if (!v.is_number_integer()) throw ValidationError("label must be 1 or -1");
        label = StateLabel::from_int(v.get<long long>());
      } catch (const nlohmann::json::exception& e) {
        return error_response(req_, http::status::bad_request, e.what());
      } catch (const ValidationError& e) {
        return error_response(req_, http::status::bad_request, e.what());
      }
      auto text = server_.opt.on_manual_label(label).to_json();
      server_.deliver(std::make_shared<const std::string>(text));
      return json_response(req_, http::status::ok, text);
    }

    return error_response(req_, http::status::not_found, "no such endpoint");
  }

  std::size_t client_count() const {
    std::lock_guard lock(server_.clients_mu);
    std::size_t n = 0;
    for (const auto& w : server_.clients)
      if (auto s = w.lock(); s && s->open()) ++n;
    return n;
  }

  beast::tcp_stream stream_;
  ServerState& server_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  Response res_;
};

} // namespace

void ServerState::accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    std::make_shared<HttpSession>(std::move(socket), *this)->read();
    accept();
  });
}

void ServerState::deliver(SharedText text) {
  std::vector<std::shared_ptr<WsSession>> live;
  {
    std::lock_guard lock(clients_mu);
    std::erase_if(clients, [&](const std::weak_ptr<WsSession>& w) {
      auto s = w.lock();
      if (!s || !s->open()) return true;
      live.push_back(std::move(s));
      return false;
    });
  }
  for (auto& s : live) s->enqueue(text);
}

void ServerState::add_client(const std::shared_ptr<WsSession>& s) {
  std::lock_guard lock(clients_mu);
  clients.push_back(s);
}

BroadcastServer::BroadcastServer(ServerOptions opt) : impl_(std::make_unique<ServerState>(std::move(opt))) {}

BroadcastServer::~BroadcastServer() { stop(); }

void BroadcastServer::start() {
  auto& im = *impl_;
  if (im.thread.joinable()) return;
  try {
    tcp::endpoint ep(asio::ip::make_address(im.opt.bind_address), im.opt.port);
    im.acceptor.open(ep.protocol());
    im.acceptor.set_option(asio::socket_base::reuse_address(true));
    im.acceptor.bind(ep);
    im.acceptor.listen();
  } catch (const boost::system::system_error& e) {
    throw IoError("cannot listen on " + im.opt.bind_address + ":" + std::to_string(im.opt.port) + ": " + e.what());
  }
  im.port = im.acceptor.local_endpoint().port();
  im.accept();
  im.thread = std::thread([&im] { im.io.run(); });
}

void BroadcastServer::stop() {
  auto& im = *impl_;
  if (!im.thread.joinable()) return;
  asio::post(im.io, [&im] {
    beast::error_code ignored;
    im.acceptor.close(ignored);
    std::lock_guard lock(im.clients_mu);
    for (auto& w : im.clients)
      if (auto s = w.lock()) s->close();
    im.clients.clear();
    im.io.stop();
  });
  im.thread.join();
}

unsigned short BroadcastServer::port() const { return impl_->port; }

void BroadcastServer::broadcast(const pipeline::StateMessage& msg) { broadcast_text(msg.to_json()); }

void BroadcastServer::broadcast_text(std::string text) {
  auto shared = std::make_shared<const std::string>(std::move(text));
  asio::post(impl_->io, [im = impl_.get(), shared] { im->deliver(shared); });
}

std::size_t BroadcastServer::client_count() const {
  std::lock_guard lock(impl_->clients_mu);
  std::size_t n = 0;
  for (const auto& w : impl_->clients)
    if (auto s = w.lock(); s && s->open()) ++n;
  return n;
}

std::uint64_t BroadcastServer::outbox_drops() const { return impl_->drops.load(); }

pipeline::RatingStore& BroadcastServer::ratings() { return impl_->ratings; }

} // namespace mindplane::net
