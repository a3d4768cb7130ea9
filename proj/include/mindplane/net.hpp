#pragma once

#include "mindplane/bounded_queue.hpp"
#include "mindplane/ingestion.hpp"
#include "mindplane/pipeline.hpp"
#include "mindplane/ratings.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>

namespace mindplane::net {

namespace detail {
struct ServerState;
}

inline constexpr unsigned short kDefaultOscPort = 7000;
inline constexpr std::size_t kSampleQueueCapacity = 64;
inline constexpr std::size_t kOutboxCapacity = 16;

// Live OSC over UDP. A receiver thread decodes Muse band-power messages,
// assembles samples and pushes them into a bounded drop-oldest queue; next()
// pops from that queue. Timestamps are milliseconds since start(), kept
// strictly increasing.
class OscUdpSource : public ingestion::SampleSource {
public:
  OscUdpSource(ChannelSet channels, unsigned short port = kDefaultOscPort,
               std::size_t queue_capacity = kSampleQueueCapacity);
  ~OscUdpSource() override;

  OscUdpSource(const OscUdpSource&) = delete;
  OscUdpSource& operator=(const OscUdpSource&) = delete;

  const ChannelSet& channels() const override { return channels_; }
  // Blocks until a sample arrives; nullopt after stop().
  std::optional<ingestion::LabeledSample> next() override;
  std::uint64_t drop_count() const override { return queue_.dropped(); }

  void stop();
  unsigned short port() const { return port_; }
  std::uint64_t malformed() const { return malformed_.load(); }

private:
  struct Impl;

  ChannelSet channels_;
  BoundedQueue<EegSample> queue_;
  std::unique_ptr<Impl> impl_;
  unsigned short port_ = 0;
  std::atomic<std::uint64_t> malformed_{0};
  std::thread thread_;
};

struct ServerOptions {
  std::string bind_address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks an ephemeral port
  bool dev_mode = false;
  std::filesystem::path ratings_path = "ratings.csv";
  std::size_t outbox_capacity = kOutboxCapacity;
  // Dev mode: applies a manual label and returns the resulting message,
  // which the server also broadcasts.
  std::function<pipeline::StateMessage(StateLabel)> on_manual_label;
};

// One port serving:
//   GET  / (WebSocket upgrade)  one JSON text frame per broadcast message
//   POST /rating                stores a session rating
//   POST /manual-label          {"label":1|-1}, dev mode only (403 otherwise)
//   GET  /health
// Each WebSocket client has its own outbox; a slow client loses its oldest
// queued frames and never blocks broadcast().
class BroadcastServer {
public:
  explicit BroadcastServer(ServerOptions opt);
  ~BroadcastServer();

  BroadcastServer(const BroadcastServer&) = delete;
  BroadcastServer& operator=(const BroadcastServer&) = delete;

  void start();
  void stop();

  unsigned short port() const;
  void broadcast(const pipeline::StateMessage& msg);
  void broadcast_text(std::string text);

  std::size_t client_count() const;
  // Frames dropped from any client outbox so far.
  std::uint64_t outbox_drops() const;

  pipeline::RatingStore& ratings();

private:
  std::unique_ptr<detail::ServerState> impl_;
};

} // namespace mindplane::net
