// Minimal MQTT 3.1.1 client: QoS 1 publish and subscribe over plain TCP.
//
// A background thread owns the socket's read side. It answers PUBLISH with
// PUBACK, sends keep-alive pings, and reconnects with bounded exponential
// backoff when the connection drops, re-subscribing every remembered filter.
#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace aifml {

class MqttError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MqttOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 1883;
  std::string client_id;
  std::chrono::seconds keep_alive{30};
  /// First wait for PUBACK/SUBACK; doubles per retry up to max_backoff.
  std::chrono::milliseconds ack_timeout{500};
  std::chrono::milliseconds max_backoff{4000};
  int max_attempts = 4;
  std::chrono::milliseconds reconnect_min{50};
  std::chrono::milliseconds reconnect_max{2000};
};

/// "host:port" or "host" (port 1883). Throws std::invalid_argument.
MqttOptions parse_broker_address(const std::string& text);

/// True when `topic` matches `filter`, with '+' and '#' wildcards.
bool topic_matches(std::string_view filter, std::string_view topic);

class MqttClient {
 public:
  /// topic, payload, DUP flag as received.
  using Handler = std::function<void(const std::string&, const std::string&, bool)>;

  explicit MqttClient(MqttOptions opt);
  ~MqttClient();
  MqttClient(const MqttClient&) = delete;
  MqttClient& operator=(const MqttClient&) = delete;

  /// Starts the background thread and waits up to `wait` for the first
  /// CONNACK. Returns whether the client is connected; if not, it keeps
  /// trying in the background.
  bool start(std::chrono::milliseconds wait = std::chrono::milliseconds(2000));
  void stop();

  bool connected() const;

  /// QoS 1 subscription; remembered across reconnects. Waits for SUBACK
  /// when connected. Handlers run on the background thread.
  void subscribe(const std::string& filter, Handler handler);

  /// QoS 1 publish. Blocks until PUBACK; retransmits with DUP set on
  /// timeout. Throws MqttError after max_attempts.
  void publish(const std::string& topic, const std::string& payload);

  struct Stats {
    std::uint64_t published = 0;
    std::uint64_t retransmits = 0;
    std::uint64_t received = 0;
    std::uint64_t connects = 0;
  };
  Stats stats() const;

 private:
  void run();
  bool open_connection();
  void close_connection();
  bool send_packet(const std::string& bytes);
  void handle_packet(std::uint8_t header, const std::string& body);
  std::uint16_t next_packet_id();

  MqttOptions opt_;
  std::thread thread_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::mutex write_mutex_;
  int fd_ = -1;
  bool connected_ = false;
  bool stopping_ = false;
  bool ping_outstanding_ = false;  // background thread only
  std::uint16_t last_id_ = 0;
  std::map<std::uint16_t, bool> pending_;  // packet id -> acknowledged
  std::vector<std::pair<std::string, Handler>> subscriptions_;
  Stats stats_;
};

}  // namespace aifml
