// Stand-in for a physical device: consumes InferenceMessages from MQTT or
// HTTP and exposes its state at GET /state.
#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "aifml/device.hpp"
#include "aifml/mqtt.hpp"

namespace httplib {
class Server;
}

namespace aifml {

struct SimulatorConfig {
  DeviceKind kind = DeviceKind::kebbi;
  std::string device_id = "kebbi-1";
  Transport transport = Transport::mqtt;
  /// host:port; required for MQTT.
  std::string broker;
  /// Port for GET /state (and POST /infer for HTTP devices); 0 picks one.
  std::uint16_t port = 0;
  std::string host = "127.0.0.1";
  /// Output shown by an lt display; the first output when empty.
  std::string display_output;
};

struct SimulatorState {
  std::string device_id;
  DeviceKind kind = DeviceKind::kebbi;
  std::string expression;
  /// Kind-specific rendering: the expression (kebbi), a motion command
  /// (mooncar), the displayed number (lt) or the expression (custom).
  std::string display;
  std::uint64_t message_count = 0;
  std::uint64_t last_sequence = 0;
  std::uint64_t ignored = 0;  // duplicates and stale sequences
  std::optional<InferenceMessage> last_message;
  std::int64_t updated_at = 0;
};

nlohmann::ordered_json to_json(const SimulatorState& s);

/// Motion command a mooncar derives from an expression.
std::string mooncar_motion(std::string_view expression);

class DeviceSimulator {
 public:
  explicit DeviceSimulator(SimulatorConfig cfg);
  ~DeviceSimulator();

  /// Subscribes (MQTT) and starts the HTTP listener. Throws MqttError when
  /// the broker cannot be reached within `wait`.
  void start(std::chrono::milliseconds wait = std::chrono::milliseconds(2000));
  void stop();
  std::uint16_t port() const { return port_; }

  /// Applies a message if its sequence is newer than the last one applied.
  /// Returns whether it was applied.
  bool apply(const InferenceMessage& m);
  SimulatorState state() const;

 private:
  SimulatorConfig cfg_;
  std::unique_ptr<MqttClient> mqtt_;
  std::unique_ptr<httplib::Server> http_;
  std::thread http_thread_;
  std::uint16_t port_ = 0;
  mutable std::mutex mutex_;
  SimulatorState state_;
};

}  // namespace aifml
