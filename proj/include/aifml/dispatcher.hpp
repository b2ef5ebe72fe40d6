// Sends inference results to registered devices over MQTT or HTTP.
#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "aifml/device.hpp"
#include "aifml/mqtt.hpp"

namespace aifml {

struct DeliveryReceipt {
  std::string device_id;
  std::uint64_t sequence = 0;
  bool ok = false;
  std::string error;
};

class Dispatcher {
 public:
  using Listener = std::function<void(const std::string& device_id, const InferenceMessage&)>;
  using DeliveryListener = std::function<void(const DeliveryReceipt&)>;

  /// `mqtt` may be null; MQTT devices then fail delivery.
  explicit Dispatcher(std::shared_ptr<MqttClient> mqtt);
  ~Dispatcher();
  Dispatcher(const Dispatcher&) = delete;
  Dispatcher& operator=(const Dispatcher&) = delete;

  /// Adds or replaces a device. Throws std::invalid_argument listing the
  /// problems found by check_device.
  void put_device(const DeviceDescriptor& d, const FuzzySystem& sys);
  std::vector<DeviceDescriptor> devices() const;
  std::optional<DeviceDescriptor> device(const std::string& id) const;
  /// Last sequence number assigned to `id`; 0 before the first publish.
  std::uint64_t last_sequence(const std::string& id) const;

  /// Publishes to one device and waits for the acknowledgment. Throws
  /// std::invalid_argument "unknown device" for an unregistered id.
  DeliveryReceipt publish(const std::string& device_id, const FuzzySystem& sys, const CrispInputs& inputs,
                          const InferenceResult& result);

  /// Queues one message per device and returns at once. Messages are
  /// numbered here, so per-device order matches call order.
  void dispatch_all(const FuzzySystem& sys, const CrispInputs& inputs, const InferenceResult& result);

  /// Blocks until the queue is drained.
  void flush();

  void on_message(Listener l) { message_listener_ = std::move(l); }
  void on_delivery(DeliveryListener l) { delivery_listener_ = std::move(l); }

  /// HTTP deliveries: attempts and the first retry delay, doubled per retry.
  int http_attempts = 3;
  std::chrono::milliseconds http_backoff{100};

 private:
  struct Job {
    DeviceDescriptor device;
    InferenceMessage message;
  };
  std::optional<Job> prepare(const std::string& device_id, const FuzzySystem& sys, const CrispInputs& inputs,
                             const InferenceResult& result);
  DeliveryReceipt deliver(const Job& job);
  void worker();

  std::shared_ptr<MqttClient> mqtt_;
  mutable std::mutex mutex_;
  std::mutex order_mutex_;  // numbering and queueing happen together
  std::condition_variable cv_;
  std::vector<DeviceDescriptor> devices_;
  std::map<std::string, std::uint64_t> sequences_;
  std::deque<Job> queue_;
  bool busy_ = false;
  bool stopping_ = false;
  Listener message_listener_;
  DeliveryListener delivery_listener_;
  std::thread thread_;
};

}  // namespace aifml
