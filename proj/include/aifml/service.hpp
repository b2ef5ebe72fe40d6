// HTTP + WebSocket service over one port: system editing, inference,
// training jobs, device registry and an event stream at /events.
#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <set>
#include <thread>

#include "aifml/dispatcher.hpp"
#include "aifml/learn.hpp"

namespace aifml {

struct ServiceConfig {
  std::string system_path;
  std::string host = "127.0.0.1";
  std::uint16_t port = 8080;  // 0 picks a free port
  /// host:port of the MQTT broker; empty runs without one.
  std::string broker;
  /// Optional JSON array of device descriptors registered at start-up.
  std::string devices_path;
  std::chrono::milliseconds broker_wait{2000};
};

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

struct TrainingJob;

class Service {
 public:
  /// Loads the system file; throws FmlError or std::runtime_error.
  explicit Service(ServiceConfig cfg);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Connects to the broker (degraded mode if it is unreachable), binds
  /// and starts serving.
  void start();
  void stop();
  std::uint16_t port() const { return port_; }
  /// True when MQTT devices cannot currently be reached.
  bool degraded() const;

  /// The request router, callable without a socket.
  HttpReply handle(const std::string& method, const std::string& target, const std::string& body);

  /// Sends a JSON event to every open /events socket.
  void broadcast(const std::string& event);

  Dispatcher& dispatcher() { return *dispatcher_; }

  struct Impl;

 private:
  struct Snapshot {
    FuzzySystem system;
    InferenceEngine engine;
  };
  std::shared_ptr<const Snapshot> snapshot() const;

  HttpReply get_system();
  HttpReply put_system(const std::string& body);
  HttpReply post_infer(const std::string& body);
  HttpReply post_train(const std::string& body);
  HttpReply get_train(const std::string& id);
  HttpReply get_devices();
  HttpReply put_device(const std::string& id, const std::string& body);
  bool training_running() const;

  ServiceConfig cfg_;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const Snapshot> snapshot_;
  std::shared_ptr<MqttClient> mqtt_;
  std::unique_ptr<Dispatcher> dispatcher_;

  mutable std::mutex jobs_mutex_;
  std::map<std::string, std::shared_ptr<TrainingJob>> jobs_;
  std::shared_ptr<TrainingJob> active_job_;
  std::thread training_thread_;
  int next_job_ = 1;
  std::atomic<bool> stopping_{false};

  std::unique_ptr<Impl> impl_;
  std::uint16_t port_ = 0;
};

}  // namespace aifml
