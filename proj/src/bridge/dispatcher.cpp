#include "aifml/dispatcher.hpp"

#include <httplib.h>

#include <stdexcept>

namespace aifml {
namespace {

struct Url {
  std::string origin;  // scheme://host:port
  std::string path;
};

Url split_url(const std::string& url) {
  const auto slash = url.find('/', url.find("://") + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

Dispatcher::Dispatcher(std::shared_ptr<MqttClient> mqtt) : mqtt_(std::move(mqtt)) {
  thread_ = std::thread([this] { worker(); });
}

Dispatcher::~Dispatcher() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  cv_.notify_all();
  thread_.join();
}

void Dispatcher::put_device(const DeviceDescriptor& d, const FuzzySystem& sys) {
  const auto problems = check_device(d, sys);
  if (!problems.empty()) {
    std::string text = "invalid device '" + d.device_id + "'";
    for (const auto& p : problems) text += "; " + p;
    throw std::invalid_argument(text);
  }
  std::lock_guard lock(mutex_);
  for (auto& existing : devices_) {
    if (existing.device_id == d.device_id) {
      existing = d;
      return;
    }
  }
  devices_.push_back(d);
}

std::vector<DeviceDescriptor> Dispatcher::devices() const {
  std::lock_guard lock(mutex_);
  return devices_;
}

std::optional<DeviceDescriptor> Dispatcher::device(const std::string& id) const {
  std::lock_guard lock(mutex_);
  for (const auto& d : devices_)
    if (d.device_id == id) return d;
  return std::nullopt;
}

std::uint64_t Dispatcher::last_sequence(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = sequences_.find(id);
  return it == sequences_.end() ? 0 : it->second;
}

std::optional<Dispatcher::Job> Dispatcher::prepare(const std::string& device_id, const FuzzySystem& sys,
                                                   const CrispInputs& inputs, const InferenceResult& result) {
  std::lock_guard lock(mutex_);
  for (const auto& d : devices_) {
    if (d.device_id != device_id) continue;
    // A device whose output vanished after PUT /system is skipped.
    if (result.output(d.output) == nullptr) return std::nullopt;
    const auto seq = ++sequences_[device_id];
    return Job{d, make_message(d, seq, sys, inputs, result, now_ms())};
  }
  throw std::invalid_argument("unknown device '" + device_id + "'");
}

DeliveryReceipt Dispatcher::deliver(const Job& job) {
  DeliveryReceipt receipt{job.device.device_id, job.message.sequence, false, {}};
  if (message_listener_) message_listener_(job.device.device_id, job.message);
  const auto payload = to_json(job.message).dump();
  try {
    if (job.device.transport == Transport::mqtt) {
      if (!mqtt_) throw MqttError("no broker configured");
      mqtt_->publish(job.device.address, payload);
      receipt.ok = true;
    } else {
      const auto url = split_url(job.device.address);
      httplib::Client client(url.origin);
      client.set_connection_timeout(std::chrono::seconds(1));
      client.set_read_timeout(std::chrono::seconds(2));
      auto delay = http_backoff;
      for (int attempt = 0; attempt < http_attempts && !receipt.ok; ++attempt) {
        if (attempt > 0) {
          std::this_thread::sleep_for(delay);
          delay *= 2;
        }
        const auto res = client.Post(url.path, payload, "application/json");
        if (res && res->status == 200)
          receipt.ok = true;
        else
          receipt.error = res ? "endpoint answered " + std::to_string(res->status)
                              : "endpoint unreachable: " + httplib::to_string(res.error());
      }
    }
  } catch (const std::exception& e) {
    receipt.error = e.what();
  }
  if (receipt.ok) receipt.error.clear();
  if (delivery_listener_) delivery_listener_(receipt);
  return receipt;
}

DeliveryReceipt Dispatcher::publish(const std::string& device_id, const FuzzySystem& sys, const CrispInputs& inputs,
                                    const InferenceResult& result) {
  const auto job = prepare(device_id, sys, inputs, result);
  if (!job) return {device_id, 0, false, "device output is not produced by the system"};
  return deliver(*job);
}

void Dispatcher::dispatch_all(const FuzzySystem& sys, const CrispInputs& inputs, const InferenceResult& result) {
  std::lock_guard order(order_mutex_);
  std::vector<Job> jobs;
  for (const auto& d : devices())
    if (auto job = prepare(d.device_id, sys, inputs, result)) jobs.push_back(std::move(*job));
  {
    std::lock_guard lock(mutex_);
    for (auto& j : jobs) queue_.push_back(std::move(j));
  }
  cv_.notify_all();
}

void Dispatcher::flush() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [this] { return queue_.empty() && !busy_; });
}

void Dispatcher::worker() {
  std::unique_lock lock(mutex_);
  for (;;) {
    cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
    if (queue_.empty() && stopping_) return;
    auto job = std::move(queue_.front());
    queue_.pop_front();
    busy_ = true;
    lock.unlock();
    deliver(job);
    lock.lock();
    busy_ = false;
    cv_.notify_all();
  }
}

}  // namespace aifml
