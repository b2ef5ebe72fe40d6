#include "aifml/simulator.hpp"

#include <httplib.h>

#include "number_format.hpp"

namespace aifml {

nlohmann::ordered_json to_json(const SimulatorState& s) {
  nlohmann::ordered_json j;
  j["device_id"] = s.device_id;
  j["kind"] = to_string(s.kind);
  j["expression"] = s.expression;
  j["display"] = s.display;
  j["message_count"] = s.message_count;
  j["last_sequence"] = s.last_sequence;
  j["ignored"] = s.ignored;
  j["last_message"] = s.last_message ? to_json(*s.last_message) : nlohmann::ordered_json(nullptr);
  j["updated_at"] = s.updated_at;
  return j;
}

std::string mooncar_motion(std::string_view expression) {
  if (expression.find("hot") != std::string_view::npos) return "spin_fast";
  if (expression.find("cool") != std::string_view::npos || expression.find("cold") != std::string_view::npos)
    return "reverse_slow";
  return "idle";
}

DeviceSimulator::DeviceSimulator(SimulatorConfig cfg) : cfg_(std::move(cfg)) {
  state_.device_id = cfg_.device_id;
  state_.kind = cfg_.kind;
}

DeviceSimulator::~DeviceSimulator() { stop(); }

bool DeviceSimulator::apply(const InferenceMessage& m) {
  std::lock_guard lock(mutex_);
  if (m.sequence <= state_.last_sequence) {
    ++state_.ignored;
    return false;
  }
  state_.last_sequence = m.sequence;
  ++state_.message_count;
  state_.expression = m.expression;
  switch (cfg_.kind) {
    case DeviceKind::mooncar:
      state_.display = mooncar_motion(m.expression);
      break;
    case DeviceKind::lt: {
      const auto it = cfg_.display_output.empty() ? m.outputs.begin() : m.outputs.find(cfg_.display_output);
      state_.display = it == m.outputs.end() ? "" : detail::format_number(it->second);
      break;
    }
    default:
      state_.display = m.expression;
  }
  state_.last_message = m;
  state_.updated_at = now_ms();
  return true;
}

SimulatorState DeviceSimulator::state() const {
  std::lock_guard lock(mutex_);
  return state_;
}

void DeviceSimulator::start(std::chrono::milliseconds wait) {
  if (cfg_.transport == Transport::mqtt) {
    auto opt = parse_broker_address(cfg_.broker);
    opt.client_id = "sim-" + cfg_.device_id;
    mqtt_ = std::make_unique<MqttClient>(opt);
    mqtt_->subscribe(device_topic(cfg_.device_id), [this](const std::string&, const std::string& payload, bool) {
      try {
        apply(message_from_json(nlohmann::json::parse(payload)));
      } catch (const std::exception&) {
        std::lock_guard lock(mutex_);
        ++state_.ignored;
      }
    });
    if (!mqtt_->start(wait)) throw MqttError("broker " + cfg_.broker + " unreachable");
  }
  http_ = std::make_unique<httplib::Server>();
  http_->Get("/state", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(to_json(state()).dump(), "application/json");
  });
  http_->Post("/infer", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      apply(message_from_json(nlohmann::json::parse(req.body)));
      res.set_content(R"({"ok":true})", "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
    }
  });
  if (cfg_.port == 0) {
    const int bound = http_->bind_to_any_port(cfg_.host);
    if (bound <= 0) throw std::runtime_error("cannot bind a port on " + cfg_.host);
    port_ = static_cast<std::uint16_t>(bound);
  } else {
    if (!http_->bind_to_port(cfg_.host, cfg_.port)) throw std::runtime_error("cannot bind port " + std::to_string(cfg_.port));
    port_ = cfg_.port;
  }
  http_thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
}

void DeviceSimulator::stop() {
  if (http_) {
    http_->stop();
    if (http_thread_.joinable()) http_thread_.join();
    http_.reset();
  }
  if (mqtt_) {
    mqtt_->stop();
    mqtt_.reset();
  }
}

}  // namespace aifml
