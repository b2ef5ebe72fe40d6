#include "aifml/service.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace aifml {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using nlohmann::json;
using nlohmann::ordered_json;

struct TrainingJob {
  std::string id;
  PsoConfig cfg;
  mutable std::mutex mutex;
  std::string status = "running";  // running | done | failed
  std::vector<double> best_so_far;
  std::string system_xml;
  std::string error;
};

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_atomically(const std::string& path, const std::string& text) {
  const auto tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << text;
    if (!out.flush()) throw std::runtime_error("cannot write " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

HttpReply json_reply(int status, const ordered_json& j) { return {status, "application/json", j.dump()}; }

HttpReply error_reply(int status, const std::string& message) {
  return json_reply(status, ordered_json{{"error", message}});
}

// WebSocket session for /events. Only ever touched on the io thread.
class EventSession : public std::enable_shared_from_this<EventSession> {
 public:
  EventSession(tcp::socket socket, Service::Impl& owner) : ws_(std::move(socket)), owner_(owner) {}

  void run(http::request<http::string_body> req);
  void send(std::shared_ptr<const std::string> text) {
    queue_.push_back(std::move(text));
    if (queue_.size() == 1 && open_) write_next();
  }

 private:
  void write_next() {
    ws_.text(true);
    ws_.async_write(net::buffer(*queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write_next();
    });
  }
  void read_next() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      self->buffer_.consume(self->buffer_.size());
      self->read_next();
    });
  }
  void close();

  websocket::stream<beast::tcp_stream> ws_;
  Service::Impl& owner_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool open_ = false;
};

}  // namespace

struct Service::Impl {
  Service& service;
  net::io_context io{1};
  tcp::acceptor acceptor{io};
  std::thread thread;
  std::set<std::shared_ptr<EventSession>> sessions;  // io thread only
  std::mutex outbox_mutex;
  std::deque<std::shared_ptr<const std::string>> outbox;

  explicit Impl(Service& s) : service(s) {}
  void accept();
};

namespace {

void EventSession::run(http::request<http::string_body> req) {
  ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
  ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
    if (ec) return;
    self->open_ = true;
    self->owner_.sessions.insert(self);
    // Nothing has been written yet, so the greeting can go first.
    self->queue_.push_front(std::make_shared<const std::string>(R"({"type":"hello"})"));
    self->write_next();
    self->read_next();
  });
}

void EventSession::close() {
  open_ = false;
  owner_.sessions.erase(shared_from_this());
}

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, Service::Impl& owner) : stream_(std::move(socket)), owner_(owner) {}

  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->shutdown();
      self->on_request();
    });
  }

 private:
  void on_request() {
    if (websocket::is_upgrade(req_)) {
      if (req_.target() == "/events") {
        stream_.expires_never();
        std::make_shared<EventSession>(stream_.release_socket(), owner_)->run(std::move(req_));
        return;
      }
    }
    const auto reply = owner_.service.handle(std::string(req_.method_string()), std::string(req_.target()), req_.body());
    auto res = std::make_shared<http::response<http::string_body>>(static_cast<http::status>(reply.status),
                                                                    req_.version());
    res->set(http::field::server, "aifml");
    res->set(http::field::content_type, reply.content_type);
    res->keep_alive(req_.keep_alive());
    res->body() = reply.body;
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec || !res->keep_alive()) return self->shutdown();
      self->read();
    });
  }
  void shutdown() {
    beast::error_code ec;
    stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
  }

  beast::tcp_stream stream_;
  Service::Impl& owner_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

void Service::Impl::accept() {
  acceptor.async_accept(net::make_strand(io), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;
    std::make_shared<HttpSession>(std::move(socket), *this)->read();
    accept();
  });
}

Service::Service(ServiceConfig cfg) : cfg_(std::move(cfg)), impl_(std::make_unique<Impl>(*this)) {
  auto sys = parse_fml(read_text(cfg_.system_path));
  InferenceEngine engine(sys);
  snapshot_ = std::make_shared<const Snapshot>(Snapshot{std::move(sys), std::move(engine)});
}

Service::~Service() { stop(); }

std::shared_ptr<const Service::Snapshot> Service::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return snapshot_;
}

void Service::start() {
  if (!cfg_.broker.empty()) {
    auto opt = parse_broker_address(cfg_.broker);
    opt.client_id = "aifml-service";
    mqtt_ = std::make_shared<MqttClient>(opt);
    mqtt_->start(cfg_.broker_wait);
  }
  dispatcher_ = std::make_unique<Dispatcher>(mqtt_);
  dispatcher_->on_message([this](const std::string& id, const InferenceMessage& m) {
    ordered_json event{{"type", "dispatch"}, {"device_id", id}, {"message", to_json(m)}};
    broadcast(event.dump());
  });
  dispatcher_->on_delivery([this](const DeliveryReceipt& r) {
    ordered_json event{{"type", "delivery"}, {"device_id", r.device_id}, {"sequence", r.sequence}, {"ok", r.ok}};
    if (!r.ok) event["error"] = r.error;
    broadcast(event.dump());
  });
  if (!cfg_.devices_path.empty()) {
    const auto list = json::parse(read_text(cfg_.devices_path));
    if (!list.is_array()) throw std::runtime_error(cfg_.devices_path + ": expected a JSON array of devices");
    for (const auto& d : list) dispatcher_->put_device(device_from_json(d), snapshot()->system);
  }

  const tcp::endpoint endpoint(net::ip::make_address(cfg_.host), cfg_.port);
  impl_->acceptor.open(endpoint.protocol());
  impl_->acceptor.set_option(net::socket_base::reuse_address(true));
  impl_->acceptor.bind(endpoint);
  impl_->acceptor.listen();
  port_ = impl_->acceptor.local_endpoint().port();
  impl_->accept();
  impl_->thread = std::thread([this] { impl_->io.run(); });
}

void Service::stop() {
  stopping_ = true;
  if (impl_ && impl_->thread.joinable()) {
    impl_->io.stop();
    impl_->thread.join();
  }
  {
    std::unique_lock lock(jobs_mutex_);
    if (training_thread_.joinable()) {
      lock.unlock();
      training_thread_.join();
    }
  }
  // Stopping MQTT first fails any publish still waiting for a broker.
  if (mqtt_) mqtt_->stop();
  dispatcher_.reset();
}

bool Service::degraded() const { return !mqtt_ || !mqtt_->connected(); }

void Service::broadcast(const std::string& event) {
  // Queued under a lock so events leave in call order whatever thread
  // raised them.
  {
    std::lock_guard lock(impl_->outbox_mutex);
    impl_->outbox.push_back(std::make_shared<const std::string>(event));
  }
  net::post(impl_->io, [this] {
    std::deque<std::shared_ptr<const std::string>> batch;
    {
      std::lock_guard lock(impl_->outbox_mutex);
      batch.swap(impl_->outbox);
    }
    for (const auto& text : batch)
      for (const auto& s : impl_->sessions) s->send(text);
  });
}

HttpReply Service::handle(const std::string& method, const std::string& target, const std::string& body) {
  auto path = target.substr(0, target.find('?'));
  try {
    if (path == "/system") {
      if (method == "GET") return get_system();
      if (method == "PUT") return put_system(body);
    } else if (path == "/infer") {
      if (method == "POST") return post_infer(body);
    } else if (path == "/train") {
      if (method == "POST") return post_train(body);
    } else if (path.rfind("/train/", 0) == 0) {
      if (method == "GET") return get_train(path.substr(7));
    } else if (path == "/devices") {
      if (method == "GET") return get_devices();
    } else if (path.rfind("/devices/", 0) == 0) {
      if (method == "PUT") return put_device(path.substr(9), body);
    } else if (path == "/events") {
      return error_reply(426, "websocket upgrade required");
    } else {
      return error_reply(404, "no such resource");
    }
    return error_reply(405, "method not allowed");
  } catch (const std::exception& e) {
    return error_reply(500, e.what());
  }
}

HttpReply Service::get_system() { return {200, "application/xml", serialize_fml(snapshot()->system)}; }

HttpReply Service::put_system(const std::string& body) {
  if (training_running()) return error_reply(409, "training job in progress");
  FuzzySystem sys;
  try {
    sys = parse_fml(body);
  } catch (const FmlError& e) {
    ordered_json violations = ordered_json::array();
    for (const auto& d : e.diagnostics())
      violations.push_back(ordered_json{{"path", d.path}, {"line", d.line}, {"message", d.message}});
    return json_reply(422, ordered_json{{"error", "invalid system"}, {"violations", violations}});
  }
  const auto xml = serialize_fml(sys);
  InferenceEngine engine(sys);
  write_text_atomically(cfg_.system_path, xml);
  {
    std::lock_guard lock(snapshot_mutex_);
    snapshot_ = std::make_shared<const Snapshot>(Snapshot{sys, std::move(engine)});
  }
  broadcast(ordered_json{{"type", "system"}, {"name", sys.name}}.dump());
  return json_reply(200, ordered_json{{"ok", true}, {"name", sys.name}});
}

HttpReply Service::post_infer(const std::string& body) {
  const auto snap = snapshot();
  CrispInputs inputs;
  try {
    inputs = inputs_from_json(json::parse(body), snap->system);
  } catch (const json::exception& e) {
    return error_reply(400, std::string("malformed JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    return error_reply(400, e.what());
  }
  InferenceResult result;
  try {
    result = snap->engine.infer(inputs);
  } catch (const std::invalid_argument& e) {
    return error_reply(400, e.what());
  }
  const auto text = result_json(result);
  ordered_json event{{"type", "inference"}, {"inputs", inputs}, {"result", to_json(result)}};
  broadcast(event.dump());
  dispatcher_->dispatch_all(snap->system, inputs, result);
  return {200, "application/json", text};
}

bool Service::training_running() const {
  std::lock_guard lock(jobs_mutex_);
  if (!active_job_) return false;
  std::lock_guard job(active_job_->mutex);
  return active_job_->status == "running";
}

HttpReply Service::post_train(const std::string& body) {
  json request;
  try {
    request = json::parse(body);
  } catch (const json::exception& e) {
    return error_reply(400, std::string("malformed JSON: ") + e.what());
  }
  if (!request.is_object()) return error_reply(400, "expected a JSON object");
  PsoConfig cfg;
  try {
    auto read_int = [&](const char* key, int& dst) {
      if (request.contains(key)) {
        if (!request[key].is_number_integer()) throw std::invalid_argument(std::string("'") + key + "' must be an integer");
        dst = request[key].get<int>();
      }
    };
    auto read_real = [&](const char* key, double& dst) {
      if (request.contains(key)) {
        if (!request[key].is_number()) throw std::invalid_argument(std::string("'") + key + "' must be a number");
        dst = request[key].get<double>();
      }
    };
    read_int("swarm_size", cfg.swarm_size);
    read_int("max_evaluations", cfg.max_evaluations);
    read_real("inertia", cfg.inertia);
    read_real("cognitive", cfg.cognitive);
    read_real("social", cfg.social);
    read_real("velocity_clamp_fraction", cfg.velocity_clamp_fraction);
    if (request.contains("seed")) {
      if (!request["seed"].is_number_unsigned()) throw std::invalid_argument("'seed' must be an unsigned integer");
      cfg.seed = request["seed"].get<std::uint64_t>();
    }
    check_config(cfg);
    if (!request.contains("data") || !request["data"].is_string())
      throw std::invalid_argument("'data' must hold the training CSV text");
  } catch (const std::invalid_argument& e) {
    return error_reply(400, e.what());
  }
  const auto snap = snapshot();
  Dataset data;
  try {
    data = load_dataset(request["data"].get<std::string>(), snap->system);
  } catch (const DataError& e) {
    return error_reply(400, e.what());
  }

  std::unique_lock lock(jobs_mutex_);
  if (active_job_) {
    std::lock_guard job(active_job_->mutex);
    if (active_job_->status == "running") return error_reply(409, "training job in progress");
  }
  if (training_thread_.joinable()) training_thread_.join();
  auto job = std::make_shared<TrainingJob>();
  job->id = std::to_string(next_job_++);
  job->cfg = cfg;
  jobs_[job->id] = job;
  active_job_ = job;
  training_thread_ = std::thread([this, job, sys = snap->system, data = std::move(data)] {
    auto progress = [&](int evaluations, double best) {
      if (stopping_) throw std::runtime_error("service stopped");
      {
        std::lock_guard lock(job->mutex);
        job->best_so_far.push_back(best);
      }
      if (evaluations % job->cfg.swarm_size == 0 || evaluations == job->cfg.max_evaluations)
        broadcast(ordered_json{{"type", "training"},
                               {"id", job->id},
                               {"status", "running"},
                               {"evaluations", evaluations},
                               {"best_fitness", best}}
                      .dump());
    };
    std::string status = "done";
    try {
      const auto trained = pso_train(sys, data, job->cfg, progress);
      std::lock_guard lock(job->mutex);
      job->system_xml = serialize_fml(trained.system);
      job->status = "done";
    } catch (const std::exception& e) {
      std::lock_guard lock(job->mutex);
      job->error = e.what();
      job->status = status = "failed";
    }
    broadcast(ordered_json{{"type", "training"}, {"id", job->id}, {"status", status}}.dump());
  });
  return json_reply(202, ordered_json{{"id", job->id}});
}

HttpReply Service::get_train(const std::string& id) {
  std::shared_ptr<TrainingJob> job;
  {
    std::lock_guard lock(jobs_mutex_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) return error_reply(404, "unknown training job '" + id + "'");
    job = it->second;
  }
  std::lock_guard lock(job->mutex);
  ordered_json j;
  j["id"] = job->id;
  j["status"] = job->status;
  j["evaluations"] = job->best_so_far.size();
  j["max_evaluations"] = job->cfg.max_evaluations;
  j["best_fitness"] = job->best_so_far.empty() ? ordered_json(nullptr) : ordered_json(job->best_so_far.back());
  j["best_so_far"] = job->best_so_far;
  if (job->status == "done") j["system"] = job->system_xml;
  if (job->status == "failed") j["error"] = job->error;
  return json_reply(200, j);
}

HttpReply Service::get_devices() {
  ordered_json list = ordered_json::array();
  for (const auto& d : dispatcher_->devices()) {
    auto j = to_json(d);
    j["last_sequence"] = dispatcher_->last_sequence(d.device_id);
    list.push_back(j);
  }
  return json_reply(200, ordered_json{{"devices", list}});
}

HttpReply Service::put_device(const std::string& id, const std::string& body) {
  DeviceDescriptor d;
  try {
    auto j = json::parse(body);
    if (j.is_object() && !j.contains("device_id")) j["device_id"] = id;
    d = device_from_json(j);
  } catch (const json::exception& e) {
    return error_reply(400, std::string("malformed JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    return error_reply(400, e.what());
  }
  if (d.device_id != id) return error_reply(400, "device_id does not match the URL");
  const auto problems = check_device(d, snapshot()->system);
  if (!problems.empty()) return json_reply(422, ordered_json{{"error", "invalid device"}, {"violations", problems}});
  dispatcher_->put_device(d, snapshot()->system);
  return json_reply(200, to_json(d));
}

}  // namespace aifml
