#include "aifml/mqtt.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>

namespace aifml {
namespace {

enum : std::uint8_t {
  kConnect = 1,
  kConnack = 2,
  kPublish = 3,
  kPuback = 4,
  kSubscribe = 8,
  kSuback = 9,
  kPingreq = 12,
  kPingresp = 13,
  kDisconnect = 14,
};

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v & 0xff));
}

void put_string(std::string& out, std::string_view s) {
  put_u16(out, static_cast<std::uint16_t>(s.size()));
  out.append(s);
}

std::string frame(std::uint8_t header, const std::string& body) {
  std::string out(1, static_cast<char>(header));
  std::size_t len = body.size();
  do {
    std::uint8_t byte = len % 128;
    len /= 128;
    if (len > 0) byte |= 0x80;
    out.push_back(static_cast<char>(byte));
  } while (len > 0);
  return out + body;
}

std::uint16_t get_u16(const std::string& s, std::size_t at) {
  return static_cast<std::uint16_t>((static_cast<std::uint8_t>(s[at]) << 8) | static_cast<std::uint8_t>(s[at + 1]));
}

std::string publish_packet(const std::string& topic, const std::string& payload, std::uint16_t id, bool dup) {
  std::string body;
  put_string(body, topic);
  put_u16(body, id);
  body += payload;
  return frame(static_cast<std::uint8_t>((kPublish << 4) | (dup ? 0x08 : 0) | 0x02), body);
}

std::string subscribe_packet(const std::string& filter, std::uint16_t id) {
  std::string body;
  put_u16(body, id);
  put_string(body, filter);
  body.push_back(1);
  return frame((kSubscribe << 4) | 0x02, body);
}

int dial(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0) return -1;
  int fd = -1;
  for (auto* p = res; p != nullptr; p = p->ai_next) {
    fd = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  freeaddrinfo(res);
  if (fd >= 0) {
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  return fd;
}

enum class ReadStatus { packet, timeout, closed };

// Reads one whole packet within `timeout_ms`.
ReadStatus read_packet(int fd, std::string& buffer, std::uint8_t& header, std::string& body, int timeout_ms) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  for (;;) {
    if (buffer.size() >= 2) {
      std::size_t len = 0, mult = 1, pos = 1;
      bool complete = false;
      while (pos < buffer.size() && pos <= 4) {
        const auto byte = static_cast<std::uint8_t>(buffer[pos++]);
        len += (byte & 0x7f) * mult;
        mult *= 128;
        if (!(byte & 0x80)) {
          complete = true;
          break;
        }
      }
      if (!complete && pos > 4) return ReadStatus::closed;
      if (complete && buffer.size() >= pos + len) {
        header = static_cast<std::uint8_t>(buffer[0]);
        body = buffer.substr(pos, len);
        buffer.erase(0, pos + len);
        return ReadStatus::packet;
      }
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return ReadStatus::timeout;
    pollfd p{fd, POLLIN, 0};
    const int ready = ::poll(&p, 1, static_cast<int>(left.count()));
    if (ready == 0) return ReadStatus::timeout;
    if (ready < 0) return ReadStatus::closed;
    char chunk[4096];
    const auto n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) return ReadStatus::closed;
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

}  // namespace

MqttOptions parse_broker_address(const std::string& text) {
  MqttOptions opt;
  const auto colon = text.rfind(':');
  opt.host = text.substr(0, colon);
  if (opt.host.empty()) throw std::invalid_argument("broker address needs a host");
  if (colon != std::string::npos) {
    const auto port = text.substr(colon + 1);
    int value = 0;
    try {
      std::size_t used = 0;
      value = std::stoi(port, &used);
      if (used != port.size()) value = -1;
    } catch (const std::exception&) {
      value = -1;
    }
    if (value <= 0 || value > 65535) throw std::invalid_argument("bad broker port '" + port + "'");
    opt.port = static_cast<std::uint16_t>(value);
  }
  return opt;
}

bool topic_matches(std::string_view filter, std::string_view topic) {
  std::size_t f = 0, t = 0;
  while (f < filter.size()) {
    const auto f_end = std::min(filter.find('/', f), filter.size());
    const auto level = filter.substr(f, f_end - f);
    if (level == "#") return true;
    if (t > topic.size()) return false;
    const auto t_end = std::min(topic.find('/', t), topic.size());
    if (level != "+" && level != topic.substr(t, t_end - t)) return false;
    f = f_end + 1;
    t = t_end + 1;
  }
  return t > topic.size();
}

MqttClient::MqttClient(MqttOptions opt) : opt_(std::move(opt)) {
  if (opt_.client_id.empty()) opt_.client_id = "aifml-" + std::to_string(reinterpret_cast<std::uintptr_t>(this) % 100000);
}

MqttClient::~MqttClient() { stop(); }

bool MqttClient::start(std::chrono::milliseconds wait) {
  {
    std::lock_guard lock(mutex_);
    if (thread_.joinable()) return connected_;
    stopping_ = false;
  }
  thread_ = std::thread([this] { run(); });
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, wait, [this] { return connected_; });
  return connected_;
}

void MqttClient::stop() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

bool MqttClient::connected() const {
  std::lock_guard lock(mutex_);
  return connected_;
}

MqttClient::Stats MqttClient::stats() const {
  std::lock_guard lock(mutex_);
  return stats_;
}

std::uint16_t MqttClient::next_packet_id() {
  std::lock_guard lock(mutex_);
  do {
    ++last_id_;
  } while (last_id_ == 0 || pending_.count(last_id_));
  pending_[last_id_] = false;
  return last_id_;
}

bool MqttClient::send_packet(const std::string& bytes) {
  std::lock_guard lock(write_mutex_);
  int fd;
  {
    std::lock_guard state(mutex_);
    fd = fd_;
  }
  if (fd < 0) return false;
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const auto n = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

bool MqttClient::open_connection() {
  const int fd = dial(opt_.host, opt_.port);
  if (fd < 0) return false;
  std::string body;
  put_string(body, "MQTT");
  body.push_back(4);     // protocol level 3.1.1
  body.push_back(0x02);  // clean session
  put_u16(body, static_cast<std::uint16_t>(opt_.keep_alive.count()));
  put_string(body, opt_.client_id);
  const auto packet = frame(kConnect << 4, body);
  if (::send(fd, packet.data(), packet.size(), MSG_NOSIGNAL) != static_cast<ssize_t>(packet.size())) {
    ::close(fd);
    return false;
  }
  std::string buffer, reply;
  std::uint8_t header = 0;
  if (read_packet(fd, buffer, header, reply, static_cast<int>(opt_.ack_timeout.count()) * 4) != ReadStatus::packet ||
      header >> 4 != kConnack || reply.size() < 2 || reply[1] != 0) {
    ::close(fd);
    return false;
  }
  std::vector<std::string> resubscribe;
  {
    std::lock_guard lock(mutex_);
    fd_ = fd;
    connected_ = true;
    ++stats_.connects;
    for (const auto& [filter, handler] : subscriptions_) resubscribe.push_back(filter);
  }
  for (const auto& filter : resubscribe) {
    std::uint16_t id;
    {
      std::lock_guard lock(mutex_);
      do {
        ++last_id_;
      } while (last_id_ == 0 || pending_.count(last_id_));
      id = last_id_;
    }
    send_packet(subscribe_packet(filter, id));
  }
  cv_.notify_all();
  return true;
}

void MqttClient::close_connection() {
  std::lock_guard write(write_mutex_);
  std::lock_guard lock(mutex_);
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
  connected_ = false;
}

void MqttClient::run() {
  auto backoff = opt_.reconnect_min;
  std::string buffer;
  auto last_ping = std::chrono::steady_clock::now();
  for (;;) {
    {
      std::unique_lock lock(mutex_);
      if (stopping_) break;
    }
    if (!connected()) {
      if (open_connection()) {
        backoff = opt_.reconnect_min;
        buffer.clear();
        ping_outstanding_ = false;
        last_ping = std::chrono::steady_clock::now();
        continue;
      }
      std::unique_lock lock(mutex_);
      cv_.wait_for(lock, backoff, [this] { return stopping_; });
      backoff = std::min(backoff * 2, opt_.reconnect_max);
      continue;
    }
    int fd;
    {
      std::lock_guard lock(mutex_);
      fd = fd_;
    }
    std::uint8_t header = 0;
    std::string body;
    const auto status = read_packet(fd, buffer, header, body, 50);
    if (status == ReadStatus::closed) {
      close_connection();
      continue;
    }
    if (status == ReadStatus::packet) {
      if (header >> 4 == kPingresp) ping_outstanding_ = false;
      handle_packet(header, body);
    }
    const auto since_ping = std::chrono::steady_clock::now() - last_ping;
    if (ping_outstanding_ && since_ping > opt_.keep_alive) {
      close_connection();
    } else if (!ping_outstanding_ && since_ping > opt_.keep_alive / 2) {
      ping_outstanding_ = true;
      last_ping = std::chrono::steady_clock::now();
      send_packet(frame(kPingreq << 4, ""));
    }
  }
  if (connected()) send_packet(frame(kDisconnect << 4, ""));
  close_connection();
}

void MqttClient::handle_packet(std::uint8_t header, const std::string& body) {
  switch (header >> 4) {
    case kPublish: {
      const int qos = (header >> 1) & 0x03;
      const bool dup = (header & 0x08) != 0;
      if (body.size() < 2) return;
      const auto topic_len = get_u16(body, 0);
      if (body.size() < 2u + topic_len + (qos > 0 ? 2u : 0u)) return;
      const auto topic = body.substr(2, topic_len);
      std::size_t at = 2u + topic_len;
      if (qos > 0) {
        std::string ack;
        put_u16(ack, get_u16(body, at));
        send_packet(frame(kPuback << 4, ack));
        at += 2;
      }
      const auto payload = body.substr(at);
      std::vector<Handler> handlers;
      {
        std::lock_guard lock(mutex_);
        ++stats_.received;
        for (const auto& [filter, handler] : subscriptions_)
          if (topic_matches(filter, topic)) handlers.push_back(handler);
      }
      for (const auto& h : handlers) h(topic, payload, dup);
      break;
    }
    case kPuback:
    case kSuback: {
      if (body.size() < 2) return;
      {
        std::lock_guard lock(mutex_);
        const auto it = pending_.find(get_u16(body, 0));
        if (it != pending_.end()) it->second = true;
      }
      cv_.notify_all();
      break;
    }
    default:
      break;
  }
}

void MqttClient::subscribe(const std::string& filter, Handler handler) {
  {
    std::lock_guard lock(mutex_);
    subscriptions_.emplace_back(filter, std::move(handler));
    if (!connected_) return;
  }
  const auto id = next_packet_id();
  send_packet(subscribe_packet(filter, id));
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, opt_.ack_timeout * 4, [&] { return pending_[id] || stopping_; });
  const bool acked = pending_[id];
  pending_.erase(id);
  if (!acked && connected_) throw MqttError("no SUBACK for '" + filter + "'");
}

void MqttClient::publish(const std::string& topic, const std::string& payload) {
  const auto id = next_packet_id();
  auto wait = opt_.ack_timeout;
  for (int attempt = 0; attempt < opt_.max_attempts; ++attempt) {
    {
      std::unique_lock lock(mutex_);
      cv_.wait_for(lock, wait, [this] { return connected_ || stopping_; });
      if (stopping_) break;
    }
    if (send_packet(publish_packet(topic, payload, id, attempt > 0))) {
      std::unique_lock lock(mutex_);
      if (attempt > 0) ++stats_.retransmits;
      if (cv_.wait_for(lock, wait, [&] { return pending_[id] || stopping_; }) && pending_[id]) {
        pending_.erase(id);
        ++stats_.published;
        return;
      }
    }
    wait = std::min(wait * 2, opt_.max_backoff);
  }
  std::lock_guard lock(mutex_);
  pending_.erase(id);
  throw MqttError(connected_ ? "acknowledgment timeout publishing to '" + topic + "'"
                             : "broker unreachable publishing to '" + topic + "'");
}

}  // namespace aifml
