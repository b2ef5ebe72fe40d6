#include "mini_broker.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <stdexcept>

namespace aifml::testing {

struct MiniBroker::Session {
  int fd = -1;
  std::mutex write;
  std::vector<std::string> filters;
  std::uint16_t next_id = 0;
  bool alive = true;
};

namespace {

bool read_exact(int fd, char* out, std::size_t n) {
  while (n > 0) {
    const auto got = ::recv(fd, out, n, 0);
    if (got <= 0) return false;
    out += got;
    n -= static_cast<std::size_t>(got);
  }
  return true;
}

bool write_all(int fd, const std::string& bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = ::send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

std::string encode(unsigned char first, const std::string& rest) {
  std::string out;
  out += static_cast<char>(first);
  auto n = rest.size();
  for (;;) {
    unsigned char digit = n & 0x7f;
    n >>= 7;
    out += static_cast<char>(n ? digit | 0x80 : digit);
    if (!n) break;
  }
  return out + rest;
}

std::string two_bytes(unsigned v) { return {static_cast<char>((v >> 8) & 0xff), static_cast<char>(v & 0xff)}; }

unsigned read16(const std::string& s, std::size_t i) {
  return (static_cast<unsigned char>(s[i]) << 8) | static_cast<unsigned char>(s[i + 1]);
}

bool matches(const std::string& filter, const std::string& topic) {
  // split both on '/', compare level by level
  std::vector<std::string> f, t;
  for (auto* parts : {&f, &t}) {
    const auto& src = parts == &f ? filter : topic;
    std::string cur;
    for (char c : src) {
      if (c == '/') {
        parts->push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    parts->push_back(cur);
  }
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] == "#") return true;
    if (i >= t.size()) return false;
    if (f[i] != "+" && f[i] != t[i]) return false;
  }
  return f.size() == t.size();
}

}  // namespace

MiniBroker::MiniBroker(BrokerOptions opt) : opt_(opt) {
  duplicate_deliveries_ = opt.duplicate_deliveries;
  withheld_ = opt.withhold_acks;
}

MiniBroker::~MiniBroker() { stop(); }

void MiniBroker::start(std::uint16_t port) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  int one = 1;
  setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0)
    throw std::runtime_error("broker cannot listen on port " + std::to_string(port));
  socklen_t len = sizeof addr;
  getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void MiniBroker::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  acceptor_.join();
  kick_clients();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mutex_);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.join();
}

void MiniBroker::kick_clients() {
  std::lock_guard lock(mutex_);
  for (auto& s : sessions_) ::shutdown(s->fd, SHUT_RDWR);
}

std::size_t MiniBroker::client_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

void MiniBroker::accept_loop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    if (!running_) {
      ::close(fd);
      break;
    }
    auto s = std::make_shared<Session>();
    s->fd = fd;
    std::lock_guard lock(mutex_);
    sessions_.push_back(s);
    workers_.emplace_back([this, s] { serve(s); });
  }
}

void MiniBroker::serve(std::shared_ptr<Session> s) {
  for (;;) {
    char first = 0;
    if (!read_exact(s->fd, &first, 1)) break;
    std::size_t len = 0;
    for (int shift = 0;; shift += 7) {
      char b = 0;
      if (shift > 21 || !read_exact(s->fd, &b, 1)) goto done;
      len |= static_cast<std::size_t>(b & 0x7f) << shift;
      if (!(b & 0x80)) break;
    }
    {
      std::string body(len, '\0');
      if (len > 0 && !read_exact(s->fd, body.data(), len)) break;
      const auto type = static_cast<unsigned char>(first) >> 4;
      std::lock_guard w(s->write);
      if (type == 1) {
        write_all(s->fd, encode(0x20, std::string("\0\0", 2)));
      } else if (type == 8) {
        const auto id = read16(body, 0);
        std::string codes;
        for (std::size_t i = 2; i + 2 <= body.size();) {
          const auto n = read16(body, i);
          {
            std::lock_guard lock(mutex_);
            s->filters.push_back(body.substr(i + 2, n));
          }
          i += 2 + n + 1;
          codes += '\1';
        }
        write_all(s->fd, encode(0x90, two_bytes(id) + codes));
      } else if (type == 3) {
        const int qos = (first >> 1) & 3;
        const auto n = read16(body, 0);
        const auto topic = body.substr(2, n);
        const auto payload = body.substr(2 + n + (qos ? 2 : 0));
        ++publishes_received_;
        bool ack = true;
        if (qos == 1 && withheld_ > 0) {
          --withheld_;
          ack = false;
        }
        if (qos == 1 && ack) write_all(s->fd, encode(0x40, two_bytes(read16(body, 2 + n))));
        s->write.unlock();
        route(topic, payload);
        s->write.lock();
      } else if (type == 12) {
        write_all(s->fd, encode(0xD0, ""));
      } else if (type == 14) {
        break;
      }
    }
  }
done:
  std::lock_guard lock(mutex_);
  std::erase(sessions_, s);
  ::close(s->fd);
}

void MiniBroker::route(const std::string& topic, const std::string& payload) {
  std::vector<std::shared_ptr<Session>> targets;
  {
    std::lock_guard lock(mutex_);
    for (auto& s : sessions_)
      for (const auto& f : s->filters)
        if (matches(f, topic)) {
          targets.push_back(s);
          break;
        }
  }
  for (auto& s : targets) {
    std::lock_guard w(s->write);
    const auto id = ++s->next_id == 0 ? ++s->next_id : s->next_id;
    const auto rest = two_bytes(static_cast<unsigned>(topic.size())) + topic + two_bytes(id) + payload;
    write_all(s->fd, encode(0x32, rest));
    ++deliveries_sent_;
    if (duplicate_deliveries_) {
      write_all(s->fd, encode(0x3A, rest));
      ++deliveries_sent_;
    }
  }
}

}  // namespace aifml::testing
