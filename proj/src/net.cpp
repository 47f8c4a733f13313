#include "baro/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include "baro/errors.hpp"

namespace baro {

namespace {

[[noreturn]] void net_fail(const std::string& what) {
    throw NetError(what + ": " + std::strerror(errno));
}

void set_nonblocking(int fd, bool nonblocking) {
    const int flags = fcntl(fd, F_GETFL, 0);
    if (flags < 0) net_fail("fcntl(F_GETFL)");
    const int next = nonblocking ? (flags | O_NONBLOCK) : (flags & ~O_NONBLOCK);
    if (fcntl(fd, F_SETFL, next) < 0) net_fail("fcntl(F_SETFL)");
}

}  // namespace

TcpStream::~TcpStream() { close(); }

TcpStream::TcpStream(TcpStream&& other) noexcept
    : fd_(other.fd_), buffer_(std::move(other.buffer_)) {
    other.fd_ = -1;
}

TcpStream& TcpStream::operator=(TcpStream&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = other.fd_;
        buffer_ = std::move(other.buffer_);
        other.fd_ = -1;
    }
    return *this;
}

TcpStream TcpStream::connect(const std::string& host, std::uint16_t port, int timeout_ms) {
    const int fd = socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) net_fail("socket");
    TcpStream stream(fd);

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    const std::string resolved = (host == "localhost") ? "127.0.0.1" : host;
    if (inet_pton(AF_INET, resolved.c_str(), &addr.sin_addr) != 1) {
        throw NetError("invalid IPv4 address: " + host);
    }

    set_nonblocking(fd, true);
    int rc = ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
    if (rc < 0 && errno != EINPROGRESS) net_fail("connect to " + host);
    if (rc < 0) {
        pollfd pfd{fd, POLLOUT, 0};
        rc = poll(&pfd, 1, timeout_ms);
        if (rc == 0) throw NetError("connect timeout to " + host);
        if (rc < 0) net_fail("poll(connect)");
        int err = 0;
        socklen_t len = sizeof(err);
        if (getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len) < 0) net_fail("getsockopt");
        if (err != 0) {
            errno = err;
            net_fail("connect to " + host);
        }
    }
    set_nonblocking(fd, false);
    const int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return stream;
}

bool TcpStream::write_all(const std::string& data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
        const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        sent += static_cast<std::size_t>(n);
    }
    return true;
}

std::optional<std::string> TcpStream::read_line(int timeout_ms, bool* timed_out) {
    if (timed_out) *timed_out = false;
    while (true) {
        const auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return line;
        }
        pollfd pfd{fd_, POLLIN, 0};
        const int rc = poll(&pfd, 1, timeout_ms);
        if (rc == 0) {
            if (timed_out) *timed_out = true;
            return std::nullopt;
        }
        if (rc < 0) {
            if (errno == EINTR) continue;
            return std::nullopt;
        }
        char chunk[4096];
        const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
        if (n <= 0) return std::nullopt;  // EOF or error
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

void TcpStream::shutdown_both() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void TcpStream::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

TcpListener::~TcpListener() { close(); }

TcpListener::TcpListener(TcpListener&& other) noexcept : fd_(other.fd_), port_(other.port_) {
    other.fd_ = -1;
}

TcpListener& TcpListener::operator=(TcpListener&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = other.fd_;
        port_ = other.port_;
        other.fd_ = -1;
    }
    return *this;
}

TcpListener TcpListener::bind(std::uint16_t port) {
    TcpListener listener;
    listener.fd_ = socket(AF_INET, SOCK_STREAM, 0);
    if (listener.fd_ < 0) net_fail("socket");
    const int one = 1;
    setsockopt(listener.fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(port);
    if (::bind(listener.fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        net_fail("bind port " + std::to_string(port));
    }
    if (::listen(listener.fd_, 16) < 0) net_fail("listen");

    socklen_t len = sizeof(addr);
    if (getsockname(listener.fd_, reinterpret_cast<sockaddr*>(&addr), &len) < 0) {
        net_fail("getsockname");
    }
    listener.port_ = ntohs(addr.sin_port);
    return listener;
}

std::optional<TcpStream> TcpListener::accept(int timeout_ms) {
    pollfd pfd{fd_, POLLIN, 0};
    const int rc = poll(&pfd, 1, timeout_ms);
    if (rc <= 0) return std::nullopt;
    const int client = ::accept(fd_, nullptr, nullptr);
    if (client < 0) return std::nullopt;
    const int one = 1;
    setsockopt(client, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return TcpStream(client);
}

void TcpListener::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint) {
    const auto colon = endpoint.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == endpoint.size()) {
        throw NetError("expected host:port, got '" + endpoint + "'");
    }
    const std::string host = endpoint.substr(0, colon);
    const std::string port_str = endpoint.substr(colon + 1);
    std::uint16_t port = 0;
    auto [ptr, ec] = std::from_chars(port_str.data(), port_str.data() + port_str.size(), port);
    if (ec != std::errc() || ptr != port_str.data() + port_str.size() || port == 0) {
        throw NetError("bad port in endpoint '" + endpoint + "'");
    }
    return {host, port};
}

}  // namespace baro
