#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace baro {

// Thin RAII wrappers over POSIX stream sockets (loopback telemetry links).

class TcpStream {
public:
    TcpStream() = default;
    explicit TcpStream(int fd) : fd_(fd) {}
    ~TcpStream();

    TcpStream(TcpStream&& other) noexcept;
    TcpStream& operator=(TcpStream&& other) noexcept;
    TcpStream(const TcpStream&) = delete;
    TcpStream& operator=(const TcpStream&) = delete;

    // Connects with a timeout; throws NetError on failure.
    static TcpStream connect(const std::string& host, std::uint16_t port,
                             int timeout_ms = 5000);

    bool valid() const { return fd_ >= 0; }
    int fd() const { return fd_; }

    // Sends the whole buffer; false on broken connection.
    bool write_all(const std::string& data);

    // Next newline-terminated line (newline stripped). nullopt on EOF or
    // error. timeout_ms < 0 blocks indefinitely; on timeout returns nullopt
    // with timed_out set.
    std::optional<std::string> read_line(int timeout_ms, bool* timed_out = nullptr);

    void shutdown_both();
    void close();

private:
    int fd_ = -1;
    std::string buffer_;
};

class TcpListener {
public:
    TcpListener() = default;
    ~TcpListener();

    TcpListener(TcpListener&& other) noexcept;
    TcpListener& operator=(TcpListener&& other) noexcept;
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    // Binds 0.0.0.0:port; throws NetError (e.g. EADDRINUSE) on failure.
    // port 0 picks an ephemeral port, readable via port().
    static TcpListener bind(std::uint16_t port);

    // Accepted connection, or nullopt on timeout.
    std::optional<TcpStream> accept(int timeout_ms);

    std::uint16_t port() const { return port_; }
    bool valid() const { return fd_ >= 0; }
    void close();

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

// host:port split; throws NetError on bad syntax.
std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint);

}  // namespace baro
