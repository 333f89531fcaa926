#pragma once

#include <chrono>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <optional>
#include <string>

namespace tc::net {

/// Owning file descriptor for a TCP socket.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    ~Socket();

    Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    int fd() const noexcept { return fd_; }
    bool valid() const noexcept { return fd_ >= 0; }

    /// Wakes any thread blocked reading this socket.
    void shutdown() noexcept;
    void close() noexcept;

private:
    int fd_ = -1;
};

struct NetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Blocking connect bounded by `timeout`. Throws NetError.
Socket connect_tcp(const std::string& host, int port, std::chrono::milliseconds timeout);

/// Writes everything or throws NetError.
void write_all(const Socket& s, std::string_view data);

/// Buffered LF-framed reader over a socket.
class LineReader {
public:
    explicit LineReader(const Socket& s) : socket_(s) {}

    enum class Status { Line, Timeout, Closed };

    /// Reads one line without its terminator ("\n" or "\r\n"). A negative
    /// timeout waits indefinitely.
    Status read_line(std::string& line, std::chrono::milliseconds timeout = std::chrono::milliseconds(-1));

private:
    const Socket& socket_;
    std::string buffer_;
};

/// Listening TCP socket; port 0 binds an ephemeral port.
class TcpListener {
public:
    TcpListener(const std::string& host, int port);

    int port() const noexcept { return port_; }

    /// Waits up to `timeout` for a client; returns an invalid socket on
    /// timeout or after shutdown().
    Socket accept(std::chrono::milliseconds timeout);
    void shutdown() noexcept { socket_.shutdown(); }

private:
    Socket socket_;
    int port_ = 0;
};

/// Returns a currently free local port (bind to 0, read, close).
int pick_free_port();

}  // namespace tc::net
