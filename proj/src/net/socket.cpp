#include "tc/net/socket.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace tc::net {

Socket::~Socket() {
    close();
}

Socket& Socket::operator=(Socket&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
}

void Socket::shutdown() noexcept {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::close() noexcept {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

namespace {

std::string errno_text(const char* what) {
    return std::string(what) + ": " + std::strerror(errno);
}

sockaddr_in resolve(const std::string& host, int port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<uint16_t>(port));
    std::string h = host == "localhost" || host.empty() ? "127.0.0.1" : host;
    if (h == "0.0.0.0") {
        addr.sin_addr.s_addr = htonl(INADDR_ANY);
        return addr;
    }
    if (inet_pton(AF_INET, h.c_str(), &addr.sin_addr) == 1) return addr;

    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(h.c_str(), nullptr, &hints, &res) != 0 || !res) throw NetError("cannot resolve host " + host);
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    freeaddrinfo(res);
    return addr;
}

}  // namespace

Socket connect_tcp(const std::string& host, int port, std::chrono::milliseconds timeout) {
    auto addr = resolve(host, port);
    Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!s.valid()) throw NetError(errno_text("socket"));

    int flags = fcntl(s.fd(), F_GETFL, 0);
    fcntl(s.fd(), F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    if (rc != 0 && errno != EINPROGRESS) throw NetError(errno_text("connect"));
    if (rc != 0) {
        pollfd p{s.fd(), POLLOUT, 0};
        rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
        if (rc == 0) throw NetError("connect: timed out");
        if (rc < 0) throw NetError(errno_text("poll"));
        int err = 0;
        socklen_t len = sizeof err;
        getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
        if (err != 0) {
            errno = err;
            throw NetError(errno_text("connect"));
        }
    }
    fcntl(s.fd(), F_SETFL, flags);
    int one = 1;
    setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return s;
}

void write_all(const Socket& s, std::string_view data) {
    while (!data.empty()) {
        auto n = ::send(s.fd(), data.data(), data.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw NetError(errno_text("send"));
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

LineReader::Status LineReader::read_line(std::string& line, std::chrono::milliseconds timeout) {
    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + timeout;
    while (true) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            line = buffer_.substr(0, nl);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            buffer_.erase(0, nl + 1);
            return Status::Line;
        }
        int wait_ms = -1;
        if (timeout.count() >= 0) {
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
            if (left <= 0) return Status::Timeout;
            wait_ms = static_cast<int>(left);
        }
        pollfd p{socket_.fd(), POLLIN, 0};
        int rc = ::poll(&p, 1, wait_ms);
        if (rc == 0) return Status::Timeout;
        if (rc < 0) {
            if (errno == EINTR) continue;
            return Status::Closed;
        }
        char buf[4096];
        auto n = ::recv(socket_.fd(), buf, sizeof buf, 0);
        if (n <= 0) {
            if (n < 0 && errno == EINTR) continue;
            return Status::Closed;
        }
        buffer_.append(buf, static_cast<std::size_t>(n));
    }
}

TcpListener::TcpListener(const std::string& host, int port) {
    auto addr = resolve(host, port);
    socket_ = Socket(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!socket_.valid()) throw NetError(errno_text("socket"));
    int one = 1;
    setsockopt(socket_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(socket_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
        throw NetError(errno_text("bind"));
    if (::listen(socket_.fd(), 16) != 0) throw NetError(errno_text("listen"));
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    getsockname(socket_.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
}

Socket TcpListener::accept(std::chrono::milliseconds timeout) {
    pollfd p{socket_.fd(), POLLIN, 0};
    int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc <= 0 || !(p.revents & POLLIN)) return Socket();
    Socket client(::accept4(socket_.fd(), nullptr, nullptr, SOCK_CLOEXEC));
    if (client.valid()) {
        int one = 1;
        setsockopt(client.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    }
    return client;
}

int pick_free_port() {
    TcpListener probe("127.0.0.1", 0);
    return probe.port();
}

}  // namespace tc::net
