#pragma once

#include <httplib.h>

#include <string>
#include <thread>

namespace tc::net {

/// SO_REUSEADDR only; httplib's default also sets SO_REUSEPORT, which lets
/// two listeners silently share a port.
void exclusive_socket_options(socket_t sock);

/// An httplib server running on its own thread.
class HttpService {
public:
    HttpService();
    ~HttpService();

    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    httplib::Server& server() { return server_; }

    /// Port 0 picks an ephemeral port. Returns false if the bind fails.
    bool start(const std::string& host, int port);
    void stop();

    int port() const { return port_; }
    bool running() const { return thread_.joinable(); }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace tc::net
