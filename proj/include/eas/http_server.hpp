#pragma once

#include "eas/service.hpp"

#include <functional>
#include <memory>
#include <string>

namespace httplib {
class Server;
}

namespace eas::api {

/// Maps the service onto HTTP routes under /api/. Bearer tokens travel in
/// the Authorization header; errors come back as
/// {"error": code, "message": text}.
class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds to host:port (port 0 picks a free one) and returns the bound
    /// port, or -1.
    int bind(const std::string& host, int port);
    /// Blocks serving requests until stop().
    bool listen_after_bind();
    void stop();
    void wait_until_ready() const;
    /// Called with "METHOD path status" after every request.
    void set_access_log(std::function<void(const std::string&)> sink);

private:
    Service& service_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace eas::api
