#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "decisive/service.hpp"

namespace decisive {

struct HttpOptions {
    std::string host = "127.0.0.1";
    /// 0 binds an ephemeral port.
    int port = 8080;
    /// Served at / when set (the browser client).
    std::optional<std::filesystem::path> static_dir;
};

/// Parses "host:port", ":port" or "port" (as in DECISIVE_ADDR) into `options`.
/// Throws std::invalid_argument on malformed input.
void parse_address(const std::string& text, HttpOptions& options);

/// JSON API over a SessionService:
///   POST /sessions, GET /sessions/{id}/question, POST /sessions/{id}/answer,
///   GET /sessions/{id}/recommendation, GET /healthz.
class HttpServer {
public:
    HttpServer(SessionService& service, HttpOptions options);
    ~HttpServer();

    /// Binds the socket and returns the port actually bound.
    int bind();
    /// Serves until stop(); bind() must have succeeded.
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace decisive
