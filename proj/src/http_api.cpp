#include "decisive/http_api.hpp"

#include <charconv>
#include <stdexcept>

#include "httplib.h"

namespace decisive {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const ServiceError& e) { send_json(res, e.status(), e.to_json()); }

template <class F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            send_json(res, 200, f(req));
        } catch (const ServiceError& e) {
            send_error(res, e);
        } catch (const std::exception& e) {
            send_error(res, ServiceError(500, "internal", e.what()));
        }
    };
}

json body_of(const httplib::Request& req) {
    auto doc = json::parse(req.body, nullptr, false);
    if (doc.is_discarded()) throw ServiceError(400, "invalid_json", "request body is not valid JSON");
    return doc;
}

}  // namespace

void parse_address(const std::string& text, HttpOptions& options) {
    const auto colon = text.rfind(':');
    const std::string host = colon == std::string::npos ? "" : text.substr(0, colon);
    const std::string port = colon == std::string::npos ? text : text.substr(colon + 1);
    int value = 0;
    const auto [end, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
    if (port.empty() || ec != std::errc() || end != port.data() + port.size() || value < 0 || value > 65535)
        throw std::invalid_argument("bad address '" + text + "', expected host:port");
    if (!host.empty()) options.host = host;
    options.port = value;
}

struct HttpServer::Impl {
    Impl(SessionService& s, HttpOptions o) : service(s), options(std::move(o)) {}

    SessionService& service;
    HttpOptions options;
    httplib::Server server;
    int bound_port = -1;
};

HttpServer::HttpServer(SessionService& service, HttpOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
    auto& svr = impl_->server;
    auto& svc = impl_->service;

    svr.Get("/healthz", guarded([&svc](const httplib::Request&) {
                return json{{"status", "ok"}, {"sessions", svc.session_count()}};
            }));
    svr.Post("/sessions", guarded([&svc](const httplib::Request& req) { return svc.create_session(body_of(req)); }));
    svr.Get(R"(/sessions/([^/]+)/question)",
            guarded([&svc](const httplib::Request& req) { return svc.next_question(req.matches[1]); }));
    svr.Post(R"(/sessions/([^/]+)/answer)", guarded([&svc](const httplib::Request& req) {
                 return svc.submit_answer(req.matches[1], body_of(req));
             }));
    svr.Get(R"(/sessions/([^/]+)/recommendation)",
            guarded([&svc](const httplib::Request& req) { return svc.recommendation(req.matches[1]); }));

    if (impl_->options.static_dir && !svr.set_mount_point("/", impl_->options.static_dir->string()))
        throw std::invalid_argument("static directory not found: " + impl_->options.static_dir->string());

    svr.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
        if (!res.body.empty()) return;
        if (res.status == 404)
            send_error(res, ServiceError(404, "not_found", "no route for " + req.method + " " + req.path));
        else if (res.status == 405)
            send_error(res, ServiceError(405, "method_not_allowed", req.method + " not allowed on " + req.path));
    });
}

HttpServer::~HttpServer() = default;

int HttpServer::bind() {
    auto& o = impl_->options;
    if (o.port == 0) {
        impl_->bound_port = impl_->server.bind_to_any_port(o.host);
    } else {
        impl_->bound_port = impl_->server.bind_to_port(o.host, o.port) ? o.port : -1;
    }
    if (impl_->bound_port < 0)
        throw std::runtime_error("cannot bind " + o.host + ":" + std::to_string(o.port));
    return impl_->bound_port;
}

void HttpServer::listen() {
    if (impl_->bound_port < 0) throw std::logic_error("HttpServer::listen before bind");
    impl_->server.listen_after_bind();
}

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace decisive
