#include "ccest/server.hpp"

#include <httplib.h>

#include <atomic>

namespace ccest {

using json = nlohmann::json;

int http_status(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NotFound: return 404;
        case ErrorKind::Conflict:
        case ErrorKind::State: return 409;
        default: return 400;
    }
}

struct SessionServer::Impl {
    SessionManager& manager;
    ServerOptions options;
    httplib::Server http;
    std::atomic<bool> bound{false};

    Impl(SessionManager& m, ServerOptions o) : manager(m), options(std::move(o)) {}

    static void send(httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    template <typename F>
    static auto guarded(F f) {
        return [f](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (const SessionConflict& e) {
                json body = e.payload;
                body["error"] = {{"kind", "conflict"}, {"message", e.what()}};
                send(res, 409, body);
            } catch (const Error& e) {
                send(res, http_status(e.kind()),
                     {{"error", {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}}}});
            } catch (const json::exception& e) {
                send(res, 400, {{"error", {{"kind", "validation"}, {"message", e.what()}}}});
            } catch (const std::exception& e) {
                send(res, 500, {{"error", {{"kind", "internal"}, {"message", e.what()}}}});
            }
        };
    }

    static json body_json(const httplib::Request& req) {
        if (req.body.empty()) return json::object();
        try {
            return json::parse(req.body);
        } catch (const json::parse_error& e) {
            throw ValidationError(std::string("request body is not JSON: ") + e.what());
        }
    }

    void routes() {
        http.Get("/api/health", guarded([](const httplib::Request&, httplib::Response& res) {
                     send(res, 200, {{"ok", true}});
                 }));
        http.Get("/datasets", guarded([this](const httplib::Request&, httplib::Response& res) {
                     send(res, 200, manager.list_datasets());
                 }));
        http.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
                     send(res, 200, manager.list());
                 }));
        http.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                      send(res, 200, manager.create(body_json(req)));
                  }));
        http.Get(R"(/sessions/([0-9a-zA-Z_-]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                     send(res, 200, manager.view(req.matches[1]));
                 }));
        http.Get(R"(/sessions/([0-9a-zA-Z_-]+)/next)",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                     send(res, 200, manager.next(req.matches[1]));
                 }));
        http.Post(R"(/sessions/([0-9a-zA-Z_-]+)/answers)",
                  guarded([this](const httplib::Request& req, httplib::Response& res) {
                      json body = body_json(req);
                      if (!body.contains("query_id") || !body["query_id"].is_string())
                          throw ValidationError("field 'query_id' (string) is required");
                      if (!body.contains("answer") || !body["answer"].is_string())
                          throw ValidationError("field 'answer' must be 'same' or 'different'");
                      send(res, 200, manager.submit(req.matches[1], body["query_id"], body["answer"]));
                  }));
        http.Get(R"(/sessions/([0-9a-zA-Z_-]+)/export)",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                     send(res, 200, manager.export_record(req.matches[1]));
                 }));
        http.Post(R"(/sessions/([0-9a-zA-Z_-]+)/abandon)",
                  guarded([this](const httplib::Request& req, httplib::Response& res) {
                      send(res, 200, manager.abandon(req.matches[1]));
                  }));
        if (!options.images_root.empty()) http.set_mount_point("/images", options.images_root.string());
        if (!options.ui_dir.empty()) http.set_mount_point("/", options.ui_dir.string());
    }
};

SessionServer::SessionServer(SessionManager& manager, ServerOptions options)
    : impl_(std::make_unique<Impl>(manager, std::move(options))) {
    impl_->routes();
}

SessionServer::~SessionServer() { stop(); }

bool SessionServer::listen() { return impl_->http.listen(impl_->options.host, impl_->options.port); }

int SessionServer::bind_any_port() {
    int port = impl_->http.bind_to_any_port(impl_->options.host);
    impl_->bound = port > 0;
    return port > 0 ? port : -1;
}

bool SessionServer::listen_after_bind() { return impl_->http.listen_after_bind(); }

void SessionServer::stop() {
    if (impl_) impl_->http.stop();
}

bool SessionServer::running() const { return impl_->http.is_running(); }

}  // namespace ccest
