#pragma once

#include "ccest/session.hpp"

#include <filesystem>
#include <memory>
#include <string>

namespace ccest {

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path ui_dir;       // served at / when set
    std::filesystem::path images_root;  // served at /images when set
};

// HTTP status for an error kind: 400, 404 or 409.
int http_status(ErrorKind kind);

/// JSON HTTP front end over a SessionManager.
class SessionServer {
public:
    SessionServer(SessionManager& manager, ServerOptions options);
    ~SessionServer();

    // Binds and serves until stop(). Returns false when the port cannot be bound.
    bool listen();
    // Binds to an OS-chosen port; returns it (or -1).
    int bind_any_port();
    bool listen_after_bind();
    void stop();
    bool running() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace ccest
