// Turn-based session server for human and agent play.
#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "symadv/http.hpp"

namespace {
httplib::Server* g_server = nullptr;
symadv::SessionManager* g_manager = nullptr;

void on_signal(int) {
    if (g_manager) g_manager->shutdown();
    if (g_server) g_server->stop();
}
}  // namespace

int main(int argc, char** argv) {
    std::string addr = "127.0.0.1";
    int port = 8080;
    std::uint64_t seed = 1;
    std::string layouts = "layouts";

    CLI::App app{"Pac-Man play server"};
    app.add_option("--addr", addr, "listen address");
    app.add_option("--port", port, "listen port");
    app.add_option("--seed", seed, "master seed for session streams");
    app.add_option("--layouts", layouts, "directory served as layout_file names");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    symadv::SessionManager mgr(seed, layouts);
    httplib::Server srv;
    symadv::register_routes(srv, mgr);
    g_server = &srv;
    g_manager = &mgr;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "listening on " << addr << ':' << port << '\n';
    if (!srv.listen(addr, port)) {
        std::cerr << "cannot listen on " << addr << ':' << port << '\n';
        return 1;
    }
    return 0;
}
