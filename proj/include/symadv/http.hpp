#pragma once

#include <chrono>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "symadv/server.hpp"

namespace symadv {

namespace detail {

inline void send_json(httplib::Response& res, const nlohmann::json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
}

template <class F>
void guarded(httplib::Response& res, F&& f) {
    try {
        send_json(res, f());
    } catch (const SessionError& e) {
        send_json(res, e.payload(), e.status);
    } catch (const nlohmann::json::exception& e) {
        send_json(res, SessionError("bad_request", 400, e.what()).payload(), 400);
    } catch (const std::exception& e) {
        send_json(res, SessionError("internal", 500, e.what()).payload(), 500);
    }
}

inline nlohmann::json body_json(const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    try {
        return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
        throw SessionError("bad_request", 400, std::string("malformed JSON: ") + e.what());
    }
}

}  // namespace detail

/// JSON endpoints under /api plus a server-sent-events state stream.
inline void register_routes(httplib::Server& srv, SessionManager& mgr) {
    using detail::guarded;
    srv.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
        detail::send_json(res, {{"ok", true}});
    });
    srv.Post("/api/sessions", [&mgr](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { return mgr.create_session(detail::body_json(req)); });
    });
    srv.Get("/api/sessions/:id", [&mgr](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { return mgr.get_state(req.path_params.at("id")); });
    });
    srv.Post("/api/sessions/:id/move", [&mgr](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto body = detail::body_json(req);
            if (!body.contains("direction") || !body.at("direction").is_string())
                throw SessionError("bad_request", 400, "field 'direction' required");
            return mgr.post_move(req.path_params.at("id"), body.at("direction").get<std::string>());
        });
    });
    srv.Post("/api/sessions/:id/agent-step", [&mgr](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { return mgr.agent_step(req.path_params.at("id")); });
    });
    srv.Get("/api/sessions/:id/overlay", [&mgr](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { return mgr.overlay(req.path_params.at("id")); });
    });
    srv.Get("/api/sessions/:id/stream", [&mgr](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.path_params.at("id");
        nlohmann::json first;
        try {
            first = mgr.get_state(id);
        } catch (const SessionError& e) {
            detail::send_json(res, e.payload(), e.status);
            return;
        }
        res.set_header("Cache-Control", "no-cache");
        auto last = std::make_shared<std::uint64_t>(first.at("version").get<std::uint64_t>());
        auto pending = std::make_shared<nlohmann::json>(std::move(first));
        res.set_chunked_content_provider("text/event-stream", [&mgr, id, last, pending](std::size_t, httplib::DataSink& sink) {
            auto emit = [&](const nlohmann::json& j) {
                const std::string msg = "event: state\ndata: " + j.dump() + "\n\n";
                return sink.write(msg.data(), msg.size());
            };
            if (!pending->is_null()) {
                if (!emit(*pending)) return false;
                const bool over = pending->contains("result");
                *pending = nullptr;
                if (over) {
                    sink.done();
                    return true;
                }
            }
            if (mgr.closing()) {
                sink.done();
                return true;
            }
            auto next = mgr.wait_state(id, *last, std::chrono::milliseconds(1000));
            if (!next) {
                const std::string ping = ": ping\n\n";
                return sink.write(ping.data(), ping.size());
            }
            *last = next->at("version").get<std::uint64_t>();
            *pending = std::move(*next);
            return true;
        });
    });
}

}  // namespace symadv
