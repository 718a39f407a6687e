#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "support.hpp"
#include "symadv/http.hpp"
#include "symadv/server.hpp"

using namespace symadv;
using nlohmann::json;

namespace {

// Collects every SessionError field that the tests look at.
template <class F>
SessionError error_of(F&& f) {
    try {
        f();
    } catch (const SessionError& e) {
        return e;
    }
    ADD_FAILURE() << "no SessionError";
    return SessionError("none", 0, "");
}

json human_tiny(SessionManager& m) { return m.create_session({{"layout", testsupport::kTiny}, {"seed", 3}}); }

}  // namespace

TEST(Session, CreateAndGet) {
    SessionManager m(1, SYMADV_LAYOUT_DIR);
    const auto s = human_tiny(m);
    EXPECT_EQ(s.at("id"), "s1");
    EXPECT_EQ(s.at("version"), 0);
    EXPECT_EQ(s.at("mode"), "human");
    EXPECT_EQ(s.at("state").at("food").size(), 7u);
    EXPECT_TRUE(s.contains("layout"));
    EXPECT_EQ(s.at("agent").at("variant"), "mcts+both");
    const auto g = m.get_state("s1");
    EXPECT_EQ(g.at("state"), s.at("state"));
    EXPECT_TRUE(g.at("log").empty());
    EXPECT_EQ(m.create_session({{"layout_file", "tiny.lay"}}).at("id"), "s2");
}

TEST(Session, HumanGameToWin) {
    SessionManager m;
    human_tiny(m);
    json r;
    for (const char* d : {"east", "east", "south", "south", "west", "west", "north"}) r = m.post_move("s1", d);
    EXPECT_EQ(r.at("version"), 7);
    EXPECT_EQ(r.at("delta"), 9 + 500);
    EXPECT_EQ(r.at("result").at("outcome"), "win");
    EXPECT_EQ(r.at("result").at("score"), 7 * 9 + 500);
    EXPECT_EQ(r.at("result").at("food_eaten"), 7);
    EXPECT_TRUE(r.at("legal").empty());
    const auto e = error_of([&] { m.post_move("s1", "north"); });
    EXPECT_EQ(e.code, "game_over");
    EXPECT_EQ(e.status, 409);
    EXPECT_EQ(m.get_state("s1").at("log").size(), 7u);
}

TEST(Session, Errors) {
    SessionManager m(1, SYMADV_LAYOUT_DIR);
    human_tiny(m);
    auto e = error_of([&] { m.post_move("s1", "north"); });
    EXPECT_EQ(e.code, "illegal_move");
    EXPECT_EQ(e.status, 400);
    EXPECT_EQ(e.payload().at("error").at("legal"), (json{"south", "east"}));
    EXPECT_EQ(error_of([&] { m.post_move("s1", "up"); }).code, "bad_request");
    EXPECT_EQ(error_of([&] { m.agent_step("s1"); }).code, "wrong_mode");
    EXPECT_EQ(error_of([&] { m.get_state("s9"); }).status, 404);
    EXPECT_EQ(error_of([&] { m.create_session(json::object()); }).code, "bad_request");
    EXPECT_EQ(error_of([&] { m.create_session({{"layout", 5}}); }).code, "bad_request");
    EXPECT_EQ(error_of([&] { m.create_session({{"layout", testsupport::kTiny}, {"mode", "watch"}}); }).code, "bad_request");
    EXPECT_EQ(error_of([&] { m.create_session({{"layout_file", "../x.lay"}}); }).code, "bad_request");
    EXPECT_EQ(error_of([&] { m.create_session({{"layout_file", "nope.lay"}}); }).status, 404);
    e = error_of([&] { m.create_session({{"layout", "%%%%\n%PX%\n%%%%\n"}}); });
    EXPECT_EQ(e.code, "layout_error");
    EXPECT_EQ(e.detail.at("line"), 2);
    // the version did not move on any failed request
    EXPECT_EQ(m.get_state("s1").at("version"), 0);

    auto a = m.create_session({{"layout", testsupport::kTiny}, {"mode", "agent"}});
    EXPECT_EQ(error_of([&] { m.post_move(a.at("id"), "east"); }).code, "wrong_mode");
}

TEST(Session, AgentStepAndOverlay) {
    SessionManager m;
    const auto s = m.create_session({{"layout", testsupport::kOpen3},
                                     {"ghosts", "random"},
                                     {"mode", "step"},
                                     {"seed", 4},
                                     {"agent", {{"horizon", 3}, {"iterations", 30}, {"samples", 2}, {"safe_depth", 2}}}});
    const std::string id = s.at("id");
    const auto o = m.overlay(id);
    EXPECT_EQ(o.at("overlay"), (json{"south", "east"}));
    EXPECT_FALSE(o.at("fallback"));
    const auto r = m.agent_step(id);
    EXPECT_EQ(r.at("version"), 1);
    EXPECT_EQ(r.at("root_visits"), 30);
    EXPECT_EQ(r.at("overlay"), o.at("overlay"));
    const std::string act = r.at("action");
    EXPECT_TRUE(act == "south" || act == "east");
    EXPECT_EQ(m.get_state(id).at("log")[0].at("by"), "agent");
    // step mode also takes human moves
    const auto legal = m.get_state(id).at("legal");
    if (!legal.empty()) {
        EXPECT_EQ(m.post_move(id, legal[0]).at("version"), 2);
    }

    SessionManager m2;
    m2.create_session({{"layout", testsupport::kOpen3},
                       {"ghosts", "random"},
                       {"mode", "step"},
                       {"seed", 4},
                       {"agent", {{"horizon", 3}, {"iterations", 30}, {"samples", 2}, {"safe_depth", 2}}}});
    EXPECT_EQ(m2.agent_step("s1").at("action"), r.at("action"));
}

TEST(Session, WaitState) {
    SessionManager m;
    human_tiny(m);
    EXPECT_FALSE(m.wait_state("s1", 0, std::chrono::milliseconds(10)));
    std::thread t([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        m.post_move("s1", "east");
    });
    const auto w = m.wait_state("s1", 0, std::chrono::milliseconds(5000));
    t.join();
    ASSERT_TRUE(w);
    EXPECT_EQ(w->at("version"), 1);
    m.shutdown();
    EXPECT_FALSE(m.wait_state("s1", 1, std::chrono::milliseconds(5000)));
}

class Http : public ::testing::Test {
protected:
    SessionManager mgr{1, SYMADV_LAYOUT_DIR};
    httplib::Server srv;
    std::thread th;
    int port = 0;

    void SetUp() override {
        register_routes(srv, mgr);
        port = srv.bind_to_any_port("127.0.0.1");
        ASSERT_GT(port, 0);
        th = std::thread([this] { srv.listen_after_bind(); });
        srv.wait_until_ready();
    }
    void TearDown() override {
        mgr.shutdown();
        srv.stop();
        if (th.joinable()) th.join();
    }
    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(10, 0);
        return c;
    }
};

TEST_F(Http, Routes) {
    auto c = client();
    auto r = c.Get("/api/health");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    EXPECT_EQ(json::parse(r->body).at("ok"), true);

    r = c.Post("/api/sessions", json{{"layout", testsupport::kTiny}}.dump(), "application/json");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    const std::string id = json::parse(r->body).at("id");

    r = c.Post("/api/sessions/" + id + "/move", R"({"direction":"east"})", "application/json");
    EXPECT_EQ(r->status, 200);
    EXPECT_EQ(json::parse(r->body).at("delta"), 9);
    r = c.Get("/api/sessions/" + id);
    EXPECT_EQ(json::parse(r->body).at("version"), 1);

    r = c.Post("/api/sessions/" + id + "/move", R"({"direction":"north"})", "application/json");
    EXPECT_EQ(r->status, 400);
    EXPECT_EQ(json::parse(r->body).at("error").at("code"), "illegal_move");
    r = c.Post("/api/sessions/" + id + "/move", "{", "application/json");
    EXPECT_EQ(r->status, 400);
    r = c.Post("/api/sessions/" + id + "/move", "{}", "application/json");
    EXPECT_EQ(r->status, 400);
    r = c.Post("/api/sessions/" + id + "/agent-step", "", "application/json");
    EXPECT_EQ(r->status, 409);
    r = c.Get("/api/sessions/zz");
    EXPECT_EQ(r->status, 404);
    r = c.Get("/api/sessions/zz/stream");
    EXPECT_EQ(r->status, 404);
    r = c.Get("/api/sessions/" + id + "/overlay");
    EXPECT_EQ(r->status, 200);
    EXPECT_FALSE(json::parse(r->body).at("overlay").empty());
    r = c.Post("/api/sessions", json{{"layout", "%%%\n%Q%\n%%%\n"}}.dump(), "application/json");
    EXPECT_EQ(r->status, 400);
    EXPECT_EQ(json::parse(r->body).at("error").at("line"), 2);
}

TEST_F(Http, StateStream) {
    auto c = client();
    auto r = c.Post("/api/sessions", json{{"layout", testsupport::kTiny}}.dump(), "application/json");
    const std::string id = json::parse(r->body).at("id");

    std::vector<json> events;
    std::string buf;
    std::atomic<bool> moved{false};
    std::thread mover;
    auto res = c.Get("/api/sessions/" + id + "/stream", [&](const char* data, std::size_t n) {
        buf.append(data, n);
        std::size_t end;
        while ((end = buf.find("\n\n")) != std::string::npos) {
            const std::string msg = buf.substr(0, end);
            buf.erase(0, end + 2);
            const auto at = msg.find("data: ");
            if (at != std::string::npos) events.push_back(json::parse(msg.substr(at + 6)));
        }
        if (!events.empty() && !moved.exchange(true)) {
            mover = std::thread([this, id] {
                auto c2 = client();
                c2.Post("/api/sessions/" + id + "/move", R"({"direction":"east"})", "application/json");
            });
        }
        return events.size() < 2;
    });
    if (mover.joinable()) mover.join();
    ASSERT_EQ(events.size(), 2u);
    EXPECT_EQ(events[0].at("version"), 0);
    EXPECT_EQ(events[1].at("version"), 1);
    EXPECT_EQ(events[1].at("state").at("score"), 9);
}
