#pragma once

#include <string>

#include <json.hpp>

#include "symadv/pacman/game.hpp"

namespace symadv::pacman {

inline nlohmann::json cell_json(const GridLayout& L, int c) { return {{"row", L.row(c)}, {"col", L.col(c)}}; }

inline nlohmann::json state_json(const GridLayout& L, const GameState& s) {
    nlohmann::json ghosts = nlohmann::json::array();
    for (const auto& g : s.ghosts) {
        auto j = cell_json(L, g.cell);
        j["dir"] = dir_name(g.last_dir);
        ghosts.push_back(std::move(j));
    }
    nlohmann::json food = nlohmann::json::array();
    for (int c = 0; c < L.num_cells(); ++c)
        if (s.food[static_cast<std::size_t>(c)]) food.push_back({L.row(c), L.col(c)});
    return {{"pacman", cell_json(L, s.pacman)}, {"ghosts", std::move(ghosts)}, {"food", std::move(food)},
            {"score", s.score}, {"step", s.step}, {"status", status_name(s.status)}};
}

inline Status parse_status(const std::string& s) {
    for (Status x : {Status::ongoing, Status::won, Status::lost, Status::draw})
        if (s == status_name(x)) return x;
    throw ValidationError("unknown status '" + s + "'");
}

inline GameState state_from_json(const GridLayout& L, const nlohmann::json& j) {
    auto cell = [&](const nlohmann::json& c) {
        const int r = c.at("row").get<int>(), k = c.at("col").get<int>();
        if (r < 0 || r >= L.height || k < 0 || k >= L.width) throw ValidationError("cell out of the grid");
        return L.cell(r, k);
    };
    GameState s;
    s.pacman = cell(j.at("pacman"));
    for (const auto& g : j.at("ghosts")) {
        const auto d = g.at("dir").get<std::string>();
        s.ghosts.push_back({cell(g), d == "none" ? kNoDir : parse_dir(d)});
    }
    s.food.assign(static_cast<std::size_t>(L.num_cells()), false);
    for (const auto& f : j.at("food")) s.food[static_cast<std::size_t>(L.cell(f.at(0).get<int>(), f.at(1).get<int>()))] = true;
    s.score = j.at("score").get<int>();
    s.step = j.at("step").get<int>();
    s.status = parse_status(j.at("status").get<std::string>());
    return s;
}

inline nlohmann::json layout_json(const GridLayout& L) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < L.height; ++r) {
        std::string line;
        for (int k = 0; k < L.width; ++k) line += L.wall[static_cast<std::size_t>(L.cell(r, k))] ? '%' : ' ';
        rows.push_back(line);
    }
    return {{"width", L.width}, {"height", L.height}, {"walls", std::move(rows)}, {"food_total", L.food_count()}};
}

}  // namespace symadv::pacman
