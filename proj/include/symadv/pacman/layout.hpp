#pragma once

#include <algorithm>
#include <array>
#include <cstdlib>
#include <deque>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "symadv/errors.hpp"

namespace symadv::pacman {

enum Dir : int { North = 0, South = 1, East = 2, West = 3 };
inline constexpr int kNumDirs = 4;
/// Only action of an absorbing (won or lost) state.
inline constexpr int kStop = 4;
inline constexpr int kNoDir = -1;
inline constexpr int kUnreachable = std::numeric_limits<int>::max();

inline int reverse_dir(int d) {
    switch (d) {
        case North: return South;
        case South: return North;
        case East: return West;
        case West: return East;
        default: return kNoDir;
    }
}

inline const char* dir_name(int d) {
    static const char* names[] = {"north", "south", "east", "west", "stop"};
    return d >= 0 && d <= kStop ? names[d] : "none";
}

inline int parse_dir(const std::string& s) {
    for (int d = 0; d <= kStop; ++d)
        if (s == dir_name(d)) return d;
    if (s.size() == 1) {
        switch (s[0]) {
            case 'N': case 'n': return North;
            case 'S': case 's': return South;
            case 'E': case 'e': return East;
            case 'W': case 'w': return West;
        }
    }
    throw ValidationError("unknown direction '" + s + "'");
}

/// Layout parse failure at a 1-based line (0 when not tied to a line).
struct LayoutError : ValidationError {
    int line;
    LayoutError(int line_no, const std::string& msg)
        : ValidationError(line_no > 0 ? "layout line " + std::to_string(line_no) + ": " + msg : "layout: " + msg),
          line(line_no) {}
};

/// A walled grid. Cells are indexed row * width + col, row 0 at the top.
struct GridLayout {
    int width = 0;
    int height = 0;
    std::vector<bool> wall;
    int pacman = -1;
    std::vector<int> ghosts;
    std::vector<bool> food;

    int cell(int row, int col) const { return row * width + col; }
    int row(int c) const { return c / width; }
    int col(int c) const { return c % width; }
    int num_cells() const { return width * height; }
    int food_count() const {
        int n = 0;
        for (bool f : food) n += f;
        return n;
    }

    /// Neighbouring cell in direction d, or -1 when it is a wall.
    int neighbor(int c, int d) const {
        int r = row(c), k = col(c);
        switch (d) {
            case North: --r; break;
            case South: ++r; break;
            case East: ++k; break;
            case West: --k; break;
            default: return c;
        }
        if (r < 0 || r >= height || k < 0 || k >= width) return -1;
        const int n = cell(r, k);
        return wall[static_cast<std::size_t>(n)] ? -1 : n;
    }

    int manhattan(int a, int b) const { return std::abs(row(a) - row(b)) + std::abs(col(a) - col(b)); }

    /// Maze distance (BFS through open cells); kUnreachable when disconnected.
    int distance(int a, int b) const { return dist_[static_cast<std::size_t>(a) * static_cast<std::size_t>(num_cells()) + static_cast<std::size_t>(b)]; }

    void compute_distances() {
        const auto n = static_cast<std::size_t>(num_cells());
        dist_.assign(n * n, kUnreachable);
        for (int src = 0; src < num_cells(); ++src) {
            if (wall[static_cast<std::size_t>(src)]) continue;
            auto* row_d = &dist_[static_cast<std::size_t>(src) * n];
            std::deque<int> q{src};
            row_d[src] = 0;
            while (!q.empty()) {
                const int c = q.front();
                q.pop_front();
                for (int d = 0; d < kNumDirs; ++d) {
                    const int nb = neighbor(c, d);
                    if (nb >= 0 && row_d[nb] == kUnreachable) {
                        row_d[nb] = row_d[c] + 1;
                        q.push_back(nb);
                    }
                }
            }
        }
    }

    std::string to_text() const {
        std::string out;
        for (int r = 0; r < height; ++r) {
            for (int k = 0; k < width; ++k) {
                const int c = cell(r, k);
                char ch = ' ';
                if (wall[static_cast<std::size_t>(c)]) ch = '%';
                else if (c == pacman) ch = 'P';
                else if (std::find(ghosts.begin(), ghosts.end(), c) != ghosts.end()) ch = 'G';
                else if (food[static_cast<std::size_t>(c)]) ch = '.';
                out += ch;
            }
            out += '\n';
        }
        return out;
    }

private:
    std::vector<int> dist_;
};

/// `%` wall, `.` food, `P` Pac-Man, `G` ghost, space empty. Blank lines at
/// the ends are ignored; errors carry 1-based line numbers.
inline GridLayout parse_layout(const std::string& text) {
    std::vector<std::string> rows;
    std::vector<int> line_of;
    {
        std::istringstream in(text);
        std::string line;
        int n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            rows.push_back(line);
            line_of.push_back(n);
        }
    }
    while (!rows.empty() && rows.back().empty()) {
        rows.pop_back();
        line_of.pop_back();
    }
    std::size_t first = 0;
    while (first < rows.size() && rows[first].empty()) ++first;
    rows.erase(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(first));
    line_of.erase(line_of.begin(), line_of.begin() + static_cast<std::ptrdiff_t>(first));
    if (rows.empty()) throw LayoutError(0, "empty");

    auto fail = [&](std::size_t r, const std::string& msg) {
        throw LayoutError(line_of[r], msg);
    };

    GridLayout L;
    L.height = static_cast<int>(rows.size());
    L.width = static_cast<int>(rows[0].size());
    if (L.width < 3 || L.height < 3) fail(0, "grid must be at least 3x3");
    L.wall.assign(static_cast<std::size_t>(L.width * L.height), false);
    L.food.assign(static_cast<std::size_t>(L.width * L.height), false);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<int>(rows[r].size()) != L.width)
            fail(r, "ragged row (" + std::to_string(rows[r].size()) + " columns, expected " + std::to_string(L.width) + ")");
        for (int k = 0; k < L.width; ++k) {
            const int c = L.cell(static_cast<int>(r), k);
            const char ch = rows[r][static_cast<std::size_t>(k)];
            switch (ch) {
                case '%': L.wall[static_cast<std::size_t>(c)] = true; break;
                case '.': L.food[static_cast<std::size_t>(c)] = true; break;
                case ' ': break;
                case 'P':
                    if (L.pacman >= 0) fail(r, "more than one P");
                    L.pacman = c;
                    break;
                case 'G': L.ghosts.push_back(c); break;
                default: fail(r, std::string("unknown character '") + ch + "'");
            }
            const bool border = r == 0 || static_cast<int>(r) == L.height - 1 || k == 0 || k == L.width - 1;
            if (border && ch != '%') fail(r, "border must be walled (column " + std::to_string(k + 1) + ")");
        }
    }
    if (L.pacman < 0) throw LayoutError(0, "no P");
    L.compute_distances();
    return L;
}

}  // namespace symadv::pacman
