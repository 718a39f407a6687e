// Batch Pac-Man experiments: plays games with one agent variant and writes
// per-game CSV rows and a JSON summary.
#include <iostream>

#include <CLI11.hpp>

#include "symadv/harness.hpp"

int main(int argc, char** argv) {
    symadv::ExperimentConfig cfg;
    std::string variant = "mcts";
    bool verbose = false;

    CLI::App app{"Pac-Man experiment harness"};
    app.add_option("--layout", cfg.layout_path, "layout file")->required();
    app.add_option("--ghosts", cfg.ghosts, "ghost roster, e.g. random,directional or 2xrandom");
    app.add_option("--variant", variant, "mcts | mcts+selection | mcts+simulation | mcts+both");
    app.add_option("--games", cfg.games, "number of games");
    app.add_option("--horizon", cfg.horizon, "search horizon H");
    app.add_option("--iterations", cfg.iterations, "MCTS iterations per move");
    app.add_option("--iteration-multiplier", cfg.iteration_multiplier, "scales iterations");
    app.add_option("--samples", cfg.samples, "rollouts per simulation");
    app.add_option("--safe-depth", cfg.safe_depth, "QBF depth of the selection advice");
    app.add_option("--uct-c", cfg.uct_c, "UCT exploration constant");
    app.add_option("--draw-limit", cfg.draw_limit, "steps before a draw");
    app.add_option("--seed", cfg.seed, "master seed");
    app.add_option("--terminal-weight", cfg.terminal_weight, "scale of the cut-off heuristic");
    app.add_option("--model-cap", cfg.model_cap, "max cached safe paths per move");
    app.add_option("--jobs", cfg.jobs, "games played in parallel");
    app.add_option("--out", cfg.out, "report prefix (<out>.csv, <out>.json)");
    app.add_option("--trace", cfg.trace, "JSON-lines search trace");
    app.add_flag("-v,--verbose", verbose, "print one line per game");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    symadv::ExperimentReport rep;
    try {
        cfg.variant = symadv::pacman::parse_variant(variant);
        cfg.validate();
        symadv::load_game(cfg);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    try {
        rep = symadv::run_experiment(cfg, [&](const symadv::GameResult& g) {
            if (!verbose) return;
            std::cerr << "game " << g.index << ": " << symadv::outcome_name(g.outcome) << " food " << g.food_eaten
                      << " score " << g.score << " steps " << g.steps << '\n';
            for (const auto& l : g.log) std::cerr << "  " << l << '\n';
        });
        if (!cfg.out.empty()) symadv::emit_report(rep, cfg.out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    const auto& a = rep.aggregates;
    std::cout << symadv::pacman::variant_name(cfg.variant) << ": games " << a.games << " win " << 100.0 * a.win_rate
              << "% loss " << 100.0 * a.loss_rate << "% draw " << 100.0 * a.draw_rate << "% food " << a.mean_food
              << " score " << a.mean_score << " ms/move " << a.mean_move_ms << '\n';
    return 0;
}
