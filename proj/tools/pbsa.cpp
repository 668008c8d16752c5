// Command-line front end: pretrain, mine, retrain, run, evaluate, visualize, synth.
#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "pbsa/errors.hpp"
#include "pbsa/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitPhase = 3;

std::vector<std::uint64_t> parse_ids(const std::string& text) {
    std::vector<std::uint64_t> ids;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            ids.push_back(std::stoull(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw pbsa::InvalidConfig("--ids expects comma-separated sample ids, got '" + item + "'");
        }
    }
    return ids;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Perturbation-based self-supervised attention for text classification"};
    app.require_subcommand(1);

    pbsa::CommandOptions opts;
    std::uint64_t seed = 0;
    std::string out, run_dir, ids;
    int iteration = 0;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* c = cmd->add_option("--config", opts.config_path, "Run config file (key=value)");
        if (needs_config) c->required();
        cmd->add_option("--seed", seed, "Override the config's global seed");
        cmd->add_option("--out", out, "Runs root directory");
    };

    auto* synth = app.add_subcommand("synth", "Write the synthetic corpus as TSV plus causal-position sidecar");
    add_common(synth, true);
    synth->get_option("--out")->description("Output directory (default: synthetic)");

    auto* pretrain = app.add_subcommand("pretrain", "Train the baseline classifier");
    add_common(pretrain, true);

    auto* mine = app.add_subcommand("mine", "Mine noise scales on the training split and write supervision");
    add_common(mine, true);
    mine->add_option("--workers", opts.workers, "Mining threads")->check(CLI::PositiveNumber);
    mine->add_option("--iteration", iteration, "Outer iteration (default: next unmined)");

    auto* retrain = app.add_subcommand("retrain", "Retrain with attention supervision");
    add_common(retrain, true);
    retrain->add_option("--iteration", iteration, "Outer iteration (default: next untrained)");

    auto* run = app.add_subcommand("run", "Pretrain, then mine and retrain for T iterations, then evaluate");
    add_common(run, true);
    run->add_option("--seeds", opts.seeds, "Repeat over this many consecutive seeds")->check(CLI::PositiveNumber);
    run->add_option("--workers", opts.workers, "Mining threads")->check(CLI::PositiveNumber);

    auto* evaluate = app.add_subcommand("evaluate", "Test metrics of the baseline and the best iteration");
    add_common(evaluate, false);
    evaluate->add_option("--run", run_dir, "Run directory (instead of --config/--seed)");
    evaluate->add_option("--workers", opts.workers, "Mining threads")->check(CLI::PositiveNumber);

    auto* visualize = app.add_subcommand("visualize", "Render attention heatmaps as HTML");
    add_common(visualize, false);
    visualize->get_option("--out")->description("HTML file (default: <run>/heatmap.html)");
    visualize->add_option("--run", run_dir, "Run directory (instead of --config/--seed)");
    visualize->add_option("--ids", ids, "Comma-separated sample ids");
    visualize->add_option("--iteration", iteration, "Iteration to show (default: best by validation)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        for (auto* cmd : {synth, pretrain, mine, retrain, run, evaluate, visualize}) {
            if (!cmd->parsed()) continue;
            if (cmd->count("--seed")) opts.seed = seed;
            if (!out.empty()) opts.out = out;
            if (!run_dir.empty()) opts.run_dir = run_dir;
            if (cmd->get_option_no_throw("--iteration") && cmd->count("--iteration")) opts.iteration = iteration;
            if ((cmd == evaluate || cmd == visualize) && !opts.run_dir && opts.config_path.empty()) {
                throw pbsa::InvalidConfig("either --run or --config is required");
            }
            opts.ids = parse_ids(ids);
        }
        if (synth->parsed()) pbsa::cmd_synth(opts, std::cout, std::cerr);
        if (pretrain->parsed()) pbsa::cmd_pretrain(opts, std::cout, std::cerr);
        if (mine->parsed()) pbsa::cmd_mine(opts, std::cout, std::cerr);
        if (retrain->parsed()) pbsa::cmd_retrain(opts, std::cout, std::cerr);
        if (run->parsed()) pbsa::cmd_run(opts, std::cout, std::cerr);
        if (evaluate->parsed()) pbsa::cmd_evaluate(opts, std::cout, std::cerr);
        if (visualize->parsed()) pbsa::cmd_visualize(opts, std::cout, std::cerr);
    } catch (const pbsa::InvalidConfig& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const pbsa::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitPhase;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitPhase;
    }
    return 0;
}
