#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "crh/run_commands.hpp"
#include "json.hpp"

namespace {

// Shared flag state; each subcommand forwards its name plus these options.
struct GlobalArgs {
    std::string config_path;
    std::string out_path;
    unsigned threads = 1;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

int execute(const std::string& command, const GlobalArgs& args) {
    std::ifstream in(args.config_path);
    if (!in) {
        std::cerr << "error: cannot read config file '" << args.config_path
                  << "'\n";
        return 2;
    }
    std::stringstream buffer;
    buffer << in.rdbuf();

    nlohmann::json config;
    try {
        config = nlohmann::json::parse(buffer.str());
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    crh::RunOptions options;
    options.out_path = args.out_path;
    options.threads = args.threads;
    if (args.seed_set) options.seed = args.seed;
    return crh::run_command(command, config, options, std::cerr);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Boundary-value experiments on convex quadric domains"};
    app.require_subcommand(1);

    GlobalArgs args;
    app.add_option("--config", args.config_path, "Path to the JSON config")
        ->required();
    app.add_option("--out", args.out_path,
                   "Report path (overrides the config key 'out')");
    app.add_option("--threads", args.threads, "Worker thread budget");
    CLI::Option* seed_opt =
        app.add_option("--seed", args.seed, "Seed for randomized corpora");
    app.fallthrough();

    for (const char* name :
         {"decompose", "crh-test", "szego-iterate", "bm-check", "admissibility"}) {
        app.add_subcommand(name)->silent(false);
    }
    app.get_subcommand("decompose")->description("Split a polynomial on the domain boundary");
    app.get_subcommand("crh-test")->description("Classify boundary data by slice extendibility");
    app.get_subcommand("szego-iterate")->description("Alternating projections against the Gram reference");
    app.get_subcommand("bm-check")->description("Compare the two interior reproduction routes");
    app.get_subcommand("admissibility")->description("Per-degree inverse bounds for an ellipsoid spec");

    CLI11_PARSE(app, argc, argv);
    args.seed_set = seed_opt->count() > 0;

    const std::string command = app.get_subcommands().front()->get_name();
    return execute(command, args);
}
