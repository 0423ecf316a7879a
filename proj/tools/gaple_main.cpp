// gaple: grid-house navigation simulator and policy learning stack.
//
// Subcommands: gen-houses, train-perception, train-policy, eval, analyze,
// render. Every command reads a sectioned key=value config (all keys have
// defaults), honors --seed and --out-dir, and exits nonzero with a diagnostic
// on any error.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gaple/commands.hpp"
#include "gaple/errors.hpp"

namespace {

struct CliArgs {
    std::string config_path;
    gaple::CommandOptions options;
    long seed = -1;
    int workers = -1;
};

void add_common(CLI::App* cmd, CliArgs& args, bool with_setting = true) {
    cmd->add_option("--config", args.config_path, "run config file (defaults apply if omitted)");
    cmd->add_option("--seed", args.seed, "seed override");
    cmd->add_option("--out-dir", args.options.out_dir, "output directory");
    if (with_setting) {
        cmd->add_option("--setting", args.options.setting,
                        "generalization preset: objects | environments")
            ->check(CLI::IsMember({"objects", "environments"}));
    }
}

gaple::RunConfig resolve_config(CliArgs& args) {
    gaple::RunConfig config =
        args.config_path.empty() ? gaple::RunConfig{} : gaple::load_config(args.config_path);
    if (args.seed >= 0) args.options.seed = static_cast<uint64_t>(args.seed);
    if (args.workers >= 1) args.options.workers = args.workers;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"grid-house navigation: simulation, perception, policy training, evaluation"};
    app.require_subcommand(1);

    CliArgs args;

    CLI::App* gen = app.add_subcommand("gen-houses", "generate house layout files");
    add_common(gen, args);

    CLI::App* percep = app.add_subcommand("train-perception",
                                          "train the semantic+depth predictor");
    add_common(percep, args);

    CLI::App* policy = app.add_subcommand("train-policy", "train the navigation policy");
    add_common(policy, args);
    policy->add_option("--workers", args.workers, "worker threads (overrides GAPLE_THREADS)");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a policy checkpoint");
    add_common(eval, args);
    eval->add_option("--policy", args.options.policy_path,
                     "checkpoint path, or 'random' / 'oracle' baselines");

    CLI::App* analyze = app.add_subcommand("analyze", "feature-distance curves");
    add_common(analyze, args);

    CLI::App* render = app.add_subcommand("render", "render one pose to PGM images");
    add_common(render, args, /*with_setting=*/false);
    render->add_option("--layout", args.options.layout_path, "layout file")->required();
    render->add_option("--pose", args.options.pose, "pose as 'x,y,H' with H in NESW")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const gaple::RunConfig config = resolve_config(args);
        if (gen->parsed()) gaple::cmd_gen_houses(config, args.options);
        if (percep->parsed()) gaple::cmd_train_perception(config, args.options);
        if (policy->parsed()) gaple::cmd_train_policy(config, args.options);
        if (eval->parsed()) gaple::cmd_eval(config, args.options);
        if (analyze->parsed()) gaple::cmd_analyze(config, args.options);
        if (render->parsed()) gaple::cmd_render(config, args.options);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
