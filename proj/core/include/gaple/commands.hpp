#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gaple/config.hpp"
#include "gaple/eval.hpp"

namespace gaple {

struct CommandOptions {
    std::optional<uint64_t> seed;  // overrides config [run] seed
    std::string out_dir = ".";
    std::string setting;           // "", "objects" or "environments"
    std::optional<int> workers;    // overrides GAPLE_THREADS and config
    std::string policy_path;       // eval: checkpoint, or "random" / "oracle"
    std::string layout_path;       // render
    std::string pose;              // render, "x,y,H"
};

// Houses used by a command: parsed from config files when given, otherwise
// generated deterministically from the config seed. The setting presets pick
// their own house count (objects: 1, environments: env_train + env_test).
std::vector<std::shared_ptr<const HouseLayout>> houses_for(const RunConfig& config,
                                                           const std::string& setting);

struct PairSplit {
    std::vector<TaskPair> train;
    std::vector<TaskPair> test;
};

// Wires the two generalization protocols: "objects" trains on the first
// objects_train targets of one house and holds out the next objects_test;
// "environments" trains on all targets of the first env_train houses and
// holds out the remaining env_test houses. No setting: all pairs train.
PairSplit plan_pairs(const RunConfig& config, const std::string& setting);
PairSplit plan_pairs(const RunConfig& config, const std::string& setting,
                     const std::vector<std::shared_ptr<const HouseLayout>>& houses);

ObservationConfig observation_config_of(const RunConfig& config);
int resolve_workers(const RunConfig& config, const CommandOptions& options);

void cmd_gen_houses(RunConfig config, const CommandOptions& options);
void cmd_train_perception(RunConfig config, const CommandOptions& options);
void cmd_train_policy(RunConfig config, const CommandOptions& options);
void cmd_eval(RunConfig config, const CommandOptions& options);
void cmd_analyze(RunConfig config, const CommandOptions& options);
void cmd_render(RunConfig config, const CommandOptions& options);

}  // namespace gaple
