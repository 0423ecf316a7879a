#pragma once

#include <array>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gaple/trainer.hpp"

namespace gaple {

// Action sources abstract over the policy under evaluation. The oracle needs
// the pose; learned policies only read the state tensor.
using ActionSource = std::function<int(const StateTensor&, const Pose&, Rng&)>;

// Uniform over the six actions; collisions fall back to step's no-op.
ActionSource random_policy();

// Samples from the policy distribution, or takes the argmax when greedy.
ActionSource policy_action_source(PolicyParams params, bool greedy = false);

// Follows a BFS distance-to-goal field; reaches a goal in exactly the minimal
// number of steps from any pose.
ActionSource oracle_policy(const TaskPair& pair);

struct EvalOutcome {
    int pair_id = 0;
    Pose start;
    int minimal = 0;  // BFS shortest action-sequence length to a goal pose
    int taken = 0;
    bool success = false;
};

struct EvalReport {
    std::string pair_name;
    std::array<double, 5> success_rate{};  // at 1x..5x minimal steps
    std::optional<double> avg_steps_success;
    long n_episodes = 0;
};

// One evaluation episode: actions from the policy, success when the
// ground-truth attention area reaches the goal threshold, failure at the step
// cap. The policy still acts on the (possibly corrupted) observation channel.
EvalOutcome run_episode(const ActionSource& policy, const TaskPair& pair, const Observer& observe,
                        Pose start, int cap, Rng& rng);

struct EvalSummary {
    std::vector<EvalReport> per_pair;
    EvalReport aggregate;
    std::vector<EvalOutcome> outcomes;
};

// n_starts start_episode draws per pair; per-episode rngs are derived from
// (seed, pair, start index), so results are order independent.
EvalSummary evaluate(const ActionSource& policy, std::span<const TaskPair> pairs,
                     const Observer& observe, int n_starts, int cap, uint64_t seed);

// Elementwise trained - fresh success-rate drop per k.
std::array<double, 5> generalization_gap(const EvalReport& trained, const EvalReport& fresh);

// CSV: pair,sr1..sr5,avg_steps,n; one row per pair plus an aggregate row.
void write_eval_csv(std::ostream& out, const EvalSummary& summary);

}  // namespace gaple
