#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gaple/perception.hpp"
#include "gaple/policynet.hpp"
#include "gaple/state.hpp"

namespace gaple {

// One (house, target) training task. Goal spec and valid start poses are
// precomputed from ground truth; layouts are immutable and shared across
// workers.
struct TaskPair {
    int id = 0;
    int house_id = 0;
    std::shared_ptr<const HouseLayout> house;
    int target_label = 0;
    GoalSpec goal;
    std::vector<Pose> start_candidates;  // positive attention area, not a goal pose
    std::string name;                    // "h<house_id>:<label_name>"
};

// Builds goal spec and start candidates; throws TaskInfeasibleError when the
// target is never visible or every visible pose is already a goal.
TaskPair make_task_pair(int id, int house_id, std::shared_ptr<const HouseLayout> house,
                        int target_label, const RenderConfig& cfg);

// How the policy observes the world.
enum class ObsKind { GroundTruth, Noisy, Predicted };
enum class FeatureKind { Depth10, Gray10 };

struct ObservationConfig {
    ObsKind kind = ObsKind::GroundTruth;
    FeatureKind features = FeatureKind::Depth10;
    double flip_p = 0.0;
    double depth_sigma = 0.0;
    std::shared_ptr<const PerceptionParams> perception;  // for ObsKind::Predicted
};

struct Observation {
    StateTensor state;
    double observed_area = 0.0;  // drives rewards and training termination
    double true_area = 0.0;      // ground truth; the evaluation referee
};

// (layout, pose, target_label, rng) -> Observation. Stateless and thread-safe;
// noise draws come from the caller's rng.
using Observer =
    std::function<Observation(const HouseLayout&, const Pose&, int, Rng&)>;

Observer make_observer(const ObservationConfig& obs_cfg, const RenderConfig& render_cfg);

struct TrainConfig {
    int n_workers = 4;
    int rollout_len = 5;
    long max_env_steps = 600'000;
    double lr = 0.02;
    double gamma = 0.99;
    double beta_entropy = 0.01;
    double value_coeff = 0.5;
    int episode_step_cap = 200;
    double grad_clip = 40.0;
    uint64_t seed = 1;
};

enum class Terminal { GoalReached, StepCapHit };

struct TraceStep {
    int step = 0;
    Pose pose;          // pose after the action
    Action action = Action::MoveForward;
    double reward = 0.0;
    double area = 0.0;  // observed attention area after the action
};

struct EpisodeTrace {
    int pair_id = 0;
    Pose start;
    std::vector<TraceStep> steps;
    Terminal terminal = Terminal::StepCapHit;
};

// Uniform draw over the pair's start candidates.
Pose start_episode(const TaskPair& pair, Rng& rng);

struct RolloutResult {
    std::vector<RolloutStep> steps;  // with n-step returns filled in
    std::vector<TraceStep> trace;
    Pose end_pose;
    bool goal_reached = false;
};

// Up to rollout_len env steps with actions sampled from the snapshot policy.
// Terminates early when the observed attention area reaches the goal
// threshold. Returns are bootstrapped with V(s_end) unless the goal was
// reached. step_offset numbers the trace within the episode.
RolloutResult run_rollout(const PolicyParams& snapshot, const TaskPair& pair, Pose pose,
                          RewardTracker& tracker, int rollout_len, const Observer& observe,
                          Rng& rng, double gamma, int step_offset = 0);

// Per-worker task deques: owners pop from the front, thieves steal from the
// back of the longest other deque. All mutation is mutex-protected per deque.
class TaskDeques {
public:
    explicit TaskDeques(int n_workers);
    void seed_round_robin(int n_pairs);
    std::optional<int> pop_own(int worker);
    std::optional<int> steal_task(int thief);
    bool all_empty() const;
    size_t size(int worker) const;
    void push(int worker, int task);

private:
    mutable std::vector<std::mutex> mutexes_;
    std::vector<std::deque<int>> deques_;
};

// Shared parameter store. Snapshots are immutable shared_ptr copies; applies
// are serialized and re-publish a fresh copy, bumping the version by exactly
// one. The checksum covers the parameter bytes so readers can verify they
// never observe a torn update.
class SharedParams {
public:
    struct Versioned {
        PolicyParams params;
        uint64_t version = 0;
        uint64_t checksum = 0;
    };

    explicit SharedParams(PolicyParams initial);
    std::shared_ptr<const Versioned> snapshot() const;
    void apply(std::span<const double> grad, double lr, double clip);
    uint64_t version() const;

    static uint64_t checksum_of(const PolicyParams& params, uint64_t version);

private:
    std::shared_ptr<const Versioned> current_;
    mutable std::mutex ptr_mutex_;  // guards the pointer only; held for the copy
    std::mutex apply_mutex_;        // serializes gradient applications
};

struct EpisodeRecord {
    long step = 0;  // global env step count when the episode finished
    int pair_id = 0;
    double episode_return = 0.0;
    int episode_len = 0;
    uint64_t version = 0;
};

struct TrainResult {
    PolicyParams params;
    std::vector<EpisodeRecord> log;
    std::vector<long> episodes_per_pair;
    long total_steps = 0;
    uint64_t version = 0;           // == number of gradient applications
    uint64_t gradient_applies = 0;  // independently counted
};

std::string format_episode_record(const EpisodeRecord& rec);

// Asynchronous advantage actor-critic over the task pairs. Workers pull tasks
// from the work-stealing deques (reseeded round-robin whenever all deques
// drain, so every pair trains equally), roll out against a parameter
// snapshot, and apply gradients to the shared store until max_env_steps.
// Single-worker runs are fully deterministic. If log_stream is set, one CSV
// record per episode is written: step,pair_id,episode_return,episode_len,version
TrainResult train(const TrainConfig& config, std::span<const TaskPair> pairs,
                  const Observer& observe, std::ostream* log_stream = nullptr);

}  // namespace gaple
