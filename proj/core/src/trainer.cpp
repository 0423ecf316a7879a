#include "gaple/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <thread>

#include "gaple/errors.hpp"
#include "gaple/io.hpp"

namespace gaple {

TaskPair make_task_pair(int id, int house_id, std::shared_ptr<const HouseLayout> house,
                        int target_label, const RenderConfig& cfg) {
    TaskPair pair;
    pair.id = id;
    pair.house_id = house_id;
    pair.house = std::move(house);
    pair.target_label = target_label;
    pair.goal = compute_goal_spec(*pair.house, target_label, cfg);

    const std::vector<Pose> poses = reachable_poses(*pair.house);
    const std::vector<double> areas = attention_areas_by_pose(*pair.house, target_label, cfg);
    for (size_t i = 0; i < poses.size(); ++i) {
        if (areas[i] > 0.0 && areas[i] < pair.goal.area_threshold) {
            pair.start_candidates.push_back(poses[i]);
        }
    }
    if (pair.start_candidates.empty()) {
        throw TaskInfeasibleError("pair h" + std::to_string(house_id) + ":" +
                                  pair.house->labels[target_label] +
                                  ": every pose that sees the target is already a goal pose");
    }
    pair.name = "h" + std::to_string(house_id) + ":" + pair.house->labels[target_label];
    return pair;
}

Observer make_observer(const ObservationConfig& obs_cfg, const RenderConfig& render_cfg) {
    RenderConfig rc = render_cfg;
    // rgb is only needed when the observation or features consume it
    rc.with_rgb = obs_cfg.kind == ObsKind::Predicted || obs_cfg.features == FeatureKind::Gray10;
    if (obs_cfg.kind == ObsKind::Predicted && !obs_cfg.perception) {
        throw std::invalid_argument("make_observer: predicted observations need perception params");
    }
    return [obs_cfg, rc](const HouseLayout& layout, const Pose& pose, int target_label,
                         Rng& rng) -> Observation {
        const RenderOutput gt = render(layout, pose, rc);
        Observation out;
        out.true_area = attention_area(attention_mask(gt, target_label));

        const RenderOutput* observed = &gt;
        RenderOutput transformed;
        switch (obs_cfg.kind) {
            case ObsKind::GroundTruth:
                break;
            case ObsKind::Noisy:
                transformed = corrupt_observation(gt, static_cast<int>(layout.labels.size()),
                                                  rc.max_range, obs_cfg.flip_p,
                                                  obs_cfg.depth_sigma, rng);
                observed = &transformed;
                break;
            case ObsKind::Predicted:
                transformed = predict_render(*obs_cfg.perception, gt, rc.max_range);
                observed = &transformed;
                break;
        }
        out.observed_area = attention_area(attention_mask(*observed, target_label));
        out.state = obs_cfg.features == FeatureKind::Depth10
                        ? make_state(*observed, target_label, rc.max_range)
                        : make_state_gray(*observed, target_label);
        return out;
    };
}

Pose start_episode(const TaskPair& pair, Rng& rng) {
    if (pair.start_candidates.empty()) {
        throw TaskInfeasibleError("start_episode: pair has no valid start poses");
    }
    return pair.start_candidates[rng.uniform_index(pair.start_candidates.size())];
}

namespace {

int sample_action(const std::array<double, 6>& probs, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (int a = 0; a < kActionCount; ++a) {
        acc += probs[a];
        if (u < acc) return a;
    }
    return kActionCount - 1;
}

}  // namespace

RolloutResult run_rollout(const PolicyParams& snapshot, const TaskPair& pair, Pose pose,
                          RewardTracker& tracker, int rollout_len, const Observer& observe,
                          Rng& rng, double gamma, int step_offset) {
    RolloutResult result;
    result.end_pose = pose;

    Observation obs = observe(*pair.house, pose, pair.target_label, rng);
    if (obs.observed_area >= pair.goal.area_threshold) {
        result.goal_reached = true;
        return result;
    }

    std::vector<double> rewards;
    for (int t = 0; t < rollout_len; ++t) {
        const PolicyOutput out = policy_forward(snapshot, obs.state);
        const int action = sample_action(out.action_probs, rng);

        RolloutStep stepData;
        stepData.state = obs.state;
        stepData.action = action;
        result.steps.push_back(stepData);

        pose = step(*pair.house, pose, static_cast<Action>(action));
        obs = observe(*pair.house, pose, pair.target_label, rng);

        auto [reward, next_tracker] = reward_step(tracker, obs.observed_area);
        tracker = next_tracker;
        rewards.push_back(reward);

        result.trace.push_back({step_offset + t, pose, static_cast<Action>(action), reward,
                                obs.observed_area});

        if (obs.observed_area >= pair.goal.area_threshold) {
            result.goal_reached = true;
            break;
        }
    }
    result.end_pose = pose;

    // n-step returns, bootstrapped with the snapshot value unless terminal
    double ret = result.goal_reached ? 0.0 : policy_forward(snapshot, obs.state).value;
    for (size_t i = result.steps.size(); i-- > 0;) {
        ret = rewards[i] + gamma * ret;
        result.steps[i].ret = ret;
    }
    return result;
}

TaskDeques::TaskDeques(int n_workers)
    : mutexes_(static_cast<size_t>(n_workers)), deques_(static_cast<size_t>(n_workers)) {}

void TaskDeques::seed_round_robin(int n_pairs) {
    for (int p = 0; p < n_pairs; ++p) {
        const size_t w = static_cast<size_t>(p) % deques_.size();
        std::lock_guard lock(mutexes_[w]);
        deques_[w].push_back(p);
    }
}

std::optional<int> TaskDeques::pop_own(int worker) {
    std::lock_guard lock(mutexes_[worker]);
    if (deques_[worker].empty()) return std::nullopt;
    const int task = deques_[worker].front();
    deques_[worker].pop_front();
    return task;
}

std::optional<int> TaskDeques::steal_task(int thief) {
    while (true) {
        int victim = -1;
        size_t longest = 0;
        for (size_t w = 0; w < deques_.size(); ++w) {
            if (static_cast<int>(w) == thief) continue;
            std::lock_guard lock(mutexes_[w]);
            if (deques_[w].size() > longest) {
                longest = deques_[w].size();
                victim = static_cast<int>(w);
            }
        }
        if (victim < 0) return std::nullopt;
        std::lock_guard lock(mutexes_[victim]);
        if (deques_[victim].empty()) continue;  // raced; rescan
        const int task = deques_[victim].back();
        deques_[victim].pop_back();
        return task;
    }
}

bool TaskDeques::all_empty() const {
    for (size_t w = 0; w < deques_.size(); ++w) {
        std::lock_guard lock(mutexes_[w]);
        if (!deques_[w].empty()) return false;
    }
    return true;
}

size_t TaskDeques::size(int worker) const {
    std::lock_guard lock(mutexes_[worker]);
    return deques_[worker].size();
}

void TaskDeques::push(int worker, int task) {
    std::lock_guard lock(mutexes_[worker]);
    deques_[worker].push_back(task);
}

SharedParams::SharedParams(PolicyParams initial) {
    auto v = std::make_shared<Versioned>();
    v->params = std::move(initial);
    v->version = 0;
    v->checksum = checksum_of(v->params, 0);
    current_ = std::move(v);
}

std::shared_ptr<const SharedParams::Versioned> SharedParams::snapshot() const {
    std::lock_guard lock(ptr_mutex_);
    return current_;
}

void SharedParams::apply(std::span<const double> grad, double lr, double clip) {
    std::lock_guard lock(apply_mutex_);
    const auto cur = snapshot();
    auto next = std::make_shared<Versioned>();
    next->params = apply_gradient(cur->params, grad, lr, clip);
    next->version = cur->version + 1;
    next->checksum = checksum_of(next->params, next->version);
    std::lock_guard ptr_lock(ptr_mutex_);
    current_ = std::move(next);
}

uint64_t SharedParams::version() const {
    return snapshot()->version;
}

uint64_t SharedParams::checksum_of(const PolicyParams& params, uint64_t version) {
    uint64_t h = 0xcbf29ce484222325ULL ^ version;
    for (double d : params.v) {
        uint64_t bits;
        std::memcpy(&bits, &d, 8);
        h ^= bits;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string format_episode_record(const EpisodeRecord& rec) {
    std::ostringstream line;
    line << rec.step << ',' << rec.pair_id << ',' << format_double(rec.episode_return) << ','
         << rec.episode_len << ',' << rec.version;
    return line.str();
}

namespace {

struct TrainShared {
    SharedParams* params;
    TaskDeques* deques;
    std::atomic<long> total_steps{0};
    std::atomic<long> reseed_generation{0};
    std::mutex reseed_mutex;
    std::mutex log_mutex;
    std::vector<EpisodeRecord>* log;
    std::ostream* log_stream;
    std::vector<std::atomic<long>>* episodes_per_pair;
    std::atomic<uint64_t> gradient_applies{0};
};

// Next task for a worker: own deque, then stealing, then (if everything is
// drained) a round-robin reseed of all pairs so training keeps cycling until
// the step budget runs out.
std::optional<int> next_task(TrainShared& shared, int worker, int n_pairs) {
    while (true) {
        if (auto task = shared.deques->pop_own(worker)) return task;
        if (auto task = shared.deques->steal_task(worker)) return task;
        std::lock_guard lock(shared.reseed_mutex);
        if (shared.deques->all_empty()) {
            shared.deques->seed_round_robin(n_pairs);
            shared.reseed_generation.fetch_add(1);
        }
    }
}

void worker_loop(int worker, const TrainConfig& config, std::span<const TaskPair> pairs,
                 const Observer& observe, TrainShared& shared) {
    Rng rng(mix_seed(config.seed, 0x776f726bULL, static_cast<uint64_t>(worker)));
    while (shared.total_steps.load() < config.max_env_steps) {
        const std::optional<int> task = next_task(shared, worker, static_cast<int>(pairs.size()));
        if (!task) return;
        const TaskPair& pair = pairs[*task];

        Pose pose = start_episode(pair, rng);
        RewardTracker tracker{observe(*pair.house, pose, pair.target_label, rng).observed_area,
                              config.gamma};
        std::vector<double> episode_rewards;
        int episode_len = 0;
        bool finished = false;
        bool aborted = false;

        while (!finished) {
            if (shared.total_steps.load() >= config.max_env_steps) {
                aborted = true;
                break;
            }
            const auto snap = shared.params->snapshot();
            const int remaining = config.episode_step_cap - episode_len;
            const int horizon = std::min(config.rollout_len, remaining);
            RolloutResult roll = run_rollout(snap->params, pair, pose, tracker, horizon, observe,
                                             rng, config.gamma, episode_len);
            pose = roll.end_pose;
            episode_len += static_cast<int>(roll.steps.size());
            for (const TraceStep& ts : roll.trace) episode_rewards.push_back(ts.reward);

            if (!roll.steps.empty()) {
                const PolicyGradient grad = policy_backward(snap->params, roll.steps,
                                                            config.beta_entropy, config.value_coeff);
                shared.params->apply(grad, config.lr, config.grad_clip);
                shared.gradient_applies.fetch_add(1);
                shared.total_steps.fetch_add(static_cast<long>(roll.steps.size()));
            }
            if (roll.goal_reached || episode_len >= config.episode_step_cap) finished = true;
        }

        if (finished && !aborted) {
            (*shared.episodes_per_pair)[pair.id].fetch_add(1);
            EpisodeRecord rec;
            rec.step = shared.total_steps.load();
            rec.pair_id = pair.id;
            rec.episode_return = discounted_return(episode_rewards, config.gamma);
            rec.episode_len = episode_len;
            rec.version = shared.params->version();
            std::lock_guard lock(shared.log_mutex);
            shared.log->push_back(rec);
            if (shared.log_stream) {
                (*shared.log_stream) << format_episode_record(rec) << '\n';
            }
        }
    }
}

}  // namespace

TrainResult train(const TrainConfig& config, std::span<const TaskPair> pairs,
                  const Observer& observe, std::ostream* log_stream) {
    if (pairs.empty()) {
        throw TaskInfeasibleError("train: no feasible task pairs");
    }
    if (config.n_workers < 1 || config.rollout_len < 1 || config.episode_step_cap < 1 ||
        config.gamma <= 0.0 || config.gamma >= 1.0) {
        throw std::invalid_argument("train: invalid config");
    }

    SharedParams shared_params(init_params(mix_seed(config.seed, 0x696e6974ULL)));
    TaskDeques deques(config.n_workers);
    deques.seed_round_robin(static_cast<int>(pairs.size()));

    std::vector<EpisodeRecord> log;
    std::vector<std::atomic<long>> counts(pairs.size());
    for (auto& c : counts) c.store(0);

    TrainShared shared;
    shared.params = &shared_params;
    shared.deques = &deques;
    shared.log = &log;
    shared.log_stream = log_stream;
    shared.episodes_per_pair = &counts;

    if (config.n_workers == 1) {
        worker_loop(0, config, pairs, observe, shared);
    } else {
        std::vector<std::thread> workers;
        workers.reserve(config.n_workers);
        for (int w = 0; w < config.n_workers; ++w) {
            workers.emplace_back(worker_loop, w, std::cref(config), pairs, std::cref(observe),
                                 std::ref(shared));
        }
        for (std::thread& t : workers) t.join();
    }

    TrainResult result;
    const auto final_snapshot = shared_params.snapshot();
    result.params = final_snapshot->params;
    result.version = final_snapshot->version;
    result.gradient_applies = shared.gradient_applies.load();
    result.log = std::move(log);
    result.total_steps = shared.total_steps.load();
    result.episodes_per_pair.reserve(counts.size());
    for (const auto& c : counts) result.episodes_per_pair.push_back(c.load());
    return result;
}

}  // namespace gaple
