#include "gaple/eval.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "gaple/errors.hpp"
#include "gaple/io.hpp"

namespace gaple {

ActionSource random_policy() {
    return [](const StateTensor&, const Pose&, Rng& rng) {
        return rng.uniform_index(kActionCount);
    };
}

ActionSource policy_action_source(PolicyParams params, bool greedy) {
    return [params = std::move(params), greedy](const StateTensor& state, const Pose&, Rng& rng) {
        const PolicyOutput out = policy_forward(params, state);
        if (greedy) {
            int best = 0;
            for (int a = 1; a < kActionCount; ++a) {
                if (out.action_probs[a] > out.action_probs[best]) best = a;
            }
            return best;
        }
        const double u = rng.uniform();
        double acc = 0.0;
        for (int a = 0; a < kActionCount; ++a) {
            acc += out.action_probs[a];
            if (u < acc) return a;
        }
        return kActionCount - 1;
    };
}

ActionSource oracle_policy(const TaskPair& pair) {
    // multi-source BFS from the goal poses; the 6-action set is closed under
    // inverses, so forward expansion yields true distances-to-goal
    const HouseLayout& layout = *pair.house;
    auto dist = std::make_shared<std::vector<int>>(
        static_cast<size_t>(layout.width) * layout.height * 4, -1);
    std::deque<Pose> frontier;
    for (const Pose& g : pair.goal.goal_poses) {
        (*dist)[pose_index(layout, g)] = 0;
        frontier.push_back(g);
    }
    while (!frontier.empty()) {
        const Pose p = frontier.front();
        frontier.pop_front();
        const int d = (*dist)[pose_index(layout, p)];
        for (int a = 0; a < kActionCount; ++a) {
            const Pose q = step(layout, p, static_cast<Action>(a));
            if ((*dist)[pose_index(layout, q)] < 0) {
                (*dist)[pose_index(layout, q)] = d + 1;
                frontier.push_back(q);
            }
        }
    }
    const std::shared_ptr<const HouseLayout> house = pair.house;
    return [house, dist](const StateTensor&, const Pose& pose, Rng&) {
        const int here = (*dist)[pose_index(*house, pose)];
        for (int a = 0; a < kActionCount; ++a) {
            const Pose q = step(*house, pose, static_cast<Action>(a));
            if ((*dist)[pose_index(*house, q)] == here - 1) return a;
        }
        return 0;  // unreachable from a goal-connected pose
    };
}

EvalOutcome run_episode(const ActionSource& policy, const TaskPair& pair, const Observer& observe,
                        Pose start, int cap, Rng& rng) {
    EvalOutcome outcome;
    outcome.pair_id = pair.id;
    outcome.start = start;

    const std::optional<int> minimal = min_steps(*pair.house, start, pair.goal.goal_poses);
    if (!minimal) {
        throw TaskInfeasibleError("run_episode: no goal pose reachable from the start");
    }
    outcome.minimal = *minimal;

    Pose pose = start;
    Observation obs = observe(*pair.house, pose, pair.target_label, rng);
    if (obs.true_area >= pair.goal.area_threshold) {
        outcome.success = true;
        outcome.taken = 0;
        return outcome;
    }
    for (int t = 1; t <= cap; ++t) {
        const int action = policy(obs.state, pose, rng);
        pose = step(*pair.house, pose, static_cast<Action>(action));
        obs = observe(*pair.house, pose, pair.target_label, rng);
        if (obs.true_area >= pair.goal.area_threshold) {
            outcome.success = true;
            outcome.taken = t;
            return outcome;
        }
    }
    outcome.success = false;
    outcome.taken = cap;
    return outcome;
}

namespace {

EvalReport summarize(const std::string& name, std::span<const EvalOutcome> outcomes) {
    EvalReport report;
    report.pair_name = name;
    report.n_episodes = static_cast<long>(outcomes.size());
    if (outcomes.empty()) return report;
    double taken_sum = 0.0;
    long successes = 0;
    for (const EvalOutcome& o : outcomes) {
        if (o.success) {
            ++successes;
            taken_sum += o.taken;
            for (int k = 1; k <= 5; ++k) {
                if (o.taken <= k * o.minimal) report.success_rate[k - 1] += 1.0;
            }
        }
    }
    for (double& sr : report.success_rate) sr /= static_cast<double>(outcomes.size());
    if (successes > 0) report.avg_steps_success = taken_sum / static_cast<double>(successes);
    return report;
}

}  // namespace

EvalSummary evaluate(const ActionSource& policy, std::span<const TaskPair> pairs,
                     const Observer& observe, int n_starts, int cap, uint64_t seed) {
    EvalSummary summary;
    for (const TaskPair& pair : pairs) {
        std::vector<EvalOutcome> outcomes;
        outcomes.reserve(n_starts);
        for (int i = 0; i < n_starts; ++i) {
            Rng rng(mix_seed(seed, static_cast<uint64_t>(pair.id), static_cast<uint64_t>(i)));
            const Pose start = start_episode(pair, rng);
            outcomes.push_back(run_episode(policy, pair, observe, start, cap, rng));
        }
        summary.per_pair.push_back(summarize(pair.name, outcomes));
        summary.outcomes.insert(summary.outcomes.end(), outcomes.begin(), outcomes.end());
    }
    summary.aggregate = summarize("aggregate", summary.outcomes);
    return summary;
}

std::array<double, 5> generalization_gap(const EvalReport& trained, const EvalReport& fresh) {
    std::array<double, 5> gap{};
    for (int k = 0; k < 5; ++k) gap[k] = trained.success_rate[k] - fresh.success_rate[k];
    return gap;
}

void write_eval_csv(std::ostream& out, const EvalSummary& summary) {
    out << "pair,sr1,sr2,sr3,sr4,sr5,avg_steps,n\n";
    auto row = [&out](const EvalReport& r) {
        out << r.pair_name;
        for (double sr : r.success_rate) out << ',' << format_double(sr);
        out << ',' << (r.avg_steps_success ? format_double(*r.avg_steps_success) : "nan");
        out << ',' << r.n_episodes << '\n';
    };
    for (const EvalReport& r : summary.per_pair) row(r);
    row(summary.aggregate);
}

}  // namespace gaple
