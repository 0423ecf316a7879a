#include "gaple/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "gaple/analysis.hpp"
#include "gaple/errors.hpp"
#include "gaple/generate.hpp"
#include "gaple/io.hpp"

namespace gaple {

namespace fs = std::filesystem;

namespace {

RunConfig with_overrides(RunConfig config, const CommandOptions& options) {
    if (options.seed) config.run.seed = *options.seed;
    return config;
}

GenParams gen_params_of(const RunConfig& config) {
    GenParams p;
    p.width = config.houses.width;
    p.height = config.houses.height;
    p.rooms = config.houses.rooms;
    p.min_room = config.houses.min_room;
    p.max_room = config.houses.max_room;
    p.label_pool = config.houses.labels;
    p.objects = std::min<int>(config.houses.objects, static_cast<int>(config.houses.labels.size()));
    p.max_object_cells = config.houses.max_object_cells;
    return p;
}

int house_count_for(const RunConfig& config, const std::string& setting) {
    if (setting == "objects") return 1;
    if (setting == "environments") return config.setting.env_train + config.setting.env_test;
    if (setting.empty()) return config.houses.count;
    throw std::invalid_argument("unknown setting '" + setting + "' (objects|environments)");
}

FeatureKind feature_kind_of(const RunConfig& config) {
    if (config.policy.features == "depth") return FeatureKind::Depth10;
    if (config.policy.features == "gray") return FeatureKind::Gray10;
    throw std::invalid_argument("policy.features must be 'depth' or 'gray', got '" +
                                config.policy.features + "'");
}

std::string progress_summary(const std::vector<EpisodeRecord>& log, size_t from, size_t to) {
    double ret = 0.0, len = 0.0;
    for (size_t i = from; i < to; ++i) {
        ret += log[i].episode_return;
        len += log[i].episode_len;
    }
    const double n = static_cast<double>(to - from);
    std::ostringstream out;
    out << "step " << log[to - 1].step << "  episodes " << to << "  mean_return "
        << format_double(ret / n) << "  mean_len " << format_double(len / n);
    return out.str();
}

}  // namespace

std::vector<std::shared_ptr<const HouseLayout>> houses_for(const RunConfig& config,
                                                           const std::string& setting) {
    std::vector<std::shared_ptr<const HouseLayout>> houses;
    const int count = house_count_for(config, setting);
    if (!config.houses.files.empty()) {
        if (static_cast<int>(config.houses.files.size()) < count) {
            throw std::invalid_argument("setting needs " + std::to_string(count) +
                                        " house files, config lists " +
                                        std::to_string(config.houses.files.size()));
        }
        for (int i = 0; i < count; ++i) {
            houses.push_back(std::make_shared<HouseLayout>(
                parse_layout(read_text_file(config.houses.files[i]))));
        }
        return houses;
    }
    const GenParams params = gen_params_of(config);
    for (int i = 0; i < count; ++i) {
        houses.push_back(std::make_shared<HouseLayout>(generate_house(
            mix_seed(config.run.seed, 0x686f757365ULL, static_cast<uint64_t>(i)), params)));
    }
    return houses;
}

PairSplit plan_pairs(const RunConfig& config, const std::string& setting,
                     const std::vector<std::shared_ptr<const HouseLayout>>& houses) {
    const RenderConfig rc = render_config_of(config);
    PairSplit split;
    int next_id = 0;
    auto add_pair = [&](std::vector<TaskPair>& side, int house_id,
                        const std::shared_ptr<const HouseLayout>& house, int label) {
        try {
            side.push_back(make_task_pair(next_id, house_id, house, label, rc));
            ++next_id;
        } catch (const TaskInfeasibleError& e) {
            throw TaskInfeasibleError("pair h" + std::to_string(house_id) + ":" +
                                      house->labels[label] + " infeasible: " + e.what());
        }
    };

    if (setting == "objects") {
        const auto& house = houses.at(0);
        const std::vector<int> targets = house->unique_object_labels();
        const int need = config.setting.objects_train + config.setting.objects_test;
        if (static_cast<int>(targets.size()) < need) {
            throw TaskInfeasibleError("setting objects needs " + std::to_string(need) +
                                      " unique targets, house has " +
                                      std::to_string(targets.size()));
        }
        for (int i = 0; i < config.setting.objects_train; ++i) {
            add_pair(split.train, 0, house, targets[i]);
        }
        for (int i = 0; i < config.setting.objects_test; ++i) {
            add_pair(split.test, 0, house, targets[config.setting.objects_train + i]);
        }
        return split;
    }
    if (setting == "environments") {
        for (size_t h = 0; h < houses.size(); ++h) {
            const bool is_train = static_cast<int>(h) < config.setting.env_train;
            for (int label : houses[h]->unique_object_labels()) {
                add_pair(is_train ? split.train : split.test, static_cast<int>(h), houses[h], label);
            }
        }
        return split;
    }
    for (size_t h = 0; h < houses.size(); ++h) {
        for (int label : houses[h]->unique_object_labels()) {
            add_pair(split.train, static_cast<int>(h), houses[h], label);
        }
    }
    return split;
}

PairSplit plan_pairs(const RunConfig& config, const std::string& setting) {
    return plan_pairs(config, setting, houses_for(config, setting));
}

ObservationConfig observation_config_of(const RunConfig& config) {
    ObservationConfig obs;
    obs.features = feature_kind_of(config);
    if (config.policy.obs == "gt") {
        obs.kind = ObsKind::GroundTruth;
    } else if (config.policy.obs == "noisy") {
        obs.kind = ObsKind::Noisy;
        obs.flip_p = config.policy.flip_p;
        obs.depth_sigma = config.policy.depth_sigma;
    } else if (config.policy.obs == "predicted") {
        obs.kind = ObsKind::Predicted;
        if (config.policy.percep_ckpt.empty()) {
            throw std::invalid_argument("policy.obs = predicted requires policy.percep_ckpt");
        }
        obs.perception = std::make_shared<const PerceptionParams>(
            load_perception(config.policy.percep_ckpt));
    } else {
        throw std::invalid_argument("policy.obs must be gt|noisy|predicted, got '" +
                                    config.policy.obs + "'");
    }
    return obs;
}

int resolve_workers(const RunConfig& config, const CommandOptions& options) {
    if (options.workers) return *options.workers;
    if (const char* env = std::getenv("GAPLE_THREADS")) {
        try {
            return std::stoi(env);
        } catch (const std::exception&) {
            throw std::invalid_argument("GAPLE_THREADS is not a number: '" + std::string(env) + "'");
        }
    }
    return config.policy.workers;
}

void cmd_gen_houses(RunConfig config, const CommandOptions& options) {
    config = with_overrides(config, options);
    fs::create_directories(options.out_dir);
    const auto houses = houses_for(config, options.setting);
    for (size_t i = 0; i < houses.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "house_%03zu.txt", i);
        write_text_file((fs::path(options.out_dir) / name).string(), write_layout(*houses[i]));
        std::cout << name << ": " << houses[i]->width << "x" << houses[i]->height << ", "
                  << houses[i]->floor_count() << " floor cells, " << houses[i]->objects.size()
                  << " objects\n";
    }
}

void cmd_train_perception(RunConfig config, const CommandOptions& options) {
    config = with_overrides(config, options);
    fs::create_directories(options.out_dir);
    const auto houses = houses_for(config, options.setting);

    RenderConfig rc = render_config_of(config);
    rc.width = config.perception.width;
    rc.height = config.perception.height;
    PerceptionDataset dataset =
        build_dataset(houses, rc, config.perception.background_cap,
                      static_cast<size_t>(config.perception.sample_cap), config.run.seed);
    if (config.perception.save_dataset) {
        save_dataset((fs::path(options.out_dir) / "dataset").string(), dataset);
    }

    // held-out tail for the metrics below; build_dataset already shuffled
    const size_t holdout =
        std::min(dataset.samples.size() - 1,
                 static_cast<size_t>(config.perception.holdout_frac * dataset.samples.size()));
    std::vector<PerceptionSample> held(dataset.samples.end() - holdout, dataset.samples.end());
    dataset.samples.resize(dataset.samples.size() - holdout);
    std::cout << "dataset: " << dataset.samples.size() << " train + " << held.size()
              << " holdout frames, " << dataset.num_classes << " classes\n";

    const PerceptionTrainResult result =
        train_perception(dataset, config.perception.epochs, config.perception.lr,
                         config.perception.batch, config.perception.lambda, config.run.seed);
    save_perception((fs::path(options.out_dir) / "percep.ckpt").string(), result.params);

    std::ostringstream loss_csv;
    loss_csv << "epoch,mean_loss\n";
    for (size_t e = 0; e < result.epoch_loss.size(); ++e) {
        loss_csv << (e + 1) << ',' << format_double(result.epoch_loss[e]) << '\n';
    }
    write_text_file((fs::path(options.out_dir) / "loss.csv").string(), loss_csv.str());

    // holdout metrics: per-pixel accuracy vs majority class, mean IOU, RMSE
    long correct = 0, total = 0;
    std::vector<long> class_count(dataset.num_classes, 0);
    double iou_sum = 0.0, rmse_sum = 0.0;
    for (const PerceptionSample& s : held) {
        const PixelPrediction pred = perception_forward(result.params, s.width, s.height, s.rgb);
        const size_t plane = static_cast<size_t>(s.width) * s.height;
        std::vector<uint16_t> argmax(plane);
        for (size_t px = 0; px < plane; ++px) {
            int best = 0;
            for (int c = 1; c < pred.num_classes; ++c) {
                if (pred.probs[static_cast<size_t>(c) * plane + px] >
                    pred.probs[static_cast<size_t>(best) * plane + px]) {
                    best = c;
                }
            }
            argmax[px] = static_cast<uint16_t>(best);
            ++class_count[s.gt_semantic[px]];
            if (argmax[px] == s.gt_semantic[px]) ++correct;
            ++total;
        }
        iou_sum += mean_iou(argmax, s.gt_semantic, dataset.num_classes);
        rmse_sum += depth_rmse(pred.depth, s.gt_depth);
    }
    const double accuracy = total > 0 ? static_cast<double>(correct) / total : 0.0;
    const double majority =
        total > 0 ? static_cast<double>(*std::max_element(class_count.begin(), class_count.end())) /
                        total
                  : 0.0;
    std::ostringstream metrics;
    metrics << "metric,value\n";
    metrics << "holdout_accuracy," << format_double(accuracy) << '\n';
    metrics << "majority_class_freq," << format_double(majority) << '\n';
    if (!held.empty()) {
        metrics << "holdout_mean_iou," << format_double(iou_sum / held.size()) << '\n';
        metrics << "holdout_depth_rmse," << format_double(rmse_sum / held.size()) << '\n';
    }
    write_text_file((fs::path(options.out_dir) / "percep_metrics.csv").string(), metrics.str());
    std::cout << "epoch1 loss " << format_double(result.epoch_loss.front()) << " -> epoch"
              << result.epoch_loss.size() << " loss " << format_double(result.epoch_loss.back())
              << ", holdout accuracy " << format_double(accuracy) << " (majority "
              << format_double(majority) << ")\n";
}

void cmd_train_policy(RunConfig config, const CommandOptions& options) {
    config = with_overrides(config, options);
    fs::create_directories(options.out_dir);
    const PairSplit split = plan_pairs(config, options.setting);
    const Observer observe = make_observer(observation_config_of(config), render_config_of(config));

    TrainConfig tc = train_config_of(config);
    tc.n_workers = resolve_workers(config, options);

    std::ofstream log_file(fs::path(options.out_dir) / "train_log.csv");
    if (!log_file) throw IoError(options.out_dir + "/train_log.csv: cannot open for writing");
    log_file << "step,pair_id,episode_return,episode_len,version\n";

    std::cout << "training " << split.train.size() << " pairs, " << tc.n_workers << " workers, "
              << tc.max_env_steps << " env steps\n";
    const TrainResult result = train(tc, split.train, observe, &log_file);

    for (size_t mark = config.policy.log_interval; mark <= result.log.size();
         mark += config.policy.log_interval) {
        std::cout << progress_summary(result.log, mark - config.policy.log_interval, mark) << '\n';
    }
    std::cout << "done: " << result.total_steps << " env steps, " << result.log.size()
              << " episodes, version " << result.version << "\nepisodes per pair:";
    for (size_t p = 0; p < result.episodes_per_pair.size(); ++p) {
        std::cout << ' ' << split.train[p].name << '=' << result.episodes_per_pair[p];
    }
    std::cout << '\n';
    save_policy((fs::path(options.out_dir) / "policy.ckpt").string(), result.params);
}

namespace {

// Evaluation episodes with optional per-step traces in the trainer's
// line-delimited format.
EvalSummary evaluate_with_traces(const ActionSource& policy, std::span<const TaskPair> pairs,
                                 const Observer& observe, const RunConfig& config,
                                 std::ostream* traces) {
    if (traces) {
        (*traces) << "pair_id,episode,step,x,y,heading,action,reward,area\n";
    }
    EvalSummary summary = evaluate(policy, pairs, observe, config.eval.n_starts, config.eval.cap,
                                   config.run.seed);
    if (!traces) return summary;
    // replay the same episodes for the trace file
    for (const TaskPair& pair : pairs) {
        for (int i = 0; i < config.eval.n_starts; ++i) {
            Rng rng(mix_seed(config.run.seed, static_cast<uint64_t>(pair.id),
                             static_cast<uint64_t>(i)));
            Pose pose = start_episode(pair, rng);
            Observation obs = observe(*pair.house, pose, pair.target_label, rng);
            RewardTracker tracker{obs.observed_area, config.policy.gamma};
            if (obs.true_area >= pair.goal.area_threshold) continue;
            for (int t = 1; t <= config.eval.cap; ++t) {
                const int action = policy(obs.state, pose, rng);
                pose = step(*pair.house, pose, static_cast<Action>(action));
                obs = observe(*pair.house, pose, pair.target_label, rng);
                auto [reward, next] = reward_step(tracker, obs.observed_area);
                tracker = next;
                (*traces) << pair.id << ',' << i << ',' << t << ',' << pose.x << ',' << pose.y
                          << ',' << heading_char(pose.heading) << ','
                          << action_name(static_cast<Action>(action)) << ','
                          << format_double(reward) << ',' << format_double(obs.observed_area)
                          << '\n';
                if (obs.true_area >= pair.goal.area_threshold) break;
            }
        }
    }
    return summary;
}

}  // namespace

void cmd_eval(RunConfig config, const CommandOptions& options) {
    config = with_overrides(config, options);
    fs::create_directories(options.out_dir);
    const PairSplit split = plan_pairs(config, options.setting);
    const Observer observe = make_observer(observation_config_of(config), render_config_of(config));

    const std::string policy_path = options.policy_path.empty()
                                        ? (fs::path(options.out_dir) / "policy.ckpt").string()
                                        : options.policy_path;
    ActionSource policy;
    if (policy_path == "random") {
        policy = random_policy();
    } else {
        policy = policy_action_source(load_policy(policy_path), config.eval.greedy);
    }

    std::ofstream traces;
    if (config.eval.write_traces) {
        traces.open(fs::path(options.out_dir) / "traces.csv");
        if (!traces) throw IoError(options.out_dir + "/traces.csv: cannot open for writing");
    }
    std::ostream* trace_stream = config.eval.write_traces ? &traces : nullptr;

    auto eval_side = [&](std::span<const TaskPair> pairs, const std::string& file) {
        // oracle mode resolves per pair, so build the source inside
        EvalSummary summary;
        if (policy_path == "oracle") {
            for (const TaskPair& pair : pairs) {
                EvalSummary one = evaluate_with_traces(oracle_policy(pair), {&pair, 1}, observe,
                                                       config, trace_stream);
                summary.per_pair.push_back(one.per_pair.front());
                summary.outcomes.insert(summary.outcomes.end(), one.outcomes.begin(),
                                        one.outcomes.end());
            }
            // recompute the aggregate over all pooled outcomes
            summary.aggregate.pair_name = "aggregate";
            summary.aggregate.n_episodes = static_cast<long>(summary.outcomes.size());
            double taken = 0.0;
            long successes = 0;
            for (const EvalOutcome& o : summary.outcomes) {
                if (!o.success) continue;
                ++successes;
                taken += o.taken;
                for (int k = 1; k <= 5; ++k) {
                    if (o.taken <= k * o.minimal) summary.aggregate.success_rate[k - 1] += 1.0;
                }
            }
            for (double& sr : summary.aggregate.success_rate) {
                sr /= std::max<long>(1, summary.aggregate.n_episodes);
            }
            if (successes > 0) summary.aggregate.avg_steps_success = taken / successes;
        } else {
            summary = evaluate_with_traces(policy, pairs, observe, config, trace_stream);
        }
        std::ostringstream csv;
        write_eval_csv(csv, summary);
        write_text_file((fs::path(options.out_dir) / file).string(), csv.str());
        std::cout << file << ": aggregate sr5 " << format_double(summary.aggregate.success_rate[4])
                  << " over " << summary.aggregate.n_episodes << " episodes\n";
        return summary;
    };

    if (split.test.empty()) {
        eval_side(split.train, "report.csv");
        return;
    }
    const EvalSummary trained = eval_side(split.train, "report_trained.csv");
    const EvalSummary fresh = eval_side(split.test, "report_new.csv");
    const std::array<double, 5> gap = generalization_gap(trained.aggregate, fresh.aggregate);
    std::ostringstream csv;
    csv << "k,sr_trained,sr_new,drop\n";
    for (int k = 0; k < 5; ++k) {
        csv << (k + 1) << ',' << format_double(trained.aggregate.success_rate[k]) << ','
            << format_double(fresh.aggregate.success_rate[k]) << ',' << format_double(gap[k])
            << '\n';
    }
    write_text_file((fs::path(options.out_dir) / "gap.csv").string(), csv.str());
}

void cmd_analyze(RunConfig config, const CommandOptions& options) {
    config = with_overrides(config, options);
    fs::create_directories(options.out_dir);
    const auto houses = houses_for(config, options.setting);
    const RenderConfig rc = render_config_of(config);

    std::vector<FeatureExtractor> extractors;
    if (config.analysis.extractor == "depth10" || config.analysis.extractor == "both") {
        extractors.push_back(FeatureExtractor::Depth10);
    }
    if (config.analysis.extractor == "rgb10" || config.analysis.extractor == "both") {
        extractors.push_back(FeatureExtractor::Rgb10);
    }
    if (extractors.empty()) {
        throw std::invalid_argument("analysis.extractor must be depth10|rgb10|both, got '" +
                                    config.analysis.extractor + "'");
    }

    std::ostringstream corr;
    corr << "extractor,house,spearman\n";
    for (FeatureExtractor extractor : extractors) {
        const std::string name = extractor == FeatureExtractor::Depth10 ? "depth10" : "rgb10";
        std::vector<double> pooled_sum(static_cast<size_t>(config.analysis.max_steps) + 1, 0.0);
        std::vector<long> pooled_count(static_cast<size_t>(config.analysis.max_steps) + 1, 0);
        double corr_sum = 0.0;
        int corr_n = 0;
        for (size_t h = 0; h < houses.size(); ++h) {
            const DistanceCurve curve = build_curve(
                *houses[h], extractor, rc, config.analysis.max_steps,
                config.analysis.sample_cap, mix_seed(config.run.seed, 0x616e61ULL, h));
            std::vector<double> bin_ids, means;
            for (size_t i = 0; i < curve.bins.size(); ++i) {
                pooled_sum[curve.bins[i]] += curve.mean_feat_dist[i] * curve.count[i];
                pooled_count[curve.bins[i]] += curve.count[i];
                if (curve.bins[i] >= 1 && curve.bins[i] <= 9) {
                    bin_ids.push_back(curve.bins[i]);
                    means.push_back(curve.mean_feat_dist[i]);
                }
            }
            if (bin_ids.size() >= 2) {
                const double rho = spearman_rank_correlation(bin_ids, means);
                corr << name << ',' << h << ',' << format_double(rho) << '\n';
                corr_sum += rho;
                ++corr_n;
            }
        }
        DistanceCurve pooled;
        for (int d = 0; d <= config.analysis.max_steps; ++d) {
            if (pooled_count[d] == 0) continue;
            pooled.bins.push_back(d);
            pooled.mean_feat_dist.push_back(pooled_sum[d] / pooled_count[d]);
            pooled.count.push_back(pooled_count[d]);
        }
        std::ostringstream csv;
        write_curve_csv(csv, pooled);
        write_text_file((fs::path(options.out_dir) / ("curve_" + name + ".csv")).string(),
                        csv.str());
        if (corr_n > 0) {
            corr << name << ",mean," << format_double(corr_sum / corr_n) << '\n';
            std::cout << name << ": mean spearman(bins 1-9) = " << format_double(corr_sum / corr_n)
                      << " over " << corr_n << " houses\n";
        }
    }
    write_text_file((fs::path(options.out_dir) / "analysis_corr.csv").string(), corr.str());
}

void cmd_render(RunConfig config, const CommandOptions& options) {
    config = with_overrides(config, options);
    fs::create_directories(options.out_dir);
    if (options.layout_path.empty()) {
        throw std::invalid_argument("render: --layout is required");
    }
    const HouseLayout layout = parse_layout(read_text_file(options.layout_path));

    // pose "x,y,H"
    int x = 0, y = 0;
    char hc = 0;
    if (std::sscanf(options.pose.c_str(), "%d,%d,%c", &x, &y, &hc) != 3) {
        throw std::invalid_argument("render: --pose must be 'x,y,H' (H in NESW), got '" +
                                    options.pose + "'");
    }
    const std::optional<Heading> heading = heading_from_char(hc);
    if (!heading) {
        throw std::invalid_argument(std::string("render: bad heading '") + hc + "'");
    }
    const Pose pose{x, y, *heading};
    if (!layout.is_valid_pose(pose)) {
        throw std::invalid_argument("render: pose " + options.pose + " is not on a floor cell");
    }

    const RenderOutput frame = render(layout, pose, render_config_of(config));
    write_semantic_pgm((fs::path(options.out_dir) / "semantic.pgm").string(), frame);
    write_depth_pgm((fs::path(options.out_dir) / "depth.pgm").string(), frame);
    std::cout << "wrote semantic.pgm and depth.pgm (" << frame.width << "x" << frame.height
              << ")\n";
}

}  // namespace gaple
