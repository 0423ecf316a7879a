#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gaple/render.hpp"
#include "gaple/trainer.hpp"

namespace gaple {

// Flat sectioned key=value run configuration. '#' starts a comment, blank
// lines are ignored, '[section]' opens a section, later assignments win.
// Unknown sections or keys are rejected with the offending line and key.
// Every field below is the documented default; an empty file is a runnable
// desk-scale experiment.
struct RunConfig {
    struct Run {
        uint64_t seed = 1;
    } run;

    struct Houses {
        int count = 2;
        int width = 13;
        int height = 13;
        int rooms = 3;
        int min_room = 3;
        int max_room = 7;
        int objects = 6;
        int max_object_cells = 2;
        std::vector<std::string> labels = {"television", "sofa", "table", "plant",
                                           "lamp",       "bed",  "shelf", "chair"};
        std::vector<std::string> files;  // when set, parse these instead of generating
    } houses;

    struct Render {
        int width = 64;
        int height = 64;
        double fov_deg = 90.0;
        double max_range = 6.4;
    } render;

    struct Perception {
        int width = 32;   // dataset frame size; policy rendering is unaffected
        int height = 32;
        int epochs = 20;
        double lr = 0.1;
        int batch = 16;
        double lambda = 0.01;
        int sample_cap = 500;
        double background_cap = 0.8;
        double holdout_frac = 0.2;
        bool save_dataset = false;
    } perception;

    struct Policy {
        int workers = 4;
        int rollout_len = 5;
        long max_env_steps = 600'000;
        double lr = 0.02;
        double gamma = 0.99;
        double beta_entropy = 0.01;
        double value_coeff = 0.5;
        int episode_step_cap = 200;
        double grad_clip = 40.0;
        std::string features = "depth";  // depth | gray
        std::string obs = "gt";          // gt | noisy | predicted
        double flip_p = 0.1;
        double depth_sigma = 0.1;
        std::string percep_ckpt;         // for obs = predicted
        long log_interval = 500;         // episodes between progress prints
    } policy;

    struct Eval {
        int n_starts = 100;
        int cap = 1000;
        bool greedy = false;
        bool write_traces = false;
    } eval;

    struct Analysis {
        std::string extractor = "both";  // depth10 | rgb10 | both
        int max_steps = 12;
        long sample_cap = 4000;
    } analysis;

    struct Setting {
        int objects_train = 3;  // setting-objects: targets trained in house 0
        int objects_test = 2;   // ... and held out
        int env_train = 3;      // setting-environments: houses trained on
        int env_test = 2;       // ... and held out
    } setting;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

TrainConfig train_config_of(const RunConfig& config);
RenderConfig render_config_of(const RunConfig& config);

}  // namespace gaple
