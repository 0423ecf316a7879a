#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gaple/layout.hpp"
#include "gaple/render.hpp"

namespace gaple {

inline constexpr int kStateGrid = 10;                       // 10x10 per channel
inline constexpr int kStateSize = 2 * kStateGrid * kStateGrid;  // policy input width

struct AttentionMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> mask;  // 1 where semantic == target label
};

// mask[i] = 1 iff semantic[i] == target_label. target_label must be >= 1.
AttentionMask attention_mask(int width, int height, std::span<const uint16_t> semantic,
                             int target_label);
AttentionMask attention_mask(const RenderOutput& render, int target_label);

// Fraction of set pixels in [0, 1].
double attention_area(const AttentionMask& mask);

// Block-average pooling to 10x10. Bin b along an axis of size n covers
// indices [floor(b*n/10), floor((b+1)*n/10)). Requires width, height >= 10.
std::array<double, 100> downsample10(int width, int height, std::span<const double> grid);

// Policy input; both channels lie in [0, 1]. mask10 is the block-averaged
// attention mask; depth10 is block-averaged depth normalized by max_range
// (the appearance ablation fills the same slot with grayscale intensity).
struct StateTensor {
    std::array<double, 100> mask10{};
    std::array<double, 100> depth10{};
};

StateTensor make_state(const RenderOutput& render, int target_label, double max_range);

// Ablation variant: the second channel is grayscale RGB instead of depth.
// Requires the render to carry rgb data.
StateTensor make_state_gray(const RenderOutput& render, int target_label);

struct GoalSpec {
    int target_label = 0;
    double area_threshold = 0.0;   // fraction of image pixels
    std::vector<Pose> goal_poses;  // reachable poses with area >= threshold
};

// Ground-truth attention area for every reachable pose, in reachable_poses
// order. Rendering skips the rgb pass.
std::vector<double> attention_areas_by_pose(const HouseLayout& layout, int target_label,
                                            const RenderConfig& cfg);

// Threshold = fifth largest area over all reachable poses (counting ties), or
// the smallest positive area when fewer than five poses see the target.
// Throws TaskInfeasibleError if no pose sees the target.
GoalSpec compute_goal_spec(const HouseLayout& layout, int target_label, const RenderConfig& cfg);

// Episode-level reward state: rewards fire only on strict records over every
// previously observed attention area, including the start state's.
struct RewardTracker {
    double running_max = 0.0;
    double gamma = 0.99;
};

// reward = a_t if a_t > running_max else 0; tracker max updated either way.
std::pair<double, RewardTracker> reward_step(RewardTracker tracker, double area);

// sum_t gamma^t * rewards[t]
double discounted_return(std::span<const double> rewards, double gamma);

}  // namespace gaple
