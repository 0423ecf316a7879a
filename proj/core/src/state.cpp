#include "gaple/state.hpp"

#include <algorithm>
#include <stdexcept>

#include "gaple/errors.hpp"

namespace gaple {

AttentionMask attention_mask(int width, int height, std::span<const uint16_t> semantic,
                             int target_label) {
    if (target_label < 1) {
        throw std::invalid_argument("attention_mask: target_label must be >= 1");
    }
    AttentionMask out;
    out.width = width;
    out.height = height;
    out.mask.resize(semantic.size());
    for (size_t i = 0; i < semantic.size(); ++i) {
        out.mask[i] = semantic[i] == target_label ? 1 : 0;
    }
    return out;
}

AttentionMask attention_mask(const RenderOutput& render, int target_label) {
    return attention_mask(render.width, render.height, render.semantic, target_label);
}

double attention_area(const AttentionMask& mask) {
    if (mask.mask.empty()) return 0.0;
    size_t ones = 0;
    for (uint8_t v : mask.mask) ones += v;
    return static_cast<double>(ones) / static_cast<double>(mask.mask.size());
}

std::array<double, 100> downsample10(int width, int height, std::span<const double> grid) {
    if (width < kStateGrid || height < kStateGrid) {
        throw std::invalid_argument("downsample10: dimensions must be >= 10");
    }
    std::array<double, 100> out{};
    for (int by = 0; by < kStateGrid; ++by) {
        const int y0 = by * height / kStateGrid;
        const int y1 = (by + 1) * height / kStateGrid;
        for (int bx = 0; bx < kStateGrid; ++bx) {
            const int x0 = bx * width / kStateGrid;
            const int x1 = (bx + 1) * width / kStateGrid;
            double sum = 0.0;
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) {
                    sum += grid[static_cast<size_t>(y) * width + x];
                }
            }
            out[static_cast<size_t>(by) * kStateGrid + bx] =
                sum / (static_cast<double>(y1 - y0) * (x1 - x0));
        }
    }
    return out;
}

StateTensor make_state(const RenderOutput& render, int target_label, double max_range) {
    const AttentionMask mask = attention_mask(render, target_label);
    std::vector<double> mask_real(mask.mask.begin(), mask.mask.end());
    std::vector<double> depth_norm(render.depth.size());
    for (size_t i = 0; i < render.depth.size(); ++i) {
        depth_norm[i] = render.depth[i] / max_range;
    }
    StateTensor s;
    s.mask10 = downsample10(render.width, render.height, mask_real);
    s.depth10 = downsample10(render.width, render.height, depth_norm);
    return s;
}

StateTensor make_state_gray(const RenderOutput& render, int target_label) {
    if (render.rgb.empty()) {
        throw std::invalid_argument("make_state_gray: render has no rgb data");
    }
    const AttentionMask mask = attention_mask(render, target_label);
    std::vector<double> mask_real(mask.mask.begin(), mask.mask.end());
    const size_t plane = static_cast<size_t>(render.width) * render.height;
    std::vector<double> gray(plane);
    for (size_t i = 0; i < plane; ++i) {
        gray[i] = (render.rgb[i] + render.rgb[plane + i] + render.rgb[2 * plane + i]) / 3.0;
    }
    StateTensor s;
    s.mask10 = downsample10(render.width, render.height, mask_real);
    s.depth10 = downsample10(render.width, render.height, gray);  // appearance ablation channel
    return s;
}

std::vector<double> attention_areas_by_pose(const HouseLayout& layout, int target_label,
                                            const RenderConfig& cfg) {
    RenderConfig fast = cfg;
    fast.with_rgb = false;
    const std::vector<Pose> poses = reachable_poses(layout);
    std::vector<double> areas;
    areas.reserve(poses.size());
    for (const Pose& p : poses) {
        areas.push_back(attention_area(attention_mask(render(layout, p, fast), target_label)));
    }
    return areas;
}

GoalSpec compute_goal_spec(const HouseLayout& layout, int target_label, const RenderConfig& cfg) {
    const std::vector<Pose> poses = reachable_poses(layout);
    const std::vector<double> areas = attention_areas_by_pose(layout, target_label, cfg);

    std::vector<double> positive;
    for (double a : areas) {
        if (a > 0.0) positive.push_back(a);
    }
    if (positive.empty()) {
        throw TaskInfeasibleError("target label " + std::to_string(target_label) +
                                  " is not visible from any reachable pose");
    }
    std::sort(positive.begin(), positive.end(), std::greater<>());
    const double threshold = positive.size() >= 5 ? positive[4] : positive.back();

    GoalSpec spec;
    spec.target_label = target_label;
    spec.area_threshold = threshold;
    for (size_t i = 0; i < poses.size(); ++i) {
        if (areas[i] >= threshold) spec.goal_poses.push_back(poses[i]);
    }
    return spec;
}

std::pair<double, RewardTracker> reward_step(RewardTracker tracker, double area) {
    const double reward = area > tracker.running_max ? area : 0.0;
    tracker.running_max = std::max(tracker.running_max, area);
    return {reward, tracker};
}

double discounted_return(std::span<const double> rewards, double gamma) {
    double total = 0.0;
    double scale = 1.0;
    for (double r : rewards) {
        total += scale * r;
        scale *= gamma;
    }
    return total;
}

}  // namespace gaple
