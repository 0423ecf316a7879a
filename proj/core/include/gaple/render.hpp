#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gaple/layout.hpp"

namespace gaple {

struct RenderConfig {
    int width = 64;
    int height = 64;
    double fov_deg = 90.0;
    double max_range = 6.4;  // meters (32 cells)
    bool with_rgb = true;    // skip the color pass for policy-only consumers
};

// Per-pixel semantic labels, depth in meters, and (optionally) a procedural
// color image. Planar row-major indexing: pixel (x, y) is y*width + x, the
// rgb planes follow each other (r plane, g plane, b plane).
struct RenderOutput {
    int width = 0;
    int height = 0;
    std::vector<uint16_t> semantic;
    std::vector<double> depth;
    std::vector<double> rgb;  // 3 * width * height, values in [0, 1]; empty if !with_rgb

    size_t pixel(int x, int y) const { return static_cast<size_t>(y) * width + x; }
};

// Column raycast from the cell-center eye point at half wall height. Each of
// the `width` columns casts one ray across the horizontal fov; the first
// non-floor cell within max_range paints a vertical band with its label and
// hit distance, remaining rows get background (label 0) with floor/ceiling
// cast depth. Columns whose ray leaves max_range are background at max_range
// for every row.
RenderOutput render(const HouseLayout& layout, const Pose& pose, const RenderConfig& cfg);

// Procedural base color for a semantic label name (stable across houses).
std::array<double, 3> label_color(const std::string& name);

}  // namespace gaple
