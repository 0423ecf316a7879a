#include "gaple/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace gaple {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
    const double c = v * s;
    const double hp = h * 6.0;
    const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    if (hp < 1)      { r = c; g = x; }
    else if (hp < 2) { r = x; g = c; }
    else if (hp < 3) { g = c; b = x; }
    else if (hp < 4) { g = x; b = c; }
    else if (hp < 5) { r = x; b = c; }
    else             { r = c; b = x; }
    const double m = v - c;
    return {r + m, g + m, b + m};
}

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::array<double, 3> kWallColor{0.52, 0.52, 0.56};
constexpr std::array<double, 3> kFloorColor{0.34, 0.28, 0.24};
constexpr std::array<double, 3> kCeilingColor{0.78, 0.78, 0.84};

struct ColumnHit {
    bool hit = false;
    double face_dist = 0.0;  // perpendicular distance to the entry face, cells
    uint16_t label = 0;
};

// DDA over the cell grid. The ray parameter of the unnormalized direction
// (dir + cameraX * plane) equals the perpendicular distance along the view
// axis, which keeps the projection free of fisheye distortion.
ColumnHit cast_column(const HouseLayout& layout, const Pose& pose, double rx, double ry,
                      double max_range_cells) {
    int mx = pose.x, my = pose.y;
    const double delta_x = rx == 0.0 ? kInf : std::fabs(1.0 / rx);
    const double delta_y = ry == 0.0 ? kInf : std::fabs(1.0 / ry);
    const int step_x = rx < 0 ? -1 : 1;
    const int step_y = ry < 0 ? -1 : 1;
    // eye sits at the cell center, so the first boundary is half a cell away
    double side_x = 0.5 * delta_x;
    double side_y = 0.5 * delta_y;

    ColumnHit out;
    while (true) {
        double t;
        if (side_x < side_y) {
            t = side_x;
            side_x += delta_x;
            mx += step_x;
        } else {
            t = side_y;
            side_y += delta_y;
            my += step_y;
        }
        if (t > max_range_cells) return out;
        if (!layout.in_bounds(mx, my)) return out;
        const Cell& cell = layout.at(mx, my);
        if (cell.kind != CellKind::Floor) {
            out.hit = true;
            out.face_dist = t;
            out.label = cell.kind == CellKind::Object ? cell.label : 0;
            return out;
        }
    }
}

}  // namespace

std::array<double, 3> label_color(const std::string& name) {
    const uint64_t h = fnv1a(name);
    const double hue = static_cast<double>(h % 360) / 360.0;
    const double sat = 0.6 + 0.3 * (static_cast<double>((h >> 9) % 100) / 100.0);
    return hsv_to_rgb(hue, sat, 0.95);
}

RenderOutput render(const HouseLayout& layout, const Pose& pose, const RenderConfig& cfg) {
    if (cfg.width < 8 || cfg.height < 8) {
        throw std::invalid_argument("render: width and height must be >= 8");
    }
    if (!layout.is_valid_pose(pose)) {
        throw std::invalid_argument("render: pose is not on a floor cell");
    }

    const int w = cfg.width, h = cfg.height;
    RenderOutput out;
    out.width = w;
    out.height = h;
    out.semantic.assign(static_cast<size_t>(w) * h, 0);
    out.depth.assign(static_cast<size_t>(w) * h, cfg.max_range);
    if (cfg.with_rgb) out.rgb.assign(static_cast<size_t>(w) * h * 3, 0.0);

    const double tan_half = std::tan(0.5 * cfg.fov_deg * std::numbers::pi / 180.0);
    const double focal = 0.5 * w / tan_half;  // pixels
    const double eye_h = 0.5 * kWallHeight;   // meters above the floor
    const GridCoord dir = heading_dir(pose.heading);
    // right-perpendicular of the heading (y grows downward)
    const double plane_x = -dir.y * tan_half;
    const double plane_y = dir.x * tan_half;
    const double max_range_cells = cfg.max_range / kCellSize;

    auto shade = [&](double depth_m) { return 1.0 - 0.55 * depth_m / cfg.max_range; };
    auto put_rgb = [&](int x, int y, const std::array<double, 3>& base, double depth_m) {
        const double s = shade(depth_m);
        const size_t px = out.pixel(x, y);
        const size_t plane = static_cast<size_t>(w) * h;
        out.rgb[px] = base[0] * s;
        out.rgb[plane + px] = base[1] * s;
        out.rgb[2 * plane + px] = base[2] * s;
    };

    for (int c = 0; c < w; ++c) {
        const double cam = 2.0 * (c + 0.5) / w - 1.0;
        const double rx = dir.x + cam * plane_x;
        const double ry = dir.y + cam * plane_y;
        ColumnHit hit = cast_column(layout, pose, rx, ry, max_range_cells);
        double band_depth = 0.0;
        if (hit.hit) {
            band_depth = (hit.face_dist + 0.5) * kCellSize;
            if (band_depth > cfg.max_range) hit.hit = false;
        }

        if (!hit.hit) {
            // whole column is background at max range
            if (cfg.with_rgb) {
                for (int r = 0; r < h; ++r) {
                    const double off = r + 0.5 - 0.5 * h;
                    put_rgb(c, r, off >= 0 ? kFloorColor : kCeilingColor, cfg.max_range);
                }
            }
            continue;
        }

        const double face_m = hit.face_dist * kCellSize;
        const double half_band = focal * eye_h / face_m;  // pixels
        const std::array<double, 3> band_color =
            hit.label > 0 ? label_color(layout.labels[hit.label]) : kWallColor;

        for (int r = 0; r < h; ++r) {
            const double off = r + 0.5 - 0.5 * h;
            if (std::fabs(off) <= half_band) {
                const size_t px = out.pixel(c, r);
                out.semantic[px] = hit.label;
                out.depth[px] = band_depth;
                if (cfg.with_rgb) put_rgb(c, r, band_color, band_depth);
            } else {
                // floor (below center) or ceiling (above) cast
                const double bg = std::min(focal * eye_h / std::fabs(off), cfg.max_range);
                out.depth[out.pixel(c, r)] = bg;
                if (cfg.with_rgb) put_rgb(c, r, off >= 0 ? kFloorColor : kCeilingColor, bg);
            }
        }
    }
    return out;
}

}  // namespace gaple
