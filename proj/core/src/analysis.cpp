#include "gaple/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gaple/io.hpp"
#include "gaple/rng.hpp"

namespace gaple {

int physical_distance(const Pose& a, const Pose& b) {
    if (a.heading != b.heading) {
        throw std::invalid_argument("physical_distance: poses must share a heading");
    }
    return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

double feature_distance(std::span<const double> f1, std::span<const double> f2) {
    if (f1.size() != f2.size()) {
        throw std::invalid_argument("feature_distance: dimension mismatch");
    }
    auto mass = [](std::span<const double> f) {
        double m = 0.0;
        for (double v : f) m += std::fabs(v);
        return m;
    };
    const double m1 = mass(f1), m2 = mass(f2);
    const double s1 = m1 > 0.0 ? 1.0 / m1 : 0.0;
    const double s2 = m2 > 0.0 ? 1.0 / m2 : 0.0;
    double d = 0.0;
    for (size_t i = 0; i < f1.size(); ++i) {
        d += std::fabs(f1[i] * s1 - f2[i] * s2);
    }
    return d;
}

std::vector<double> extract_features(const HouseLayout& layout, const Pose& pose,
                                     FeatureExtractor extractor, const RenderConfig& cfg) {
    RenderConfig rc = cfg;
    rc.with_rgb = extractor == FeatureExtractor::Rgb10;
    const RenderOutput frame = render(layout, pose, rc);
    const size_t plane = static_cast<size_t>(frame.width) * frame.height;
    std::vector<double> grid(plane);
    if (extractor == FeatureExtractor::Depth10) {
        for (size_t i = 0; i < plane; ++i) grid[i] = frame.depth[i] / cfg.max_range;
    } else {
        for (size_t i = 0; i < plane; ++i) {
            grid[i] = (frame.rgb[i] + frame.rgb[plane + i] + frame.rgb[2 * plane + i]) / 3.0;
        }
    }
    const std::array<double, 100> ds = downsample10(frame.width, frame.height, grid);
    return std::vector<double>(ds.begin(), ds.end());
}

DistanceCurve build_curve(const HouseLayout& layout, FeatureExtractor extractor,
                          const RenderConfig& cfg, int max_steps, long sample_cap, uint64_t seed) {
    std::vector<GridCoord> floors;
    for (int y = 0; y < layout.height; ++y) {
        for (int x = 0; x < layout.width; ++x) {
            if (layout.is_floor(x, y)) floors.push_back({x, y});
        }
    }
    if (floors.size() < 2) {
        throw std::invalid_argument("build_curve: layout needs at least two floor cells");
    }

    // features for every pose up front; pair sampling then costs nothing
    std::vector<std::vector<double>> features(floors.size() * 4);
    for (size_t i = 0; i < floors.size(); ++i) {
        for (int h = 0; h < 4; ++h) {
            const Pose p{floors[i].x, floors[i].y, static_cast<Heading>(h)};
            features[i * 4 + h] = extract_features(layout, p, extractor, cfg);
        }
    }

    std::vector<double> sums(static_cast<size_t>(max_steps) + 1, 0.0);
    std::vector<long> counts(static_cast<size_t>(max_steps) + 1, 0);
    Rng rng(mix_seed(seed, static_cast<uint64_t>(extractor)));
    for (long s = 0; s < sample_cap; ++s) {
        const int h = rng.uniform_index(4);
        const size_t i = rng.uniform_index(floors.size());
        const size_t j = rng.uniform_index(floors.size());
        const int d = std::abs(floors[i].x - floors[j].x) + std::abs(floors[i].y - floors[j].y);
        if (d > max_steps) continue;
        sums[d] += feature_distance(features[i * 4 + h], features[j * 4 + h]);
        ++counts[d];
    }

    DistanceCurve curve;
    for (int d = 0; d <= max_steps; ++d) {
        if (counts[d] == 0) continue;
        curve.bins.push_back(d);
        curve.mean_feat_dist.push_back(sums[d] / static_cast<double>(counts[d]));
        curve.count.push_back(counts[d]);
    }
    return curve;
}

namespace {

std::vector<double> ranks_of(std::span<const double> xs) {
    const size_t n = xs.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_rank_correlation(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2) {
        throw std::invalid_argument("spearman_rank_correlation: need matching sizes >= 2");
    }
    const std::vector<double> rx = ranks_of(xs);
    const std::vector<double> ry = ranks_of(ys);
    const double n = static_cast<double>(xs.size());
    double mean = (n + 1.0) / 2.0;
    double cov = 0.0, var_x = 0.0, var_y = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        cov += (rx[i] - mean) * (ry[i] - mean);
        var_x += (rx[i] - mean) * (rx[i] - mean);
        var_y += (ry[i] - mean) * (ry[i] - mean);
    }
    if (var_x == 0.0 || var_y == 0.0) return 0.0;
    return cov / std::sqrt(var_x * var_y);
}

void write_curve_csv(std::ostream& out, const DistanceCurve& curve) {
    out << "bin,mean_dist,count\n";
    for (size_t i = 0; i < curve.bins.size(); ++i) {
        out << curve.bins[i] << ',' << format_double(curve.mean_feat_dist[i]) << ','
            << curve.count[i] << '\n';
    }
}

}  // namespace gaple
