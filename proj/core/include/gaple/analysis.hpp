#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "gaple/render.hpp"
#include "gaple/state.hpp"

namespace gaple {

// Step distance between two poses with the same orientation: |dx| + |dy|.
// Throws on heading mismatch.
int physical_distance(const Pose& a, const Pose& b);

// L1 distance between maps normalized to unit L1 mass (a zero-mass map maps
// to the zero map). Symmetric, zero on equal inputs, obeys the triangle
// inequality.
double feature_distance(std::span<const double> f1, std::span<const double> f2);

enum class FeatureExtractor { Depth10, Rgb10 };

// 100-value feature map of a pose: block-averaged normalized depth, or
// block-averaged grayscale intensity for the appearance baseline.
std::vector<double> extract_features(const HouseLayout& layout, const Pose& pose,
                                     FeatureExtractor extractor, const RenderConfig& cfg);

// Mean pairwise feature distance bucketed by physical step distance.
// Only bins that received samples are reported.
struct DistanceCurve {
    std::vector<int> bins;
    std::vector<double> mean_feat_dist;
    std::vector<long> count;
};

// Samples same-heading pose pairs (sample_cap draws), keeps those within
// max_steps, and averages feature distances per distance bin. Deterministic
// per seed.
DistanceCurve build_curve(const HouseLayout& layout, FeatureExtractor extractor,
                          const RenderConfig& cfg, int max_steps, long sample_cap, uint64_t seed);

// Spearman rank correlation with average ranks for ties; NaN-free for n >= 2
// unless one side is constant (returns 0 then).
double spearman_rank_correlation(std::span<const double> xs, std::span<const double> ys);

// CSV: bin,mean_dist,count
void write_curve_csv(std::ostream& out, const DistanceCurve& curve);

}  // namespace gaple
