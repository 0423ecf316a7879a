#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gaple/layout.hpp"
#include "gaple/render.hpp"
#include "gaple/rng.hpp"

namespace gaple {

// Small fully-convolutional encoder-decoder predicting per-pixel class
// probabilities and normalized depth from RGB. Fixed stack:
//   enc1 3->16 3x3/1, enc2 16->32 3x3/2, enc3 32->32 3x3/2,
//   dec1 (up2) 32->16 3x3/1, dec2 (up2) 16->16 3x3/1,
//   head_seg 16->C 1x1, head_depth 16->1 1x1
// ReLU between layers, per-pixel softmax on the segmentation head, linear
// depth head. Input dimensions must be multiples of 4.
struct ConvShape {
    int in_c, out_c, k, stride;
    size_t w_off, b_off;
    size_t weight_count() const {
        return static_cast<size_t>(out_c) * in_c * k * k;
    }
};

struct PerceptionLayout {
    int num_classes = 0;
    ConvShape enc1, enc2, enc3, dec1, dec2, head_seg, head_depth;
    size_t total = 0;
    static PerceptionLayout make(int num_classes);
};

struct PerceptionParams {
    int num_classes = 0;
    std::vector<double> v;
};

PerceptionParams init_perception(int num_classes, uint64_t seed);

// Planar layout: probs[c * H*W + y*W + x], depth[y*W + x].
struct PixelPrediction {
    int width = 0, height = 0, num_classes = 0;
    std::vector<double> probs;
    std::vector<double> depth;
};

PixelPrediction perception_forward(const PerceptionParams& params, int width, int height,
                                   std::span<const double> rgb);

struct PerceptionSample {
    int width = 0, height = 0;
    std::vector<double> rgb;           // 3 planes, values in [0, 1]
    std::vector<uint16_t> gt_semantic; // global label ids
    std::vector<double> gt_depth;      // normalized to [0, 1] by max_range
};

// Per-pixel cross entropy plus lambda-weighted mean-square depth error:
//   L = (1/N) sum_i -log p_i[gt_i]  +  lambda * (1/N) sum_i (d_i - d_i*)^2
double joint_loss(const PixelPrediction& pred, const PerceptionSample& sample, double lambda);

// Exact gradient of joint_loss with respect to the flat parameter vector.
std::vector<double> perception_backward(const PerceptionParams& params,
                                        const PerceptionSample& sample, double lambda);

struct PerceptionDataset {
    int num_classes = 0;
    std::vector<std::string> labels;  // global vocabulary, labels[0] = background
    std::vector<PerceptionSample> samples;
};

// Renders every reachable pose of every layout, drops frames whose background
// fraction exceeds background_cap, remaps per-house labels onto a shared
// vocabulary, and uniformly subsamples to sample_cap. Deterministic per seed.
PerceptionDataset build_dataset(std::span<const std::shared_ptr<const HouseLayout>> layouts,
                                const RenderConfig& cfg, double background_cap,
                                size_t sample_cap, uint64_t seed);

struct PerceptionTrainResult {
    PerceptionParams params;
    std::vector<double> epoch_loss;  // mean joint loss per epoch
};

// Mini-batch SGD over the shuffled dataset; deterministic per seed.
PerceptionTrainResult train_perception(const PerceptionDataset& dataset, int epochs, double lr,
                                       int batch_size, double lambda, uint64_t seed);

// Mean over classes present in gt of |pred n gt| / |pred u gt|.
double mean_iou(std::span<const uint16_t> pred, std::span<const uint16_t> gt, int num_classes);
double depth_rmse(std::span<const double> pred, std::span<const double> gt);

// Ablation noise model: each semantic pixel flips to a uniformly random other
// label with probability flip_p; depth is scaled by per-pixel lognormal noise
// exp(depth_sigma * N(0,1)) and clamped to (0, max_range]. Parameters 0 give
// the identity (and leave the rng untouched).
RenderOutput corrupt_observation(const RenderOutput& render, int num_labels, double max_range,
                                 double flip_p, double depth_sigma, Rng& rng);

// Runs the perception net on a rendered frame and repackages argmax labels
// and rescaled depth as an observation for the policy pipeline.
RenderOutput predict_render(const PerceptionParams& params, const RenderOutput& gt_render,
                            double max_range);

// Checkpoint: "gaple-percep v1" header, then the class count is recoverable
// from the parameter count.
void save_perception(const std::string& path, const PerceptionParams& params);
PerceptionParams load_perception(const std::string& path);

// Directory of per-frame binary records plus a manifest.
void save_dataset(const std::string& dir, const PerceptionDataset& dataset);
PerceptionDataset load_dataset(const std::string& dir);

}  // namespace gaple
