#include "gaple/perception.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "gaple/errors.hpp"
#include "gaple/io.hpp"
#include "gaple/state.hpp"

namespace gaple {

namespace fs = std::filesystem;

namespace {
constexpr double kGradNormClip = 1.0;  // on the mean batch gradient
}

PerceptionLayout PerceptionLayout::make(int num_classes) {
    PerceptionLayout l;
    l.num_classes = num_classes;
    size_t off = 0;
    auto add = [&off](ConvShape& s, int in_c, int out_c, int k, int stride) {
        s = ConvShape{in_c, out_c, k, stride, 0, 0};
        s.w_off = off;
        off += s.weight_count();
        s.b_off = off;
        off += static_cast<size_t>(out_c);
    };
    add(l.enc1, 3, 16, 3, 1);
    add(l.enc2, 16, 32, 3, 2);
    add(l.enc3, 32, 32, 3, 2);
    add(l.dec1, 32, 16, 3, 1);
    add(l.dec2, 16, 16, 3, 1);
    add(l.head_seg, 16, num_classes, 1, 1);
    add(l.head_depth, 16, 1, 1, 1);
    l.total = off;
    return l;
}

namespace {

using Plane = std::vector<double>;

void conv_forward(const ConvShape& s, std::span<const double> params, const Plane& in, int ih,
                  int iw, Plane& out, int& oh, int& ow) {
    const int pad = s.k / 2;
    oh = (ih + 2 * pad - s.k) / s.stride + 1;
    ow = (iw + 2 * pad - s.k) / s.stride + 1;
    out.assign(static_cast<size_t>(s.out_c) * oh * ow, 0.0);
    const double* w = params.data() + s.w_off;
    const double* b = params.data() + s.b_off;
    for (int oc = 0; oc < s.out_c; ++oc) {
        double* outp = out.data() + static_cast<size_t>(oc) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                outp[oy * ow + ox] = b[oc];
            }
        }
        for (int ic = 0; ic < s.in_c; ++ic) {
            const double* inp = in.data() + static_cast<size_t>(ic) * ih * iw;
            const double* wk = w + (static_cast<size_t>(oc) * s.in_c + ic) * s.k * s.k;
            for (int ky = 0; ky < s.k; ++ky) {
                for (int kx = 0; kx < s.k; ++kx) {
                    const double wv = wk[ky * s.k + kx];
                    if (wv == 0.0) continue;
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy * s.stride + ky - pad;
                        if (iy < 0 || iy >= ih) continue;
                        const double* inrow = inp + static_cast<size_t>(iy) * iw;
                        double* outrow = outp + static_cast<size_t>(oy) * ow;
                        for (int ox = 0; ox < ow; ++ox) {
                            const int ix = ox * s.stride + kx - pad;
                            if (ix < 0 || ix >= iw) continue;
                            outrow[ox] += wv * inrow[ix];
                        }
                    }
                }
            }
        }
    }
}

// Accumulates dW/db into grad and the input gradient into din.
void conv_backward(const ConvShape& s, std::span<const double> params, const Plane& in, int ih,
                   int iw, const Plane& dout, int oh, int ow, std::span<double> grad, Plane* din) {
    const int pad = s.k / 2;
    const double* w = params.data() + s.w_off;
    double* dw = grad.data() + s.w_off;
    double* db = grad.data() + s.b_off;
    if (din) din->assign(static_cast<size_t>(s.in_c) * ih * iw, 0.0);
    for (int oc = 0; oc < s.out_c; ++oc) {
        const double* doutp = dout.data() + static_cast<size_t>(oc) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                db[oc] += doutp[oy * ow + ox];
            }
        }
        for (int ic = 0; ic < s.in_c; ++ic) {
            const double* inp = in.data() + static_cast<size_t>(ic) * ih * iw;
            double* dinp = din ? din->data() + static_cast<size_t>(ic) * ih * iw : nullptr;
            const size_t kbase = (static_cast<size_t>(oc) * s.in_c + ic) * s.k * s.k;
            for (int ky = 0; ky < s.k; ++ky) {
                for (int kx = 0; kx < s.k; ++kx) {
                    const double wv = w[kbase + ky * s.k + kx];
                    double acc = 0.0;
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy * s.stride + ky - pad;
                        if (iy < 0 || iy >= ih) continue;
                        const double* inrow = inp + static_cast<size_t>(iy) * iw;
                        double* dinrow = dinp ? dinp + static_cast<size_t>(iy) * iw : nullptr;
                        const double* doutrow = doutp + static_cast<size_t>(oy) * ow;
                        for (int ox = 0; ox < ow; ++ox) {
                            const int ix = ox * s.stride + kx - pad;
                            if (ix < 0 || ix >= iw) continue;
                            acc += doutrow[ox] * inrow[ix];
                            if (dinrow) dinrow[ix] += doutrow[ox] * wv;
                        }
                    }
                    dw[kbase + ky * s.k + kx] += acc;
                }
            }
        }
    }
}

void relu_inplace(Plane& v) {
    for (double& x : v) x = x > 0.0 ? x : 0.0;
}

// Zeroes gradient entries where the matching activation is not positive.
void relu_backward(const Plane& activated, Plane& dv) {
    for (size_t i = 0; i < dv.size(); ++i) {
        if (activated[i] <= 0.0) dv[i] = 0.0;
    }
}

void upsample2(const Plane& in, int c, int ih, int iw, Plane& out) {
    const int oh = ih * 2, ow = iw * 2;
    out.assign(static_cast<size_t>(c) * oh * ow, 0.0);
    for (int ch = 0; ch < c; ++ch) {
        const double* inp = in.data() + static_cast<size_t>(ch) * ih * iw;
        double* outp = out.data() + static_cast<size_t>(ch) * oh * ow;
        for (int y = 0; y < oh; ++y) {
            const double* inrow = inp + static_cast<size_t>(y / 2) * iw;
            for (int x = 0; x < ow; ++x) {
                outp[static_cast<size_t>(y) * ow + x] = inrow[x / 2];
            }
        }
    }
}

void upsample2_backward(const Plane& dout, int c, int oh, int ow, Plane& din) {
    const int ih = oh / 2, iw = ow / 2;
    din.assign(static_cast<size_t>(c) * ih * iw, 0.0);
    for (int ch = 0; ch < c; ++ch) {
        const double* doutp = dout.data() + static_cast<size_t>(ch) * oh * ow;
        double* dinp = din.data() + static_cast<size_t>(ch) * ih * iw;
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                dinp[static_cast<size_t>(y / 2) * iw + x / 2] += doutp[static_cast<size_t>(y) * ow + x];
            }
        }
    }
}

struct Activations {
    int w = 0, h = 0;
    Plane input;                 // 3 x h x w
    Plane enc1, enc2, enc3;      // post-relu
    Plane up1, dec1, up2, dec2;  // post-relu for dec*
    Plane seg_logits, probs, depth;
};

void check_dims(int width, int height) {
    if (width < 4 || height < 4 || width % 4 != 0 || height % 4 != 0) {
        throw std::invalid_argument("perception: dimensions must be positive multiples of 4");
    }
}

void run_perception(const PerceptionLayout& layout, std::span<const double> params, int width,
                    int height, std::span<const double> rgb, Activations& a) {
    check_dims(width, height);
    if (rgb.size() != static_cast<size_t>(width) * height * 3) {
        throw std::invalid_argument("perception: rgb plane size mismatch");
    }
    a.w = width;
    a.h = height;
    a.input.resize(rgb.size());
    for (size_t i = 0; i < rgb.size(); ++i) a.input[i] = rgb[i] - 0.5;  // center the input
    int oh = 0, ow = 0;

    conv_forward(layout.enc1, params, a.input, height, width, a.enc1, oh, ow);
    relu_inplace(a.enc1);
    conv_forward(layout.enc2, params, a.enc1, height, width, a.enc2, oh, ow);
    relu_inplace(a.enc2);
    const int h2 = height / 2, w2 = width / 2;
    conv_forward(layout.enc3, params, a.enc2, h2, w2, a.enc3, oh, ow);
    relu_inplace(a.enc3);
    const int h4 = height / 4, w4 = width / 4;

    upsample2(a.enc3, 32, h4, w4, a.up1);
    conv_forward(layout.dec1, params, a.up1, h2, w2, a.dec1, oh, ow);
    relu_inplace(a.dec1);
    upsample2(a.dec1, 16, h2, w2, a.up2);
    conv_forward(layout.dec2, params, a.up2, height, width, a.dec2, oh, ow);
    relu_inplace(a.dec2);

    conv_forward(layout.head_seg, params, a.dec2, height, width, a.seg_logits, oh, ow);
    conv_forward(layout.head_depth, params, a.dec2, height, width, a.depth, oh, ow);

    // per-pixel softmax over the class planes, max-shifted
    const int C = layout.num_classes;
    const size_t plane = static_cast<size_t>(width) * height;
    a.probs.assign(static_cast<size_t>(C) * plane, 0.0);
    for (size_t px = 0; px < plane; ++px) {
        double mx = a.seg_logits[px];
        for (int c = 1; c < C; ++c) mx = std::max(mx, a.seg_logits[c * plane + px]);
        double denom = 0.0;
        for (int c = 0; c < C; ++c) {
            const double e = std::exp(a.seg_logits[c * plane + px] - mx);
            a.probs[c * plane + px] = e;
            denom += e;
        }
        for (int c = 0; c < C; ++c) a.probs[c * plane + px] /= denom;
    }
}

double loss_from_activations(const Activations& a, const PerceptionSample& sample, double lambda,
                             int num_classes) {
    const size_t plane = static_cast<size_t>(a.w) * a.h;
    double ce = 0.0, mse = 0.0;
    for (size_t px = 0; px < plane; ++px) {
        const int gt = sample.gt_semantic[px];
        ce += -std::log(std::max(a.probs[static_cast<size_t>(gt) * plane + px], 1e-300));
        const double diff = a.depth[px] - sample.gt_depth[px];
        mse += diff * diff;
    }
    (void)num_classes;
    const double n = static_cast<double>(plane);
    return ce / n + lambda * mse / n;
}

// Shared forward+backward; returns the loss and accumulates the gradient.
double loss_and_grad(const PerceptionParams& params, const PerceptionSample& sample, double lambda,
                     std::span<double> grad) {
    const PerceptionLayout layout = PerceptionLayout::make(params.num_classes);
    Activations a;
    run_perception(layout, params.v, sample.width, sample.height, sample.rgb, a);
    const double loss = loss_from_activations(a, sample, lambda, params.num_classes);

    const int width = a.w, height = a.h;
    const int h2 = height / 2, w2 = width / 2, h4 = height / 4, w4 = width / 4;
    const size_t plane = static_cast<size_t>(width) * height;
    const int C = params.num_classes;
    const double inv_n = 1.0 / static_cast<double>(plane);

    Plane dlogits(static_cast<size_t>(C) * plane);
    for (size_t px = 0; px < plane; ++px) {
        const int gt = sample.gt_semantic[px];
        for (int c = 0; c < C; ++c) {
            const double onehot = c == gt ? 1.0 : 0.0;
            dlogits[c * plane + px] = (a.probs[c * plane + px] - onehot) * inv_n;
        }
    }
    Plane ddepth(plane);
    for (size_t px = 0; px < plane; ++px) {
        ddepth[px] = 2.0 * lambda * (a.depth[px] - sample.gt_depth[px]) * inv_n;
    }

    Plane d_dec2_a, d_dec2_b, d_dec2;
    conv_backward(layout.head_seg, params.v, a.dec2, height, width, dlogits, height, width, grad,
                  &d_dec2_a);
    conv_backward(layout.head_depth, params.v, a.dec2, height, width, ddepth, height, width, grad,
                  &d_dec2_b);
    d_dec2.resize(d_dec2_a.size());
    for (size_t i = 0; i < d_dec2.size(); ++i) d_dec2[i] = d_dec2_a[i] + d_dec2_b[i];
    relu_backward(a.dec2, d_dec2);

    Plane d_up2, d_dec1;
    conv_backward(layout.dec2, params.v, a.up2, height, width, d_dec2, height, width, grad, &d_up2);
    upsample2_backward(d_up2, 16, height, width, d_dec1);
    relu_backward(a.dec1, d_dec1);

    Plane d_up1, d_enc3;
    conv_backward(layout.dec1, params.v, a.up1, h2, w2, d_dec1, h2, w2, grad, &d_up1);
    upsample2_backward(d_up1, 32, h2, w2, d_enc3);
    relu_backward(a.enc3, d_enc3);

    Plane d_enc2;
    conv_backward(layout.enc3, params.v, a.enc2, h2, w2, d_enc3, h4, w4, grad, &d_enc2);
    relu_backward(a.enc2, d_enc2);

    Plane d_enc1;
    conv_backward(layout.enc2, params.v, a.enc1, height, width, d_enc2, h2, w2, grad, &d_enc1);
    relu_backward(a.enc1, d_enc1);

    conv_backward(layout.enc1, params.v, a.input, height, width, d_enc1, height, width, grad,
                  nullptr);
    return loss;
}

}  // namespace

PerceptionParams init_perception(int num_classes, uint64_t seed) {
    if (num_classes < 2) {
        throw std::invalid_argument("init_perception: need at least 2 classes");
    }
    const PerceptionLayout layout = PerceptionLayout::make(num_classes);
    PerceptionParams params;
    params.num_classes = num_classes;
    params.v.assign(layout.total, 0.0);
    Rng rng(seed);
    for (const ConvShape* s : {&layout.enc1, &layout.enc2, &layout.enc3, &layout.dec1,
                               &layout.dec2, &layout.head_seg, &layout.head_depth}) {
        // Kaiming-uniform: keeps activation variance stable through the ReLU
        // stack, which a seven-layer net needs to train at all
        const double scale = std::sqrt(6.0 / (static_cast<double>(s->in_c) * s->k * s->k));
        for (size_t i = 0; i < s->weight_count(); ++i) {
            params.v[s->w_off + i] = rng.uniform(-scale, scale);
        }
    }
    return params;
}

PixelPrediction perception_forward(const PerceptionParams& params, int width, int height,
                                   std::span<const double> rgb) {
    const PerceptionLayout layout = PerceptionLayout::make(params.num_classes);
    Activations a;
    run_perception(layout, params.v, width, height, rgb, a);
    PixelPrediction pred;
    pred.width = width;
    pred.height = height;
    pred.num_classes = params.num_classes;
    pred.probs = std::move(a.probs);
    pred.depth = std::move(a.depth);
    return pred;
}

double joint_loss(const PixelPrediction& pred, const PerceptionSample& sample, double lambda) {
    if (pred.width != sample.width || pred.height != sample.height) {
        throw std::invalid_argument("joint_loss: prediction/sample dimension mismatch");
    }
    const size_t plane = static_cast<size_t>(pred.width) * pred.height;
    double ce = 0.0, mse = 0.0;
    for (size_t px = 0; px < plane; ++px) {
        const int gt = sample.gt_semantic[px];
        ce += -std::log(std::max(pred.probs[static_cast<size_t>(gt) * plane + px], 1e-300));
        const double diff = pred.depth[px] - sample.gt_depth[px];
        mse += diff * diff;
    }
    const double n = static_cast<double>(plane);
    return ce / n + lambda * mse / n;
}

std::vector<double> perception_backward(const PerceptionParams& params,
                                        const PerceptionSample& sample, double lambda) {
    const PerceptionLayout layout = PerceptionLayout::make(params.num_classes);
    std::vector<double> grad(layout.total, 0.0);
    loss_and_grad(params, sample, lambda, grad);
    return grad;
}

PerceptionTrainResult train_perception(const PerceptionDataset& dataset, int epochs, double lr,
                                       int batch_size, double lambda, uint64_t seed) {
    if (dataset.samples.empty()) {
        throw DatasetError("train_perception: empty dataset");
    }
    if (batch_size < 1) {
        throw std::invalid_argument("train_perception: batch_size must be >= 1");
    }
    PerceptionTrainResult result;
    result.params = init_perception(dataset.num_classes, mix_seed(seed, 0x70657263ULL));
    const size_t n_params = result.params.v.size();

    Rng rng(mix_seed(seed, 0x7368756666ULL));
    std::vector<size_t> order(dataset.samples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<double> grad(n_params);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (size_t start = 0; start < order.size(); start += batch_size) {
            const size_t end = std::min(order.size(), start + batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (size_t i = start; i < end; ++i) {
                loss_sum += loss_and_grad(result.params, dataset.samples[order[i]], lambda, grad);
            }
            double scale = lr / static_cast<double>(end - start);
            // global-norm clip keeps the occasional loss spike from blowing
            // up the weights
            double norm_sq = 0.0;
            for (double g : grad) norm_sq += g * g;
            const double norm = std::sqrt(norm_sq) / static_cast<double>(end - start);
            if (norm > kGradNormClip) scale *= kGradNormClip / norm;
            for (size_t i = 0; i < n_params; ++i) {
                result.params.v[i] -= scale * grad[i];
            }
        }
        result.epoch_loss.push_back(loss_sum / static_cast<double>(order.size()));
    }
    return result;
}

PerceptionDataset build_dataset(std::span<const std::shared_ptr<const HouseLayout>> layouts,
                                const RenderConfig& cfg, double background_cap, size_t sample_cap,
                                uint64_t seed) {
    if (layouts.empty()) {
        throw DatasetError("build_dataset: no layouts");
    }
    // shared vocabulary across houses, sorted for stability
    std::set<std::string> names;
    for (const auto& layout : layouts) {
        for (size_t id = 1; id < layout->labels.size(); ++id) names.insert(layout->labels[id]);
    }
    PerceptionDataset dataset;
    dataset.labels.push_back("background");
    dataset.labels.insert(dataset.labels.end(), names.begin(), names.end());
    dataset.num_classes = static_cast<int>(dataset.labels.size());
    std::map<std::string, uint16_t> global_id;
    for (size_t i = 0; i < dataset.labels.size(); ++i) {
        global_id[dataset.labels[i]] = static_cast<uint16_t>(i);
    }

    RenderConfig rc = cfg;
    rc.with_rgb = true;
    for (const auto& layout : layouts) {
        std::vector<uint16_t> remap(layout->labels.size(), 0);
        for (size_t id = 1; id < layout->labels.size(); ++id) {
            remap[id] = global_id[layout->labels[id]];
        }
        for (const Pose& pose : reachable_poses(*layout)) {
            RenderOutput frame = render(*layout, pose, rc);
            const size_t plane = static_cast<size_t>(frame.width) * frame.height;
            size_t background = 0;
            for (uint16_t s : frame.semantic) {
                if (s == 0) ++background;
            }
            if (static_cast<double>(background) / static_cast<double>(plane) > background_cap) {
                continue;
            }
            PerceptionSample sample;
            sample.width = frame.width;
            sample.height = frame.height;
            sample.rgb = std::move(frame.rgb);
            sample.gt_semantic.resize(plane);
            for (size_t i = 0; i < plane; ++i) sample.gt_semantic[i] = remap[frame.semantic[i]];
            sample.gt_depth.resize(plane);
            for (size_t i = 0; i < plane; ++i) sample.gt_depth[i] = frame.depth[i] / cfg.max_range;
            dataset.samples.push_back(std::move(sample));
        }
    }
    if (dataset.samples.empty()) {
        throw DatasetError("build_dataset: no frames survived the background filter");
    }
    Rng rng(mix_seed(seed, 0x64617461ULL));
    rng.shuffle(dataset.samples);
    if (dataset.samples.size() > sample_cap) dataset.samples.resize(sample_cap);
    return dataset;
}

double mean_iou(std::span<const uint16_t> pred, std::span<const uint16_t> gt, int num_classes) {
    if (pred.size() != gt.size()) {
        throw std::invalid_argument("mean_iou: dimension mismatch");
    }
    std::vector<long> inter(num_classes, 0), in_pred(num_classes, 0), in_gt(num_classes, 0);
    for (size_t i = 0; i < pred.size(); ++i) {
        ++in_pred[pred[i]];
        ++in_gt[gt[i]];
        if (pred[i] == gt[i]) ++inter[gt[i]];
    }
    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < num_classes; ++c) {
        if (in_gt[c] == 0) continue;
        ++present;
        const long uni = in_pred[c] + in_gt[c] - inter[c];
        sum += static_cast<double>(inter[c]) / static_cast<double>(uni);
    }
    return present == 0 ? 0.0 : sum / present;
}

double depth_rmse(std::span<const double> pred, std::span<const double> gt) {
    if (pred.size() != gt.size()) {
        throw std::invalid_argument("depth_rmse: dimension mismatch");
    }
    double sq = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - gt[i];
        sq += d * d;
    }
    return std::sqrt(sq / static_cast<double>(pred.size()));
}

RenderOutput corrupt_observation(const RenderOutput& render, int num_labels, double max_range,
                                 double flip_p, double depth_sigma, Rng& rng) {
    if (flip_p < 0.0 || flip_p >= 1.0 + 1e-12) {
        // flip_p == 1 is allowed: every pixel flips
        if (flip_p < 0.0 || flip_p > 1.0) {
            throw std::invalid_argument("corrupt_observation: flip_p must be in [0, 1]");
        }
    }
    if (depth_sigma < 0.0) {
        throw std::invalid_argument("corrupt_observation: depth_sigma must be >= 0");
    }
    RenderOutput out = render;
    if (flip_p > 0.0 && num_labels >= 2) {
        for (uint16_t& label : out.semantic) {
            if (!rng.chance(flip_p)) continue;
            const int other = rng.uniform_index(static_cast<size_t>(num_labels - 1));
            label = static_cast<uint16_t>(other >= label ? other + 1 : other);
        }
    }
    if (depth_sigma > 0.0) {
        for (double& d : out.depth) {
            d = std::clamp(d * std::exp(depth_sigma * rng.normal()), 1e-9, max_range);
        }
    }
    return out;
}

RenderOutput predict_render(const PerceptionParams& params, const RenderOutput& gt_render,
                            double max_range) {
    if (gt_render.rgb.empty()) {
        throw std::invalid_argument("predict_render: render has no rgb data");
    }
    const PixelPrediction pred =
        perception_forward(params, gt_render.width, gt_render.height, gt_render.rgb);
    RenderOutput out;
    out.width = gt_render.width;
    out.height = gt_render.height;
    out.rgb = gt_render.rgb;
    const size_t plane = static_cast<size_t>(out.width) * out.height;
    out.semantic.resize(plane);
    out.depth.resize(plane);
    for (size_t px = 0; px < plane; ++px) {
        int best = 0;
        double best_p = pred.probs[px];
        for (int c = 1; c < pred.num_classes; ++c) {
            const double p = pred.probs[static_cast<size_t>(c) * plane + px];
            if (p > best_p) {
                best_p = p;
                best = c;
            }
        }
        out.semantic[px] = static_cast<uint16_t>(best);
        out.depth[px] = std::clamp(pred.depth[px], 1e-6, 1.0) * max_range;
    }
    return out;
}

void save_perception(const std::string& path, const PerceptionParams& params) {
    write_param_file(path, "gaple-percep v1", params.v);
}

PerceptionParams load_perception(const std::string& path) {
    PerceptionParams params;
    params.v = read_param_file(path, "gaple-percep v1");
    // recover the class count from the parameter total
    for (int c = 2; c <= 4096; ++c) {
        if (PerceptionLayout::make(c).total == params.v.size()) {
            params.num_classes = c;
            return params;
        }
    }
    throw IoError(path + ": parameter count matches no class count");
}

void save_dataset(const std::string& dir, const PerceptionDataset& dataset) {
    fs::create_directories(dir);
    std::ostringstream manifest;
    manifest << "gaple-dataset v1\n" << dataset.num_classes << '\n' << dataset.samples.size() << '\n';
    for (const std::string& label : dataset.labels) manifest << label << '\n';
    write_text_file((fs::path(dir) / "manifest.txt").string(), manifest.str());

    for (size_t i = 0; i < dataset.samples.size(); ++i) {
        const PerceptionSample& s = dataset.samples[i];
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05zu.bin", i);
        std::ofstream out(fs::path(dir) / name, std::ios::binary);
        if (!out) throw IoError(std::string(name) + ": cannot open for writing");
        out << "gaple-frame v1\n" << s.width << ' ' << s.height << '\n';
        const size_t plane = static_cast<size_t>(s.width) * s.height;
        std::vector<unsigned char> buf(plane * 2);
        for (size_t p = 0; p < plane; ++p) {
            buf[2 * p] = static_cast<unsigned char>(s.gt_semantic[p] & 0xff);
            buf[2 * p + 1] = static_cast<unsigned char>(s.gt_semantic[p] >> 8);
        }
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        auto write_f32 = [&out](std::span<const double> values) {
            std::vector<unsigned char> raw(values.size() * 4);
            for (size_t p = 0; p < values.size(); ++p) {
                const float f = static_cast<float>(values[p]);
                uint32_t bits;
                std::memcpy(&bits, &f, 4);
                for (int b = 0; b < 4; ++b) {
                    raw[4 * p + b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xff);
                }
            }
            out.write(reinterpret_cast<const char*>(raw.data()),
                      static_cast<std::streamsize>(raw.size()));
        };
        write_f32(s.gt_depth);
        write_f32(s.rgb);
        if (!out) throw IoError(std::string(name) + ": write failed");
    }
}

PerceptionDataset load_dataset(const std::string& dir) {
    const std::string manifest = read_text_file((fs::path(dir) / "manifest.txt").string());
    std::istringstream in(manifest);
    std::string header;
    std::getline(in, header);
    if (header != "gaple-dataset v1") {
        throw IoError(dir + "/manifest.txt: bad magic '" + header + "'");
    }
    PerceptionDataset dataset;
    size_t count = 0;
    in >> dataset.num_classes >> count;
    in.ignore();
    for (int i = 0; i < dataset.num_classes; ++i) {
        std::string label;
        if (!std::getline(in, label)) throw IoError(dir + "/manifest.txt: truncated label table");
        dataset.labels.push_back(label);
    }

    for (size_t i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05zu.bin", i);
        const fs::path path = fs::path(dir) / name;
        std::ifstream frame(path, std::ios::binary);
        if (!frame) throw IoError(path.string() + ": file not found");
        std::string magic;
        std::getline(frame, magic);
        if (magic != "gaple-frame v1") throw IoError(path.string() + ": bad magic");
        PerceptionSample s;
        frame >> s.width >> s.height;
        frame.ignore();
        const size_t plane = static_cast<size_t>(s.width) * s.height;
        std::vector<unsigned char> buf(plane * 2);
        frame.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        s.gt_semantic.resize(plane);
        for (size_t p = 0; p < plane; ++p) {
            s.gt_semantic[p] = static_cast<uint16_t>(buf[2 * p] | (buf[2 * p + 1] << 8));
        }
        auto read_f32 = [&frame, &path](size_t n) {
            std::vector<unsigned char> raw(n * 4);
            frame.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
            if (static_cast<size_t>(frame.gcount()) != raw.size()) {
                throw IoError(path.string() + ": truncated frame data");
            }
            std::vector<double> values(n);
            for (size_t p = 0; p < n; ++p) {
                uint32_t bits = 0;
                for (int b = 0; b < 4; ++b) bits |= static_cast<uint32_t>(raw[4 * p + b]) << (8 * b);
                float f;
                std::memcpy(&f, &bits, 4);
                values[p] = f;
            }
            return values;
        };
        s.gt_depth = read_f32(plane);
        s.rgb = read_f32(plane * 3);
        dataset.samples.push_back(std::move(s));
    }
    return dataset;
}

}  // namespace gaple
