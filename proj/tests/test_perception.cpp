#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "gaple/errors.hpp"
#include "gaple/generate.hpp"
#include "gaple/perception.hpp"
#include "gaple/rng.hpp"

using namespace gaple;

namespace {

PerceptionSample random_sample(int w, int h, int num_classes, uint64_t seed) {
    Rng rng(seed);
    PerceptionSample s;
    s.width = w;
    s.height = h;
    s.rgb.resize(static_cast<size_t>(w) * h * 3);
    for (double& v : s.rgb) v = rng.uniform();
    s.gt_semantic.resize(static_cast<size_t>(w) * h);
    for (uint16_t& v : s.gt_semantic) v = static_cast<uint16_t>(rng.uniform_index(num_classes));
    s.gt_depth.resize(static_cast<size_t>(w) * h);
    for (double& v : s.gt_depth) v = rng.uniform();
    return s;
}

PerceptionParams random_perception(int num_classes, uint64_t seed) {
    PerceptionParams params = init_perception(num_classes, seed);
    Rng rng(mix_seed(seed, 2));
    for (double& v : params.v) v += rng.uniform(-0.03, 0.03);
    return params;
}

// Second implementation used as an oracle: per-output-pixel gather loops, no
// shared helpers with the library code.
std::vector<double> ref_conv(const std::vector<double>& in, int ic, int ih, int iw,
                             const std::vector<double>& params, const ConvShape& s, bool relu) {
    const int pad = s.k / 2;
    const int oh = (ih + 2 * pad - s.k) / s.stride + 1;
    const int ow = (iw + 2 * pad - s.k) / s.stride + 1;
    std::vector<double> out(static_cast<size_t>(s.out_c) * oh * ow);
    for (int oc = 0; oc < s.out_c; ++oc) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = params[s.b_off + oc];
                for (int c = 0; c < ic; ++c) {
                    for (int ky = 0; ky < s.k; ++ky) {
                        for (int kx = 0; kx < s.k; ++kx) {
                            const int iy = oy * s.stride + ky - pad;
                            const int ix = ox * s.stride + kx - pad;
                            if (iy < 0 || iy >= ih || ix < 0 || ix >= iw) continue;
                            acc += in[(static_cast<size_t>(c) * ih + iy) * iw + ix] *
                                   params[s.w_off +
                                          ((static_cast<size_t>(oc) * ic + c) * s.k + ky) * s.k +
                                          kx];
                        }
                    }
                }
                out[(static_cast<size_t>(oc) * oh + oy) * ow + ox] =
                    relu && acc < 0 ? 0.0 : acc;
            }
        }
    }
    return out;
}

std::vector<double> ref_upsample(const std::vector<double>& in, int c, int ih, int iw) {
    std::vector<double> out(static_cast<size_t>(c) * ih * 2 * iw * 2);
    for (int ch = 0; ch < c; ++ch) {
        for (int y = 0; y < ih * 2; ++y) {
            for (int x = 0; x < iw * 2; ++x) {
                out[(static_cast<size_t>(ch) * ih * 2 + y) * iw * 2 + x] =
                    in[(static_cast<size_t>(ch) * ih + y / 2) * iw + x / 2];
            }
        }
    }
    return out;
}

PixelPrediction reference_forward(const PerceptionParams& p, const PerceptionSample& s) {
    const PerceptionLayout l = PerceptionLayout::make(p.num_classes);
    const int w = s.width, h = s.height;
    auto a1 = ref_conv(s.rgb, 3, h, w, p.v, l.enc1, true);
    auto a2 = ref_conv(a1, 16, h, w, p.v, l.enc2, true);
    auto a3 = ref_conv(a2, 32, h / 2, w / 2, p.v, l.enc3, true);
    auto u1 = ref_upsample(a3, 32, h / 4, w / 4);
    auto a4 = ref_conv(u1, 32, h / 2, w / 2, p.v, l.dec1, true);
    auto u2 = ref_upsample(a4, 16, h / 2, w / 2);
    auto a5 = ref_conv(u2, 16, h, w, p.v, l.dec2, true);
    auto logits = ref_conv(a5, 16, h, w, p.v, l.head_seg, false);
    auto depth = ref_conv(a5, 16, h, w, p.v, l.head_depth, false);

    PixelPrediction pred;
    pred.width = w;
    pred.height = h;
    pred.num_classes = p.num_classes;
    pred.depth = depth;
    const size_t plane = static_cast<size_t>(w) * h;
    pred.probs.resize(static_cast<size_t>(p.num_classes) * plane);
    for (size_t px = 0; px < plane; ++px) {
        double mx = logits[px];
        for (int c = 1; c < p.num_classes; ++c) mx = std::max(mx, logits[c * plane + px]);
        double denom = 0;
        for (int c = 0; c < p.num_classes; ++c) {
            pred.probs[c * plane + px] = std::exp(logits[c * plane + px] - mx);
            denom += pred.probs[c * plane + px];
        }
        for (int c = 0; c < p.num_classes; ++c) pred.probs[c * plane + px] /= denom;
    }
    return pred;
}

}  // namespace

TEST_CASE("zero parameters give uniform classes and zero depth") {
    const int C = 7;
    PerceptionParams params;
    params.num_classes = C;
    params.v.assign(PerceptionLayout::make(C).total, 0.0);
    const PerceptionSample s = random_sample(8, 8, C, 9);
    const PixelPrediction pred = perception_forward(params, s.width, s.height, s.rgb);
    for (double p : pred.probs) CHECK(p == doctest::Approx(1.0 / C).epsilon(1e-9));
    for (double d : pred.depth) CHECK(d == 0.0);
}

TEST_CASE("per-pixel probabilities sum to one") {
    const PerceptionParams params = random_perception(5, 42);
    const PerceptionSample s = random_sample(12, 8, 5, 43);
    const PixelPrediction pred = perception_forward(params, s.width, s.height, s.rgb);
    const size_t plane = static_cast<size_t>(s.width) * s.height;
    for (size_t px = 0; px < plane; ++px) {
        double sum = 0.0;
        for (int c = 0; c < 5; ++c) sum += pred.probs[c * plane + px];
        CHECK(std::fabs(sum - 1.0) < 1e-6);
    }
}

TEST_CASE("forward matches the independent gather-loop reference") {
    for (uint64_t seed : {10, 11, 12}) {
        const int C = 4;
        const PerceptionParams params = random_perception(C, seed);
        const PerceptionSample s = random_sample(8, 8, C, seed + 50);
        const PixelPrediction a = perception_forward(params, s.width, s.height, s.rgb);
        const PixelPrediction b = reference_forward(params, s);
        REQUIRE(a.probs.size() == b.probs.size());
        for (size_t i = 0; i < a.probs.size(); ++i) {
            CHECK(a.probs[i] == doctest::Approx(b.probs[i]).epsilon(1e-10));
        }
        for (size_t i = 0; i < a.depth.size(); ++i) {
            CHECK(a.depth[i] == doctest::Approx(b.depth[i]).epsilon(1e-10));
        }
    }
}

TEST_CASE("forward rejects bad dimensions") {
    const PerceptionParams params = random_perception(4, 1);
    std::vector<double> rgb(3 * 10 * 10, 0.5);
    CHECK_THROWS_AS(perception_forward(params, 10, 10, rgb), std::invalid_argument);
}

TEST_CASE("joint loss analytic values") {
    const int C = 10;
    const int w = 4, h = 4;
    const size_t plane = w * h;
    PerceptionSample s;
    s.width = w;
    s.height = h;
    s.gt_semantic.assign(plane, 3);
    s.gt_depth.assign(plane, 0.25);

    PixelPrediction pred;
    pred.width = w;
    pred.height = h;
    pred.num_classes = C;
    SUBCASE("perfect prediction is exactly zero") {
        pred.probs.assign(C * plane, 0.0);
        for (size_t px = 0; px < plane; ++px) pred.probs[3 * plane + px] = 1.0;
        pred.depth = s.gt_depth;
        CHECK(joint_loss(pred, s, 0.01) == 0.0);
    }
    SUBCASE("uniform probabilities with exact depth give ln C") {
        pred.probs.assign(C * plane, 1.0 / C);
        pred.depth = s.gt_depth;
        const double loss = joint_loss(pred, s, 0.7);
        CHECK(std::fabs(loss - std::log(10.0)) < 1e-9);
        CHECK(loss == doctest::Approx(2.302585).epsilon(1e-6));
    }
    SUBCASE("composite with constant 0.5 depth error") {
        pred.probs.assign(C * plane, 1.0 / C);
        pred.depth.assign(plane, 0.75);  // error 0.5 everywhere
        const double loss = joint_loss(pred, s, 0.01);
        CHECK(std::fabs(loss - (std::log(10.0) + 0.01 * 0.25)) < 1e-9);
        CHECK(loss == doctest::Approx(2.305085).epsilon(1e-6));
    }
}

TEST_CASE("depth gradient vanishes where the depth term does") {
    const int C = 4;
    const PerceptionLayout layout = PerceptionLayout::make(C);
    const PerceptionParams params = random_perception(C, 60);
    PerceptionSample s = random_sample(8, 8, C, 61);

    SUBCASE("lambda = 0 removes the depth head from the gradient") {
        const std::vector<double> grad = perception_backward(params, s, 0.0);
        for (size_t i = 0; i < layout.head_depth.weight_count() + 1; ++i) {
            CHECK(grad[layout.head_depth.w_off + i] == 0.0);
        }
    }
    SUBCASE("exact depth means a stationary depth term") {
        const PixelPrediction pred = perception_forward(params, s.width, s.height, s.rgb);
        s.gt_depth = pred.depth;  // d == d*
        const std::vector<double> grad = perception_backward(params, s, 0.5);
        for (size_t i = 0; i < layout.head_depth.weight_count() + 1; ++i) {
            CHECK(grad[layout.head_depth.w_off + i] == doctest::Approx(0.0).epsilon(1e-15));
        }
    }
}

TEST_CASE("perception gradient matches central finite differences") {
    Rng coord_rng(5150);
    for (int config = 0; config < 10; ++config) {
        CAPTURE(config);
        const int C = 3 + config % 3;
        PerceptionParams params = random_perception(C, 700 + config);
        const PerceptionSample s = random_sample(8, 8, C, 800 + config);
        const double lambda = config % 2 == 0 ? 0.01 : 0.3;

        const std::vector<double> grad = perception_backward(params, s, lambda);
        const PerceptionLayout layout = PerceptionLayout::make(C);
        const ConvShape* blocks[] = {&layout.enc1, &layout.enc2,     &layout.enc3,
                                     &layout.dec1, &layout.dec2,     &layout.head_seg,
                                     &layout.head_depth};
        const double h = 1e-5;
        for (const ConvShape* blk : blocks) {
            for (int rep = 0; rep < 4; ++rep) {
                const size_t span = blk->weight_count() + static_cast<size_t>(blk->out_c);
                const size_t idx = blk->w_off + coord_rng.uniform_int(span);
                const double saved = params.v[idx];
                params.v[idx] = saved + h;
                const double lp = joint_loss(
                    perception_forward(params, s.width, s.height, s.rgb), s, lambda);
                params.v[idx] = saved - h;
                const double lm = joint_loss(
                    perception_forward(params, s.width, s.height, s.rgb), s, lambda);
                params.v[idx] = saved;
                const double numeric = (lp - lm) / (2 * h);
                const double analytic = grad[idx];
                // tiny components get an absolute floor: central differences
                // bottom out near 1e-10 here while true relative accuracy is
                // only meaningful for components above ~1e-6
                const double rel = std::fabs(analytic - numeric) /
                                   std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
                CAPTURE(idx);
                CHECK(rel < 1e-4);
            }
        }
    }
}

TEST_CASE("training reduces the loss and is deterministic") {
    GenParams gp;
    gp.width = 9;
    gp.height = 9;
    gp.rooms = 1;
    gp.label_pool = {"sofa", "plant", "television"};
    gp.objects = 3;
    std::vector<std::shared_ptr<const HouseLayout>> houses;
    for (uint64_t i = 0; i < 6; ++i) {
        houses.push_back(std::make_shared<HouseLayout>(generate_house(20 + i, gp)));
    }
    RenderConfig rc;
    rc.width = 12;
    rc.height = 12;
    const PerceptionDataset dataset = build_dataset(houses, rc, 1.0, 200, 5);
    REQUIRE(dataset.samples.size() == 200);

    SUBCASE("zero epochs return the initial parameters") {
        const PerceptionTrainResult r = train_perception(dataset, 0, 0.1, 16, 0.01, 3);
        CHECK(r.params.v == init_perception(dataset.num_classes, mix_seed(3, 0x70657263ULL)).v);
        CHECK(r.epoch_loss.empty());
    }
    SUBCASE("epoch-20 loss beats epoch-1 and reruns match") {
        const PerceptionTrainResult a = train_perception(dataset, 20, 0.15, 16, 0.01, 3);
        REQUIRE(a.epoch_loss.size() == 20);
        CHECK(a.epoch_loss.back() < a.epoch_loss.front());
        const PerceptionTrainResult b = train_perception(dataset, 20, 0.15, 16, 0.01, 3);
        CHECK(a.epoch_loss == b.epoch_loss);
        CHECK(a.params.v == b.params.v);
    }
}

TEST_CASE("mean IOU and RMSE") {
    SUBCASE("identical maps") {
        const std::vector<uint16_t> gt{0, 1, 2, 1};
        CHECK(mean_iou(gt, gt, 3) == 1.0);
    }
    SUBCASE("fully disjoint predictions") {
        const std::vector<uint16_t> gt{0, 0, 1, 1};
        const std::vector<uint16_t> pred{1, 1, 0, 0};
        CHECK(mean_iou(pred, gt, 2) == 0.0);
    }
    SUBCASE("hand-enumerated confusion") {
        // gt classes {0,1}; one class-1 pixel predicted as 0:
        //   class 0: inter 2, union 3 -> 2/3; class 1: inter 1, union 2 -> 1/2
        const std::vector<uint16_t> gt{0, 0, 1, 1};
        const std::vector<uint16_t> pred{0, 0, 1, 0};
        CHECK(mean_iou(pred, gt, 2) == doctest::Approx((2.0 / 3 + 0.5) / 2));
        // classes absent from gt are ignored
        CHECK(mean_iou(pred, gt, 5) == doctest::Approx((2.0 / 3 + 0.5) / 2));
    }
    SUBCASE("rmse") {
        const std::vector<double> gt{0.0, 0.5, 1.0, 0.25};
        CHECK(depth_rmse(gt, gt) == 0.0);
        const std::vector<double> pred{0.1, 0.6, 0.9, 0.35};
        CHECK(depth_rmse(pred, gt) == doctest::Approx(0.1).epsilon(1e-12));
    }
}

TEST_CASE("build_dataset filters background-heavy frames deterministically") {
    GenParams gp;
    gp.width = 11;
    gp.height = 11;
    gp.rooms = 2;
    gp.label_pool = {"sofa", "plant"};
    gp.objects = 2;
    std::vector<std::shared_ptr<const HouseLayout>> houses{
        std::make_shared<HouseLayout>(generate_house(77, gp))};
    RenderConfig rc;
    rc.width = 16;
    rc.height = 16;

    SUBCASE("every kept frame obeys the cap") {
        const PerceptionDataset dataset = build_dataset(houses, rc, 0.8, 10000, 1);
        CHECK(!dataset.samples.empty());
        for (const PerceptionSample& s : dataset.samples) {
            size_t background = 0;
            for (uint16_t v : s.gt_semantic) {
                if (v == 0) ++background;
            }
            CHECK(static_cast<double>(background) / s.gt_semantic.size() <= 0.8);
        }
        // a loose cap keeps strictly more frames
        const PerceptionDataset all = build_dataset(houses, rc, 1.0, 10000, 1);
        CHECK(all.samples.size() > dataset.samples.size());
    }
    SUBCASE("deterministic per seed") {
        const PerceptionDataset a = build_dataset(houses, rc, 0.9, 50, 1);
        const PerceptionDataset b = build_dataset(houses, rc, 0.9, 50, 1);
        REQUIRE(a.samples.size() == b.samples.size());
        for (size_t i = 0; i < a.samples.size(); ++i) {
            CHECK(a.samples[i].rgb == b.samples[i].rgb);
            CHECK(a.samples[i].gt_semantic == b.samples[i].gt_semantic);
        }
    }
    SUBCASE("an impossible cap is a dataset error") {
        CHECK_THROWS_AS(build_dataset(houses, rc, -1.0, 100, 1), DatasetError);
    }
    SUBCASE("labels form a shared vocabulary") {
        const PerceptionDataset dataset = build_dataset(houses, rc, 1.0, 10, 1);
        CHECK(dataset.labels[0] == "background");
        CHECK(dataset.num_classes == 3);
        CHECK(std::is_sorted(dataset.labels.begin() + 1, dataset.labels.end()));
    }
}

TEST_CASE("corrupt_observation") {
    // synthetic frame
    RenderOutput frame;
    frame.width = 64;
    frame.height = 64;
    frame.semantic.assign(64 * 64, 2);
    frame.depth.assign(64 * 64, 1.0);
    const int num_labels = 5;
    const double max_range = 6.4;

    SUBCASE("zero parameters are the identity") {
        Rng rng(1);
        const RenderOutput out = corrupt_observation(frame, num_labels, max_range, 0.0, 0.0, rng);
        CHECK(out.semantic == frame.semantic);
        CHECK(out.depth == frame.depth);
    }
    SUBCASE("flip_p = 1 relabels every pixel") {
        Rng rng(2);
        const RenderOutput out = corrupt_observation(frame, num_labels, max_range, 1.0, 0.0, rng);
        for (size_t i = 0; i < out.semantic.size(); ++i) {
            CHECK(out.semantic[i] != frame.semantic[i]);
            CHECK(out.semantic[i] < num_labels);
        }
    }
    SUBCASE("flip fraction concentrates around flip_p") {
        Rng rng(3);
        long flipped = 0, total = 0;
        for (int rep = 0; rep < 1000; ++rep) {
            const RenderOutput out =
                corrupt_observation(frame, num_labels, max_range, 0.1, 0.0, rng);
            for (size_t i = 0; i < out.semantic.size(); ++i) {
                if (out.semantic[i] != frame.semantic[i]) ++flipped;
                ++total;
            }
        }
        const double fraction = static_cast<double>(flipped) / total;
        CHECK(fraction > 0.08);
        CHECK(fraction < 0.12);
    }
    SUBCASE("depth noise keeps the depth bounds") {
        Rng rng(4);
        const RenderOutput out = corrupt_observation(frame, num_labels, max_range, 0.0, 0.8, rng);
        bool any_changed = false;
        for (double d : out.depth) {
            CHECK(d > 0.0);
            CHECK(d <= max_range);
            any_changed = any_changed || d != 1.0;
        }
        CHECK(any_changed);
    }
}

TEST_CASE("perception checkpoints and datasets round trip") {
    namespace fs = std::filesystem;
    SUBCASE("checkpoint") {
        const fs::path path = fs::temp_directory_path() / "gaple_percep_test.ckpt";
        const PerceptionParams params = random_perception(6, 99);
        save_perception(path.string(), params);
        const PerceptionParams loaded = load_perception(path.string());
        CHECK(loaded.num_classes == 6);
        CHECK(loaded.v == params.v);
        fs::remove(path);
    }
    SUBCASE("dataset directory") {
        const fs::path dir = fs::temp_directory_path() / "gaple_dataset_test";
        PerceptionDataset dataset;
        dataset.num_classes = 3;
        dataset.labels = {"background", "plant", "sofa"};
        dataset.samples.push_back(random_sample(8, 8, 3, 7));
        dataset.samples.push_back(random_sample(8, 8, 3, 8));
        save_dataset(dir.string(), dataset);
        const PerceptionDataset loaded = load_dataset(dir.string());
        CHECK(loaded.num_classes == 3);
        CHECK(loaded.labels == dataset.labels);
        REQUIRE(loaded.samples.size() == 2);
        for (size_t i = 0; i < 2; ++i) {
            CHECK(loaded.samples[i].gt_semantic == dataset.samples[i].gt_semantic);
            // float32 storage: compare at that precision
            for (size_t j = 0; j < loaded.samples[i].rgb.size(); ++j) {
                CHECK(loaded.samples[i].rgb[j] ==
                      doctest::Approx(dataset.samples[i].rgb[j]).epsilon(1e-6));
            }
        }
        fs::remove_all(dir);
    }
}
