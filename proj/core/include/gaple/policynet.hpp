#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gaple/state.hpp"

namespace gaple {

// Two-branch actor-critic MLP: the concatenated 10x10 mask and 10x10 depth
// grids feed a fused hidden layer, which splits into an action head (softmax
// over 6 actions) and a scalar value head. All weights live in one flat
// vector with the block offsets below.
namespace policy_layout {
inline constexpr int kInput = kStateSize;  // 200
inline constexpr int kFuse = 128;
inline constexpr int kBranch = 64;
inline constexpr int kActions = kActionCount;  // 6

inline constexpr size_t w_fuse = 0;
inline constexpr size_t b_fuse = w_fuse + size_t(kFuse) * kInput;
inline constexpr size_t w_actor1 = b_fuse + kFuse;
inline constexpr size_t b_actor1 = w_actor1 + size_t(kBranch) * kFuse;
inline constexpr size_t w_actor2 = b_actor1 + kBranch;
inline constexpr size_t b_actor2 = w_actor2 + size_t(kActions) * kBranch;
inline constexpr size_t w_critic1 = b_actor2 + kActions;
inline constexpr size_t b_critic1 = w_critic1 + size_t(kBranch) * kFuse;
inline constexpr size_t w_critic2 = b_critic1 + kBranch;
inline constexpr size_t b_critic2 = w_critic2 + size_t(kBranch);
inline constexpr size_t total = b_critic2 + 1;
}  // namespace policy_layout

inline constexpr size_t kPolicyParamCount = policy_layout::total;

struct PolicyParams {
    std::vector<double> v;
    static PolicyParams zeros() { return {std::vector<double>(kPolicyParamCount, 0.0)}; }
};

using PolicyGradient = std::vector<double>;

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights per layer, zero biases.
PolicyParams init_params(uint64_t seed);

struct PolicyOutput {
    std::array<double, 6> action_probs{};
    double value = 0.0;
};

// Deterministic forward pass with a max-shifted softmax. Throws NumericError
// if any output is non-finite (corrupted parameters).
PolicyOutput policy_forward(const PolicyParams& params, const StateTensor& state);

struct RolloutStep {
    StateTensor state;
    int action = 0;   // index in [0, 5]
    double ret = 0.0;  // n-step return R_t
};

// Gradient of the advantage actor-critic loss, averaged over the rollout:
//   L = mean_t [ -log pi(a_t|s_t) * (R_t - V(s_t))_const
//                + value_coeff * (R_t - V(s_t))^2
//                - beta_entropy * H(pi(.|s_t)) ]
// The advantage is treated as a constant for the actor term.
PolicyGradient policy_backward(const PolicyParams& params, std::span<const RolloutStep> rollout,
                               double beta_entropy, double value_coeff);

// params - lr * clamp(grad, -clip, clip), per component.
PolicyParams apply_gradient(PolicyParams params, std::span<const double> grad, double lr,
                            double clip = 40.0);

double policy_entropy(const std::array<double, 6>& probs);

// Checkpoint file: "gaple-policy v1\n<count>\n" followed by count
// little-endian IEEE-754 doubles. Round trips are bit exact.
void save_policy(const std::string& path, const PolicyParams& params);
PolicyParams load_policy(const std::string& path);

}  // namespace gaple
