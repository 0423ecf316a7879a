#include "gaple/policynet.hpp"

#include <algorithm>
#include <cmath>

#include "gaple/errors.hpp"
#include "gaple/io.hpp"
#include "gaple/rng.hpp"

namespace gaple {

namespace pl = policy_layout;

namespace {

// out[o] = b[o] + sum_i w[o*in + i] * x[i]
void affine(std::span<const double> w, std::span<const double> b, std::span<const double> x,
            std::span<double> out) {
    const size_t in = x.size();
    for (size_t o = 0; o < out.size(); ++o) {
        double acc = b[o];
        const double* row = w.data() + o * in;
        for (size_t i = 0; i < in; ++i) acc += row[i] * x[i];
        out[o] = acc;
    }
}

void relu(std::span<double> v) {
    for (double& x : v) x = x > 0.0 ? x : 0.0;
}

struct ForwardCache {
    std::array<double, pl::kInput> x;
    std::array<double, pl::kFuse> fuse_pre, fuse;
    std::array<double, pl::kBranch> actor_pre, actor;
    std::array<double, pl::kActions> logits;
    std::array<double, pl::kActions> probs;
    std::array<double, pl::kBranch> critic_pre, critic;
    double value = 0.0;
};

void run_forward(const PolicyParams& params, const StateTensor& state, ForwardCache& c) {
    const std::span<const double> v(params.v);
    std::copy(state.mask10.begin(), state.mask10.end(), c.x.begin());
    std::copy(state.depth10.begin(), state.depth10.end(), c.x.begin() + 100);

    affine(v.subspan(pl::w_fuse, size_t(pl::kFuse) * pl::kInput), v.subspan(pl::b_fuse, pl::kFuse),
           c.x, c.fuse_pre);
    c.fuse = c.fuse_pre;
    relu(c.fuse);

    affine(v.subspan(pl::w_actor1, size_t(pl::kBranch) * pl::kFuse),
           v.subspan(pl::b_actor1, pl::kBranch), c.fuse, c.actor_pre);
    c.actor = c.actor_pre;
    relu(c.actor);
    affine(v.subspan(pl::w_actor2, size_t(pl::kActions) * pl::kBranch),
           v.subspan(pl::b_actor2, pl::kActions), c.actor, c.logits);

    affine(v.subspan(pl::w_critic1, size_t(pl::kBranch) * pl::kFuse),
           v.subspan(pl::b_critic1, pl::kBranch), c.fuse, c.critic_pre);
    c.critic = c.critic_pre;
    relu(c.critic);
    std::array<double, 1> value_out;
    affine(v.subspan(pl::w_critic2, pl::kBranch), v.subspan(pl::b_critic2, 1), c.critic, value_out);
    c.value = value_out[0];

    double max_logit = c.logits[0];
    for (double z : c.logits) max_logit = std::max(max_logit, z);
    double denom = 0.0;
    for (int a = 0; a < pl::kActions; ++a) {
        c.probs[a] = std::exp(c.logits[a] - max_logit);
        denom += c.probs[a];
    }
    for (double& p : c.probs) p /= denom;
}

}  // namespace

PolicyParams init_params(uint64_t seed) {
    Rng rng(seed);
    PolicyParams params = PolicyParams::zeros();
    auto fill = [&](size_t offset, size_t count, int fan_in) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (size_t i = 0; i < count; ++i) {
            params.v[offset + i] = rng.uniform(-scale, scale);
        }
    };
    fill(pl::w_fuse, size_t(pl::kFuse) * pl::kInput, pl::kInput);
    fill(pl::w_actor1, size_t(pl::kBranch) * pl::kFuse, pl::kFuse);
    fill(pl::w_actor2, size_t(pl::kActions) * pl::kBranch, pl::kBranch);
    fill(pl::w_critic1, size_t(pl::kBranch) * pl::kFuse, pl::kFuse);
    fill(pl::w_critic2, size_t(pl::kBranch), pl::kBranch);
    // biases stay zero
    return params;
}

PolicyOutput policy_forward(const PolicyParams& params, const StateTensor& state) {
    ForwardCache c;
    run_forward(params, state, c);
    PolicyOutput out;
    out.action_probs = c.probs;
    out.value = c.value;
    for (double p : out.action_probs) {
        if (!std::isfinite(p)) throw NumericError("policy_forward: non-finite action probability");
    }
    if (!std::isfinite(out.value)) throw NumericError("policy_forward: non-finite value");
    return out;
}

double policy_entropy(const std::array<double, 6>& probs) {
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

PolicyGradient policy_backward(const PolicyParams& params, std::span<const RolloutStep> rollout,
                               double beta_entropy, double value_coeff) {
    if (rollout.empty()) {
        throw std::invalid_argument("policy_backward: empty rollout");
    }
    PolicyGradient grad(kPolicyParamCount, 0.0);
    const std::span<const double> v(params.v);
    std::span<double> g(grad);

    ForwardCache c;
    for (const RolloutStep& stepData : rollout) {
        if (stepData.action < 0 || stepData.action >= pl::kActions) {
            throw std::invalid_argument("policy_backward: action index out of range");
        }
        run_forward(params, stepData.state, c);

        const double advantage = stepData.ret - c.value;

        // d/dlogits of [-log pi(a) * adv - beta * H]
        double plogp = 0.0;  // sum_k pi_k log pi_k
        for (int k = 0; k < pl::kActions; ++k) {
            if (c.probs[k] > 0.0) plogp += c.probs[k] * std::log(c.probs[k]);
        }
        std::array<double, pl::kActions> dlogits;
        for (int k = 0; k < pl::kActions; ++k) {
            const double indicator = k == stepData.action ? 1.0 : 0.0;
            dlogits[k] = advantage * (c.probs[k] - indicator) +
                         beta_entropy * c.probs[k] * (std::log(std::max(c.probs[k], 1e-300)) - plogp);
        }
        // d/dV of value_coeff * (R - V)^2
        const double dvalue = -2.0 * value_coeff * advantage;

        std::array<double, pl::kFuse> dfuse{};

        // actor head
        std::array<double, pl::kBranch> dactor{};
        for (int k = 0; k < pl::kActions; ++k) {
            const size_t row = pl::w_actor2 + static_cast<size_t>(k) * pl::kBranch;
            g[pl::b_actor2 + k] += dlogits[k];
            for (int j = 0; j < pl::kBranch; ++j) {
                g[row + j] += dlogits[k] * c.actor[j];
                dactor[j] += dlogits[k] * v[row + j];
            }
        }
        for (int j = 0; j < pl::kBranch; ++j) {
            if (c.actor_pre[j] <= 0.0) dactor[j] = 0.0;
        }
        for (int j = 0; j < pl::kBranch; ++j) {
            const size_t row = pl::w_actor1 + static_cast<size_t>(j) * pl::kFuse;
            g[pl::b_actor1 + j] += dactor[j];
            for (int i = 0; i < pl::kFuse; ++i) {
                g[row + i] += dactor[j] * c.fuse[i];
                dfuse[i] += dactor[j] * v[row + i];
            }
        }

        // critic head
        std::array<double, pl::kBranch> dcritic{};
        g[pl::b_critic2] += dvalue;
        for (int j = 0; j < pl::kBranch; ++j) {
            g[pl::w_critic2 + j] += dvalue * c.critic[j];
            dcritic[j] = dvalue * v[pl::w_critic2 + j];
            if (c.critic_pre[j] <= 0.0) dcritic[j] = 0.0;
        }
        for (int j = 0; j < pl::kBranch; ++j) {
            const size_t row = pl::w_critic1 + static_cast<size_t>(j) * pl::kFuse;
            g[pl::b_critic1 + j] += dcritic[j];
            for (int i = 0; i < pl::kFuse; ++i) {
                g[row + i] += dcritic[j] * c.fuse[i];
                dfuse[i] += dcritic[j] * v[row + i];
            }
        }

        // fused layer
        for (int i = 0; i < pl::kFuse; ++i) {
            if (c.fuse_pre[i] <= 0.0) dfuse[i] = 0.0;
        }
        for (int i = 0; i < pl::kFuse; ++i) {
            const size_t row = pl::w_fuse + static_cast<size_t>(i) * pl::kInput;
            g[pl::b_fuse + i] += dfuse[i];
            for (int k = 0; k < pl::kInput; ++k) {
                g[row + k] += dfuse[i] * c.x[k];
            }
        }
    }

    const double inv_n = 1.0 / static_cast<double>(rollout.size());
    for (double& x : grad) x *= inv_n;
    return grad;
}

PolicyParams apply_gradient(PolicyParams params, std::span<const double> grad, double lr,
                            double clip) {
    if (grad.size() != params.v.size()) {
        throw std::invalid_argument("apply_gradient: dimension mismatch");
    }
    for (size_t i = 0; i < grad.size(); ++i) {
        params.v[i] -= lr * std::clamp(grad[i], -clip, clip);
    }
    return params;
}

void save_policy(const std::string& path, const PolicyParams& params) {
    write_param_file(path, "gaple-policy v1", params.v);
}

PolicyParams load_policy(const std::string& path) {
    PolicyParams params;
    params.v = read_param_file(path, "gaple-policy v1");
    if (params.v.size() != kPolicyParamCount) {
        throw IoError(path + ": expected " + std::to_string(kPolicyParamCount) +
                      " parameters, found " + std::to_string(params.v.size()));
    }
    return params;
}

}  // namespace gaple
