#include "elastica/nn.hpp"

#include <cmath>

#include "elastica/errors.hpp"

namespace elastica::ad {

void adam_step(std::span<double> params, std::span<const double> grads, AdamMoments& moments, long step,
               const AdamConfig& config) {
    if (params.size() != grads.size()) {
        throw UsageError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
    }
    if (step < 1) throw UsageError("adam_step: step count starts at 1");
    if (moments.m.empty() && moments.v.empty()) {
        moments.m.assign(params.size(), 0.0);
        moments.v.assign(params.size(), 0.0);
    }
    if (moments.m.size() != params.size() || moments.v.size() != params.size()) {
        throw UsageError("adam_step: moment size does not match parameter size");
    }
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        moments.m[i] = config.beta1 * moments.m[i] + (1.0 - config.beta1) * g;
        moments.v[i] = config.beta2 * moments.v[i] + (1.0 - config.beta2) * g * g;
        const double m_hat = moments.m[i] / c1;
        const double v_hat = moments.v[i] / c2;
        params[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
}

void AdamState::step(ParameterStore& store) {
    ++steps_;
    for (auto& [name, p] : store) {
        if (p.grad.size() != p.value.size()) p.grad.assign(p.value.size(), 0.0);
        adam_step(p.value.values, p.grad, moments_[name], steps_, config_);
    }
}

void create_dense(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                  std::mt19937_64& rng) {
    store.create(prefix + "/w", {in, out}, ParameterStore::Init::glorot, rng);
    store.create(prefix + "/b", {out}, ParameterStore::Init::zeros, rng);
}

Var Binder::operator()(const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    Var v = tape_.param(store_.at(name));
    bound_.emplace(name, v);
    return v;
}

}  // namespace elastica::ad
