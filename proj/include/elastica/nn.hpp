#pragma once

#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "elastica/ops.hpp"
#include "elastica/tensor.hpp"

namespace elastica::ad {

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamMoments {
    std::vector<double> m;
    std::vector<double> v;
};

// Bias-corrected Adam. `step` is the 1-based update count.
void adam_step(std::span<double> params, std::span<const double> grads, AdamMoments& moments, long step,
               const AdamConfig& config);

class AdamState {
public:
    explicit AdamState(AdamConfig config = {}) : config_(config) {}

    // Updates every parameter in the store from its accumulated gradient.
    void step(ParameterStore& store);

    long steps() const { return steps_; }
    const AdamConfig& config() const { return config_; }
    const std::map<std::string, AdamMoments>& moments() const { return moments_; }

private:
    AdamConfig config_;
    long steps_ = 0;
    std::map<std::string, AdamMoments> moments_;
};

// Creates "<prefix>/w" [in,out] (glorot) and "<prefix>/b" [out] (zeros).
void create_dense(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                  std::mt19937_64& rng);

// Binds parameters to a tape once per forward pass.
class Binder {
public:
    Binder(Tape& tape, ParameterStore& store) : tape_(tape), store_(store) {}
    Var operator()(const std::string& name);
    Var dense(const std::string& prefix, Var x) { return ad::dense(x, (*this)(prefix + "/w"), (*this)(prefix + "/b")); }
    Tape& tape() { return tape_; }

private:
    Tape& tape_;
    ParameterStore& store_;
    std::map<std::string, Var> bound_;
};

}  // namespace elastica::ad
