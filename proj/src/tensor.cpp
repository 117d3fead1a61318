#include "elastica/tensor.hpp"

#include <cmath>

#include "elastica/errors.hpp"

namespace elastica::ad {

std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
    if (values.size() != numel(shape)) {
        throw UsageError("Tensor: " + std::to_string(values.size()) + " values do not fit shape " + shape_str(shape));
    }
}

Tensor Tensor::zeros(Shape s) { return filled(std::move(s), 0.0); }

Tensor Tensor::filled(Shape s, double value) {
    const auto n = numel(s);
    return Tensor(std::move(s), std::vector<double>(n, value));
}

Parameter& ParameterStore::create(const std::string& name, Shape shape, Init init, std::mt19937_64& rng) {
    if (params_.count(name)) throw UsageError("parameter '" + name + "' already exists");
    Parameter p;
    p.name = name;
    p.value = Tensor::zeros(shape);
    p.grad.assign(p.value.size(), 0.0);
    if (init != Init::zeros) {
        double limit = 0.05;
        if (init == Init::glorot) {
            // fan_in = first dim, fan_out = product of the rest
            const double fan_in = static_cast<double>(shape.empty() ? 1 : shape.front());
            const double fan_out = static_cast<double>(numel(shape)) / fan_in;
            limit = std::sqrt(6.0 / (fan_in + fan_out));
        }
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (auto& v : p.value.values) v = dist(rng);
    }
    return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParameterStore::at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw LookupError("unknown parameter '" + name + "'");
    return it->second;
}

const Parameter& ParameterStore::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw LookupError("unknown parameter '" + name + "'");
    return it->second;
}

void ParameterStore::zero_grad() {
    for (auto& [_, p] : params_) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

std::size_t ParameterStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, p] : params_) n += p.value.size();
    return n;
}

const Shape& Var::shape() const { return tape->shape(id); }
std::span<const double> Var::value() const { return tape->value(id); }
std::span<const double> Var::grad() const { return tape->grad_if_any(id); }

double Var::item() const {
    const auto& v = tape->value(id);
    if (v.size() != 1) throw UsageError("item() on a node of shape " + shape_str(shape()));
    return v[0];
}

Var Tape::constant(Tensor t) {
    nodes_.push_back(Node{std::move(t.shape), std::move(t.values), {}, nullptr, nullptr});
    return Var{this, nodes_.size() - 1};
}

Var Tape::param(Parameter& p) {
    nodes_.push_back(Node{p.value.shape, p.value.values, {}, &p, nullptr});
    return Var{this, nodes_.size() - 1};
}

Var Tape::record(Shape shape, std::vector<double> value, BackwardFn backward) {
    nodes_.push_back(Node{std::move(shape), std::move(value), {}, nullptr, std::move(backward)});
    return Var{this, nodes_.size() - 1};
}

std::vector<double>& Tape::grad(std::size_t id) {
    auto& n = nodes_[id];
    if (n.grad.empty() && !n.value.empty()) n.grad.assign(n.value.size(), 0.0);
    return n.grad;
}

void Tape::backward(Var loss) {
    if (loss.tape != this) throw UsageError("backward: variable belongs to another tape");
    if (nodes_[loss.id].value.size() != 1) {
        throw UsageError("backward: loss must be a scalar, got shape " + shape_str(nodes_[loss.id].shape));
    }
    grad(loss.id)[0] = 1.0;
    visits_ = 0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        auto& n = nodes_[i];
        if (n.grad.empty()) continue;  // not reachable from the loss
        ++visits_;
        if (n.backward) n.backward(*this, i);
        if (n.param) {
            for (std::size_t k = 0; k < n.grad.size(); ++k) n.param->grad[k] += n.grad[k];
        }
    }
}

}  // namespace elastica::ad
