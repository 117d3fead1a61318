#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace elastica::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Tensor {
    Shape shape;
    std::vector<double> values;

    Tensor() = default;
    Tensor(Shape s, std::vector<double> v);
    static Tensor zeros(Shape s);
    static Tensor filled(Shape s, double value);

    std::size_t size() const { return values.size(); }
};

// A trainable tensor that outlives any single tape.
struct Parameter {
    std::string name;
    Tensor value;
    std::vector<double> grad;
};

// Ordered collection of parameters keyed by "module/param".
class ParameterStore {
public:
    enum class Init { zeros, glorot, small_uniform };

    Parameter& create(const std::string& name, Shape shape, Init init, std::mt19937_64& rng);
    Parameter& at(const std::string& name);
    const Parameter& at(const std::string& name) const;
    bool contains(const std::string& name) const { return params_.count(name) != 0; }

    void zero_grad();
    std::size_t size() const { return params_.size(); }
    std::size_t scalar_count() const;

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

private:
    std::map<std::string, Parameter> params_;
};

class Tape;

// Handle to a node on a tape.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Shape& shape() const;
    std::span<const double> value() const;
    std::span<const double> grad() const;  // valid after backward
    double item() const;                   // value of a single-element node
};

// Records a forward computation as a list of nodes; creation order is a
// topological order, so backward walks the list in reverse.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    Var constant(Tensor t);
    Var param(Parameter& p);
    Var record(Shape shape, std::vector<double> value, BackwardFn backward);

    // Seeds d(loss)/d(loss) = 1 and propagates. Parameter gradients are added
    // into Parameter::grad.
    void backward(Var loss);

    const Shape& shape(std::size_t id) const { return nodes_[id].shape; }
    const std::vector<double>& value(std::size_t id) const { return nodes_[id].value; }
    // Gradient buffer of a node, allocated (zeroed) on first use.
    std::vector<double>& grad(std::size_t id);
    const std::vector<double>& grad_if_any(std::size_t id) const { return nodes_[id].grad; }

    std::size_t size() const { return nodes_.size(); }
    std::size_t backward_visits() const { return visits_; }

private:
    struct Node {
        Shape shape;
        std::vector<double> value;
        std::vector<double> grad;
        Parameter* param = nullptr;
        BackwardFn backward;
    };
    std::vector<Node> nodes_;
    std::size_t visits_ = 0;
};

}  // namespace elastica::ad
