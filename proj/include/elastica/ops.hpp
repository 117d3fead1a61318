#pragma once

#include <random>
#include <span>
#include <vector>

#include "elastica/tensor.hpp"

// Differentiable operations on tape variables. Shapes are explicit; the only
// broadcast is the bias add. Mismatches raise UsageError naming both shapes.
namespace elastica::ad {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var x, double c);
Var add_scalar(Var x, double c);
Var one_minus(Var x);
// Elementwise product with a constant tensor of the same size (masks, 1/P).
Var mul_const(Var x, std::span<const double> c);

// x[B,in] * W[in,out]
Var matmul(Var x, Var w);
// x[B,n] + bias[n]
Var add_bias(Var x, Var bias);
Var dense(Var x, Var weights, Var bias);

Var sigmoid(Var x);
Var tanh(Var x);
Var relu(Var x);
Var softplus(Var x);
Var exp(Var x);
// lo + (hi - lo) * sigmoid(x), clamped so rounding never leaves [lo, hi].
Var bounded_sigmoid(Var x, double lo, double hi);

// Row-wise softmax over the last axis of a [B,n] tensor.
Var softmax(Var x);

// Concatenation along the last axis of [B,n_i] tensors.
Var concat(std::span<const Var> xs);
Var concat(std::initializer_list<Var> xs);
Var slice_cols(Var x, std::size_t begin, std::size_t end);
Var reshape(Var x, Shape shape);

// table[V,d] gathered at indices -> [B,d]
Var embedding_lookup(Var table, std::span<const std::size_t> indices);

Var sum(Var x);
Var mean(Var x);

// Valid cross-correlation: x[B,L,C], kernel[W,C,F], bias[F] -> [B,L-W+1,F]
Var conv1d(Var x, Var kernel, Var bias);
// Mean over the time axis: [B,T,F] -> [B,F]
Var avg_pool(Var x);
// x[B,T,C] at step t -> [B,C]
Var time_step(Var x, std::size_t t);
// [B,C] x T -> [B,T,C]
Var stack_time(std::span<const Var> steps);

// Order-2 factorization machine: x[B,n], w0[1], w[n], V[n,k] -> [B,1], using
// w0 + <w,x> + 1/2 sum_f ((sum_i V_if x_i)^2 - sum_i V_if^2 x_i^2).
Var factorization_machine(Var x, Var w0, Var w, Var factors);

// Dot-product attention: weights = softmax_t(keys[b,t,:] . query[b,:]);
// output[b,:] = sum_t weights[b,t] * values[b,t,:].
Var time_attention(Var values, Var keys, Var query);

// Elementwise huber: x^2/2 for |x| <= theta, theta(|x| - theta/2) otherwise.
Var huber(Var residual, double theta);

// Inverted dropout; identity when !training or rate == 0.
Var dropout(Var x, double rate, bool training, std::mt19937_64& rng);

// x * sigmoid(x W + b), W square in x's feature dimension.
Var selector_block(Var x, Var weights, Var bias);

// x * sigmoid(SB(v_group) * SB(v_room)), one selector block shared by both sides.
Var gating(Var x, Var v_group, Var v_room, Var sb_weights, Var sb_bias);

struct GruParams {
    Var w_z, u_z, b_z;
    Var w_r, u_r, b_r;
    Var w_h, u_h, b_h;
};

// z = s(xWz + hUz + bz), r = s(xWr + hUr + br), c = tanh(xWh + (r*h)Uh + bh),
// h' = (1 - z) * h + z * c
Var gru_cell(Var x, Var h_prev, const GruParams& p);

// Runs forward and backward GRUs over seq[B,T,C] from zero state; output
// [B,T,2H] with forward state then backward state at each step.
Var bi_gru(Var seq, const GruParams& fwd, const GruParams& bwd);

// Scalar huber value (plain double helper).
double huber_value(double residual, double theta);

}  // namespace elastica::ad
