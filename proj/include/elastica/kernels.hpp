#pragma once

#include <cstddef>
#include <span>

// Dense kernels behind the autodiff ops. Every kernel exists twice: a serial
// reference used by tests and an OpenMP version that splits over output rows.
// Both accumulate each output element in the same order, so results are
// bit-identical regardless of thread count.
namespace elastica::kernels {

struct ConvShape {
    std::size_t batch = 0;
    std::size_t length = 0;    // input time steps
    std::size_t channels = 0;
    std::size_t width = 0;     // kernel taps
    std::size_t filters = 0;

    std::size_t out_length() const { return length - width + 1; }
};

namespace serial {

// C[m,n] (+)= A[m,k] * B[k,n]
void gemm(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate);
// C[k,n] += A[m,k]^T * G[m,n]
void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> g,
                 std::span<double> c);
// C[m,k] += G[m,n] * B[k,n]^T
void gemm_nt_acc(std::size_t m, std::size_t n, std::size_t k, std::span<const double> g, std::span<const double> b,
                 std::span<double> c);
// y[b,t,f] = bias[f] + sum_{w,c} x[b,t+w,c] * kernel[w,c,f]
void conv1d(const ConvShape& s, std::span<const double> x, std::span<const double> kernel,
            std::span<const double> bias, std::span<double> y);
// dx[b,t+w,c] += sum_f dy[b,t,f] * kernel[w,c,f]
void conv1d_input_grad(const ConvShape& s, std::span<const double> dy, std::span<const double> kernel,
                       std::span<double> dx);

}  // namespace serial

namespace parallel {

void gemm(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate);
void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> g,
                 std::span<double> c);
void gemm_nt_acc(std::size_t m, std::size_t n, std::size_t k, std::span<const double> g, std::span<const double> b,
                 std::span<double> c);
void conv1d(const ConvShape& s, std::span<const double> x, std::span<const double> kernel,
            std::span<const double> bias, std::span<double> y);
void conv1d_input_grad(const ConvShape& s, std::span<const double> dy, std::span<const double> kernel,
                       std::span<double> dx);

}  // namespace parallel

// Dispatchers: OpenMP variant when built with it and the problem is large enough.
void gemm(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate);
void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> g,
                 std::span<double> c);
void gemm_nt_acc(std::size_t m, std::size_t n, std::size_t k, std::span<const double> g, std::span<const double> b,
                 std::span<double> c);
void conv1d(const ConvShape& s, std::span<const double> x, std::span<const double> kernel,
            std::span<const double> bias, std::span<double> y);
void conv1d_input_grad(const ConvShape& s, std::span<const double> dy, std::span<const double> kernel,
                       std::span<double> dx);
// dkernel[w,c,f] += sum_{b,t} x[b,t+w,c] * dy[b,t,f]; dbias[f] += sum dy[b,t,f]
void conv1d_param_grad(const ConvShape& s, std::span<const double> x, std::span<const double> dy,
                       std::span<double> dkernel, std::span<double> dbias);

int max_threads();

}  // namespace elastica::kernels
