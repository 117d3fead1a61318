#include "elastica/kernels.hpp"

#include <algorithm>

#ifdef ELASTICA_HAVE_OPENMP
#include <omp.h>
#endif

namespace elastica::kernels {

namespace {

constexpr std::size_t kParallelWork = 1 << 15;

inline void gemm_row(std::size_t i, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
                     bool accumulate) {
    double* ci = c + i * n;
    if (!accumulate) std::fill(ci, ci + n, 0.0);
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
        const double av = ai[p];
        if (av == 0.0) continue;
        const double* bp = b + p * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
}

inline void gemm_tn_row(std::size_t row, std::size_t m, std::size_t n, std::size_t k, const double* a, const double* g,
                        double* c) {
    double* cr = c + row * n;
    for (std::size_t i = 0; i < m; ++i) {
        const double av = a[i * k + row];
        if (av == 0.0) continue;
        const double* gi = g + i * n;
        for (std::size_t j = 0; j < n; ++j) cr[j] += av * gi[j];
    }
}

inline void gemm_nt_row(std::size_t i, std::size_t n, std::size_t k, const double* g, const double* b, double* c) {
    const double* gi = g + i * n;
    double* ci = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
        const double* bp = b + p * n;
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += gi[j] * bp[j];
        ci[p] += s;
    }
}

inline void conv_position(const ConvShape& s, std::size_t pos, const double* x, const double* kernel,
                          const double* bias, double* y) {
    const std::size_t lo = s.out_length();
    const std::size_t b = pos / lo;
    const std::size_t t = pos % lo;
    double* yo = y + pos * s.filters;
    for (std::size_t f = 0; f < s.filters; ++f) yo[f] = bias[f];
    for (std::size_t w = 0; w < s.width; ++w) {
        const double* xr = x + (b * s.length + t + w) * s.channels;
        const double* kw = kernel + w * s.channels * s.filters;
        for (std::size_t c = 0; c < s.channels; ++c) {
            const double xv = xr[c];
            const double* kc = kw + c * s.filters;
            for (std::size_t f = 0; f < s.filters; ++f) yo[f] += xv * kc[f];
        }
    }
}

// Gradient wrt one input sequence; sums over output positions in order.
inline void conv_input_grad_batch(const ConvShape& s, std::size_t b, const double* dy, const double* kernel,
                                  double* dx) {
    const std::size_t lo = s.out_length();
    for (std::size_t t = 0; t < lo; ++t) {
        const double* d = dy + (b * lo + t) * s.filters;
        for (std::size_t w = 0; w < s.width; ++w) {
            double* xr = dx + (b * s.length + t + w) * s.channels;
            const double* kw = kernel + w * s.channels * s.filters;
            for (std::size_t c = 0; c < s.channels; ++c) {
                const double* kc = kw + c * s.filters;
                double acc = 0.0;
                for (std::size_t f = 0; f < s.filters; ++f) acc += d[f] * kc[f];
                xr[c] += acc;
            }
        }
    }
}

}  // namespace

namespace serial {

void gemm(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) gemm_row(i, n, k, a.data(), b.data(), c.data(), accumulate);
}

void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> g,
                 std::span<double> c) {
    for (std::size_t r = 0; r < k; ++r) gemm_tn_row(r, m, n, k, a.data(), g.data(), c.data());
}

void gemm_nt_acc(std::size_t m, std::size_t n, std::size_t k, std::span<const double> g, std::span<const double> b,
                 std::span<double> c) {
    for (std::size_t i = 0; i < m; ++i) gemm_nt_row(i, n, k, g.data(), b.data(), c.data());
}

void conv1d(const ConvShape& s, std::span<const double> x, std::span<const double> kernel,
            std::span<const double> bias, std::span<double> y) {
    const std::size_t positions = s.batch * s.out_length();
    for (std::size_t p = 0; p < positions; ++p) conv_position(s, p, x.data(), kernel.data(), bias.data(), y.data());
}

void conv1d_input_grad(const ConvShape& s, std::span<const double> dy, std::span<const double> kernel,
                       std::span<double> dx) {
    for (std::size_t b = 0; b < s.batch; ++b) conv_input_grad_batch(s, b, dy.data(), kernel.data(), dx.data());
}

}  // namespace serial

namespace parallel {

void gemm(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate) {
    const long lm = static_cast<long>(m);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < lm; ++i) gemm_row(static_cast<std::size_t>(i), n, k, a.data(), b.data(), c.data(), accumulate);
}

void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> g,
                 std::span<double> c) {
    const long lk = static_cast<long>(k);
#pragma omp parallel for schedule(static)
    for (long r = 0; r < lk; ++r) gemm_tn_row(static_cast<std::size_t>(r), m, n, k, a.data(), g.data(), c.data());
}

void gemm_nt_acc(std::size_t m, std::size_t n, std::size_t k, std::span<const double> g, std::span<const double> b,
                 std::span<double> c) {
    const long lm = static_cast<long>(m);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < lm; ++i) gemm_nt_row(static_cast<std::size_t>(i), n, k, g.data(), b.data(), c.data());
}

void conv1d(const ConvShape& s, std::span<const double> x, std::span<const double> kernel,
            std::span<const double> bias, std::span<double> y) {
    const long positions = static_cast<long>(s.batch * s.out_length());
#pragma omp parallel for schedule(static)
    for (long p = 0; p < positions; ++p) {
        conv_position(s, static_cast<std::size_t>(p), x.data(), kernel.data(), bias.data(), y.data());
    }
}

void conv1d_input_grad(const ConvShape& s, std::span<const double> dy, std::span<const double> kernel,
                       std::span<double> dx) {
    const long lb = static_cast<long>(s.batch);
#pragma omp parallel for schedule(static)
    for (long b = 0; b < lb; ++b) {
        conv_input_grad_batch(s, static_cast<std::size_t>(b), dy.data(), kernel.data(), dx.data());
    }
}

}  // namespace parallel

namespace {

bool use_parallel(std::size_t work) {
#ifdef ELASTICA_HAVE_OPENMP
    return work >= kParallelWork && omp_get_max_threads() > 1;
#else
    (void)work;
    return false;
#endif
}

}  // namespace

void gemm(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate) {
    if (use_parallel(m * n * k)) {
        parallel::gemm(m, n, k, a, b, c, accumulate);
    } else {
        serial::gemm(m, n, k, a, b, c, accumulate);
    }
}

void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> g,
                 std::span<double> c) {
    if (use_parallel(m * n * k)) {
        parallel::gemm_tn_acc(m, n, k, a, g, c);
    } else {
        serial::gemm_tn_acc(m, n, k, a, g, c);
    }
}

void gemm_nt_acc(std::size_t m, std::size_t n, std::size_t k, std::span<const double> g, std::span<const double> b,
                 std::span<double> c) {
    if (use_parallel(m * n * k)) {
        parallel::gemm_nt_acc(m, n, k, g, b, c);
    } else {
        serial::gemm_nt_acc(m, n, k, g, b, c);
    }
}

void conv1d(const ConvShape& s, std::span<const double> x, std::span<const double> kernel,
            std::span<const double> bias, std::span<double> y) {
    if (use_parallel(s.batch * s.out_length() * s.width * s.channels * s.filters)) {
        parallel::conv1d(s, x, kernel, bias, y);
    } else {
        serial::conv1d(s, x, kernel, bias, y);
    }
}

void conv1d_input_grad(const ConvShape& s, std::span<const double> dy, std::span<const double> kernel,
                       std::span<double> dx) {
    if (use_parallel(s.batch * s.out_length() * s.width * s.channels * s.filters)) {
        parallel::conv1d_input_grad(s, dy, kernel, dx);
    } else {
        serial::conv1d_input_grad(s, dy, kernel, dx);
    }
}

void conv1d_param_grad(const ConvShape& s, std::span<const double> x, std::span<const double> dy,
                       std::span<double> dkernel, std::span<double> dbias) {
    const std::size_t lo = s.out_length();
    for (std::size_t b = 0; b < s.batch; ++b) {
        for (std::size_t t = 0; t < lo; ++t) {
            const double* d = dy.data() + (b * lo + t) * s.filters;
            for (std::size_t f = 0; f < s.filters; ++f) dbias[f] += d[f];
            for (std::size_t w = 0; w < s.width; ++w) {
                const double* xr = x.data() + (b * s.length + t + w) * s.channels;
                double* kw = dkernel.data() + w * s.channels * s.filters;
                for (std::size_t c = 0; c < s.channels; ++c) {
                    const double xv = xr[c];
                    if (xv == 0.0) continue;
                    double* kc = kw + c * s.filters;
                    for (std::size_t f = 0; f < s.filters; ++f) kc[f] += xv * d[f];
                }
            }
        }
    }
}

int max_threads() {
#ifdef ELASTICA_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace elastica::kernels
