#include "elastica/ops.hpp"

#include <algorithm>
#include <cmath>

#include "elastica/errors.hpp"
#include "elastica/kernels.hpp"

namespace elastica::ad {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw UsageError(msg);
}

void require_same(Var a, Var b, const char* op) {
    require(a.tape == b.tape, std::string(op) + ": variables on different tapes");
    require(a.shape() == b.shape(),
            std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

void require_rank(Var x, std::size_t rank, const char* op) {
    require(x.shape().size() == rank,
            std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + shape_str(x.shape()));
}

double stable_sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

template <typename Fwd, typename Deriv>
Var unary(Var x, Fwd fwd, Deriv deriv) {
    const auto& xv = x.tape->value(x.id);
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
    const std::size_t xid = x.id;
    return x.tape->record(x.shape(), std::move(out), [xid, deriv](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        const auto& y = t.value(self);
        const auto& in = t.value(xid);
        auto& gx = t.grad(xid);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv(in[i], y[i]);
    });
}

}  // namespace

double huber_value(double x, double theta) {
    const double ax = std::abs(x);
    return ax <= theta ? 0.5 * x * x : theta * (ax - 0.5 * theta);
}

Var add(Var a, Var b) {
    require_same(a, b, "add");
    const auto& av = a.tape->value(a.id);
    const auto& bv = b.tape->value(b.id);
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
    const std::size_t aid = a.id, bid = b.id;
    return a.tape->record(a.shape(), std::move(out), [aid, bid](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        auto& ga = t.grad(aid);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        auto& gb = t.grad(bid);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    });
}

Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var hadamard(Var a, Var b) {
    require_same(a, b, "hadamard");
    const auto& av = a.tape->value(a.id);
    const auto& bv = b.tape->value(b.id);
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
    const std::size_t aid = a.id, bid = b.id;
    return a.tape->record(a.shape(), std::move(out), [aid, bid](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        const auto& av = t.value(aid);
        const auto& bv = t.value(bid);
        auto& ga = t.grad(aid);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        auto& gb = t.grad(bid);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    });
}

Var scale(Var x, double c) {
    return unary(x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

Var add_scalar(Var x, double c) {
    return unary(x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Var one_minus(Var x) {
    return unary(x, [](double v) { return 1.0 - v; }, [](double, double) { return -1.0; });
}

Var mul_const(Var x, std::span<const double> c) {
    const auto& xv = x.tape->value(x.id);
    require(c.size() == xv.size(), "mul_const: " + std::to_string(c.size()) + " constants for shape " +
                                       shape_str(x.shape()));
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * c[i];
    std::vector<double> k(c.begin(), c.end());
    const std::size_t xid = x.id;
    return x.tape->record(x.shape(), std::move(out), [xid, k = std::move(k)](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        auto& gx = t.grad(xid);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * k[i];
    });
}

Var matmul(Var x, Var w) {
    require_rank(x, 2, "matmul");
    require_rank(w, 2, "matmul");
    require(x.shape()[1] == w.shape()[0],
            "matmul: shape mismatch " + shape_str(x.shape()) + " vs " + shape_str(w.shape()));
    const std::size_t m = x.shape()[0], k = x.shape()[1], n = w.shape()[1];
    std::vector<double> out(m * n);
    kernels::gemm(m, n, k, x.tape->value(x.id), w.tape->value(w.id), out, false);
    const std::size_t xid = x.id, wid = w.id;
    return x.tape->record({m, n}, std::move(out), [xid, wid, m, n, k](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        kernels::gemm_nt_acc(m, n, k, g, t.value(wid), t.grad(xid));
        kernels::gemm_tn_acc(m, n, k, t.value(xid), g, t.grad(wid));
    });
}

Var add_bias(Var x, Var bias) {
    require_rank(x, 2, "add_bias");
    require(bias.shape() == Shape{x.shape()[1]},
            "add_bias: shape mismatch " + shape_str(x.shape()) + " vs " + shape_str(bias.shape()));
    const std::size_t rows = x.shape()[0], cols = x.shape()[1];
    const auto& xv = x.tape->value(x.id);
    const auto& bv = bias.tape->value(bias.id);
    std::vector<double> out(xv.size());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = xv[r * cols + c] + bv[c];
    }
    const std::size_t xid = x.id, bid = bias.id;
    return x.tape->record(x.shape(), std::move(out), [xid, bid, rows, cols](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        auto& gx = t.grad(xid);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        auto& gb = t.grad(bid);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) gb[c] += g[r * cols + c];
        }
    });
}

Var dense(Var x, Var weights, Var bias) { return add_bias(matmul(x, weights), bias); }

Var sigmoid(Var x) {
    return unary(x, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var x) {
    return unary(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var x) {
    return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var softplus(Var x) {
    return unary(
        x, [](double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
        [](double v, double) { return stable_sigmoid(v); });
}

Var exp(Var x) {
    return unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var bounded_sigmoid(Var x, double lo, double hi) {
    if (!(lo < hi)) throw UsageError("bounded_sigmoid: need lo < hi, got " + format_double(lo) + ", " + format_double(hi));
    const double span = hi - lo;
    return unary(
        x,
        [=](double v) {
            const double s = stable_sigmoid(v);
            if (s <= 0.0) return lo;
            if (s >= 1.0) return hi;
            return std::clamp(lo + span * s, lo, hi);
        },
        [=](double v, double) {
            const double s = stable_sigmoid(v);
            return span * s * (1.0 - s);
        });
}

Var softmax(Var x) {
    require_rank(x, 2, "softmax");
    const std::size_t rows = x.shape()[0], cols = x.shape()[1];
    const auto& xv = x.tape->value(x.id);
    std::vector<double> out(xv.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = xv.data() + r * cols;
        double* o = out.data() + r * cols;
        const double mx = *std::max_element(in, in + cols);
        double z = 0.0;
        for (std::size_t c = 0; c < cols; ++c) z += (o[c] = std::exp(in[c] - mx));
        for (std::size_t c = 0; c < cols; ++c) o[c] /= z;
    }
    const std::size_t xid = x.id;
    return x.tape->record(x.shape(), std::move(out), [xid, rows, cols](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        const auto& y = t.value(self);
        auto& gx = t.grad(xid);
        for (std::size_t r = 0; r < rows; ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < cols; ++c) dot += g[r * cols + c] * y[r * cols + c];
            for (std::size_t c = 0; c < cols; ++c) gx[r * cols + c] += y[r * cols + c] * (g[r * cols + c] - dot);
        }
    });
}

Var concat(std::span<const Var> xs) {
    require(!xs.empty(), "concat: no inputs");
    Tape* tape = xs[0].tape;
    const std::size_t rows = xs[0].shape().at(0);
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (const auto& x : xs) {
        require_rank(x, 2, "concat");
        require(x.tape == tape, "concat: variables on different tapes");
        require(x.shape()[0] == rows, "concat: row mismatch " + shape_str(xs[0].shape()) + " vs " + shape_str(x.shape()));
        widths.push_back(x.shape()[1]);
        total += x.shape()[1];
    }
    std::vector<double> out(rows * total);
    std::size_t offset = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto& v = tape->value(xs[i].id);
        for (std::size_t r = 0; r < rows; ++r) {
            std::copy_n(v.data() + r * widths[i], widths[i], out.data() + r * total + offset);
        }
        offset += widths[i];
    }
    std::vector<std::size_t> ids;
    for (const auto& x : xs) ids.push_back(x.id);
    return tape->record({rows, total}, std::move(out), [ids, widths, rows, total](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        std::size_t offset = 0;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            auto& gx = t.grad(ids[i]);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < widths[i]; ++c) gx[r * widths[i] + c] += g[r * total + offset + c];
            }
            offset += widths[i];
        }
    });
}

Var concat(std::initializer_list<Var> xs) { return concat(std::span<const Var>(xs.begin(), xs.size())); }

Var slice_cols(Var x, std::size_t begin, std::size_t end) {
    require_rank(x, 2, "slice_cols");
    const std::size_t rows = x.shape()[0], cols = x.shape()[1];
    require(begin < end && end <= cols, "slice_cols: invalid range for " + shape_str(x.shape()));
    const std::size_t w = end - begin;
    const auto& xv = x.tape->value(x.id);
    std::vector<double> out(rows * w);
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(xv.data() + r * cols + begin, w, out.data() + r * w);
    const std::size_t xid = x.id;
    return x.tape->record({rows, w}, std::move(out), [xid, rows, cols, begin, w](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        auto& gx = t.grad(xid);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < w; ++c) gx[r * cols + begin + c] += g[r * w + c];
        }
    });
}

Var reshape(Var x, Shape shape) {
    require(numel(shape) == numel(x.shape()),
            "reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
    const std::size_t xid = x.id;
    return x.tape->record(std::move(shape), x.tape->value(x.id), [xid](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        auto& gx = t.grad(xid);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
}

Var embedding_lookup(Var table, std::span<const std::size_t> indices) {
    require_rank(table, 2, "embedding_lookup");
    const std::size_t vocab = table.shape()[0], dim = table.shape()[1];
    const auto& tv = table.tape->value(table.id);
    std::vector<double> out(indices.size() * dim);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        require(indices[i] < vocab, "embedding_lookup: index " + std::to_string(indices[i]) +
                                        " outside table " + shape_str(table.shape()));
        std::copy_n(tv.data() + indices[i] * dim, dim, out.data() + i * dim);
    }
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    const std::size_t tid = table.id;
    return table.tape->record({indices.size(), dim}, std::move(out),
                              [tid, idx = std::move(idx), dim](Tape& t, std::size_t self) {
                                  const auto& g = t.grad(self);
                                  auto& gt = t.grad(tid);
                                  for (std::size_t i = 0; i < idx.size(); ++i) {
                                      for (std::size_t d = 0; d < dim; ++d) gt[idx[i] * dim + d] += g[i * dim + d];
                                  }
                              });
}

Var sum(Var x) {
    const auto& xv = x.tape->value(x.id);
    double s = 0.0;
    for (double v : xv) s += v;
    const std::size_t xid = x.id;
    return x.tape->record({1}, {s}, [xid](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        auto& gx = t.grad(xid);
        for (auto& v : gx) v += g;
    });
}

Var mean(Var x) {
    const auto n = static_cast<double>(numel(x.shape()));
    require(n > 0, "mean: empty tensor");
    return scale(sum(x), 1.0 / n);
}

Var conv1d(Var x, Var kernel, Var bias) {
    require_rank(x, 3, "conv1d");
    require_rank(kernel, 3, "conv1d");
    kernels::ConvShape s{x.shape()[0], x.shape()[1], x.shape()[2], kernel.shape()[0], kernel.shape()[2]};
    require(kernel.shape()[1] == s.channels,
            "conv1d: shape mismatch " + shape_str(x.shape()) + " vs kernel " + shape_str(kernel.shape()));
    require(s.width >= 1 && s.width <= s.length,
            "conv1d: kernel " + shape_str(kernel.shape()) + " wider than sequence " + shape_str(x.shape()));
    require(bias.shape() == Shape{s.filters}, "conv1d: bias shape " + shape_str(bias.shape()) +
                                                  " does not match kernel " + shape_str(kernel.shape()));
    std::vector<double> out(s.batch * s.out_length() * s.filters);
    kernels::conv1d(s, x.tape->value(x.id), kernel.tape->value(kernel.id), bias.tape->value(bias.id), out);
    const std::size_t xid = x.id, kid = kernel.id, bid = bias.id;
    return x.tape->record({s.batch, s.out_length(), s.filters}, std::move(out),
                          [xid, kid, bid, s](Tape& t, std::size_t self) {
                              const auto& g = t.grad(self);
                              kernels::conv1d_input_grad(s, g, t.value(kid), t.grad(xid));
                              kernels::conv1d_param_grad(s, t.value(xid), g, t.grad(kid), t.grad(bid));
                          });
}

Var avg_pool(Var x) {
    require_rank(x, 3, "avg_pool");
    const std::size_t b = x.shape()[0], steps = x.shape()[1], f = x.shape()[2];
    require(steps > 0, "avg_pool: empty time axis");
    const auto& xv = x.tape->value(x.id);
    std::vector<double> out(b * f, 0.0);
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t t = 0; t < steps; ++t) {
            for (std::size_t k = 0; k < f; ++k) out[i * f + k] += xv[(i * steps + t) * f + k];
        }
    }
    const double inv = 1.0 / static_cast<double>(steps);
    for (auto& v : out) v *= inv;
    const std::size_t xid = x.id;
    return x.tape->record({b, f}, std::move(out), [xid, b, steps, f, inv](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        auto& gx = t.grad(xid);
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t s = 0; s < steps; ++s) {
                for (std::size_t k = 0; k < f; ++k) gx[(i * steps + s) * f + k] += g[i * f + k] * inv;
            }
        }
    });
}

Var time_step(Var x, std::size_t step) {
    require_rank(x, 3, "time_step");
    const std::size_t b = x.shape()[0], steps = x.shape()[1], c = x.shape()[2];
    require(step < steps, "time_step: step out of range for " + shape_str(x.shape()));
    const auto& xv = x.tape->value(x.id);
    std::vector<double> out(b * c);
    for (std::size_t i = 0; i < b; ++i) std::copy_n(xv.data() + (i * steps + step) * c, c, out.data() + i * c);
    const std::size_t xid = x.id;
    return x.tape->record({b, c}, std::move(out), [xid, b, steps, c, step](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        auto& gx = t.grad(xid);
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t k = 0; k < c; ++k) gx[(i * steps + step) * c + k] += g[i * c + k];
        }
    });
}

Var stack_time(std::span<const Var> steps) {
    require(!steps.empty(), "stack_time: no steps");
    Tape* tape = steps[0].tape;
    const Shape s0 = steps[0].shape();
    require(s0.size() == 2, "stack_time: steps must be [B,C], got " + shape_str(s0));
    const std::size_t b = s0[0], c = s0[1], n = steps.size();
    std::vector<double> out(b * n * c);
    std::vector<std::size_t> ids;
    for (std::size_t t = 0; t < n; ++t) {
        require(steps[t].shape() == s0, "stack_time: shape mismatch " + shape_str(s0) + " vs " +
                                            shape_str(steps[t].shape()));
        const auto& v = tape->value(steps[t].id);
        for (std::size_t i = 0; i < b; ++i) std::copy_n(v.data() + i * c, c, out.data() + (i * n + t) * c);
        ids.push_back(steps[t].id);
    }
    return tape->record({b, n, c}, std::move(out), [ids, b, n, c](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        for (std::size_t s = 0; s < n; ++s) {
            auto& gx = t.grad(ids[s]);
            for (std::size_t i = 0; i < b; ++i) {
                for (std::size_t k = 0; k < c; ++k) gx[i * c + k] += g[(i * n + s) * c + k];
            }
        }
    });
}

Var factorization_machine(Var x, Var w0, Var w, Var factors) {
    require_rank(x, 2, "factorization_machine");
    const std::size_t rows = x.shape()[0], n = x.shape()[1];
    require(w0.shape() == Shape{1}, "factorization_machine: w0 must be [1], got " + shape_str(w0.shape()));
    require(w.shape() == Shape{n},
            "factorization_machine: shape mismatch " + shape_str(x.shape()) + " vs w " + shape_str(w.shape()));
    require(factors.shape().size() == 2 && factors.shape()[0] == n,
            "factorization_machine: shape mismatch " + shape_str(x.shape()) + " vs V " + shape_str(factors.shape()));
    const std::size_t k = factors.shape()[1];
    const auto& xv = x.tape->value(x.id);
    const auto& wv = w.tape->value(w.id);
    const auto& vv = factors.tape->value(factors.id);
    const double bias = w0.tape->value(w0.id)[0];

    std::vector<double> out(rows);
    std::vector<double> sums(rows * k, 0.0);  // s_f per row, reused by backward
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = xv.data() + r * n;
        double linear = bias;
        for (std::size_t i = 0; i < n; ++i) linear += wv[i] * xr[i];
        double pair = 0.0;
        for (std::size_t f = 0; f < k; ++f) {
            double s = 0.0, sq = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double t = vv[i * k + f] * xr[i];
                s += t;
                sq += t * t;
            }
            sums[r * k + f] = s;
            pair += s * s - sq;
        }
        out[r] = linear + 0.5 * pair;
    }
    const std::size_t xid = x.id, w0id = w0.id, wid = w.id, vid = factors.id;
    return x.tape->record({rows, 1}, std::move(out),
                          [xid, w0id, wid, vid, rows, n, k, sums = std::move(sums)](Tape& t, std::size_t self) {
                              const auto& g = t.grad(self);
                              const auto& xv = t.value(xid);
                              const auto& wv = t.value(wid);
                              const auto& vv = t.value(vid);
                              auto& gx = t.grad(xid);
                              auto& gw0 = t.grad(w0id);
                              auto& gw = t.grad(wid);
                              auto& gv = t.grad(vid);
                              for (std::size_t r = 0; r < rows; ++r) {
                                  const double gr = g[r];
                                  const double* xr = xv.data() + r * n;
                                  const double* s = sums.data() + r * k;
                                  gw0[0] += gr;
                                  for (std::size_t i = 0; i < n; ++i) {
                                      gw[i] += gr * xr[i];
                                      double dxi = wv[i];
                                      for (std::size_t f = 0; f < k; ++f) {
                                          const double v = vv[i * k + f];
                                          dxi += v * s[f] - v * v * xr[i];
                                          gv[i * k + f] += gr * (xr[i] * s[f] - v * xr[i] * xr[i]);
                                      }
                                      gx[r * n + i] += gr * dxi;
                                  }
                              }
                          });
}

Var time_attention(Var values, Var keys, Var query) {
    require_rank(values, 3, "time_attention");
    require_same(values, keys, "time_attention");
    require_rank(query, 2, "time_attention");
    const std::size_t b = values.shape()[0], steps = values.shape()[1], d = values.shape()[2];
    require(steps >= 1, "time_attention: need at least one time step");
    require(query.shape() == Shape{b, d}, "time_attention: shape mismatch " + shape_str(values.shape()) +
                                              " vs query " + shape_str(query.shape()));
    const auto& vv = values.tape->value(values.id);
    const auto& kv = keys.tape->value(keys.id);
    const auto& qv = query.tape->value(query.id);
    std::vector<double> weights(b * steps);
    std::vector<double> out(b * d, 0.0);
    for (std::size_t i = 0; i < b; ++i) {
        double mx = -INFINITY;
        for (std::size_t s = 0; s < steps; ++s) {
            double score = 0.0;
            for (std::size_t k = 0; k < d; ++k) score += kv[(i * steps + s) * d + k] * qv[i * d + k];
            weights[i * steps + s] = score;
            mx = std::max(mx, score);
        }
        double z = 0.0;
        for (std::size_t s = 0; s < steps; ++s) z += (weights[i * steps + s] = std::exp(weights[i * steps + s] - mx));
        for (std::size_t s = 0; s < steps; ++s) {
            const double a = (weights[i * steps + s] /= z);
            for (std::size_t k = 0; k < d; ++k) out[i * d + k] += a * vv[(i * steps + s) * d + k];
        }
    }
    const std::size_t vid = values.id, kid = keys.id, qid = query.id;
    return values.tape->record(
        {b, d}, std::move(out), [vid, kid, qid, b, steps, d, weights = std::move(weights)](Tape& t, std::size_t self) {
            const auto& g = t.grad(self);
            const auto& vv = t.value(vid);
            const auto& kv = t.value(kid);
            const auto& qv = t.value(qid);
            auto& gv = t.grad(vid);
            auto& gk = t.grad(kid);
            auto& gq = t.grad(qid);
            std::vector<double> da(steps);
            for (std::size_t i = 0; i < b; ++i) {
                double weighted = 0.0;
                for (std::size_t s = 0; s < steps; ++s) {
                    const double a = weights[i * steps + s];
                    double dot = 0.0;
                    for (std::size_t k = 0; k < d; ++k) {
                        gv[(i * steps + s) * d + k] += a * g[i * d + k];
                        dot += g[i * d + k] * vv[(i * steps + s) * d + k];
                    }
                    da[s] = dot;
                    weighted += a * dot;
                }
                for (std::size_t s = 0; s < steps; ++s) {
                    const double ds = weights[i * steps + s] * (da[s] - weighted);
                    for (std::size_t k = 0; k < d; ++k) {
                        gk[(i * steps + s) * d + k] += ds * qv[i * d + k];
                        gq[i * d + k] += ds * kv[(i * steps + s) * d + k];
                    }
                }
            }
        });
}

Var huber(Var residual, double theta) {
    if (!(theta > 0.0)) throw UsageError("huber: theta must be positive");
    return unary(
        residual, [theta](double x) { return huber_value(x, theta); },
        [theta](double x, double) { return std::abs(x) <= theta ? x : (x > 0 ? theta : -theta); });
}

Var dropout(Var x, double rate, bool training, std::mt19937_64& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw UsageError("dropout: rate must lie in [0, 1)");
    if (!training || rate == 0.0) return x;
    std::bernoulli_distribution keep(1.0 - rate);
    const double scale_up = 1.0 / (1.0 - rate);
    std::vector<double> mask(numel(x.shape()));
    for (auto& m : mask) m = keep(rng) ? scale_up : 0.0;
    return mul_const(x, mask);
}

Var selector_block(Var x, Var weights, Var bias) {
    require_rank(x, 2, "selector_block");
    const std::size_t n = x.shape()[1];
    require(weights.shape() == Shape{n, n},
            "selector_block: shape mismatch " + shape_str(x.shape()) + " vs W " + shape_str(weights.shape()));
    return hadamard(x, sigmoid(dense(x, weights, bias)));
}

Var gating(Var x, Var v_group, Var v_room, Var sb_weights, Var sb_bias) {
    require_same(v_group, v_room, "gating");
    require_same(x, v_group, "gating");
    auto gate = sigmoid(hadamard(selector_block(v_group, sb_weights, sb_bias),
                                 selector_block(v_room, sb_weights, sb_bias)));
    return hadamard(x, gate);
}

Var gru_cell(Var x, Var h_prev, const GruParams& p) {
    require_rank(x, 2, "gru_cell");
    require_rank(h_prev, 2, "gru_cell");
    require(p.u_z.shape().size() == 2 && p.u_z.shape()[0] == h_prev.shape()[1],
            "gru_cell: hidden size mismatch " + shape_str(h_prev.shape()) + " vs U " + shape_str(p.u_z.shape()));
    auto z = sigmoid(add(dense(x, p.w_z, p.b_z), matmul(h_prev, p.u_z)));
    auto r = sigmoid(add(dense(x, p.w_r, p.b_r), matmul(h_prev, p.u_r)));
    auto cand = tanh(add(dense(x, p.w_h, p.b_h), matmul(hadamard(r, h_prev), p.u_h)));
    return add(hadamard(one_minus(z), h_prev), hadamard(z, cand));
}

Var bi_gru(Var seq, const GruParams& fwd, const GruParams& bwd) {
    require_rank(seq, 3, "bi_gru");
    const std::size_t b = seq.shape()[0], steps = seq.shape()[1];
    require(steps >= 1, "bi_gru: empty sequence");
    const std::size_t hf = fwd.b_z.shape().at(0), hb = bwd.b_z.shape().at(0);
    Tape& tape = *seq.tape;

    std::vector<Var> forward_states;
    Var h = tape.constant(Tensor::zeros({b, hf}));
    for (std::size_t t = 0; t < steps; ++t) {
        h = gru_cell(time_step(seq, t), h, fwd);
        forward_states.push_back(h);
    }
    std::vector<Var> backward_states(steps);
    Var hbk = tape.constant(Tensor::zeros({b, hb}));
    for (std::size_t t = steps; t-- > 0;) {
        hbk = gru_cell(time_step(seq, t), hbk, bwd);
        backward_states[t] = hbk;
    }
    std::vector<Var> merged;
    for (std::size_t t = 0; t < steps; ++t) merged.push_back(concat({forward_states[t], backward_states[t]}));
    return stack_time(merged);
}

}  // namespace elastica::ad
