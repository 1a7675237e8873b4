#include "setfunc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "setfunc/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace setfunc {

namespace {

constexpr std::size_t kTreeBlock = 64;

// Work below this many multiply-adds is not worth a parallel region.
constexpr std::size_t kMatmulParallelCutoff = 16364;

void check_inner(const Matrix& a, const Matrix& b, std::size_t a_inner, std::size_t b_inner,
                 const char* op) {
    if (a_inner != b_inner) {
        throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                         shape_str(b));
    }
}

}  // namespace

Exec default_exec() {
#ifdef _OPENMP
    return Exec::Parallel;
#else
    return Exec::Serial;
#endif
}

// ---- matrix products -------------------------------------------------------

void matmul_into(const Matrix& a, const Matrix& b, Matrix& out, Exec exec) {
    check_inner(a, b, a.cols(), b.rows(), "matmul");
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    if (out.rows() != n || out.cols() != m) out = Matrix(n, m);
    std::fill(out.data().begin(), out.data().end(), 0.0);

    const auto row_product = [&](std::size_t i) {
        double* out_row = out.row(i);
        const double* a_row = a.row(i);
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = a_row[kk];
            const double* b_row = b.row(kk);
            for (std::size_t j = 0; j < m; ++j) out_row[j] += av * b_row[j];
        }
    };

#ifdef _OPENMP
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
            row_product(static_cast<std::size_t>(i));
        return;
    }
#else
    (void)exec;
#endif
    for (std::size_t i = 0; i < n; ++i) row_product(i);
}

Matrix matmul(const Matrix& a, const Matrix& b, Exec exec) {
    Matrix out;
    matmul_into(a, b, out, exec);
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    const std::size_t work = a.rows() * a.cols() * b.cols();
    return matmul(a, b, work >= kMatmulParallelCutoff ? default_exec() : Exec::Serial);
}

Matrix matmul_transpose_a(const Matrix& a, const Matrix& b, Exec exec) {
    check_inner(a, b, a.rows(), b.rows(), "matmul_transpose_a");
    const std::size_t n = a.rows(), m = a.cols(), p = b.cols();
    Matrix out(m, p, 0.0);

    const auto fill_row = [&](std::size_t i) {
        double* out_row = out.row(i);
        for (std::size_t kk = 0; kk < n; ++kk) {
            const double av = a(kk, i);
            const double* b_row = b.row(kk);
            for (std::size_t j = 0; j < p; ++j) out_row[j] += av * b_row[j];
        }
    };

#ifdef _OPENMP
    if (exec == Exec::Parallel && m * n * p >= kMatmulParallelCutoff) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i)
            fill_row(static_cast<std::size_t>(i));
        return out;
    }
#else
    (void)exec;
#endif
    for (std::size_t i = 0; i < m; ++i) fill_row(i);
    return out;
}

Matrix matmul_transpose_b(const Matrix& a, const Matrix& b, Exec exec) {
    check_inner(a, b, a.cols(), b.cols(), "matmul_transpose_b");
    const std::size_t n = a.rows(), k = a.cols(), p = b.rows();
    Matrix out(n, p, 0.0);

    const auto fill_row = [&](std::size_t i) {
        const double* a_row = a.row(i);
        double* out_row = out.row(i);
        for (std::size_t j = 0; j < p; ++j) {
            const double* b_row = b.row(j);
            double acc = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) acc += a_row[kk] * b_row[kk];
            out_row[j] = acc;
        }
    };

#ifdef _OPENMP
    if (exec == Exec::Parallel && n * k * p >= kMatmulParallelCutoff) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
            fill_row(static_cast<std::size_t>(i));
        return out;
    }
#else
    (void)exec;
#endif
    for (std::size_t i = 0; i < n; ++i) fill_row(i);
    return out;
}

// ---- elementwise activations ----------------------------------------------

double softplus(double x) {
    if (x > 30.0) return x;
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

namespace {

double activation_value(double x, Activation kind) {
    switch (kind) {
        case Activation::Relu: return x > 0.0 ? x : 0.0;
        case Activation::Tanh: return std::tanh(x);
        case Activation::Softplus: return softplus(x);
    }
    return 0.0;
}

double activation_slope(double x, Activation kind) {
    switch (kind) {
        case Activation::Relu: return x > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Activation::Softplus: return sigmoid(x);
    }
    return 0.0;
}

template <class F>
Matrix elementwise(const Matrix& x, Exec exec, F&& f) {
    Matrix out(x.rows(), x.cols());
    const std::size_t n = x.size();
    const double* src = x.data().data();
    double* dst = out.data().data();
#ifdef _OPENMP
    if (exec == Exec::Parallel && n >= 4096) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) dst[i] = f(src[i]);
        return out;
    }
#else
    (void)exec;
#endif
    for (std::size_t i = 0; i < n; ++i) dst[i] = f(src[i]);
    return out;
}

}  // namespace

Matrix activation(const Matrix& x, Activation kind, Exec exec) {
    return elementwise(x, exec, [kind](double v) { return activation_value(v, kind); });
}

Matrix activation(const Matrix& x, Activation kind) { return activation(x, kind, default_exec()); }

Matrix activation_grad(const Matrix& x, Activation kind, Exec exec) {
    return elementwise(x, exec, [kind](double v) { return activation_slope(v, kind); });
}

Matrix activation_grad(const Matrix& x, Activation kind) {
    return activation_grad(x, kind, default_exec());
}

// ---- reductions ------------------------------------------------------------

double logsumexp(std::span<const double> v) {
    if (v.empty()) throw DomainError("logsumexp: empty input");
    return logsumexp_strided(v.data(), v.size(), 1);
}

double logsumexp_strided(const double* base, std::size_t n, std::size_t stride) {
    if (n == 0) throw DomainError("logsumexp: empty input");
    double mx = base[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, base[i * stride]);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::exp(base[i * stride] - mx);
    return mx + std::log(acc);
}

namespace {

// Combines block partials by repeated pairwise halving; the pairing depends
// only on the partial count, never on threading.
double combine_partials(std::vector<double>& partials) {
    std::size_t nb = partials.size();
    while (nb > 1) {
        const std::size_t half = nb / 2;
        for (std::size_t i = 0; i < half; ++i) partials[i] = partials[2 * i] + partials[2 * i + 1];
        if (nb % 2 == 1) {
            partials[half] = partials[nb - 1];
            nb = half + 1;
        } else {
            nb = half;
        }
    }
    return nb == 1 ? partials[0] : 0.0;
}

}  // namespace

double tree_sum(std::span<const double> v, Exec exec) {
    const std::size_t n = v.size();
    if (n == 0) return 0.0;
    const std::size_t nblocks = (n + kTreeBlock - 1) / kTreeBlock;
    std::vector<double> partials(nblocks, 0.0);

    const auto block_sum = [&](std::size_t b) {
        const std::size_t lo = b * kTreeBlock;
        const std::size_t hi = std::min(lo + kTreeBlock, n);
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += v[i];
        partials[b] = acc;
    };

#ifdef _OPENMP
    if (exec == Exec::Parallel && nblocks > 1) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks); ++b)
            block_sum(static_cast<std::size_t>(b));
    } else
#else
    (void)exec;
#endif
    {
        for (std::size_t b = 0; b < nblocks; ++b) block_sum(b);
    }
    return combine_partials(partials);
}

double tree_sum(std::span<const double> v) { return tree_sum(v, default_exec()); }

void tree_sum_vectors(std::size_t count, std::size_t dim,
                      const std::function<void(std::size_t, double*)>& eval,
                      std::vector<double>& out, Exec exec) {
    out.assign(dim, 0.0);
    if (count == 0) return;
    const std::size_t nblocks = (count + kTreeBlock - 1) / kTreeBlock;
    std::vector<double> partials(nblocks * dim, 0.0);

    const auto block_sum = [&](std::size_t b) {
        const std::size_t lo = b * kTreeBlock;
        const std::size_t hi = std::min(lo + kTreeBlock, count);
        std::vector<double> tmp(dim);
        double* dst = partials.data() + b * dim;
        for (std::size_t i = lo; i < hi; ++i) {
            eval(i, tmp.data());
            for (std::size_t d = 0; d < dim; ++d) dst[d] += tmp[d];
        }
    };

#ifdef _OPENMP
    if (exec == Exec::Parallel && nblocks > 1) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks); ++b)
            block_sum(static_cast<std::size_t>(b));
    } else
#else
    (void)exec;
#endif
    {
        for (std::size_t b = 0; b < nblocks; ++b) block_sum(b);
    }

    // Pairwise-halve the block partials, dimension-synchronously.
    std::size_t nb = nblocks;
    while (nb > 1) {
        const std::size_t half = nb / 2;
        for (std::size_t i = 0; i < half; ++i) {
            double* dst = partials.data() + i * dim;
            const double* left = partials.data() + 2 * i * dim;
            const double* right = partials.data() + (2 * i + 1) * dim;
            for (std::size_t d = 0; d < dim; ++d) dst[d] = left[d] + right[d];
        }
        if (nb % 2 == 1) {
            double* dst = partials.data() + half * dim;
            const double* last = partials.data() + (nb - 1) * dim;
            for (std::size_t d = 0; d < dim; ++d) dst[d] = last[d];
            nb = half + 1;
        } else {
            nb = half;
        }
    }
    std::copy(partials.begin(), partials.begin() + static_cast<std::ptrdiff_t>(dim), out.begin());
}

}  // namespace setfunc
