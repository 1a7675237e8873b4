#pragma once

#include <functional>
#include <span>
#include <vector>

#include "setfunc/matrix.hpp"

namespace setfunc {

/// Execution lane for the data-parallel kernels. Every parallel kernel is
/// written so its output is bitwise identical to the serial reference:
/// threads only ever own disjoint output blocks, and reductions use a fixed
/// chunk layout that does not depend on the thread count.
enum class Exec { Serial, Parallel };

/// Default lane: Parallel when built with OpenMP, Serial otherwise.
Exec default_exec();

// ---- matrix products -------------------------------------------------------

void matmul_into(const Matrix& a, const Matrix& b, Matrix& out, Exec exec);
Matrix matmul(const Matrix& a, const Matrix& b, Exec exec);
Matrix matmul(const Matrix& a, const Matrix& b);

/// out = aᵀ·b without materializing the transpose.
Matrix matmul_transpose_a(const Matrix& a, const Matrix& b, Exec exec);
/// out = a·bᵀ without materializing the transpose.
Matrix matmul_transpose_b(const Matrix& a, const Matrix& b, Exec exec);

// ---- elementwise activations ----------------------------------------------

enum class Activation { Relu, Tanh, Softplus };

double softplus(double x);

/// d/dx softplus(x) = logistic sigmoid, stable for large |x|.
double sigmoid(double x);

Matrix activation(const Matrix& x, Activation kind, Exec exec);
Matrix activation(const Matrix& x, Activation kind);

/// Elementwise derivative of the activation evaluated at the
/// pre-activation x.
Matrix activation_grad(const Matrix& x, Activation kind, Exec exec);
Matrix activation_grad(const Matrix& x, Activation kind);

// ---- reductions ------------------------------------------------------------

/// ln Σ exp(vᵢ) via max-shift; throws DomainError on empty input.
double logsumexp(std::span<const double> v);

/// ln Σ exp(base[i*stride]) for i in [0, n); the column-strided variant
/// used by per-dimension aggregation.
double logsumexp_strided(const double* base, std::size_t n, std::size_t stride);

/// Deterministic chunked-pairwise sum: leaves are fixed 64-element blocks
/// summed left to right, partials combined by pairwise halving. The same
/// tree is evaluated on both lanes, so Serial and Parallel agree bitwise.
double tree_sum(std::span<const double> v, Exec exec);
double tree_sum(std::span<const double> v);

/// Chunked-pairwise accumulation of `count` dim-dimensional vectors
/// produced by eval(index, out_ptr). Same determinism contract as
/// tree_sum; used by the Janossy enumerations.
void tree_sum_vectors(std::size_t count, std::size_t dim,
                      const std::function<void(std::size_t, double*)>& eval,
                      std::vector<double>& out, Exec exec);

}  // namespace setfunc
