#pragma once

#include <cstddef>
#include <vector>

#include "setfunc/kernels.hpp"
#include "setfunc/matrix.hpp"
#include "setfunc/rng.hpp"

namespace setfunc {

enum class Act { Relu, Tanh };

Activation to_activation(Act a);

/// Layer widths run input → … → output. A single entry means the identity
/// map (no parameters); positive_output appends softplus(·)+1e-6 after the
/// last linear layer so downstream power means see strictly positive values.
struct MlpSpec {
    std::vector<std::size_t> widths;
    Act activation = Act::Tanh;
    bool positive_output = false;

    bool is_identity() const { return widths.size() == 1; }
    std::size_t input_width() const { return widths.front(); }
    std::size_t output_width() const { return widths.back(); }
    std::size_t num_layers() const { return widths.size() - 1; }
    void validate() const;
};

inline constexpr double kPositiveOutputEps = 1e-6;

/// Plain fully-connected network evaluated as X·W + b per layer, hidden
/// activations between layers, linear last layer.
struct Mlp {
    MlpSpec spec;
    std::vector<Matrix> weights;              // layer l: widths[l] × widths[l+1]
    std::vector<std::vector<double>> biases;  // layer l: widths[l+1]

    static Mlp init(const MlpSpec& spec, Rng& rng);
    std::size_t num_params() const;
};

struct MlpCache {
    std::vector<Matrix> inputs;  // inputs[l] = input to layer l; inputs[0] = X
    std::vector<Matrix> pre;     // pre[l] = X·W + b before activation
    Matrix output;
};

struct MlpGrads {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    static MlpGrads zeros_like(const Mlp& mlp);
};

/// Forward over a batch of row vectors; fills cache when given.
Matrix mlp_forward(const Mlp& mlp, const Matrix& x, MlpCache* cache);

/// Backpropagates out_grad (same shape as the forward output), accumulating
/// parameter gradients into grads and returning the gradient w.r.t. x.
Matrix mlp_backward(const Mlp& mlp, const MlpCache& cache, const Matrix& out_grad,
                    MlpGrads& grads);

}  // namespace setfunc
