#include "setfunc/mlp.hpp"

#include <cmath>
#include <string>

#include "setfunc/errors.hpp"

namespace setfunc {

Activation to_activation(Act a) {
    return a == Act::Relu ? Activation::Relu : Activation::Tanh;
}

void MlpSpec::validate() const {
    if (widths.empty()) throw ConfigError("MlpSpec: needs at least one width");
    for (std::size_t w : widths) {
        if (w == 0) throw ConfigError("MlpSpec: zero layer width");
    }
}

Mlp Mlp::init(const MlpSpec& spec, Rng& rng) {
    spec.validate();
    Mlp mlp;
    mlp.spec = spec;
    for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
        const std::size_t fan_in = spec.widths[l], fan_out = spec.widths[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_in, fan_out);
        for (double& v : w.data()) v = rng.uniform(-bound, bound);
        mlp.weights.push_back(std::move(w));
        mlp.biases.emplace_back(fan_out, 0.0);
    }
    return mlp;
}

std::size_t Mlp::num_params() const {
    std::size_t n = 0;
    for (const Matrix& w : weights) n += w.size();
    for (const auto& b : biases) n += b.size();
    return n;
}

MlpGrads MlpGrads::zeros_like(const Mlp& mlp) {
    MlpGrads g;
    for (const Matrix& w : mlp.weights) g.weights.emplace_back(w.rows(), w.cols(), 0.0);
    for (const auto& b : mlp.biases) g.biases.emplace_back(b.size(), 0.0);
    return g;
}

namespace {

void add_bias_rows(Matrix& m, const std::vector<double>& bias) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double* row = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) row[j] += bias[j];
    }
}

Matrix positive_map(const Matrix& z) {
    Matrix out(z.rows(), z.cols());
    for (std::size_t i = 0; i < z.size(); ++i)
        out.data()[i] = softplus(z.data()[i]) + kPositiveOutputEps;
    return out;
}

void column_sums_into(const Matrix& m, std::vector<double>& out) {
    out.assign(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* row = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) out[j] += row[j];
    }
}

void hadamard_inplace(Matrix& a, const Matrix& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] *= b.data()[i];
}

}  // namespace

Matrix mlp_forward(const Mlp& mlp, const Matrix& x, MlpCache* cache) {
    if (x.cols() != mlp.spec.input_width()) {
        throw ShapeError("mlp_forward: input has " + std::to_string(x.cols()) +
                         " features, spec expects " + std::to_string(mlp.spec.input_width()));
    }
    if (cache) {
        cache->inputs.clear();
        cache->pre.clear();
    }

    Matrix h = x;
    const std::size_t layers = mlp.spec.num_layers();
    const Activation act = to_activation(mlp.spec.activation);
    for (std::size_t l = 0; l < layers; ++l) {
        if (cache) cache->inputs.push_back(h);
        Matrix z = matmul(h, mlp.weights[l]);
        add_bias_rows(z, mlp.biases[l]);
        if (cache) cache->pre.push_back(z);
        h = (l + 1 < layers) ? activation(z, act) : std::move(z);
    }
    if (mlp.spec.positive_output) {
        if (cache && layers == 0) cache->pre.push_back(h);  // identity spec: z is the input
        h = positive_map(cache && layers > 0 ? cache->pre.back() : h);
    }
    if (cache) cache->output = h;
    return h;
}

Matrix mlp_backward(const Mlp& mlp, const MlpCache& cache, const Matrix& out_grad,
                    MlpGrads& grads) {
    const std::size_t layers = mlp.spec.num_layers();
    Matrix delta = out_grad;

    if (mlp.spec.positive_output) {
        const Matrix& z = cache.pre.back();
        Matrix slope(z.rows(), z.cols());
        for (std::size_t i = 0; i < z.size(); ++i) slope.data()[i] = sigmoid(z.data()[i]);
        hadamard_inplace(delta, slope);
    }
    if (layers == 0) return delta;  // identity spec

    const Activation act = to_activation(mlp.spec.activation);
    for (std::size_t l = layers; l-- > 0;) {
        // Parameter grads for layer l.
        Matrix gw = matmul_transpose_a(cache.inputs[l], delta, default_exec());
        for (std::size_t i = 0; i < gw.size(); ++i) grads.weights[l].data()[i] += gw.data()[i];
        std::vector<double> gb;
        column_sums_into(delta, gb);
        for (std::size_t j = 0; j < gb.size(); ++j) grads.biases[l][j] += gb[j];

        if (l == 0) {
            return matmul_transpose_b(delta, mlp.weights[l], default_exec());
        }
        delta = matmul_transpose_b(delta, mlp.weights[l], default_exec());
        const Matrix slope = activation_grad(cache.pre[l - 1], act);
        hadamard_inplace(delta, slope);
    }
    return delta;
}

}  // namespace setfunc
