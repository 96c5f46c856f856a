#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hairec/distribution.hpp"
#include "hairec/error.hpp"
#include "hairec/rng.hpp"

namespace hairec {

enum class Activation { relu, sigmoid };

inline std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "sigmoid"; }

inline Activation parse_activation(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "sigmoid") return Activation::sigmoid;
    throw DomainError("unknown activation '" + s + "'");
}

/// Affine layer followed by an activation. Weights are row-major [out][in].
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;
    std::vector<double> bias;
    Activation activation = Activation::relu;

    bool operator==(const DenseLayer&) const = default;
};

/// Feed-forward action decoder. The final layer is a sigmoid whose outputs are
/// divided by their sum, so the network emits a distribution over actions.
struct Mlp {
    std::vector<DenseLayer> layers;

    std::size_t input_size() const { return layers.empty() ? 0 : layers.front().in; }
    std::size_t output_size() const { return layers.empty() ? 0 : layers.back().out; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.weights.size() + l.bias.size();
        return n;
    }

    /// Flat parameter view: each layer's weights then its bias, layer by layer.
    double& parameter(std::size_t i) {
        for (auto& l : layers) {
            if (i < l.weights.size()) return l.weights[i];
            i -= l.weights.size();
            if (i < l.bias.size()) return l.bias[i];
            i -= l.bias.size();
        }
        throw IndexOutOfRange("Mlp::parameter index out of range");
    }
    double parameter(std::size_t i) const { return const_cast<Mlp&>(*this).parameter(i); }

    bool operator==(const Mlp&) const = default;

    /// Hidden layers use ReLU, the last layer Sigmoid. Parameters are uniform in
    /// [-1/sqrt(fan_in), 1/sqrt(fan_in)].
    static Mlp create(std::span<const std::size_t> sizes, std::uint64_t seed) {
        if (sizes.size() < 2) throw DomainError("an Mlp needs at least one layer");
        Rng rng(seed);
        Mlp net;
        for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
            DenseLayer l;
            l.in = sizes[k];
            l.out = sizes[k + 1];
            l.activation = (k + 2 == sizes.size()) ? Activation::sigmoid : Activation::relu;
            const double bound = std::sqrt(1.0 / static_cast<double>(l.in));
            l.weights.resize(l.in * l.out);
            l.bias.resize(l.out);
            for (double& w : l.weights) w = (2.0 * uniform01(rng) - 1.0) * bound;
            for (double& b : l.bias) b = (2.0 * uniform01(rng) - 1.0) * bound;
            net.layers.push_back(std::move(l));
        }
        return net;
    }

    static Mlp zeros(std::span<const std::size_t> sizes) {
        Mlp net = create(sizes, 0);
        for (auto& l : net.layers) {
            std::fill(l.weights.begin(), l.weights.end(), 0.0);
            std::fill(l.bias.begin(), l.bias.end(), 0.0);
        }
        return net;
    }
};

/// Gradient with the same layout as Mlp parameters.
struct MlpGradient {
    std::vector<std::vector<double>> d_weights;
    std::vector<std::vector<double>> d_bias;
    double loss = 0.0;

    explicit MlpGradient(const Mlp& net = {}) {
        for (const auto& l : net.layers) {
            d_weights.emplace_back(l.weights.size(), 0.0);
            d_bias.emplace_back(l.bias.size(), 0.0);
        }
    }

    double flat(std::size_t i) const {
        for (std::size_t k = 0; k < d_weights.size(); ++k) {
            if (i < d_weights[k].size()) return d_weights[k][i];
            i -= d_weights[k].size();
            if (i < d_bias[k].size()) return d_bias[k][i];
            i -= d_bias[k].size();
        }
        throw IndexOutOfRange("MlpGradient::flat index out of range");
    }

    void clear() {
        for (auto& v : d_weights) std::fill(v.begin(), v.end(), 0.0);
        for (auto& v : d_bias) std::fill(v.begin(), v.end(), 0.0);
        loss = 0.0;
    }
};

namespace detail {

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// Activations per layer, index 0 is the input.
struct MlpTrace {
    std::vector<std::vector<double>> act;
};

inline void check_finite(std::span<const double> v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw NumericError(std::string("non-finite value in ") + what);
}

inline void forward_trace(const Mlp& net, std::span<const double> input, MlpTrace& tr) {
    if (net.layers.empty()) throw DomainError("empty network");
    if (input.size() != net.input_size())
        throw DimensionMismatch("network input has " + std::to_string(input.size()) +
                                " entries, expected " + std::to_string(net.input_size()));
    check_finite(input, "network input");
    tr.act.resize(net.layers.size() + 1);
    tr.act[0].assign(input.begin(), input.end());
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        const auto& l = net.layers[k];
        auto& out = tr.act[k + 1];
        out.resize(l.out);
        const auto& in = tr.act[k];
        for (std::size_t o = 0; o < l.out; ++o) {
            double z = l.bias[o];
            const double* w = l.weights.data() + o * l.in;
            for (std::size_t i = 0; i < l.in; ++i) z += w[i] * in[i];
            out[o] = (l.activation == Activation::relu) ? std::max(z, 0.0) : sigmoid(z);
        }
        check_finite(out, "network activation");
    }
}

/// Adds the gradient of -log p(target) to `grad` and returns the loss term.
inline double accumulate_gradient(const Mlp& net, const MlpTrace& tr, std::size_t target,
                                  MlpGradient& grad, std::vector<double>& delta,
                                  std::vector<double>& delta_prev) {
    const auto& sig = tr.act.back();
    if (net.layers.back().activation != Activation::sigmoid)
        throw DomainError("the output layer must be a sigmoid");
    if (target >= sig.size()) throw IndexOutOfRange("target action out of range");
    double total = 0.0;
    for (double v : sig) total += v;
    const double loss = std::log(total) - std::log(sig[target]);
    if (!std::isfinite(loss)) throw NumericError("non-finite loss");

    // dL/dz_j = s_j (1 - s_j) (1/total - [j == target]/s_j)
    delta.assign(sig.size(), 0.0);
    for (std::size_t j = 0; j < sig.size(); ++j) {
        const double dl_ds = 1.0 / total - (j == target ? 1.0 / sig[j] : 0.0);
        delta[j] = sig[j] * (1.0 - sig[j]) * dl_ds;
    }
    for (std::size_t k = net.layers.size(); k-- > 0;) {
        const auto& l = net.layers[k];
        const auto& in = tr.act[k];
        auto& dw = grad.d_weights[k];
        auto& db = grad.d_bias[k];
        for (std::size_t o = 0; o < l.out; ++o) {
            const double d = delta[o];
            if (d == 0.0) continue;
            db[o] += d;
            double* row = dw.data() + o * l.in;
            for (std::size_t i = 0; i < l.in; ++i) row[i] += d * in[i];
        }
        if (k == 0) break;
        delta_prev.assign(l.in, 0.0);
        for (std::size_t o = 0; o < l.out; ++o) {
            const double d = delta[o];
            if (d == 0.0) continue;
            const double* w = l.weights.data() + o * l.in;
            for (std::size_t i = 0; i < l.in; ++i) delta_prev[i] += w[i] * d;
        }
        // previous layer is ReLU: pass gradient only where the unit is active
        for (std::size_t i = 0; i < l.in; ++i)
            if (in[i] <= 0.0) delta_prev[i] = 0.0;
        std::swap(delta, delta_prev);
    }
    grad.loss += loss;
    return loss;
}

} // namespace detail

inline void check_parameters_finite(const Mlp& net) {
    for (const auto& l : net.layers) {
        detail::check_finite(l.weights, "network weights");
        detail::check_finite(l.bias, "network bias");
    }
}

/// Sigmoid outputs divided by their sum.
inline Distribution mlp_forward(const Mlp& net, std::span<const double> input) {
    check_parameters_finite(net);
    detail::MlpTrace tr;
    detail::forward_trace(net, input, tr);
    auto d = Distribution::normalize(tr.act.back());
    if (!d) throw NumericError("network output underflowed");
    return *d;
}

/// Loss -log p(target) and its exact parameter gradient.
inline MlpGradient mlp_gradient(const Mlp& net, std::span<const double> input, std::size_t target) {
    check_parameters_finite(net);
    detail::MlpTrace tr;
    detail::forward_trace(net, input, tr);
    MlpGradient g(net);
    std::vector<double> d1, d2;
    detail::accumulate_gradient(net, tr, target, g, d1, d2);
    return g;
}

inline double mlp_loss(const Mlp& net, std::span<const double> input, std::size_t target) {
    return -std::log(mlp_forward(net, input)[target]);
}

} // namespace hairec
