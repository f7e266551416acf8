#pragma once

// Small dense-network engine: affine layers with relu/sigmoid/linear
// activations, reverse-mode gradients, SGD/Adam and finite-difference checks.
//
// Samples are matrix columns throughout, so a batch is an in_dim x B matrix.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace iotgan::nn {

using Rng = std::mt19937_64;

template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

enum class Activation { linear, relu, sigmoid };

inline const char* to_string(Activation a) {
    switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    }
    return "linear";
}

inline Activation parse_activation(const std::string& s) {
    if (s == "linear") return Activation::linear;
    if (s == "relu") return Activation::relu;
    if (s == "sigmoid") return Activation::sigmoid;
    throw std::invalid_argument("unknown activation: " + s);
}

class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

template <class T = double>
struct DenseLayer {
    Matrix<T> weights;  // out x in
    Vector<T> bias;     // out
    Activation activation = Activation::linear;

    Eigen::Index in_dim() const { return weights.cols(); }
    Eigen::Index out_dim() const { return weights.rows(); }
};

template <class T = double>
struct DenseNet {
    std::vector<DenseLayer<T>> layers;

    Eigen::Index input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
    Eigen::Index output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
        return n;
    }

    bool all_finite() const {
        for (const auto& l : layers)
            if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
        return true;
    }

    template <class U>
    DenseNet<U> cast() const {
        DenseNet<U> out;
        for (const auto& l : layers)
            out.layers.push_back({l.weights.template cast<U>(), l.bias.template cast<U>(), l.activation});
        return out;
    }

    friend bool operator==(const DenseNet& a, const DenseNet& b) {
        if (a.layers.size() != b.layers.size()) return false;
        for (std::size_t i = 0; i < a.layers.size(); ++i) {
            const auto& x = a.layers[i];
            const auto& y = b.layers[i];
            if (x.activation != y.activation || x.weights.rows() != y.weights.rows() ||
                x.weights.cols() != y.weights.cols() || x.weights != y.weights || x.bias != y.bias)
                return false;
        }
        return true;
    }
};

struct LayerSpec {
    Eigen::Index units;
    Activation activation;
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
inline DenseNet<double> make_dense_net(Eigen::Index input_dim, const std::vector<LayerSpec>& specs, Rng& rng) {
    DenseNet<double> net;
    Eigen::Index in = input_dim;
    for (const auto& s : specs) {
        if (s.units <= 0 || in <= 0) throw std::invalid_argument("layer dimensions must be positive");
        const double limit = std::sqrt(6.0 / static_cast<double>(in + s.units));
        std::uniform_real_distribution<double> dist(-limit, limit);
        DenseLayer<double> layer;
        layer.weights.resize(s.units, in);
        for (Eigen::Index c = 0; c < in; ++c)
            for (Eigen::Index r = 0; r < s.units; ++r) layer.weights(r, c) = dist(rng);
        layer.bias = Vector<double>::Zero(s.units);
        layer.activation = s.activation;
        net.layers.push_back(std::move(layer));
        in = s.units;
    }
    return net;
}

template <class T>
T sigmoid(T x) {
    using std::exp;
    if (x >= T(0)) return T(1) / (T(1) + exp(-x));
    const T e = exp(x);
    return e / (T(1) + e);
}

/// log(1 + exp(x)) without overflow.
template <class T>
T softplus(T x) {
    using std::exp;
    using std::log1p;
    return x > T(0) ? x + log1p(exp(-x)) : log1p(exp(x));
}

template <class T>
void apply_activation(Activation a, Matrix<T>& m) {
    switch (a) {
    case Activation::linear: break;
    case Activation::relu: m = m.cwiseMax(T(0)); break;
    case Activation::sigmoid: m = m.unaryExpr([](T v) { return sigmoid(v); }); break;
    }
}

/// Layer inputs and pre-activations from one forward pass.
template <class T>
struct ForwardCache {
    std::vector<Matrix<T>> inputs;  // inputs[l] feeds layer l
    std::vector<Matrix<T>> pre;     // pre[l] = W_l inputs[l] + b_l
    Matrix<T> output;

    /// Post-activation output of layer l.
    const Matrix<T>& activation(std::size_t l) const { return l + 1 < inputs.size() ? inputs[l + 1] : output; }
};

template <class T>
void check_input(const DenseNet<T>& net, const Matrix<T>& x) {
    if (net.layers.empty()) throw DimensionMismatch("network has no layers");
    if (x.rows() != net.input_dim())
        throw DimensionMismatch("input has " + std::to_string(x.rows()) + " rows, network expects " +
                                std::to_string(net.input_dim()));
}

template <class T>
ForwardCache<T> forward(const DenseNet<T>& net, const Matrix<T>& x) {
    check_input(net, x);
    ForwardCache<T> cache;
    cache.inputs.reserve(net.layers.size());
    cache.pre.reserve(net.layers.size());
    Matrix<T> a = x;
    for (const auto& layer : net.layers) {
        Matrix<T> z = layer.weights * a;
        z.colwise() += layer.bias;
        cache.inputs.push_back(std::move(a));
        a = z;
        apply_activation(layer.activation, a);
        cache.pre.push_back(std::move(z));
    }
    cache.output = std::move(a);
    return cache;
}

/// Forward pass without keeping intermediates.
template <class T>
Matrix<T> predict(const DenseNet<T>& net, const Matrix<T>& x) {
    check_input(net, x);
    Matrix<T> a = x;
    for (const auto& layer : net.layers) {
        Matrix<T> z = layer.weights * a;
        z.colwise() += layer.bias;
        apply_activation(layer.activation, z);
        a = std::move(z);
    }
    return a;
}

/// Parameter gradients (summed over the batch) plus the input gradient.
template <class T>
struct Gradients {
    std::vector<Matrix<T>> weights;
    std::vector<Vector<T>> bias;
    Matrix<T> input;

    static Gradients zeros_like(const DenseNet<T>& net) {
        Gradients g;
        for (const auto& l : net.layers) {
            g.weights.push_back(Matrix<T>::Zero(l.weights.rows(), l.weights.cols()));
            g.bias.push_back(Vector<T>::Zero(l.bias.size()));
        }
        return g;
    }

    Gradients& operator+=(const Gradients& o) {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            weights[l] += o.weights[l];
            bias[l] += o.bias[l];
        }
        return *this;
    }

    Gradients& operator*=(T s) {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            weights[l] *= s;
            bias[l] *= s;
        }
        input *= s;
        return *this;
    }
};

/// Backpropagates a gradient given with respect to the pre-activation of the
/// last layer. Used with logit-space losses on sigmoid outputs.
template <class T>
Gradients<T> backward_from_pre_activation(const DenseNet<T>& net, const ForwardCache<T>& cache, Matrix<T> delta) {
    const std::size_t n = net.layers.size();
    if (cache.pre.size() != n) throw DimensionMismatch("forward cache does not match network");
    if (delta.rows() != net.output_dim() || delta.cols() != cache.output.cols())
        throw DimensionMismatch("output gradient shape does not match network output");

    Gradients<T> g;
    g.weights.resize(n);
    g.bias.resize(n);
    for (std::size_t l = n; l-- > 0;) {
        g.weights[l] = delta * cache.inputs[l].transpose();
        g.bias[l] = delta.rowwise().sum();
        Matrix<T> upstream = net.layers[l].weights.transpose() * delta;
        if (l == 0) {
            g.input = std::move(upstream);
            break;
        }
        const auto& z = cache.pre[l - 1];
        switch (net.layers[l - 1].activation) {
        case Activation::linear: break;
        case Activation::relu:
            // Subgradient 0 at z == 0.
            upstream = upstream.cwiseProduct(z.unaryExpr([](T v) { return v > T(0) ? T(1) : T(0); }));
            break;
        case Activation::sigmoid: {
            const auto& s = cache.inputs[l];
            upstream = upstream.cwiseProduct(s.cwiseProduct((Matrix<T>::Ones(s.rows(), s.cols()) - s)));
            break;
        }
        }
        delta = std::move(upstream);
    }
    return g;
}

/// Reverse-mode gradients for a gradient given with respect to the output.
template <class T>
Gradients<T> backward(const DenseNet<T>& net, const ForwardCache<T>& cache, const Matrix<T>& grad_output) {
    if (cache.pre.size() != net.layers.size()) throw DimensionMismatch("forward cache does not match network");
    if (grad_output.rows() != cache.output.rows() || grad_output.cols() != cache.output.cols())
        throw DimensionMismatch("output gradient shape does not match network output");
    Matrix<T> delta = grad_output;
    switch (net.layers.back().activation) {
    case Activation::linear: break;
    case Activation::relu:
        delta = delta.cwiseProduct(cache.pre.back().unaryExpr([](T v) { return v > T(0) ? T(1) : T(0); }));
        break;
    case Activation::sigmoid: {
        const auto& s = cache.output;
        delta = delta.cwiseProduct(s.cwiseProduct(Matrix<T>::Ones(s.rows(), s.cols()) - s));
        break;
    }
    }
    return backward_from_pre_activation(net, cache, std::move(delta));
}

enum class OptimizerKind { sgd, adam };

inline const char* to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

inline OptimizerKind parse_optimizer(const std::string& s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "adam") return OptimizerKind::adam;
    throw std::invalid_argument("unknown optimizer: " + s);
}

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Optimizer state for one network. Adam moments mirror the parameter shapes.
class OptState {
public:
    OptState() = default;
    OptState(const DenseNet<double>& net, OptimizerConfig cfg) : cfg_(cfg) {
        if (!(cfg.learning_rate > 0)) throw std::invalid_argument("learning rate must be positive");
        if (cfg.kind == OptimizerKind::adam) {
            m_ = Gradients<double>::zeros_like(net);
            v_ = Gradients<double>::zeros_like(net);
        }
    }

    const OptimizerConfig& config() const { return cfg_; }
    long step_count() const { return step_; }

    void step(DenseNet<double>& net, const Gradients<double>& g) {
        if (g.weights.size() != net.layers.size()) throw DimensionMismatch("gradient does not match network");
        ++step_;
        if (cfg_.kind == OptimizerKind::sgd) {
            for (std::size_t l = 0; l < net.layers.size(); ++l) {
                net.layers[l].weights -= cfg_.learning_rate * g.weights[l];
                net.layers[l].bias -= cfg_.learning_rate * g.bias[l];
            }
            return;
        }
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
        auto update = [&](auto& param, auto& m, auto& v, const auto& grad) {
            m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * grad;
            v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
            param.array() -= cfg_.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.epsilon);
        };
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            update(net.layers[l].weights, m_.weights[l], v_.weights[l], g.weights[l]);
            update(net.layers[l].bias, m_.bias[l], v_.bias[l], g.bias[l]);
        }
    }

private:
    OptimizerConfig cfg_;
    Gradients<double> m_;
    Gradients<double> v_;
    long step_ = 0;
};

inline void opt_step(DenseNet<double>& net, const Gradients<double>& grads, OptState& opt) { opt.step(net, grads); }

// ---------------------------------------------------------------------------
// Finite-difference checking. Numeric gradients are taken in long double so
// the oracle's rounding noise stays far below the tolerance being checked.

using Extended = long double;

/// Flat weight and bias indices to probe in each layer.
struct ProbeSet {
    std::vector<std::vector<Eigen::Index>> weights;
    std::vector<std::vector<Eigen::Index>> bias;
};

/// Up to `per_layer` weight and `per_layer` bias coordinates of every layer,
/// drawn without replacement.
template <class T>
ProbeSet sample_probes(const DenseNet<T>& net, std::size_t per_layer, Rng& rng) {
    auto pick = [&](Eigen::Index n) {
        std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
        std::iota(all.begin(), all.end(), Eigen::Index{0});
        if (all.size() > per_layer) {
            for (std::size_t i = 0; i < per_layer; ++i)
                std::swap(all[i], all[i + std::uniform_int_distribution<std::size_t>(0, all.size() - 1 - i)(rng)]);
            all.resize(per_layer);
        }
        return all;
    };
    ProbeSet p;
    for (const auto& layer : net.layers) {
        p.weights.push_back(pick(layer.weights.size()));
        p.bias.push_back(pick(layer.bias.size()));
    }
    return p;
}

/// Central-difference gradients of `f` over every parameter of `net`, or
/// over `probes` only (other entries are NaN). `f` reads `net` by reference
/// and returns the scalar loss.
template <class F>
Gradients<Extended> numeric_gradients(DenseNet<Extended>& net, F&& f, Extended h = 1e-5L,
                                      const ProbeSet* probes = nullptr) {
    auto g = Gradients<Extended>::zeros_like(net);
    auto probe = [&](Extended& p) {
        const Extended saved = p;
        p = saved + h;
        const Extended up = f();
        p = saved - h;
        const Extended down = f();
        p = saved;
        return (up - down) / (2 * h);
    };
    const Extended nan = std::numeric_limits<Extended>::quiet_NaN();
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        auto& layer = net.layers[l];
        if (probes) {
            g.weights[l].setConstant(nan);
            g.bias[l].setConstant(nan);
            for (Eigen::Index i : probes->weights.at(l)) g.weights[l](i) = probe(layer.weights(i));
            for (Eigen::Index i : probes->bias.at(l)) g.bias[l](i) = probe(layer.bias(i));
        } else {
            for (Eigen::Index i = 0; i < layer.weights.size(); ++i) g.weights[l](i) = probe(layer.weights(i));
            for (Eigen::Index i = 0; i < layer.bias.size(); ++i) g.bias[l](i) = probe(layer.bias(i));
        }
    }
    return g;
}

/// |a - b| / max(|a|, |b|, 1e-8), maximized over every parameter whose
/// numeric value is not NaN.
template <class A, class B>
double max_relative_error(const Gradients<A>& analytic, const Gradients<B>& numeric) {
    double worst = 0.0;
    auto visit = [&](const auto& x, const auto& y) {
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double a = static_cast<double>(x(i));
            const double b = static_cast<double>(y(i));
            if (std::isnan(b)) continue;
            const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
            worst = std::max(worst, std::abs(a - b) / denom);
        }
    };
    for (std::size_t l = 0; l < analytic.weights.size(); ++l) {
        visit(analytic.weights[l], numeric.weights[l]);
        visit(analytic.bias[l], numeric.bias[l]);
    }
    return worst;
}

/// Value of a loss on network output, plus its gradient w.r.t. that output.
template <class T>
struct LossEval {
    T value;
    Matrix<T> grad;
};

/// Smallest |pre-activation| feeding any relu, i.e. the distance to a kink.
template <class T>
double min_relu_margin(const DenseNet<T>& net, const ForwardCache<T>& cache) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < net.layers.size(); ++l)
        if (net.layers[l].activation == Activation::relu)
            m = std::min(m, static_cast<double>(cache.pre[l].cwiseAbs().minCoeff()));
    return m;
}

/// Compares backward() against central differences of `loss` over every
/// parameter. `loss` must accept Matrix<double> and Matrix<long double>
/// outputs (a generic lambda) and return a LossEval of the same scalar.
template <class Loss>
double grad_check(const DenseNet<double>& net, const Matrix<double>& x, Loss&& loss, Extended h = 1e-5L,
                  const ProbeSet* probes = nullptr) {
    const auto cache = forward(net, x);
    const auto grads = backward(net, cache, loss(cache.output).grad);

    auto wide = net.template cast<Extended>();
    const Matrix<Extended> wide_x = x.template cast<Extended>();
    const auto numeric = numeric_gradients(wide, [&] { return loss(predict(wide, wide_x)).value; }, h, probes);
    return max_relative_error(grads, numeric);
}

}  // namespace iotgan::nn
