#pragma once

// Generator/encoder GAN with separate data-space and latent-space
// discriminators, trained on a single traffic class and used as an anomaly
// scorer: L(x) = alpha * L_G(x) + (1 - alpha) * L_D(x).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "iotgan/features.hpp"
#include "iotgan/nn.hpp"

namespace iotgan::bigan {

using nn::DenseNet;
using nn::Matrix;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Which class the model was trained on. Benign-trained models flag high
/// scores; darknet-trained models flag low scores (the sample resembles the
/// malicious training distribution).
enum class Orientation { benign, darknet };

inline const char* to_string(Orientation o) { return o == Orientation::benign ? "benign" : "darknet"; }

inline Orientation parse_orientation(const std::string& s) {
    if (s == "benign") return Orientation::benign;
    if (s == "darknet") return Orientation::darknet;
    throw std::invalid_argument("unknown orientation: " + s);
}

struct Architecture {
    Index feature_dim = static_cast<Index>(features::vector_dim);
    Index latent_dim = 32;
    std::vector<Index> generator_hidden = {64, 128};
    std::vector<Index> encoder_hidden = {128, 64};
    Index discriminator_hidden = 128;
};

struct GanModel {
    DenseNet<double> generator;      // latent -> feature
    DenseNet<double> encoder;        // feature -> latent
    DenseNet<double> disc_x;         // feature -> P(real sample)
    DenseNet<double> disc_z;         // latent -> P(encoded sample)
    features::NormStats norm;        // empty when trained on pre-normalized data
    std::uint64_t seed = 0;
    Orientation orientation = Orientation::benign;
    double alpha = 0.9;
    double threshold = 0.0;

    Index feature_dim() const { return encoder.input_dim(); }
    Index latent_dim() const { return generator.input_dim(); }

    bool all_finite() const {
        return generator.all_finite() && encoder.all_finite() && disc_x.all_finite() && disc_z.all_finite();
    }
};

inline GanModel make_model(const Architecture& arch, nn::Rng& rng) {
    using nn::Activation;
    using nn::LayerSpec;
    std::vector<LayerSpec> g;
    for (Index h : arch.generator_hidden) g.push_back({h, Activation::relu});
    g.push_back({arch.feature_dim, Activation::linear});
    std::vector<LayerSpec> e;
    for (Index h : arch.encoder_hidden) e.push_back({h, Activation::relu});
    e.push_back({arch.latent_dim, Activation::linear});

    GanModel m;
    m.generator = nn::make_dense_net(arch.latent_dim, g, rng);
    m.encoder = nn::make_dense_net(arch.feature_dim, e, rng);
    m.disc_x = nn::make_dense_net(
        arch.feature_dim, {{arch.discriminator_hidden, Activation::relu}, {1, Activation::sigmoid}}, rng);
    m.disc_z = nn::make_dense_net(
        arch.latent_dim, {{arch.discriminator_hidden, Activation::relu}, {1, Activation::sigmoid}}, rng);
    return m;
}

struct TrainConfig {
    int epochs = 100;
    int batch_size = 50;
    nn::OptimizerConfig optimizer{nn::OptimizerKind::adam, 1e-3};
    double alpha = 0.9;
    std::uint64_t seed = 0;

    /// 100 epochs, batches of 50, plain SGD at 0.1.
    static TrainConfig sgd_preset() {
        TrainConfig c;
        c.optimizer = {nn::OptimizerKind::sgd, 0.1};
        return c;
    }

    void validate() const {
        if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
        if (!(optimizer.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    }
};

struct EpochTrace {
    double generator_loss = 0;      // -log D_x(G(z))
    double encoder_loss = 0;        // -log(1 - D_z(E(x)))
    double disc_x_loss = 0;
    double disc_z_loss = 0;
    double value = 0;               // log D_x(x) + log(1-D_x(G(z))) + log D_z(E(x)) + log(1-D_z(z))
    double reconstruction = 0;      // mean |x - G(E(x))| over the training set
};

struct TrainingTrace {
    std::vector<EpochTrace> epochs;
};

class EmptyDataset : public std::invalid_argument {
public:
    EmptyDataset() : std::invalid_argument("training dataset is empty") {}
};

class NonFiniteLoss : public std::runtime_error {
public:
    NonFiniteLoss(int epoch, int batch)
        : std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch)),
          epoch_(epoch),
          batch_(batch) {}
    int epoch() const { return epoch_; }
    int batch() const { return batch_; }

private:
    int epoch_;
    int batch_;
};

/// n i.i.d. standard-normal latent vectors, one per column.
inline MatrixXd sample_latent(nn::Rng& rng, Index latent_dim, Index n) {
    std::normal_distribution<double> normal(0.0, 1.0);
    MatrixXd z(latent_dim, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < latent_dim; ++i) z(i, j) = normal(rng);
    return z;
}

// ---------------------------------------------------------------------------
// Training objective terms. Every loss is a batch mean; gradients match it.

template <class T>
struct TermResult {
    T value;
    nn::Gradients<T> grads;
};

/// Discriminator loss in logit space: mean softplus(-l(real)) + mean softplus(l(fake)).
/// Serves D_x (real = data, fake = G(z)) and D_z (real = E(x), fake = prior z).
template <class T>
TermResult<T> discriminator_term(const DenseNet<T>& disc, const Matrix<T>& real, const Matrix<T>& fake) {
    const auto cr = nn::forward(disc, real);
    const auto cf = nn::forward(disc, fake);
    const Matrix<T>& lr = cr.pre.back();
    const Matrix<T>& lf = cf.pre.back();
    const T br = T(real.cols());
    const T bf = T(fake.cols());
    T value = 0;
    for (Index j = 0; j < lr.cols(); ++j) value += nn::softplus(-lr(0, j)) / br;
    for (Index j = 0; j < lf.cols(); ++j) value += nn::softplus(lf(0, j)) / bf;
    const Matrix<T> dr = lr.unaryExpr([&](T l) { return (nn::sigmoid(l) - T(1)) / br; });
    const Matrix<T> df = lf.unaryExpr([&](T l) { return nn::sigmoid(l) / bf; });
    auto g = nn::backward_from_pre_activation(disc, cr, dr);
    g += nn::backward_from_pre_activation(disc, cf, df);
    return {value, std::move(g)};
}

/// Non-saturating generator loss mean softplus(-l_x(G(z))); gradients for G.
template <class T>
TermResult<T> generator_term(const DenseNet<T>& gen, const DenseNet<T>& disc_x, const Matrix<T>& z) {
    const auto cg = nn::forward(gen, z);
    const auto cd = nn::forward(disc_x, cg.output);
    const Matrix<T>& l = cd.pre.back();
    const T b = T(z.cols());
    T value = 0;
    for (Index j = 0; j < l.cols(); ++j) value += nn::softplus(-l(0, j)) / b;
    const Matrix<T> dl = l.unaryExpr([&](T v) { return (nn::sigmoid(v) - T(1)) / b; });
    const auto gd = nn::backward_from_pre_activation(disc_x, cd, dl);
    return {value, nn::backward(gen, cg, gd.input)};
}

/// Encoder loss mean softplus(l_z(E(x))): E pushes its codes toward the
/// prior side of D_z. Gradients for E.
template <class T>
TermResult<T> encoder_term(const DenseNet<T>& enc, const DenseNet<T>& disc_z, const Matrix<T>& x) {
    const auto ce = nn::forward(enc, x);
    const auto cd = nn::forward(disc_z, ce.output);
    const Matrix<T>& l = cd.pre.back();
    const T b = T(x.cols());
    T value = 0;
    for (Index j = 0; j < l.cols(); ++j) value += nn::softplus(l(0, j)) / b;
    const Matrix<T> dl = l.unaryExpr([&](T v) { return nn::sigmoid(v) / b; });
    const auto gd = nn::backward_from_pre_activation(disc_z, cd, dl);
    return {value, nn::backward(enc, ce, gd.input)};
}

// ---------------------------------------------------------------------------
// Scoring.

/// G(E(x)) for each column of x.
inline MatrixXd reconstruct(const GanModel& m, const MatrixXd& x) { return nn::predict(m.generator, nn::predict(m.encoder, x)); }

/// Hidden-layer activations of D_x, used for feature matching.
inline MatrixXd disc_features(const GanModel& m, const MatrixXd& x) {
    MatrixXd h = m.disc_x.layers.front().weights * x;
    h.colwise() += m.disc_x.layers.front().bias;
    nn::apply_activation(m.disc_x.layers.front().activation, h);
    return h;
}

struct ScoreParts {
    double l_g = 0;
    double l_d = 0;
};

/// Per-column L_G = |x - G(E(x))|_1 / d and L_D = |f(x) - f(G(E(x)))|_1 / h.
inline std::vector<ScoreParts> score_parts(const GanModel& m, const MatrixXd& x) {
    if (x.rows() != m.feature_dim()) throw nn::DimensionMismatch("sample dimension does not match model");
    const MatrixXd rec = reconstruct(m, x);
    const MatrixXd fx = disc_features(m, x);
    const MatrixXd fr = disc_features(m, rec);
    const double d = static_cast<double>(x.rows());
    const double h = static_cast<double>(fx.rows());
    std::vector<ScoreParts> out(static_cast<std::size_t>(x.cols()));
    for (Index j = 0; j < x.cols(); ++j) {
        out[static_cast<std::size_t>(j)].l_g = (x.col(j) - rec.col(j)).cwiseAbs().sum() / d;
        out[static_cast<std::size_t>(j)].l_d = (fx.col(j) - fr.col(j)).cwiseAbs().sum() / h;
    }
    return out;
}

inline double generator_loss(const GanModel& m, const VectorXd& x) { return score_parts(m, x).front().l_g; }
inline double discriminator_loss(const GanModel& m, const VectorXd& x) { return score_parts(m, x).front().l_d; }

inline double combine(double l_g, double l_d, double alpha) { return alpha * l_g + (1.0 - alpha) * l_d; }

enum class Verdict { benign, anomalous };

/// "anomalous" always means flagged as a threat, whatever the orientation.
inline Verdict verdict_for(double score, double threshold, Orientation o) {
    const bool flagged = o == Orientation::benign ? score > threshold : score <= threshold;
    return flagged ? Verdict::anomalous : Verdict::benign;
}

struct DetectionResult {
    double score = 0;
    double l_g = 0;
    double l_d = 0;
    Verdict verdict = Verdict::benign;
    double threshold_used = 0;
};

inline DetectionResult anomaly_score(const GanModel& m, const VectorXd& x, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
    const auto p = score_parts(m, x).front();
    DetectionResult r;
    r.l_g = p.l_g;
    r.l_d = p.l_d;
    r.score = combine(p.l_g, p.l_d, alpha);
    r.threshold_used = m.threshold;
    r.verdict = verdict_for(r.score, m.threshold, m.orientation);
    return r;
}

/// Combined scores for every column, using the model's alpha.
inline std::vector<double> scores(const GanModel& m, const MatrixXd& x) {
    std::vector<double> out;
    for (const auto& p : score_parts(m, x)) out.push_back(combine(p.l_g, p.l_d, m.alpha));
    return out;
}

class EmptyScores : public std::invalid_argument {
public:
    EmptyScores() : std::invalid_argument("no scores to take a percentile of") {}
};

/// p-th percentile with linear interpolation between order statistics
/// (rank = p/100 * (n-1)).
inline double choose_threshold(std::span<const double> training_scores, double percentile = 95.0) {
    if (training_scores.empty()) throw EmptyScores();
    if (!(percentile > 0.0 && percentile <= 100.0)) throw std::invalid_argument("percentile must lie in (0, 100]");
    std::vector<double> s(training_scores.begin(), training_scores.end());
    std::sort(s.begin(), s.end());
    const double rank = percentile / 100.0 * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (rank - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

// ---------------------------------------------------------------------------
// Training.

inline double mean_reconstruction_error(const GanModel& m, const MatrixXd& data) {
    const MatrixXd rec = reconstruct(m, data);
    return (data - rec).cwiseAbs().sum() / static_cast<double>(data.size());
}

/// Alternating adversarial training on a single-class dataset (columns are
/// normalized samples). Per batch: one step for each discriminator, then one
/// step for the generator and one for the encoder against the updated
/// discriminators.
inline std::pair<GanModel, TrainingTrace> train(const MatrixXd& data, const TrainConfig& cfg,
                                                const Architecture& arch = {}) {
    cfg.validate();
    if (data.cols() == 0) throw EmptyDataset();
    if (data.rows() != arch.feature_dim) throw nn::DimensionMismatch("dataset dimension does not match architecture");

    nn::Rng rng(cfg.seed);
    GanModel model = make_model(arch, rng);
    model.seed = cfg.seed;
    model.alpha = cfg.alpha;

    nn::OptState opt_g(model.generator, cfg.optimizer);
    nn::OptState opt_e(model.encoder, cfg.optimizer);
    nn::OptState opt_dx(model.disc_x, cfg.optimizer);
    nn::OptState opt_dz(model.disc_z, cfg.optimizer);

    const Index n = data.cols();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});

    TrainingTrace trace;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        EpochTrace et;
        int batches = 0;
        for (Index start = 0; start < n; start += cfg.batch_size) {
            const Index b = std::min<Index>(cfg.batch_size, n - start);
            MatrixXd x(data.rows(), b);
            for (Index j = 0; j < b; ++j) x.col(j) = data.col(order[static_cast<std::size_t>(start + j)]);
            const MatrixXd z = sample_latent(rng, model.latent_dim(), b);

            const MatrixXd x_fake = nn::predict(model.generator, z);
            const MatrixXd z_enc = nn::predict(model.encoder, x);
            auto dx = discriminator_term(model.disc_x, x, x_fake);
            auto dz = discriminator_term(model.disc_z, z_enc, z);
            opt_dx.step(model.disc_x, dx.grads);
            opt_dz.step(model.disc_z, dz.grads);

            auto g = generator_term(model.generator, model.disc_x, z);
            auto e = encoder_term(model.encoder, model.disc_z, x);
            opt_g.step(model.generator, g.grads);
            opt_e.step(model.encoder, e.grads);

            if (!std::isfinite(dx.value) || !std::isfinite(dz.value) || !std::isfinite(g.value) ||
                !std::isfinite(e.value))
                throw NonFiniteLoss(epoch, batches);

            et.disc_x_loss += dx.value;
            et.disc_z_loss += dz.value;
            et.generator_loss += g.value;
            et.encoder_loss += e.value;
            ++batches;
        }
        et.disc_x_loss /= batches;
        et.disc_z_loss /= batches;
        et.generator_loss /= batches;
        et.encoder_loss /= batches;
        et.value = -(et.disc_x_loss + et.disc_z_loss);
        et.reconstruction = mean_reconstruction_error(model, data);
        if (!std::isfinite(et.reconstruction) || !model.all_finite()) throw NonFiniteLoss(epoch, batches);
        trace.epochs.push_back(et);
    }
    return {std::move(model), std::move(trace)};
}

}  // namespace iotgan::bigan
