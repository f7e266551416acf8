#pragma once

// Finite-difference checks of the four BiGAN networks and of every training
// loss term, shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cstdint>
#include <random>

#include "iotgan/bigan.hpp"

namespace fidelity {

using iotgan::nn::Extended;
using Eigen::MatrixXd;
using iotgan::nn::DenseNet;
using iotgan::nn::Matrix;

inline constexpr Extended step = 1e-6L;
inline constexpr double min_margin = 1e-4;

struct Result {
    double generator = 0, encoder = 0, disc_x = 0, disc_z = 0;
    double disc_x_term = 0, disc_z_term = 0, generator_term = 0, encoder_term = 0;
    int redraws = 0;

    double worst() const {
        return std::max({generator, encoder, disc_x, disc_z, disc_x_term, disc_z_term, generator_term, encoder_term});
    }
};

// Quadratic probe loss 0.5|out|^2 + <c, out> with c fixed per seed.
struct ProbeLoss {
    MatrixXd c;
    template <class M>
    auto operator()(const M& out) const {
        using T = typename M::Scalar;
        const Matrix<T> cc = c.cast<T>();
        return iotgan::nn::LossEval<T>{T(0.5) * out.squaredNorm() + out.cwiseProduct(cc).sum(), out + cc};
    }
};

inline double margin(const DenseNet<double>& net, const MatrixXd& x) {
    return iotgan::nn::min_relu_margin(net, iotgan::nn::forward(net, x));
}

template <class Term>
double term_error(const DenseNet<double>& net, const iotgan::nn::Gradients<double>& analytic, Term&& value_of,
                  const iotgan::nn::ProbeSet* probes) {
    auto wide = net.cast<Extended>();
    const auto numeric = iotgan::nn::numeric_gradients(wide, [&] { return value_of(wide); }, step, probes);
    return iotgan::nn::max_relative_error(analytic, numeric);
}

/// Model of shape `arch` from `seed`; inputs are redrawn until every relu
/// sits at least min_margin away from its kink, so the loss is
/// differentiable there. per_layer = 0 probes every parameter, otherwise
/// that many seeded weight and bias coordinates per layer.
inline Result check(std::uint64_t seed, std::size_t per_layer = 0, const iotgan::bigan::Architecture& arch = {},
                    Eigen::Index batch = 2) {
    using namespace iotgan;
    nn::Rng rng(seed);
    const bigan::GanModel m = bigan::make_model(arch, rng);
    const auto d = m.feature_dim();
    const auto k = m.latent_dim();
    std::normal_distribution<double> normal;
    auto draw = [&](Eigen::Index rows) {
        MatrixXd out(rows, batch);
        for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = normal(rng);
        return out;
    };

    Result r;
    MatrixXd x, z, fake, code;
    for (;; ++r.redraws) {
        x = draw(d);
        z = draw(k);
        fake = nn::predict(m.generator, z);
        code = nn::predict(m.encoder, x);
        const double worst = std::min({margin(m.generator, z), margin(m.encoder, x), margin(m.disc_x, x),
                                       margin(m.disc_x, fake), margin(m.disc_z, z), margin(m.disc_z, code)});
        if (worst > min_margin) break;
    }

    const ProbeLoss probe_x{draw(d)}, probe_z{draw(k)}, probe_1{draw(1)};
    nn::ProbeSet pg, pe, pdx, pdz;
    if (per_layer) {
        pg = nn::sample_probes(m.generator, per_layer, rng);
        pe = nn::sample_probes(m.encoder, per_layer, rng);
        pdx = nn::sample_probes(m.disc_x, per_layer, rng);
        pdz = nn::sample_probes(m.disc_z, per_layer, rng);
    }
    const auto* sg = per_layer ? &pg : nullptr;
    const auto* se = per_layer ? &pe : nullptr;
    const auto* sdx = per_layer ? &pdx : nullptr;
    const auto* sdz = per_layer ? &pdz : nullptr;

    r.generator = nn::grad_check(m.generator, z, probe_x, step, sg);
    r.encoder = nn::grad_check(m.encoder, x, probe_z, step, se);
    r.disc_x = nn::grad_check(m.disc_x, x, probe_1, step, sdx);
    r.disc_z = nn::grad_check(m.disc_z, z, probe_1, step, sdz);

    const Matrix<Extended> xw = x.cast<Extended>(), zw = z.cast<Extended>();
    const Matrix<Extended> fakew = fake.cast<Extended>(), codew = code.cast<Extended>();
    const auto wide_dx = m.disc_x.cast<Extended>();
    const auto wide_dz = m.disc_z.cast<Extended>();

    r.disc_x_term = term_error(m.disc_x, bigan::discriminator_term(m.disc_x, x, fake).grads,
                               [&](const DenseNet<Extended>& w) { return bigan::discriminator_term(w, xw, fakew).value; }, sdx);
    r.disc_z_term = term_error(m.disc_z, bigan::discriminator_term(m.disc_z, code, z).grads,
                               [&](const DenseNet<Extended>& w) { return bigan::discriminator_term(w, codew, zw).value; }, sdz);
    r.generator_term = term_error(m.generator, bigan::generator_term(m.generator, m.disc_x, z).grads,
                                  [&](const DenseNet<Extended>& w) { return bigan::generator_term(w, wide_dx, zw).value; }, sg);
    r.encoder_term = term_error(m.encoder, bigan::encoder_term(m.encoder, m.disc_z, x).grads,
                                [&](const DenseNet<Extended>& w) { return bigan::encoder_term(w, wide_dz, xw).value; }, se);
    return r;
}

}  // namespace fidelity
