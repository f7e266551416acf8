#pragma once

// Versioned JSON model checkpoints shared by the GAN and the tree baselines,
// plus a uniform scoring facade over all model kinds. Doubles are written in
// shortest round-trip form, so save/load is exact.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>

#include <json.hpp>

#include "iotgan/bigan.hpp"
#include "iotgan/eval.hpp"
#include "iotgan/features.hpp"
#include "iotgan/trees.hpp"

namespace iotgan::checkpoint {

inline constexpr int format_version = 1;
inline constexpr const char* format_name = "iotgan-model";
/// Bumped whenever the meaning or order of the 52 feature columns changes.
inline constexpr const char* feature_order_tag = "w50.100.500.2000/f13/v1";

enum class ModelKind { gan_benign, gan_darknet, forest, boost };

inline const char* to_string(ModelKind k) {
    switch (k) {
    case ModelKind::gan_benign: return "gan-benign";
    case ModelKind::gan_darknet: return "gan-darknet";
    case ModelKind::forest: return "forest";
    case ModelKind::boost: return "boost";
    }
    return "gan-benign";
}

inline ModelKind parse_model_kind(const std::string& s) {
    for (auto k : {ModelKind::gan_benign, ModelKind::gan_darknet, ModelKind::forest, ModelKind::boost})
        if (s == to_string(k)) return k;
    throw std::invalid_argument("unknown model kind: " + s + " (expected gan-benign, gan-darknet, forest or boost)");
}

inline bool is_gan(ModelKind k) { return k == ModelKind::gan_benign || k == ModelKind::gan_darknet; }

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A trained detector of any kind. Tree models score raw feature vectors and
/// keep their decision threshold and seed here; GAN models carry their own.
struct Detector {
    ModelKind kind = ModelKind::gan_benign;
    std::variant<bigan::GanModel, trees::ForestModel, trees::BoostModel> model;
    double tree_threshold = 0.5;
    std::uint64_t tree_seed = 0;

    const bigan::GanModel& gan() const { return std::get<bigan::GanModel>(model); }

    double threshold() const { return is_gan(kind) ? gan().threshold : tree_threshold; }
    std::uint64_t seed() const { return is_gan(kind) ? gan().seed : tree_seed; }

    eval::Polarity polarity() const {
        return kind == ModelKind::gan_darknet ? eval::Polarity::low : eval::Polarity::high;
    }

    /// Scores raw (unnormalized) feature columns.
    std::vector<double> score(const Eigen::MatrixXd& raw) const {
        return std::visit(
            [&](const auto& m) -> std::vector<double> {
                using M = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<M, bigan::GanModel>)
                    return bigan::scores(m, features::normalize(raw, m.norm).first);
                else
                    return trees::predict_all(m, raw);
            },
            model);
    }
};

namespace detail {

using nlohmann::json;

inline json vec_to_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

inline Eigen::VectorXd vec_from_json(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline json net_to_json(const nn::DenseNet<double>& net) {
    json layers = json::array();
    for (const auto& l : net.layers) {
        std::vector<double> w;
        w.reserve(static_cast<std::size_t>(l.weights.size()));
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
        layers.push_back({{"in", l.in_dim()},
                          {"out", l.out_dim()},
                          {"activation", nn::to_string(l.activation)},
                          {"weights", std::move(w)},
                          {"bias", vec_to_json(l.bias)}});
    }
    return layers;
}

inline nn::DenseNet<double> net_from_json(const json& j) {
    nn::DenseNet<double> net;
    for (const auto& lj : j) {
        const auto in = lj.at("in").get<Eigen::Index>();
        const auto out = lj.at("out").get<Eigen::Index>();
        const auto w = lj.at("weights").get<std::vector<double>>();
        if (in < 1 || out < 1 || static_cast<Eigen::Index>(w.size()) != in * out)
            throw CheckpointError("layer weights do not match their declared shape");
        nn::DenseLayer<double> l;
        l.weights.resize(out, in);
        for (Eigen::Index r = 0; r < out; ++r)
            for (Eigen::Index c = 0; c < in; ++c) l.weights(r, c) = w[static_cast<std::size_t>(r * in + c)];
        l.bias = vec_from_json(lj.at("bias"));
        if (l.bias.size() != out) throw CheckpointError("layer bias does not match its declared shape");
        l.activation = nn::parse_activation(lj.at("activation").get<std::string>());
        if (!net.layers.empty() && net.layers.back().out_dim() != in)
            throw CheckpointError("consecutive layers have mismatched dimensions");
        net.layers.push_back(std::move(l));
    }
    if (net.layers.empty()) throw CheckpointError("network has no layers");
    return net;
}

inline json trees_to_json(const std::vector<trees::Tree>& ts) {
    json out = json::array();
    for (const auto& t : ts) {
        json nodes = json::array();
        for (const auto& n : t.nodes) nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.value}));
        out.push_back(std::move(nodes));
    }
    return out;
}

inline std::vector<trees::Tree> trees_from_json(const json& j, Eigen::Index dim) {
    std::vector<trees::Tree> out;
    for (const auto& tj : j) {
        trees::Tree t;
        for (const auto& nj : tj)
            t.nodes.push_back({nj.at(0).get<int>(), nj.at(1).get<double>(), nj.at(2).get<int>(), nj.at(3).get<int>(),
                               nj.at(4).get<double>()});
        const int n = static_cast<int>(t.nodes.size());
        if (n == 0) throw CheckpointError("tree has no nodes");
        for (int i = 0; i < n; ++i) {
            const auto& node = t.nodes[static_cast<std::size_t>(i)];
            if (node.is_leaf()) continue;
            // Children always follow their parent, which rules out cycles.
            if (node.feature >= dim || node.left <= i || node.right <= i || node.left >= n || node.right >= n)
                throw CheckpointError("malformed tree node " + std::to_string(i));
        }
        out.push_back(std::move(t));
    }
    if (out.empty()) throw CheckpointError("model has no trees");
    return out;
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const Detector& d) {
    using detail::json;
    nlohmann::ordered_json j;
    j["format"] = format_name;
    j["version"] = format_version;
    j["model_kind"] = to_string(d.kind);
    j["feature_order"] = feature_order_tag;
    j["feature_dim"] = features::vector_dim;
    j["seed"] = d.seed();
    j["threshold"] = d.threshold();
    if (is_gan(d.kind)) {
        const auto& m = d.gan();
        j["orientation"] = bigan::to_string(m.orientation);
        j["alpha"] = m.alpha;
        j["norm"] = {{"mean", detail::vec_to_json(m.norm.mean)}, {"std", detail::vec_to_json(m.norm.std)}};
        j["networks"] = {{"generator", detail::net_to_json(m.generator)},
                         {"encoder", detail::net_to_json(m.encoder)},
                         {"disc_x", detail::net_to_json(m.disc_x)},
                         {"disc_z", detail::net_to_json(m.disc_z)}};
    } else if (d.kind == ModelKind::forest) {
        const auto& m = std::get<trees::ForestModel>(d.model);
        j["tree_seeds"] = m.tree_seeds;
        j["trees"] = detail::trees_to_json(m.trees);
    } else {
        const auto& m = std::get<trees::BoostModel>(d.model);
        j["init"] = m.init;
        j["shrinkage"] = m.shrinkage;
        j["trees"] = detail::trees_to_json(m.trees);
    }
    return j;
}

inline Detector from_json(const nlohmann::json& j) {
    try {
        if (j.value("format", std::string()) != format_name) throw CheckpointError("not an iotgan model checkpoint");
        const int version = j.at("version").get<int>();
        if (version != format_version)
            throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
        if (j.at("feature_order").get<std::string>() != feature_order_tag)
            throw CheckpointError("checkpoint was built for a different feature layout");
        const auto dim = j.at("feature_dim").get<Eigen::Index>();
        if (dim != static_cast<Eigen::Index>(features::vector_dim)) throw CheckpointError("unexpected feature_dim");

        Detector d;
        d.kind = parse_model_kind(j.at("model_kind").get<std::string>());
        if (is_gan(d.kind)) {
            bigan::GanModel m;
            const auto& nets = j.at("networks");
            m.generator = detail::net_from_json(nets.at("generator"));
            m.encoder = detail::net_from_json(nets.at("encoder"));
            m.disc_x = detail::net_from_json(nets.at("disc_x"));
            m.disc_z = detail::net_from_json(nets.at("disc_z"));
            if (m.encoder.input_dim() != dim || m.generator.output_dim() != dim || m.disc_x.input_dim() != dim ||
                m.encoder.output_dim() != m.generator.input_dim() || m.disc_z.input_dim() != m.latent_dim() ||
                m.disc_x.output_dim() != 1 || m.disc_z.output_dim() != 1 || m.disc_x.layers.size() < 2)
                throw CheckpointError("network shapes are inconsistent");
            m.norm.mean = detail::vec_from_json(j.at("norm").at("mean"));
            m.norm.std = detail::vec_from_json(j.at("norm").at("std"));
            if (m.norm.mean.size() != dim || m.norm.std.size() != dim)
                throw CheckpointError("normalization stats have the wrong length");
            m.seed = j.at("seed").get<std::uint64_t>();
            m.orientation = bigan::parse_orientation(j.at("orientation").get<std::string>());
            m.alpha = j.at("alpha").get<double>();
            m.threshold = j.at("threshold").get<double>();
            if ((m.orientation == bigan::Orientation::darknet) != (d.kind == ModelKind::gan_darknet))
                throw CheckpointError("orientation does not match model kind");
            d.model = std::move(m);
        } else {
            d.tree_seed = j.at("seed").get<std::uint64_t>();
            d.tree_threshold = j.at("threshold").get<double>();
            auto ts = detail::trees_from_json(j.at("trees"), dim);
            if (d.kind == ModelKind::forest) {
                trees::ForestModel m;
                m.trees = std::move(ts);
                m.tree_seeds = j.at("tree_seeds").get<std::vector<std::uint64_t>>();
                m.feature_dim = dim;
                d.model = std::move(m);
            } else {
                trees::BoostModel m;
                m.trees = std::move(ts);
                m.init = j.at("init").get<double>();
                m.shrinkage = j.at("shrinkage").get<double>();
                m.feature_dim = dim;
                d.model = std::move(m);
            }
        }
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
    }
}

inline std::string dump(const Detector& d) { return to_json(d).dump(1) + "\n"; }

inline void save(const Detector& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot write " + path);
    out << dump(d);
    if (!out) throw CheckpointError("failed writing " + path);
}

inline Detector parse(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    return from_json(j);
}

inline Detector load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

}  // namespace iotgan::checkpoint
