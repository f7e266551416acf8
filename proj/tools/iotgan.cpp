#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "iotgan/checkpoint.hpp"
#include "iotgan/feature_csv.hpp"
#include "iotgan/pcap.hpp"
#include "iotgan/pipeline.hpp"
#include "iotgan/scenario.hpp"

#ifndef IOTGAN_S1_SCENARIO
#define IOTGAN_S1_SCENARIO "scenarios/s1.json"
#endif

using namespace iotgan;
using ojson = nlohmann::ordered_json;

namespace {

// Bad flags, bad config or malformed inputs. Exit code 1.
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    const auto s = read_text(path);
    return {s.begin(), s.end()};
}

template <class Bytes>
void write_file(const std::string& path, const Bytes& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("failed writing " + path);
}

void echo(const ojson& cfg) { std::cerr << "iotgan: resolved config " << cfg.dump() << "\n"; }

struct GanFlags {
    int epochs = 100;
    int batch = 50;
    double lr = 1e-3;
    std::string optimizer = "adam";
    double alpha = 0.9;
    double percentile = 95.0;

    void add_to(CLI::App* app) {
        app->add_option("--epochs", epochs, "GAN training epochs")->check(CLI::PositiveNumber)->capture_default_str();
        app->add_option("--batch", batch, "GAN batch size")->check(CLI::PositiveNumber)->capture_default_str();
        app->add_option("--lr", lr, "learning rate")->check(CLI::PositiveNumber)->capture_default_str();
        app->add_option("--optimizer", optimizer, "adam or sgd")
            ->check(CLI::IsMember({"adam", "sgd"}))
            ->capture_default_str();
        app->add_option("--alpha", alpha, "weight of the reconstruction term in the anomaly score")
            ->check(CLI::Range(0.0, 1.0))
            ->capture_default_str();
        app->add_option("--threshold-percentile", percentile, "percentile of training scores used as the threshold")
            ->check(CLI::Range(0.0, 100.0))
            ->capture_default_str();
    }

    pipeline::TrainOptions options() const {
        if (!(percentile > 0)) throw UsageError("--threshold-percentile must be greater than 0");
        pipeline::TrainOptions o;
        o.gan.epochs = epochs;
        o.gan.batch_size = batch;
        o.gan.optimizer = {nn::parse_optimizer(optimizer), lr};
        o.gan.alpha = alpha;
        o.threshold_percentile = percentile;
        return o;
    }

    ojson json() const {
        return {{"epochs", epochs},   {"batch", batch}, {"lr", lr}, {"optimizer", optimizer},
                {"alpha", alpha},     {"threshold_percentile", percentile}};
    }
};

// ---------------------------------------------------------------------------

struct SimulateCmd {
    std::string scenario = IOTGAN_S1_SCENARIO;
    std::string out;
    std::optional<std::uint64_t> seed;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("simulate", "simulate a scenario into <out>.pcap, <out>.csv and <out>.ledger");
        c->add_option("--scenario", scenario, "scenario JSON file")->check(CLI::ExistingFile)->capture_default_str();
        c->add_option("--out", out, "output path prefix")->required();
        c->add_option("--seed", seed, "override the scenario seed");
        c->callback([this] { run(); });
    }

    void run() {
        auto sc = sim::load_scenario(scenario);
        if (seed) sc = sim::with_seed(sc, *seed);
        echo({{"subcommand", "simulate"}, {"scenario", scenario}, {"out", out}, {"seed", sc.dataset.seed}});
        const auto ds = sim::generate_dataset(sc.dataset);
        write_file(out + ".pcap", ds.pcap);
        write_file(out + ".csv", features::write_feature_csv(ds.vectors));
        write_file(out + ".ledger", sim::write_ledger(ds.capture.is_attack));
        std::size_t mal = 0;
        for (const auto& v : ds.vectors) mal += v.label == features::Label::malicious;
        std::cout << "records " << ds.capture.records.size() << ", vectors " << ds.vectors.size() << " ("
                  << ds.vectors.size() - mal << " benign, " << mal << " malicious)\n";
    }
};

struct ExtractCmd {
    std::string in, out, scenario, labels;
    std::vector<std::string> devices;
    double stride = 1.0;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("extract", "extract feature vectors from a pcap into CSV");
        c->add_option("--in", in, "input pcap")->required()->check(CLI::ExistingFile);
        c->add_option("--out", out, "output feature CSV")->required();
        c->add_option("--devices", devices, "device IPs to track (comma separated)")->delimiter(',');
        c->add_option("--scenario", scenario, "take the device list from this scenario")->check(CLI::ExistingFile);
        c->add_option("--stride", stride, "sampling interval in seconds")->check(CLI::PositiveNumber)->capture_default_str();
        c->add_option("--labels", labels, "label ledger written by simulate")->check(CLI::ExistingFile);
        c->callback([this] { run(); });
    }

    void run() {
        std::set<Ipv4> dev;
        for (const auto& d : devices) {
            try {
                dev.insert(Ipv4::parse(d));
            } catch (const std::exception&) {
                throw UsageError("--devices: '" + d + "' is not an IPv4 address");
            }
        }
        if (!scenario.empty()) {
            for (const auto& ip : sim::load_scenario(scenario).dataset.device_set()) dev.insert(ip);
        }
        if (dev.empty()) throw UsageError("--devices is required unless --scenario is given");

        ojson cfg = {{"subcommand", "extract"}, {"in", in}, {"out", out}, {"stride", stride}, {"labels", labels}};
        ojson dj = ojson::array();
        for (const auto& ip : dev) dj.push_back(ip.to_string());
        cfg["devices"] = std::move(dj);
        echo(cfg);

        const auto cap = pcap::parse_pcap(read_bytes(in));
        std::vector<std::uint8_t> tags;
        if (!labels.empty()) {
            tags = sim::read_ledger(read_text(labels));
            if (tags.size() != cap.records.size())
                throw UsageError("--labels: ledger has " + std::to_string(tags.size()) + " entries but the pcap has " +
                                 std::to_string(cap.records.size()) + " records");
        }
        sim::ExtractOptions opts;
        opts.sample_interval_s = stride;
        auto vectors = sim::extract_vectors(cap.records, dev, opts, tags);
        features::sort_for_export(vectors);
        write_file(out, features::write_feature_csv(vectors));
        std::cout << "records " << cap.records.size() << ", vectors " << vectors.size() << "\n";
    }
};

struct TrainCmd {
    std::string in, out, model;
    std::uint64_t seed = 0;
    GanFlags gan;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("train", "train a detector from a feature CSV");
        c->add_option("--in", in, "training feature CSV")->required()->check(CLI::ExistingFile);
        c->add_option("--model", model, "gan-benign, gan-darknet, forest or boost")
            ->required()
            ->check(CLI::IsMember({"gan-benign", "gan-darknet", "forest", "boost"}));
        c->add_option("--out", out, "checkpoint path")->required();
        c->add_option("--seed", seed, "training seed")->capture_default_str();
        gan.add_to(c);
        c->callback([this] { run(); });
    }

    void run() {
        auto opts = gan.options();
        opts.seed = seed;
        ojson cfg = {{"subcommand", "train"}, {"in", in}, {"model", model}, {"out", out}, {"seed", seed}};
        if (model.rfind("gan", 0) == 0) cfg["gan"] = gan.json();
        echo(cfg);
        const auto rows = features::read_feature_csv(read_text(in));
        const auto t = pipeline::train_detector(checkpoint::parse_model_kind(model), rows, opts);
        checkpoint::save(t.detector, out);
        std::cout << "trained " << model << " on " << t.samples << " vectors, threshold "
                  << features::format_double(t.detector.threshold()) << "\n";
    }
};

struct ScoreCmd {
    std::string checkpoint_path, in, out;
    std::optional<double> alpha;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("score", "score a feature CSV with a trained checkpoint");
        c->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required()->check(CLI::ExistingFile);
        c->add_option("--in", in, "feature CSV")->required()->check(CLI::ExistingFile);
        c->add_option("--out", out, "scored CSV")->required();
        c->add_option("--alpha", alpha, "override the GAN score weight")->check(CLI::Range(0.0, 1.0));
        c->callback([this] { run(); });
    }

    void run() {
        auto d = checkpoint::load(checkpoint_path);
        if (alpha) {
            if (!checkpoint::is_gan(d.kind)) throw UsageError("--alpha only applies to GAN checkpoints");
            std::get<bigan::GanModel>(d.model).alpha = *alpha;
        }
        ojson cfg = {{"subcommand", "score"}, {"checkpoint", checkpoint_path}, {"in", in}, {"out", out},
                     {"model", checkpoint::to_string(d.kind)}, {"seed", d.seed()}};
        if (checkpoint::is_gan(d.kind)) cfg["alpha"] = d.gan().alpha;
        echo(cfg);
        const auto rows = features::read_feature_csv(read_text(in));
        const auto scored = pipeline::score_vectors(d, rows);
        write_file(out, pipeline::write_scored_csv(scored));
        std::size_t flagged = 0;
        for (const auto& r : scored.rows) flagged += r.anomalous;
        std::cout << "scored " << scored.rows.size() << " vectors, " << flagged << " flagged\n";
    }
};

struct EvalCmd {
    std::string in, labels, out, sweep_out, dataset_id;
    int sweep_points = 21;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("eval", "compute precision/recall and a threshold sweep from a scored CSV");
        c->add_option("--in", in, "scored CSV")->required()->check(CLI::ExistingFile);
        c->add_option("--labels", labels, "feature CSV whose labels replace the scored CSV's (same row order)")
            ->check(CLI::ExistingFile);
        c->add_option("--out", out, "report JSON")->required();
        c->add_option("--sweep-out", sweep_out, "sweep table CSV");
        c->add_option("--sweep-points", sweep_points, "thresholds in the sweep")->check(CLI::Range(2, 100000))
            ->capture_default_str();
        c->add_option("--dataset-id", dataset_id, "dataset name for the report (default: input file stem)");
        c->callback([this] { run(); });
    }

    void run() {
        if (dataset_id.empty()) dataset_id = std::filesystem::path(in).stem().string();
        echo({{"subcommand", "eval"}, {"in", in}, {"labels", labels}, {"out", out}, {"sweep_out", sweep_out},
              {"sweep_points", sweep_points}, {"dataset_id", dataset_id}});
        const auto scored = pipeline::read_scored_csv(read_text(in));
        if (scored.rows.empty()) throw UsageError("--in: scored CSV has no rows");
        std::vector<features::FeatureVector> truth;
        if (!labels.empty()) {
            truth = features::read_feature_csv(read_text(labels));
            if (truth.size() != scored.rows.size())
                throw UsageError("--labels: " + std::to_string(truth.size()) + " rows but the scored CSV has " +
                                 std::to_string(scored.rows.size()));
        }
        std::vector<double> s;
        std::vector<int> y;
        for (std::size_t i = 0; i < scored.rows.size(); ++i) {
            const auto label = labels.empty() ? scored.rows[i].label : truth[i].label;
            if (label == features::Label::unlabeled)
                throw UsageError("row " + std::to_string(i + 1) + " is unlabeled; pass --labels");
            s.push_back(scored.rows[i].score);
            y.push_back(label == features::Label::malicious);
        }
        const auto report = eval::make_report(scored.model_kind, dataset_id, scored.seed, s, y, scored.threshold,
                                              scored.polarity, sweep_points);
        write_file(out, eval::to_json(report).dump(1) + "\n");
        if (!sweep_out.empty()) {
            std::ostringstream csv;
            eval::write_sweep_csv(csv, report);
            write_file(sweep_out, csv.str());
        }
        const auto& m = report.metrics;
        std::cout << "precision " << m.precision << " recall " << m.recall << " (tp " << m.tp << " fp " << m.fp
                  << " tn " << m.tn << " fn " << m.fn << ")\n";
    }
};

struct ReproCmd {
    std::string scenario = IOTGAN_S1_SCENARIO;
    std::string out, timings;
    std::optional<std::uint64_t> seed;
    int repeats = 5;
    GanFlags gan;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("repro", "run the full S1 pipeline and print the metrics table");
        c->add_option("--scenario", scenario, "scenario JSON file")->check(CLI::ExistingFile)->capture_default_str();
        c->add_option("--seed", seed, "root seed (default: the scenario's)");
        c->add_option("--out", out, "write the deterministic report JSON here");
        c->add_option("--timings", timings, "write wall-clock timings JSON here");
        c->add_option("--repeats", repeats, "timing repeats")->check(CLI::Range(3, 1000))->capture_default_str();
        gan.add_to(c);
        c->callback([this] { run(); });
    }

    void run() {
        const auto sc = sim::load_scenario(scenario);
        pipeline::ReproOptions o;
        o.train = gan.options();
        o.seed = seed ? *seed : sc.dataset.seed;
        o.timing_repeats = repeats;
        echo({{"subcommand", "repro"}, {"scenario", scenario}, {"seed", o.seed}, {"out", out}, {"timings", timings},
              {"repeats", repeats}, {"gan", gan.json()}});
        const auto r = pipeline::run_repro(sc, o);
        if (!out.empty()) write_file(out, r.report().dump(1) + "\n");
        if (!timings.empty()) write_file(timings, r.timings().dump(1) + "\n");
        std::cout << r.table();
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"iotgan: IoT traffic simulation, feature extraction and GAN/tree intrusion detectors"};
    app.require_subcommand(1);
    SimulateCmd simulate;
    ExtractCmd extract;
    TrainCmd train;
    ScoreCmd score;
    EvalCmd evaluate;
    ReproCmd repro;
    simulate.add(app);
    extract.add(app);
    train.add(app);
    score.add(app);
    evaluate.add(app);
    repro.add(app);

    if (argc < 2) {
        std::cerr << app.help();
        return 1;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "iotgan: error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "iotgan: runtime error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
