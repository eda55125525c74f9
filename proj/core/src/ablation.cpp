#include "spnn/ablation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spnn/errors.hpp"
#include "spnn/random.hpp"

namespace spnn {

namespace {

std::vector<std::size_t> labels_of(std::span<const Sample> samples) {
    std::vector<std::size_t> labels;
    labels.reserve(samples.size());
    for (const auto& s : samples) {
        labels.push_back(s.label);
    }
    return labels;
}

struct HeadRun {
    double accuracy = 0.0;
    double loss = 0.0;
    bool flagged = false;
};

HeadRun head_only(const std::vector<DetectionVector>& train_f, const std::vector<std::size_t>& train_l,
                  const std::vector<DetectionVector>& val_f, const std::vector<std::size_t>& val_l,
                  std::size_t classes, const TrainConfig& cfg) {
    const LinearHead head =
        LinearHead::zeros(classes, static_cast<std::size_t>(train_f.front().intensities.size()));
    const FineTrainResult r = fine_train(head, train_f, train_l, cfg, val_f, val_l);
    HeadRun out;
    out.flagged = r.diverged || !(r.final_loss <= r.initial_loss);
    if (r.history.empty()) {
        out.flagged = true;
        return out;
    }
    out.accuracy = r.history.back().validation_accuracy;
    out.loss = r.history.back().validation_loss;
    return out;
}

}  // namespace

void RoadPipelineConfig::validate() const {
    scenes.validate();
    train.validate();
    mesh.validate();
    if (rx_phase_layers == 0) {
        throw ConfigError("receive network needs at least one phase layer");
    }
    if (detector_ports.empty()) {
        throw ConfigError("receive network needs detector ports");
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train_fraction must lie in (0, 1)");
    }
    if (!(feature_level > 0.0)) {
        throw ConfigError("feature_level must be positive");
    }
}

NetworkSpec make_rx_network(const RoadPipelineConfig& cfg, std::size_t antenna_count) {
    const DiffractionLayer mesh = synth_coupler_mesh(cfg.mesh);
    NetworkSpec net = make_stack(mesh.matrix, cfg.rx_phase_layers, 1, mesh.source);
    net.input_port_mask.assign(net.port_count, false);
    for (std::size_t n = 0; n < antenna_count; ++n) {
        net.input_port_mask.at(kRoadRxFirstPort + n) = true;
    }
    net.detector_ports = cfg.detector_ports;
    net.validate();
    return net;
}

RoadRunResult train_road_samples(std::vector<Sample> samples, Region region, const RoadPipelineConfig& cfg) {
    cfg.validate();
    if (samples.empty()) {
        throw ValidationError("no road samples");
    }
    const auto labels = labels_of(samples);
    const SplitIndices split = stratified_split(labels, cfg.train_fraction, cfg.train.seed);
    auto train = gather(samples, split.train);
    auto val = gather(samples, split.validation);

    RoadRunResult out;
    out.region = region;
    const std::size_t classes = region_classes(region).size();
    Model model{make_rx_network(cfg), LinearHead::zeros(classes, cfg.detector_ports.size() * samples.front().slot_count)};
    initialize_model(model, cfg.train.seed);
    out.input_scale = input_scale_for_level(model.net, train, cfg.feature_level);
    scale_inputs(train, out.input_scale);
    scale_inputs(val, out.input_scale);
    PretrainResult r = pretrain(model, train, val, cfg.train);
    out.model = std::move(r.model);
    out.history = std::move(r.history);
    out.diverged = r.diverged;
    const Evaluation ev = evaluate(out.model, val);
    out.accuracy = ev.accuracy;
    out.loss = ev.loss;
    out.confusion = ev.confusion;
    return out;
}

std::vector<DetectionVector> raw_antenna_features(std::span<const Sample> samples, std::size_t first_port,
                                                  std::size_t antenna_count) {
    std::vector<DetectionVector> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        if (first_port + antenna_count > static_cast<std::size_t>(s.inputs.rows())) {
            throw ConfigError("antenna ports exceed the sample port count");
        }
        RVector d = RVector::Zero(static_cast<Eigen::Index>(antenna_count * s.slot_count));
        for (std::size_t slot = 0; slot < s.slot_count; ++slot) {
            for (std::size_t f = 0; f < s.freq_count; ++f) {
                const auto col = static_cast<Eigen::Index>(slot * s.freq_count + f);
                for (std::size_t n = 0; n < antenna_count; ++n) {
                    d[static_cast<Eigen::Index>(slot * antenna_count + n)] +=
                        std::norm(s.inputs(static_cast<Eigen::Index>(first_port + n), col));
                }
            }
        }
        out.push_back(DetectionVector{std::move(d)});
    }
    return out;
}

std::string AblationTable::csv() const {
    std::ostringstream out;
    out.precision(10);
    out << "variant,region,beams,rx_ports,seed,accuracy,loss,flagged\n";
    for (const auto& r : rows) {
        out << r.variant << ',' << region_name(r.region) << ',' << r.beams << ',' << r.rx_ports << ',' << r.seed
            << ',' << r.accuracy << ',' << r.loss << ',' << (r.flagged ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string AblationTable::summary() const {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(2);
    out << "variant   mean_accuracy  drop\n";
    out << "full      " << 100.0 * full_accuracy << "%\n";
    out << "no_rx     " << 100.0 * no_rx_accuracy << "%  " << 100.0 * no_rx_drop() << "\n";
    out << "no_tx     " << 100.0 * no_tx_accuracy << "%  " << 100.0 * no_tx_drop() << "\n";
    bool any_sweep = false;
    for (const auto& r : rows) {
        if (r.variant != "sweep") {
            continue;
        }
        if (!any_sweep) {
            out << "sweep: region beams rx_ports accuracy\n";
            any_sweep = true;
        }
        out << "  " << region_name(r.region) << ' ' << r.beams << ' ' << r.rx_ports << ' ' << 100.0 * r.accuracy
            << "%" << (r.flagged ? " (flagged)" : "") << '\n';
    }
    return out.str();
}

AblationTable ablation_suite(const TxBeams& tx, const AblationConfig& cfg) {
    cfg.pipeline.validate();
    if (tx.size() != 11) {
        throw ConfigError("ablation needs the 11-beam transmit codebook, got " + std::to_string(tx.size()));
    }
    if (cfg.broadside_beam >= tx.size()) {
        throw ConfigError("broadside beam index out of range");
    }
    if (cfg.regions.empty()) {
        throw ConfigError("ablation needs at least one region");
    }
    const TxBeams broadside = select_beams(tx, {cfg.broadside_beam});
    const std::uint64_t seed = cfg.pipeline.train.seed;

    AblationTable table;
    for (std::size_t ri = 0; ri < cfg.regions.size(); ++ri) {
        const Region region = cfg.regions[ri];
        const std::size_t classes = region_classes(region).size();
        RoadPipelineConfig pcfg = cfg.pipeline;
        pcfg.scenes.seed = derive_seed(cfg.pipeline.scenes.seed, ri);

        const auto scenes = generate_road_scenes(region, pcfg.scenes);
        const auto tensors = render_road_scenes(scenes, tx);
        const auto tensors_bs = render_road_scenes(scenes, broadside);
        const std::size_t antennas = tensors.front().antennas;
        const auto beams = region_beam_indices(region);

        auto full_samples = assemble_road_samples(tensors, region);
        auto no_tx_samples = assemble_road_subset(tensors_bs, region, {0}, {});

        const RoadRunResult full = train_road_samples(full_samples, region, pcfg);
        table.rows.push_back({"full", region, beams.size(), antennas, seed, full.accuracy, full.loss, full.diverged});

        const RoadRunResult no_tx = train_road_samples(no_tx_samples, region, pcfg);
        table.rows.push_back({"no_tx", region, 1, antennas, seed, no_tx.accuracy, no_tx.loss, no_tx.diverged});

        const auto labels = labels_of(full_samples);
        const SplitIndices split = stratified_split(labels, pcfg.train_fraction, pcfg.train.seed);
        const auto train = gather(full_samples, split.train);
        const auto val = gather(full_samples, split.validation);
        auto raw_train = raw_antenna_features(train, kRoadRxFirstPort, antennas);
        auto raw_val = raw_antenna_features(val, kRoadRxFirstPort, antennas);
        const double gain = pcfg.feature_level / median_mean_feature(raw_train);
        for (auto* set : {&raw_train, &raw_val}) {
            for (auto& f : *set) {
                f.intensities *= gain;
            }
        }
        const HeadRun no_rx = head_only(raw_train, labels_of(train), raw_val, labels_of(val), classes, pcfg.train);
        table.rows.push_back({"no_rx", region, beams.size(), antennas, seed, no_rx.accuracy, no_rx.loss, no_rx.flagged});

        table.full_accuracy += full.accuracy / static_cast<double>(cfg.regions.size());
        table.no_tx_accuracy += no_tx.accuracy / static_cast<double>(cfg.regions.size());
        table.no_rx_accuracy += no_rx.accuracy / static_cast<double>(cfg.regions.size());

        if (!cfg.run_sweep) {
            continue;
        }
        for (const std::size_t ports : cfg.sweep_port_counts) {
            if (ports == 0 || ports > antennas) {
                throw ConfigError("sweep port count " + std::to_string(ports) + " out of range");
            }
            std::vector<std::size_t> antenna_subset(ports);
            for (std::size_t n = 0; n < ports; ++n) {
                antenna_subset[n] = n;
            }
            for (std::size_t k = 1; k <= beams.size(); ++k) {
                const std::vector<std::size_t> beam_subset(beams.begin(), beams.begin() + static_cast<std::ptrdiff_t>(k));
                auto cell = assemble_road_subset(tensors, region, beam_subset, antenna_subset);
                auto cell_train = gather(cell, split.train);
                auto cell_val = gather(cell, split.validation);
                scale_inputs(cell_train, full.input_scale);
                scale_inputs(cell_val, full.input_scale);
                const auto ftr = detection_features(full.model.net, cell_train);
                const auto fva = detection_features(full.model.net, cell_val);
                const HeadRun r = head_only(ftr, labels_of(cell_train), fva, labels_of(cell_val), classes, pcfg.train);
                table.rows.push_back({"sweep", region, k, ports, seed, r.accuracy, r.loss, r.flagged});
            }
        }
    }
    return table;
}

}  // namespace spnn
