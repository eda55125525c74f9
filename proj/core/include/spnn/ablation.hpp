#pragma once

// Road-scene pipelines and the ablation table: full Tx+Rx, no Rx network,
// no Tx beam scanning, and a beams x receive-ports sweep.

#include <cstdint>
#include <string>
#include <vector>

#include "spnn/beam.hpp"
#include "spnn/device.hpp"
#include "spnn/scene.hpp"
#include "spnn/train.hpp"

namespace spnn {

struct RoadPipelineConfig {
    RoadSceneConfig scenes;
    TrainConfig train{0.01, 0.9, 64, 100, 11, true, true};
    CouplerMeshSpec mesh;
    std::size_t rx_phase_layers = 3;
    std::vector<std::size_t> detector_ports{5, 16, 26};
    double train_fraction = 0.8;
    /// Inputs are scaled so the median over training samples of the mean
    /// detector reading at initialization equals this level.
    double feature_level = 1.0;

    void validate() const;
};

/// Receive network: mesh/phase pairs with the antennas on ports 10..21.
NetworkSpec make_rx_network(const RoadPipelineConfig& cfg, std::size_t antenna_count = 12);

struct RoadRunResult {
    Region region = Region::Center;
    Model model;
    double input_scale = 1.0;
    double accuracy = 0.0;  ///< validation
    double loss = 0.0;
    ConfusionMatrix confusion;
    std::vector<EpochMetrics> history;
    bool diverged = false;
};

/// Scales inputs to the configured feature level, pretrains the receive network
/// and its head, and evaluates on the held-out split.
RoadRunResult train_road_samples(std::vector<Sample> samples, Region region, const RoadPipelineConfig& cfg);

/// Per-antenna intensities summed over frequency, slot-major.
std::vector<DetectionVector> raw_antenna_features(std::span<const Sample> samples, std::size_t first_port,
                                                  std::size_t antenna_count);

struct AblationConfig {
    RoadPipelineConfig pipeline;
    std::vector<Region> regions{Region::Left, Region::Center, Region::Right};
    std::vector<std::size_t> sweep_port_counts{4, 8, 12};
    bool run_sweep = true;
    std::size_t broadside_beam = 5;
};

struct AblationRow {
    std::string variant;  ///< full, no_rx, no_tx or sweep
    Region region = Region::Center;
    std::size_t beams = 0;
    std::size_t rx_ports = 0;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    double loss = 0.0;
    bool flagged = false;
};

struct AblationTable {
    std::vector<AblationRow> rows;
    double full_accuracy = 0.0;   ///< mean over regions
    double no_rx_accuracy = 0.0;
    double no_tx_accuracy = 0.0;

    double no_rx_drop() const { return full_accuracy - no_rx_accuracy; }
    double no_tx_drop() const { return full_accuracy - no_tx_accuracy; }
    /// variant,region,beams,rx_ports,seed,accuracy,loss,flagged
    std::string csv() const;
    std::string summary() const;
};

/// All variants see the same rendered scenes and the same split. `tx` holds
/// the 11 codebook beams.
AblationTable ablation_suite(const TxBeams& tx, const AblationConfig& cfg);

}  // namespace spnn
