#pragma once

// Gesture streams: time folding into two-slot samples, class balancing, and a
// seeded synthetic stream generator.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spnn/device.hpp"
#include "spnn/netcore.hpp"
#include "spnn/sample.hpp"
#include "spnn/train.hpp"

namespace spnn {

enum class Pose { Five, Fist, One, Palm, Three, Thumb };

inline constexpr std::size_t kPoseCount = 6;

std::string pose_name(Pose p);
Pose parse_pose(const std::string& name);

/// Class indices: 0 five->fist, 1 one->palm, 2 three->fist, 3 thumb->fist, 4 void.
inline constexpr std::size_t kGestureClassCount = 5;
inline constexpr std::size_t kVoidClass = 4;

std::string gesture_class_name(std::size_t label);
/// Named transition for a (start, end) pose pair, void otherwise.
std::size_t transition_label(Pose start, Pose end);

struct GestureWindowSpec {
    std::size_t slot_count = 2;
    double slot_interval_s = 5.0;
    std::size_t port_count = 32;
    std::size_t first_antenna_port = 8;
    std::size_t antenna_count = 16;
    std::vector<double> frequencies_hz{10.6e9, 10.7e9, 10.8e9};
    std::vector<std::size_t> detector_ports{5, 13, 21};

    void validate() const;
};

struct GestureFrame {
    double time_s = 0.0;
    Pose pose = Pose::Five;
    CMatrix values;  ///< antennas x frequencies
};

struct FoldResult {
    std::vector<Sample> samples;
    std::vector<std::string> warnings;
    std::size_t skipped = 0;
};

/// Pairs each frame with the first frame at least one interval later (2 slots).
/// Antenna k lands on port first_antenna_port + k; other ports stay zero.
/// Pairs separated by more than twice the interval are skipped with a warning.
FoldResult fold_gesture_windows(const std::vector<GestureFrame>& stream, const GestureWindowSpec& spec);

/// Down-samples every class to the smallest class count (seeded, order kept).
std::vector<Sample> balance_classes(const std::vector<Sample>& samples, std::size_t class_count,
                                    std::uint64_t seed);

std::vector<std::size_t> class_counts(const std::vector<Sample>& samples, std::size_t class_count);

struct GestureStreamConfig {
    std::size_t repetitions = 10;  ///< per gesture and take
    std::size_t takes = 5;
    double frame_period_s = 0.5;
    double hold_s = 10.0;         ///< time spent in each pose of a repetition
    double take_gap_s = 30.0;     ///< idle time between takes (no frames)
    double noise_std = 0.03;      ///< complex Gaussian, per antenna and frequency
    double take_drift = 0.05;     ///< per-take multiplicative perturbation scale
    double pose_variation = 0.2;  ///< per-repetition multiplicative perturbation scale
    double pose_contrast = 0.3;   ///< weight of the pose-specific paths over the shared hand response
    std::uint64_t seed = 0;

    void validate() const;
};

/// Each take cycles through the four gestures `repetitions` times; a repetition
/// holds the start pose then the end pose. A pose signature is a shared
/// multi-path hand response plus pose-specific paths, drawn once from the seed.
std::vector<GestureFrame> synth_gesture_stream(const GestureStreamConfig& cfg, const GestureWindowSpec& spec);

/// Text stream: header `spnn-gesture v1 antennas=A freqs=F`, then one line per
/// frame: `time_s pose re im re im ...` (antenna-major).
void write_gesture_stream(const std::filesystem::path& path, const std::vector<GestureFrame>& stream);
std::vector<GestureFrame> read_gesture_stream(const std::filesystem::path& path);

struct GesturePipelineConfig {
    GestureWindowSpec window;
    GestureStreamConfig stream;
    TrainConfig train{0.01, 0.9, 64, 100, 0, true, true};
    CouplerMeshSpec mesh;
    std::size_t phase_layers = 3;
    double train_fraction = 0.8;
    double feature_level = 1.0;

    void validate() const;
};

/// Mesh/phase board with the antennas as active inputs and the window's detectors.
NetworkSpec make_gesture_network(const GesturePipelineConfig& cfg);

struct GestureRunResult {
    Model model;
    double input_scale = 1.0;
    std::vector<EpochMetrics> history;
    Evaluation validation;
    std::vector<std::size_t> class_counts;  ///< of the balanced dataset
    bool diverged = false;
};

/// Balances, splits, scales to the feature level and pretrains.
GestureRunResult train_gesture_samples(const std::vector<Sample>& samples, const GesturePipelineConfig& cfg);

}  // namespace spnn
