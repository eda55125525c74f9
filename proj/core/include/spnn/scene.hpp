#pragma once

// Point-scatterer echo synthesis for road scenes and per-region dataset assembly.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "spnn/beam.hpp"
#include "spnn/netcore.hpp"
#include "spnn/sample.hpp"

namespace spnn {

/// x is lateral (positive to the right), y is forward; the transmit array sits at the origin.
struct Scatterer {
    double x_m = 0.0;
    double y_m = 0.0;
    double rcs_m2 = 0.0;
};

struct AntennaPosition {
    double x_m = 0.0;
    double y_m = 0.0;
};

/// Eight roof antennas on a half-wavelength line, two more on each side at +-0.9 m.
std::vector<AntennaPosition> default_rx_antennas(double frequency_hz = 10.5e9);

struct SceneConfig {
    std::vector<Scatterer> scatterers;
    std::vector<AntennaPosition> rx_antennas = default_rx_antennas();
    std::vector<double> frequencies_hz{10.45e9, 10.5e9, 10.55e9};
    double snr_db = std::numeric_limits<double>::infinity();  ///< vs a 1 m^2 target at 10 m
    std::uint64_t seed = 0;

    void validate() const;
};

/// Transmit beams as aperture fields; gain(b, theta) is the array factor
/// normalized so a perfectly coherent aperture peaks at 1.
struct TxBeams {
    ArrayGeometry geometry;
    std::vector<double> angles_deg;
    std::vector<CVector> apertures;

    std::size_t size() const { return apertures.size(); }
    Complex gain(std::size_t beam, double theta_deg) const;
};

TxBeams tx_beams_from_codebook(const NetworkSpec& net, const PhaseCodebook& codebook, const CVector& excitation,
                               const ArrayGeometry& geometry);
/// Ideal uniform-amplitude steered apertures.
TxBeams steered_tx_beams(const ArrayGeometry& geometry, const std::vector<double>& angles_deg);
/// The subset of `beams` at the given indices.
TxBeams select_beams(const TxBeams& beams, const std::vector<std::size_t>& indices);

struct SceneSampleTensor {
    std::size_t beams = 0;
    std::size_t antennas = 0;
    std::size_t freqs = 0;
    std::vector<Complex> data;  ///< beam-major, then antenna, then frequency
    std::size_t label = 0;
    Region region = Region::Center;

    Complex& at(std::size_t b, std::size_t n, std::size_t f) { return data[(b * antennas + n) * freqs + f]; }
    Complex at(std::size_t b, std::size_t n, std::size_t f) const { return data[(b * antennas + n) * freqs + f]; }
    void validate() const;
};

/// Entry (b, n, i) = sum_s sqrt(rcs_s) G_b(theta_s) exp(-j 2 pi f_i (R_tx + R_rx,n) / c) / (R_tx R_rx,n)
/// plus complex Gaussian noise at the configured SNR.
SceneSampleTensor synth_echo_scene(const SceneConfig& cfg, const TxBeams& beams);

enum class SceneClass { Empty, Person, Vehicle };

std::string scene_class_name(SceneClass c);
/// Left {vehicle, empty}, Center {person, vehicle, empty}, Right {person, empty}.
std::vector<SceneClass> region_classes(Region region);
/// Beam indices of the region within the 11-beam codebook.
std::vector<std::size_t> region_beam_indices(Region region);

struct RoadSceneConfig {
    std::size_t samples_per_class = 600;
    double range_min_m = 9.0;
    double range_max_m = 12.0;
    double snr_db = 10.0;
    double distractor_probability = 1.0;
    /// Objects sit at one of the region's scan angles plus a uniform offset of
    /// at most this many degrees; a negative value spreads them over the sector.
    double angle_jitter_deg = 2.0;
    std::uint64_t seed = 5;

    void validate() const;
};

struct RoadScene {
    SceneConfig config;
    Region region = Region::Center;
    std::size_t label = 0;
};

/// Seeded scenes with one object (or none) inside the region and random
/// distractors in the other regions. Scene i derives its randomness from (seed, i).
std::vector<RoadScene> generate_road_scenes(Region region, const RoadSceneConfig& cfg);

std::vector<SceneSampleTensor> render_road_scenes(const std::vector<RoadScene>& scenes, const TxBeams& beams);

inline constexpr std::size_t kRoadRxFirstPort = 10;

/// One sample per tensor: beams become slots, antenna n lands on port
/// first_port + n, frequencies stay frequencies.
std::vector<Sample> assemble_road_samples(const std::vector<SceneSampleTensor>& tensors, Region region,
                                          std::size_t port_count = 32, std::size_t first_port = kRoadRxFirstPort);
/// As above with explicit beam indices and an optional antenna subset (empty: all).
std::vector<Sample> assemble_road_subset(const std::vector<SceneSampleTensor>& tensors, Region region,
                                          const std::vector<std::size_t>& beam_indices,
                                          const std::vector<std::size_t>& antenna_indices,
                                          std::size_t port_count = 32, std::size_t first_port = kRoadRxFirstPort);

/// Text dataset: header `spnn-scenes v1 count= beams= antennas= freqs= region= seed=`,
/// a `freqs_hz ...` line, then per sample `sample <label>` followed by one
/// line per (beam, antenna) holding F `re im` pairs.
void write_scene_file(const std::filesystem::path& path, const std::vector<SceneSampleTensor>& tensors,
                      const std::vector<double>& frequencies_hz, std::uint64_t seed);
struct SceneFile {
    std::vector<SceneSampleTensor> tensors;
    std::vector<double> frequencies_hz;
    std::uint64_t seed = 0;
};
SceneFile read_scene_file(const std::filesystem::path& path);

}  // namespace spnn
