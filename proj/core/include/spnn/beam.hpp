#pragma once

// Far-field model of the transmit array, beam-codebook training and
// pattern-quality metrics.

#include <cstdint>
#include <string>
#include <vector>

#include "spnn/netcore.hpp"

namespace spnn {

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kBeamCenterFrequencyHz = 10.6e9;

struct ElementPattern {
    enum class Kind { Isotropic, CosinePower };
    Kind kind = Kind::CosinePower;
    double exponent = 1.0;

    static ElementPattern isotropic() { return {Kind::Isotropic, 0.0}; }
    static ElementPattern cosine_power(double n) { return {Kind::CosinePower, n}; }

    /// Field amplitude gain; cos^n(theta), zero beyond the horizon.
    double gain(double theta_rad) const;
};

struct ArrayGeometry {
    std::size_t element_count = 32;
    double spacing_m = 0.0;
    double wavelength_m = 0.0;
    ElementPattern element_pattern;

    void validate() const;
    /// Half-wavelength spacing at `frequency_hz`.
    static ArrayGeometry half_wave(std::size_t elements = 32, double frequency_hz = kBeamCenterFrequencyHz,
                                   ElementPattern pattern = {});
};

struct FarFieldGrid {
    ArrayGeometry geometry;
    std::vector<double> angles_deg;
    /// angles x elements; row a(theta)[n] = g(theta) exp(j 2 pi d n sin(theta) / lambda).
    CMatrix steering;

    std::size_t size() const { return angles_deg.size(); }
    /// Index of an on-grid angle; ValidationError otherwise.
    std::size_t index_of(double angle_deg) const;
};

FarFieldGrid make_far_field_grid(const ArrayGeometry& geometry, double start_deg = -90.0,
                                 double stop_deg = 90.0, double step_deg = 1.0);

struct FarFieldPattern {
    RVector power;          ///< |a(theta)^H y|^2
    RVector normalized_db;  ///< peak at 0 dB
};

FarFieldPattern far_field_pattern(const FarFieldGrid& grid, const CVector& aperture);
FarFieldPattern far_field_pattern(const FarFieldGrid& grid, const ComplexField& aperture);

/// Complex far-field amplitude a(theta)^H y at an arbitrary angle.
Complex far_field_amplitude(const ArrayGeometry& geometry, const CVector& aperture, double angle_deg);

/// Angle of the largest power; ties go to the first grid angle.
double peak_angle_deg(const FarFieldGrid& grid, const RVector& power);

enum class BeamLossKind {
    CrossEntropy,  ///< -log(P(target) / sum P)
    Literal,       ///< log(P(target)), the printed form; kept for comparison
};

double beam_loss(const FarFieldGrid& grid, const CVector& aperture, double target_deg,
                 BeamLossKind kind = BeamLossKind::CrossEntropy);

/// dL/dRe(y) + j dL/dIm(y).
CVector beam_loss_aperture_gradient(const FarFieldGrid& grid, const CVector& aperture, double target_deg,
                                    BeamLossKind kind = BeamLossKind::CrossEntropy);

struct BeamLossGradient {
    double loss = 0.0;
    std::vector<RVector> d_phases;
    CVector aperture;
};

/// Loss of the network's response to `excitation` and its phase gradient.
BeamLossGradient beam_loss_gradient(const NetworkSpec& net, const FarFieldGrid& grid, const CVector& excitation,
                                    double target_deg, BeamLossKind kind = BeamLossKind::CrossEntropy);

/// Ones at ports 12, 14, 16, 18, zero elsewhere.
CVector beam_excitation(std::size_t port_count = 32);

enum class Region { Left, Center, Right };

std::string region_name(Region r);
Region parse_region(const std::string& name);
/// Left: -50..-20, Center: -10..10, Right: 20..50 (degrees).
Region region_of_angle(double angle_deg);

/// {-50, -40, ..., 50}.
std::vector<double> default_beam_angles();

struct BeamTrainConfig {
    double learning_rate = 0.05;
    std::size_t max_iterations = 2000;
    std::uint64_t seed = 0;
    BeamLossKind loss = BeamLossKind::CrossEntropy;
    double pointing_tolerance_deg = 2.0;

    void validate() const;
};

struct BeamEntry {
    double target_angle_deg = 0.0;
    Region region = Region::Center;
    std::vector<RVector> phases;  ///< one per phase layer
    std::vector<double> loss_curve;
    RVector pattern_power;
    double peak_angle_deg = 0.0;
    double pointing_error_deg = 0.0;
    bool flagged = false;
    std::string warning;
};

struct PhaseCodebook {
    std::vector<BeamEntry> entries;

    std::vector<RVector> patterns() const;
    /// Network with the entry's phases loaded.
    NetworkSpec configure(const NetworkSpec& net, std::size_t entry) const;
};

/// Independent plain-SGD optimization per angle from a seeded uniform init.
/// The lowest-loss iterate is kept; entries pointing outside the tolerance are flagged.
PhaseCodebook train_beam_codebook(const NetworkSpec& net, const FarFieldGrid& grid, const CVector& excitation,
                                  const std::vector<double>& angles_deg, const BeamTrainConfig& cfg);

/// Normalized inner products of amplitude patterns sqrt(P); diagonal exactly 1.
RMatrix pattern_correlation_matrix(const std::vector<RVector>& power_patterns);

/// Moving average with a trailing window (shorter at the start).
std::vector<double> smooth(const std::vector<double>& values, std::size_t window);

/// Long-format CSV: beam_deg,angle_deg,power_db.
std::string pattern_csv(const FarFieldGrid& grid, const PhaseCodebook& codebook);

}  // namespace spnn
