#pragma once

// Physical models behind the abstract layers: the varactor-loaded
// reflection-type phase shifter, its phase <-> capacitance inversion,
// coupler-mesh diffraction layers, and measured calibration matrices.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spnn/netcore.hpp"

namespace spnn {

struct PhaseShifterParams {
    double z1_ohm = 0.0;      ///< characteristic impedance of the varactor-loaded line
    double theta_rad = 0.0;   ///< its electrical length at the design frequency
    double zt_ohm = 50.0;     ///< effective coupler port impedance seen by the load
    double cv_min_pf = 0.05;
    double cv_max_pf = 0.25;
    double design_freq_hz = 10.8e9;

    void validate() const;

    /// Constants frozen from `fit_phase_shifter` with the default search grid.
    static PhaseShifterParams fitted_default();
};

/// Reflection coefficient of the loaded coupler ports,
///   G = (j A - Zt B) / (j A + Zt B),  A = -Z1 + Z1^2 Cv w tan(theta),  B = Z1 Cv w + tan(theta).
/// Lossless, so |G| == 1.
Complex reflection_coefficient(const PhaseShifterParams& p, double cv_pf, double freq_hz);

/// arg G on the continuous branch (0, 2pi); decreases strictly with Cv.
double reflection_phase(const PhaseShifterParams& p, double cv_pf, double freq_hz);

/// Closed-form phase span between the capacitance endpoints:
///   2 [atan(A/(Zt B))|Cmax - atan(A/(Zt B))|Cmin].
double max_phase_range(const PhaseShifterParams& p, double freq_hz);

/// Capacitance whose reflection phase equals `target_phase_rad` (absolute,
/// on the (0, 2pi) branch). Throws OutOfRangeError naming the deficit in degrees.
double phase_to_capacitance(const PhaseShifterParams& p, double target_phase_rad, double freq_hz);

/// Capacitance realizing a phase advance `shift_rad` over the Cv = cv_max
/// setting; valid shifts are [0, max_phase_range].
double shift_to_capacitance(const PhaseShifterParams& p, double shift_rad, double freq_hz);

/// Inverse of `shift_to_capacitance`.
double capacitance_to_shift(const PhaseShifterParams& p, double cv_pf, double freq_hz);

struct PhaseShifterFitGrid {
    double z1_min = 20.0, z1_max = 120.0, z1_step = 0.5;
    double theta_min = 0.2, theta_max = 1.3, theta_step = 0.005;
    double zt_min = 5.0, zt_max = 50.0, zt_step = 0.5;
    double cv_min_pf = 0.05, cv_max_pf = 0.25;
    double freq_hz = 10.8e9;
};

struct PhaseShifterFit {
    PhaseShifterParams params;
    double span_rad = 0.0;
};

/// Exhaustive grid search maximizing the phase span.
PhaseShifterFit fit_phase_shifter(const PhaseShifterFitGrid& grid = {});

/// Bias-voltage lookup from a measured C(V) table; monotone piecewise-linear.
struct VaractorCurve {
    std::vector<double> volts;
    std::vector<double> cap_pf;

    void validate() const;
    double voltage_for(double cv_pf) const;
};

struct CouplerMeshSpec {
    std::size_t port_count = 32;
    std::size_t column_count = 16;
    double coupling = 0.5;  ///< power coupling factor; 0.5 is a 3 dB coupler

    void validate() const;
};

/// Product of coupler columns. Even columns pair ports (2m, 2m+1), odd
/// columns (2m+1, 2m+2); each coupler is [[t, j k], [j k, t]] with
/// t = sqrt(1 - coupling), k = sqrt(coupling).
DiffractionLayer synth_coupler_mesh(const CouplerMeshSpec& spec);

/// Largest singular value.
double spectral_norm(const CMatrix& m);

inline constexpr double kPassivityTolerance = 0.05;

/// Calibration file:
///   spnn-cal v1 ports=<N> freq_hz=<f>
///   <row> <col> <re> <im>      (N*N lines, 0-based)
/// `freq_hz` > 0 must match the header; pass 0 to accept any frequency.
DiffractionLayer load_calibration_matrix(const std::filesystem::path& path, double freq_hz);
void save_calibration_matrix(const std::filesystem::path& path, const CMatrix& matrix, double freq_hz);

/// One row of an exported codebook.
struct CodebookRow {
    std::size_t beam = 0;
    std::size_t index = 0;  ///< layer * ports + port
    double phase_rad = 0.0;  ///< wrapped trained phase
    double cv_pf = 0.0;
    std::optional<double> bias_v;
};

/// Codebook file:
///   spnn-codebook v1 beams=<B> layers=<L> ports=<N> freq_hz=<f> cv_min_pf=<a> cv_max_pf=<b>
///   offset <beam> <layer> <rad>          (B*L lines)
///   <beam> <index> <phase_rad> <cv_pf> [bias_v]
/// Each (beam, layer) carries a reference phase; the device realizes
/// wrap(phase - offset) as a shift above the Cv = cv_max setting, which
/// changes the layer's output only by a common phase factor.
struct CodebookFile {
    std::size_t beams = 0;
    std::size_t layers = 0;
    std::size_t ports = 0;
    double freq_hz = 0.0;
    double cv_min_pf = 0.0;
    double cv_max_pf = 0.0;
    std::vector<std::vector<double>> offsets;  ///< [beam][layer]
    std::vector<CodebookRow> rows;
    std::size_t clipped = 0;  ///< phases forced to the nearest realizable end
};

/// phases[beam][layer] holds one phase vector per phase layer.
CodebookFile export_phase_settings(const std::vector<std::vector<RVector>>& phases,
                                   const PhaseShifterParams& device, double freq_hz,
                                   const VaractorCurve* curve = nullptr);

/// Recovers wrapped phases from the capacitances (not the phase column).
std::vector<std::vector<RVector>> decode_phase_settings(const CodebookFile& file,
                                                        const PhaseShifterParams& device);

void write_codebook_file(const std::filesystem::path& path, const CodebookFile& file);
CodebookFile read_codebook_file(const std::filesystem::path& path);

}  // namespace spnn
