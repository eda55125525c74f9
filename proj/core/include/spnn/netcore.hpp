#pragma once

// Forward signal model of a programmable plasmonic diffractive network:
// fixed diffraction (mixing) matrices alternating with trainable diagonal
// phase layers, non-coherent intensity detection, and a linear head.

#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace spnn {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// Field amplitudes on every port at one frequency and one time slot.
struct ComplexField {
    CVector amplitudes;
    double frequency_hz = 1.0;
    std::size_t slot_index = 0;
};

enum class DiffractionSource { SynthesizedMesh, MeasuredCalibration };

struct DiffractionLayer {
    CMatrix matrix;
    DiffractionSource source = DiffractionSource::SynthesizedMesh;
    /// Frequency at which a calibration was measured; 0 when not applicable.
    double provenance_frequency_hz = 0.0;

    std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
};

/// Piecewise-linear amplitude ripple of a phase shifter as a function of
/// its wrapped phase setting. Knots must be strictly increasing in [0, 2pi];
/// the table is treated as periodic.
struct PhaseAmplitudeTable {
    std::vector<double> phases_rad;
    std::vector<double> amplitudes;

    double amplitude(double wrapped_phase) const;
    /// d amplitude / d phase at the same point (right derivative at knots).
    double slope(double wrapped_phase) const;
    void validate() const;
};

/// 330 degrees, the varactor shifter's realizable range.
inline constexpr double kDefaultPhaseMaxRad = 330.0 * std::numbers::pi / 180.0;

struct PhaseLayer {
    RVector phases;  ///< radians, unconstrained; wrapped when applied
    double phase_max_rad = kDefaultPhaseMaxRad;
    std::optional<PhaseAmplitudeTable> amplitude_table;  ///< nullopt: unit amplitude

    std::size_t size() const { return static_cast<std::size_t>(phases.size()); }
    /// Diagonal of the applied operator.
    CVector diagonal() const;
    /// Derivative of each diagonal entry with respect to its phase.
    CVector diagonal_derivative() const;
};

using Layer = std::variant<DiffractionLayer, PhaseLayer>;

struct NetworkSpec {
    std::size_t port_count = 0;
    std::vector<Layer> layers;
    std::vector<bool> input_port_mask;       ///< empty means every port active
    std::vector<std::size_t> detector_ports;  ///< 0-based output ports, in readout order

    /// Throws ConfigError on any structural violation.
    void validate() const;

    std::size_t phase_layer_count() const;
    std::size_t diffraction_layer_count() const;
    std::size_t trainable_count() const { return port_count * phase_layer_count(); }
    bool input_active(std::size_t port) const;

    /// All phases flattened in layer order.
    RVector phases() const;
    void set_phases(const RVector& flat);
};

struct DetectionVector {
    RVector intensities;
};

struct LinearHead {
    RMatrix weight;  ///< classes x features
    RVector bias;    ///< classes

    std::size_t class_count() const { return static_cast<std::size_t>(weight.rows()); }
    std::size_t feature_count() const { return static_cast<std::size_t>(weight.cols()); }
    static LinearHead zeros(std::size_t classes, std::size_t features);
};

struct Classification {
    RVector scores;
    std::size_t argmax = 0;
};

double wrap_phase(double phase);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);
std::size_t argmax(const RVector& values);

/// Propagates columns of `inputs` (port_count x B) through every layer.
CMatrix propagate(const NetworkSpec& net, const CMatrix& inputs);

/// End-to-end transfer matrix (product of layer operators).
CMatrix transfer_matrix(const NetworkSpec& net);

ComplexField forward_single(const NetworkSpec& net, const ComplexField& field);

/// Intensity per (slot, detector), summed over frequencies. Entries are
/// ordered detector-major within a slot, slots ascending.
DetectionVector detect(const NetworkSpec& net, std::span<const ComplexField> fields);

Classification classify(const LinearHead& head, const DetectionVector& d);

/// Class whose assigned port carries the largest intensity (summed over
/// slots when the detection vector spans several).
std::size_t classify_by_port_energy(const NetworkSpec& net, const DetectionVector& d,
                                    std::span<const std::size_t> class_ports);

/// Class-port placement for image tasks: floor((k + 0.5) * ports / classes).
std::vector<std::size_t> even_class_ports(std::size_t classes, std::size_t port_count);

NetworkSpec cascade_boards(const NetworkSpec& a, const NetworkSpec& b);

/// Builds `board_count` boards of alternating (diffraction, phase) pairs,
/// `pairs_per_board` each, all sharing the same diffraction matrix.
NetworkSpec make_stack(const CMatrix& diffraction, std::size_t pairs_per_board,
                       std::size_t board_count,
                       DiffractionSource source = DiffractionSource::SynthesizedMesh);

}  // namespace spnn
