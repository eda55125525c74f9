#pragma once

// Timing and energy budgets, and composition of boards into larger networks.

#include <cstddef>
#include <vector>

#include "spnn/netcore.hpp"

namespace spnn {

/// Residual that closes the 11-beam cycle at 103.24 us: 103.24 - 11 * 9.375.
inline constexpr double kDefaultBackendUs = 0.115;

struct TimingBudget {
    double flight_plus_detector_ns = 25.0;
    double adc_readout_us = 0.4;
    double dac_switch_us = 8.95;
    std::size_t beams_per_cycle = 11;
    double backend_us = kDefaultBackendUs;

    void validate() const;
};

struct CycleTime {
    double per_beam_us = 0.0;
    double cycle_us = 0.0;
    double refresh_khz = 0.0;
};

/// per_beam = dac + adc + flight; cycle = beams * per_beam + backend; refresh = 1000 / cycle.
CycleTime cycle_time(const TimingBudget& budget);

struct EnergyBudget {
    std::size_t channel_count = 768;
    double power_per_channel_mw = 6.0;
    double peak_ops_tera = 80.0;

    void validate() const;
    double power_w() const { return static_cast<double>(channel_count) * power_per_channel_mw / 1000.0; }
};

struct NetworkDims {
    std::size_t port_count = 0;
    std::size_t diffraction_layers = 0;
    std::size_t phase_layers = 0;

    static NetworkDims of(const NetworkSpec& net);
};

struct ThroughputEnergy {
    double ops_per_pass = 0.0;       ///< 8 N^2 L_d + 6 N L_phi real operations
    double tops = 0.0;               ///< ops_per_pass / latency
    double tops_per_watt = 0.0;
    double calibrated_tops_per_watt = 0.0;  ///< peak_ops_tera / power
};

/// Counts a complex multiply-accumulate as 8 real operations and a complex
/// scale as 6.
ThroughputEnergy throughput_energy(const NetworkDims& dims, const EnergyBudget& budget, double latency_ns);

struct ExpansionLayout {
    std::size_t rows = 1;  ///< boards stacked vertically (port blocks)
    std::size_t cols = 1;  ///< boards cascaded horizontally (layers)
};

enum class SeamMode {
    BlockDiagonal,
    /// After every diffraction layer the last port of each upper block and the
    /// first port of the block below pass through one more coupler.
    BoundaryCoupler,
};

/// `boards` is row-major (rows x cols). Rows are horizontal cascades; rows are
/// then stacked into a (rows * N)-port network.
NetworkSpec expand_network(const std::vector<NetworkSpec>& boards, ExpansionLayout layout,
                           SeamMode seam = SeamMode::BoundaryCoupler, double seam_coupling = 0.5);

}  // namespace spnn
