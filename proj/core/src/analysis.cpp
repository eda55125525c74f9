#include "spnn/analysis.hpp"

#include <cmath>

#include "spnn/errors.hpp"

namespace spnn {

void TimingBudget::validate() const {
    if (!(flight_plus_detector_ns >= 0.0) || !(adc_readout_us >= 0.0) || !(dac_switch_us >= 0.0) ||
        !(backend_us >= 0.0)) {
        throw ConfigError("timing budget terms must be non-negative");
    }
}

CycleTime cycle_time(const TimingBudget& budget) {
    budget.validate();
    CycleTime c;
    c.per_beam_us = budget.dac_switch_us + budget.adc_readout_us + budget.flight_plus_detector_ns / 1000.0;
    c.cycle_us = static_cast<double>(budget.beams_per_cycle) * c.per_beam_us + budget.backend_us;
    c.refresh_khz = c.cycle_us > 0.0 ? 1000.0 / c.cycle_us : std::numeric_limits<double>::infinity();
    return c;
}

void EnergyBudget::validate() const {
    if (channel_count == 0 || !(power_per_channel_mw > 0.0) || !(peak_ops_tera > 0.0)) {
        throw ConfigError("energy budget fields must be positive");
    }
}

NetworkDims NetworkDims::of(const NetworkSpec& net) {
    return {net.port_count, net.diffraction_layer_count(), net.phase_layer_count()};
}

ThroughputEnergy throughput_energy(const NetworkDims& dims, const EnergyBudget& budget, double latency_ns) {
    budget.validate();
    if (dims.port_count == 0) {
        throw ConfigError("network dims need a positive port count");
    }
    if (!(latency_ns > 0.0)) {
        throw ConfigError("latency_ns must be positive");
    }
    const double n = static_cast<double>(dims.port_count);
    ThroughputEnergy t;
    t.ops_per_pass = 8.0 * n * n * static_cast<double>(dims.diffraction_layers) +
                     6.0 * n * static_cast<double>(dims.phase_layers);
    t.tops = t.ops_per_pass / (latency_ns * 1e-9) / 1e12;
    t.tops_per_watt = t.tops / budget.power_w();
    t.calibrated_tops_per_watt = budget.peak_ops_tera / budget.power_w();
    return t;
}

namespace {

NetworkSpec stack_rows(const std::vector<NetworkSpec>& rows, SeamMode seam, double coupling) {
    const std::size_t n = rows.front().port_count;
    const std::size_t total = n * rows.size();
    const double t = std::sqrt(1.0 - coupling);
    const Complex jk(0.0, std::sqrt(coupling));

    NetworkSpec out;
    out.port_count = total;
    for (std::size_t li = 0; li < rows.front().layers.size(); ++li) {
        if (std::holds_alternative<DiffractionLayer>(rows.front().layers[li])) {
            DiffractionLayer d;
            d.matrix = CMatrix::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
            d.source = std::get<DiffractionLayer>(rows.front().layers[li]).source;
            d.provenance_frequency_hz = std::get<DiffractionLayer>(rows.front().layers[li]).provenance_frequency_hz;
            for (std::size_t r = 0; r < rows.size(); ++r) {
                const auto& block = std::get<DiffractionLayer>(rows[r].layers[li]).matrix;
                const auto off = static_cast<Eigen::Index>(r * n);
                d.matrix.block(off, off, block.rows(), block.cols()) = block;
            }
            if (seam == SeamMode::BoundaryCoupler) {
                for (std::size_t r = 1; r < rows.size(); ++r) {
                    const auto a = static_cast<Eigen::Index>(r * n - 1);
                    const auto b = static_cast<Eigen::Index>(r * n);
                    const CMatrix ra = d.matrix.row(a);
                    const CMatrix rb = d.matrix.row(b);
                    d.matrix.row(a) = t * ra + jk * rb;
                    d.matrix.row(b) = jk * ra + t * rb;
                }
            }
            out.layers.emplace_back(std::move(d));
        } else {
            PhaseLayer p = std::get<PhaseLayer>(rows.front().layers[li]);
            p.phases.resize(static_cast<Eigen::Index>(total));
            for (std::size_t r = 0; r < rows.size(); ++r) {
                const auto& src = std::get<PhaseLayer>(rows[r].layers[li]);
                if (src.phase_max_rad != p.phase_max_rad || src.amplitude_table.has_value() != p.amplitude_table.has_value()) {
                    throw ConfigError("vertically stacked boards must share phase-layer settings");
                }
                p.phases.segment(static_cast<Eigen::Index>(r * n), static_cast<Eigen::Index>(n)) = src.phases;
            }
            out.layers.emplace_back(std::move(p));
        }
    }
    bool any_mask = false;
    for (const auto& row : rows) {
        any_mask = any_mask || !row.input_port_mask.empty();
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (any_mask) {
            for (std::size_t k = 0; k < n; ++k) {
                out.input_port_mask.push_back(rows[r].input_active(k));
            }
        }
        for (const auto p : rows[r].detector_ports) {
            out.detector_ports.push_back(r * n + p);
        }
    }
    out.validate();
    return out;
}

}  // namespace

NetworkSpec expand_network(const std::vector<NetworkSpec>& boards, ExpansionLayout layout, SeamMode seam,
                           double seam_coupling) {
    if (layout.rows == 0 || layout.cols == 0) {
        throw ConfigError("expansion layout needs at least one row and column");
    }
    if (boards.size() != layout.rows * layout.cols) {
        throw ConfigError("expansion layout " + std::to_string(layout.rows) + "x" + std::to_string(layout.cols) +
                          " needs " + std::to_string(layout.rows * layout.cols) + " boards, got " +
                          std::to_string(boards.size()));
    }
    if (!(seam_coupling >= 0.0 && seam_coupling <= 1.0)) {
        throw ConfigError("seam coupling must lie in [0, 1]");
    }
    for (std::size_t i = 0; i < boards.size(); ++i) {
        boards[i].validate();
        if (boards[i].port_count != boards.front().port_count ||
            boards[i].layers.size() != boards.front().layers.size()) {
            throw ConfigError("board " + std::to_string(i) + " dimensions differ from board 0");
        }
    }
    std::vector<NetworkSpec> rows;
    for (std::size_t r = 0; r < layout.rows; ++r) {
        NetworkSpec row = boards[r * layout.cols];
        for (std::size_t c = 1; c < layout.cols; ++c) {
            row = cascade_boards(row, boards[r * layout.cols + c]);
        }
        rows.push_back(std::move(row));
    }
    if (rows.size() == 1) {
        return rows.front();
    }
    return stack_rows(rows, seam, seam_coupling);
}

}  // namespace spnn
