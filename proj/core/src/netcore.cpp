#include "spnn/netcore.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <string>

#include "spnn/errors.hpp"

namespace spnn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t table_segment(const PhaseAmplitudeTable& t, double x) {
    const auto it = std::upper_bound(t.phases_rad.begin(), t.phases_rad.end(), x);
    if (it == t.phases_rad.begin()) {
        return t.phases_rad.size();  // wraps: segment from last knot to first + 2pi
    }
    const auto i = static_cast<std::size_t>(it - t.phases_rad.begin()) - 1;
    return i + 1 == t.phases_rad.size() ? t.phases_rad.size() : i;
}

// Segment endpoints with the periodic closure between the last and first knot.
void segment_bounds(const PhaseAmplitudeTable& t, std::size_t seg, double x, double& x0, double& y0,
                    double& x1, double& y1, double& xq) {
    const std::size_t n = t.phases_rad.size();
    xq = x;
    if (seg < n) {
        x0 = t.phases_rad[seg];
        y0 = t.amplitudes[seg];
        x1 = t.phases_rad[seg + 1];
        y1 = t.amplitudes[seg + 1];
        return;
    }
    x0 = t.phases_rad[n - 1];
    y0 = t.amplitudes[n - 1];
    x1 = t.phases_rad[0] + kTwoPi;
    y1 = t.amplitudes[0];
    if (xq < x0) {
        xq += kTwoPi;
    }
}

void require_finite(const CVector& v, const char* what) {
    if (!v.allFinite()) {
        throw ValidationError(std::string(what) + " contains non-finite entries");
    }
}

}  // namespace

double wrap_phase(double phase) {
    double w = std::fmod(phase, kTwoPi);
    if (w < 0.0) {
        w += kTwoPi;
    }
    return w >= kTwoPi ? 0.0 : w;
}

void PhaseAmplitudeTable::validate() const {
    if (phases_rad.size() < 2 || phases_rad.size() != amplitudes.size()) {
        throw ConfigError("phase amplitude table needs >= 2 knots with matching amplitudes");
    }
    for (std::size_t i = 0; i < phases_rad.size(); ++i) {
        if (phases_rad[i] < 0.0 || phases_rad[i] > kTwoPi || amplitudes[i] < 0.0) {
            throw ConfigError("phase amplitude table knot " + std::to_string(i) + " out of range");
        }
        if (i > 0 && phases_rad[i] <= phases_rad[i - 1]) {
            throw ConfigError("phase amplitude table knots must increase strictly");
        }
    }
    if (phases_rad.back() - phases_rad.front() >= kTwoPi) {
        throw ConfigError("phase amplitude table spans a full turn; drop the duplicate knot");
    }
}

double PhaseAmplitudeTable::amplitude(double wrapped_phase) const {
    double x0, y0, x1, y1, xq;
    segment_bounds(*this, table_segment(*this, wrapped_phase), wrapped_phase, x0, y0, x1, y1, xq);
    return y0 + (y1 - y0) * (xq - x0) / (x1 - x0);
}

double PhaseAmplitudeTable::slope(double wrapped_phase) const {
    double x0, y0, x1, y1, xq;
    segment_bounds(*this, table_segment(*this, wrapped_phase), wrapped_phase, x0, y0, x1, y1, xq);
    return (y1 - y0) / (x1 - x0);
}

CVector PhaseLayer::diagonal() const {
    CVector d(phases.size());
    for (Eigen::Index i = 0; i < phases.size(); ++i) {
        const double p = wrap_phase(phases[i]);
        const double a = amplitude_table ? amplitude_table->amplitude(p) : 1.0;
        d[i] = std::polar(a, p);
    }
    return d;
}

CVector PhaseLayer::diagonal_derivative() const {
    CVector d(phases.size());
    for (Eigen::Index i = 0; i < phases.size(); ++i) {
        const double p = wrap_phase(phases[i]);
        const Complex rot = std::polar(1.0, p);
        if (amplitude_table) {
            const double a = amplitude_table->amplitude(p);
            d[i] = Complex(amplitude_table->slope(p), a) * rot;
        } else {
            d[i] = Complex(0.0, 1.0) * rot;
        }
    }
    return d;
}

void NetworkSpec::validate() const {
    if (port_count == 0) {
        throw ConfigError("network port_count must be positive");
    }
    if (layers.empty()) {
        throw ConfigError("network has no layers");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const bool expect_diffraction = (i % 2 == 0);
        if (std::holds_alternative<DiffractionLayer>(layers[i]) != expect_diffraction) {
            throw ConfigError("layer " + std::to_string(i) +
                              ": layers must alternate diffraction, phase, ... starting with diffraction");
        }
        if (const auto* d = std::get_if<DiffractionLayer>(&layers[i])) {
            if (d->matrix.rows() != d->matrix.cols() || d->size() != port_count) {
                throw ConfigError("layer " + std::to_string(i) + ": diffraction matrix is " +
                                  std::to_string(d->matrix.rows()) + "x" +
                                  std::to_string(d->matrix.cols()) + ", expected " +
                                  std::to_string(port_count) + "x" + std::to_string(port_count));
            }
        } else {
            const auto& p = std::get<PhaseLayer>(layers[i]);
            if (p.size() != port_count) {
                throw ConfigError("layer " + std::to_string(i) + ": phase layer has " +
                                  std::to_string(p.size()) + " phases, expected " +
                                  std::to_string(port_count));
            }
            if (p.amplitude_table) {
                p.amplitude_table->validate();
            }
        }
    }
    if (!input_port_mask.empty() && input_port_mask.size() != port_count) {
        throw ConfigError("input_port_mask length must equal port_count");
    }
    std::set<std::size_t> seen;
    for (const auto p : detector_ports) {
        if (p >= port_count) {
            throw ConfigError("detector port " + std::to_string(p) + " out of range");
        }
        if (!seen.insert(p).second) {
            throw ConfigError("detector port " + std::to_string(p) + " listed twice");
        }
    }
}

std::size_t NetworkSpec::phase_layer_count() const {
    return static_cast<std::size_t>(std::count_if(layers.begin(), layers.end(), [](const Layer& l) {
        return std::holds_alternative<PhaseLayer>(l);
    }));
}

std::size_t NetworkSpec::diffraction_layer_count() const {
    return layers.size() - phase_layer_count();
}

bool NetworkSpec::input_active(std::size_t port) const {
    return input_port_mask.empty() || input_port_mask.at(port);
}

RVector NetworkSpec::phases() const {
    RVector flat(static_cast<Eigen::Index>(trainable_count()));
    Eigen::Index offset = 0;
    for (const auto& layer : layers) {
        if (const auto* p = std::get_if<PhaseLayer>(&layer)) {
            flat.segment(offset, p->phases.size()) = p->phases;
            offset += p->phases.size();
        }
    }
    return flat;
}

void NetworkSpec::set_phases(const RVector& flat) {
    if (static_cast<std::size_t>(flat.size()) != trainable_count()) {
        throw ConfigError("set_phases: expected " + std::to_string(trainable_count()) +
                          " values, got " + std::to_string(flat.size()));
    }
    Eigen::Index offset = 0;
    for (auto& layer : layers) {
        if (auto* p = std::get_if<PhaseLayer>(&layer)) {
            p->phases = flat.segment(offset, p->phases.size());
            offset += p->phases.size();
        }
    }
}

LinearHead LinearHead::zeros(std::size_t classes, std::size_t features) {
    return LinearHead{RMatrix::Zero(static_cast<Eigen::Index>(classes),
                                    static_cast<Eigen::Index>(features)),
                      RVector::Zero(static_cast<Eigen::Index>(classes))};
}

std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) {
            best = i;
        }
    }
    return best;
}

std::size_t argmax(const RVector& values) {
    return argmax(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

CMatrix propagate(const NetworkSpec& net, const CMatrix& inputs) {
    CMatrix y = inputs;
    for (const auto& layer : net.layers) {
        if (const auto* d = std::get_if<DiffractionLayer>(&layer)) {
            y = d->matrix * y;
        } else {
            y = std::get<PhaseLayer>(layer).diagonal().asDiagonal() * y;
        }
    }
    return y;
}

CMatrix transfer_matrix(const NetworkSpec& net) {
    return propagate(net, CMatrix::Identity(static_cast<Eigen::Index>(net.port_count),
                                            static_cast<Eigen::Index>(net.port_count)));
}

ComplexField forward_single(const NetworkSpec& net, const ComplexField& field) {
    net.validate();
    if (static_cast<std::size_t>(field.amplitudes.size()) != net.port_count) {
        throw ConfigError("field has " + std::to_string(field.amplitudes.size()) +
                          " amplitudes, network has " + std::to_string(net.port_count) + " ports");
    }
    require_finite(field.amplitudes, "input field");
    for (std::size_t p = 0; p < net.port_count; ++p) {
        if (!net.input_active(p) && field.amplitudes[static_cast<Eigen::Index>(p)] != Complex(0.0)) {
            throw ValidationError("input port " + std::to_string(p) + " is inactive but driven");
        }
    }
    ComplexField out;
    out.amplitudes = propagate(net, field.amplitudes);
    out.frequency_hz = field.frequency_hz;
    out.slot_index = field.slot_index;
    return out;
}

DetectionVector detect(const NetworkSpec& net, std::span<const ComplexField> fields) {
    if (fields.empty()) {
        throw ValidationError("detect: no frequencies supplied");
    }
    net.validate();
    std::map<std::size_t, std::set<double>> freqs_by_slot;
    for (const auto& f : fields) {
        if (static_cast<std::size_t>(f.amplitudes.size()) != net.port_count) {
            throw ConfigError("detect: field length does not match port count");
        }
        require_finite(f.amplitudes, "detect input");
        if (!freqs_by_slot[f.slot_index].insert(f.frequency_hz).second) {
            throw ValidationError("detect: duplicate field for slot " +
                                  std::to_string(f.slot_index) + " at " +
                                  std::to_string(f.frequency_hz) + " Hz");
        }
    }
    const std::size_t slots = freqs_by_slot.size();
    if (freqs_by_slot.rbegin()->first != slots - 1) {
        throw ValidationError("detect: slot indices must be contiguous from 0");
    }
    const auto& reference = freqs_by_slot.begin()->second;
    for (const auto& [slot, freqs] : freqs_by_slot) {
        if (freqs != reference) {
            throw ValidationError("detect: slot " + std::to_string(slot) +
                                  " does not carry the same frequency set as slot 0");
        }
    }

    CMatrix inputs(static_cast<Eigen::Index>(net.port_count), static_cast<Eigen::Index>(fields.size()));
    for (std::size_t i = 0; i < fields.size(); ++i) {
        inputs.col(static_cast<Eigen::Index>(i)) = fields[i].amplitudes;
    }
    const CMatrix outputs = propagate(net, inputs);

    const std::size_t ports = net.detector_ports.size();
    DetectionVector d{RVector::Zero(static_cast<Eigen::Index>(ports * slots))};
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const std::size_t base = fields[i].slot_index * ports;
        for (std::size_t k = 0; k < ports; ++k) {
            d.intensities[static_cast<Eigen::Index>(base + k)] +=
                std::norm(outputs(static_cast<Eigen::Index>(net.detector_ports[k]),
                                  static_cast<Eigen::Index>(i)));
        }
    }
    return d;
}

Classification classify(const LinearHead& head, const DetectionVector& d) {
    if (static_cast<std::size_t>(d.intensities.size()) != head.feature_count() ||
        head.bias.size() != head.weight.rows()) {
        throw ConfigError("classify: head expects " + std::to_string(head.feature_count()) +
                          " features, detection vector has " + std::to_string(d.intensities.size()));
    }
    Classification c;
    c.scores = head.weight * d.intensities + head.bias;
    c.argmax = argmax(c.scores);
    return c;
}

std::size_t classify_by_port_energy(const NetworkSpec& net, const DetectionVector& d,
                                    std::span<const std::size_t> class_ports) {
    if (class_ports.empty()) {
        throw ValidationError("classify_by_port_energy: no class ports");
    }
    const std::size_t ports = net.detector_ports.size();
    if (ports == 0 || static_cast<std::size_t>(d.intensities.size()) % ports != 0) {
        throw ConfigError("classify_by_port_energy: detection vector does not match detector ports");
    }
    const std::size_t slots = static_cast<std::size_t>(d.intensities.size()) / ports;
    std::vector<double> energy(class_ports.size(), 0.0);
    for (std::size_t k = 0; k < class_ports.size(); ++k) {
        const auto it = std::find(net.detector_ports.begin(), net.detector_ports.end(), class_ports[k]);
        if (it == net.detector_ports.end()) {
            throw ValidationError("class port " + std::to_string(class_ports[k]) +
                                  " is not a detector port");
        }
        const auto pos = static_cast<std::size_t>(it - net.detector_ports.begin());
        for (std::size_t s = 0; s < slots; ++s) {
            energy[k] += d.intensities[static_cast<Eigen::Index>(s * ports + pos)];
        }
    }
    return argmax(energy);
}

std::vector<std::size_t> even_class_ports(std::size_t classes, std::size_t port_count) {
    if (classes == 0 || classes > port_count) {
        throw ConfigError("even_class_ports: need 1..port_count classes");
    }
    std::vector<std::size_t> ports(classes);
    for (std::size_t k = 0; k < classes; ++k) {
        ports[k] = static_cast<std::size_t>(std::floor((static_cast<double>(k) + 0.5) *
                                                       static_cast<double>(port_count) /
                                                       static_cast<double>(classes)));
    }
    return ports;
}

NetworkSpec cascade_boards(const NetworkSpec& a, const NetworkSpec& b) {
    if (a.port_count != b.port_count) {
        throw ConfigError("cascade_boards: port counts differ (" + std::to_string(a.port_count) +
                          " vs " + std::to_string(b.port_count) + ")");
    }
    if (a.layers.size() % 2 != 0) {
        throw ConfigError("cascade_boards: first board must end with a phase layer");
    }
    NetworkSpec out;
    out.port_count = a.port_count;
    out.layers = a.layers;
    out.layers.insert(out.layers.end(), b.layers.begin(), b.layers.end());
    out.input_port_mask = a.input_port_mask;
    out.detector_ports = b.detector_ports;
    out.validate();
    return out;
}

NetworkSpec make_stack(const CMatrix& diffraction, std::size_t pairs_per_board,
                       std::size_t board_count, DiffractionSource source) {
    NetworkSpec net;
    net.port_count = static_cast<std::size_t>(diffraction.rows());
    for (std::size_t i = 0; i < pairs_per_board * board_count; ++i) {
        net.layers.emplace_back(DiffractionLayer{diffraction, source, 0.0});
        PhaseLayer phase;
        phase.phases = RVector::Zero(diffraction.rows());
        net.layers.emplace_back(std::move(phase));
    }
    net.validate();
    return net;
}

}  // namespace spnn
