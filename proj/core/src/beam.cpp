#include "spnn/beam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "spnn/errors.hpp"
#include "spnn/random.hpp"
#include "spnn/train.hpp"

namespace spnn {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double target_power(const FarFieldGrid& grid, const RVector& power, double target_deg) {
    return power[static_cast<Eigen::Index>(grid.index_of(target_deg))];
}

void check_aperture(const FarFieldGrid& grid, const CVector& aperture) {
    if (static_cast<std::size_t>(aperture.size()) != grid.geometry.element_count) {
        throw ConfigError("aperture has " + std::to_string(aperture.size()) + " elements, array has " +
                          std::to_string(grid.geometry.element_count));
    }
}

}  // namespace

double ElementPattern::gain(double theta_rad) const {
    if (kind == Kind::Isotropic) {
        return 1.0;
    }
    const double c = std::cos(theta_rad);
    return c <= 0.0 ? 0.0 : std::pow(c, exponent);
}

void ArrayGeometry::validate() const {
    if (element_count == 0) {
        throw ConfigError("array element_count must be positive");
    }
    if (!(spacing_m > 0.0)) {
        throw ConfigError("array spacing_m must be positive");
    }
    if (!(wavelength_m > 0.0)) {
        throw ConfigError("array wavelength_m must be positive");
    }
    if (element_pattern.kind == ElementPattern::Kind::CosinePower && !(element_pattern.exponent >= 0.0)) {
        throw ConfigError("cosine-power exponent must be non-negative");
    }
}

ArrayGeometry ArrayGeometry::half_wave(std::size_t elements, double frequency_hz, ElementPattern pattern) {
    ArrayGeometry g;
    g.element_count = elements;
    g.wavelength_m = kSpeedOfLight / frequency_hz;
    g.spacing_m = g.wavelength_m / 2.0;
    g.element_pattern = pattern;
    return g;
}

std::size_t FarFieldGrid::index_of(double angle_deg) const {
    for (std::size_t i = 0; i < angles_deg.size(); ++i) {
        if (std::abs(angles_deg[i] - angle_deg) < 1e-9) {
            return i;
        }
    }
    std::ostringstream msg;
    msg << "angle " << angle_deg << " deg is not on the far-field grid";
    throw ValidationError(msg.str());
}

FarFieldGrid make_far_field_grid(const ArrayGeometry& geometry, double start_deg, double stop_deg,
                                 double step_deg) {
    geometry.validate();
    if (!(step_deg > 0.0) || !(stop_deg > start_deg) || start_deg < -90.0 || stop_deg > 90.0) {
        throw ConfigError("far-field grid needs -90 <= start < stop <= 90 and step > 0");
    }
    const double steps = (stop_deg - start_deg) / step_deg;
    const double rounded = std::round(steps);
    if (std::abs(steps - rounded) > 1e-9) {
        throw ConfigError("far-field grid step does not divide the angular span");
    }
    FarFieldGrid grid;
    grid.geometry = geometry;
    const auto count = static_cast<std::size_t>(rounded) + 1;
    grid.angles_deg.resize(count);
    grid.steering.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(geometry.element_count));
    const double k = 2.0 * std::numbers::pi * geometry.spacing_m / geometry.wavelength_m;
    for (std::size_t i = 0; i < count; ++i) {
        const double deg = start_deg + static_cast<double>(i) * step_deg;
        grid.angles_deg[i] = deg;
        const double theta = deg * kDeg;
        const double g = geometry.element_pattern.gain(theta);
        for (std::size_t n = 0; n < geometry.element_count; ++n) {
            grid.steering(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n)) =
                std::polar(g, k * static_cast<double>(n) * std::sin(theta));
        }
    }
    return grid;
}

FarFieldPattern far_field_pattern(const FarFieldGrid& grid, const CVector& aperture) {
    check_aperture(grid, aperture);
    FarFieldPattern p;
    const CVector s = grid.steering.conjugate() * aperture;
    p.power = s.cwiseAbs2();
    const double peak = p.power.maxCoeff();
    p.normalized_db.resize(p.power.size());
    for (Eigen::Index i = 0; i < p.power.size(); ++i) {
        p.normalized_db[i] = (peak > 0.0 && p.power[i] > 0.0) ? 10.0 * std::log10(p.power[i] / peak)
                                                               : -std::numeric_limits<double>::infinity();
    }
    if (peak > 0.0) {
        p.normalized_db[static_cast<Eigen::Index>(argmax(p.power))] = 0.0;
    }
    return p;
}

FarFieldPattern far_field_pattern(const FarFieldGrid& grid, const ComplexField& aperture) {
    return far_field_pattern(grid, aperture.amplitudes);
}

Complex far_field_amplitude(const ArrayGeometry& geometry, const CVector& aperture, double angle_deg) {
    if (static_cast<std::size_t>(aperture.size()) != geometry.element_count) {
        throw ConfigError("aperture length does not match the array");
    }
    const double theta = angle_deg * kDeg;
    const double g = geometry.element_pattern.gain(theta);
    const double k = 2.0 * std::numbers::pi * geometry.spacing_m / geometry.wavelength_m * std::sin(theta);
    Complex s = 0.0;
    for (Eigen::Index n = 0; n < aperture.size(); ++n) {
        s += std::polar(g, -k * static_cast<double>(n)) * aperture[n];
    }
    return s;
}

double peak_angle_deg(const FarFieldGrid& grid, const RVector& power) {
    if (static_cast<std::size_t>(power.size()) != grid.size()) {
        throw ConfigError("pattern length does not match the grid");
    }
    return grid.angles_deg[argmax(power)];
}

double beam_loss(const FarFieldGrid& grid, const CVector& aperture, double target_deg, BeamLossKind kind) {
    const RVector power = far_field_pattern(grid, aperture).power;
    const double total = power.sum();
    if (!(total > 0.0)) {
        throw ValidationError("beam_loss: far-field pattern is identically zero");
    }
    const double pt = target_power(grid, power, target_deg);
    if (kind == BeamLossKind::Literal) {
        if (!(pt > 0.0)) {
            throw NumericalError("beam_loss: zero power at the target angle");
        }
        return std::log(pt);
    }
    if (!(pt > 0.0)) {
        return std::numeric_limits<double>::infinity();
    }
    return std::log(total) - std::log(pt);
}

CVector beam_loss_aperture_gradient(const FarFieldGrid& grid, const CVector& aperture, double target_deg,
                                    BeamLossKind kind) {
    check_aperture(grid, aperture);
    const CVector s = grid.steering.conjugate() * aperture;
    const RVector power = s.cwiseAbs2();
    const double total = power.sum();
    if (!(total > 0.0)) {
        throw ValidationError("beam_loss: far-field pattern is identically zero");
    }
    const auto t = static_cast<Eigen::Index>(grid.index_of(target_deg));
    if (!(power[t] > 0.0)) {
        throw NumericalError("beam_loss: zero power at the target angle");
    }
    RVector c;
    if (kind == BeamLossKind::Literal) {
        c = RVector::Zero(power.size());
        c[t] = 1.0 / power[t];
    } else {
        c = RVector::Constant(power.size(), 1.0 / total);
        c[t] -= 1.0 / power[t];
    }
    const CVector weighted = (2.0 * c.cast<Complex>()).cwiseProduct(s);
    return grid.steering.transpose() * weighted;
}

BeamLossGradient beam_loss_gradient(const NetworkSpec& net, const FarFieldGrid& grid, const CVector& excitation,
                                    double target_deg, BeamLossKind kind) {
    if (static_cast<std::size_t>(excitation.size()) != net.port_count) {
        throw ConfigError("excitation length does not match the network port count");
    }
    const ForwardTrace trace = forward_trace(net, CMatrix(excitation));
    BeamLossGradient out;
    out.aperture = trace.output.col(0);
    out.loss = beam_loss(grid, out.aperture, target_deg, kind);
    const CVector g = beam_loss_aperture_gradient(grid, out.aperture, target_deg, kind);
    out.d_phases = backward_phases(net, trace, CMatrix(g));
    return out;
}

CVector beam_excitation(std::size_t port_count) {
    if (port_count < 19) {
        throw ConfigError("beam excitation needs at least 19 ports");
    }
    CVector x = CVector::Zero(static_cast<Eigen::Index>(port_count));
    for (const Eigen::Index p : {12, 14, 16, 18}) {
        x[p] = 1.0;
    }
    return x;
}

std::string region_name(Region r) {
    switch (r) {
        case Region::Left:
            return "left";
        case Region::Center:
            return "center";
        case Region::Right:
            return "right";
    }
    return "center";
}

Region parse_region(const std::string& name) {
    if (name == "left") {
        return Region::Left;
    }
    if (name == "center") {
        return Region::Center;
    }
    if (name == "right") {
        return Region::Right;
    }
    throw ConfigError("unknown region '" + name + "' (expected left, center or right)");
}

Region region_of_angle(double angle_deg) {
    if (angle_deg < -15.0) {
        return Region::Left;
    }
    if (angle_deg > 15.0) {
        return Region::Right;
    }
    return Region::Center;
}

std::vector<double> default_beam_angles() {
    std::vector<double> a;
    for (int deg = -50; deg <= 50; deg += 10) {
        a.push_back(deg);
    }
    return a;
}

void BeamTrainConfig::validate() const {
    if (!(learning_rate > 0.0)) {
        throw ConfigError("beam learning_rate must be positive");
    }
    if (max_iterations == 0) {
        throw ConfigError("beam max_iterations must be positive");
    }
    if (!(pointing_tolerance_deg >= 0.0)) {
        throw ConfigError("pointing tolerance must be non-negative");
    }
}

std::vector<RVector> PhaseCodebook::patterns() const {
    std::vector<RVector> out;
    out.reserve(entries.size());
    for (const auto& e : entries) {
        out.push_back(e.pattern_power);
    }
    return out;
}

NetworkSpec PhaseCodebook::configure(const NetworkSpec& net, std::size_t entry) const {
    NetworkSpec out = net;
    const auto& phases = entries.at(entry).phases;
    std::size_t k = 0;
    for (auto& layer : out.layers) {
        if (auto* p = std::get_if<PhaseLayer>(&layer)) {
            if (k >= phases.size() || phases[k].size() != p->phases.size()) {
                throw ConfigError("codebook entry does not match the network's phase layers");
            }
            p->phases = phases[k++];
        }
    }
    if (k != phases.size()) {
        throw ConfigError("codebook entry has more phase layers than the network");
    }
    return out;
}

PhaseCodebook train_beam_codebook(const NetworkSpec& net, const FarFieldGrid& grid, const CVector& excitation,
                                  const std::vector<double>& angles_deg, const BeamTrainConfig& cfg) {
    cfg.validate();
    net.validate();
    if (net.port_count != grid.geometry.element_count) {
        throw ConfigError("transmit network port count must equal the array element count");
    }
    for (const double a : angles_deg) {
        grid.index_of(a);
    }
    PhaseCodebook book;
    for (std::size_t ai = 0; ai < angles_deg.size(); ++ai) {
        const double target = angles_deg[ai];
        NetworkSpec work = net;
        Rng rng(derive_seed(cfg.seed, ai));
        RVector phases(static_cast<Eigen::Index>(work.trainable_count()));
        for (Eigen::Index i = 0; i < phases.size(); ++i) {
            phases[i] = rng.uniform(0.0, 2.0 * std::numbers::pi);
        }
        work.set_phases(phases);

        BeamEntry entry;
        entry.target_angle_deg = target;
        entry.region = region_of_angle(target);
        RVector best = phases;
        double best_loss = std::numeric_limits<double>::infinity();
        for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
            const BeamLossGradient g = beam_loss_gradient(work, grid, excitation, target, cfg.loss);
            entry.loss_curve.push_back(g.loss);
            if (!std::isfinite(g.loss)) {
                entry.warning = "non-finite loss at iteration " + std::to_string(it);
                break;
            }
            if (g.loss < best_loss) {
                best_loss = g.loss;
                best = phases;
            }
            Eigen::Index off = 0;
            for (const auto& d : g.d_phases) {
                phases.segment(off, d.size()) -= cfg.learning_rate * d;
                off += d.size();
            }
            work.set_phases(phases);
        }
        work.set_phases(best);
        for (const auto& layer : work.layers) {
            if (const auto* p = std::get_if<PhaseLayer>(&layer)) {
                entry.phases.push_back(p->phases);
            }
        }
        const CVector aperture = propagate(work, CMatrix(excitation)).col(0);
        entry.pattern_power = far_field_pattern(grid, aperture).power;
        entry.peak_angle_deg = peak_angle_deg(grid, entry.pattern_power);
        entry.pointing_error_deg = std::abs(entry.peak_angle_deg - target);
        if (entry.pointing_error_deg > cfg.pointing_tolerance_deg) {
            entry.flagged = true;
            std::ostringstream msg;
            msg << "beam " << target << " deg peaks at " << entry.peak_angle_deg << " deg after "
                << entry.loss_curve.size() << " iterations";
            entry.warning = entry.warning.empty() ? msg.str() : entry.warning + "; " + msg.str();
        }
        book.entries.push_back(std::move(entry));
    }
    return book;
}

RMatrix pattern_correlation_matrix(const std::vector<RVector>& power_patterns) {
    const std::size_t n = power_patterns.size();
    std::vector<RVector> amp;
    amp.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (power_patterns[i].size() != power_patterns.front().size()) {
            throw ConfigError("correlation: patterns have unequal lengths");
        }
        if ((power_patterns[i].array() < 0.0).any()) {
            throw ValidationError("correlation: pattern " + std::to_string(i) + " has negative power");
        }
        RVector a = power_patterns[i].cwiseSqrt();
        const double norm = a.norm();
        if (!(norm > 0.0)) {
            throw ValidationError("correlation: pattern " + std::to_string(i) + " has zero norm");
        }
        amp.push_back(a / norm);
    }
    RMatrix c(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
        for (std::size_t k = i + 1; k < n; ++k) {
            const double v = std::clamp(amp[i].dot(amp[k]), 0.0, 1.0);
            c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
            c(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = v;
        }
    }
    return c;
}

std::vector<double> smooth(const std::vector<double>& values, std::size_t window) {
    if (window == 0) {
        throw ConfigError("smoothing window must be positive");
    }
    std::vector<double> out(values.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sum += values[i];
        if (i >= window) {
            sum -= values[i - window];
        }
        out[i] = sum / static_cast<double>(std::min(i + 1, window));
    }
    return out;
}

std::string pattern_csv(const FarFieldGrid& grid, const PhaseCodebook& codebook) {
    std::ostringstream out;
    out.precision(10);
    out << "beam_deg,angle_deg,power_db\n";
    for (const auto& e : codebook.entries) {
        const double peak = e.pattern_power.maxCoeff();
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double p = e.pattern_power[static_cast<Eigen::Index>(i)];
            const double db = (p > 0.0 && peak > 0.0) ? 10.0 * std::log10(p / peak) : -300.0;
            out << e.target_angle_deg << ',' << grid.angles_deg[i] << ',' << db << '\n';
        }
    }
    return out.str();
}

}  // namespace spnn
