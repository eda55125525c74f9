#include "spnn/device.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "spnn/errors.hpp"

namespace spnn {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kPico = 1e-12;

double to_deg(double rad) { return rad * 180.0 / kPi; }

// A and B of the reflection formula; cv in pF.
void load_terms(const PhaseShifterParams& p, double cv_pf, double freq_hz, double& a, double& b) {
    const double omega_c = kTwoPi * freq_hz * cv_pf * kPico;
    const double t = std::tan(p.theta_rad);
    a = -p.z1_ohm + p.z1_ohm * p.z1_ohm * omega_c * t;
    b = p.z1_ohm * omega_c + t;
}

void check_inputs(const PhaseShifterParams& p, double cv_pf, double freq_hz) {
    p.validate();
    if (!(freq_hz > 0.0)) {
        throw ValidationError("frequency must be positive");
    }
    const double slack = 1e-12 * p.cv_max_pf;
    if (!(cv_pf >= p.cv_min_pf - slack && cv_pf <= p.cv_max_pf + slack)) {
        throw ValidationError("capacitance " + std::to_string(cv_pf) + " pF outside [" +
                              std::to_string(p.cv_min_pf) + ", " + std::to_string(p.cv_max_pf) + "] pF");
    }
}

double atan_term(const PhaseShifterParams& p, double cv_pf, double freq_hz) {
    double a, b;
    load_terms(p, cv_pf, freq_hz, a, b);
    return std::atan(a / (p.zt_ohm * b));
}

// Bisection for the capacitance at which the (decreasing) reflection phase
// hits `target`, which the caller has bracketed.
double bisect_phase(const PhaseShifterParams& p, double target, double freq_hz) {
    double lo = p.cv_min_pf;
    double hi = p.cv_max_pf;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (reflection_phase(p, mid, freq_hz) > target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// "key=value" lookup in a header line.
double header_number(const std::vector<std::string>& tokens, const std::string& key,
                     const std::string& path) {
    for (const auto& t : tokens) {
        if (t.rfind(key + "=", 0) == 0) {
            try {
                return std::stod(t.substr(key.size() + 1));
            } catch (const std::exception&) {
                throw ParseError(path, 1, "bad value for " + key);
            }
        }
    }
    throw ParseError(path, 1, "header lacks " + key + "=");
}

std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> out;
    for (std::string t; ss >> t;) {
        out.push_back(t);
    }
    return out;
}

}  // namespace

void PhaseShifterParams::validate() const {
    if (!(z1_ohm > 0.0) || !(zt_ohm > 0.0)) {
        throw ConfigError("phase shifter impedances must be positive");
    }
    if (!(theta_rad > 0.0) || theta_rad > kPi / 2.0) {
        throw ConfigError("phase shifter electrical length must lie in (0, pi/2)");
    }
    if (std::abs(std::cos(theta_rad)) < 1e-9) {
        throw NumericalError("tan(theta) is singular at theta = pi/2");
    }
    if (!(cv_min_pf > 0.0) || !(cv_max_pf > cv_min_pf)) {
        throw ConfigError("varactor range must satisfy 0 < cv_min < cv_max");
    }
}

PhaseShifterParams PhaseShifterParams::fitted_default() {
    PhaseShifterParams p;
    p.z1_ohm = 120.0;
    p.theta_rad = 0.82;
    p.zt_ohm = 5.0;
    p.cv_min_pf = 0.05;
    p.cv_max_pf = 0.25;
    p.design_freq_hz = 10.8e9;
    return p;
}

Complex reflection_coefficient(const PhaseShifterParams& p, double cv_pf, double freq_hz) {
    check_inputs(p, cv_pf, freq_hz);
    double a, b;
    load_terms(p, cv_pf, freq_hz, a, b);
    const Complex num(-p.zt_ohm * b, a);
    const Complex den(p.zt_ohm * b, a);
    return num / den;
}

double reflection_phase(const PhaseShifterParams& p, double cv_pf, double freq_hz) {
    check_inputs(p, cv_pf, freq_hz);
    double a, b;
    load_terms(p, cv_pf, freq_hz, a, b);
    return kPi - 2.0 * std::atan2(a, p.zt_ohm * b);
}

double max_phase_range(const PhaseShifterParams& p, double freq_hz) {
    p.validate();
    if (!(freq_hz > 0.0)) {
        throw ValidationError("frequency must be positive");
    }
    return 2.0 * (atan_term(p, p.cv_max_pf, freq_hz) - atan_term(p, p.cv_min_pf, freq_hz));
}

double phase_to_capacitance(const PhaseShifterParams& p, double target_phase_rad, double freq_hz) {
    const double top = reflection_phase(p, p.cv_min_pf, freq_hz);
    const double bottom = reflection_phase(p, p.cv_max_pf, freq_hz);
    if (target_phase_rad > top || target_phase_rad < bottom) {
        const double deficit = target_phase_rad > top ? target_phase_rad - top : bottom - target_phase_rad;
        throw OutOfRangeError("phase " + std::to_string(to_deg(target_phase_rad)) +
                                  " deg is outside the realizable range [" + std::to_string(to_deg(bottom)) +
                                  ", " + std::to_string(to_deg(top)) + "] deg by " +
                                  std::to_string(to_deg(deficit)) + " deg",
                              to_deg(deficit));
    }
    if (target_phase_rad == top) {
        return p.cv_min_pf;
    }
    if (target_phase_rad == bottom) {
        return p.cv_max_pf;
    }
    return bisect_phase(p, target_phase_rad, freq_hz);
}

double shift_to_capacitance(const PhaseShifterParams& p, double shift_rad, double freq_hz) {
    const double span = max_phase_range(p, freq_hz);
    if (shift_rad < 0.0 || shift_rad > span) {
        const double deficit = shift_rad < 0.0 ? -shift_rad : shift_rad - span;
        throw OutOfRangeError("phase shift of " + std::to_string(to_deg(shift_rad)) +
                                  " deg exceeds the device range of " + std::to_string(to_deg(span)) +
                                  " deg by " + std::to_string(to_deg(deficit)) + " deg",
                              to_deg(deficit));
    }
    const double bottom = reflection_phase(p, p.cv_max_pf, freq_hz);
    const double target = std::min(bottom + shift_rad, reflection_phase(p, p.cv_min_pf, freq_hz));
    return phase_to_capacitance(p, target, freq_hz);
}

double capacitance_to_shift(const PhaseShifterParams& p, double cv_pf, double freq_hz) {
    return reflection_phase(p, cv_pf, freq_hz) - reflection_phase(p, p.cv_max_pf, freq_hz);
}

PhaseShifterFit fit_phase_shifter(const PhaseShifterFitGrid& g) {
    PhaseShifterFit best;
    best.span_rad = -1.0;
    const auto steps = [](double lo, double hi, double step) {
        return static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
    };
    const int nz = steps(g.z1_min, g.z1_max, g.z1_step);
    const int nt = steps(g.theta_min, g.theta_max, g.theta_step);
    const int nzt = steps(g.zt_min, g.zt_max, g.zt_step);
    PhaseShifterParams p;
    p.cv_min_pf = g.cv_min_pf;
    p.cv_max_pf = g.cv_max_pf;
    p.design_freq_hz = g.freq_hz;
    for (int iz = 0; iz < nz; ++iz) {
        p.z1_ohm = g.z1_min + iz * g.z1_step;
        for (int it = 0; it < nt; ++it) {
            p.theta_rad = g.theta_min + it * g.theta_step;
            for (int izt = 0; izt < nzt; ++izt) {
                p.zt_ohm = g.zt_min + izt * g.zt_step;
                const double span = max_phase_range(p, g.freq_hz);
                if (span > best.span_rad) {
                    best.span_rad = span;
                    best.params = p;
                }
            }
        }
    }
    return best;
}

void VaractorCurve::validate() const {
    if (volts.size() < 2 || volts.size() != cap_pf.size()) {
        throw ConfigError("varactor curve needs >= 2 (volts, pF) points");
    }
    const bool decreasing = cap_pf.back() < cap_pf.front();
    for (std::size_t i = 1; i < volts.size(); ++i) {
        if (!(volts[i] > volts[i - 1])) {
            throw ConfigError("varactor curve voltages must increase strictly");
        }
        if (decreasing ? !(cap_pf[i] < cap_pf[i - 1]) : !(cap_pf[i] > cap_pf[i - 1])) {
            throw ConfigError("varactor curve capacitance must be strictly monotone");
        }
    }
}

double VaractorCurve::voltage_for(double cv_pf) const {
    validate();
    const auto lo = std::min(cap_pf.front(), cap_pf.back());
    const auto hi = std::max(cap_pf.front(), cap_pf.back());
    if (cv_pf < lo - 1e-12 || cv_pf > hi + 1e-12) {
        throw ValidationError("capacitance " + std::to_string(cv_pf) + " pF outside the C(V) table");
    }
    for (std::size_t i = 1; i < cap_pf.size(); ++i) {
        const double c0 = cap_pf[i - 1];
        const double c1 = cap_pf[i];
        if ((cv_pf - c0) * (cv_pf - c1) <= 0.0) {
            return volts[i - 1] + (volts[i] - volts[i - 1]) * (cv_pf - c0) / (c1 - c0);
        }
    }
    return cv_pf <= lo ? (cap_pf.front() < cap_pf.back() ? volts.front() : volts.back())
                       : (cap_pf.front() < cap_pf.back() ? volts.back() : volts.front());
}

void CouplerMeshSpec::validate() const {
    if (port_count < 2 || port_count % 2 != 0) {
        throw ConfigError("coupler mesh needs an even port count >= 2");
    }
    if (!(coupling > 0.0 && coupling < 1.0)) {
        throw ConfigError("coupling factor must lie in (0, 1)");
    }
}

DiffractionLayer synth_coupler_mesh(const CouplerMeshSpec& spec) {
    spec.validate();
    const auto n = static_cast<Eigen::Index>(spec.port_count);
    const double t = std::sqrt(1.0 - spec.coupling);
    const Complex jk(0.0, std::sqrt(spec.coupling));
    CMatrix m = CMatrix::Identity(n, n);
    for (std::size_t c = 0; c < spec.column_count; ++c) {
        // Apply the column in place: rows (p, p+1) mix.
        for (Eigen::Index p = (c % 2 == 0 ? 0 : 1); p + 1 < n; p += 2) {
            const Eigen::RowVectorXcd upper = m.row(p);
            const Eigen::RowVectorXcd lower = m.row(p + 1);
            m.row(p) = t * upper + jk * lower;
            m.row(p + 1) = jk * upper + t * lower;
        }
    }
    return DiffractionLayer{std::move(m), DiffractionSource::SynthesizedMesh, 0.0};
}

double spectral_norm(const CMatrix& m) {
    if (m.size() == 0) {
        return 0.0;
    }
    Eigen::JacobiSVD<CMatrix> svd(m);
    return svd.singularValues()(0);
}

DiffractionLayer load_calibration_matrix(const std::filesystem::path& path, double freq_hz) {
    const std::string name = path.string();
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open calibration file " + name);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(name, 1, "empty file");
    }
    const auto header = split_ws(line);
    if (header.size() < 2 || header[0] != "spnn-cal" || header[1] != "v1") {
        throw ParseError(name, 1, "expected header 'spnn-cal v1 ports=<N> freq_hz=<f>'");
    }
    const double ports_d = header_number(header, "ports", name);
    const double file_freq = header_number(header, "freq_hz", name);
    if (!(ports_d >= 1.0) || ports_d != std::floor(ports_d)) {
        throw ParseError(name, 1, "ports must be a positive integer");
    }
    if (freq_hz > 0.0 && std::abs(file_freq - freq_hz) > 1e-9 * freq_hz) {
        throw ValidationError(name + ": calibration measured at " + std::to_string(file_freq) +
                              " Hz, requested " + std::to_string(freq_hz) + " Hz");
    }
    const auto n = static_cast<Eigen::Index>(ports_d);
    CMatrix m = CMatrix::Zero(n, n);
    std::vector<char> seen(static_cast<std::size_t>(n * n), 0);
    std::size_t lineno = 1;
    std::size_t count = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto tok = split_ws(line);
        if (tok.empty() || tok[0][0] == '#') {
            continue;
        }
        if (tok.size() != 4) {
            throw ParseError(name, lineno, "expected 'row col re im'");
        }
        long row, col;
        double re, im;
        try {
            std::size_t used = 0;
            row = std::stol(tok[0], &used);
            if (used != tok[0].size()) throw std::invalid_argument("row");
            col = std::stol(tok[1], &used);
            if (used != tok[1].size()) throw std::invalid_argument("col");
            re = std::stod(tok[2]);
            im = std::stod(tok[3]);
        } catch (const std::exception&) {
            throw ParseError(name, lineno, "unparseable entry '" + line + "'");
        }
        if (row < 0 || col < 0 || row >= n || col >= n) {
            throw ParseError(name, lineno,
                             "entry (row " + tok[0] + ", col " + tok[1] + ") out of range");
        }
        auto& flag = seen[static_cast<std::size_t>(row * n + col)];
        if (flag) {
            throw ParseError(name, lineno, "duplicate entry (row " + tok[0] + ", col " + tok[1] + ")");
        }
        if (!std::isfinite(re) || !std::isfinite(im)) {
            throw ParseError(name, lineno, "non-finite entry");
        }
        flag = 1;
        m(row, col) = Complex(re, im);
        ++count;
    }
    if (count != seen.size()) {
        for (std::size_t i = 0; i < seen.size(); ++i) {
            if (!seen[i]) {
                throw ParseError(name, lineno, "missing entry (row " + std::to_string(i / n) +
                                                   ", col " + std::to_string(i % n) + ")");
            }
        }
    }
    const double norm = spectral_norm(m);
    if (norm > 1.0 + kPassivityTolerance) {
        throw ValidationError(name + ": spectral norm " + std::to_string(norm) +
                              " exceeds the passive-device limit " +
                              std::to_string(1.0 + kPassivityTolerance));
    }
    return DiffractionLayer{std::move(m), DiffractionSource::MeasuredCalibration, file_freq};
}

void save_calibration_matrix(const std::filesystem::path& path, const CMatrix& matrix, double freq_hz) {
    if (matrix.rows() != matrix.cols()) {
        throw ConfigError("calibration matrix must be square");
    }
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write " + path.string());
    }
    out << "spnn-cal v1 ports=" << matrix.rows() << " freq_hz=" << fmt17(freq_hz) << "\n";
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
        for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
            out << r << ' ' << c << ' ' << fmt17(matrix(r, c).real()) << ' '
                << fmt17(matrix(r, c).imag()) << '\n';
        }
    }
}

CodebookFile export_phase_settings(const std::vector<std::vector<RVector>>& phases,
                                   const PhaseShifterParams& device, double freq_hz,
                                   const VaractorCurve* curve) {
    CodebookFile file;
    file.beams = phases.size();
    file.layers = phases.empty() ? 0 : phases.front().size();
    file.ports = (file.layers == 0) ? 0 : static_cast<std::size_t>(phases.front().front().size());
    file.freq_hz = freq_hz;
    file.cv_min_pf = device.cv_min_pf;
    file.cv_max_pf = device.cv_max_pf;
    const double span = max_phase_range(device, freq_hz);

    for (std::size_t b = 0; b < phases.size(); ++b) {
        if (phases[b].size() != file.layers) {
            throw ConfigError("beam " + std::to_string(b) + " has a different phase-layer count");
        }
        std::vector<double> offsets;
        for (std::size_t l = 0; l < file.layers; ++l) {
            const RVector& layer = phases[b][l];
            if (static_cast<std::size_t>(layer.size()) != file.ports) {
                throw ConfigError("beam " + std::to_string(b) + " layer " + std::to_string(l) +
                                  " has the wrong port count");
            }
            // Reference the layer just after its largest circular gap, so the
            // unrealizable arc falls inside that gap whenever possible.
            std::vector<double> sorted(file.ports);
            for (std::size_t i = 0; i < file.ports; ++i) {
                sorted[i] = wrap_phase(layer[static_cast<Eigen::Index>(i)]);
            }
            std::sort(sorted.begin(), sorted.end());
            double best_gap = sorted.front() + kTwoPi - sorted.back();
            double offset = sorted.front();
            for (std::size_t i = 1; i < sorted.size(); ++i) {
                const double gap = sorted[i] - sorted[i - 1];
                if (gap > best_gap) {
                    best_gap = gap;
                    offset = sorted[i];
                }
            }
            offsets.push_back(offset);
            for (std::size_t i = 0; i < file.ports; ++i) {
                const double phase = wrap_phase(layer[static_cast<Eigen::Index>(i)]);
                double shift = wrap_phase(phase - offset);
                if (shift > span) {
                    shift = (shift - span < kTwoPi - shift) ? span : 0.0;
                    ++file.clipped;
                }
                CodebookRow row;
                row.beam = b;
                row.index = l * file.ports + i;
                row.phase_rad = phase;
                row.cv_pf = shift_to_capacitance(device, shift, freq_hz);
                if (curve != nullptr) {
                    row.bias_v = curve->voltage_for(row.cv_pf);
                }
                file.rows.push_back(row);
            }
        }
        file.offsets.push_back(std::move(offsets));
    }
    return file;
}

std::vector<std::vector<RVector>> decode_phase_settings(const CodebookFile& file,
                                                        const PhaseShifterParams& device) {
    std::vector<std::vector<RVector>> out(
        file.beams, std::vector<RVector>(file.layers, RVector::Zero(static_cast<Eigen::Index>(file.ports))));
    PhaseShifterParams p = device;
    p.cv_min_pf = file.cv_min_pf;
    p.cv_max_pf = file.cv_max_pf;
    for (const auto& row : file.rows) {
        const std::size_t layer = row.index / file.ports;
        const std::size_t port = row.index % file.ports;
        const double shift = capacitance_to_shift(p, row.cv_pf, file.freq_hz);
        out[row.beam][layer][static_cast<Eigen::Index>(port)] =
            wrap_phase(file.offsets[row.beam][layer] + shift);
    }
    return out;
}

void write_codebook_file(const std::filesystem::path& path, const CodebookFile& file) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write " + path.string());
    }
    out << "spnn-codebook v1 beams=" << file.beams << " layers=" << file.layers
        << " ports=" << file.ports << " freq_hz=" << fmt17(file.freq_hz)
        << " cv_min_pf=" << fmt17(file.cv_min_pf) << " cv_max_pf=" << fmt17(file.cv_max_pf) << "\n";
    for (std::size_t b = 0; b < file.offsets.size(); ++b) {
        for (std::size_t l = 0; l < file.offsets[b].size(); ++l) {
            out << "offset " << b << ' ' << l << ' ' << fmt17(file.offsets[b][l]) << '\n';
        }
    }
    for (const auto& r : file.rows) {
        out << r.beam << ' ' << r.index << ' ' << fmt17(r.phase_rad) << ' ' << fmt17(r.cv_pf);
        if (r.bias_v) {
            out << ' ' << fmt17(*r.bias_v);
        }
        out << '\n';
    }
}

CodebookFile read_codebook_file(const std::filesystem::path& path) {
    const std::string name = path.string();
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open codebook file " + name);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(name, 1, "empty file");
    }
    const auto header = split_ws(line);
    if (header.size() < 2 || header[0] != "spnn-codebook" || header[1] != "v1") {
        throw ParseError(name, 1, "expected 'spnn-codebook v1 ...' header");
    }
    CodebookFile file;
    file.beams = static_cast<std::size_t>(header_number(header, "beams", name));
    file.layers = static_cast<std::size_t>(header_number(header, "layers", name));
    file.ports = static_cast<std::size_t>(header_number(header, "ports", name));
    file.freq_hz = header_number(header, "freq_hz", name);
    file.cv_min_pf = header_number(header, "cv_min_pf", name);
    file.cv_max_pf = header_number(header, "cv_max_pf", name);
    file.offsets.assign(file.beams, std::vector<double>(file.layers, 0.0));
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const auto tok = split_ws(line);
        if (tok.empty()) {
            continue;
        }
        try {
            if (tok[0] == "offset") {
                if (tok.size() != 4) {
                    throw ParseError(name, lineno, "expected 'offset beam layer rad'");
                }
                const auto b = std::stoul(tok[1]);
                const auto l = std::stoul(tok[2]);
                if (b >= file.beams || l >= file.layers) {
                    throw ParseError(name, lineno, "offset index out of range");
                }
                file.offsets[b][l] = std::stod(tok[3]);
                continue;
            }
            if (tok.size() != 4 && tok.size() != 5) {
                throw ParseError(name, lineno, "expected 'beam port phase_rad cv_pf [bias_v]'");
            }
            CodebookRow r;
            r.beam = std::stoul(tok[0]);
            r.index = std::stoul(tok[1]);
            r.phase_rad = std::stod(tok[2]);
            r.cv_pf = std::stod(tok[3]);
            if (tok.size() == 5) {
                r.bias_v = std::stod(tok[4]);
            }
            if (r.beam >= file.beams || r.index >= file.layers * file.ports) {
                throw ParseError(name, lineno, "beam or port index out of range");
            }
            file.rows.push_back(r);
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception&) {
            throw ParseError(name, lineno, "unparseable line '" + line + "'");
        }
    }
    if (file.rows.size() != file.beams * file.layers * file.ports) {
        throw ParseError(name, lineno, "expected " + std::to_string(file.beams * file.layers * file.ports) +
                                           " rows, found " + std::to_string(file.rows.size()));
    }
    return file;
}

}  // namespace spnn
