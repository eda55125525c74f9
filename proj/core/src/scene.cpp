#include "spnn/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "spnn/errors.hpp"
#include "spnn/random.hpp"
#include "spnn/train.hpp"

namespace spnn {

namespace {

constexpr double kReferenceRangeM = 10.0;
constexpr double kPersonRcsM2 = 0.5;
constexpr double kPersonExtentM = 0.5;
constexpr std::size_t kPersonScatterers = 3;
constexpr double kVehicleRcsM2 = 10.0;
constexpr double kVehicleLengthM = 4.0;
constexpr double kVehicleWidthM = 1.8;
constexpr std::size_t kVehicleScatterers = 8;

struct Sector {
    double lo_deg;
    double hi_deg;
};

Sector region_sector(Region r) {
    switch (r) {
        case Region::Left:
            return {-52.0, -18.0};
        case Region::Right:
            return {18.0, 52.0};
        case Region::Center:
            break;
    }
    return {-12.0, 12.0};
}

double object_angle_deg(Region region, double jitter_deg, Rng& rng) {
    if (jitter_deg < 0.0) {
        const Sector sec = region_sector(region);
        return rng.uniform(sec.lo_deg, sec.hi_deg);
    }
    const auto beams = region_beam_indices(region);
    const std::size_t b = beams[rng.uniform_index(beams.size())];
    const double scan = -50.0 + 10.0 * static_cast<double>(b);
    return scan + rng.uniform(-jitter_deg, jitter_deg);
}

void add_object(std::vector<Scatterer>& out, SceneClass cls, Region region, const RoadSceneConfig& cfg, Rng& rng) {
    if (cls == SceneClass::Empty) {
        return;
    }
    const double theta = object_angle_deg(region, cfg.angle_jitter_deg, rng) * std::numbers::pi / 180.0;
    const double range = rng.uniform(cfg.range_min_m, cfg.range_max_m);
    const double cx = range * std::sin(theta);
    const double cy = range * std::cos(theta);
    if (cls == SceneClass::Person) {
        for (std::size_t i = 0; i < kPersonScatterers; ++i) {
            out.push_back({cx + rng.uniform(-0.5, 0.5) * kPersonExtentM, cy + rng.uniform(-0.5, 0.5) * kPersonExtentM,
                           kPersonRcsM2 / static_cast<double>(kPersonScatterers)});
        }
        return;
    }
    for (std::size_t i = 0; i < kVehicleScatterers; ++i) {
        out.push_back({cx + rng.uniform(-0.5, 0.5) * kVehicleWidthM, cy + rng.uniform(-0.5, 0.5) * kVehicleLengthM,
                       kVehicleRcsM2 / static_cast<double>(kVehicleScatterers)});
    }
}

}  // namespace

std::vector<AntennaPosition> default_rx_antennas(double frequency_hz) {
    const double half = kSpeedOfLight / frequency_hz / 2.0;
    std::vector<AntennaPosition> a;
    for (int i = 0; i < 8; ++i) {
        a.push_back({(i - 3.5) * half, 0.0});
    }
    for (const double side : {-0.9, 0.9}) {
        a.push_back({side, -half / 2.0});
        a.push_back({side, half / 2.0});
    }
    return a;
}

void SceneConfig::validate() const {
    if (rx_antennas.empty()) {
        throw ConfigError("scene has no receive antennas");
    }
    if (frequencies_hz.empty()) {
        throw ConfigError("scene has no frequencies");
    }
    for (const double f : frequencies_hz) {
        if (!(f > 0.0)) {
            throw ConfigError("scene frequencies must be positive");
        }
    }
    if (std::isnan(snr_db)) {
        throw ConfigError("scene snr_db is NaN");
    }
    for (std::size_t i = 0; i < scatterers.size(); ++i) {
        const auto& s = scatterers[i];
        if (!(s.rcs_m2 >= 0.0) || !std::isfinite(s.x_m) || !std::isfinite(s.y_m)) {
            throw ConfigError("scatterer " + std::to_string(i) + " has an invalid position or cross-section");
        }
        if (std::hypot(s.x_m, s.y_m) == 0.0) {
            throw ValidationError("scatterer " + std::to_string(i) + " sits at zero range from the transmitter");
        }
        for (std::size_t n = 0; n < rx_antennas.size(); ++n) {
            if (std::hypot(s.x_m - rx_antennas[n].x_m, s.y_m - rx_antennas[n].y_m) == 0.0) {
                throw ValidationError("scatterer " + std::to_string(i) + " sits at zero range from antenna " +
                                      std::to_string(n));
            }
        }
    }
}

Complex TxBeams::gain(std::size_t beam, double theta_deg) const {
    const CVector& y = apertures.at(beam);
    const double norm = std::sqrt(static_cast<double>(y.size())) * y.norm();
    if (norm == 0.0) {
        return 0.0;
    }
    return far_field_amplitude(geometry, y, theta_deg) / norm;
}

TxBeams tx_beams_from_codebook(const NetworkSpec& net, const PhaseCodebook& codebook, const CVector& excitation,
                               const ArrayGeometry& geometry) {
    TxBeams out;
    out.geometry = geometry;
    for (std::size_t i = 0; i < codebook.entries.size(); ++i) {
        const NetworkSpec configured = codebook.configure(net, i);
        out.angles_deg.push_back(codebook.entries[i].target_angle_deg);
        out.apertures.push_back(propagate(configured, CMatrix(excitation)).col(0));
    }
    return out;
}

TxBeams steered_tx_beams(const ArrayGeometry& geometry, const std::vector<double>& angles_deg) {
    geometry.validate();
    TxBeams out;
    out.geometry = geometry;
    const double k = 2.0 * std::numbers::pi * geometry.spacing_m / geometry.wavelength_m;
    for (const double a : angles_deg) {
        CVector y(static_cast<Eigen::Index>(geometry.element_count));
        for (Eigen::Index n = 0; n < y.size(); ++n) {
            y[n] = std::polar(1.0, k * static_cast<double>(n) * std::sin(a * std::numbers::pi / 180.0));
        }
        out.angles_deg.push_back(a);
        out.apertures.push_back(y);
    }
    return out;
}

TxBeams select_beams(const TxBeams& beams, const std::vector<std::size_t>& indices) {
    TxBeams out;
    out.geometry = beams.geometry;
    for (const auto i : indices) {
        out.angles_deg.push_back(beams.angles_deg.at(i));
        out.apertures.push_back(beams.apertures.at(i));
    }
    return out;
}

void SceneSampleTensor::validate() const {
    if (data.size() != beams * antennas * freqs) {
        throw ValidationError("scene tensor payload does not match its dimensions");
    }
    for (const auto& v : data) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
            throw NumericalError("scene tensor has a non-finite entry");
        }
    }
}

SceneSampleTensor synth_echo_scene(const SceneConfig& cfg, const TxBeams& beams) {
    cfg.validate();
    if (beams.size() == 0) {
        throw ConfigError("scene synthesis needs at least one transmit beam");
    }
    SceneSampleTensor t;
    t.beams = beams.size();
    t.antennas = cfg.rx_antennas.size();
    t.freqs = cfg.frequencies_hz.size();
    t.data.assign(t.beams * t.antennas * t.freqs, Complex(0.0, 0.0));

    for (const auto& s : cfg.scatterers) {
        const double r_tx = std::hypot(s.x_m, s.y_m);
        const double theta_deg = std::atan2(s.x_m, s.y_m) * 180.0 / std::numbers::pi;
        const double amp = std::sqrt(s.rcs_m2);
        for (std::size_t b = 0; b < t.beams; ++b) {
            const Complex g = beams.gain(b, theta_deg);
            for (std::size_t n = 0; n < t.antennas; ++n) {
                const double r_rx = std::hypot(s.x_m - cfg.rx_antennas[n].x_m, s.y_m - cfg.rx_antennas[n].y_m);
                const double path = r_tx + r_rx;
                for (std::size_t f = 0; f < t.freqs; ++f) {
                    const double phase = -2.0 * std::numbers::pi * cfg.frequencies_hz[f] * path / kSpeedOfLight;
                    t.at(b, n, f) += amp * g * std::polar(1.0 / (r_tx * r_rx), phase);
                }
            }
        }
    }
    if (std::isfinite(cfg.snr_db)) {
        const double reference = 1.0 / (kReferenceRangeM * kReferenceRangeM);
        const double sigma = reference / std::pow(10.0, cfg.snr_db / 20.0) / std::sqrt(2.0);
        Rng rng(cfg.seed);
        for (auto& v : t.data) {
            v += Complex(rng.normal() * sigma, rng.normal() * sigma);
        }
    }
    return t;
}

std::string scene_class_name(SceneClass c) {
    switch (c) {
        case SceneClass::Empty:
            return "empty";
        case SceneClass::Person:
            return "person";
        case SceneClass::Vehicle:
            return "vehicle";
    }
    return "empty";
}

std::vector<SceneClass> region_classes(Region region) {
    switch (region) {
        case Region::Left:
            return {SceneClass::Vehicle, SceneClass::Empty};
        case Region::Right:
            return {SceneClass::Person, SceneClass::Empty};
        case Region::Center:
            break;
    }
    return {SceneClass::Person, SceneClass::Vehicle, SceneClass::Empty};
}

std::vector<std::size_t> region_beam_indices(Region region) {
    switch (region) {
        case Region::Left:
            return {0, 1, 2, 3};
        case Region::Right:
            return {7, 8, 9, 10};
        case Region::Center:
            break;
    }
    return {4, 5, 6};
}

void RoadSceneConfig::validate() const {
    if (samples_per_class == 0) {
        throw ConfigError("road scenes need samples_per_class >= 1");
    }
    if (!(range_min_m > 0.0) || !(range_max_m > range_min_m)) {
        throw ConfigError("road scenes need 0 < range_min_m < range_max_m");
    }
    if (!(distractor_probability >= 0.0 && distractor_probability <= 1.0)) {
        throw ConfigError("distractor_probability must lie in [0, 1]");
    }
    if (std::isnan(snr_db)) {
        throw ConfigError("road scene snr_db is NaN");
    }
}

std::vector<RoadScene> generate_road_scenes(Region region, const RoadSceneConfig& cfg) {
    cfg.validate();
    const auto classes = region_classes(region);
    std::vector<RoadScene> out;
    out.reserve(classes.size() * cfg.samples_per_class);
    std::size_t index = 0;
    for (std::size_t k = 0; k < cfg.samples_per_class; ++k) {
        for (std::size_t label = 0; label < classes.size(); ++label, ++index) {
            Rng rng(derive_seed(cfg.seed, index));
            RoadScene scene;
            scene.region = region;
            scene.label = label;
            scene.config.snr_db = cfg.snr_db;
            scene.config.seed = derive_seed(cfg.seed ^ 0x5eedULL, index);
            add_object(scene.config.scatterers, classes[label], region, cfg, rng);
            for (const Region other : {Region::Left, Region::Center, Region::Right}) {
                if (other == region) {
                    continue;
                }
                if (rng.uniform() < cfg.distractor_probability) {
                    const SceneClass cls = rng.uniform() < 0.5 ? SceneClass::Person : SceneClass::Vehicle;
                    add_object(scene.config.scatterers, cls, other, cfg, rng);
                }
            }
            out.push_back(std::move(scene));
        }
    }
    return out;
}

std::vector<SceneSampleTensor> render_road_scenes(const std::vector<RoadScene>& scenes, const TxBeams& beams) {
    std::vector<SceneSampleTensor> out;
    out.reserve(scenes.size());
    for (const auto& s : scenes) {
        SceneSampleTensor t = synth_echo_scene(s.config, beams);
        t.label = s.label;
        t.region = s.region;
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<Sample> assemble_road_samples(const std::vector<SceneSampleTensor>& tensors, Region region,
                                          std::size_t port_count, std::size_t first_port) {
    std::vector<std::size_t> beams;
    if (!tensors.empty() && tensors.front().beams == 11) {
        beams = region_beam_indices(region);
    } else if (!tensors.empty()) {
        for (std::size_t b = 0; b < tensors.front().beams; ++b) {
            beams.push_back(b);
        }
    }
    return assemble_road_subset(tensors, region, beams, {}, port_count, first_port);
}

std::vector<Sample> assemble_road_subset(const std::vector<SceneSampleTensor>& tensors, Region region,
                                          const std::vector<std::size_t>& beam_indices,
                                          const std::vector<std::size_t>& antenna_indices, std::size_t port_count,
                                          std::size_t first_port) {
    const std::size_t classes = region_classes(region).size();
    if (beam_indices.empty()) {
        throw ConfigError("road samples need at least one beam");
    }
    std::vector<Sample> out;
    out.reserve(tensors.size());
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        const auto& t = tensors[i];
        t.validate();
        if (t.label >= classes) {
            throw ValidationError("scene " + std::to_string(i) + " label " + std::to_string(t.label) +
                                  " is not a " + region_name(region) + " class");
        }
        if (first_port + t.antennas > port_count) {
            throw ConfigError("receive antennas do not fit on the board ports");
        }
        Sample s;
        s.freq_count = t.freqs;
        s.slot_count = beam_indices.size();
        s.label = t.label;
        s.inputs = CMatrix::Zero(static_cast<Eigen::Index>(port_count), static_cast<Eigen::Index>(s.columns()));
        for (std::size_t slot = 0; slot < beam_indices.size(); ++slot) {
            const std::size_t b = beam_indices[slot];
            if (b >= t.beams) {
                throw ConfigError("beam index " + std::to_string(b) + " out of range");
            }
            for (std::size_t n = 0; n < t.antennas; ++n) {
                const bool used = antenna_indices.empty() ||
                                  std::find(antenna_indices.begin(), antenna_indices.end(), n) != antenna_indices.end();
                if (!used) {
                    continue;
                }
                for (std::size_t f = 0; f < t.freqs; ++f) {
                    s.inputs(static_cast<Eigen::Index>(first_port + n), static_cast<Eigen::Index>(slot * t.freqs + f)) =
                        t.at(b, n, f);
                }
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

void write_scene_file(const std::filesystem::path& path, const std::vector<SceneSampleTensor>& tensors,
                      const std::vector<double>& frequencies_hz, std::uint64_t seed) {
    if (tensors.empty()) {
        throw ValidationError("no scene tensors to write");
    }
    const auto& first = tensors.front();
    if (frequencies_hz.size() != first.freqs) {
        throw ValidationError("frequency list does not match the tensors");
    }
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write " + path.string());
    }
    out << "spnn-scenes v1 count=" << tensors.size() << " beams=" << first.beams << " antennas=" << first.antennas
        << " freqs=" << first.freqs << " region=" << region_name(first.region) << " seed=" << seed << '\n';
    char buf[64];
    out << "freqs_hz";
    for (const double f : frequencies_hz) {
        std::snprintf(buf, sizeof buf, " %.17g", f);
        out << buf;
    }
    out << '\n';
    for (const auto& t : tensors) {
        if (t.beams != first.beams || t.antennas != first.antennas || t.freqs != first.freqs ||
            t.region != first.region) {
            throw ValidationError("scene tensors in one file must share dimensions and region");
        }
        out << "sample " << t.label << '\n';
        for (std::size_t b = 0; b < t.beams; ++b) {
            for (std::size_t n = 0; n < t.antennas; ++n) {
                for (std::size_t f = 0; f < t.freqs; ++f) {
                    const Complex v = t.at(b, n, f);
                    std::snprintf(buf, sizeof buf, "%s%.17g %.17g", f == 0 ? "" : " ", v.real(), v.imag());
                    out << buf;
                }
                out << '\n';
            }
        }
    }
    if (!out) {
        throw ValidationError("write failed for " + path.string());
    }
}

namespace {

std::string header_field(const std::string& token, const std::string& key, const std::string& path) {
    if (token.rfind(key + "=", 0) != 0) {
        throw ParseError(path, 1, "expected header field '" + key + "='");
    }
    return token.substr(key.size() + 1);
}

std::size_t to_count(const std::string& s, const std::string& path, std::size_t line) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) {
            throw std::invalid_argument(s);
        }
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ParseError(path, line, "bad integer '" + s + "'");
    }
}

}  // namespace

SceneFile read_scene_file(const std::filesystem::path& path) {
    const std::string p = path.string();
    std::ifstream in(path);
    if (!in) {
        throw ParseError(p, 0, "cannot open scene file");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(p, 1, "missing header");
    }
    std::istringstream hs(line);
    std::vector<std::string> tok;
    for (std::string t; hs >> t;) {
        tok.push_back(t);
    }
    if (tok.size() != 8 || tok[0] != "spnn-scenes" || tok[1] != "v1") {
        throw ParseError(p, 1, "expected 'spnn-scenes v1 count= beams= antennas= freqs= region= seed='");
    }
    const std::size_t count = to_count(header_field(tok[2], "count", p), p, 1);
    const std::size_t beams = to_count(header_field(tok[3], "beams", p), p, 1);
    const std::size_t antennas = to_count(header_field(tok[4], "antennas", p), p, 1);
    const std::size_t freqs = to_count(header_field(tok[5], "freqs", p), p, 1);
    Region region = Region::Center;
    try {
        region = parse_region(header_field(tok[6], "region", p));
    } catch (const ConfigError& e) {
        throw ParseError(p, 1, e.what());
    }
    SceneFile file;
    file.seed = to_count(header_field(tok[7], "seed", p), p, 1);

    std::size_t lineno = 2;
    if (!std::getline(in, line)) {
        throw ParseError(p, lineno, "missing freqs_hz line");
    }
    {
        std::istringstream fs(line);
        std::string key;
        fs >> key;
        if (key != "freqs_hz") {
            throw ParseError(p, lineno, "expected freqs_hz");
        }
        for (double f = 0.0; fs >> f;) {
            file.frequencies_hz.push_back(f);
        }
        if (file.frequencies_hz.size() != freqs) {
            throw ParseError(p, lineno, "freqs_hz lists " + std::to_string(file.frequencies_hz.size()) +
                                            " values, header says " + std::to_string(freqs));
        }
    }
    for (std::size_t i = 0; i < count; ++i) {
        ++lineno;
        if (!std::getline(in, line)) {
            throw ParseError(p, lineno, "file ends before sample " + std::to_string(i));
        }
        std::istringstream ss(line);
        std::string key;
        std::string label;
        ss >> key >> label;
        if (key != "sample") {
            throw ParseError(p, lineno, "expected 'sample <label>'");
        }
        SceneSampleTensor t;
        t.beams = beams;
        t.antennas = antennas;
        t.freqs = freqs;
        t.region = region;
        t.label = to_count(label, p, lineno);
        t.data.resize(beams * antennas * freqs);
        for (std::size_t r = 0; r < beams * antennas; ++r) {
            ++lineno;
            if (!std::getline(in, line)) {
                throw ParseError(p, lineno, "truncated sample payload");
            }
            std::istringstream ls(line);
            for (std::size_t f = 0; f < freqs; ++f) {
                double re = 0.0;
                double im = 0.0;
                if (!(ls >> re >> im)) {
                    throw ParseError(p, lineno, "expected " + std::to_string(freqs) + " complex values");
                }
                t.data[r * freqs + f] = Complex(re, im);
            }
            std::string extra;
            if (ls >> extra) {
                throw ParseError(p, lineno, "trailing values");
            }
        }
        file.tensors.push_back(std::move(t));
    }
    return file;
}

}  // namespace spnn
