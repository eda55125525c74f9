#include "spnn/network_io.hpp"

#include <fstream>
#include <sstream>

#include "json_detail.hpp"
#include "spnn/errors.hpp"

namespace spnn {

namespace detail {

namespace {

const char* source_name(DiffractionSource s) {
    return s == DiffractionSource::SynthesizedMesh ? "synthesized_mesh" : "measured_calibration";
}

DiffractionSource parse_source(const std::string& s, const std::string& origin) {
    if (s == "synthesized_mesh") {
        return DiffractionSource::SynthesizedMesh;
    }
    if (s == "measured_calibration") {
        return DiffractionSource::MeasuredCalibration;
    }
    throw ParseError(origin + ": unknown diffraction source '" + s + "'");
}

}  // namespace

json real_vector_to_json(const RVector& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

RVector real_vector_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) {
        throw ParseError(what + ": expected an array of numbers");
    }
    RVector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) {
            throw ParseError(what + "[" + std::to_string(i) + "]: expected a number");
        }
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

json real_matrix_to_json(const RMatrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        rows.push_back(real_vector_to_json(m.row(r).transpose()));
    }
    return rows;
}

RMatrix real_matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) {
        throw ParseError(what + ": expected an array of rows");
    }
    if (j.empty()) {
        return RMatrix(0, 0);
    }
    const auto cols = j[0].size();
    RMatrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        const RVector row = real_vector_from_json(j[r], what + "[" + std::to_string(r) + "]");
        if (static_cast<std::size_t>(row.size()) != cols) {
            throw ParseError(what + ": ragged matrix at row " + std::to_string(r));
        }
        m.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return m;
}

json network_to_json(const NetworkSpec& net) {
    json j;
    j["format"] = "spnn-network";
    j["version"] = kNetworkFormatVersion;
    j["port_count"] = net.port_count;
    if (!net.input_port_mask.empty()) {
        std::vector<std::size_t> active;
        for (std::size_t p = 0; p < net.input_port_mask.size(); ++p) {
            if (net.input_port_mask[p]) {
                active.push_back(p);
            }
        }
        j["input_ports"] = active;
    }
    j["detector_ports"] = net.detector_ports;
    json layers = json::array();
    for (const auto& layer : net.layers) {
        json l;
        if (const auto* d = std::get_if<DiffractionLayer>(&layer)) {
            l["type"] = "diffraction";
            l["source"] = source_name(d->source);
            l["provenance_frequency_hz"] = d->provenance_frequency_hz;
            json entries = json::array();
            for (Eigen::Index r = 0; r < d->matrix.rows(); ++r) {
                for (Eigen::Index c = 0; c < d->matrix.cols(); ++c) {
                    entries.push_back({d->matrix(r, c).real(), d->matrix(r, c).imag()});
                }
            }
            l["matrix"] = std::move(entries);
        } else {
            const auto& p = std::get<PhaseLayer>(layer);
            l["type"] = "phase";
            l["phases_rad"] = real_vector_to_json(p.phases);
            l["phase_max_rad"] = p.phase_max_rad;
            if (p.amplitude_table) {
                l["amplitude_table"] = {{"phases_rad", p.amplitude_table->phases_rad},
                                        {"amplitudes", p.amplitude_table->amplitudes}};
            }
        }
        layers.push_back(std::move(l));
    }
    j["layers"] = std::move(layers);
    return j;
}

NetworkSpec network_from_json(const json& j, const std::string& origin) {
    try {
        if (j.value("format", "") != "spnn-network") {
            throw ParseError(origin + ": not an spnn-network document");
        }
        if (j.at("version").get<int>() != kNetworkFormatVersion) {
            throw ParseError(origin + ": unsupported network version " + j.at("version").dump());
        }
        NetworkSpec net;
        net.port_count = j.at("port_count").get<std::size_t>();
        if (j.contains("input_ports")) {
            net.input_port_mask.assign(net.port_count, false);
            for (const auto p : j.at("input_ports").get<std::vector<std::size_t>>()) {
                if (p >= net.port_count) {
                    throw ParseError(origin + ": input port " + std::to_string(p) + " out of range");
                }
                net.input_port_mask[p] = true;
            }
        }
        net.detector_ports = j.at("detector_ports").get<std::vector<std::size_t>>();
        const auto& layers = j.at("layers");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const auto& l = layers[i];
            const std::string where = origin + ": layers[" + std::to_string(i) + "]";
            const auto type = l.at("type").get<std::string>();
            if (type == "diffraction") {
                DiffractionLayer d;
                d.source = parse_source(l.at("source").get<std::string>(), where);
                d.provenance_frequency_hz = l.value("provenance_frequency_hz", 0.0);
                const auto& entries = l.at("matrix");
                const auto n = static_cast<Eigen::Index>(net.port_count);
                if (entries.size() != net.port_count * net.port_count) {
                    throw ParseError(where + ": matrix has " + std::to_string(entries.size()) +
                                     " entries, expected " +
                                     std::to_string(net.port_count * net.port_count));
                }
                d.matrix.resize(n, n);
                for (Eigen::Index r = 0; r < n; ++r) {
                    for (Eigen::Index c = 0; c < n; ++c) {
                        const auto& e = entries[static_cast<std::size_t>(r * n + c)];
                        d.matrix(r, c) = Complex(e.at(0).get<double>(), e.at(1).get<double>());
                    }
                }
                net.layers.emplace_back(std::move(d));
            } else if (type == "phase") {
                PhaseLayer p;
                p.phases = real_vector_from_json(l.at("phases_rad"), where + ".phases_rad");
                p.phase_max_rad = l.value("phase_max_rad", kDefaultPhaseMaxRad);
                if (l.contains("amplitude_table")) {
                    PhaseAmplitudeTable t;
                    t.phases_rad = l["amplitude_table"].at("phases_rad").get<std::vector<double>>();
                    t.amplitudes = l["amplitude_table"].at("amplitudes").get<std::vector<double>>();
                    p.amplitude_table = std::move(t);
                }
                net.layers.emplace_back(std::move(p));
            } else {
                throw ParseError(where + ": unknown layer type '" + type + "'");
            }
        }
        net.validate();
        return net;
    } catch (const json::exception& e) {
        throw ParseError(origin + ": " + e.what());
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot write " + path);
    }
    out << text;
    if (!out) {
        throw ValidationError("write failed for " + path);
    }
}

}  // namespace detail

std::string network_to_text(const NetworkSpec& net) {
    return detail::network_to_json(net).dump(1);
}

NetworkSpec network_from_text(const std::string& text, const std::string& origin) {
    detail::json j;
    try {
        j = detail::json::parse(text);
    } catch (const detail::json::parse_error& e) {
        throw ParseError(origin + ": " + e.what());
    }
    return detail::network_from_json(j, origin);
}

void save_network(const NetworkSpec& net, const std::filesystem::path& path) {
    detail::write_text_file(path.string(), network_to_text(net));
}

NetworkSpec load_network(const std::filesystem::path& path) {
    return network_from_text(detail::read_text_file(path.string()), path.string());
}

}  // namespace spnn
