#include "spnn/checkpoint.hpp"

#include "json_detail.hpp"
#include "spnn/errors.hpp"

namespace spnn {

using detail::json;

namespace {

json readout_to_json(const Readout& r) {
    if (const auto* head = std::get_if<LinearHead>(&r)) {
        return {{"type", "linear"},
                {"weight", detail::real_matrix_to_json(head->weight)},
                {"bias", detail::real_vector_to_json(head->bias)}};
    }
    const auto& p = std::get<PortEnergyReadout>(r);
    return {{"type", "port_energy"}, {"class_ports", p.class_ports}, {"temperature", p.temperature}};
}

Readout readout_from_json(const json& j, const std::string& where) {
    const auto type = j.at("type").get<std::string>();
    if (type == "linear") {
        LinearHead h;
        h.weight = detail::real_matrix_from_json(j.at("weight"), where + ".weight");
        h.bias = detail::real_vector_from_json(j.at("bias"), where + ".bias");
        return h;
    }
    if (type == "port_energy") {
        PortEnergyReadout p;
        p.class_ports = j.at("class_ports").get<std::vector<std::size_t>>();
        p.temperature = j.at("temperature").get<double>();
        return p;
    }
    throw ParseError(where + ": unknown readout type '" + type + "'");
}

}  // namespace

std::string checkpoint_to_text(const Checkpoint& ckpt) {
    json j;
    j["format"] = "spnn-checkpoint";
    j["version"] = kCheckpointFormatVersion;
    j["network"] = detail::network_to_json(ckpt.model.net);
    j["readout"] = readout_to_json(ckpt.model.readout);
    j["optimizer"] = {{"phase_velocity", detail::real_vector_to_json(ckpt.optimizer.phase_velocity)},
                      {"weight_velocity", detail::real_matrix_to_json(ckpt.optimizer.weight_velocity)},
                      {"bias_velocity", detail::real_vector_to_json(ckpt.optimizer.bias_velocity)}};
    json hist = json::array();
    for (const auto& m : ckpt.history) {
        hist.push_back({{"epoch", m.epoch},
                        {"train_loss", m.train_loss},
                        {"train_accuracy", m.train_accuracy},
                        {"validation_loss", m.validation_loss},
                        {"validation_accuracy", m.validation_accuracy}});
    }
    j["history"] = std::move(hist);
    j["metadata"] = ckpt.metadata;
    return j.dump(1);
}

Checkpoint checkpoint_from_text(const std::string& text, const std::string& origin) {
    try {
        const json j = json::parse(text);
        if (j.at("format").get<std::string>() != "spnn-checkpoint") {
            throw ParseError(origin + ": not an spnn checkpoint");
        }
        const int version = j.at("version").get<int>();
        if (version != kCheckpointFormatVersion) {
            throw ParseError(origin + ": unsupported checkpoint version " + std::to_string(version));
        }
        Checkpoint c;
        c.model.net = detail::network_from_json(j.at("network"), origin + ": network");
        c.model.readout = readout_from_json(j.at("readout"), origin + ": readout");
        c.model.validate();
        const auto& opt = j.at("optimizer");
        c.optimizer.phase_velocity = detail::real_vector_from_json(opt.at("phase_velocity"), origin + ": phase_velocity");
        c.optimizer.weight_velocity =
            detail::real_matrix_from_json(opt.at("weight_velocity"), origin + ": weight_velocity");
        c.optimizer.bias_velocity = detail::real_vector_from_json(opt.at("bias_velocity"), origin + ": bias_velocity");
        for (const auto& m : j.at("history")) {
            c.history.push_back(EpochMetrics{m.at("epoch").get<std::size_t>(), m.at("train_loss").get<double>(),
                                             m.at("train_accuracy").get<double>(),
                                             m.at("validation_loss").get<double>(),
                                             m.at("validation_accuracy").get<double>()});
        }
        if (j.contains("metadata")) {
            c.metadata = j["metadata"].get<std::map<std::string, std::string>>();
        }
        return c;
    } catch (const json::exception& e) {
        throw ParseError(origin + ": " + e.what());
    }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    detail::write_text_file(path.string(), checkpoint_to_text(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return checkpoint_from_text(detail::read_text_file(path.string()), path.string());
}

}  // namespace spnn
