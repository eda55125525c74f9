#pragma once

#include <filesystem>
#include <string>

#include "spnn/netcore.hpp"

namespace spnn {

/// Network files are JSON documents:
///
///   {"format": "spnn-network", "version": 1, "port_count": N,
///    "input_ports": [...], "detector_ports": [...],
///    "layers": [{"type": "diffraction", "source": "synthesized_mesh" | "measured_calibration",
///                "provenance_frequency_hz": f, "matrix": [[re, im], ...]},   // N*N, row-major
///               {"type": "phase", "phases_rad": [...], "phase_max_rad": p,
///                "amplitude_table": {"phases_rad": [...], "amplitudes": [...]}}]}
///
/// `input_ports` lists active ports (omitted when all are active); ports are 0-based.
inline constexpr int kNetworkFormatVersion = 1;

std::string network_to_text(const NetworkSpec& net);
NetworkSpec network_from_text(const std::string& text, const std::string& origin = "<memory>");

void save_network(const NetworkSpec& net, const std::filesystem::path& path);
NetworkSpec load_network(const std::filesystem::path& path);

}  // namespace spnn
