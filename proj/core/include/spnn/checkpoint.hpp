#pragma once

// Training checkpoints: model, optimizer state, metrics history and free-form metadata.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "spnn/train.hpp"

namespace spnn {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
    Model model;
    SgdmState optimizer;
    std::vector<EpochMetrics> history;
    std::map<std::string, std::string> metadata;
};

std::string checkpoint_to_text(const Checkpoint& ckpt);
Checkpoint checkpoint_from_text(const std::string& text, const std::string& origin = "<memory>");

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace spnn
