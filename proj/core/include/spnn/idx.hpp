#pragma once

// Big-endian IDX files (MNIST layout): unsigned-byte images and labels.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "spnn/netcore.hpp"

namespace spnn {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct IdxImages {
    std::size_t count = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> pixels;  ///< count * rows * cols, row-major

    /// Pixels scaled to [0, 1].
    RMatrix image(std::size_t index) const;
};

IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);

void write_idx_images(const std::filesystem::path& path, const IdxImages& images);
void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels);

}  // namespace spnn
