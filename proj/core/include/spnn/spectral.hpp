#pragma once

// 2-D DFT compression of small grayscale images into board inputs.

#include <string>
#include <utility>
#include <vector>

#include "spnn/idx.hpp"
#include "spnn/netcore.hpp"
#include "spnn/sample.hpp"

namespace spnn {

struct SpectralInputSpec {
    std::size_t rows = 28;
    std::size_t cols = 28;
    std::vector<std::pair<std::size_t, std::size_t>> bins;  ///< (u, v), kept in order
    std::string ordering = "wrapped-radius-lex";

    void validate() const;

    /// The `count` bins with the smallest wrapped radius
    /// sqrt(min(u, R-u)^2 + min(v, C-v)^2), ties broken by (u, v).
    static SpectralInputSpec closest_to_dc(std::size_t count = 32, std::size_t rows = 28, std::size_t cols = 28);
};

/// F(u, v) = sum_x sum_y I(x, y) exp(-j 2 pi (u x / R + v y / C)) at the kept bins. Linear in the image.
CVector spectral_bins(const RMatrix& image, const SpectralInputSpec& spec);

/// `spectral_bins` scaled to unit max modulus (an all-zero image stays zero).
CVector mnist_dft_compress(const RMatrix& image, const SpectralInputSpec& spec);

/// One single-frequency, single-slot sample per image whose label is below
/// `class_count`; at most `limit` samples when nonzero.
std::vector<Sample> build_image_samples(const IdxImages& images, const std::vector<std::uint8_t>& labels,
                                        std::size_t class_count, const SpectralInputSpec& spec,
                                        std::size_t limit = 0);

}  // namespace spnn
