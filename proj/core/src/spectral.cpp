#include "spnn/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <tuple>

#include "spnn/errors.hpp"

namespace spnn {

namespace {

CMatrix dft_matrix(std::size_t n) {
    CMatrix w(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t x = 0; x < n; ++x) {
            const std::size_t k = (u * x) % n;
            w(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(x)) =
                std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
        }
    }
    return w;
}

}  // namespace

void SpectralInputSpec::validate() const {
    if (rows == 0 || cols == 0) {
        throw ConfigError("spectral spec needs a positive image size");
    }
    if (bins.empty()) {
        throw ConfigError("spectral spec keeps no bins");
    }
    std::set<std::pair<std::size_t, std::size_t>> seen;
    bool has_dc = false;
    for (const auto& [u, v] : bins) {
        if (u >= rows || v >= cols) {
            throw ConfigError("spectral bin (" + std::to_string(u) + ", " + std::to_string(v) + ") out of range");
        }
        if (!seen.insert({u, v}).second) {
            throw ConfigError("spectral bin (" + std::to_string(u) + ", " + std::to_string(v) + ") repeated");
        }
        has_dc = has_dc || (u == 0 && v == 0);
    }
    if (!has_dc) {
        throw ConfigError("spectral spec must keep the DC bin");
    }
}

SpectralInputSpec SpectralInputSpec::closest_to_dc(std::size_t count, std::size_t rows, std::size_t cols) {
    if (count == 0 || count > rows * cols) {
        throw ConfigError("cannot keep " + std::to_string(count) + " bins of a " + std::to_string(rows) + "x" +
                          std::to_string(cols) + " grid");
    }
    std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> all;  // (r^2, u, v)
    for (std::size_t u = 0; u < rows; ++u) {
        for (std::size_t v = 0; v < cols; ++v) {
            const std::size_t du = std::min(u, rows - u);
            const std::size_t dv = std::min(v, cols - v);
            all.emplace_back(du * du + dv * dv, u, v);
        }
    }
    std::sort(all.begin(), all.end());
    SpectralInputSpec spec;
    spec.rows = rows;
    spec.cols = cols;
    for (std::size_t i = 0; i < count; ++i) {
        spec.bins.emplace_back(std::get<1>(all[i]), std::get<2>(all[i]));
    }
    return spec;
}

CVector spectral_bins(const RMatrix& image, const SpectralInputSpec& spec) {
    if (static_cast<std::size_t>(image.rows()) != spec.rows || static_cast<std::size_t>(image.cols()) != spec.cols) {
        throw ValidationError("image is " + std::to_string(image.rows()) + "x" + std::to_string(image.cols()) +
                              ", expected " + std::to_string(spec.rows) + "x" + std::to_string(spec.cols));
    }
    thread_local std::size_t cached_rows = 0;
    thread_local std::size_t cached_cols = 0;
    thread_local CMatrix wr;
    thread_local CMatrix wc;
    if (cached_rows != spec.rows || cached_cols != spec.cols) {
        wr = dft_matrix(spec.rows);
        wc = dft_matrix(spec.cols);
        cached_rows = spec.rows;
        cached_cols = spec.cols;
    }
    const CMatrix full = wr * image.cast<Complex>() * wc.transpose();
    CVector out(static_cast<Eigen::Index>(spec.bins.size()));
    for (std::size_t i = 0; i < spec.bins.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] =
            full(static_cast<Eigen::Index>(spec.bins[i].first), static_cast<Eigen::Index>(spec.bins[i].second));
    }
    return out;
}

CVector mnist_dft_compress(const RMatrix& image, const SpectralInputSpec& spec) {
    CVector out = spectral_bins(image, spec);
    const double peak = out.cwiseAbs().maxCoeff();
    if (peak > 0.0) {
        out /= peak;
    }
    return out;
}

std::vector<Sample> build_image_samples(const IdxImages& images, const std::vector<std::uint8_t>& labels,
                                        std::size_t class_count, const SpectralInputSpec& spec,
                                        std::size_t limit) {
    spec.validate();
    if (labels.size() != images.count) {
        throw ValidationError("image and label counts differ (" + std::to_string(images.count) + " vs " +
                              std::to_string(labels.size()) + ")");
    }
    std::vector<Sample> out;
    for (std::size_t i = 0; i < images.count; ++i) {
        if (labels[i] >= class_count) {
            continue;
        }
        Sample s;
        s.inputs = mnist_dft_compress(images.image(i), spec);
        s.label = labels[i];
        out.push_back(std::move(s));
        if (limit != 0 && out.size() == limit) {
            break;
        }
    }
    return out;
}

}  // namespace spnn
