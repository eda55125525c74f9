#include "spnn/idx.hpp"

#include <fstream>
#include <iterator>

#include "spnn/errors.hpp"

namespace spnn {

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError(path.string(), 0, "cannot open IDX file");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off) {
    return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
           std::uint32_t{b[off + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                           static_cast<char>(v)};
    out.write(bytes, 4);
}

void write_bytes(std::ofstream& out, const std::vector<std::uint8_t>& data, const std::filesystem::path& path) {
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) {
        throw ValidationError("write failed for " + path.string());
    }
}

}  // namespace

RMatrix IdxImages::image(std::size_t index) const {
    if (index >= count) {
        throw ValidationError("image index " + std::to_string(index) + " out of range");
    }
    RMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    const std::size_t base = index * rows * cols;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = pixels[base + r * cols + c] / 255.0;
        }
    }
    return m;
}

IdxImages read_idx_images(const std::filesystem::path& path) {
    const auto b = read_bytes(path);
    if (b.size() < 16) {
        throw ParseError(path.string(), 0, "IDX image header truncated");
    }
    if (be32(b, 0) != kIdxImageMagic) {
        throw ParseError(path.string(), 0, "bad IDX image magic");
    }
    IdxImages img;
    img.count = be32(b, 4);
    img.rows = be32(b, 8);
    img.cols = be32(b, 12);
    const std::size_t expected = 16 + img.count * img.rows * img.cols;
    if (b.size() != expected) {
        throw ParseError(path.string(), 0,
                         "IDX image payload is " + std::to_string(b.size()) + " bytes, expected " +
                             std::to_string(expected));
    }
    img.pixels.assign(b.begin() + 16, b.end());
    return img;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
    const auto b = read_bytes(path);
    if (b.size() < 8) {
        throw ParseError(path.string(), 0, "IDX label header truncated");
    }
    if (be32(b, 0) != kIdxLabelMagic) {
        throw ParseError(path.string(), 0, "bad IDX label magic");
    }
    const std::size_t count = be32(b, 4);
    if (b.size() != 8 + count) {
        throw ParseError(path.string(), 0,
                         "IDX label payload is " + std::to_string(b.size() - 8) + " bytes, expected " +
                             std::to_string(count));
    }
    return {b.begin() + 8, b.end()};
}

void write_idx_images(const std::filesystem::path& path, const IdxImages& images) {
    if (images.pixels.size() != images.count * images.rows * images.cols) {
        throw ValidationError("IDX image buffer size does not match its dimensions");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot write " + path.string());
    }
    put_be32(out, kIdxImageMagic);
    put_be32(out, static_cast<std::uint32_t>(images.count));
    put_be32(out, static_cast<std::uint32_t>(images.rows));
    put_be32(out, static_cast<std::uint32_t>(images.cols));
    write_bytes(out, images.pixels, path);
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot write " + path.string());
    }
    put_be32(out, kIdxLabelMagic);
    put_be32(out, static_cast<std::uint32_t>(labels.size()));
    write_bytes(out, labels, path);
}

}  // namespace spnn
