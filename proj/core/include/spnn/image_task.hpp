#pragma once

// Image classification on the cascaded boards: dataset loading, model
// construction and training with the port-energy readout.

#include <filesystem>
#include <string>
#include <vector>

#include "spnn/spectral.hpp"
#include "spnn/train.hpp"

namespace spnn {

enum class ImageDataset { Mnist, Fashion };

std::string image_dataset_name(ImageDataset d);
ImageDataset parse_image_dataset(const std::string& name);

/// Files `<root>/<name>/{train,t10k}-{images-idx3,labels-idx1}-ubyte`.
struct ImageFiles {
    std::filesystem::path images;
    std::filesystem::path labels;
};
ImageFiles image_files(const std::filesystem::path& root, ImageDataset dataset, bool train_split);

struct ImagePipelineConfig {
    ImageDataset dataset = ImageDataset::Mnist;
    std::size_t classes = 5;
    std::size_t boards = 3;
    std::size_t pairs_per_board = 3;
    std::size_t input_bins = 32;
    double temperature = 10.0;
    TrainConfig train{0.01, 0.9, 64, 10, 7, true, true};
    std::size_t train_limit = 0;       ///< 0 keeps every image
    std::size_t validation_limit = 0;

    void validate() const;
};

/// DFT-compressed samples of one split, labels below `cfg.classes`.
std::vector<Sample> load_image_samples(const std::filesystem::path& root, const ImagePipelineConfig& cfg,
                                       bool train_split);

/// Cascaded boards sharing `diffraction`, every port a detector, class ports
/// spread by `even_class_ports`. Phases are seeded from `cfg.train.seed`.
Model make_image_model(const ImagePipelineConfig& cfg, const CMatrix& diffraction);

PretrainResult train_image_samples(std::span<const Sample> train, std::span<const Sample> validation,
                                   const ImagePipelineConfig& cfg, const CMatrix& diffraction);

}  // namespace spnn
