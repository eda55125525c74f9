#include "spnn/image_task.hpp"

#include "spnn/errors.hpp"
#include "spnn/idx.hpp"

namespace spnn {

std::string image_dataset_name(ImageDataset d) {
    return d == ImageDataset::Mnist ? "mnist" : "fashion";
}

ImageDataset parse_image_dataset(const std::string& name) {
    if (name == "mnist") {
        return ImageDataset::Mnist;
    }
    if (name == "fashion") {
        return ImageDataset::Fashion;
    }
    throw ConfigError("unknown image dataset '" + name + "' (expected mnist or fashion)");
}

ImageFiles image_files(const std::filesystem::path& root, ImageDataset dataset, bool train_split) {
    const auto dir = root / image_dataset_name(dataset);
    const std::string prefix = train_split ? "train" : "t10k";
    return {dir / (prefix + "-images-idx3-ubyte"), dir / (prefix + "-labels-idx1-ubyte")};
}

void ImagePipelineConfig::validate() const {
    train.validate();
    if (classes < 2) {
        throw ConfigError("image task needs at least 2 classes");
    }
    if (boards == 0 || pairs_per_board == 0) {
        throw ConfigError("image task needs at least one board and one pair per board");
    }
    if (input_bins == 0) {
        throw ConfigError("image task needs at least one input bin");
    }
    if (!(temperature > 0.0)) {
        throw ConfigError("readout temperature must be positive");
    }
}

std::vector<Sample> load_image_samples(const std::filesystem::path& root, const ImagePipelineConfig& cfg,
                                       bool train_split) {
    cfg.validate();
    const ImageFiles files = image_files(root, cfg.dataset, train_split);
    const IdxImages images = read_idx_images(files.images);
    const auto labels = read_idx_labels(files.labels);
    const auto spec = SpectralInputSpec::closest_to_dc(cfg.input_bins, images.rows, images.cols);
    return build_image_samples(images, labels, cfg.classes, spec,
                               train_split ? cfg.train_limit : cfg.validation_limit);
}

Model make_image_model(const ImagePipelineConfig& cfg, const CMatrix& diffraction) {
    cfg.validate();
    Model m;
    m.net = make_stack(diffraction, cfg.pairs_per_board, cfg.boards);
    for (std::size_t p = 0; p < m.net.port_count; ++p) {
        m.net.detector_ports.push_back(p);
    }
    if (cfg.classes > m.net.port_count) {
        throw ConfigError("image task has more classes than ports");
    }
    m.readout = PortEnergyReadout{even_class_ports(cfg.classes, m.net.port_count), cfg.temperature};
    initialize_model(m, cfg.train.seed);
    return m;
}

PretrainResult train_image_samples(std::span<const Sample> train, std::span<const Sample> validation,
                                   const ImagePipelineConfig& cfg, const CMatrix& diffraction) {
    const Model model = make_image_model(cfg, diffraction);
    if (!train.empty() && static_cast<Eigen::Index>(model.net.port_count) != train.front().inputs.rows()) {
        throw ValidationError("image samples carry " + std::to_string(train.front().inputs.rows()) +
                              " bins but the network has " + std::to_string(model.net.port_count) + " ports");
    }
    return pretrain(model, train, validation, cfg.train);
}

}  // namespace spnn
