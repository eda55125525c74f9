#pragma once

// Exact reverse-mode gradients through the complex forward model, SGDM,
// and the pre-train / fine-train pipeline.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "spnn/netcore.hpp"
#include "spnn/sample.hpp"

namespace spnn {

/// Image-task readout: softmax over the intensity share of each class port,
///   score_k = temperature * E_k / sum_j E_j.
/// Argmax equals `classify_by_port_energy`.
struct PortEnergyReadout {
    std::vector<std::size_t> class_ports;
    double temperature = 10.0;
};

using Readout = std::variant<LinearHead, PortEnergyReadout>;

struct Model {
    NetworkSpec net;
    Readout readout;

    std::size_t class_count() const;
    void validate() const;
};

struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::size_t batch_size = 64;
    std::size_t epochs = 50;
    std::uint64_t seed = 0;
    bool train_phases = true;
    bool train_head = true;

    void validate() const;
};

struct GradientRecord {
    std::vector<RVector> d_phases;  ///< one per phase layer, layer order
    RMatrix d_head_weight;          ///< empty for port-energy readout
    RVector d_head_bias;
    double loss = 0.0;

    RVector flat_phases() const;
    bool all_finite() const;
};

struct SgdmState {
    RVector phase_velocity;
    RMatrix weight_velocity;
    RVector bias_velocity;
};

/// Forward pass over a batch of columns, keeping what the reverse pass needs.
struct ForwardTrace {
    std::vector<CMatrix> phase_inputs;  ///< input to each phase layer
    std::vector<CVector> diagonals;     ///< applied diagonal of each phase layer
    CMatrix output;
};

/// Throws NumericalError naming the first layer that yields a non-finite field.
ForwardTrace forward_trace(const NetworkSpec& net, CMatrix inputs);

/// Phase gradients of a real loss L given g = dL/dRe(y) + j dL/dIm(y) at the
/// output of the traced pass. One vector per phase layer, layer order.
std::vector<RVector> backward_phases(const NetworkSpec& net, const ForwardTrace& trace, CMatrix output_grad);

/// Softmax cross-entropy with max-subtraction.
double loss_crossentropy(const RVector& scores, std::size_t label);
/// softmax(scores) - onehot(label).
RVector crossentropy_gradient(const RVector& scores, std::size_t label);
RVector softmax(const RVector& scores);

/// Detection features (|y|^2 summed over frequency, detector-major per slot).
DetectionVector sample_features(const NetworkSpec& net, const Sample& sample);
std::vector<DetectionVector> detection_features(const NetworkSpec& net, std::span<const Sample> samples);

/// Median over vectors of the mean detector reading.
double median_mean_feature(std::span<const DetectionVector> features);

/// Input amplitude scale that brings `median_mean_feature` of the network's
/// response to `level`. Intensity is quadratic, so the scale is a square root.
double input_scale_for_level(const NetworkSpec& net, std::span<const Sample> samples, double level);

/// Class scores for one sample.
RVector model_scores(const Model& model, const Sample& sample);

/// Gradient of the per-sample loss.
GradientRecord backward(const Model& model, const Sample& sample);
GradientRecord backward(const NetworkSpec& net, const LinearHead& head, const Sample& sample);

/// Mean loss and gradient over `indices` of `samples`, computed as one batch.
GradientRecord batch_gradient(const Model& model, std::span<const Sample> samples,
                              std::span<const std::size_t> indices);

/// Classical momentum: v <- momentum * v + grad; p <- p - lr * v.
void sgdm_update(RVector& params, const RVector& grad, RVector& velocity, double learning_rate,
                 double momentum);
void sgdm_update(RMatrix& params, const RMatrix& grad, RMatrix& velocity, double learning_rate,
                 double momentum);

SgdmState make_sgdm_state(const Model& model);
void sgdm_step(Model& model, const GradientRecord& grads, SgdmState& state, const TrainConfig& cfg);

class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t classes = 0) : classes_(classes), counts_(classes * classes, 0) {}

    void add(std::size_t truth, std::size_t predicted) { ++counts_.at(truth * classes_ + predicted); }
    std::size_t at(std::size_t truth, std::size_t predicted) const {
        return counts_.at(truth * classes_ + predicted);
    }
    std::size_t classes() const { return classes_; }
    std::size_t total() const;
    double accuracy() const;
    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::size_t classes_;
    std::vector<std::size_t> counts_;
};

struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
    ConfusionMatrix confusion;
};

Evaluation evaluate(const Model& model, std::span<const Sample> samples);

struct EpochMetrics {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double validation_loss = 0.0;
    double validation_accuracy = 0.0;
};

/// CSV with header `epoch,split,loss,accuracy`.
std::string metrics_csv(std::span<const EpochMetrics> history);

/// Uniform phases in [0, 2pi) from `seed`; a LinearHead readout is zeroed.
void initialize_model(Model& model, std::uint64_t seed);

struct PretrainResult {
    Model model;
    SgdmState optimizer;
    std::vector<EpochMetrics> history;
    ConfusionMatrix train_confusion;
    ConfusionMatrix validation_confusion;
    bool diverged = false;
    std::string diagnostic;
};

/// Minibatch SGDM over every trainable parameter. The caller initializes
/// the model (see `initialize_model`). On a non-finite loss the run stops
/// and returns the last epoch-end parameters with `diverged` set.
PretrainResult pretrain(const Model& initial, std::span<const Sample> train,
                        std::span<const Sample> validation, const TrainConfig& cfg);

struct FineTrainResult {
    LinearHead head;
    std::vector<EpochMetrics> history;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    bool diverged = false;
};

/// Trains only the linear head on fixed feature vectors.
FineTrainResult fine_train(const LinearHead& initial, std::span<const DetectionVector> features,
                           std::span<const std::size_t> labels, const TrainConfig& cfg,
                           std::span<const DetectionVector> validation_features = {},
                           std::span<const std::size_t> validation_labels = {});

/// Convenience: features from the frozen network, then `fine_train`.
FineTrainResult fine_train(const NetworkSpec& frozen, const LinearHead& initial,
                           std::span<const Sample> samples, const TrainConfig& cfg);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

/// Per-class shuffled split; `train_fraction` of each class goes to train.
SplitIndices stratified_split(std::span<const std::size_t> labels, double train_fraction,
                              std::uint64_t seed);

std::vector<Sample> gather(std::span<const Sample> samples, std::span<const std::size_t> indices);

}  // namespace spnn
