#include "spnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "spnn/errors.hpp"
#include "spnn/random.hpp"

namespace spnn {

std::vector<ComplexField> Sample::fields(const std::vector<double>& frequencies_hz) const {
    if (frequencies_hz.size() != freq_count) {
        throw ConfigError("sample has " + std::to_string(freq_count) + " frequencies, " +
                          std::to_string(frequencies_hz.size()) + " supplied");
    }
    std::vector<ComplexField> out;
    out.reserve(columns());
    for (std::size_t s = 0; s < slot_count; ++s) {
        for (std::size_t f = 0; f < freq_count; ++f) {
            out.push_back(ComplexField{inputs.col(static_cast<Eigen::Index>(s * freq_count + f)),
                                       frequencies_hz[f], s});
        }
    }
    return out;
}

double mean_column_energy(std::span<const Sample> samples) {
    double total = 0.0;
    std::size_t columns = 0;
    for (const auto& s : samples) {
        total += s.inputs.squaredNorm();
        columns += static_cast<std::size_t>(s.inputs.cols());
    }
    return columns == 0 ? 0.0 : total / static_cast<double>(columns);
}

void scale_inputs(std::span<Sample> samples, double factor) {
    for (auto& s : samples) {
        s.inputs *= factor;
    }
}

namespace {

const char* layer_kind(const Layer& l) {
    return std::holds_alternative<DiffractionLayer>(l) ? "diffraction" : "phase";
}

// Sample columns side by side.
CMatrix stack_inputs(const NetworkSpec& net, std::span<const Sample> samples,
                     std::span<const std::size_t> indices, std::size_t& columns) {
    columns = samples[indices.front()].columns();
    CMatrix x(static_cast<Eigen::Index>(net.port_count),
              static_cast<Eigen::Index>(columns * indices.size()));
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const Sample& s = samples[indices[b]];
        if (s.columns() != columns || static_cast<std::size_t>(s.inputs.rows()) != net.port_count ||
            static_cast<std::size_t>(s.inputs.cols()) != columns) {
            throw ConfigError("sample " + std::to_string(indices[b]) +
                              " dimensions do not match the batch/network");
        }
        x.middleCols(static_cast<Eigen::Index>(b * columns), static_cast<Eigen::Index>(columns)) = s.inputs;
    }
    return x;
}

RVector features_from_output(const NetworkSpec& net, const CMatrix& y, std::size_t base_col,
                             std::size_t freq_count, std::size_t slot_count) {
    const std::size_t ports = net.detector_ports.size();
    RVector d = RVector::Zero(static_cast<Eigen::Index>(ports * slot_count));
    for (std::size_t s = 0; s < slot_count; ++s) {
        for (std::size_t f = 0; f < freq_count; ++f) {
            const auto col = static_cast<Eigen::Index>(base_col + s * freq_count + f);
            for (std::size_t k = 0; k < ports; ++k) {
                d[static_cast<Eigen::Index>(s * ports + k)] +=
                    std::norm(y(static_cast<Eigen::Index>(net.detector_ports[k]), col));
            }
        }
    }
    return d;
}

std::vector<std::size_t> class_port_positions(const NetworkSpec& net, const PortEnergyReadout& r) {
    std::vector<std::size_t> pos;
    for (const auto p : r.class_ports) {
        const auto it = std::find(net.detector_ports.begin(), net.detector_ports.end(), p);
        if (it == net.detector_ports.end()) {
            throw ConfigError("class port " + std::to_string(p) + " is not a detector port");
        }
        pos.push_back(static_cast<std::size_t>(it - net.detector_ports.begin()));
    }
    return pos;
}

RVector port_energies(const RVector& d, std::size_t detector_count, const std::vector<std::size_t>& pos) {
    const std::size_t slots = static_cast<std::size_t>(d.size()) / detector_count;
    RVector e = RVector::Zero(static_cast<Eigen::Index>(pos.size()));
    for (std::size_t k = 0; k < pos.size(); ++k) {
        for (std::size_t s = 0; s < slots; ++s) {
            e[static_cast<Eigen::Index>(k)] += d[static_cast<Eigen::Index>(s * detector_count + pos[k])];
        }
    }
    return e;
}

RVector scores_from_features(const Model& model, const RVector& d) {
    if (const auto* head = std::get_if<LinearHead>(&model.readout)) {
        if (static_cast<std::size_t>(d.size()) != head->feature_count()) {
            throw ConfigError("linear head expects " + std::to_string(head->feature_count()) +
                              " features, got " + std::to_string(d.size()));
        }
        return head->weight * d + head->bias;
    }
    const auto& r = std::get<PortEnergyReadout>(model.readout);
    const RVector e = port_energies(d, model.net.detector_ports.size(), class_port_positions(model.net, r));
    const double total = e.sum();
    if (total <= 0.0) {
        return RVector::Zero(e.size());
    }
    return r.temperature * e / total;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) {
        idx[i] = i;
    }
    return idx;
}

}  // namespace

std::size_t Model::class_count() const {
    if (const auto* head = std::get_if<LinearHead>(&readout)) {
        return head->class_count();
    }
    return std::get<PortEnergyReadout>(readout).class_ports.size();
}

void Model::validate() const {
    net.validate();
    if (const auto* head = std::get_if<LinearHead>(&readout)) {
        if (head->bias.size() != head->weight.rows() || head->weight.rows() == 0) {
            throw ConfigError("linear head weight/bias shapes disagree");
        }
        if (net.detector_ports.empty() || head->feature_count() % net.detector_ports.size() != 0) {
            throw ConfigError("linear head feature count " + std::to_string(head->feature_count()) +
                              " is not a multiple of the detector count");
        }
    } else {
        const auto& r = std::get<PortEnergyReadout>(readout);
        if (r.class_ports.empty()) {
            throw ConfigError("port-energy readout has no class ports");
        }
        if (!(r.temperature > 0.0)) {
            throw ConfigError("port-energy temperature must be positive");
        }
        class_port_positions(net, r);
    }
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) {
        throw ConfigError("learning_rate must be positive");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) {
        throw ConfigError("momentum must lie in [0, 1)");
    }
    if (batch_size < 1) {
        throw ConfigError("batch_size must be >= 1");
    }
}

RVector GradientRecord::flat_phases() const {
    Eigen::Index n = 0;
    for (const auto& v : d_phases) {
        n += v.size();
    }
    RVector flat(n);
    Eigen::Index offset = 0;
    for (const auto& v : d_phases) {
        flat.segment(offset, v.size()) = v;
        offset += v.size();
    }
    return flat;
}

bool GradientRecord::all_finite() const {
    if (!std::isfinite(loss) || !d_head_weight.allFinite() || !d_head_bias.allFinite()) {
        return false;
    }
    return std::all_of(d_phases.begin(), d_phases.end(), [](const RVector& v) { return v.allFinite(); });
}

ForwardTrace forward_trace(const NetworkSpec& net, CMatrix x) {
    ForwardTrace trace;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const auto& layer = net.layers[i];
        if (const auto* d = std::get_if<DiffractionLayer>(&layer)) {
            x = d->matrix * x;
        } else {
            CVector diag = std::get<PhaseLayer>(layer).diagonal();
            trace.phase_inputs.push_back(x);
            x = diag.asDiagonal() * x;
            trace.diagonals.push_back(std::move(diag));
        }
        if (!x.allFinite()) {
            throw NumericalError("non-finite field after layer " + std::to_string(i) + " (" +
                                 layer_kind(layer) + ")");
        }
    }
    trace.output = std::move(x);
    return trace;
}

std::vector<RVector> backward_phases(const NetworkSpec& net, const ForwardTrace& trace, CMatrix g) {
    std::vector<RVector> d_phases(trace.diagonals.size());
    std::size_t phase_index = trace.diagonals.size();
    for (std::size_t i = net.layers.size(); i-- > 0;) {
        const auto& layer = net.layers[i];
        if (const auto* d = std::get_if<DiffractionLayer>(&layer)) {
            g = d->matrix.adjoint() * g;
        } else {
            --phase_index;
            const CVector deriv = std::get<PhaseLayer>(layer).diagonal_derivative();
            const CVector corr = g.conjugate().cwiseProduct(trace.phase_inputs[phase_index]).rowwise().sum();
            d_phases[phase_index] = deriv.cwiseProduct(corr).real();
            g = trace.diagonals[phase_index].conjugate().asDiagonal() * g;
        }
        if (!g.allFinite()) {
            throw NumericalError("non-finite gradient at layer " + std::to_string(i) + " (" +
                                 layer_kind(layer) + ")");
        }
    }
    return d_phases;
}

RVector softmax(const RVector& scores) {
    const double m = scores.maxCoeff();
    RVector e = (scores.array() - m).exp().matrix();
    return e / e.sum();
}

double loss_crossentropy(const RVector& scores, std::size_t label) {
    if (label >= static_cast<std::size_t>(scores.size())) {
        throw ValidationError("label " + std::to_string(label) + " out of range for " +
                              std::to_string(scores.size()) + " classes");
    }
    const double m = scores.maxCoeff();
    const double lse = m + std::log((scores.array() - m).exp().sum());
    return lse - scores[static_cast<Eigen::Index>(label)];
}

RVector crossentropy_gradient(const RVector& scores, std::size_t label) {
    RVector g = softmax(scores);
    g[static_cast<Eigen::Index>(label)] -= 1.0;
    return g;
}

DetectionVector sample_features(const NetworkSpec& net, const Sample& sample) {
    const std::size_t idx = 0;
    std::size_t columns = 0;
    const CMatrix x = stack_inputs(net, std::span<const Sample>(&sample, 1), std::span(&idx, 1), columns);
    const CMatrix y = propagate(net, x);
    return DetectionVector{features_from_output(net, y, 0, sample.freq_count, sample.slot_count)};
}

std::vector<DetectionVector> detection_features(const NetworkSpec& net, std::span<const Sample> samples) {
    std::vector<DetectionVector> out;
    out.reserve(samples.size());
    constexpr std::size_t kChunk = 256;
    for (std::size_t start = 0; start < samples.size(); start += kChunk) {
        const std::size_t end = std::min(samples.size(), start + kChunk);
        std::vector<std::size_t> idx(end - start);
        for (std::size_t i = start; i < end; ++i) {
            idx[i - start] = i;
        }
        std::size_t columns = 0;
        const CMatrix y = propagate(net, stack_inputs(net, samples, idx, columns));
        for (std::size_t b = 0; b < idx.size(); ++b) {
            const Sample& s = samples[idx[b]];
            out.push_back(DetectionVector{features_from_output(net, y, b * columns, s.freq_count, s.slot_count)});
        }
    }
    return out;
}

double median_mean_feature(std::span<const DetectionVector> features) {
    std::vector<double> means;
    means.reserve(features.size());
    for (const auto& f : features) {
        means.push_back(f.intensities.mean());
    }
    if (means.empty()) {
        throw ValidationError("median_mean_feature: no feature vectors");
    }
    const auto mid = means.begin() + static_cast<std::ptrdiff_t>(means.size() / 2);
    std::nth_element(means.begin(), mid, means.end());
    if (!(*mid > 0.0)) {
        throw ValidationError("median detector reading is zero; inputs carry no energy");
    }
    return *mid;
}

double input_scale_for_level(const NetworkSpec& net, std::span<const Sample> samples, double level) {
    if (!(level > 0.0)) {
        throw ConfigError("feature level must be positive");
    }
    return std::sqrt(level / median_mean_feature(detection_features(net, samples)));
}

RVector model_scores(const Model& model, const Sample& sample) {
    return scores_from_features(model, sample_features(model.net, sample).intensities);
}

GradientRecord batch_gradient(const Model& model, std::span<const Sample> samples,
                              std::span<const std::size_t> indices) {
    if (indices.empty()) {
        throw ValidationError("batch_gradient: empty batch");
    }
    const NetworkSpec& net = model.net;
    std::size_t columns = 0;
    const ForwardTrace cache = forward_trace(net, stack_inputs(net, samples, indices, columns));
    const CMatrix& y = cache.output;
    const std::size_t detectors = net.detector_ports.size();
    const double inv_batch = 1.0 / static_cast<double>(indices.size());

    GradientRecord rec;
    const auto* head = std::get_if<LinearHead>(&model.readout);
    const PortEnergyReadout* energy = std::get_if<PortEnergyReadout>(&model.readout);
    std::vector<std::size_t> positions;
    if (head != nullptr) {
        rec.d_head_weight = RMatrix::Zero(head->weight.rows(), head->weight.cols());
        rec.d_head_bias = RVector::Zero(head->bias.size());
    } else {
        positions = class_port_positions(net, *energy);
    }

    // Wirtinger-style gradient dL/dRe y + j dL/dIm y at the network output.
    CMatrix g = CMatrix::Zero(y.rows(), y.cols());
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const Sample& s = samples[indices[b]];
        const std::size_t base = b * columns;
        const RVector d = features_from_output(net, y, base, s.freq_count, s.slot_count);
        const RVector scores = scores_from_features(model, d);
        if (s.label >= static_cast<std::size_t>(scores.size())) {
            throw ValidationError("sample " + std::to_string(indices[b]) + " label " +
                                  std::to_string(s.label) + " exceeds class count");
        }
        rec.loss += loss_crossentropy(scores, s.label) * inv_batch;
        const RVector gs = crossentropy_gradient(scores, s.label) * inv_batch;

        RVector gd;
        if (head != nullptr) {
            rec.d_head_weight.noalias() += gs * d.transpose();
            rec.d_head_bias += gs;
            gd = head->weight.transpose() * gs;
        } else {
            gd = RVector::Zero(d.size());
            const RVector e = port_energies(d, detectors, positions);
            const double total = e.sum();
            if (total > 0.0) {
                const double mean_term = gs.dot(e) / total;
                for (std::size_t k = 0; k < positions.size(); ++k) {
                    const double ge = energy->temperature / total * (gs[static_cast<Eigen::Index>(k)] - mean_term);
                    for (std::size_t sl = 0; sl < s.slot_count; ++sl) {
                        gd[static_cast<Eigen::Index>(sl * detectors + positions[k])] += ge;
                    }
                }
            }
        }
        for (std::size_t sl = 0; sl < s.slot_count; ++sl) {
            for (std::size_t f = 0; f < s.freq_count; ++f) {
                const auto col = static_cast<Eigen::Index>(base + sl * s.freq_count + f);
                for (std::size_t k = 0; k < detectors; ++k) {
                    const auto row = static_cast<Eigen::Index>(net.detector_ports[k]);
                    g(row, col) += 2.0 * gd[static_cast<Eigen::Index>(sl * detectors + k)] * y(row, col);
                }
            }
        }
    }

    rec.d_phases = backward_phases(net, cache, std::move(g));
    return rec;
}

GradientRecord backward(const Model& model, const Sample& sample) {
    const std::size_t idx = 0;
    return batch_gradient(model, std::span<const Sample>(&sample, 1), std::span(&idx, 1));
}

GradientRecord backward(const NetworkSpec& net, const LinearHead& head, const Sample& sample) {
    return backward(Model{net, head}, sample);
}

void sgdm_update(RVector& params, const RVector& grad, RVector& velocity, double learning_rate,
                 double momentum) {
    if (params.size() != grad.size() || params.size() != velocity.size()) {
        throw ConfigError("sgdm_update: shape mismatch");
    }
    velocity = momentum * velocity + grad;
    params -= learning_rate * velocity;
}

void sgdm_update(RMatrix& params, const RMatrix& grad, RMatrix& velocity, double learning_rate,
                 double momentum) {
    if (params.rows() != grad.rows() || params.cols() != grad.cols() || params.rows() != velocity.rows() ||
        params.cols() != velocity.cols()) {
        throw ConfigError("sgdm_update: shape mismatch");
    }
    velocity = momentum * velocity + grad;
    params -= learning_rate * velocity;
}

SgdmState make_sgdm_state(const Model& model) {
    SgdmState s;
    s.phase_velocity = RVector::Zero(static_cast<Eigen::Index>(model.net.trainable_count()));
    if (const auto* head = std::get_if<LinearHead>(&model.readout)) {
        s.weight_velocity = RMatrix::Zero(head->weight.rows(), head->weight.cols());
        s.bias_velocity = RVector::Zero(head->bias.size());
    }
    return s;
}

void sgdm_step(Model& model, const GradientRecord& grads, SgdmState& state, const TrainConfig& cfg) {
    if (cfg.train_phases && model.net.trainable_count() > 0) {
        RVector phases = model.net.phases();
        sgdm_update(phases, grads.flat_phases(), state.phase_velocity, cfg.learning_rate, cfg.momentum);
        model.net.set_phases(phases);
    }
    if (auto* head = std::get_if<LinearHead>(&model.readout); head != nullptr && cfg.train_head) {
        sgdm_update(head->weight, grads.d_head_weight, state.weight_velocity, cfg.learning_rate, cfg.momentum);
        sgdm_update(head->bias, grads.d_head_bias, state.bias_velocity, cfg.learning_rate, cfg.momentum);
    }
}

std::size_t ConfusionMatrix::total() const {
    std::size_t t = 0;
    for (const auto c : counts_) {
        t += c;
    }
    return t;
}

double ConfusionMatrix::accuracy() const {
    const std::size_t t = total();
    if (t == 0) {
        return 0.0;
    }
    std::size_t hit = 0;
    for (std::size_t k = 0; k < classes_; ++k) {
        hit += at(k, k);
    }
    return static_cast<double>(hit) / static_cast<double>(t);
}

Evaluation evaluate(const Model& model, std::span<const Sample> samples) {
    Evaluation ev;
    ev.confusion = ConfusionMatrix(model.class_count());
    if (samples.empty()) {
        return ev;
    }
    const auto features = detection_features(model.net, samples);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const RVector scores = scores_from_features(model, features[i].intensities);
        ev.loss += loss_crossentropy(scores, samples[i].label);
        ev.confusion.add(samples[i].label, argmax(scores));
    }
    ev.loss /= static_cast<double>(samples.size());
    ev.accuracy = ev.confusion.accuracy();
    return ev;
}

std::string metrics_csv(std::span<const EpochMetrics> history) {
    std::ostringstream out;
    out.precision(10);
    out << "epoch,split,loss,accuracy\n";
    for (const auto& m : history) {
        out << m.epoch << ",train," << m.train_loss << ',' << m.train_accuracy << '\n';
        out << m.epoch << ",validation," << m.validation_loss << ',' << m.validation_accuracy << '\n';
    }
    return out.str();
}

void initialize_model(Model& model, std::uint64_t seed) {
    Rng rng(seed);
    RVector phases(static_cast<Eigen::Index>(model.net.trainable_count()));
    for (Eigen::Index i = 0; i < phases.size(); ++i) {
        phases[i] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    model.net.set_phases(phases);
    if (auto* head = std::get_if<LinearHead>(&model.readout)) {
        head->weight.setZero();
        head->bias.setZero();
    }
}

PretrainResult pretrain(const Model& initial, std::span<const Sample> train,
                        std::span<const Sample> validation, const TrainConfig& cfg) {
    cfg.validate();
    initial.validate();
    if (train.empty()) {
        throw ValidationError("pretrain: empty training set");
    }
    const std::size_t classes = initial.class_count();
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (train[i].label >= classes) {
            throw ValidationError("training sample " + std::to_string(i) + " has label " +
                                  std::to_string(train[i].label) + " >= " + std::to_string(classes));
        }
    }

    PretrainResult result;
    result.model = initial;
    result.optimizer = make_sgdm_state(initial);
    Model last_good = initial;
    SgdmState last_good_state = result.optimizer;

    Rng rng(cfg.seed);
    std::vector<std::size_t> order = iota_indices(train.size());
    for (std::size_t epoch = 1; epoch <= cfg.epochs && !result.diverged; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::span<const std::size_t> batch(order.data() + start, end - start);
            GradientRecord grads;
            try {
                grads = batch_gradient(result.model, train, batch);
            } catch (const NumericalError& e) {
                result.diverged = true;
                result.diagnostic = "epoch " + std::to_string(epoch) + ": " + e.what();
                break;
            }
            if (!grads.all_finite()) {
                result.diverged = true;
                result.diagnostic = "epoch " + std::to_string(epoch) + ": non-finite loss or gradient";
                break;
            }
            sgdm_step(result.model, grads, result.optimizer, cfg);
        }
        if (result.diverged) {
            break;
        }
        const Evaluation tr = evaluate(result.model, train);
        const Evaluation va = evaluate(result.model, validation);
        if (!std::isfinite(tr.loss)) {
            result.diverged = true;
            result.diagnostic = "epoch " + std::to_string(epoch) + ": training loss is not finite";
            break;
        }
        result.history.push_back(EpochMetrics{epoch, tr.loss, tr.accuracy, va.loss, va.accuracy});
        result.train_confusion = tr.confusion;
        result.validation_confusion = va.confusion;
        last_good = result.model;
        last_good_state = result.optimizer;
    }
    if (result.diverged) {
        result.model = last_good;
        result.optimizer = last_good_state;
    }
    if (result.history.empty()) {
        const Evaluation tr = evaluate(result.model, train);
        const Evaluation va = evaluate(result.model, validation);
        result.train_confusion = tr.confusion;
        result.validation_confusion = va.confusion;
    }
    return result;
}

namespace {

struct HeadEval {
    double loss = 0.0;
    double accuracy = 0.0;
};

HeadEval evaluate_head(const LinearHead& head, std::span<const DetectionVector> features,
                       std::span<const std::size_t> labels) {
    HeadEval ev;
    if (features.empty()) {
        return ev;
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < features.size(); ++i) {
        const RVector scores = head.weight * features[i].intensities + head.bias;
        ev.loss += loss_crossentropy(scores, labels[i]);
        hits += (argmax(scores) == labels[i]) ? 1 : 0;
    }
    ev.loss /= static_cast<double>(features.size());
    ev.accuracy = static_cast<double>(hits) / static_cast<double>(features.size());
    return ev;
}

}  // namespace

FineTrainResult fine_train(const LinearHead& initial, std::span<const DetectionVector> features,
                           std::span<const std::size_t> labels, const TrainConfig& cfg,
                           std::span<const DetectionVector> validation_features,
                           std::span<const std::size_t> validation_labels) {
    cfg.validate();
    if (features.empty() || features.size() != labels.size()) {
        throw ValidationError("fine_train: need one label per feature vector");
    }
    if (validation_features.size() != validation_labels.size()) {
        throw ValidationError("fine_train: validation features and labels differ in count");
    }
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (static_cast<std::size_t>(features[i].intensities.size()) != initial.feature_count()) {
            throw ConfigError("fine_train: feature vector " + std::to_string(i) + " has length " +
                              std::to_string(features[i].intensities.size()) + ", head expects " +
                              std::to_string(initial.feature_count()));
        }
        if (labels[i] >= initial.class_count()) {
            throw ValidationError("fine_train: label " + std::to_string(labels[i]) + " out of range");
        }
    }

    FineTrainResult result;
    result.head = initial;
    result.initial_loss = evaluate_head(initial, features, labels).loss;
    RMatrix vw = RMatrix::Zero(initial.weight.rows(), initial.weight.cols());
    RVector vb = RVector::Zero(initial.bias.size());
    LinearHead last_good = initial;

    Rng rng(cfg.seed);
    std::vector<std::size_t> order = iota_indices(features.size());
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const double inv = 1.0 / static_cast<double>(end - start);
            RMatrix gw = RMatrix::Zero(initial.weight.rows(), initial.weight.cols());
            RVector gb = RVector::Zero(initial.bias.size());
            for (std::size_t i = start; i < end; ++i) {
                const RVector& d = features[order[i]].intensities;
                const RVector scores = result.head.weight * d + result.head.bias;
                const RVector gs = crossentropy_gradient(scores, labels[order[i]]) * inv;
                gw.noalias() += gs * d.transpose();
                gb += gs;
            }
            sgdm_update(result.head.weight, gw, vw, cfg.learning_rate, cfg.momentum);
            sgdm_update(result.head.bias, gb, vb, cfg.learning_rate, cfg.momentum);
        }
        const HeadEval tr = evaluate_head(result.head, features, labels);
        if (!std::isfinite(tr.loss)) {
            result.diverged = true;
            result.head = last_good;
            break;
        }
        const HeadEval va = evaluate_head(result.head, validation_features, validation_labels);
        result.history.push_back(EpochMetrics{epoch, tr.loss, tr.accuracy, va.loss, va.accuracy});
        last_good = result.head;
    }
    result.final_loss = evaluate_head(result.head, features, labels).loss;
    return result;
}

FineTrainResult fine_train(const NetworkSpec& frozen, const LinearHead& initial,
                           std::span<const Sample> samples, const TrainConfig& cfg) {
    const auto features = detection_features(frozen, samples);
    std::vector<std::size_t> labels(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        labels[i] = samples[i].label;
    }
    return fine_train(initial, features, labels, cfg);
}

SplitIndices stratified_split(std::span<const std::size_t> labels, double train_fraction,
                              std::uint64_t seed) {
    if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
        throw ConfigError("train_fraction must lie in [0, 1]");
    }
    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_class[labels[i]].push_back(i);
    }
    SplitIndices split;
    for (auto& [label, idx] : by_class) {
        Rng rng(derive_seed(seed, label));
        rng.shuffle(idx);
        const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
        split.train.insert(split.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        split.validation.insert(split.validation.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation.begin(), split.validation.end());
    return split;
}

std::vector<Sample> gather(std::span<const Sample> samples, std::span<const std::size_t> indices) {
    std::vector<Sample> out;
    out.reserve(indices.size());
    for (const auto i : indices) {
        out.push_back(samples[i]);
    }
    return out;
}

}  // namespace spnn
