#include "spnn/gesture.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "spnn/beam.hpp"
#include "spnn/errors.hpp"
#include "spnn/random.hpp"

namespace spnn {

namespace {

constexpr std::array<const char*, kPoseCount> kPoseNames{"five", "fist", "one", "palm", "three", "thumb"};

struct Transition {
    Pose start;
    Pose end;
};

constexpr std::array<Transition, 4> kTransitions{{{Pose::Five, Pose::Fist},
                                                  {Pose::One, Pose::Palm},
                                                  {Pose::Three, Pose::Fist},
                                                  {Pose::Thumb, Pose::Fist}}};

constexpr std::size_t kPathsPerPose = 4;

}  // namespace

std::string pose_name(Pose p) {
    return kPoseNames.at(static_cast<std::size_t>(p));
}

Pose parse_pose(const std::string& name) {
    for (std::size_t i = 0; i < kPoseNames.size(); ++i) {
        if (name == kPoseNames[i]) {
            return static_cast<Pose>(i);
        }
    }
    throw ParseError("unknown pose '" + name + "'");
}

std::string gesture_class_name(std::size_t label) {
    if (label == kVoidClass) {
        return "void";
    }
    if (label >= kTransitions.size()) {
        throw ValidationError("gesture class " + std::to_string(label) + " out of range");
    }
    return pose_name(kTransitions[label].start) + "-" + pose_name(kTransitions[label].end);
}

std::size_t transition_label(Pose start, Pose end) {
    for (std::size_t i = 0; i < kTransitions.size(); ++i) {
        if (kTransitions[i].start == start && kTransitions[i].end == end) {
            return i;
        }
    }
    return kVoidClass;
}

void GestureWindowSpec::validate() const {
    if (slot_count < 1) {
        throw ConfigError("gesture slot_count must be >= 1");
    }
    if (!(slot_interval_s > 0.0)) {
        throw ConfigError("gesture slot_interval_s must be positive");
    }
    if (antenna_count == 0 || first_antenna_port + antenna_count > port_count) {
        throw ConfigError("gesture antenna ports exceed the port count");
    }
    if (frequencies_hz.empty()) {
        throw ConfigError("gesture spec has no frequencies");
    }
    for (const auto p : detector_ports) {
        if (p >= port_count) {
            throw ConfigError("gesture detector port " + std::to_string(p) + " out of range");
        }
    }
}

FoldResult fold_gesture_windows(const std::vector<GestureFrame>& stream, const GestureWindowSpec& spec) {
    spec.validate();
    const std::size_t freqs = spec.frequencies_hz.size();
    for (std::size_t i = 0; i < stream.size(); ++i) {
        const auto& f = stream[i];
        if (static_cast<std::size_t>(f.values.rows()) != spec.antenna_count ||
            static_cast<std::size_t>(f.values.cols()) != freqs) {
            throw ValidationError("frame " + std::to_string(i) + " is " + std::to_string(f.values.rows()) + "x" +
                                  std::to_string(f.values.cols()) + ", expected " +
                                  std::to_string(spec.antenna_count) + "x" + std::to_string(freqs));
        }
        if (i > 0 && !(f.time_s > stream[i - 1].time_s)) {
            throw ValidationError("gesture stream is not strictly increasing in time at frame " + std::to_string(i));
        }
    }

    FoldResult out;
    const double eps = 1e-9;
    for (std::size_t i = 0; i < stream.size(); ++i) {
        std::vector<std::size_t> picks{i};
        bool complete = true;
        bool gap = false;
        for (std::size_t s = 1; s < spec.slot_count; ++s) {
            const double want = stream[i].time_s + static_cast<double>(s) * spec.slot_interval_s;
            std::size_t j = picks.back() + 1;
            while (j < stream.size() && stream[j].time_s < want - eps) {
                ++j;
            }
            if (j == stream.size()) {
                complete = false;
                break;
            }
            if (stream[j].time_s - stream[picks.back()].time_s > 2.0 * spec.slot_interval_s + eps) {
                gap = true;
                break;
            }
            picks.push_back(j);
        }
        if (!complete) {
            break;
        }
        if (gap) {
            ++out.skipped;
            std::ostringstream msg;
            msg << "window at t=" << stream[i].time_s << " s skipped: gap exceeds twice the slot interval";
            out.warnings.push_back(msg.str());
            continue;
        }
        Sample s;
        s.freq_count = freqs;
        s.slot_count = spec.slot_count;
        s.inputs = CMatrix::Zero(static_cast<Eigen::Index>(spec.port_count), static_cast<Eigen::Index>(s.columns()));
        for (std::size_t slot = 0; slot < picks.size(); ++slot) {
            const auto& frame = stream[picks[slot]];
            s.inputs.block(static_cast<Eigen::Index>(spec.first_antenna_port), static_cast<Eigen::Index>(slot * freqs),
                           static_cast<Eigen::Index>(spec.antenna_count), static_cast<Eigen::Index>(freqs)) =
                frame.values;
        }
        s.label = transition_label(stream[picks.front()].pose, stream[picks.back()].pose);
        out.samples.push_back(std::move(s));
    }
    return out;
}

std::vector<std::size_t> class_counts(const std::vector<Sample>& samples, std::size_t class_count) {
    std::vector<std::size_t> counts(class_count, 0);
    for (const auto& s : samples) {
        if (s.label >= class_count) {
            throw ValidationError("label " + std::to_string(s.label) + " out of range");
        }
        ++counts[s.label];
    }
    return counts;
}

std::vector<Sample> balance_classes(const std::vector<Sample>& samples, std::size_t class_count,
                                    std::uint64_t seed) {
    const auto counts = class_counts(samples, class_count);
    const std::size_t target = *std::min_element(counts.begin(), counts.end());
    std::vector<bool> keep(samples.size(), false);
    for (std::size_t c = 0; c < class_count; ++c) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples[i].label == c) {
                idx.push_back(i);
            }
        }
        Rng rng(derive_seed(seed, c));
        rng.shuffle(idx);
        for (std::size_t k = 0; k < target; ++k) {
            keep[idx[k]] = true;
        }
    }
    std::vector<Sample> out;
    out.reserve(target * class_count);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (keep[i]) {
            out.push_back(samples[i]);
        }
    }
    return out;
}

void GestureStreamConfig::validate() const {
    if (repetitions == 0 || takes == 0) {
        throw ConfigError("gesture stream needs at least one repetition and take");
    }
    if (!(frame_period_s > 0.0) || !(hold_s >= frame_period_s)) {
        throw ConfigError("gesture stream needs frame_period_s > 0 and hold_s >= frame_period_s");
    }
    if (!(take_gap_s >= 0.0) || !(noise_std >= 0.0) || !(take_drift >= 0.0) || !(pose_variation >= 0.0) ||
        !(pose_contrast >= 0.0)) {
        throw ConfigError("gesture stream gap, noise, drift, variation and contrast must be non-negative");
    }
}

std::vector<GestureFrame> synth_gesture_stream(const GestureStreamConfig& cfg, const GestureWindowSpec& spec) {
    cfg.validate();
    spec.validate();
    const std::size_t antennas = spec.antenna_count;
    const std::size_t freqs = spec.frequencies_hz.size();

    // Multi-path response: amplitude and excess path per antenna.
    const auto multipath = [&](std::uint64_t stream) {
        Rng rng(derive_seed(cfg.seed, stream));
        CMatrix sig = CMatrix::Zero(static_cast<Eigen::Index>(antennas), static_cast<Eigen::Index>(freqs));
        for (std::size_t m = 0; m < kPathsPerPose; ++m) {
            const double amp = rng.uniform(0.2, 1.0) / static_cast<double>(kPathsPerPose);
            const double base_path = rng.uniform(0.3, 1.2);
            const double tilt = rng.uniform(-0.05, 0.05);
            for (std::size_t k = 0; k < antennas; ++k) {
                const double path = base_path + tilt * static_cast<double>(k) + rng.uniform(0.0, 0.02);
                for (std::size_t f = 0; f < freqs; ++f) {
                    const double phase = -2.0 * std::numbers::pi * spec.frequencies_hz[f] * path / kSpeedOfLight;
                    sig(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(f)) += std::polar(amp, phase);
                }
            }
        }
        return sig;
    };
    const CMatrix hand = multipath(999);
    std::vector<CMatrix> signatures;
    for (std::size_t p = 0; p < kPoseCount; ++p) {
        signatures.push_back(hand + cfg.pose_contrast * multipath(1000 + p));
    }

    const auto frames_per_hold = static_cast<std::size_t>(std::llround(cfg.hold_s / cfg.frame_period_s));
    const std::size_t frames_per_take = cfg.repetitions * kTransitions.size() * 2 * frames_per_hold;
    const double take_span = static_cast<double>(frames_per_take) * cfg.frame_period_s;

    std::vector<GestureFrame> stream;
    stream.reserve(frames_per_take * cfg.takes);
    Rng noise(derive_seed(cfg.seed, 1));
    for (std::size_t take = 0; take < cfg.takes; ++take) {
        Rng drift_rng(derive_seed(cfg.seed, 2000 + take));
        CVector drift(static_cast<Eigen::Index>(antennas));
        for (std::size_t k = 0; k < antennas; ++k) {
            drift[static_cast<Eigen::Index>(k)] =
                Complex(1.0 + cfg.take_drift * drift_rng.normal(), cfg.take_drift * drift_rng.normal());
        }
        const double t0 = static_cast<double>(take) * (take_span + cfg.take_gap_s);
        std::size_t frame = 0;
        for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
            for (const auto& tr : kTransitions) {
                for (const Pose pose : {tr.start, tr.end}) {
                    CVector variation(static_cast<Eigen::Index>(antennas));
                    for (Eigen::Index k = 0; k < variation.size(); ++k) {
                        variation[k] = drift[k] * Complex(1.0 + cfg.pose_variation * noise.normal(),
                                                          cfg.pose_variation * noise.normal());
                    }
                    const CMatrix held = variation.asDiagonal() * signatures[static_cast<std::size_t>(pose)];
                    for (std::size_t h = 0; h < frames_per_hold; ++h, ++frame) {
                        GestureFrame f;
                        f.time_s = t0 + static_cast<double>(frame) * cfg.frame_period_s;
                        f.pose = pose;
                        f.values = held;
                        for (Eigen::Index r = 0; r < f.values.rows(); ++r) {
                            for (Eigen::Index c = 0; c < f.values.cols(); ++c) {
                                f.values(r, c) += Complex(noise.normal(), noise.normal()) * (cfg.noise_std / std::sqrt(2.0));
                            }
                        }
                        stream.push_back(std::move(f));
                    }
                }
            }
        }
    }
    return stream;
}

void write_gesture_stream(const std::filesystem::path& path, const std::vector<GestureFrame>& stream) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write " + path.string());
    }
    const Eigen::Index antennas = stream.empty() ? 0 : stream.front().values.rows();
    const Eigen::Index freqs = stream.empty() ? 0 : stream.front().values.cols();
    out << "spnn-gesture v1 antennas=" << antennas << " freqs=" << freqs << '\n';
    char buf[64];
    for (const auto& f : stream) {
        if (f.values.rows() != antennas || f.values.cols() != freqs) {
            throw ValidationError("gesture stream frames have inconsistent shapes");
        }
        std::snprintf(buf, sizeof buf, "%.17g", f.time_s);
        out << buf << ' ' << pose_name(f.pose);
        for (Eigen::Index k = 0; k < antennas; ++k) {
            for (Eigen::Index c = 0; c < freqs; ++c) {
                std::snprintf(buf, sizeof buf, " %.17g %.17g", f.values(k, c).real(), f.values(k, c).imag());
                out << buf;
            }
        }
        out << '\n';
    }
    if (!out) {
        throw ValidationError("write failed for " + path.string());
    }
}

std::vector<GestureFrame> read_gesture_stream(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(path.string(), 0, "cannot open gesture stream");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(path.string(), 1, "missing header");
    }
    std::istringstream header(line);
    std::string magic;
    std::string version;
    std::string a_field;
    std::string f_field;
    header >> magic >> version >> a_field >> f_field;
    if (magic != "spnn-gesture" || version != "v1" || a_field.rfind("antennas=", 0) != 0 ||
        f_field.rfind("freqs=", 0) != 0) {
        throw ParseError(path.string(), 1, "expected 'spnn-gesture v1 antennas=A freqs=F'");
    }
    long antennas = 0;
    long freqs = 0;
    try {
        antennas = std::stol(a_field.substr(9));
        freqs = std::stol(f_field.substr(6));
    } catch (const std::exception&) {
        throw ParseError(path.string(), 1, "bad antenna or frequency count");
    }
    if (antennas < 0 || freqs < 0) {
        throw ParseError(path.string(), 1, "negative dimensions");
    }
    std::vector<GestureFrame> stream;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::istringstream ls(line);
        GestureFrame f;
        std::string pose;
        if (!(ls >> f.time_s >> pose)) {
            throw ParseError(path.string(), lineno, "expected time and pose");
        }
        try {
            f.pose = parse_pose(pose);
        } catch (const ParseError& e) {
            throw ParseError(path.string(), lineno, e.what());
        }
        f.values.resize(antennas, freqs);
        for (long k = 0; k < antennas; ++k) {
            for (long c = 0; c < freqs; ++c) {
                double re = 0.0;
                double im = 0.0;
                if (!(ls >> re >> im)) {
                    throw ParseError(path.string(), lineno, "too few values");
                }
                f.values(k, c) = Complex(re, im);
            }
        }
        std::string extra;
        if (ls >> extra) {
            throw ParseError(path.string(), lineno, "trailing values");
        }
        stream.push_back(std::move(f));
    }
    return stream;
}

void GesturePipelineConfig::validate() const {
    window.validate();
    stream.validate();
    train.validate();
    mesh.validate();
    if (mesh.port_count != window.port_count) {
        throw ConfigError("mesh port count differs from the gesture window port count");
    }
    if (phase_layers == 0) {
        throw ConfigError("gesture network needs at least one phase layer");
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train_fraction must lie in (0, 1)");
    }
    if (!(feature_level > 0.0)) {
        throw ConfigError("feature_level must be positive");
    }
}

NetworkSpec make_gesture_network(const GesturePipelineConfig& cfg) {
    const DiffractionLayer mesh = synth_coupler_mesh(cfg.mesh);
    NetworkSpec net = make_stack(mesh.matrix, cfg.phase_layers, 1, mesh.source);
    net.input_port_mask.assign(net.port_count, false);
    for (std::size_t k = 0; k < cfg.window.antenna_count; ++k) {
        net.input_port_mask.at(cfg.window.first_antenna_port + k) = true;
    }
    net.detector_ports = cfg.window.detector_ports;
    net.validate();
    return net;
}

GestureRunResult train_gesture_samples(const std::vector<Sample>& samples, const GesturePipelineConfig& cfg) {
    cfg.validate();
    const auto balanced = balance_classes(samples, kGestureClassCount, cfg.train.seed);
    if (balanced.empty()) {
        throw ValidationError("gesture dataset has an empty class; nothing to train on");
    }
    std::vector<std::size_t> labels;
    labels.reserve(balanced.size());
    for (const auto& s : balanced) {
        labels.push_back(s.label);
    }
    const SplitIndices split = stratified_split(labels, cfg.train_fraction, cfg.train.seed);
    auto train = gather(balanced, split.train);
    auto val = gather(balanced, split.validation);

    GestureRunResult out;
    out.class_counts = class_counts(balanced, kGestureClassCount);
    Model model{make_gesture_network(cfg),
                LinearHead::zeros(kGestureClassCount, cfg.window.detector_ports.size() * cfg.window.slot_count)};
    initialize_model(model, cfg.train.seed);
    out.input_scale = input_scale_for_level(model.net, train, cfg.feature_level);
    scale_inputs(train, out.input_scale);
    scale_inputs(val, out.input_scale);
    PretrainResult r = pretrain(model, train, val, cfg.train);
    out.model = std::move(r.model);
    out.history = std::move(r.history);
    out.diverged = r.diverged;
    out.validation = evaluate(out.model, val);
    return out;
}

}  // namespace spnn
