#pragma once

// Pixelwise classifier over texture descriptors: softmax regression or a one-hidden-
// layer tanh perceptron, trained by mini-batch Adam on mean cross-entropy, plus the
// small-region refinement applied to predicted label maps.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ewtseg/common.hpp"
#include "ewtseg/components.hpp"
#include "ewtseg/features.hpp"

namespace ewtseg {

enum class Architecture { softmax_linear, mlp_1hidden };

inline const char* to_string(Architecture a) { return a == Architecture::softmax_linear ? "softmax_linear" : "mlp_1hidden"; }

inline Architecture parse_architecture(const std::string& s) {
    if (s == "softmax_linear" || s == "softmax") return Architecture::softmax_linear;
    if (s == "mlp_1hidden" || s == "mlp") return Architecture::mlp_1hidden;
    throw InputError("unknown architecture '" + s + "'");
}

struct ModelSpec {
    Architecture arch = Architecture::softmax_linear;
    int hidden = 16;
    int classes = 2;
};

/// Parameters are stored flat. softmax: W (K x C, row-major), b (C).
/// mlp: W1 (K x H), b1 (H), W2 (H x C), b2 (C).
struct ClassifierModel {
    Architecture arch = Architecture::softmax_linear;
    int input_dim = 0;
    int hidden = 0;
    int classes = 0;
    Eigen::VectorXd params;

    [[nodiscard]] static Eigen::Index parameter_count(Architecture arch, int k, int h, int c) {
        if (arch == Architecture::softmax_linear) return static_cast<Eigen::Index>(k) * c + c;
        return static_cast<Eigen::Index>(k) * h + h + static_cast<Eigen::Index>(h) * c + c;
    }

    void validate() const {
        if (input_dim <= 0 || classes <= 0) throw InputError("model: dimensions must be positive");
        if (arch == Architecture::mlp_1hidden && hidden <= 0) throw InputError("model: hidden width must be positive");
        if (params.size() != parameter_count(arch, input_dim, hidden, classes)) throw InputError("model: parameter count mismatch");
        if (!params.allFinite()) throw InputError("model: non-finite parameters");
    }
};

struct TrainConfig {
    double learning_rate = 1e-3;
    double weight_decay = 1e-4;
    double beta1 = 0.95;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    int epochs = 100;
    int batch_size = 1024;  // <= 0 means full batch
    unsigned long long seed = 0;

    void validate() const {
        if (!(learning_rate > 0.0)) throw InputError("learning rate must be positive");
        if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) throw InputError("Adam betas must lie in (0,1)");
        if (!(weight_decay >= 0.0) || !(adam_epsilon > 0.0)) throw InputError("invalid weight decay or Adam epsilon");
        if (epochs < 0) throw InputError("epochs must be non-negative");
    }
};

struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    long long step = 0;

    explicit AdamState(Eigen::Index n = 0) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

/// Adam with bias correction and decoupled weight decay.
inline void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state, const TrainConfig& cfg) {
    if (params.size() != grads.size() || state.m.size() != params.size()) throw InputError("adam_step: shape mismatch");
    if (!grads.allFinite()) throw NumericalError("adam_step: non-finite gradient");
    ++state.step;
    params *= 1.0 - cfg.learning_rate * cfg.weight_decay;
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grads;
    state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grads.cwiseProduct(grads);
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    params.array() -= cfg.learning_rate * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + cfg.adam_epsilon);
}

inline ClassifierModel init_model(int input_dim, const ModelSpec& spec, unsigned long long seed) {
    if (input_dim <= 0 || spec.classes < 1) throw InputError("init_model: invalid dimensions");
    ClassifierModel m;
    m.arch = spec.arch;
    m.input_dim = input_dim;
    m.hidden = spec.arch == Architecture::mlp_1hidden ? spec.hidden : 0;
    m.classes = spec.classes;
    m.params = Eigen::VectorXd::Zero(ClassifierModel::parameter_count(m.arch, input_dim, m.hidden, m.classes));

    std::mt19937_64 rng(seed);
    auto fill = [&](Eigen::Index offset, int fan_in, int fan_out) {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(fan_in) * fan_out; ++i) m.params(offset + i) = dist(rng);
    };
    if (m.arch == Architecture::softmax_linear) {
        fill(0, input_dim, m.classes);
    } else {
        fill(0, input_dim, m.hidden);
        fill(static_cast<Eigen::Index>(input_dim) * m.hidden + m.hidden, m.hidden, m.classes);
    }
    return m;
}

namespace detail {

using RowMap = Eigen::Map<const RowMatrix>;
using MutRowMap = Eigen::Map<RowMatrix>;

struct Layers {
    RowMatrix hidden;  // post-activation, empty for softmax
    RowMatrix logits;
};

inline Layers forward_pass(const ClassifierModel& m, const Eigen::Ref<const RowMatrix>& x) {
    const int k = m.input_dim, c = m.classes;
    const double* p = m.params.data();
    Layers out;
    if (m.arch == Architecture::softmax_linear) {
        RowMap w(p, k, c);
        Eigen::Map<const Eigen::RowVectorXd> b(p + static_cast<Eigen::Index>(k) * c, c);
        out.logits = (x * w).rowwise() + b;
    } else {
        const int h = m.hidden;
        RowMap w1(p, k, h);
        Eigen::Map<const Eigen::RowVectorXd> b1(p + static_cast<Eigen::Index>(k) * h, h);
        const double* p2 = p + static_cast<Eigen::Index>(k) * h + h;
        RowMap w2(p2, h, c);
        Eigen::Map<const Eigen::RowVectorXd> b2(p2 + static_cast<Eigen::Index>(h) * c, c);
        out.hidden = ((x * w1).rowwise() + b1).array().tanh().matrix();
        out.logits = (out.hidden * w2).rowwise() + b2;
    }
    return out;
}

}  // namespace detail

/// Raw class scores (logits), one row per sample.
inline RowMatrix class_scores(const ClassifierModel& m, const Eigen::Ref<const RowMatrix>& x) {
    if (x.cols() != m.input_dim) throw InputError("class_scores: feature dimension does not match the model");
    return detail::forward_pass(m, x).logits;
}

/// Mean cross-entropy over the rows of x and its gradient with respect to the flat
/// parameter vector.
inline double loss_and_gradient(const ClassifierModel& m, const Eigen::Ref<const RowMatrix>& x, std::span<const int> y,
                                Eigen::VectorXd& grad) {
    if (x.cols() != m.input_dim || static_cast<std::size_t>(x.rows()) != y.size()) throw InputError("loss: shape mismatch");
    const Eigen::Index n = x.rows();
    const int k = m.input_dim, c = m.classes;
    auto layers = detail::forward_pass(m, x);
    RowMatrix& z = layers.logits;

    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mx = z.row(i).maxCoeff();
        z.row(i).array() -= mx;
        const double lse = std::log(z.row(i).array().exp().sum());
        loss -= z(i, y[i]) - lse;
        z.row(i) = (z.row(i).array() - lse).exp().matrix();  // probabilities
        z(i, y[i]) -= 1.0;
    }
    loss /= static_cast<double>(n);
    z /= static_cast<double>(n);  // dL/dlogits

    grad.setZero(m.params.size());
    double* g = grad.data();
    if (m.arch == Architecture::softmax_linear) {
        detail::MutRowMap(g, k, c) = x.transpose() * z;
        Eigen::Map<Eigen::RowVectorXd>(g + static_cast<Eigen::Index>(k) * c, c) = z.colwise().sum();
    } else {
        const int h = m.hidden;
        const double* p2 = m.params.data() + static_cast<Eigen::Index>(k) * h + h;
        detail::RowMap w2(p2, h, c);
        double* g2 = g + static_cast<Eigen::Index>(k) * h + h;
        detail::MutRowMap(g2, h, c) = layers.hidden.transpose() * z;
        Eigen::Map<Eigen::RowVectorXd>(g2 + static_cast<Eigen::Index>(h) * c, c) = z.colwise().sum();
        const RowMatrix dpre = ((z * w2.transpose()).array() * (1.0 - layers.hidden.array().square())).matrix();
        detail::MutRowMap(g, k, h) = x.transpose() * dpre;
        Eigen::Map<Eigen::RowVectorXd>(g + static_cast<Eigen::Index>(k) * h, h) = dpre.colwise().sum();
    }
    return loss;
}

struct TrainResult {
    ClassifierModel model;
    std::vector<double> epoch_loss;   // full-data loss after each epoch
    std::vector<int> absent_classes;  // classes with no training sample (warning)
};

inline TrainResult train(const Eigen::Ref<const RowMatrix>& x, std::span<const int> y, const ModelSpec& spec,
                         const TrainConfig& cfg) {
    cfg.validate();
    if (static_cast<std::size_t>(x.rows()) != y.size() || x.rows() == 0) throw InputError("train: features/labels size mismatch");
    if (spec.classes < 2) throw InputError("train: need at least two classes");
    if (!x.allFinite()) throw InputError("train: non-finite features");

    TrainResult result;
    std::vector<int> counts(spec.classes, 0);
    for (int label : y) {
        if (label < 0 || label >= spec.classes) throw InputError("train: label out of range");
        ++counts[label];
    }
    for (int c = 0; c < spec.classes; ++c)
        if (counts[c] == 0) result.absent_classes.push_back(c);

    result.model = init_model(static_cast<int>(x.cols()), spec, cfg.seed);
    auto& model = result.model;
    AdamState state(model.params.size());
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

    const Eigen::Index n = x.rows();
    const Eigen::Index batch = cfg.batch_size <= 0 ? n : std::min<Eigen::Index>(cfg.batch_size, n);
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    RowMatrix xb(batch, x.cols());
    std::vector<int> yb(batch);
    Eigen::VectorXd grad;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (batch < n) std::shuffle(order.begin(), order.end(), rng);
        for (Eigen::Index start = 0; start < n; start += batch) {
            const Eigen::Index len = std::min(batch, n - start);
            if (batch == n) {
                loss_and_gradient(model, x, y, grad);
            } else {
                xb.resize(len, x.cols());
                yb.resize(len);
                for (Eigen::Index i = 0; i < len; ++i) {
                    xb.row(i) = x.row(order[start + i]);
                    yb[i] = y[order[start + i]];
                }
                loss_and_gradient(model, xb, yb, grad);
            }
            adam_step(model.params, grad, state, cfg);
        }
        Eigen::VectorXd scratch;
        result.epoch_loss.push_back(loss_and_gradient(model, x, y, scratch));
        if (!std::isfinite(result.epoch_loss.back())) throw NumericalError("train: loss diverged");
    }
    return result;
}

/// Per-row argmax of the class scores; ties go to the lower class index.
inline std::vector<int> predict_labels(const Eigen::Ref<const RowMatrix>& x, const ClassifierModel& model) {
    const RowMatrix s = class_scores(model, x);
    std::vector<int> out(s.rows());
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        int best = 0;
        for (int c = 1; c < model.classes; ++c)
            if (s(i, c) > s(i, best)) best = c;
        out[i] = best;
    }
    return out;
}

inline SegmentationMap predict(const FeatureTensor& features, const ClassifierModel& model) {
    if (features.features() != model.input_dim) throw InputError("predict: feature dimension does not match the model");
    SegmentationMap map{Grid<int>(features.width, features.height), model.classes};
    map.labels.data = predict_labels(features.values, model);
    return map;
}

// ---------------------------------------------------------------------------
// Refinement

inline constexpr double kDefaultRefineFraction = 0.005;

/// Relabels every 4-connected region smaller than min_fraction * Np with the class of
/// its largest adjacent region, smallest region first, until none remains.
/// Ties: smaller first-pixel raster index wins, both for order and for the absorber.
inline SegmentationMap refine(const SegmentationMap& map, double min_fraction = kDefaultRefineFraction) {
    if (!(min_fraction >= 0.0 && min_fraction < 1.0)) throw InputError("refine: fraction must lie in [0,1)");
    const auto comps = label_components(map.labels);
    const int n = comps.count();
    const double threshold = min_fraction * static_cast<double>(map.labels.size());

    std::vector<int> parent(n), size = comps.sizes, label = comps.label;
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };

    std::vector<std::set<int>> adj(n);
    const int w = map.labels.width, h = map.labels.height;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int a = comps.ids(x, y);
            if (x + 1 < w && comps.ids(x + 1, y) != a) {
                adj[a].insert(comps.ids(x + 1, y));
                adj[comps.ids(x + 1, y)].insert(a);
            }
            if (y + 1 < h && comps.ids(x, y + 1) != a) {
                adj[a].insert(comps.ids(x, y + 1));
                adj[comps.ids(x, y + 1)].insert(a);
            }
        }

    // Roots always carry the smallest component id of their group.
    std::set<std::pair<int, int>> small;
    for (int i = 0; i < n; ++i)
        if (size[i] < threshold) small.insert({size[i], i});

    while (!small.empty()) {
        const int c = small.begin()->second;
        small.erase(small.begin());

        std::set<int> neighbours;
        for (int a : adj[c]) {
            const int r = find(a);
            if (r != c) neighbours.insert(r);
        }
        if (neighbours.empty()) continue;  // whole image is one region
        int absorber = -1;
        for (int r : neighbours)
            if (absorber < 0 || size[r] > size[absorber]) absorber = r;
        const int new_label = label[absorber];

        std::vector<int> group{c};
        for (int r : neighbours)
            if (label[r] == new_label) group.push_back(r);
        const int root = *std::min_element(group.begin(), group.end());

        std::set<int> merged_adj;
        int merged_size = 0;
        for (int g : group) {
            small.erase({size[g], g});
            merged_size += size[g];
            merged_adj.insert(adj[g].begin(), adj[g].end());
            adj[g].clear();
            parent[g] = root;
        }
        parent[root] = root;
        std::set<int> resolved;
        for (int a : merged_adj) {
            const int r = find(a);
            if (r != root) resolved.insert(r);
        }
        adj[root] = std::move(resolved);
        size[root] = merged_size;
        label[root] = new_label;
        if (merged_size < threshold) small.insert({merged_size, root});
    }

    SegmentationMap out{Grid<int>(w, h), map.classes};
    for (std::size_t i = 0; i < out.labels.size(); ++i) out.labels.data[i] = label[find(comps.ids.data[i])];
    return out;
}

}  // namespace ewtseg
