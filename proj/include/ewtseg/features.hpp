#pragma once

// Local-energy texture descriptors, ZCA whitening, dictionary-level bank construction
// and the colour (HSV value channel) path.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ewtseg/bank.hpp"
#include "ewtseg/boundaries.hpp"
#include "ewtseg/spectral.hpp"
#include "ewtseg/transform.hpp"

namespace ewtseg {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct FeatureConfig {
    int window = 1;            // odd side of the local-energy window
    bool drop_lowpass = true;  // omit the lowpass plane
    double zca_epsilon = 0.0;  // eigenvalue regularization

    void validate() const {
        if (window <= 0 || window % 2 == 0) throw InputError("feature window must be a positive odd integer");
        if (!(zca_epsilon >= 0.0)) throw InputError("zca epsilon must be non-negative");
    }
};

/// Np x K descriptors, one row per pixel in raster order.
struct FeatureTensor {
    int width = 0;
    int height = 0;
    RowMatrix values;

    [[nodiscard]] int pixels() const { return static_cast<int>(values.rows()); }
    [[nodiscard]] int features() const { return static_cast<int>(values.cols()); }
};

struct WhiteningTransform {
    Eigen::VectorXd mean;
    Eigen::MatrixXd matrix;  // symmetric K x K
};

namespace detail {

// Sliding s-wide box sum along rows of `in` with mirrored borders, written transposed
// so that two passes give the full 2D box sum.
inline Image box_sum_transposed(const Image& in, int s) {
    const int w = in.width, h = in.height, r = s / 2;
    Image out(h, w);
    std::vector<double> padded(static_cast<std::size_t>(w) + 2 * r);
    for (int y = 0; y < h; ++y) {
        for (int i = -r; i < w + r; ++i) padded[i + r] = in(reflect_index(i, w), y);
        double acc = 0.0;
        for (int i = 0; i < s; ++i) acc += padded[i];
        for (int x = 0; x < w; ++x) {
            out(y, x) = acc;
            if (x + 1 < w) acc += padded[x + s] - padded[x];
        }
    }
    return out;
}

}  // namespace detail

inline FeatureTensor local_energy(const CoefficientStack& stack, const FeatureConfig& cfg) {
    cfg.validate();
    const int first = cfg.drop_lowpass ? 1 : 0;
    const int k = std::max(0, stack.size() - first);
    FeatureTensor out{stack.width, stack.height, RowMatrix(static_cast<Eigen::Index>(stack.width) * stack.height, k)};
    for (int p = first; p < stack.size(); ++p) {
        Image sq = stack.planes[p];
        for (auto& v : sq.data) v *= v;
        if (cfg.window > 1) sq = detail::box_sum_transposed(detail::box_sum_transposed(sq, cfg.window), cfg.window);
        for (std::size_t i = 0; i < sq.size(); ++i) out.values(static_cast<Eigen::Index>(i), p - first) = sq.data[i];
    }
    return out;
}

inline WhiteningTransform fit_zca(const RowMatrix& x, double epsilon) {
    if (!(epsilon >= 0.0)) throw InputError("fit_zca: epsilon must be non-negative");
    if (x.rows() <= x.cols()) throw InputError("fit_zca: need more samples than features");
    if (!x.allFinite()) throw InputError("fit_zca: non-finite input");

    WhiteningTransform w;
    w.mean = x.colwise().mean().transpose();
    const RowMatrix centered = x.rowwise() - w.mean.transpose();
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw NumericalError("fit_zca: eigendecomposition failed");
    Eigen::VectorXd scale(eig.eigenvalues().size());
    for (Eigen::Index i = 0; i < scale.size(); ++i) {
        const double d = std::max(eig.eigenvalues()(i), 0.0) + epsilon;
        if (!(d > 0.0)) throw NumericalError("fit_zca: singular covariance (use a positive epsilon)");
        scale(i) = 1.0 / std::sqrt(d);
    }
    const Eigen::MatrixXd& p = eig.eigenvectors();
    w.matrix = p * scale.asDiagonal() * p.transpose();
    w.matrix = 0.5 * (w.matrix + w.matrix.transpose());
    if (!w.matrix.allFinite()) throw NumericalError("fit_zca: non-finite whitening matrix");
    return w;
}

inline WhiteningTransform fit_zca(const FeatureTensor& x, double epsilon) { return fit_zca(x.values, epsilon); }

/// Pools several tensors (e.g. all training images) before fitting.
inline WhiteningTransform fit_zca(std::span<const FeatureTensor> xs, double epsilon) {
    if (xs.empty()) throw InputError("fit_zca: no data");
    Eigen::Index rows = 0;
    for (const auto& x : xs) {
        if (x.features() != xs.front().features()) throw InputError("fit_zca: feature count differs across tensors");
        rows += x.values.rows();
    }
    RowMatrix all(rows, xs.front().features());
    Eigen::Index at = 0;
    for (const auto& x : xs) {
        all.middleRows(at, x.values.rows()) = x.values;
        at += x.values.rows();
    }
    return fit_zca(all, epsilon);
}

inline FeatureTensor apply_zca(const FeatureTensor& x, const WhiteningTransform& w) {
    if (x.features() != w.mean.size()) throw InputError("apply_zca: feature count does not match the whitening transform");
    FeatureTensor y{x.width, x.height, RowMatrix((x.values.rowwise() - w.mean.transpose()) * w.matrix)};
    return y;
}

inline Image v_channel(const ColorImage& rgb) {
    if (rgb.channels != 3) throw InputError("v_channel: expected a 3-channel image");
    Image out(rgb.width, rgb.height);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data[i] = std::max({rgb.data[3 * i], rgb.data[3 * i + 1], rgb.data[3 * i + 2]});
    return out;
}

// ---------------------------------------------------------------------------

struct DictionaryOptions {
    MergeConfig radial{kRadialMinWidth};
    MergeConfig angular{kAngularMinWidth};
    ScaleSpaceConfig scale_space{};
    int width = 0;  // target grid; 0 -> size of the first texture
    int height = 0;
};

struct DictionaryBoundaries {
    BoundarySet scales;
    BoundarySet angles;
};

inline DictionaryBoundaries dictionary_boundaries(std::span<const Image> textures, const DictionaryOptions& opt = {}) {
    if (textures.empty()) throw InputError("dictionary bank: no textures");
    std::vector<Spectrum1D> radial, angular;
    for (const auto& t : textures) {
        auto s = polar_spectra(t);
        radial.push_back(std::move(s.radial));
        angular.push_back(std::move(s.angular));
    }
    return {merge_boundary_sets(radial, opt.radial, opt.scale_space),
            merge_boundary_sets(angular, opt.angular, opt.scale_space)};
}

/// One filter bank shared by every texture of the dictionary.
inline CurveletBank build_dictionary_bank(std::span<const Image> textures, const DictionaryOptions& opt = {}) {
    const auto b = dictionary_boundaries(textures, opt);
    const int w = opt.width > 0 ? opt.width : textures.front().width;
    const int h = opt.height > 0 ? opt.height : textures.front().height;
    return build_bank(b.scales, b.angles, w, h);
}

/// Transform plus local energy, before whitening.
inline FeatureTensor raw_features(const Image& image, const CurveletBank& bank, const FeatureConfig& cfg) {
    return local_energy(forward(image, bank), cfg);
}

inline FeatureTensor extract_features(const Image& image, const CurveletBank& bank, const FeatureConfig& cfg,
                                      const WhiteningTransform& whitening) {
    return apply_zca(raw_features(image, bank, cfg), whitening);
}

struct Extraction {
    FeatureTensor features;
    WhiteningTransform whitening;
};

/// Fits a new whitening on this image and applies it.
inline Extraction extract_features(const Image& image, const CurveletBank& bank, const FeatureConfig& cfg) {
    FeatureTensor raw = raw_features(image, bank, cfg);
    WhiteningTransform w = fit_zca(raw, cfg.zca_epsilon);
    return {apply_zca(raw, w), std::move(w)};
}

}  // namespace ewtseg
