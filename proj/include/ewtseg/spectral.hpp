#pragma once

// Pseudo-polar 1D spectra of an image and scale-space boundary detection on them.
//
// Axis conventions:
//   radial  - normalized frequency radius in [0, pi];
//   angular - a = theta + pi/2 in [0, pi), theta the orientation of the frequency
//             vector. The axis is periodic: a = 0 and a = pi are the same direction.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "ewtseg/common.hpp"
#include "ewtseg/fft.hpp"

namespace ewtseg {

enum class Axis { radial, angular };

inline const char* to_string(Axis a) { return a == Axis::radial ? "radial" : "angular"; }

inline constexpr int kAngularBins = 360;
inline constexpr int kMinSpectrumSamples = 8;

struct Spectrum1D {
    std::vector<double> samples;
    std::vector<double> positions;  // strictly increasing, within [0, domain_max]
    Axis axis = Axis::radial;
    double domain_max = kPi;

    [[nodiscard]] std::size_t size() const { return samples.size(); }

    void validate() const {
        if (samples.size() < static_cast<std::size_t>(kMinSpectrumSamples))
            throw InputError("spectrum needs at least 8 samples");
        if (positions.size() != samples.size()) throw InputError("spectrum positions/samples size mismatch");
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (!(samples[i] >= 0.0) || !std::isfinite(samples[i]))
                throw InputError("spectrum samples must be finite and non-negative");
            if (positions[i] < 0.0 || positions[i] > domain_max) throw InputError("spectrum position out of range");
            if (i > 0 && !(positions[i] > positions[i - 1])) throw InputError("spectrum positions must increase");
        }
    }
};

/// Evenly spaced radial spectrum: sample i sits at i*pi/(n-1).
inline Spectrum1D make_radial_spectrum(std::vector<double> samples) {
    Spectrum1D s;
    const auto n = samples.size();
    s.positions.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.positions[i] = n > 1 ? kPi * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    s.samples = std::move(samples);
    s.axis = Axis::radial;
    return s;
}

/// Angular spectrum over n bins of [0, pi); sample b sits at the bin centre.
inline Spectrum1D make_angular_spectrum(std::vector<double> samples) {
    Spectrum1D s;
    const auto n = samples.size();
    s.positions.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.positions[i] = kPi * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    s.samples = std::move(samples);
    s.axis = Axis::angular;
    return s;
}

/// Ordered boundaries of a 1D axis. values[0] == 0 and values.back() == domain_max.
/// For the angular axis, `origin` is the axis coordinate that value 0 maps to.
struct BoundarySet {
    std::vector<double> values;
    Axis axis = Axis::radial;
    double domain_max = kPi;
    double origin = 0.0;

    [[nodiscard]] std::size_t supports() const { return values.empty() ? 0 : values.size() - 1; }

    [[nodiscard]] std::vector<double> interior() const {
        if (values.size() <= 2) return {};
        return {values.begin() + 1, values.end() - 1};
    }

    void validate() const {
        if (values.size() < 2) throw InputError("boundary set needs at least two boundaries");
        if (values.front() != 0.0 || values.back() != domain_max)
            throw InputError("boundary set must start at 0 and end at domain_max");
        for (std::size_t i = 1; i < values.size(); ++i)
            if (!(values[i] > values[i - 1])) throw InputError("boundary set must be strictly increasing");
    }

    friend bool operator==(const BoundarySet&, const BoundarySet&) = default;
};

inline BoundarySet trivial_boundaries(Axis axis, double domain_max = kPi) {
    return BoundarySet{{0.0, domain_max}, axis, domain_max, 0.0};
}

inline BoundarySet make_boundaries(Axis axis, std::vector<double> interior, double origin = 0.0,
                                   double domain_max = kPi) {
    std::sort(interior.begin(), interior.end());
    BoundarySet b{{0.0}, axis, domain_max, origin};
    for (double v : interior)
        if (v > 0.0 && v < domain_max && v > b.values.back()) b.values.push_back(v);
    b.values.push_back(domain_max);
    return b;
}

struct PolarSpectra {
    Spectrum1D radial;
    Spectrum1D angular;
};

namespace detail {

// Empty bins take the linear interpolation of their nearest filled neighbours.
inline void fill_empty_bins(std::vector<double>& v, const std::vector<int>& counts, bool periodic) {
    const int n = static_cast<int>(v.size());
    std::vector<int> filled;
    for (int i = 0; i < n; ++i)
        if (counts[i] > 0) filled.push_back(i);
    if (filled.empty() || static_cast<int>(filled.size()) == n) return;
    for (int i = 0; i < n; ++i) {
        if (counts[i] > 0) continue;
        auto hi_it = std::upper_bound(filled.begin(), filled.end(), i);
        int lo, hi;
        double dlo, dhi;
        if (hi_it == filled.end() || hi_it == filled.begin()) {
            if (!periodic) {
                v[i] = v[hi_it == filled.end() ? filled.back() : filled.front()];
                continue;
            }
            lo = filled.back();
            hi = filled.front();
            dlo = (i - lo + n) % n;
            dhi = (hi - i + n) % n;
        } else {
            hi = *hi_it;
            lo = *(hi_it - 1);
            dlo = i - lo;
            dhi = hi - i;
        }
        v[i] = (v[lo] * dhi + v[hi] * dlo) / (dlo + dhi);
    }
}

}  // namespace detail

/// Radial and angular mean FFT-magnitude profiles. Each Cartesian frequency sample
/// votes into its nearest radial bin and its angular bin; DC is excluded from the
/// angular profile and samples beyond radius pi (the corners) from the radial one.
inline PolarSpectra polar_spectra(const Image& image) {
    if (image.width < 8 || image.height < 8) throw InputError("polar_spectra: image must be at least 8x8");
    for (double v : image.data)
        if (!std::isfinite(v)) throw InputError("polar_spectra: non-finite pixel");

    const Fft2D fft(image.width, image.height);
    const ComplexGrid f = fft.forward(image);

    const int min_dim = std::min(image.width, image.height);
    const double nyquist = min_dim / 2.0;
    const int radial_bins = std::max(kMinSpectrumSamples, min_dim / 2);

    std::vector<double> rsum(radial_bins, 0.0), asum(kAngularBins, 0.0);
    std::vector<int> rcount(radial_bins, 0), acount(kAngularBins, 0);

    for (int ky = 0; ky < image.height; ++ky) {
        const int fy = signed_frequency(ky, image.height);
        for (int kx = 0; kx < image.width; ++kx) {
            const int fx = signed_frequency(kx, image.width);
            const double mag = std::abs(f(kx, ky));
            const double r = kPi * std::hypot(fx, fy) / nyquist;
            if (r <= kPi + 1e-12) {
                const int b = static_cast<int>(std::lround(r / kPi * (radial_bins - 1)));
                rsum[b] += mag;
                ++rcount[b];
            }
            if (fx == 0 && fy == 0) continue;
            double a = std::fmod(std::atan2(static_cast<double>(fy), static_cast<double>(fx)) + kPi / 2, kPi);
            if (a < 0) a += kPi;
            const int b = std::min(kAngularBins - 1, static_cast<int>(a / kPi * kAngularBins));
            asum[b] += mag;
            ++acount[b];
        }
    }
    for (int i = 0; i < radial_bins; ++i)
        if (rcount[i]) rsum[i] /= rcount[i];
    for (int i = 0; i < kAngularBins; ++i)
        if (acount[i]) asum[i] /= acount[i];
    detail::fill_empty_bins(rsum, rcount, false);
    detail::fill_empty_bins(asum, acount, true);

    return {make_radial_spectrum(std::move(rsum)), make_angular_spectrum(std::move(asum))};
}

// ---------------------------------------------------------------------------
// Scale-space boundary detection

struct ScaleSpaceConfig {
    enum class Threshold { otsu, fixed };

    double step = 0.5;          // variance added per smoothing iteration
    int max_scale_steps = 200;  // number of smoothing iterations
    Threshold rule = Threshold::otsu;
    int fixed_threshold = 0;    // used when rule == fixed: keep persistence > k

    void validate() const {
        if (!(step > 0.0)) throw InputError("scale-space step must be positive");
        if (max_scale_steps < 2) throw InputError("scale-space needs at least 2 steps");
    }
};

/// One minimum tracked through the scale space.
struct MinimumCurve {
    int origin_index = 0;    // sample index in the unsmoothed spectrum
    int current_index = 0;   // last index where the curve was alive
    int persistence = 0;     // number of scale levels (including level 0) it survived
    std::vector<int> track;  // index at each level it survived
};

struct ScaleSpaceTrace {
    std::vector<MinimumCurve> curves;
    int threshold = 0;  // curves with persistence > threshold are kept
    std::vector<int> kept;
};

/// Indices of strict local minima. A run of equal values counts once (at its centre)
/// when both neighbours of the run are strictly larger. Non-periodic signals never
/// report their first or last sample.
inline std::vector<int> local_minima(const std::vector<double>& v, bool periodic) {
    const int n = static_cast<int>(v.size());
    std::vector<int> out;
    if (n < 3) return out;
    if (!periodic) {
        int i = 1;
        while (i < n - 1) {
            int j = i;
            while (j + 1 < n && v[j + 1] == v[i]) ++j;
            if (j < n - 1 && v[i - 1] > v[i] && v[j + 1] > v[i]) out.push_back((i + j) / 2);
            i = j + 1;
        }
        return out;
    }
    // Periodic: start scanning right after a position where the value changes.
    int start = -1;
    for (int i = 0; i < n; ++i)
        if (v[i] != v[(i + n - 1) % n]) {
            start = i;
            break;
        }
    if (start < 0) return out;
    int k = 0;
    while (k < n) {
        const int i = (start + k) % n;
        int len = 1;
        while (len < n && v[(i + len) % n] == v[i]) ++len;
        const double before = v[(i + n - 1) % n];
        const double after = v[(i + len) % n];
        if (before > v[i] && after > v[i]) out.push_back((i + (len - 1) / 2) % n);
        k += len;
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[i + radius];
    }
    for (auto& w : k) w /= sum;
    return k;
}

inline std::vector<double> smooth(const std::vector<double>& v, const std::vector<double>& kernel, bool periodic) {
    const int n = static_cast<int>(v.size());
    const int radius = static_cast<int>(kernel.size() / 2);
    std::vector<double> out(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
            int j = i + k;
            j = periodic ? ((j % n) + n) % n : reflect_index(j, n);
            acc += kernel[k + radius] * v[j];
        }
        out[i] = acc;
    }
    return out;
}

inline int circular_distance(int a, int b, int n, bool periodic) {
    const int d = std::abs(a - b);
    return periodic ? std::min(d, n - d) : d;
}

}  // namespace detail

/// Otsu threshold over integer persistence values: returns t such that the split
/// {p <= t} / {p > t} maximizes the between-class variance (smallest such t).
/// Returns nullopt when fewer than two distinct values exist.
inline std::optional<int> otsu_threshold(const std::vector<int>& values) {
    if (values.empty()) return std::nullopt;
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    if (*mn == *mx) return std::nullopt;
    const double n = static_cast<double>(values.size());
    const double total = std::accumulate(values.begin(), values.end(), 0.0);
    double best = -1.0;
    int best_t = *mn;
    for (int t = *mn; t < *mx; ++t) {
        double n0 = 0, s0 = 0;
        for (int v : values)
            if (v <= t) {
                ++n0;
                s0 += v;
            }
        const double n1 = n - n0;
        if (n0 == 0 || n1 == 0) continue;
        const double m0 = s0 / n0, m1 = (total - s0) / n1;
        const double between = n0 * n1 * (m0 - m1) * (m0 - m1);
        if (between > best) {
            best = between;
            best_t = t;
        }
    }
    return best_t;
}

/// Full scale-space trace: every minimum of the unsmoothed spectrum, followed across
/// repeated Gaussian smoothing by nearest-neighbour continuation.
inline ScaleSpaceTrace scale_space_trace(const Spectrum1D& spectrum, const ScaleSpaceConfig& cfg) {
    spectrum.validate();
    cfg.validate();
    const bool periodic = spectrum.axis == Axis::angular;
    const int n = static_cast<int>(spectrum.size());
    const auto kernel = detail::gaussian_kernel(std::sqrt(cfg.step));
    const int search_radius = static_cast<int>(kernel.size() / 2) + 1;

    ScaleSpaceTrace trace;
    for (int idx : local_minima(spectrum.samples, periodic))
        trace.curves.push_back(MinimumCurve{idx, idx, 1, {idx}});

    std::vector<double> level = spectrum.samples;
    std::vector<int> alive(trace.curves.size());
    std::iota(alive.begin(), alive.end(), 0);

    for (int step = 1; step <= cfg.max_scale_steps && !alive.empty(); ++step) {
        level = detail::smooth(level, kernel, periodic);
        const auto minima = local_minima(level, periodic);

        struct Candidate {
            int dist, curve, minimum;
        };
        std::vector<Candidate> cands;
        for (int c : alive)
            for (int m = 0; m < static_cast<int>(minima.size()); ++m) {
                const int d = detail::circular_distance(trace.curves[c].current_index, minima[m], n, periodic);
                if (d <= search_radius) cands.push_back({d, c, m});
            }
        std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
            return std::tie(a.dist, a.curve, a.minimum) < std::tie(b.dist, b.curve, b.minimum);
        });
        std::vector<char> curve_taken(trace.curves.size(), 0), min_taken(minima.size(), 0);
        for (const auto& c : cands) {
            if (curve_taken[c.curve] || min_taken[c.minimum]) continue;
            curve_taken[c.curve] = min_taken[c.minimum] = 1;
            auto& curve = trace.curves[c.curve];
            curve.current_index = minima[c.minimum];
            curve.track.push_back(curve.current_index);
            ++curve.persistence;
        }
        std::erase_if(alive, [&](int c) { return !curve_taken[c]; });
    }

    std::vector<int> persistence;
    for (const auto& c : trace.curves) persistence.push_back(c.persistence);

    if (cfg.rule == ScaleSpaceConfig::Threshold::fixed) {
        trace.threshold = cfg.fixed_threshold;
    } else if (auto t = otsu_threshold(persistence)) {
        trace.threshold = *t;
    } else {
        // All curves equally persistent: keep them only if they span the whole scale space.
        trace.threshold = cfg.max_scale_steps;
    }
    for (int i = 0; i < static_cast<int>(trace.curves.size()); ++i)
        if (trace.curves[i].persistence > trace.threshold) trace.kept.push_back(i);
    return trace;
}

/// Boundaries at the persistent minima of the spectrum (at their unsmoothed positions).
inline BoundarySet detect_boundaries(const Spectrum1D& spectrum, const ScaleSpaceConfig& cfg = {}) {
    const auto trace = scale_space_trace(spectrum, cfg);
    std::vector<double> interior;
    for (int i : trace.kept) interior.push_back(spectrum.positions[trace.curves[i].origin_index]);
    return make_boundaries(spectrum.axis, std::move(interior), 0.0, spectrum.domain_max);
}

}  // namespace ewtseg
