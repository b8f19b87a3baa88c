#pragma once

// Merging of per-texture boundary sets into one set shared by a whole dictionary.
//
// Pipeline: detect a set per spectrum, locate the largest maximum on each of its
// supports, take the union, drop supports that hold none of those maxima, then drop
// supports narrower than a threshold. Both pruning stages replace the two delimiters
// of an offending support by their midpoint; when one delimiter is an axis endpoint
// the interior delimiter is removed instead.

#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <tuple>
#include <vector>

#include "ewtseg/spectral.hpp"

namespace ewtseg {

/// Position of the largest spectrum value on each support of a boundary set.
struct MaximaSet {
    std::vector<double> positions;
};

struct MergeConfig {
    double min_width = 0.2;  // supports narrower than this are merged

    void validate(double domain_max = kPi) const {
        if (!(min_width > 0.0) || !(min_width < domain_max)) throw InputError("merge threshold must lie in (0, domain_max)");
    }
};

inline constexpr double kRadialMinWidth = 0.2;
inline constexpr double kAngularMinWidth = 0.07;
inline constexpr double kUnionTolerance = 1e-9;

inline MaximaSet local_maxima(const Spectrum1D& spectrum, const BoundarySet& bs) {
    if (spectrum.axis != bs.axis) throw InputError("local_maxima: axis mismatch");
    MaximaSet out;
    for (std::size_t s = 0; s + 1 < bs.values.size(); ++s) {
        const double lo = bs.values[s], hi = bs.values[s + 1];
        int best = -1;
        for (int i = 0; i < static_cast<int>(spectrum.size()); ++i) {
            const double p = spectrum.positions[i];
            if (p < lo || p > hi) continue;
            if (best < 0 || spectrum.samples[i] > spectrum.samples[best]) best = i;
        }
        out.positions.push_back(best >= 0 ? spectrum.positions[best] : 0.5 * (lo + hi));
    }
    return out;
}

inline BoundarySet union_boundaries(std::span<const BoundarySet> sets) {
    if (sets.empty()) throw InputError("union_boundaries: empty input");
    const auto& first = sets.front();
    std::vector<double> all;
    for (const auto& s : sets) {
        if (s.axis != first.axis || s.domain_max != first.domain_max || s.origin != first.origin)
            throw InputError("union_boundaries: sets live on different axes");
        all.insert(all.end(), s.values.begin(), s.values.end());
    }
    std::sort(all.begin(), all.end());
    BoundarySet out{{}, first.axis, first.domain_max, first.origin};
    for (double v : all)
        if (out.values.empty() || v - out.values.back() > kUnionTolerance) out.values.push_back(v);
    return out;
}

inline BoundarySet prune_unsupported(const BoundarySet& bs, std::span<const MaximaSet> maxima) {
    std::vector<double> lambdas;
    for (const auto& m : maxima) lambdas.insert(lambdas.end(), m.positions.begin(), m.positions.end());
    std::sort(lambdas.begin(), lambdas.end());
    auto supported = [&](double lo, double hi) {
        auto it = std::lower_bound(lambdas.begin(), lambdas.end(), lo);
        return it != lambdas.end() && *it <= hi;
    };

    BoundarySet out = bs;
    auto& b = out.values;
    std::size_t j = 0;
    // Single left-to-right sweep: a merge only widens the supports on either side, so
    // supports already accepted stay accepted and the scan resumes at the merged one.
    while (j + 1 < b.size()) {
        if (supported(b[j], b[j + 1]) || b.size() == 2) {
            ++j;
            continue;
        }
        if (j == 0) {
            b.erase(b.begin() + 1);
        } else if (j + 2 == b.size()) {
            b.erase(b.begin() + static_cast<std::ptrdiff_t>(j));
            --j;
        } else {
            b[j] = 0.5 * (b[j] + b[j + 1]);
            b.erase(b.begin() + static_cast<std::ptrdiff_t>(j) + 1);
        }
    }
    return out;
}

inline BoundarySet prune_narrow(const BoundarySet& bs, const MergeConfig& cfg) {
    cfg.validate(bs.domain_max);
    const int n = static_cast<int>(bs.values.size());
    std::vector<double> val = bs.values;
    std::vector<int> prev(n), next(n);
    for (int i = 0; i < n; ++i) {
        prev[i] = i - 1;
        next[i] = i + 1 < n ? i + 1 : -1;
    }
    const int first = 0, last = n - 1;

    // Supports keyed by (width, left position); the left node id identifies them.
    using Key = std::tuple<double, double, int>;
    std::set<Key> queue;
    auto key = [&](int i) { return Key{val[next[i]] - val[i], val[i], i}; };
    for (int i = 0; i + 1 < n; ++i) queue.insert(key(i));
    auto drop = [&](int i) {
        if (i >= 0 && next[i] >= 0) queue.erase(key(i));
    };
    auto unlink = [&](int i) {
        next[prev[i]] = next[i];
        prev[next[i]] = prev[i];
    };

    int alive = n;
    while (alive > 2 && !queue.empty()) {
        const auto [width, pos, left] = *queue.begin();
        if (!(width < cfg.min_width)) break;
        const int right = next[left];
        if (left == first) {
            drop(left);
            drop(right);
            unlink(right);
            queue.insert(key(left));
        } else if (right == last) {
            drop(prev[left]);
            drop(left);
            const int p = prev[left];
            unlink(left);
            queue.insert(key(p));
        } else {
            drop(prev[left]);
            drop(left);
            drop(right);
            val[left] = 0.5 * (val[left] + val[right]);
            unlink(right);
            queue.insert(key(prev[left]));
            queue.insert(key(left));
        }
        --alive;
    }

    BoundarySet out{{}, bs.axis, bs.domain_max, bs.origin};
    for (int i = first; i >= 0; i = next[i]) out.values.push_back(val[i]);
    return out;
}

/// Steps 3-5 of the merge: union, remove unsupported supports, remove narrow ones.
inline BoundarySet merge_detected(std::span<const BoundarySet> sets, std::span<const MaximaSet> maxima,
                                  const MergeConfig& cfg) {
    return prune_narrow(prune_unsupported(union_boundaries(sets), maxima), cfg);
}

// ---------------------------------------------------------------------------
// Angular seam handling: the angular axis is periodic, so merging happens in a
// frame whose origin is a genuinely detected boundary.

inline double wrap_axis(double v, double period) {
    double r = std::fmod(v, period);
    if (r < 0) r += period;
    if (r >= period || period - r < 1e-12) r = 0.0;
    return r;
}

/// Shifts a periodic spectrum so that axis coordinate `origin` becomes position 0.
inline Spectrum1D rotate_spectrum(const Spectrum1D& s, double origin) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) pts.emplace_back(wrap_axis(s.positions[i] - origin, s.domain_max), s.samples[i]);
    std::sort(pts.begin(), pts.end());
    Spectrum1D out;
    out.axis = s.axis;
    out.domain_max = s.domain_max;
    for (auto [p, v] : pts) {
        out.positions.push_back(p);
        out.samples.push_back(v);
    }
    return out;
}

/// Re-expresses a detected angular set in the frame starting at `origin`. The seam of
/// the unrotated frame is not a detected boundary and is dropped.
inline BoundarySet rotate_boundaries(const BoundarySet& bs, double origin) {
    std::vector<double> interior;
    for (double v : bs.interior()) interior.push_back(wrap_axis(v - origin, bs.domain_max));
    return make_boundaries(bs.axis, std::move(interior), origin, bs.domain_max);
}

/// Axis coordinate of a boundary value of a (possibly rotated) set.
inline double axis_position(const BoundarySet& bs, double value) {
    return bs.axis == Axis::angular ? wrap_axis(bs.origin + value, bs.domain_max) : value;
}

struct MergeTrace {
    std::vector<BoundarySet> detected;  // per spectrum, in the merge frame
    std::vector<MaximaSet> maxima;
    BoundarySet united;
    BoundarySet supported;
    BoundarySet final_set;
};

inline MergeTrace merge_boundary_sets_traced(std::span<const Spectrum1D> spectra, const MergeConfig& cfg,
                                             const ScaleSpaceConfig& sscfg) {
    if (spectra.empty()) throw InputError("merge_boundary_sets: no spectra");
    const Axis axis = spectra.front().axis;
    for (const auto& s : spectra)
        if (s.axis != axis || s.domain_max != spectra.front().domain_max)
            throw InputError("merge_boundary_sets: spectra on different axes");
    cfg.validate(spectra.front().domain_max);

    MergeTrace t;
    for (const auto& s : spectra) t.detected.push_back(detect_boundaries(s, sscfg));

    std::vector<Spectrum1D> frame(spectra.begin(), spectra.end());
    if (axis == Axis::angular) {
        double origin = 0.0;
        for (const auto& d : t.detected)
            if (d.values.size() > 2) {
                origin = d.values[1];
                break;
            }
        if (origin != 0.0) {
            for (auto& d : t.detected) d = rotate_boundaries(d, origin);
            for (auto& s : frame) s = rotate_spectrum(s, origin);
        }
    }

    for (std::size_t i = 0; i < frame.size(); ++i) t.maxima.push_back(local_maxima(frame[i], t.detected[i]));
    t.united = union_boundaries(t.detected);
    t.supported = prune_unsupported(t.united, t.maxima);
    t.final_set = prune_narrow(t.supported, cfg);
    return t;
}

inline BoundarySet merge_boundary_sets(std::span<const Spectrum1D> spectra, const MergeConfig& cfg,
                                       const ScaleSpaceConfig& sscfg = {}) {
    return merge_boundary_sets_traced(spectra, cfg, sscfg).final_set;
}

}  // namespace ewtseg
