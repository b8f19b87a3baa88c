#pragma once

// Empirical curvelet filter bank: a radial lowpass plus polar wedges (ring x sector),
// all defined directly on the DFT grid. Filters are real, lie in [0,1] and their
// squares sum to one at every frequency sample, so the bank is a tight frame.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "ewtseg/common.hpp"
#include "ewtseg/fft.hpp"
#include "ewtseg/boundaries.hpp"
#include "ewtseg/spectral.hpp"

namespace ewtseg {

/// Classic C^3 transition polynomial: 0 below 0, 1 above 1, beta(x)+beta(1-x)=1.
inline double beta(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double x2 = x * x;
    return x2 * x2 * (35.0 - 84.0 * x + 70.0 * x2 - 20.0 * x2 * x);
}

struct BankConfig {
    double gamma = 0.05;        // radial transition half-width ratio
    double delta_theta = 0.1;   // angular transition half-width
};

inline constexpr double kDefaultGamma = 0.05;

/// Radii at which a ring starts. With no interior scale boundary the single ring
/// starts at pi, i.e. it only covers the corners of the grid beyond the lowpass.
inline std::vector<double> ring_starts(const BoundarySet& scales) {
    auto r = scales.interior();
    if (r.empty()) r.push_back(scales.domain_max);
    return r;
}

inline int sector_count(const BoundarySet& angles) { return static_cast<int>(angles.supports()); }

/// Largest gamma keeping consecutive radial transitions disjoint (exclusive bound).
inline double gamma_bound(const BoundarySet& scales) {
    const auto r = ring_starts(scales);
    double bound = 1.0;
    for (std::size_t i = 0; i + 1 < r.size(); ++i) bound = std::min(bound, (r[i + 1] - r[i]) / (r[i + 1] + r[i]));
    return bound;
}

inline double min_sector_width(const BoundarySet& angles) {
    double w = angles.domain_max;
    for (std::size_t i = 0; i + 1 < angles.values.size(); ++i) w = std::min(w, angles.values[i + 1] - angles.values[i]);
    return w;
}

inline BankConfig auto_gamma(const BoundarySet& scales, const BoundarySet& angles) {
    scales.validate();
    angles.validate();
    BankConfig cfg;
    if (ring_starts(scales).size() < 2) {
        cfg.gamma = kDefaultGamma;
    } else {
        cfg.gamma = 0.9 * gamma_bound(scales);
        if (!(cfg.gamma > 0.0)) throw InputError("auto_gamma: degenerate scale boundaries");
        cfg.gamma = std::min(cfg.gamma, 0.999);
    }
    cfg.delta_theta = 0.45 * min_sector_width(angles);
    return cfg;
}

inline void validate_bank_config(const BoundarySet& scales, const BoundarySet& angles, const BankConfig& cfg) {
    scales.validate();
    angles.validate();
    if (scales.axis != Axis::radial || angles.axis != Axis::angular) throw InputError("bank: boundary sets on wrong axes");
    if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) throw InputError("bank: gamma must lie in (0,1)");
    if (!(cfg.gamma < gamma_bound(scales))) throw InputError("bank: gamma too large, radial transitions overlap");
    if (!(cfg.delta_theta > 0.0)) throw InputError("bank: delta_theta must be positive");
    if (sector_count(angles) > 1 && !(2.0 * cfg.delta_theta < min_sector_width(angles)))
        throw InputError("bank: delta_theta too large, angular transitions overlap");
}

/// Lowpass profile at normalized radius r.
inline double lowpass_profile(double r, double omega1, double gamma) {
    const double a = (1.0 - gamma) * omega1, b = (1.0 + gamma) * omega1;
    if (r <= a) return 1.0;
    if (r >= b) return 0.0;
    return std::cos(0.5 * kPi * beta((r - a) / (2.0 * gamma * omega1)));
}

/// Radial window of ring n (0-based) at normalized radius r.
inline double radial_profile(int n, double r, const std::vector<double>& starts, double gamma) {
    const double lo = starts[n];
    if (r <= (1.0 - gamma) * lo) return 0.0;
    if (r < (1.0 + gamma) * lo) return std::sin(0.5 * kPi * beta((r - (1.0 - gamma) * lo) / (2.0 * gamma * lo)));
    if (n + 1 == static_cast<int>(starts.size())) return 1.0;
    const double hi = starts[n + 1];
    if (r <= (1.0 - gamma) * hi) return 1.0;
    if (r >= (1.0 + gamma) * hi) return 0.0;
    return std::cos(0.5 * kPi * beta((r - (1.0 - gamma) * hi) / (2.0 * gamma * hi)));
}

/// Angular window of sector m at u, the angle relative to the set's origin (period pi).
inline double angular_profile(int m, double u, const BoundarySet& angles, double delta_theta) {
    const int sectors = sector_count(angles);
    if (sectors == 1) return 1.0;
    const double period = angles.domain_max;
    const double lo = angles.values[m], hi = angles.values[m + 1];
    for (double shift : {0.0, -period, period}) {
        const double v = u + shift;
        if (v < lo - delta_theta || v > hi + delta_theta) continue;
        if (v < lo + delta_theta) return std::sin(0.5 * kPi * beta((v - lo + delta_theta) / (2.0 * delta_theta)));
        if (v > hi - delta_theta) return std::cos(0.5 * kPi * beta((v - hi + delta_theta) / (2.0 * delta_theta)));
        return 1.0;
    }
    return 0.0;
}

/// Polar coordinates of every DFT sample. Radius: pi * index distance / Nyquist
/// radius (min half-dimension). Angle: axis coordinate theta + pi/2 in [0, pi).
/// Each sample and its Hermitian mirror share one geometric representative so that
/// every filter is exactly invariant under frequency negation.
struct FrequencyGeometry {
    Image radius;
    Image angle;

    FrequencyGeometry(int width, int height) : radius(width, height), angle(width, height) {
        const double nyquist = std::min(width, height) / 2.0;
        for (int ky = 0; ky < height; ++ky)
            for (int kx = 0; kx < width; ++kx) {
                const int mx = (width - kx) % width, my = (height - ky) % height;
                const bool use_mirror = std::pair(my, mx) < std::pair(ky, kx);
                // Radius and the pi-periodic angle are both invariant under negation, so the
                // mirror's own frequency is used unchanged: both samples then evaluate identically.
                const int fx = signed_frequency(use_mirror ? mx : kx, width);
                const int fy = signed_frequency(use_mirror ? my : ky, height);
                radius(kx, ky) = kPi * std::hypot(fx, fy) / nyquist;
                double a = std::fmod(std::atan2(static_cast<double>(fy), static_cast<double>(fx)) + kPi / 2, kPi);
                if (a < 0) a += kPi;
                angle(kx, ky) = a;
            }
    }
};

struct CurveletBank {
    int width = 0;
    int height = 0;
    BoundarySet scales;
    BoundarySet angles;
    BankConfig config;
    int rings = 0;
    int sectors = 0;
    std::vector<Image> filters;  // [0] lowpass, then (ring, sector) row-major

    [[nodiscard]] int size() const { return static_cast<int>(filters.size()); }
    [[nodiscard]] int index(int ring, int sector) const { return 1 + ring * sectors + sector; }
};

inline Image build_lowpass(const BoundarySet& scales, const BankConfig& cfg, const FrequencyGeometry& geo) {
    const double omega1 = ring_starts(scales).front();
    Image out(geo.radius.width, geo.radius.height);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = lowpass_profile(geo.radius.data[i], omega1, cfg.gamma);
    return out;
}

inline Image build_radial_window(int ring, const BoundarySet& scales, const BankConfig& cfg, const FrequencyGeometry& geo) {
    const auto starts = ring_starts(scales);
    if (ring < 0 || ring >= static_cast<int>(starts.size())) throw InputError("radial window index out of range");
    Image out(geo.radius.width, geo.radius.height);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = radial_profile(ring, geo.radius.data[i], starts, cfg.gamma);
    return out;
}

inline Image build_angular_window(int sector, const BoundarySet& angles, const BankConfig& cfg, const FrequencyGeometry& geo) {
    if (sector < 0 || sector >= sector_count(angles)) throw InputError("angular window index out of range");
    Image out(geo.angle.width, geo.angle.height);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double u = wrap_axis(geo.angle.data[i] - angles.origin, angles.domain_max);
        out.data[i] = angular_profile(sector, u, angles, cfg.delta_theta);
    }
    return out;
}

inline CurveletBank build_bank(const BoundarySet& scales, const BoundarySet& angles, const BankConfig& cfg, int width,
                               int height) {
    validate_bank_config(scales, angles, cfg);
    if (width <= 0 || height <= 0) throw InputError("bank: grid must be non-empty");
    const FrequencyGeometry geo(width, height);

    CurveletBank bank;
    bank.width = width;
    bank.height = height;
    bank.scales = scales;
    bank.angles = angles;
    bank.config = cfg;
    bank.rings = static_cast<int>(ring_starts(scales).size());
    bank.sectors = sector_count(angles);

    bank.filters.push_back(build_lowpass(scales, cfg, geo));
    std::vector<Image> angular;
    for (int m = 0; m < bank.sectors; ++m) angular.push_back(build_angular_window(m, angles, cfg, geo));
    for (int n = 0; n < bank.rings; ++n) {
        const Image radial = build_radial_window(n, scales, cfg, geo);
        for (int m = 0; m < bank.sectors; ++m) {
            Image w(width, height);
            for (std::size_t i = 0; i < w.size(); ++i) w.data[i] = radial.data[i] * angular[m].data[i];
            bank.filters.push_back(std::move(w));
        }
    }
    return bank;
}

inline CurveletBank build_bank(const BoundarySet& scales, const BoundarySet& angles, int width, int height) {
    return build_bank(scales, angles, auto_gamma(scales, angles), width, height);
}

/// max over samples of |1 - sum_k filter_k^2|.
inline double partition_residual(const CurveletBank& bank) {
    double worst = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(bank.width) * bank.height; ++i) {
        double s = 0.0;
        for (const auto& f : bank.filters) s += f.data[i] * f.data[i];
        worst = std::max(worst, std::abs(1.0 - s));
    }
    return worst;
}

}  // namespace ewtseg
