#pragma once

// Random ground-truth masks and texture mosaics for training and evaluation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <queue>
#include <random>
#include <set>
#include <span>
#include <vector>

#include "ewtseg/common.hpp"
#include "ewtseg/components.hpp"

namespace ewtseg {

struct MaskSpec {
    int width = 128;
    int height = 128;
    int regions = 5;  // target number of 4-connected components over both phases
    double sigma = 10.0;
    unsigned long long seed = 0;
    int max_attempts = 1000;

    void validate() const {
        if (width <= 0 || height <= 0) throw InputError("mask: dimensions must be positive");
        if (regions < 2) throw InputError("mask: target region count must be at least 2");
        if (!(sigma > 0.0)) throw InputError("mask: sigma must be positive");
        if (max_attempts <= 0) throw InputError("mask: attempt cap must be positive");
    }
};

namespace detail {

inline std::vector<double> normalized_gaussian(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    for (int i = -radius; i <= radius; ++i) k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    const double s = std::accumulate(k.begin(), k.end(), 0.0);
    for (auto& v : k) v /= s;
    return k;
}

/// Separable Gaussian filter with mirrored borders.
inline Image gaussian_filter(const Image& in, double sigma) {
    const auto k = normalized_gaussian(sigma);
    const int r = static_cast<int>(k.size() / 2), w = in.width, h = in.height;
    Image tmp(w, h), out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) acc += k[i + r] * in(reflect_index(x + i, w), y);
            tmp(x, y) = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp(x, reflect_index(y + i, h));
            out(x, y) = acc;
        }
    return out;
}

inline std::uint64_t attempt_seed(unsigned long long seed, int attempt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(attempt), 0x6d61736bU};
    std::uint64_t out[1];
    std::array<std::uint32_t, 2> words{};
    seq.generate(words.begin(), words.end());
    out[0] = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
    return out[0];
}

}  // namespace detail

/// Binary phase map: smoothed normal noise split exactly at its median.
/// Pixels of rank < Np/2 (stable raster order on ties) are phase 0.
inline Grid<int> median_split_phase(const MaskSpec& spec, int attempt) {
    std::mt19937_64 rng(detail::attempt_seed(spec.seed, attempt));
    std::normal_distribution<double> normal(0.0, 1.0);
    Image noise(spec.width, spec.height);
    for (auto& v : noise.data) v = normal(rng);
    const auto [mn, mx] = std::minmax_element(noise.data.begin(), noise.data.end());
    const double lo = *mn, span = std::max(*mx - *mn, 1e-300);
    for (auto& v : noise.data) v = (v - lo) / span;

    const Image smooth = detail::gaussian_filter(noise, spec.sigma);
    std::vector<int> order(smooth.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return smooth.data[a] < smooth.data[b]; });
    Grid<int> phase(spec.width, spec.height, 1);
    for (std::size_t i = 0; i < order.size() / 2; ++i) phase.data[order[i]] = 0;
    return phase;
}

/// Region map (one class per connected component) with exactly spec.regions regions.
inline SegmentationMap gen_grayscale_mask(const MaskSpec& spec) {
    spec.validate();
    for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
        const auto comps = label_components(median_split_phase(spec, attempt));
        if (comps.count() == spec.regions) return SegmentationMap{comps.ids, spec.regions};
    }
    throw NumericalError("mask generation: no mask with the requested region count within the attempt cap");
}

/// Nearest-seed partition; ties go to the lower seed index.
inline Grid<int> voronoi_cells(int width, int height, std::span<const std::array<double, 2>> seeds) {
    if (seeds.empty()) throw InputError("voronoi: no seeds");
    std::vector<int> by_x(seeds.size());
    std::iota(by_x.begin(), by_x.end(), 0);
    std::sort(by_x.begin(), by_x.end(), [&](int a, int b) { return seeds[a][0] < seeds[b][0]; });
    std::vector<double> xs(by_x.size());
    for (std::size_t i = 0; i < by_x.size(); ++i) xs[i] = seeds[by_x[i]][0];

    Grid<int> cells(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            int best = -1;
            double best_d = 0.0;
            auto consider = [&](int s) {
                const double dx = seeds[s][0] - x, dy = seeds[s][1] - y, d = dx * dx + dy * dy;
                if (best < 0 || d < best_d || (d == best_d && s < best)) {
                    best = s;
                    best_d = d;
                }
            };
            // Scan outward in x from the insertion point; stop once dx^2 exceeds the best distance.
            const auto mid = static_cast<int>(std::lower_bound(xs.begin(), xs.end(), static_cast<double>(x)) - xs.begin());
            for (int i = mid; i < static_cast<int>(xs.size()); ++i) {
                const double dx = xs[i] - x;
                if (best >= 0 && dx * dx > best_d) break;
                consider(by_x[i]);
            }
            for (int i = mid - 1; i >= 0; --i) {
                const double dx = x - xs[i];
                if (best >= 0 && dx * dx > best_d) break;
                consider(by_x[i]);
            }
            cells(x, y) = best;
        }
    return cells;
}

/// Voronoi class map. Every class appears in at least one cell.
inline SegmentationMap gen_voronoi_mask(int width, int height, int n_cells, int n_classes, unsigned long long seed) {
    if (width <= 0 || height <= 0) throw InputError("voronoi: dimensions must be positive");
    if (n_classes < 1 || n_cells < n_classes) throw InputError("voronoi: need n_cells >= n_classes >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, width), uy(0.0, height);
    std::vector<std::array<double, 2>> seeds(n_cells);
    for (auto& s : seeds) s = {ux(rng), uy(rng)};

    std::vector<int> cell_class(n_cells);
    for (int i = 0; i < n_cells; ++i) cell_class[i] = i < n_classes ? i : static_cast<int>(rng() % n_classes);
    std::shuffle(cell_class.begin(), cell_class.end(), rng);

    const Grid<int> cells = voronoi_cells(width, height, seeds);
    SegmentationMap out{Grid<int>(width, height), n_classes};
    for (std::size_t i = 0; i < cells.size(); ++i) out.labels.data[i] = cell_class[cells.data[i]];
    return out;
}

/// Maps a region map onto n_classes classes: a greedy colouring of the region adjacency
/// graph in breadth-first order (adjacent regions differ whenever the greedy pass allows),
/// followed by a seeded permutation of class indices. All classes appear when
/// regions >= n_classes.
inline SegmentationMap assign_region_classes(const SegmentationMap& regions, int n_classes, unsigned long long seed) {
    if (n_classes < 1) throw InputError("assign classes: need at least one class");
    const auto comps = label_components(regions.labels);
    const int n = comps.count();
    std::vector<std::set<int>> adj(n);
    const int w = regions.labels.width, h = regions.labels.height;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int a = comps.ids(x, y);
            if (x + 1 < w && comps.ids(x + 1, y) != a) adj[a].insert(comps.ids(x + 1, y)), adj[comps.ids(x + 1, y)].insert(a);
            if (y + 1 < h && comps.ids(x, y + 1) != a) adj[a].insert(comps.ids(x, y + 1)), adj[comps.ids(x, y + 1)].insert(a);
        }

    std::vector<int> colour(n, -1);
    for (int start = 0; start < n; ++start) {
        if (colour[start] >= 0) continue;
        std::queue<int> q;
        q.push(start);
        colour[start] = 0;
        while (!q.empty()) {
            const int r = q.front();
            q.pop();
            if (r != start) {
                std::vector<bool> used(n_classes, false);
                for (int b : adj[r])
                    if (colour[b] >= 0 && colour[b] < n_classes) used[colour[b]] = true;
                int c = 0;
                while (c < n_classes && used[c]) ++c;
                colour[r] = c < n_classes ? c : 0;
            }
            for (int b : adj[r])
                if (colour[b] < 0) {
                    colour[b] = -2;  // queued
                    q.push(b);
                }
        }
    }

    // Fill unused classes from the most populous colour, taking its last regions.
    for (int c = 0; c < n_classes && n >= n_classes; ++c) {
        if (std::find(colour.begin(), colour.end(), c) != colour.end()) continue;
        std::vector<int> count(n_classes, 0);
        for (int v : colour) ++count[v];
        const int donor = static_cast<int>(std::max_element(count.begin(), count.end()) - count.begin());
        for (int r = n - 1; r >= 0; --r)
            if (colour[r] == donor) {
                colour[r] = c;
                break;
            }
    }

    std::vector<int> perm(n_classes);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    SegmentationMap out{Grid<int>(w, h), n_classes};
    for (std::size_t i = 0; i < out.labels.size(); ++i) out.labels.data[i] = perm[colour[comps.ids.data[i]]];
    return out;
}

/// Pixel (x,y) takes texture[class](x mod tw, y mod th).
inline Image compose_mosaic(const SegmentationMap& mask, std::span<const Image> textures) {
    if (static_cast<int>(textures.size()) < mask.classes) throw InputError("mosaic: fewer textures than classes");
    for (const auto& t : textures)
        if (t.empty()) throw InputError("mosaic: empty texture");
    Image out(mask.width(), mask.height());
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            const int c = mask.labels(x, y);
            if (c < 0 || c >= static_cast<int>(textures.size())) throw InputError("mosaic: label without texture");
            const Image& t = textures[c];
            out(x, y) = t(x % t.width, y % t.height);
        }
    return out;
}

inline ColorImage compose_mosaic(const SegmentationMap& mask, std::span<const ColorImage> textures) {
    if (static_cast<int>(textures.size()) < mask.classes) throw InputError("mosaic: fewer textures than classes");
    ColorImage out{mask.width(), mask.height(), 3, std::vector<double>(static_cast<std::size_t>(mask.width()) * mask.height() * 3)};
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            const int c = mask.labels(x, y);
            if (c < 0 || c >= static_cast<int>(textures.size())) throw InputError("mosaic: label without texture");
            const ColorImage& t = textures[c];
            if (t.channels != 3 || t.width <= 0 || t.height <= 0) throw InputError("mosaic: colour textures must be 3-channel");
            const std::size_t src = 3 * (static_cast<std::size_t>(y % t.height) * t.width + x % t.width);
            const std::size_t dst = 3 * (static_cast<std::size_t>(y) * out.width + x);
            for (int k = 0; k < 3; ++k) out.data[dst + k] = t.data[src + k];
        }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic oriented textures

/// Sum of plane waves a*cos(fx*x + fy*y + phase), sampled on an integer grid.
struct Wave {
    double amplitude;
    double fx;
    double fy;
    double phase;
};

inline Image synth_texture(int width, int height, std::span<const Wave> waves, double offset = 0.0) {
    Image out(width, height, offset);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (const auto& w : waves) out(x, y) += w.amplitude * std::cos(w.fx * x + w.fy * y + w.phase);
    return out;
}

/// Two textures with equal mean and variance and different dominant orientation: a
/// period-4 grating along x (resp. y) plus a weaker diagonal (resp. anti-diagonal) one.
inline std::array<Image, 2> oriented_texture_pair(int width, int height) {
    const double h = kPi / 2.0, q = kPi / 4.0;
    const Wave a[] = {{0.25, h, 0.0, q}, {0.125, h, h, q}};
    const Wave b[] = {{0.25, 0.0, h, q}, {0.125, h, -h, q}};
    return {synth_texture(width, height, a, 0.5), synth_texture(width, height, b, 0.5)};
}

}  // namespace ewtseg
