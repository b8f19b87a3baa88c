#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace ewtseg {

inline constexpr double kPi = std::numbers::pi;

/// Bad or inconsistent input (file contents, dimensions, parameters).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical breakdown: non-finite values, singular systems, generation caps.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense row-major 2D array.
template <typename T>
struct Grid {
    int width = 0;
    int height = 0;
    std::vector<T> data;

    Grid() = default;
    Grid(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    [[nodiscard]] std::size_t size() const { return data.size(); }
    [[nodiscard]] bool empty() const { return data.empty(); }

    T& operator()(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    const T& operator()(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    [[nodiscard]] bool same_shape(const Grid& o) const { return width == o.width && height == o.height; }
};

using Image = Grid<double>;

struct ColorImage {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<double> data;  // interleaved, values in [0,1]
};

/// Per-pixel class labels. Every label lies in [0, classes).
struct SegmentationMap {
    Grid<int> labels;
    int classes = 0;

    [[nodiscard]] int width() const { return labels.width; }
    [[nodiscard]] int height() const { return labels.height; }
};

inline SegmentationMap make_segmentation(Grid<int> labels) {
    int top = -1;
    for (int v : labels.data) {
        if (v < 0) throw InputError("segmentation labels must be non-negative");
        top = std::max(top, v);
    }
    return SegmentationMap{std::move(labels), top + 1};
}

/// Reflects an out-of-range index back into [0, n) (half-sample symmetric).
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

}  // namespace ewtseg
