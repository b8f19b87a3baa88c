#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ewtseg/common.hpp"

namespace ewtseg {

/// Label-intersection counts: entry (i,j) = pixels with label i in the first map and
/// label j in the second. Every entry is non-negative and they sum to total.
struct ContingencyTable {
    int rows = 0;
    int cols = 0;
    long long total = 0;
    std::vector<long long> counts;  // row-major

    [[nodiscard]] long long operator()(int i, int j) const { return counts[static_cast<std::size_t>(i) * cols + j]; }
    [[nodiscard]] ContingencyTable transposed() const {
        ContingencyTable t{cols, rows, total, std::vector<long long>(counts.size())};
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) t.counts[static_cast<std::size_t>(j) * rows + i] = (*this)(i, j);
        return t;
    }
};

inline int label_span(const SegmentationMap& m) {
    int n = m.classes;
    for (int v : m.labels.data) {
        if (v < 0) throw InputError("contingency: negative label");
        n = std::max(n, v + 1);
    }
    return n;
}

/// Rows index pred labels, columns gt labels.
inline ContingencyTable contingency(const SegmentationMap& pred, const SegmentationMap& gt) {
    if (!pred.labels.same_shape(gt.labels)) throw InputError("contingency: maps differ in size");
    const int na = label_span(pred), nb = label_span(gt);
    ContingencyTable t{na, nb, static_cast<long long>(pred.labels.size()), std::vector<long long>(static_cast<std::size_t>(na) * nb, 0)};
    for (std::size_t p = 0; p < pred.labels.size(); ++p)
        ++t.counts[static_cast<std::size_t>(pred.labels.data[p]) * nb + gt.labels.data[p]];
    return t;
}

struct Scores {
    double nvoi = 0.0;
    double ssc = 0.0;
    double sdhd = 0.0;
    double vd = 0.0;
};

namespace detail {

inline std::vector<long long> row_sums(const ContingencyTable& t) {
    std::vector<long long> s(t.rows, 0);
    for (int i = 0; i < t.rows; ++i)
        for (int j = 0; j < t.cols; ++j) s[i] += t(i, j);
    return s;
}

// Sum over rows of |R| * max Jaccard against any column region, divided by Np.
inline double cover(const ContingencyTable& t) {
    const auto rs = row_sums(t), cs = row_sums(t.transposed());
    double acc = 0.0;
    for (int i = 0; i < t.rows; ++i) {
        double best = 0.0;
        for (int j = 0; j < t.cols; ++j) {
            const long long inter = t(i, j);
            if (inter == 0) continue;
            best = std::max(best, static_cast<double>(inter) / static_cast<double>(rs[i] + cs[j] - inter));
        }
        acc += static_cast<double>(rs[i]) * best;
    }
    return acc / static_cast<double>(t.total);
}

// Pixels of each column region not in its best-overlapping row region.
inline long long directional_hamming(const ContingencyTable& t) {
    long long acc = 0;
    for (int j = 0; j < t.cols; ++j) {
        long long sum = 0, best = 0;
        for (int i = 0; i < t.rows; ++i) {
            sum += t(i, j);
            best = std::max(best, t(i, j));
        }
        acc += sum - best;
    }
    return acc;
}

inline double conditional_entropy(const ContingencyTable& t) {  // H(row | col)
    const auto cs = row_sums(t.transposed());
    const double n = static_cast<double>(t.total);
    double h = 0.0;
    for (int i = 0; i < t.rows; ++i)
        for (int j = 0; j < t.cols; ++j)
            if (t(i, j) > 0) h -= (static_cast<double>(t(i, j)) / n) * std::log(static_cast<double>(t(i, j)) / static_cast<double>(cs[j]));
    return h;
}

}  // namespace detail

/// Percentages in [0,100]; higher is better. rows = pred, cols = gt.
inline Scores score_table(const ContingencyTable& t) {
    if (t.total <= 0) throw InputError("score: empty maps");
    const double n = static_cast<double>(t.total);
    const ContingencyTable tt = t.transposed();
    Scores s;

    long long row_max = 0, col_max = 0;
    for (int i = 0; i < t.rows; ++i) {
        long long m = 0;
        for (int j = 0; j < t.cols; ++j) m = std::max(m, t(i, j));
        row_max += m;
    }
    for (int j = 0; j < t.cols; ++j) {
        long long m = 0;
        for (int i = 0; i < t.rows; ++i) m = std::max(m, t(i, j));
        col_max += m;
    }
    s.vd = 100.0 * (1.0 - static_cast<double>(2 * t.total - row_max - col_max) / (2.0 * n));
    s.ssc = 100.0 * std::min(detail::cover(t), detail::cover(tt));
    const long long dh = std::min(detail::directional_hamming(t), detail::directional_hamming(tt));
    s.sdhd = 100.0 * (1.0 - static_cast<double>(dh) / n);

    const double vi = detail::conditional_entropy(t) + detail::conditional_entropy(tt);
    s.nvoi = t.total > 1 ? std::clamp(100.0 * (1.0 - vi / std::log(n)), 0.0, 100.0) : 100.0;
    for (double* v : {&s.nvoi, &s.ssc, &s.sdhd, &s.vd}) *v = std::clamp(*v, 0.0, 100.0);
    return s;
}

inline Scores score(const SegmentationMap& pred, const SegmentationMap& gt) { return score_table(contingency(pred, gt)); }

inline std::string scores_text(const Scores& s) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << "nvoi " << s.nvoi << "\nssc " << s.ssc << "\nsdhd " << s.sdhd << "\nvd " << s.vd << "\n";
    return os.str();
}

inline nlohmann::json scores_json(const Scores& s) {
    return {{"nvoi", s.nvoi}, {"ssc", s.ssc}, {"sdhd", s.sdhd}, {"vd", s.vd}};
}

}  // namespace ewtseg
