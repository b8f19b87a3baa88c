#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ewtseg/boundaries.hpp"
#include "oracles.hpp"

using namespace ewtseg;

namespace {

BoundarySet radial(std::vector<double> v) { return BoundarySet{std::move(v), Axis::radial, kPi, 0.0}; }

Spectrum1D spectrum_from(double (*f)(double), int n = 128) {
    std::vector<double> s(n);
    for (int i = 0; i < n; ++i) s[i] = f(kPi * i / (n - 1));
    return make_radial_spectrum(std::move(s));
}

double bump(double w, double c) { return std::exp(-std::pow((w - c) / 0.2, 2)); }

}  // namespace

TEST(LocalMaxima, OnePerSupport) {
    const auto s = spectrum_from([](double w) { return bump(w, 1.3); });
    const auto m = local_maxima(s, trivial_boundaries(Axis::radial));
    ASSERT_EQ(m.positions.size(), 1u);
    EXPECT_NEAR(m.positions[0], 1.3, kPi / 127);

    const auto s2 = spectrum_from([](double w) { return bump(w, 0.5) + 0.8 * bump(w, 2.0); });
    const auto m2 = local_maxima(s2, radial({0.0, 1.0, kPi}));
    ASSERT_EQ(m2.positions.size(), 2u);
    // Exhaustive scan oracle.
    for (int k = 0; k < 2; ++k) {
        const double lo = k == 0 ? 0.0 : 1.0, hi = k == 0 ? 1.0 : kPi;
        double best = -1, at = 0;
        for (std::size_t i = 0; i < s2.size(); ++i)
            if (s2.positions[i] >= lo && s2.positions[i] <= hi && s2.samples[i] > best) best = s2.samples[i], at = s2.positions[i];
        EXPECT_EQ(m2.positions[k], at);
    }
    EXPECT_NEAR(m2.positions[0], 0.5, kPi / 127);
    EXPECT_NEAR(m2.positions[1], 2.0, kPi / 127);
}

TEST(LocalMaxima, TiesGoToLowerPosition) {
    const auto s = make_radial_spectrum(std::vector<double>(16, 2.0));
    EXPECT_EQ(local_maxima(s, trivial_boundaries(Axis::radial)).positions, std::vector<double>{0.0});
}

TEST(Union, SortsAndDeduplicates) {
    const std::vector<BoundarySet> a{radial({0, 1.0, kPi}), radial({0, 2.0, kPi})};
    EXPECT_EQ(union_boundaries(a).values, (std::vector<double>{0, 1.0, 2.0, kPi}));
    const std::vector<BoundarySet> same{radial({0, 1.0, kPi}), radial({0, 1.0, kPi})};
    EXPECT_EQ(union_boundaries(same).values, (std::vector<double>{0, 1.0, kPi}));
    const std::vector<BoundarySet> close{radial({0, 1.0, kPi}), radial({0, 1.0 + 1e-12, kPi})};
    EXPECT_EQ(union_boundaries(close).values, (std::vector<double>{0, 1.0, kPi}));
    EXPECT_THROW(union_boundaries(std::span<const BoundarySet>{}), InputError);
}

TEST(PruneUnsupported, MidpointRule) {
    const std::vector<MaximaSet> m{{{0.5, 2.5}}};
    EXPECT_EQ(prune_unsupported(radial({0, 1.0, 2.0, kPi}), m).values, (std::vector<double>{0, 1.5, kPi}));
}

TEST(PruneUnsupported, EndpointRuleAndNoOp) {
    const std::vector<MaximaSet> m{{{1.0}}};
    EXPECT_EQ(prune_unsupported(radial({0, 0.3, kPi}), m).values, (std::vector<double>{0, kPi}));
    const std::vector<MaximaSet> all{{{0.1, 1.5, 3.0}}};
    EXPECT_EQ(prune_unsupported(radial({0, 1.0, 2.0, kPi}), all).values, (std::vector<double>{0, 1.0, 2.0, kPi}));
}

TEST(PruneNarrow, EndpointAndMidpointRules) {
    const MergeConfig cfg{0.2};
    EXPECT_EQ(prune_narrow(radial({0, 0.1, kPi}), cfg).values, (std::vector<double>{0, kPi}));
    const auto r = prune_narrow(radial({0, 1.0, 1.1, kPi}), cfg).values;
    ASSERT_EQ(r.size(), 3u);
    EXPECT_DOUBLE_EQ(r[1], 1.05);
    EXPECT_EQ(prune_narrow(radial({0, 1.0, 2.0, kPi}), cfg).values, (std::vector<double>{0, 1.0, 2.0, kPi}));
}

TEST(PruneNarrow, RejectsBadThreshold) {
    EXPECT_THROW(prune_narrow(radial({0, kPi}), MergeConfig{0.0}), InputError);
    EXPECT_THROW(prune_narrow(radial({0, kPi}), MergeConfig{4.0}), InputError);
}

TEST(MergeDetected, MatchesRestartScanOracle) {
    std::mt19937 rng(1234);
    for (int trial = 0; trial < 500; ++trial) {
        const auto inst = oracle::random_merge_instance(rng);
        std::vector<std::vector<double>> raw;
        for (const auto& s : inst.sets) raw.push_back(s.values);
        const auto got = merge_detected(inst.sets, inst.maxima, MergeConfig{inst.threshold});
        ASSERT_EQ(got.values, oracle::merge(raw, inst.lambdas, inst.threshold)) << "trial " << trial;
    }
}

TEST(MergeDetected, OutputInvariants) {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        const auto inst = oracle::random_merge_instance(rng);
        const auto sup = prune_unsupported(union_boundaries(inst.sets), inst.maxima);
        EXPECT_EQ(sup.values.front(), 0.0);
        EXPECT_EQ(sup.values.back(), kPi);
        for (std::size_t j = 0; j + 1 < sup.values.size(); ++j) {
            bool has = false;
            for (double l : inst.lambdas) has = has || (l >= sup.values[j] && l <= sup.values[j + 1]);
            EXPECT_TRUE(has || sup.values.size() == 2);
        }
        const auto fin = prune_narrow(sup, MergeConfig{inst.threshold});
        EXPECT_EQ(fin.values.front(), 0.0);
        EXPECT_EQ(fin.values.back(), kPi);
        if (fin.values.size() > 2)
            for (std::size_t j = 0; j + 1 < fin.values.size(); ++j) {
                EXPECT_GE(fin.values[j + 1] - fin.values[j], inst.threshold);
            }
    }
}

TEST(MergeBoundarySets, SingleSpectrumEqualsDetectThenNarrow) {
    const auto s = spectrum_from([](double w) { return bump(w, 0.6) + bump(w, 1.6) + bump(w, 2.6) + 0.01; });
    const MergeConfig cfg{0.2};
    const std::vector<Spectrum1D> one{s};
    EXPECT_EQ(merge_boundary_sets(one, cfg), prune_narrow(detect_boundaries(s), cfg));
    const std::vector<Spectrum1D> three{s, s, s};
    EXPECT_EQ(merge_boundary_sets(three, cfg), merge_boundary_sets(one, cfg));
}

TEST(MergeBoundarySets, DisjointPeaksKeepBothSupports) {
    const auto a = spectrum_from([](double w) { return bump(w, 0.7) + bump(w, 1.5) + 0.01; });
    const auto b = spectrum_from([](double w) { return bump(w, 2.0) + bump(w, 2.8) + 0.01; });
    const std::vector<Spectrum1D> both{a, b};
    // A fixed persistence rule: with one minimum per spectrum the Otsu split is undefined.
    ScaleSpaceConfig ss;
    ss.rule = ScaleSpaceConfig::Threshold::fixed;
    ss.fixed_threshold = 5;
    const auto t = merge_boundary_sets_traced(both, MergeConfig{0.2}, ss);
    // Each spectrum keeps its two peaks in distinct supports of the merged set.
    auto support_of = [&](double w) {
        const auto& v = t.final_set.values;
        return static_cast<int>(std::upper_bound(v.begin(), v.end(), w) - v.begin());
    };
    EXPECT_NE(support_of(0.7), support_of(1.5));
    // Neither spectrum has a minimum between 1.5 and 2.0, so no boundary separates them.
    EXPECT_EQ(support_of(1.5), support_of(2.0));
    EXPECT_NE(support_of(2.0), support_of(2.8));
}

TEST(AngularMerge, FrameStartsAtADetectedBoundary) {
    std::vector<double> v(360);
    for (int i = 0; i < 360; ++i) {
        const double a = kPi * (i + 0.5) / 360;
        v[i] = 0.01 + std::exp(-std::pow(std::remainder(a - 0.3, kPi) / 0.1, 2)) + std::exp(-std::pow(std::remainder(a - 1.9, kPi) / 0.1, 2));
    }
    const auto s = make_angular_spectrum(v);
    ScaleSpaceConfig ss;
    ss.rule = ScaleSpaceConfig::Threshold::fixed;
    ss.fixed_threshold = 5;
    const auto det = detect_boundaries(s, ss);
    ASSERT_GE(det.interior().size(), 2u);
    const std::vector<Spectrum1D> one{s};
    const auto merged = merge_boundary_sets(one, MergeConfig{kAngularMinWidth}, ss);
    EXPECT_EQ(merged.origin, det.values[1]);
    // Every merged boundary maps back onto a detected one.
    for (double b : merged.values) {
        const double a = axis_position(merged, b);
        bool found = false;
        for (double d : det.interior()) found = found || std::abs(std::remainder(a - d, kPi)) < 1e-12;
        EXPECT_TRUE(found) << a;
    }
}

TEST(AngularMerge, RotationHelpers) {
    EXPECT_DOUBLE_EQ(wrap_axis(-0.5, kPi), kPi - 0.5);
    EXPECT_DOUBLE_EQ(wrap_axis(kPi + 0.25, kPi), 0.25);
    const auto bs = make_boundaries(Axis::angular, {0.5, 2.0});
    const auto r = rotate_boundaries(bs, 0.5);
    EXPECT_EQ(r.origin, 0.5);
    ASSERT_EQ(r.values.size(), 3u);
    EXPECT_DOUBLE_EQ(r.values[1], 1.5);
    EXPECT_DOUBLE_EQ(axis_position(r, r.values[1]), 2.0);
}
