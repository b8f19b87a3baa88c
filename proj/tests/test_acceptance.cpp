// Acceptance criteria A1-A7. Prints one PASS/FAIL line per criterion; exit status is
// nonzero if any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ewtseg/ewtseg.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ewtseg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

// Interior points in (lo, hi) at least `gap` apart and from the ends.
std::vector<double> spaced_points(std::mt19937& rng, int n, double lo, double hi, double gap) {
    std::uniform_real_distribution<double> u(lo + gap, hi - gap);
    std::vector<double> pts;
    for (int tries = 0; static_cast<int>(pts.size()) < n && tries < 1000; ++tries) {
        const double v = u(rng);
        bool ok = true;
        for (double p : pts) ok = ok && std::abs(p - v) >= gap;
        if (ok) pts.push_back(v);
    }
    return pts;
}

Outcome a1_tight_frame() {
    const auto t0 = Clock::now();
    std::mt19937 rng(101);
    std::uniform_int_distribution<int> nr(0, 3), na(0, 6);
    std::uniform_real_distribution<double> origin(0.0, kPi);
    double worst_pu = 0.0, worst_pr = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = trial < 10 ? 64 : 128;
        const auto scales = make_boundaries(Axis::radial, spaced_points(rng, nr(rng), 0.0, kPi, 0.25));
        const auto angles = make_boundaries(Axis::angular, spaced_points(rng, na(rng), 0.0, kPi, 0.12), origin(rng));
        const auto bank = build_bank(scales, angles, n + trial % 3, n);
        worst_pu = std::max(worst_pu, partition_residual(bank));
        const Image img = testutil::random_image(bank.width, bank.height, 500 + trial);
        const Image back = inverse(forward(img, bank), bank);
        for (std::size_t i = 0; i < img.size(); ++i) worst_pr = std::max(worst_pr, std::abs(back.data[i] - img.data[i]));
    }
    const double t = seconds_since(t0);
    return {worst_pu < 1e-8 && worst_pr < 1e-10 && t < 30.0,
            "max |1-sum h^2| = " + fmt(worst_pu) + ", max reconstruction error = " + fmt(worst_pr) + ", " + fmt(t) + " s"};
}

Outcome a2_boundary_merge() {
    const auto t0 = Clock::now();
    std::mt19937 rng(202);
    int mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto inst = oracle::random_merge_instance(rng);
        std::vector<std::vector<double>> raw;
        for (const auto& s : inst.sets) raw.push_back(s.values);
        if (merge_detected(inst.sets, inst.maxima, MergeConfig{inst.threshold}).values != oracle::merge(raw, inst.lambdas, inst.threshold))
            ++mismatches;
    }
    const double t = seconds_since(t0);
    return {mismatches == 0 && t < 10.0, std::to_string(mismatches) + "/200 mismatches against the oracle, " + fmt(t) + " s"};
}

Eigen::MatrixXd sample_covariance(const RowMatrix& z) {
    const Eigen::RowVectorXd mean = z.colwise().mean();
    const Eigen::MatrixXd c = z.rowwise() - mean;
    return c.transpose() * c / static_cast<double>(z.rows() - 1);
}

Outcome a3_whitening() {
    const auto t0 = Clock::now();
    std::mt19937 rng(303);
    std::normal_distribution<double> n(0.0, 1.0);
    // Correlated features: x = g * A with a random mixing matrix.
    RowMatrix g(2000, 8), a(8, 8);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = n(rng);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
    const RowMatrix x = g * a;
    const RowMatrix z = apply_zca(FeatureTensor{2000, 1, x}, fit_zca(x, 0.0)).values;
    const double frob = (sample_covariance(z) - Eigen::MatrixXd::Identity(8, 8)).norm();

    // A constant column makes the covariance singular; epsilon keeps the transform finite.
    RowMatrix d = x;
    d.col(3).setConstant(0.25);
    const auto w = fit_zca(d, 1e-6);
    const RowMatrix zd = apply_zca(FeatureTensor{2000, 1, d}, w).values;
    const Eigen::MatrixXd cd = sample_covariance(zd);
    bool degenerate_ok = w.matrix.allFinite() && zd.allFinite() && zd.col(3).cwiseAbs().maxCoeff() < 1e-9;
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            const double expect = (i == j && i != 3) ? 1.0 : 0.0;
            degenerate_ok = degenerate_ok && std::abs(cd(i, j) - expect) < 1e-4;
        }
    const double t = seconds_since(t0);
    return {frob < 1e-8 && degenerate_ok && t < 5.0,
            "||cov - I||_F = " + fmt(frob) + ", degenerate column " + (degenerate_ok ? "ok" : "bad") + ", " + fmt(t) + " s"};
}

Outcome a4_gradient() {
    const auto t0 = Clock::now();
    std::mt19937 rng(404);
    std::uniform_int_distribution<int> kd(1, 10), cd(2, 5), hd(1, 8);
    std::normal_distribution<double> n(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int k = kd(rng), c = cd(rng);
        const ModelSpec spec{trial % 2 ? Architecture::mlp_1hidden : Architecture::softmax_linear, hd(rng), c};
        auto model = init_model(k, spec, rng());
        RowMatrix x(16, k);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
        std::vector<int> y(16);
        for (auto& v : y) v = static_cast<int>(rng() % c);
        Eigen::VectorXd grad;
        loss_and_gradient(model, x, y, grad);
        Eigen::VectorXd fd(grad.size());
        for (Eigen::Index i = 0; i < grad.size(); ++i) {
            const double h = 1e-6, keep = model.params(i);
            model.params(i) = keep + h;
            const double up = oracle::cross_entropy(model, x, y);
            model.params(i) = keep - h;
            const double down = oracle::cross_entropy(model, x, y);
            model.params(i) = keep;
            fd(i) = (up - down) / (2 * h);
        }
        worst = std::max(worst, (grad - fd).norm() / std::max(1e-12, fd.norm() + grad.norm()));
    }
    const double t = seconds_since(t0);
    return {worst < 1e-5 && t < 10.0, "max relative error = " + fmt(worst) + ", " + fmt(t) + " s"};
}

int run_cli(const std::string& args, std::string* out = nullptr) {
    const std::string cmd = std::string("\"") + EWTSEG_CLI + "\" " + args;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) return -1;
    std::string text;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) text.append(buf, n);
    const int status = pclose(pipe);
    if (out != nullptr) *out = text;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

Outcome a5_end_to_end() {
    const auto t0 = Clock::now();
    const fs::path d = fs::temp_directory_path() / "ewtseg_acceptance_a5";
    fs::remove_all(d);
    auto fail = [&](const std::string& step) { return Outcome{false, step + " failed"}; };

    if (run_cli("gen-dataset --synthetic --out-dir " + q(d) + " --count 5 --width 128 --height 128 --regions 5 --sigma 10 --classes 2 --seed 7") != 0)
        return fail("gen-dataset");
    std::string bank_out;
    if (run_cli("build-bank --dict " + q(d / "dict") + " --bank " + q(d / "bank.json"), &bank_out) != 0) return fail("build-bank");
    const std::string feat = " --window 1 --drop-lowpass true --color-mode grayscale";
    std::string train_args = "train --architecture softmax_linear --epochs 100 --zca-epsilon 1e-9 --seed 1 --model " + q(d / "model.json");
    std::string feats, labels;
    for (int i = 0; i < 4; ++i) {
        const fs::path f = d / ("f" + std::to_string(i) + ".ewtf");
        if (run_cli("extract --whiten false" + feat + " --bank " + q(d / "bank.json") + " --image " + q(d / ("mosaic_" + std::to_string(i) + ".pgm")) +
                    " --mask " + q(d / ("mask_" + std::to_string(i) + ".pgm")) + " --out " + q(f)) != 0)
            return fail("extract");
        feats += " " + q(f);
        labels += " " + q(fs::path(f).replace_extension(".ewtl"));
    }
    if (run_cli(train_args + " --features" + feats + " --labels" + labels) != 0) return fail("train");
    if (run_cli("segment" + feat + " --refine 0.005 --bank " + q(d / "bank.json") + " --model " + q(d / "model.json") + " --image " +
                q(d / "mosaic_4.pgm") + " --out " + q(d / "pred_4.pgm")) != 0)
        return fail("segment");
    if (run_cli("evaluate --pred " + q(d / "pred_4.pgm") + " --gt " + q(d / "mask_4.pgm") + " --json " + q(d / "scores.json")) != 0)
        return fail("evaluate");

    const auto j = io::read_json(d / "scores.json");
    bool ok = true;
    std::string detail;
    for (const char* m : {"nvoi", "ssc", "sdhd", "vd"}) {
        const double v = j.at(m).get<double>();
        ok = ok && v >= 95.0;
        detail += std::string(m) + " " + fmt(v) + ", ";
    }
    std::string k_line = bank_out.substr(bank_out.find("K "));
    k_line = k_line.substr(0, k_line.find('\n'));
    const double t = seconds_since(t0);
    return {ok && t < 300.0, detail + k_line + ", " + fmt(t) + " s"};
}

Outcome a6_refine() {
    std::mt19937 rng(606);
    int violations = 0, oracle_mismatch = 0, maps = 0;
    auto check = [&](const SegmentationMap& m, bool with_oracle) {
        ++maps;
        const auto r = refine(m, 0.005);
        const auto comps = label_components(r.labels);
        const double limit = 0.005 * static_cast<double>(r.labels.size());
        if (comps.count() > 1)
            for (int s : comps.sizes) violations += s < limit;
        if (with_oracle && r.labels.data != oracle::refine(m, 0.005).labels.data) ++oracle_mismatch;
    };
    // Speckle at several densities on top of a two-region base.
    for (int trial = 0; trial < 30; ++trial) {
        const int w = trial < 20 ? 40 : 128, h = trial < 20 ? 36 : 128;
        Grid<int> g(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) g(x, y) = x < w / 2 ? 0 : 1;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double density = 0.01 + 0.1 * (trial % 5);
        for (auto& v : g.data)
            if (u(rng) < density) v = static_cast<int>(rng() % 3);
        check(make_segmentation(std::move(g)), trial < 20);
    }
    // Pure noise: every component starts below the limit.
    check(testutil::random_map(64, 64, 4, 9), true);
    return {violations == 0 && oracle_mismatch == 0,
            std::to_string(maps) + " maps, " + std::to_string(violations) + " undersized components, " + std::to_string(oracle_mismatch) +
                " oracle mismatches"};
}

Outcome a7_metrics() {
    std::mt19937 rng(707);
    std::uniform_int_distribution<int> side(2, 40), cls(1, 6);
    int bad = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = testutil::random_map(side(rng), side(rng), cls(rng), rng());
        const Scores s = score(m, m);
        for (double v : {s.nvoi, s.ssc, s.sdhd, s.vd}) bad += std::abs(v - 100.0) > 1e-9;
    }
    // Each predicted class splits one ground-truth class in half.
    const auto pred = testutil::map_from(2, 2, {0, 0, 1, 1});
    const auto gt = testutil::map_from(2, 2, {0, 1, 0, 1});
    const double vd = score(pred, gt).vd;
    return {bad == 0 && std::abs(vd - 50.0) < 1e-12, std::to_string(bad) + " non-perfect self scores, 2x2 VD = " + fmt(vd)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"A1 tight frame and reconstruction", a1_tight_frame},
        {"A2 boundary merging vs oracle", a2_boundary_merge},
        {"A3 whitening", a3_whitening},
        {"A4 analytic gradient", a4_gradient},
        {"A5 end-to-end segmentation", a5_end_to_end},
        {"A6 refinement", a6_refine},
        {"A7 metric fixed points", a7_metrics},
    };
    int failures = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
