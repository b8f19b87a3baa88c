#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

#include "ewtseg/io.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
};

CliResult run(const std::string& args) {
    const std::string cmd = std::string("\"") + EWTSEG_CLI + "\" " + args + " 2>/dev/null";
    CliResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) return r;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// One small synthetic dataset shared by the tests in this file.
class CliTest : public ::testing::Test {
protected:
    static fs::path dir;

    static void SetUpTestSuite() {
        dir = fs::temp_directory_path() / "ewtseg_cli_test";
        fs::remove_all(dir);
        const CliResult g = run("gen-dataset --synthetic --out-dir " + q(dir / "data") + " --count 2 --width 48 --height 48 --regions 3 --sigma 6 --seed 4");
        ASSERT_EQ(g.code, 0);
    }
};

fs::path CliTest::dir;

}  // namespace

TEST_F(CliTest, GenDatasetIsReproducible) {
    const CliResult g = run("gen-dataset --synthetic --out-dir " + q(dir / "again") + " --count 2 --width 48 --height 48 --regions 3 --sigma 6 --seed 4");
    ASSERT_EQ(g.code, 0);
    for (const char* f : {"mask_0.pgm", "mask_1.pgm", "mosaic_0.pgm", "mosaic_1.pgm", "dict/texture_0.pgm", "dict/texture_1.pgm"})
        EXPECT_EQ(ewtseg::io::read_file(dir / "data" / f), ewtseg::io::read_file(dir / "again" / f)) << f;
    const auto mask = ewtseg::io::read_labels_pgm(dir / "data" / "mask_0.pgm");
    EXPECT_EQ(mask.width(), 48);
    EXPECT_LE(mask.classes, 2);
}

TEST_F(CliTest, BuildBankReportsSizesAndIsDeterministic) {
    const CliResult a = run("build-bank --dict " + q(dir / "data" / "dict") + " --bank " + q(dir / "bank_a.json"));
    const CliResult b = run("build-bank --dict " + q(dir / "data" / "dict") + " --bank " + q(dir / "bank_b.json"));
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out.find("N_s "), std::string::npos);
    EXPECT_NE(a.out.find("N_theta "), std::string::npos);
    EXPECT_NE(a.out.find("K "), std::string::npos);
    EXPECT_EQ(ewtseg::io::read_file(dir / "bank_a.json"), ewtseg::io::read_file(dir / "bank_b.json"));
    const auto bank = ewtseg::io::bank_from_json(ewtseg::io::read_json(dir / "bank_a.json"));
    EXPECT_NE(a.out.find("K " + std::to_string(bank.size()) + "\n"), std::string::npos);
}

TEST_F(CliTest, ExtractWritesMatchingHeaders) {
    ASSERT_EQ(run("build-bank --dict " + q(dir / "data" / "dict") + " --bank " + q(dir / "bank.json")).code, 0);
    const std::string common = "extract --bank " + q(dir / "bank.json") + " --image " + q(dir / "data" / "mosaic_0.pgm") + " --mask " +
                               q(dir / "data" / "mask_0.pgm") + " --whiten false";
    ASSERT_EQ(run(common + " --out " + q(dir / "f1.ewtf")).code, 0);
    ASSERT_EQ(run(common + " --out " + q(dir / "f2.ewtf")).code, 0);
    const auto bank = ewtseg::io::bank_from_json(ewtseg::io::read_json(dir / "bank.json"));
    const auto f = ewtseg::io::read_features(dir / "f1.ewtf");
    EXPECT_EQ(f.width, 48);
    EXPECT_EQ(f.height, 48);
    EXPECT_EQ(f.features(), bank.size() - 1);  // grayscale drops the lowpass channel
    EXPECT_EQ(ewtseg::io::read_file(dir / "f1.ewtf"), ewtseg::io::read_file(dir / "f2.ewtf"));
    const auto labels = ewtseg::io::read_label_file(dir / "f1.ewtl");
    EXPECT_EQ(labels.labels.data, ewtseg::io::read_labels_pgm(dir / "data" / "mask_0.pgm").labels.data);
}

TEST_F(CliTest, EvaluateOfIdenticalMapsIsPerfect) {
    const CliResult r = run("evaluate --pred " + q(dir / "data" / "mask_1.pgm") + " --gt " + q(dir / "data" / "mask_1.pgm") + " --json " +
                      q(dir / "scores.json"));
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "nvoi 100.0000\nssc 100.0000\nsdhd 100.0000\nvd 100.0000\n");
    const auto j = ewtseg::io::read_json(dir / "scores.json");
    EXPECT_EQ(j.at("vd").get<double>(), 100.0);
}

TEST_F(CliTest, ConfigFileSuppliesDefaultsAndCommandLineWins) {
    ewtseg::io::write_file(dir / "run.cfg", "# shared settings\ndict = " + (dir / "data" / "dict").string() + "\nt-omega = 3.0\n");
    // A huge radial width leaves only the trivial scale set: one ring.
    const CliResult a = run("--config " + q(dir / "run.cfg") + " build-bank --bank " + q(dir / "cfg_bank.json"));
    ASSERT_EQ(a.code, 0);
    EXPECT_NE(a.out.find("N_s 1\n"), std::string::npos) << a.out;
    const CliResult b = run("build-bank --config " + q(dir / "run.cfg") + " --t-omega 0.2 --bank " + q(dir / "cfg_bank2.json"));
    ASSERT_EQ(b.code, 0);
    const CliResult plain = run("build-bank --dict " + q(dir / "data" / "dict") + " --bank " + q(dir / "cfg_bank3.json"));
    EXPECT_EQ(b.out, plain.out);
    ewtseg::io::write_file(dir / "bad.cfg", "this line has no equals sign\n");
    EXPECT_EQ(run("--config " + q(dir / "bad.cfg") + " evaluate --pred a --gt b").code, 2);
}

TEST_F(CliTest, ExitCodes) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("evaluate --pred " + q(dir / "nope.pgm") + " --gt " + q(dir / "nope.pgm")).code, 2);
    EXPECT_EQ(run("build-bank --dict " + q(dir / "data" / "dict") + " --t-omega -1").code, 2);
    // A region count the grid cannot hold exhausts the attempt cap.
    EXPECT_EQ(run("gen-dataset --synthetic --out-dir " + q(dir / "tiny") + " --width 4 --height 4 --regions 17 --count 1").code, 3);
}
