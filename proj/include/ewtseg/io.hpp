#pragma once

// File formats: 8-bit binary PGM/PPM, EWTF feature tensors, EWTL label maps, and JSON
// documents for banks, models and whitening transforms.

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ewtseg/bank.hpp"
#include "ewtseg/classify.hpp"
#include "ewtseg/common.hpp"
#include "ewtseg/features.hpp"

namespace ewtseg::io {

using nlohmann::json;

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Netpbm

namespace detail {

struct Netpbm {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> bytes;
};

inline Netpbm parse_netpbm(const std::string& s, const std::string& name) {
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < s.size()) {
            if (s[pos] == '#') {
                while (pos < s.size() && s[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(s[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&] {
        skip_space();
        if (pos >= s.size() || !std::isdigit(static_cast<unsigned char>(s[pos]))) throw InputError(name + ": malformed header");
        long v = 0;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
            v = v * 10 + (s[pos++] - '0');
            if (v > (1 << 24)) throw InputError(name + ": header value too large");
        }
        return static_cast<int>(v);
    };
    if (s.size() < 2 || s[0] != 'P' || (s[1] != '5' && s[1] != '6')) throw InputError(name + ": not a binary PGM/PPM file");
    Netpbm img;
    img.channels = s[1] == '5' ? 1 : 3;
    pos = 2;
    img.width = read_int();
    img.height = read_int();
    const int maxval = read_int();
    if (img.width <= 0 || img.height <= 0) throw InputError(name + ": empty image");
    if (maxval != 255) throw InputError(name + ": only 8-bit (maxval 255) images are supported");
    if (pos >= s.size() || !std::isspace(static_cast<unsigned char>(s[pos]))) throw InputError(name + ": malformed header");
    ++pos;
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height * img.channels;
    if (s.size() - pos < n) throw InputError(name + ": truncated pixel data");
    img.bytes.assign(s.begin() + static_cast<std::ptrdiff_t>(pos), s.begin() + static_cast<std::ptrdiff_t>(pos + n));
    return img;
}

inline std::string netpbm_bytes(char kind, int width, int height, const std::vector<std::uint8_t>& px) {
    std::string out = "P" + std::string(1, kind) + "\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(px.data()), px.size());
    return out;
}

inline std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace detail

/// Grayscale image with values in [0,1]. A PPM is converted through its value channel.
inline Image read_gray(const std::filesystem::path& path) {
    const auto p = detail::parse_netpbm(read_file(path), path.string());
    Image out(p.width, p.height);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint8_t v = p.bytes[i * p.channels];
        for (int c = 1; c < p.channels; ++c) v = std::max(v, p.bytes[i * p.channels + c]);
        out.data[i] = v / 255.0;
    }
    return out;
}

inline ColorImage read_color(const std::filesystem::path& path) {
    const auto p = detail::parse_netpbm(read_file(path), path.string());
    ColorImage out{p.width, p.height, 3, std::vector<double>(static_cast<std::size_t>(p.width) * p.height * 3)};
    for (std::size_t i = 0; i < static_cast<std::size_t>(p.width) * p.height; ++i)
        for (int c = 0; c < 3; ++c) out.data[3 * i + c] = p.bytes[i * p.channels + (p.channels == 3 ? c : 0)] / 255.0;
    return out;
}

inline bool is_color_file(const std::filesystem::path& path) {
    const auto s = read_file(path);
    return s.size() >= 2 && s[0] == 'P' && s[1] == '6';
}

inline void write_gray(const std::filesystem::path& path, const Image& img) {
    std::vector<std::uint8_t> px(img.size());
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = detail::to_byte(img.data[i]);
    write_file(path, detail::netpbm_bytes('5', img.width, img.height, px));
}

inline void write_color(const std::filesystem::path& path, const ColorImage& img) {
    std::vector<std::uint8_t> px(img.data.size());
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = detail::to_byte(img.data[i]);
    write_file(path, detail::netpbm_bytes('6', img.width, img.height, px));
}

/// Label map as PGM: one class index per pixel byte.
inline void write_labels_pgm(const std::filesystem::path& path, const SegmentationMap& map) {
    std::vector<std::uint8_t> px(map.labels.size());
    for (std::size_t i = 0; i < px.size(); ++i) {
        const int v = map.labels.data[i];
        if (v < 0 || v > 255) throw InputError("label map: class index does not fit in 8 bits");
        px[i] = static_cast<std::uint8_t>(v);
    }
    write_file(path, detail::netpbm_bytes('5', map.width(), map.height(), px));
}

inline SegmentationMap read_labels_pgm(const std::filesystem::path& path) {
    const auto p = detail::parse_netpbm(read_file(path), path.string());
    if (p.channels != 1) throw InputError(path.string() + ": label maps must be PGM");
    Grid<int> g(p.width, p.height);
    for (std::size_t i = 0; i < g.size(); ++i) g.data[i] = p.bytes[i];
    return make_segmentation(std::move(g));
}

// ---------------------------------------------------------------------------
// EWTF / EWTL

inline constexpr std::uint32_t kBinaryVersion = 1;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}

class Reader {
public:
    Reader(const std::string& s, std::string name) : s_(s), name_(std::move(name)) {}

    void magic(const char* m) {
        need(4);
        if (s_.compare(pos_, 4, m) != 0) throw InputError(name_ + ": bad magic (expected " + m + ")");
        pos_ += 4;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(s_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint16_t u16() {
        need(2);
        const auto v = static_cast<std::uint16_t>(static_cast<std::uint8_t>(s_[pos_]) | (static_cast<std::uint8_t>(s_[pos_ + 1]) << 8));
        pos_ += 2;
        return v;
    }
    void need(std::size_t n) const {
        if (s_.size() - pos_ < n) throw InputError(name_ + ": truncated file");
    }
    void finish() const {
        if (pos_ != s_.size()) throw InputError(name_ + ": trailing bytes");
    }

private:
    const std::string& s_;
    std::string name_;
    std::size_t pos_ = 0;
};

}  // namespace detail

/// "EWTF", u32 version, u32 height, u32 width, u32 K, then Np*K little-endian float32,
/// pixel-major and feature-minor.
inline std::string encode_features(const FeatureTensor& t) {
    std::string out = "EWTF";
    detail::put_u32(out, kBinaryVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(t.height));
    detail::put_u32(out, static_cast<std::uint32_t>(t.width));
    detail::put_u32(out, static_cast<std::uint32_t>(t.features()));
    out.reserve(out.size() + static_cast<std::size_t>(t.values.size()) * 4);
    for (Eigen::Index i = 0; i < t.values.rows(); ++i)
        for (Eigen::Index k = 0; k < t.values.cols(); ++k)
            detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(t.values(i, k))));
    return out;
}

inline FeatureTensor decode_features(const std::string& bytes, const std::string& name = "EWTF") {
    detail::Reader r(bytes, name);
    r.magic("EWTF");
    if (r.u32() != kBinaryVersion) throw InputError(name + ": unsupported version");
    const auto h = r.u32(), w = r.u32(), k = r.u32();
    const std::uint64_t np = static_cast<std::uint64_t>(h) * w;
    r.need(np * k * 4);
    FeatureTensor t{static_cast<int>(w), static_cast<int>(h), RowMatrix(static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(k))};
    for (Eigen::Index i = 0; i < t.values.rows(); ++i)
        for (Eigen::Index j = 0; j < t.values.cols(); ++j) t.values(i, j) = std::bit_cast<float>(r.u32());
    r.finish();
    return t;
}

/// "EWTL", u32 version, u32 height, u32 width, then Np little-endian u16 labels.
inline std::string encode_labels(const SegmentationMap& m) {
    std::string out = "EWTL";
    detail::put_u32(out, kBinaryVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(m.height()));
    detail::put_u32(out, static_cast<std::uint32_t>(m.width()));
    for (int v : m.labels.data) {
        if (v < 0 || v > 0xffff) throw InputError("EWTL: label out of u16 range");
        detail::put_u16(out, static_cast<std::uint16_t>(v));
    }
    return out;
}

inline SegmentationMap decode_labels(const std::string& bytes, const std::string& name = "EWTL") {
    detail::Reader r(bytes, name);
    r.magic("EWTL");
    if (r.u32() != kBinaryVersion) throw InputError(name + ": unsupported version");
    const auto h = r.u32(), w = r.u32();
    r.need(static_cast<std::uint64_t>(h) * w * 2);
    Grid<int> g(static_cast<int>(w), static_cast<int>(h));
    for (auto& v : g.data) v = r.u16();
    r.finish();
    return make_segmentation(std::move(g));
}

inline void write_features(const std::filesystem::path& p, const FeatureTensor& t) { write_file(p, encode_features(t)); }
inline FeatureTensor read_features(const std::filesystem::path& p) { return decode_features(read_file(p), p.string()); }
inline void write_label_file(const std::filesystem::path& p, const SegmentationMap& m) { write_file(p, encode_labels(m)); }
inline SegmentationMap read_label_file(const std::filesystem::path& p) { return decode_labels(read_file(p), p.string()); }

// ---------------------------------------------------------------------------
// JSON documents. Doubles round-trip exactly through nlohmann's shortest encoding.

inline constexpr int kJsonVersion = 1;

inline json parse_json(const std::string& text, const std::string& name) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(name + ": invalid JSON (" + e.what() + ")");
    }
}

template <typename F>
auto json_field(const std::string& name, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw InputError(name + ": missing or mistyped field (" + e.what() + ")");
    }
}

inline void check_kind(const json& j, const char* kind, const std::string& name) {
    if (!j.is_object() || j.value("kind", "") != kind) throw InputError(name + ": not a " + kind + " document");
    if (j.value("version", -1) != kJsonVersion) throw InputError(name + ": unsupported version");
}

inline json bank_to_json(const CurveletBank& b) {
    return {{"kind", "ewt_curvelet_bank"},
            {"version", kJsonVersion},
            {"width", b.width},
            {"height", b.height},
            {"scales", b.scales.values},
            {"angles", b.angles.values},
            {"angle_origin", b.angles.origin},
            {"gamma", b.config.gamma},
            {"delta_theta", b.config.delta_theta}};
}

/// Filters are re-derived from the stored boundaries.
inline CurveletBank bank_from_json(const json& j, const std::string& name = "bank") {
    check_kind(j, "ewt_curvelet_bank", name);
    return json_field(name, [&] {
        BoundarySet scales{j.at("scales").get<std::vector<double>>(), Axis::radial, kPi, 0.0};
        BoundarySet angles{j.at("angles").get<std::vector<double>>(), Axis::angular, kPi, j.at("angle_origin").get<double>()};
        const BankConfig cfg{j.at("gamma").get<double>(), j.at("delta_theta").get<double>()};
        return build_bank(scales, angles, cfg, j.at("width").get<int>(), j.at("height").get<int>());
    });
}

inline json model_to_json(const ClassifierModel& m) {
    return {{"kind", "ewt_classifier"},
            {"version", kJsonVersion},
            {"architecture", to_string(m.arch)},
            {"input_dim", m.input_dim},
            {"hidden", m.hidden},
            {"classes", m.classes},
            {"params", std::vector<double>(m.params.data(), m.params.data() + m.params.size())}};
}

inline ClassifierModel model_from_json(const json& j, const std::string& name = "model") {
    check_kind(j, "ewt_classifier", name);
    ClassifierModel m = json_field(name, [&] {
        ClassifierModel r;
        r.arch = parse_architecture(j.at("architecture").get<std::string>());
        r.input_dim = j.at("input_dim").get<int>();
        r.hidden = j.at("hidden").get<int>();
        r.classes = j.at("classes").get<int>();
        const auto p = j.at("params").get<std::vector<double>>();
        r.params = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
        return r;
    });
    m.validate();
    return m;
}

inline json whitening_to_json(const WhiteningTransform& w) {
    const Eigen::Index k = w.mean.size();
    std::vector<double> mat(static_cast<std::size_t>(k * k));
    for (Eigen::Index r = 0; r < k; ++r)
        for (Eigen::Index c = 0; c < k; ++c) mat[static_cast<std::size_t>(r * k + c)] = w.matrix(r, c);
    return {{"kind", "ewt_whitening"},
            {"version", kJsonVersion},
            {"features", k},
            {"mean", std::vector<double>(w.mean.data(), w.mean.data() + k)},
            {"matrix", mat}};
}

inline WhiteningTransform whitening_from_json(const json& j, const std::string& name = "whitening") {
    check_kind(j, "ewt_whitening", name);
    return json_field(name, [&] {
        const int k = j.at("features").get<int>();
        const auto mean = j.at("mean").get<std::vector<double>>();
        const auto mat = j.at("matrix").get<std::vector<double>>();
        if (k < 0 || mean.size() != static_cast<std::size_t>(k) || mat.size() != static_cast<std::size_t>(k) * k)
            throw InputError(name + ": inconsistent dimensions");
        WhiteningTransform w;
        w.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), k);
        w.matrix.resize(k, k);
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < k; ++c) w.matrix(r, c) = mat[static_cast<std::size_t>(r) * k + c];
        return w;
    });
}

inline void write_json(const std::filesystem::path& p, const json& j) { write_file(p, j.dump(2) + "\n"); }
inline json read_json(const std::filesystem::path& p) { return parse_json(read_file(p), p.string()); }

}  // namespace ewtseg::io
