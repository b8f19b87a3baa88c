// Command-line pipeline: build-bank, extract, train, segment, evaluate, gen-dataset.
// Exit codes: 0 success, 2 input error, 3 numerical failure.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ewtseg/ewtseg.hpp"

namespace fs = std::filesystem;
using namespace ewtseg;

namespace {

std::vector<fs::path> list_images(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw InputError("dictionary '" + dir.string() + "' is not a directory");
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto ext = e.path().extension().string();
        if (e.is_regular_file() && (ext == ".pgm" || ext == ".ppm")) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) throw InputError("dictionary '" + dir.string() + "' contains no .pgm/.ppm images");
    return out;
}

enum class ColorMode { grayscale, color_v_channel };

ColorMode parse_color_mode(const std::string& s) {
    if (s == "grayscale") return ColorMode::grayscale;
    if (s == "color_v_channel") return ColorMode::color_v_channel;
    throw InputError("unknown color-mode '" + s + "'");
}

// Grayscale images read as-is; colour images reduce to their HSV value channel.
Image load_image(const fs::path& p) { return io::read_gray(p); }

bool parse_bool(const std::string& s, const char* key) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw InputError(std::string(key) + ": expected true or false");
}

struct FeatureOptions {
    int window = 1;
    std::string drop_lowpass = "auto";
    std::string color_mode = "grayscale";

    void add(CLI::App* app) {
        app->add_option("--window", window, "Local-energy window side (odd)");
        app->add_option("--drop-lowpass", drop_lowpass, "true, false or auto (true for grayscale, false for colour)");
        app->add_option("--color-mode", color_mode, "grayscale or color_v_channel");
    }

    FeatureConfig config() const {
        FeatureConfig cfg;
        cfg.window = window;
        const ColorMode mode = parse_color_mode(color_mode);
        cfg.drop_lowpass = drop_lowpass == "auto" ? mode == ColorMode::grayscale : parse_bool(drop_lowpass, "drop-lowpass");
        cfg.validate();
        return cfg;
    }
};

// Config values become option defaults, so the command line still overrides them.
// List-valued options are filled after parsing when the command line left them empty.
void config_defaults(CLI::App* sub, const std::map<std::string, std::string>& cfg) {
    for (const auto& [key, value] : cfg) {
        CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr) continue;
        opt->required(false);
        if (opt->get_expected_max() <= 1 && opt->get_type_size() != 0) opt->default_val(value);
    }
}

void config_lists(CLI::App* sub, const std::map<std::string, std::string>& cfg) {
    for (const auto& [key, value] : cfg) {
        CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr || opt->count() > 0 || opt->get_expected_max() <= 1) continue;
        std::istringstream in(value);
        std::string token;
        while (in >> token) opt->add_result(token);
        opt->run_callback();
    }
}

std::optional<fs::path> prescan_config(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config" && i + 1 < argc) return fs::path(argv[i + 1]);
        if (a.rfind("--config=", 0) == 0) return fs::path(a.substr(9));
    }
    return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Empirical curvelet texture segmentation"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    app.add_option("--config", config_path, "Flat key = value configuration file")->configurable(false);

    // build-bank
    auto* bb = app.add_subcommand("build-bank", "Detect boundaries on a texture dictionary and write the filter bank");
    fs::path bb_dict, bb_out = "bank.json";
    int bb_width = 0, bb_height = 0;
    double t_omega = kRadialMinWidth, t_theta = kAngularMinWidth;
    bb->add_option("--dict", bb_dict, "Directory of dictionary textures")->required();
    bb->add_option("--bank", bb_out, "Output bank JSON");
    bb->add_option("--width", bb_width, "Filter grid width (default: first texture)");
    bb->add_option("--height", bb_height, "Filter grid height (default: first texture)");
    bb->add_option("--t-omega", t_omega, "Minimum radial support width");
    bb->add_option("--t-theta", t_theta, "Minimum angular support width");

    // extract
    auto* ex = app.add_subcommand("extract", "Compute the feature tensor of one image");
    fs::path ex_bank = "bank.json", ex_image, ex_out, ex_mask, ex_labels_out, ex_whitening, ex_whitening_out;
    std::string ex_whiten = "true";
    double zca_epsilon = 0.0;
    FeatureOptions ex_feat;
    ex->add_option("--bank", ex_bank, "Bank JSON");
    ex->add_option("--image", ex_image, "Input PGM/PPM")->required();
    ex->add_option("--out", ex_out, "Output EWTF file")->required();
    ex->add_option("--mask", ex_mask, "Ground-truth PGM to export alongside");
    ex->add_option("--labels-out", ex_labels_out, "Output EWTL file for --mask");
    ex->add_option("--whiten", ex_whiten, "Apply ZCA whitening (true/false)");
    ex->add_option("--whitening", ex_whitening, "Apply this whitening JSON instead of fitting one");
    ex->add_option("--whitening-out", ex_whitening_out, "Write the fitted whitening JSON");
    ex->add_option("--zca-epsilon", zca_epsilon, "Whitening eigenvalue regularization");
    ex_feat.add(ex);

    // train
    auto* tr = app.add_subcommand("train", "Train a pixel classifier on EWTF/EWTL pairs");
    std::vector<fs::path> tr_features, tr_labels;
    fs::path tr_out = "model.json";
    std::string arch = "softmax_linear", tr_whiten = "true";
    int hidden = 16, classes = 0;
    TrainConfig tcfg;
    double tr_epsilon = 0.0;
    tr->add_option("--features", tr_features, "EWTF files")->required();
    tr->add_option("--labels", tr_labels, "EWTL files (same order)")->required();
    tr->add_option("--model", tr_out, "Output model JSON");
    tr->add_option("--architecture", arch, "softmax_linear or mlp_1hidden");
    tr->add_option("--hidden", hidden, "Hidden units (mlp_1hidden)");
    tr->add_option("--classes", classes, "Class count (default: max label + 1)");
    tr->add_option("--whiten", tr_whiten, "Fit pooled ZCA on the training features and store it in the model");
    tr->add_option("--zca-epsilon", tr_epsilon, "Whitening eigenvalue regularization");
    tr->add_option("--learning-rate", tcfg.learning_rate);
    tr->add_option("--weight-decay", tcfg.weight_decay);
    tr->add_option("--beta1", tcfg.beta1);
    tr->add_option("--beta2", tcfg.beta2);
    tr->add_option("--adam-epsilon", tcfg.adam_epsilon);
    tr->add_option("--epochs", tcfg.epochs);
    tr->add_option("--batch-size", tcfg.batch_size, "Mini-batch size (<= 0: full batch)");
    tr->add_option("--seed", tcfg.seed);

    // segment
    auto* sg = app.add_subcommand("segment", "Predict a label map for one image");
    fs::path sg_bank = "bank.json", sg_model = "model.json", sg_image, sg_out;
    double refine_fraction = kDefaultRefineFraction;
    FeatureOptions sg_feat;
    sg->add_option("--bank", sg_bank, "Bank JSON");
    sg->add_option("--model", sg_model, "Model JSON");
    sg->add_option("--image", sg_image, "Input PGM/PPM")->required();
    sg->add_option("--out", sg_out, "Output label-map PGM")->required();
    sg->add_option("--refine", refine_fraction, "Minimum region fraction (0 disables refinement)");
    sg_feat.add(sg);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Score a label map against ground truth");
    fs::path ev_pred, ev_gt, ev_json;
    ev->add_option("--pred", ev_pred, "Predicted label-map PGM")->required();
    ev->add_option("--gt", ev_gt, "Ground-truth label-map PGM")->required();
    ev->add_option("--json", ev_json, "Also write the scores as JSON");

    // gen-dataset
    auto* gd = app.add_subcommand("gen-dataset", "Generate masks and mosaics");
    fs::path gd_out;
    std::vector<fs::path> gd_textures;
    bool gd_synthetic = false;
    std::string mask_kind = "grayscale";
    int gd_count = 5, gd_width = 128, gd_height = 128, regions = 5, cells = 8, gd_classes = 2;
    double sigma = 10.0;
    unsigned long long gd_seed = 0;
    gd->add_option("--out-dir", gd_out, "Output directory")->required();
    gd->add_option("--textures", gd_textures, "Texture images, one per class");
    gd->add_flag("--synthetic", gd_synthetic, "Use two built-in oriented textures (written to <out-dir>/dict)");
    gd->add_option("--mask-kind", mask_kind, "grayscale (smoothed-noise regions) or voronoi");
    gd->add_option("--count", gd_count, "Number of mask/mosaic pairs");
    gd->add_option("--width", gd_width);
    gd->add_option("--height", gd_height);
    gd->add_option("--regions", regions, "Connected regions per grayscale mask");
    gd->add_option("--sigma", sigma, "Gaussian smoothing of the mask noise");
    gd->add_option("--cells", cells, "Voronoi cells per mask");
    gd->add_option("--classes", gd_classes, "Class count (default: texture count)");
    gd->add_option("--seed", gd_seed);

    try {
        try {
            if (const auto cfg_path = prescan_config(argc, argv)) {
                const auto cfg = parse_config(io::read_file(*cfg_path), cfg_path->string());
                for (CLI::App* sub : app.get_subcommands([](CLI::App*) { return true; })) config_defaults(sub, cfg);
                app.parse(argc, argv);
                for (CLI::App* sub : app.get_subcommands()) config_lists(sub, cfg);
            } else {
                app.parse(argc, argv);
            }
        } catch (const CLI::Success& e) {
            return app.exit(e);
        } catch (const CLI::ParseError& e) {
            app.exit(e);
            return 2;
        }

        if (bb->parsed()) {
            std::vector<Image> textures;
            for (const auto& p : list_images(bb_dict)) textures.push_back(load_image(p));
            DictionaryOptions opt;
            opt.radial = MergeConfig{t_omega};
            opt.angular = MergeConfig{t_theta};
            opt.width = bb_width;
            opt.height = bb_height;
            opt.radial.validate();
            opt.angular.validate();
            const CurveletBank bank = build_dictionary_bank(textures, opt);
            io::write_json(bb_out, io::bank_to_json(bank));
            std::cout << "N_s " << bank.rings << "\nN_theta " << bank.sectors << "\nK " << bank.size() << "\n";
        } else if (ex->parsed()) {
            const CurveletBank bank = io::bank_from_json(io::read_json(ex_bank), ex_bank.string());
            const FeatureConfig fcfg = [&] {
                auto c = ex_feat.config();
                c.zca_epsilon = zca_epsilon;
                return c;
            }();
            const Image image = load_image(ex_image);
            FeatureTensor raw = raw_features(image, bank, fcfg);
            FeatureTensor out;
            if (!ex_whitening.empty()) {
                out = apply_zca(raw, io::whitening_from_json(io::read_json(ex_whitening), ex_whitening.string()));
            } else if (parse_bool(ex_whiten, "whiten")) {
                const WhiteningTransform w = fit_zca(raw, fcfg.zca_epsilon);
                out = apply_zca(raw, w);
                if (!ex_whitening_out.empty()) io::write_json(ex_whitening_out, io::whitening_to_json(w));
            } else {
                out = std::move(raw);
            }
            io::write_features(ex_out, out);
            if (!ex_mask.empty()) {
                const SegmentationMap mask = io::read_labels_pgm(ex_mask);
                if (!mask.labels.same_shape(Grid<int>(image.width, image.height)))
                    throw InputError("mask and image differ in size");
                io::write_label_file(ex_labels_out.empty() ? fs::path(ex_out).replace_extension(".ewtl") : ex_labels_out, mask);
            }
        } else if (tr->parsed()) {
            if (tr_features.size() != tr_labels.size()) throw InputError("train: need one label file per feature file");
            std::vector<FeatureTensor> feats;
            std::vector<int> y;
            int top = 0;
            for (std::size_t i = 0; i < tr_features.size(); ++i) {
                feats.push_back(io::read_features(tr_features[i]));
                const SegmentationMap m = io::read_label_file(tr_labels[i]);
                if (m.width() != feats.back().width || m.height() != feats.back().height)
                    throw InputError("train: " + tr_labels[i].string() + " does not match its feature grid");
                if (feats.back().features() != feats.front().features()) throw InputError("train: feature count differs across files");
                y.insert(y.end(), m.labels.data.begin(), m.labels.data.end());
                top = std::max(top, m.classes);
            }
            const bool whiten = parse_bool(tr_whiten, "whiten");
            std::optional<WhiteningTransform> w;
            if (whiten) w = fit_zca(std::span<const FeatureTensor>(feats), tr_epsilon);
            RowMatrix x(static_cast<Eigen::Index>(y.size()), feats.front().features());
            Eigen::Index at = 0;
            for (const auto& f : feats) {
                x.middleRows(at, f.pixels()) = w ? apply_zca(f, *w).values : f.values;
                at += f.pixels();
            }
            ModelSpec spec{parse_architecture(arch), hidden, classes > 0 ? classes : top};
            const TrainResult result = train(x, y, spec, tcfg);
            for (int c : result.absent_classes) std::cerr << "warning: class " << c << " has no training pixels\n";
            auto doc = io::model_to_json(result.model);
            if (w) doc["whitening"] = io::whitening_to_json(*w);
            io::write_json(tr_out, doc);
            if (!result.epoch_loss.empty()) std::cout << "final_loss " << result.epoch_loss.back() << "\n";
        } else if (sg->parsed()) {
            const CurveletBank bank = io::bank_from_json(io::read_json(sg_bank), sg_bank.string());
            const auto doc = io::read_json(sg_model);
            const ClassifierModel model = io::model_from_json(doc, sg_model.string());
            FeatureTensor f = raw_features(load_image(sg_image), bank, sg_feat.config());
            if (doc.contains("whitening")) f = apply_zca(f, io::whitening_from_json(doc.at("whitening"), sg_model.string()));
            SegmentationMap map = predict(f, model);
            if (refine_fraction > 0.0) map = refine(map, refine_fraction);
            io::write_labels_pgm(sg_out, map);
        } else if (ev->parsed()) {
            const Scores s = score(io::read_labels_pgm(ev_pred), io::read_labels_pgm(ev_gt));
            std::cout << scores_text(s);
            if (!ev_json.empty()) io::write_json(ev_json, scores_json(s));
        } else if (gd->parsed()) {
            std::vector<Image> textures;
            if (gd_synthetic) {
                const auto pair = oriented_texture_pair(gd_width, gd_height);
                textures.assign(pair.begin(), pair.end());
                for (std::size_t i = 0; i < textures.size(); ++i)
                    io::write_gray(gd_out / "dict" / ("texture_" + std::to_string(i) + ".pgm"), textures[i]);
                // Reload so mosaics carry exactly the quantized texture values.
                for (std::size_t i = 0; i < textures.size(); ++i)
                    textures[i] = io::read_gray(gd_out / "dict" / ("texture_" + std::to_string(i) + ".pgm"));
            } else {
                for (const auto& p : gd_textures) textures.push_back(load_image(p));
            }
            if (textures.empty()) throw InputError("gen-dataset: give --textures or --synthetic");
            const int n_classes = gd->get_option("--classes")->count() > 0 || gd_synthetic ? gd_classes : static_cast<int>(textures.size());
            if (gd_count <= 0) throw InputError("gen-dataset: count must be positive");
            for (int i = 0; i < gd_count; ++i) {
                const unsigned long long seed = gd_seed + static_cast<unsigned long long>(i);
                SegmentationMap mask;
                if (mask_kind == "grayscale") {
                    MaskSpec ms{gd_width, gd_height, regions, sigma, seed, 1000};
                    mask = assign_region_classes(gen_grayscale_mask(ms), n_classes, seed);
                } else if (mask_kind == "voronoi") {
                    mask = gen_voronoi_mask(gd_width, gd_height, cells, n_classes, seed);
                } else {
                    throw InputError("unknown mask-kind '" + mask_kind + "'");
                }
                const std::string stem = std::to_string(i);
                io::write_labels_pgm(gd_out / ("mask_" + stem + ".pgm"), mask);
                io::write_gray(gd_out / ("mosaic_" + stem + ".pgm"), compose_mosaic(mask, textures));
            }
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
