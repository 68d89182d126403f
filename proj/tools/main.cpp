// ctxplain: chest-CT classification and saliency pipeline.
//
// Subcommands cover the full workflow: convert NIfTI volumes to windowed
// slice PNGs, preprocess (body crop / exterior exclusion / resize), split a
// manifest, train the transfer model, evaluate with curve outputs, render
// saliency maps, and generate a synthetic phantom dataset.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "arch_json.hpp"
#include "ctxplain/ctxplain.hpp"

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ctx::io_error("cannot open " + path + " for writing");
    return f;
}

std::string rect_field(const std::optional<ctx::rect>& r) {
    if (!r) return "FALLBACK";
    return std::to_string(r->x) + "," + std::to_string(r->y) + "," + std::to_string(r->w) + "," +
           std::to_string(r->h);
}

ctx::gray_image8 load_gray(const std::string& path) {
    try {
        return ctx::load_png(path);
    } catch (const ctx::error& e) {
        throw ctx::io_error(path + ": " + e.what());
    }
}

ctx::gray_image8 fit_to(ctx::gray_image8 img, int side) {
    if (img.width == side && img.height == side) return img;
    return ctx::resize_bilinear(img, side, side);
}

struct loaded_split {
    std::vector<ctx::labeled_image> samples;
    std::vector<std::string> paths;
};

loaded_split load_split(const std::vector<ctx::manifest_entry>& rows, const std::string& split,
                        int side) {
    loaded_split out;
    for (const auto& row : rows) {
        if (row.split != split) continue;
        out.samples.push_back({fit_to(load_gray(row.path), side), row.label});
        out.paths.push_back(row.path);
    }
    return out;
}

void append_manifest(const std::string& path, const std::vector<ctx::manifest_entry>& rows) {
    std::vector<ctx::manifest_entry> all;
    if (fs::exists(path)) all = ctx::read_manifest(path);
    all.insert(all.end(), rows.begin(), rows.end());
    ctx::write_manifest(path, all);
}

void write_curve_svg(const std::string& path, const std::vector<std::pair<double, double>>& pts,
                     const std::string& x_label, const std::string& y_label,
                     const std::string& title) {
    constexpr int size = 440, margin = 50, plot = size - 2 * margin;
    auto px = [&](double x) { return margin + x * plot; };
    auto py = [&](double y) { return size - margin - y * plot; };
    char buf[128];
    std::string poly;
    for (const auto& [x, y] : pts) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(x), py(y));
        poly += buf;
    }
    auto f = open_out(path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
      << "\" viewBox=\"0 0 " << size << " " << size << "\">\n"
      << "<rect width=\"" << size << "\" height=\"" << size << "\" fill=\"white\"/>\n"
      << "<text x=\"" << size / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << title << "</text>\n";
    for (int i = 0; i <= 4; ++i) {
        const double t = i / 4.0;
        f << "<line x1=\"" << px(t) << "\" y1=\"" << py(0) << "\" x2=\"" << px(t) << "\" y2=\""
          << py(1) << "\" stroke=\"#ddd\"/>\n"
          << "<line x1=\"" << px(0) << "\" y1=\"" << py(t) << "\" x2=\"" << px(1) << "\" y2=\""
          << py(t) << "\" stroke=\"#ddd\"/>\n";
        std::snprintf(buf, sizeof buf, "%.2f", t);
        f << "<text x=\"" << px(t) << "\" y=\"" << py(0) + 18
          << "\" text-anchor=\"middle\" font-size=\"11\">" << buf << "</text>\n"
          << "<text x=\"" << px(0) - 8 << "\" y=\"" << py(t) + 4
          << "\" text-anchor=\"end\" font-size=\"11\">" << buf << "</text>\n";
    }
    f << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << plot << "\" height=\""
      << plot << "\" fill=\"none\" stroke=\"black\"/>\n"
      << "<text x=\"" << size / 2 << "\" y=\"" << size - 10
      << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n"
      << "<text x=\"14\" y=\"" << size / 2 << "\" text-anchor=\"middle\" font-size=\"13\" "
      << "transform=\"rotate(-90 14 " << size / 2 << ")\">" << y_label << "</text>\n"
      << "<polyline points=\"" << poly << "\" fill=\"none\" stroke=\"#c0392b\" "
      << "stroke-width=\"1.5\"/>\n</svg>\n";
}

// ---------------------------------------------------------------- convert

struct convert_opts {
    std::string input, out_dir, manifest, log_path;
    int label = -1;
    double band_lo = 0.30, band_hi = 0.70;
    double window_lo = -1200, window_hi = 600;
    ctx::crop_params crop{};
    std::uint64_t seed = 0;
};

void run_convert(const convert_opts& o) {
    auto bytes = ctx::read_file_bytes(o.input);
    if (ctx::is_gzip(bytes)) bytes = ctx::gunzip(bytes);
    const auto vol = ctx::parse_nifti(bytes);
    const auto slices = ctx::select_open_lung_slices(vol, {o.band_lo, o.band_hi});

    fs::create_directories(o.out_dir);
    std::string stem = fs::path(o.input).stem().string();
    if (stem.size() > 4 && stem.ends_with(".nii")) stem.resize(stem.size() - 4);

    std::optional<std::ofstream> log;
    if (!o.log_path.empty()) log = open_out(o.log_path);

    std::vector<ctx::manifest_entry> rows;
    char name[64];
    for (const auto k : slices) {
        auto img = ctx::window_slice(vol, k, {o.window_lo, o.window_hi});
        auto cropped = ctx::auto_body_crop(img, o.crop);
        std::snprintf(name, sizeof name, "%s_s%03zu.png", stem.c_str(), k);
        const auto out_path = (fs::path(o.out_dir) / name).string();
        ctx::save_png(out_path, cropped.image);
        if (log) *log << o.input << "\t" << out_path << "\t" << rect_field(cropped.box) << "\t0\n";
        if (!o.manifest.empty())
            rows.push_back({out_path, o.label, fs::path(o.input).filename().string(), ""});
    }
    if (!o.manifest.empty()) append_manifest(o.manifest, rows);
    std::cout << "converted " << slices.size() << " of " << vol.nz << " slices from " << o.input
              << " into " << o.out_dir << "\n";
}

// ------------------------------------------------------------- preprocess

struct preprocess_opts {
    std::string manifest, out_dir, manifest_out, log_path;
    int size = 224;
    bool exclude_exterior = false;
    ctx::crop_params crop{};
};

void run_preprocess(const preprocess_opts& o) {
    auto rows = ctx::read_manifest(o.manifest);
    if (rows.empty()) throw ctx::empty_dataset("manifest " + o.manifest + " has no rows");
    fs::create_directories(o.out_dir);

    std::optional<std::ofstream> log;
    if (!o.log_path.empty()) log = open_out(o.log_path);

    std::set<std::string> names;
    for (auto& row : rows) {
        const std::string base = fs::path(row.path).filename().string();
        if (!names.insert(base).second)
            throw ctx::error("duplicate image name " + base + " in manifest; outputs would clash");
        auto img = load_gray(row.path);
        auto cropped = ctx::auto_body_crop(img, o.crop);
        auto work = cropped.image;
        bool excluded = false;
        if (o.exclude_exterior) {
            auto ex = ctx::exterior_exclusion(work, o.crop);
            work = ex.image;
            excluded = ex.applied;
        }
        work = fit_to(std::move(work), o.size);
        const auto out_path = (fs::path(o.out_dir) / base).string();
        ctx::save_png(out_path, work);
        if (log)
            *log << row.path << "\t" << out_path << "\t" << rect_field(cropped.box) << "\t"
                 << (excluded ? 1 : 0) << "\n";
        row.path = out_path;
    }
    const std::string out_manifest =
        o.manifest_out.empty() ? (fs::path(o.out_dir) / "manifest.csv").string() : o.manifest_out;
    ctx::write_manifest(out_manifest, rows);
    std::cout << "preprocessed " << rows.size() << " images into " << o.out_dir << " (manifest "
              << out_manifest << ")\n";
}

// ------------------------------------------------------------------ split

struct split_opts {
    std::string manifest, out;
    double train = 0.8, val = 0.1;
    std::uint64_t seed = 0;
};

void run_split(const split_opts& o) {
    auto rows = ctx::read_manifest(o.manifest);
    ctx::split_manifest(rows, ctx::derive_seed(o.seed, "split"), {o.train, o.val});
    const std::string out = o.out.empty() ? o.manifest : o.out;
    ctx::write_manifest(out, rows);
    std::size_t n_train = 0, n_val = 0, n_test = 0;
    for (const auto& r : rows) {
        if (r.split == "train") ++n_train;
        if (r.split == "val") ++n_val;
        if (r.split == "test") ++n_test;
    }
    std::cout << "split " << rows.size() << " rows: " << n_train << " train, " << n_val
              << " val, " << n_test << " test -> " << out << "\n";
}

// ------------------------------------------------------------------ train

struct train_opts {
    std::string manifest, weights_out, arch_out, log_out;
    std::string backbone_arch, backbone_weights;
    int size = 224;
    std::size_t hidden = 512;
    bool no_freeze = false;
    bool augment = false;
    ctx::train_config cfg{};
    ctx::augment_params aug{};
    std::uint64_t seed = 0;
};

void run_train(const train_opts& o) {
    auto rows = ctx::read_manifest(o.manifest);
    auto tr = load_split(rows, "train", o.size);
    auto va = load_split(rows, "val", o.size);
    if (tr.samples.empty())
        throw ctx::empty_dataset("manifest has no rows with split=train; run `split` first");
    if (va.samples.empty())
        throw ctx::empty_dataset("manifest has no rows with split=val; run `split` first");

    ctx::model backbone;
    if (!o.backbone_arch.empty()) {
        backbone = cli::load_arch(o.backbone_arch);
        if (!o.backbone_weights.empty()) ctx::load_weights_file(o.backbone_weights, backbone);
    } else {
        backbone = ctx::tiny_backbone(ctx::derive_seed(o.seed, "backbone"), o.size);
    }
    auto model = ctx::build_transfer_model(backbone, ctx::derive_seed(o.seed, "head"), o.hidden,
                                           !o.no_freeze);

    ctx::train_config cfg = o.cfg;
    cfg.seed = ctx::derive_seed(o.seed, "train");
    if (o.augment) {
        cfg.augment = o.aug;
        cfg.augment->seed = ctx::derive_seed(o.seed, "augment");
    }

    auto log = ctx::train(model, tr.samples, va.samples, cfg);
    for (const auto& w : log.warnings) std::cerr << "warning: " << w << "\n";

    ctx::save_weights_file(o.weights_out, model);
    const std::string arch_out =
        o.arch_out.empty() ? o.weights_out + ".arch.json" : o.arch_out;
    cli::save_arch(arch_out, model);
    if (!o.log_out.empty()) open_out(o.log_out) << log.to_csv();

    char line[160];
    std::snprintf(line, sizeof line,
                  "trained %zu epochs (best epoch %zu, val accuracy %.4f)%s\n", log.epochs.size(),
                  log.best_epoch, log.best_val_accuracy,
                  log.stopped_early ? ", stopped early" : "");
    std::cout << line << "weights: " << o.weights_out << "\narch:    " << arch_out << "\n";
}

// --------------------------------------------------------------- evaluate

struct evaluate_opts {
    std::string manifest, weights, arch, out_dir;
    std::string split = "test";
    double threshold = 0.5;
    bool svg = false;
};

void run_evaluate(const evaluate_opts& o) {
    auto model = cli::load_arch(o.arch);
    ctx::load_weights_file(o.weights, model);
    const int side = static_cast<int>(model.input_shape.back());

    auto rows = ctx::read_manifest(o.manifest);
    auto ds = load_split(rows, o.split, side);
    if (ds.samples.empty())
        throw ctx::empty_dataset("manifest has no rows with split=" + o.split);

    std::vector<ctx::float_image> imgs;
    std::vector<int> labels;
    for (const auto& s : ds.samples) {
        imgs.push_back(ctx::to_unit_interval(s.image));
        labels.push_back(s.label);
    }
    const auto scores = ctx::predict_batch(model, imgs);
    const auto report = ctx::evaluate_scores(scores, labels, o.threshold);
    const auto pr = ctx::pr_curve(scores, labels);
    const auto roc = ctx::roc_curve(scores, labels);

    fs::create_directories(o.out_dir);
    nlohmann::ordered_json j;
    j["accuracy"] = report.scalars.accuracy;
    j["precision"] = report.scalars.precision;
    j["recall"] = report.scalars.recall;
    j["f1"] = report.scalars.f1;
    j["average_precision"] = report.average_precision;
    j["roc_auc"] = report.roc_auc;
    j["tn"] = report.cm.tn;
    j["fp"] = report.cm.fp;
    j["fn"] = report.cm.fn;
    j["tp"] = report.cm.tp;
    open_out((fs::path(o.out_dir) / "metrics.json").string()) << j.dump(2) << "\n";

    {
        auto f = open_out((fs::path(o.out_dir) / "pr.csv").string());
        f << "threshold,recall,precision\n";
        char buf[96];
        for (const auto& p : pr.points) {
            std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n", p.threshold, p.recall, p.precision);
            f << buf;
        }
    }
    {
        auto f = open_out((fs::path(o.out_dir) / "roc.csv").string());
        f << "fpr,tpr\n";
        char buf[64];
        for (const auto& p : roc.points) {
            std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", p.fpr, p.tpr);
            f << buf;
        }
    }
    if (o.svg) {
        std::vector<std::pair<double, double>> pr_pts{{0.0, 1.0}};
        for (const auto& p : pr.points) pr_pts.emplace_back(p.recall, p.precision);
        write_curve_svg((fs::path(o.out_dir) / "pr.svg").string(), pr_pts, "recall", "precision",
                        "Precision-recall curve");
        std::vector<std::pair<double, double>> roc_pts;
        for (const auto& p : roc.points) roc_pts.emplace_back(p.fpr, p.tpr);
        write_curve_svg((fs::path(o.out_dir) / "roc.svg").string(), roc_pts,
                        "false positive rate", "true positive rate", "ROC curve");
    }

    char line[200];
    std::snprintf(line, sizeof line,
                  "%zu samples (split=%s): accuracy %.4f, precision %.4f, recall %.4f, f1 %.4f, "
                  "AP %.4f, AUC %.4f\n",
                  ds.samples.size(), o.split.c_str(), report.scalars.accuracy,
                  report.scalars.precision, report.scalars.recall, report.scalars.f1,
                  report.average_precision, report.roc_auc);
    std::cout << line << "outputs in " << o.out_dir << "\n";
}

// ---------------------------------------------------------------- explain

struct explain_opts {
    std::vector<std::string> images;
    std::string manifest, weights, arch, out_dir;
    std::string split = "test";
    std::string target = "positive";
    double alpha = 0.4;
    std::size_t limit = 0;
};

void run_explain(const explain_opts& o) {
    auto model = cli::load_arch(o.arch);
    ctx::load_weights_file(o.weights, model);
    const int side = static_cast<int>(model.input_shape.back());
    const auto target =
        o.target == "negative" ? ctx::explain_target::negative : ctx::explain_target::positive;

    std::vector<std::string> inputs = o.images;
    if (!o.manifest.empty()) {
        for (const auto& row : ctx::read_manifest(o.manifest)) {
            if (row.split != o.split) continue;
            if (o.limit && inputs.size() >= o.limit) break;
            inputs.push_back(row.path);
        }
    }
    if (inputs.empty()) throw ctx::empty_dataset("no input images given to explain");

    fs::create_directories(o.out_dir);
    for (const auto& path : inputs) {
        const auto gray = fit_to(load_gray(path), side);
        const auto img = ctx::to_unit_interval(gray);
        const double p = ctx::predict(model, img);
        const auto cam = ctx::grad_cam(model, img, target);
        const auto sal = ctx::guided_backprop(model, img, target);
        const auto combined = ctx::guided_grad_cam(cam, sal);

        const std::string stem = fs::path(path).stem().string();
        auto out = [&](const char* suffix) {
            return (fs::path(o.out_dir) / (stem + suffix)).string();
        };
        ctx::save_png(out("_original.png"), gray);
        ctx::save_png(out("_gradcam.png"), ctx::overlay(gray, cam, o.alpha));
        ctx::save_png(out("_guided_backprop.png"), ctx::render_gray(sal));
        ctx::save_png(out("_guided_gradcam.png"), ctx::render_gray(combined));
        ctx::save_png(out("_guided_gradcam_green.png"), ctx::enhance_green(combined));
        char line[160];
        std::snprintf(line, sizeof line, "%s: p(positive)=%.4f -> %s_*.png\n", path.c_str(), p,
                      (fs::path(o.out_dir) / stem).string().c_str());
        std::cout << line;
    }
}

// --------------------------------------------------------------- phantoms

struct phantom_opts {
    std::string out_dir;
    ctx::phantom_spec spec{};
    std::uint64_t seed = 0;
};

void run_phantoms(const phantom_opts& o) {
    ctx::phantom_spec spec = o.spec;
    spec.seed = ctx::derive_seed(o.seed, "phantoms");
    const auto rows = ctx::generate_phantoms(spec, o.out_dir);
    std::cout << "generated " << rows.size() << " phantom images (" << spec.per_class
              << " per class) in " << o.out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chest CT classification and saliency pipeline"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from a TOML-style file (flags win)");

    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "root seed; every stage derives its own stream from it")
        ->capture_default_str();

    convert_opts co;
    auto* convert = app.add_subcommand("convert", "NIfTI volume to windowed, body-cropped PNGs");
    convert->add_option("--input", co.input, "NIfTI file (.nii or .nii.gz)")->required();
    convert->add_option("--out-dir", co.out_dir, "output directory")->required();
    convert->add_option("--manifest", co.manifest, "manifest CSV to create or append to");
    convert->add_option("--label", co.label, "class label {0,1} for manifest rows");
    convert->add_option("--log", co.log_path, "processing log (tab-separated)");
    convert->add_option("--band-lo", co.band_lo, "open-lung band lower fraction")
        ->capture_default_str();
    convert->add_option("--band-hi", co.band_hi, "open-lung band upper fraction")
        ->capture_default_str();
    convert->add_option("--window-lo", co.window_lo, "Hounsfield window low")
        ->capture_default_str();
    convert->add_option("--window-hi", co.window_hi, "Hounsfield window high")
        ->capture_default_str();

    preprocess_opts po;
    auto* preprocess =
        app.add_subcommand("preprocess", "body-crop, optional exterior exclusion, resize");
    preprocess->add_option("--manifest", po.manifest, "input manifest CSV")->required();
    preprocess->add_option("--out-dir", po.out_dir, "output directory")->required();
    preprocess->add_option("--manifest-out", po.manifest_out,
                           "output manifest (default <out-dir>/manifest.csv)");
    preprocess->add_option("--size", po.size, "output side length")->capture_default_str();
    preprocess->add_flag("--exclude-exterior", po.exclude_exterior,
                         "replace pixels outside the body mask with the exterior mean");
    preprocess->add_option("--log", po.log_path, "processing log (tab-separated)");
    preprocess->add_option("--sigma", po.crop.gaussian_sigma, "smoothing sigma for the body mask")
        ->capture_default_str();
    preprocess->add_option("--threshold", po.crop.threshold, "body mask threshold")
        ->capture_default_str();
    preprocess->add_option("--se", po.crop.se_side, "structuring element side (odd)")
        ->capture_default_str();
    preprocess->add_option("--iterations", po.crop.opening_iterations, "opening iterations")
        ->capture_default_str();

    split_opts so;
    auto* split = app.add_subcommand("split", "stratified train/val/test assignment");
    split->add_option("--manifest", so.manifest, "manifest CSV")->required();
    split->add_option("--out", so.out, "output manifest (default: rewrite input)");
    split->add_option("--train", so.train, "training fraction")->capture_default_str();
    split->add_option("--val", so.val, "validation fraction")->capture_default_str();

    train_opts to;
    auto* train = app.add_subcommand("train", "train the transfer model");
    train->add_option("--manifest", to.manifest, "manifest with train/val splits")->required();
    train->add_option("--weights-out", to.weights_out, "output weights file")->required();
    train->add_option("--arch-out", to.arch_out,
                      "output architecture JSON (default <weights-out>.arch.json)");
    train->add_option("--log-out", to.log_out, "per-epoch training log CSV");
    train->add_option("--backbone-arch", to.backbone_arch,
                      "architecture JSON of a custom backbone");
    train->add_option("--backbone-weights", to.backbone_weights,
                      "CTXW weights for the custom backbone");
    train->add_option("--size", to.size, "input side length")->capture_default_str();
    train->add_option("--hidden", to.hidden, "hidden units in the head")->capture_default_str();
    train->add_flag("--no-freeze", to.no_freeze, "train the backbone too");
    train->add_option("--epochs", to.cfg.max_epochs, "maximum epochs")->capture_default_str();
    train->add_option("--batch", to.cfg.batch_size, "batch size")->capture_default_str();
    train->add_option("--patience", to.cfg.patience, "early-stopping patience")
        ->capture_default_str();
    train->add_option("--lr", to.cfg.optimizer.lr, "Adam learning rate")->capture_default_str();
    train->add_option("--threshold", to.cfg.threshold, "accuracy threshold")
        ->capture_default_str();
    train->add_flag("--augment", to.augment, "enable training-set augmentation");
    train->add_option("--rotate", to.aug.rotate_deg, "augment: rotation range (deg)")
        ->capture_default_str();
    train->add_option("--shear", to.aug.shear_deg, "augment: shear range (deg)")
        ->capture_default_str();
    train->add_option("--brightness", to.aug.brightness_frac, "augment: brightness range")
        ->capture_default_str();
    train->add_option("--translate", to.aug.translate_frac, "augment: translation fraction")
        ->capture_default_str();
    train->add_option("--zoom-lo", to.aug.zoom_lo, "augment: zoom lower bound")
        ->capture_default_str();
    train->add_option("--zoom-hi", to.aug.zoom_hi, "augment: zoom upper bound")
        ->capture_default_str();
    train->add_option("--hflip-prob", to.aug.hflip_prob, "augment: horizontal flip probability")
        ->capture_default_str();
    train->add_option("--exclusion-prob", to.aug.exterior_exclusion_prob,
                      "augment: exterior-exclusion probability")
        ->capture_default_str();

    evaluate_opts eo;
    auto* evaluate = app.add_subcommand("evaluate", "metrics JSON plus PR/ROC curves");
    evaluate->add_option("--manifest", eo.manifest, "manifest CSV")->required();
    evaluate->add_option("--weights", eo.weights, "CTXW weights file")->required();
    evaluate->add_option("--arch", eo.arch, "architecture JSON")->required();
    evaluate->add_option("--out-dir", eo.out_dir, "output directory")->required();
    evaluate->add_option("--split", eo.split, "manifest split to evaluate")
        ->capture_default_str();
    evaluate->add_option("--threshold", eo.threshold, "classification threshold")
        ->capture_default_str();
    evaluate->add_flag("--svg", eo.svg, "also write pr.svg and roc.svg");

    explain_opts xo;
    auto* explain = app.add_subcommand("explain", "saliency renders for input images");
    explain->add_option("--image", xo.images, "input PNG (repeatable)");
    explain->add_option("--manifest", xo.manifest, "manifest CSV to draw inputs from");
    explain->add_option("--split", xo.split, "manifest split to use")->capture_default_str();
    explain->add_option("--limit", xo.limit, "max images from the manifest (0 = all)")
        ->capture_default_str();
    explain->add_option("--weights", xo.weights, "CTXW weights file")->required();
    explain->add_option("--arch", xo.arch, "architecture JSON")->required();
    explain->add_option("--out-dir", xo.out_dir, "output directory")->required();
    explain->add_option("--target", xo.target, "positive or negative")
        ->check(CLI::IsMember({"positive", "negative"}))
        ->capture_default_str();
    explain->add_option("--alpha", xo.alpha, "overlay blend factor")->capture_default_str();

    phantom_opts ho;
    auto* phantoms = app.add_subcommand("phantoms", "generate a synthetic phantom dataset");
    phantoms->add_option("--out-dir", ho.out_dir, "output directory")->required();
    phantoms->add_option("--per-class", ho.spec.per_class, "images per class")
        ->capture_default_str();
    phantoms->add_option("--size", ho.spec.size, "image side length")->capture_default_str();
    phantoms->add_option("--lesions-lo", ho.spec.lesion_count_lo, "min lesions per positive")
        ->capture_default_str();
    phantoms->add_option("--lesions-hi", ho.spec.lesion_count_hi, "max lesions per positive")
        ->capture_default_str();
    phantoms->add_option("--lesion-radius-lo", ho.spec.lesion_radius_lo, "min lesion radius (px)")
        ->capture_default_str();
    phantoms->add_option("--lesion-radius-hi", ho.spec.lesion_radius_hi, "max lesion radius (px)")
        ->capture_default_str();
    phantoms
        ->add_option("--lesion-intensity-lo", ho.spec.lesion_intensity_lo,
                     "min lesion peak intensity")
        ->capture_default_str();
    phantoms
        ->add_option("--lesion-intensity-hi", ho.spec.lesion_intensity_hi,
                     "max lesion peak intensity")
        ->capture_default_str();
    phantoms->add_option("--noise", ho.spec.noise_sigma, "gaussian noise sigma")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
        if (convert->parsed()) {
            if (!co.manifest.empty() && co.label != 0 && co.label != 1)
                throw CLI::ValidationError("--manifest requires --label 0 or 1");
            co.seed = seed;
            run_convert(co);
        } else if (preprocess->parsed()) {
            run_preprocess(po);
        } else if (split->parsed()) {
            so.seed = seed;
            run_split(so);
        } else if (train->parsed()) {
            to.seed = seed;
            run_train(to);
        } else if (evaluate->parsed()) {
            run_evaluate(eo);
        } else if (explain->parsed()) {
            run_explain(xo);
        } else if (phantoms->parsed()) {
            ho.seed = seed;
            run_phantoms(ho);
        }
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    } catch (const ctx::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
