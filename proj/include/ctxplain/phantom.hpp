#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "ctxplain/error.hpp"
#include "ctxplain/image.hpp"
#include "ctxplain/manifest.hpp"
#include "ctxplain/morphology.hpp"
#include "ctxplain/png_io.hpp"
#include "ctxplain/rng.hpp"

namespace ctx {

// Synthetic chest-slice generator: a bright body disk on a dark background,
// two dark lung ellipses, and (for the positive class) bright soft-edged
// blobs confined to the lung interiors. Range fields are inclusive; sizes
// are in pixels at the 224 reference and scale with `size`.
struct phantom_spec {
    std::size_t per_class = 100;
    int size = 224;
    int lesion_count_lo = 2;
    int lesion_count_hi = 5;
    double lesion_radius_lo = 5.0;
    double lesion_radius_hi = 11.0;
    double lesion_intensity_lo = 140.0;
    double lesion_intensity_hi = 220.0;
    double noise_sigma = 4.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (per_class < 1) throw error("per_class must be at least 1");
        if (size < 32) throw error("phantom size must be at least 32");
        if (lesion_count_lo < 1 || lesion_count_hi < lesion_count_lo)
            throw error("lesion count range is invalid");
        if (!(lesion_radius_lo > 0) || lesion_radius_hi < lesion_radius_lo)
            throw error("lesion radius range is invalid");
        if (lesion_intensity_lo < 0 || lesion_intensity_hi < lesion_intensity_lo ||
            lesion_intensity_hi > 255)
            throw error("lesion intensity range is invalid");
        if (noise_sigma < 0) throw error("noise level must be non-negative");
    }
};

struct phantom_image {
    gray_image8 image;
    binary_mask lungs;  // lung interiors before any lesions
    int label = 0;
};

namespace detail {

struct ellipse {
    double cx, cy, a, b, tilt;

    bool contains(double x, double y) const {
        const double dx = x - cx, dy = y - cy;
        const double ct = std::cos(tilt), st = std::sin(tilt);
        const double u = (dx * ct + dy * st) / a;
        const double v = (-dx * st + dy * ct) / b;
        return u * u + v * v <= 1.0;
    }

    // squared normalized radius; < 1 inside
    double nr2(double x, double y) const {
        const double dx = x - cx, dy = y - cy;
        const double ct = std::cos(tilt), st = std::sin(tilt);
        const double u = (dx * ct + dy * st) / a;
        const double v = (-dx * st + dy * ct) / b;
        return u * u + v * v;
    }
};

}  // namespace detail

// Generates the phantom at (label, index). Structure, lesion and noise draws
// come from three independently derived streams, so the two labels at the
// same index share body geometry and noise and differ exactly on the lesion
// pixels, all of which lie inside the lung mask.
inline phantom_image make_phantom(const phantom_spec& spec, int label, std::uint64_t index) {
    spec.validate();
    const int s = spec.size;
    const double scale = s / 224.0;
    const std::uint64_t img_seed = derive_seed(derive_seed(spec.seed, "phantom"), index);
    rng64 body_rng(derive_seed(img_seed, "body"));
    rng64 lesion_rng(derive_seed(img_seed, "lesions"));
    rng64 noise_rng(derive_seed(img_seed, "noise"));

    const double body_r = body_rng.uniform(0.40, 0.44) * s;
    const double body_cx = s / 2.0 + body_rng.gaussian() * 0.01 * s;
    const double body_cy = s / 2.0 + body_rng.gaussian() * 0.01 * s;

    detail::ellipse lungs[2];
    for (int side = 0; side < 2; ++side) {
        const double off = body_rng.uniform(0.15, 0.19) * s * (side == 0 ? -1.0 : 1.0);
        lungs[side].cx = body_cx + off;
        lungs[side].cy = body_cy + body_rng.gaussian() * 0.01 * s;
        lungs[side].a = body_rng.uniform(0.11, 0.14) * s;
        lungs[side].b = body_rng.uniform(0.22, 0.27) * s;
        lungs[side].tilt = body_rng.uniform(-8.0, 8.0) * 3.14159265358979323846 / 180.0;
    }

    constexpr double exterior_level = 6.0;
    constexpr double body_level = 172.0;
    constexpr double lung_level = 58.0;

    phantom_image out;
    out.label = label;
    out.lungs = binary_mask(s, s);
    std::vector<double> canvas(static_cast<std::size_t>(s) * s, exterior_level);
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
            const double dx = x - body_cx, dy = y - body_cy;
            if (dx * dx + dy * dy > body_r * body_r) continue;
            double v = body_level;
            for (const auto& lung : lungs)
                if (lung.contains(x, y)) {
                    v = lung_level;
                    out.lungs.at(x, y) = 1;
                }
            canvas[static_cast<std::size_t>(y) * s + x] = v;
        }

    if (label == 1) {
        const int n_lesions =
            spec.lesion_count_lo +
            static_cast<int>(lesion_rng.below(
                static_cast<std::uint64_t>(spec.lesion_count_hi - spec.lesion_count_lo + 1)));
        for (int li = 0; li < n_lesions; ++li) {
            const auto& lung = lungs[lesion_rng.below(2)];
            const double ang = lesion_rng.uniform(0.0, 2.0 * 3.14159265358979323846);
            const double rad = std::sqrt(lesion_rng.uniform()) * 0.65;
            const double ct = std::cos(lung.tilt), st = std::sin(lung.tilt);
            const double u = rad * std::cos(ang) * lung.a;
            const double v = rad * std::sin(ang) * lung.b;
            detail::ellipse blob;
            blob.cx = lung.cx + u * ct - v * st;
            blob.cy = lung.cy + u * st + v * ct;
            blob.a = lesion_rng.uniform(spec.lesion_radius_lo, spec.lesion_radius_hi) * scale;
            blob.b = lesion_rng.uniform(spec.lesion_radius_lo, spec.lesion_radius_hi) * scale;
            blob.tilt = lesion_rng.uniform(0.0, 3.14159265358979323846);
            const double peak =
                lesion_rng.uniform(spec.lesion_intensity_lo, spec.lesion_intensity_hi);
            const int x0 = std::max(0, static_cast<int>(blob.cx - blob.a - blob.b));
            const int x1 = std::min(s - 1, static_cast<int>(blob.cx + blob.a + blob.b) + 1);
            const int y0 = std::max(0, static_cast<int>(blob.cy - blob.a - blob.b));
            const int y1 = std::min(s - 1, static_cast<int>(blob.cy + blob.a + blob.b) + 1);
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    if (!out.lungs.at(x, y)) continue;
                    const double r2 = blob.nr2(x, y);
                    if (r2 >= 1.0) continue;
                    const double profile = std::sqrt(1.0 - r2);
                    auto& px = canvas[static_cast<std::size_t>(y) * s + x];
                    px = std::max(px, lung_level + (peak - lung_level) * profile);
                }
        }
    }

    out.image = gray_image8(s, s);
    for (std::size_t j = 0; j < canvas.size(); ++j)
        out.image.data[j] = quantize8(canvas[j] + noise_rng.gaussian() * spec.noise_sigma);
    return out;
}

// Writes per_class images of each class plus manifest.csv into out_dir and
// returns the manifest rows (splits unassigned).
inline std::vector<manifest_entry> generate_phantoms(const phantom_spec& spec,
                                                     const std::string& out_dir) {
    spec.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw io_error("cannot create " + out_dir + ": " + ec.message());
    std::vector<manifest_entry> rows;
    char name[32];
    for (int label : {0, 1}) {
        for (std::size_t i = 0; i < spec.per_class; ++i) {
            std::snprintf(name, sizeof name, "%s_%04zu.png", label ? "pos" : "neg", i);
            auto ph = make_phantom(spec, label, i);
            const auto path = (std::filesystem::path(out_dir) / name).string();
            save_png(path, ph.image);
            rows.push_back({path, label, "phantom", ""});
        }
    }
    write_manifest((std::filesystem::path(out_dir) / "manifest.csv").string(), rows);
    return rows;
}

}  // namespace ctx
