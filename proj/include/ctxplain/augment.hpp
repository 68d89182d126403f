#pragma once

#include <cmath>
#include <cstdint>

#include "ctxplain/error.hpp"
#include "ctxplain/image.hpp"
#include "ctxplain/image_ops.hpp"
#include "ctxplain/rng.hpp"

namespace ctx {

// Training-time augmentation ranges. All draws are uniform within the range;
// every range of zero width makes that component the identity.
struct augment_params {
    double rotate_deg = 15.0;
    double shear_deg = 10.0;
    double brightness_frac = 0.2;
    double translate_frac = 0.1;
    double zoom_lo = 0.9;
    double zoom_hi = 1.1;
    double hflip_prob = 0.5;
    double exterior_exclusion_prob = 0.5;
    std::uint64_t seed = 0;

    void validate() const {
        if (rotate_deg < 0 || shear_deg < 0 || brightness_frac < 0 || translate_frac < 0)
            throw error("augmentation ranges must be non-negative");
        if (!(zoom_lo > 0) || !(zoom_hi >= zoom_lo)) throw error("zoom range must be positive");
        if (hflip_prob < 0 || hflip_prob > 1 || exterior_exclusion_prob < 0 ||
            exterior_exclusion_prob > 1)
            throw error("probabilities must be in [0, 1]");
    }

    static augment_params identity(std::uint64_t seed = 0) {
        augment_params p;
        p.rotate_deg = p.shear_deg = p.brightness_frac = p.translate_frac = 0.0;
        p.zoom_lo = p.zoom_hi = 1.0;
        p.hflip_prob = 0.0;
        p.exterior_exclusion_prob = 0.0;
        p.seed = seed;
        return p;
    }
};

// Exact horizontal mirror (no resampling), its own inverse.
inline float_image hflip(const float_image& img) {
    float_image out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
    return out;
}

// One random affine transform (rotation, shear, translation, zoom composed
// about the image center) with bilinear resampling and mean-intensity fill,
// then an optional horizontal flip and a brightness shift clamped to [0, 1].
// Draw order is fixed: rotation, shear, tx, ty, zoom, flip, brightness.
// Deterministic given (params.seed, sample_index).
inline float_image augment(const float_image& img, const augment_params& params,
                           std::uint64_t sample_index) {
    params.validate();
    if (img.channels != 1) throw error("augment expects a single-channel image");

    rng64 rng(derive_seed(params.seed, sample_index));
    const double deg = 3.14159265358979323846 / 180.0;
    const double theta = rng.uniform(-params.rotate_deg, params.rotate_deg) * deg;
    const double shear = std::tan(rng.uniform(-params.shear_deg, params.shear_deg) * deg);
    const double tx = rng.uniform(-params.translate_frac, params.translate_frac) * img.width;
    const double ty = rng.uniform(-params.translate_frac, params.translate_frac) * img.height;
    const double zoom = rng.uniform(params.zoom_lo, params.zoom_hi);
    const bool flip = rng.bernoulli(params.hflip_prob);
    const double delta = rng.uniform(-params.brightness_frac, params.brightness_frac);

    // forward map: dst = A * (src - c) + c + t, with A = R(theta) * Shear * zoom
    const double ct = std::cos(theta), st = std::sin(theta);
    const double a00 = zoom * ct, a01 = zoom * (ct * shear - st);
    const double a10 = zoom * st, a11 = zoom * (st * shear + ct);
    const double det = a00 * a11 - a01 * a10;
    const double i00 = a11 / det, i01 = -a01 / det;
    const double i10 = -a10 / det, i11 = a00 / det;
    const double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;

    double mean = 0.0;
    for (float v : img.data) mean += v;
    mean /= static_cast<double>(img.data.size());

    float_image out(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double dx = x - cx - tx;
            const double dy = y - cy - ty;
            const double sx = i00 * dx + i01 * dy + cx;
            const double sy = i10 * dx + i11 * dy + cy;
            double v;
            if (sx < 0.0 || sx > img.width - 1 || sy < 0.0 || sy > img.height - 1) {
                v = mean;
            } else {
                v = detail::bilinear_at(img.data.data(), img.width, img.height, 1, sx, sy);
            }
            out.at(x, y) = static_cast<float>(v);
        }
    }

    if (flip) out = hflip(out);
    if (delta != 0.0) {
        for (auto& v : out.data)
            v = std::clamp(v + static_cast<float>(delta), 0.0f, 1.0f);
    }
    return out;
}

}  // namespace ctx
