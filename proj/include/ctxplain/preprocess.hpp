#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "ctxplain/error.hpp"
#include "ctxplain/image.hpp"
#include "ctxplain/morphology.hpp"

namespace ctx {

// Parameters of the body-cropping chain: smooth, threshold, open, take the
// largest component. Defaults separate air from tissue after a lung window.
struct crop_params {
    double gaussian_sigma = 2.0;
    int threshold = 25;
    int se_side = 5;
    int opening_iterations = 1;
    int connectivity = 8;

    void validate() const {
        if (!(gaussian_sigma > 0)) throw error("gaussian_sigma must be > 0");
        if (threshold < 1 || threshold > 254) throw error("threshold must be in [1, 254]");
        if (se_side < 3 || se_side % 2 == 0) throw error("se_side must be odd and >= 3");
        if (opening_iterations < 1) throw error("opening_iterations must be >= 1");
        if (connectivity != 4 && connectivity != 8) throw error("connectivity must be 4 or 8");
    }
};

namespace detail {

inline std::vector<double> gaussian_kernel_1d(double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        k[i + radius] = w;
        sum += w;
    }
    for (auto& w : k) w /= sum;
    return k;
}

}  // namespace detail

// Separable Gaussian with kernel radius ceil(3*sigma), clamp-to-edge borders,
// quantized once at the end (half-away-from-zero).
inline gray_image8 gaussian_smooth(const gray_image8& img, double sigma) {
    if (!(sigma > 0)) throw error("sigma must be > 0");
    const auto k = detail::gaussian_kernel_1d(sigma);
    const int radius = static_cast<int>(k.size() / 2);
    const int w = img.width, h = img.height;

    std::vector<double> tmp(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int xx = std::clamp(x + i, 0, w - 1);
                acc += k[i + radius] * img.at(xx, y);
            }
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    gray_image8 out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int yy = std::clamp(y + i, 0, h - 1);
                acc += k[i + radius] * tmp[static_cast<std::size_t>(yy) * w + x];
            }
            out.at(x, y) = quantize8(acc);
        }
    }
    return out;
}

// Body mask as used by both cropping and exterior exclusion: smooth,
// threshold, open, keep only the largest component. All-false when nothing
// survives the opening.
inline binary_mask body_mask(const gray_image8& img, const crop_params& params = {}) {
    params.validate();
    const gray_image8 smooth = gaussian_smooth(img, params.gaussian_sigma);
    binary_mask m = threshold_binary(smooth, params.threshold);
    m = binary_open(m, params.se_side, params.opening_iterations);
    return largest_component_mask(m, params.connectivity);
}

struct crop_result {
    gray_image8 image;
    std::optional<rect> box;  // nullopt: empty mask, input returned unchanged
};

// The automatic body crop: the original (not smoothed) image cropped to the
// tight bounding box of the largest post-opening component. Degenerate inputs
// fall back to the uncropped image.
inline crop_result auto_body_crop(const gray_image8& img, const crop_params& params = {}) {
    params.validate();
    const gray_image8 smooth = gaussian_smooth(img, params.gaussian_sigma);
    binary_mask m = threshold_binary(smooth, params.threshold);
    m = binary_open(m, params.se_side, params.opening_iterations);
    rect box;
    try {
        box = largest_component_bbox(m, params.connectivity);
    } catch (const empty_mask&) {
        return crop_result{img, std::nullopt};
    }
    return crop_result{crop(img, box), box};
}

struct exclusion_result {
    gray_image8 image;
    bool applied = false;
};

// Replace everything outside the body mask with the mean intensity of the
// original exterior pixels (rounded half-away-from-zero). Interior pixels are
// untouched; an empty or all-covering mask leaves the image unchanged.
inline exclusion_result exterior_exclusion(const gray_image8& img,
                                           const crop_params& params = {}) {
    const binary_mask mask = body_mask(img, params);
    const std::size_t inside = mask.count();
    if (inside == 0 || inside == mask.bits.size()) return exclusion_result{img, false};

    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < mask.bits.size(); ++i) {
        if (!mask.bits[i]) {
            sum += img.data[i];
            ++n;
        }
    }
    const std::uint8_t mu = quantize8(sum / static_cast<double>(n));
    exclusion_result res{img, true};
    for (std::size_t i = 0; i < mask.bits.size(); ++i)
        if (!mask.bits[i]) res.image.data[i] = mu;
    return res;
}

}  // namespace ctx
