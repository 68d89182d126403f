#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctxplain/error.hpp"
#include "ctxplain/image.hpp"

namespace ctx {

// Row-major boolean raster produced by thresholding.
struct binary_mask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;  // 0 or 1, size = width * height

    binary_mask() = default;
    binary_mask(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), bits(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t& at(int x, int y) { return bits[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x]; }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto b : bits) n += b;
        return n;
    }

    bool operator==(const binary_mask&) const = default;
};

// bit = true iff pixel >= t
inline binary_mask threshold_binary(const gray_image8& img, int t) {
    if (t < 1 || t > 254) throw error("threshold must be in [1, 254]");
    binary_mask out(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i) out.bits[i] = img.data[i] >= t ? 1 : 0;
    return out;
}

namespace detail {

inline void check_se(int se_side) {
    if (se_side < 3 || se_side % 2 == 0)
        throw error("structuring element side must be odd and >= 3");
}

}  // namespace detail

// Square all-ones structuring element; out-of-bounds neighbors count as false.
inline binary_mask erode(const binary_mask& m, int se_side) {
    detail::check_se(se_side);
    const int r = se_side / 2;
    binary_mask out(m.width, m.height);
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            std::uint8_t all = 1;
            for (int dy = -r; dy <= r && all; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= m.height) {
                    all = 0;
                    break;
                }
                for (int dx = -r; dx <= r; ++dx) {
                    const int xx = x + dx;
                    if (xx < 0 || xx >= m.width || !m.at(xx, yy)) {
                        all = 0;
                        break;
                    }
                }
            }
            out.at(x, y) = all;
        }
    }
    return out;
}

inline binary_mask dilate(const binary_mask& m, int se_side) {
    detail::check_se(se_side);
    const int r = se_side / 2;
    binary_mask out(m.width, m.height);
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            std::uint8_t any = 0;
            for (int dy = -r; dy <= r && !any; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= m.height) continue;
                for (int dx = -r; dx <= r; ++dx) {
                    const int xx = x + dx;
                    if (xx >= 0 && xx < m.width && m.at(xx, yy)) {
                        any = 1;
                        break;
                    }
                }
            }
            out.at(x, y) = any;
        }
    }
    return out;
}

// Opening: erosion followed by dilation, repeated `iterations` times. Erases
// blobs and thin regions smaller than the structuring element.
inline binary_mask binary_open(const binary_mask& m, int se_side, int iterations = 1) {
    if (iterations < 1) throw error("opening iterations must be >= 1");
    binary_mask cur = m;
    for (int i = 0; i < iterations; ++i) cur = dilate(erode(cur, se_side), se_side);
    return cur;
}

namespace detail {

struct component {
    std::size_t area = 0;
    std::size_t first_pixel = 0;  // row-major scan order of discovery
    int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};

// Label connected components under 4- or 8-connectivity with an explicit BFS
// stack. Components are discovered in row-major scan order.
inline std::vector<component> label_components(const binary_mask& m, int connectivity,
                                               std::vector<std::int32_t>* labels_out = nullptr) {
    if (connectivity != 4 && connectivity != 8) throw error("connectivity must be 4 or 8");
    const int w = m.width, h = m.height;
    std::vector<std::int32_t> labels(static_cast<std::size_t>(w) * h, -1);
    std::vector<component> comps;
    std::vector<std::size_t> stack;

    static constexpr int dx8[] = {-1, 0, 1, -1, 1, -1, 0, 1};
    static constexpr int dy8[] = {-1, -1, -1, 0, 0, 1, 1, 1};
    static constexpr int dx4[] = {0, -1, 1, 0};
    static constexpr int dy4[] = {-1, 0, 0, 1};
    const int* dx = connectivity == 8 ? dx8 : dx4;
    const int* dy = connectivity == 8 ? dy8 : dy4;
    const int nn = connectivity;

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            if (!m.bits[idx] || labels[idx] != -1) continue;
            const std::int32_t id = static_cast<std::int32_t>(comps.size());
            component c;
            c.first_pixel = idx;
            c.min_x = c.max_x = x;
            c.min_y = c.max_y = y;
            labels[idx] = id;
            stack.assign(1, idx);
            while (!stack.empty()) {
                const std::size_t cur = stack.back();
                stack.pop_back();
                const int cx = static_cast<int>(cur % w);
                const int cy = static_cast<int>(cur / w);
                ++c.area;
                c.min_x = std::min(c.min_x, cx);
                c.max_x = std::max(c.max_x, cx);
                c.min_y = std::min(c.min_y, cy);
                c.max_y = std::max(c.max_y, cy);
                for (int k = 0; k < nn; ++k) {
                    const int nx = cx + dx[k];
                    const int ny = cy + dy[k];
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    const std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
                    if (m.bits[nidx] && labels[nidx] == -1) {
                        labels[nidx] = id;
                        stack.push_back(nidx);
                    }
                }
            }
            comps.push_back(c);
        }
    }
    if (labels_out) *labels_out = std::move(labels);
    return comps;
}

// Index of the component with maximal area; ties broken by smallest
// first pixel in row-major scan order (i.e. earliest discovered).
inline std::size_t largest_component_index(const std::vector<component>& comps) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < comps.size(); ++i)
        if (comps[i].area > comps[best].area) best = i;
    return best;
}

}  // namespace detail

// Tight bounding box of the largest connected component.
inline rect largest_component_bbox(const binary_mask& m, int connectivity = 8) {
    auto comps = detail::label_components(m, connectivity);
    if (comps.empty()) throw empty_mask("mask has no true bits");
    const auto& c = comps[detail::largest_component_index(comps)];
    return rect{c.min_x, c.min_y, c.max_x - c.min_x + 1, c.max_y - c.min_y + 1};
}

// Mask containing only the largest connected component; all-false when the
// input mask is empty.
inline binary_mask largest_component_mask(const binary_mask& m, int connectivity = 8) {
    std::vector<std::int32_t> labels;
    auto comps = detail::label_components(m, connectivity, &labels);
    binary_mask out(m.width, m.height);
    if (comps.empty()) return out;
    const auto id = static_cast<std::int32_t>(detail::largest_component_index(comps));
    for (std::size_t i = 0; i < labels.size(); ++i) out.bits[i] = labels[i] == id ? 1 : 0;
    return out;
}

}  // namespace ctx
