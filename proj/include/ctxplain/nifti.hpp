#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "ctxplain/error.hpp"
#include "ctxplain/image.hpp"

namespace ctx {

enum class byte_order { little, big };

enum class nifti_datatype : std::int16_t {
    int16 = 4,
    float32 = 16,
};

// Decoded single-file NIfTI-1 volume. Voxels are kept in file order
// (x fastest, then y, then z) as floats; int16 payloads are exactly
// representable. scale_slope / scale_intercept apply as v * slope + intercept.
struct ct_volume {
    std::size_t nx = 0, ny = 0, nz = 0;
    std::vector<float> voxels;
    float scale_slope = 1.f;
    float scale_intercept = 0.f;
    byte_order endianness = byte_order::little;
    nifti_datatype datatype = nifti_datatype::int16;

    std::size_t voxel_count() const { return nx * ny * nz; }
};

// Hounsfield window applied during 8-bit conversion. The default is a lung
// window: air at -1200 HU maps to 0, dense tissue at 600 HU maps to 255.
struct hu_window {
    double lo = -1200.0;
    double hi = 600.0;
};

inline constexpr hu_window lung_window{-1200.0, 600.0};

namespace detail {

template <typename T>
T read_le(const std::uint8_t* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

template <typename T>
T byteswap_value(T v) {
    std::uint8_t* b = reinterpret_cast<std::uint8_t*>(&v);
    std::reverse(b, b + sizeof(T));
    return v;
}

template <typename T>
T read_field(const std::uint8_t* base, std::size_t offset, bool swap) {
    T v = read_le<T>(base + offset);
    return swap ? byteswap_value(v) : v;
}

}  // namespace detail

// Parse an uncompressed single-file NIfTI-1 byte stream. Header fields at the
// standard offsets are honored: sizeof_hdr@0, dim@40, datatype@70,
// vox_offset@108, scl_slope@112, scl_inter@116, magic@344. Endianness is
// inferred from sizeof_hdr reading 348 either way. Only the first three dims
// are read; supported datatypes are int16 and float32.
inline ct_volume parse_nifti(std::span<const std::uint8_t> bytes) {
    constexpr std::size_t header_size = 348;
    if (bytes.size() < header_size)
        throw truncated_file("NIfTI stream shorter than the 348-byte header (" +
                             std::to_string(bytes.size()) + " bytes)");
    const std::uint8_t* p = bytes.data();

    std::int32_t sizeof_hdr = detail::read_le<std::int32_t>(p);
    bool swap = false;
    if (sizeof_hdr != 348) {
        if (detail::byteswap_value(sizeof_hdr) == 348) {
            swap = true;
        } else {
            throw bad_header_size("sizeof_hdr is not 348 under either endianness");
        }
    }

    char magic[4];
    std::memcpy(magic, p + 344, 4);
    const bool n_plus_1 = std::memcmp(magic, "n+1\0", 4) == 0;
    const bool ni1 = std::memcmp(magic, "ni1\0", 4) == 0;
    if (!n_plus_1 && !ni1) throw bad_magic("NIfTI magic is neither \"n+1\" nor \"ni1\"");

    auto dim_at = [&](std::size_t i) {
        return detail::read_field<std::int16_t>(p, 40 + 2 * i, swap);
    };
    std::int16_t ndim = dim_at(0);
    if (ndim < 1 || ndim > 7) throw bad_header_size("dim[0] out of the 1..7 range");
    auto dim_or_1 = [&](std::size_t i) {
        if (ndim < static_cast<std::int16_t>(i)) return std::size_t(1);
        std::int16_t d = dim_at(i);
        return d >= 1 ? static_cast<std::size_t>(d) : std::size_t(1);
    };

    ct_volume vol;
    vol.nx = dim_or_1(1);
    vol.ny = dim_or_1(2);
    vol.nz = dim_or_1(3);
    vol.endianness = swap ? byte_order::big : byte_order::little;

    std::int16_t dt = detail::read_field<std::int16_t>(p, 70, swap);
    std::size_t elem_size = 0;
    if (dt == static_cast<std::int16_t>(nifti_datatype::int16)) {
        vol.datatype = nifti_datatype::int16;
        elem_size = 2;
    } else if (dt == static_cast<std::int16_t>(nifti_datatype::float32)) {
        vol.datatype = nifti_datatype::float32;
        elem_size = 4;
    } else {
        throw unsupported_datatype("NIfTI datatype code " + std::to_string(dt) +
                                   " (only int16 and float32 are supported)");
    }

    float vox_offset = detail::read_field<float>(p, 108, swap);
    vol.scale_slope = detail::read_field<float>(p, 112, swap);
    vol.scale_intercept = detail::read_field<float>(p, 116, swap);
    // slope 0 means "no scaling stored"
    if (vol.scale_slope == 0.f) {
        vol.scale_slope = 1.f;
        vol.scale_intercept = 0.f;
    }

    std::size_t offset = header_size;
    if (vox_offset > static_cast<float>(header_size))
        offset = static_cast<std::size_t>(std::llround(vox_offset));

    const std::size_t count = vol.voxel_count();
    if (bytes.size() < offset + count * elem_size)
        throw truncated_file("NIfTI payload truncated: need " +
                             std::to_string(offset + count * elem_size) + " bytes, have " +
                             std::to_string(bytes.size()));

    vol.voxels.resize(count);
    const std::uint8_t* d = p + offset;
    if (vol.datatype == nifti_datatype::int16) {
        for (std::size_t i = 0; i < count; ++i) {
            std::int16_t v = detail::read_le<std::int16_t>(d + 2 * i);
            if (swap) v = detail::byteswap_value(v);
            vol.voxels[i] = static_cast<float>(v);
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            float v = detail::read_le<float>(d + 4 * i);
            if (swap) v = detail::byteswap_value(v);
            vol.voxels[i] = v;
        }
    }
    return vol;
}

// Fractional band of slice indices around the middle of the stack, where the
// lungs are open. Returns k with floor(lo*nz) <= k < ceil(hi*nz), ascending.
struct slice_band {
    double lo = 0.30;
    double hi = 0.70;
};

inline std::vector<std::size_t> select_open_lung_slices(const ct_volume& vol,
                                                        slice_band band = {}) {
    if (!(band.lo >= 0.0 && band.lo < band.hi && band.hi <= 1.0))
        throw error("slice band must satisfy 0 <= lo < hi <= 1");
    const double nz = static_cast<double>(vol.nz);
    auto first = static_cast<std::size_t>(std::floor(band.lo * nz));
    auto last = static_cast<std::size_t>(std::ceil(band.hi * nz));
    if (first >= last) throw empty_band("slice band selects no slices");
    std::vector<std::size_t> out;
    out.reserve(last - first);
    for (std::size_t k = first; k < last; ++k) out.push_back(k);
    return out;
}

// Window one slice to 8 bits: v' = v*slope + intercept, clamped into the
// window, then mapped linearly onto 0..255 with half-away-from-zero rounding.
inline gray_image8 window_slice(const ct_volume& vol, std::size_t slice_index,
                                hu_window window = lung_window) {
    if (slice_index >= vol.nz)
        throw index_out_of_range("slice " + std::to_string(slice_index) + " of " +
                                 std::to_string(vol.nz));
    if (!(window.lo < window.hi)) throw error("HU window requires lo < hi");
    gray_image8 out(static_cast<int>(vol.nx), static_cast<int>(vol.ny));
    const double lo = window.lo, hi = window.hi;
    const double slope = vol.scale_slope, inter = vol.scale_intercept;
    const float* plane = vol.voxels.data() + slice_index * vol.nx * vol.ny;
    for (std::size_t i = 0; i < vol.nx * vol.ny; ++i) {
        double v = static_cast<double>(plane[i]) * slope + inter;
        v = std::clamp(v, lo, hi);
        out.data[i] = quantize8(255.0 * (v - lo) / (hi - lo));
    }
    return out;
}

}  // namespace ctx
