#include "support.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>

namespace testutil {

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& bytes, std::size_t offset, T value, bool swap) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if (swap) std::reverse(raw, raw + sizeof(T));
    std::copy(raw, raw + sizeof(T), bytes.begin() + offset);
}

}  // namespace

std::vector<std::uint8_t> make_nifti(const nifti_spec& spec, const std::vector<double>& voxels) {
    const bool swap = spec.big_endian;
    const std::size_t offset =
        spec.vox_offset > 348.f ? static_cast<std::size_t>(std::llround(spec.vox_offset)) : 348;
    const std::size_t elem = spec.datatype == 16 ? 4 : 2;
    std::vector<std::uint8_t> bytes(offset + voxels.size() * elem, 0);

    put<std::int32_t>(bytes, 0, spec.sizeof_hdr, swap);
    for (std::size_t i = 0; i < spec.dim.size() && i < 8; ++i)
        put<std::int16_t>(bytes, 40 + 2 * i, spec.dim[i], swap);
    put<std::int16_t>(bytes, 70, spec.datatype, swap);
    put<std::int16_t>(bytes, 72, static_cast<std::int16_t>(elem * 8), swap);  // bitpix
    put<float>(bytes, 108, spec.vox_offset, swap);
    put<float>(bytes, 112, spec.scl_slope, swap);
    put<float>(bytes, 116, spec.scl_inter, swap);
    std::copy(spec.magic.begin(), spec.magic.end(), bytes.begin() + 344);

    for (std::size_t i = 0; i < voxels.size(); ++i) {
        if (spec.datatype == 16)
            put<float>(bytes, offset + 4 * i, static_cast<float>(voxels[i]), swap);
        else
            put<std::int16_t>(bytes, offset + 2 * i,
                              static_cast<std::int16_t>(std::llround(voxels[i])), swap);
    }
    return bytes;
}

std::filesystem::path temp_dir(const std::string& name) {
    static const std::filesystem::path root = [] {
        auto p = std::filesystem::temp_directory_path() /
                 ("ctxplain-tests-" + std::to_string(::getpid()));
        std::filesystem::remove_all(p);
        std::filesystem::create_directories(p);
        return p;
    }();
    auto dir = root / name;
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testutil
