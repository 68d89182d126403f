#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

namespace testutil {

// Synthetic NIfTI-1 stream builder. Fields start from a valid little-endian
// single-file header; individual members can be broken to provoke parser
// errors. `big_endian` byte-swaps every numeric header field and the payload
// (the magic stays raw bytes).
struct nifti_spec {
    std::vector<std::int16_t> dim = {3, 4, 4, 2};  // dim[0] = ndim
    std::int16_t datatype = 4;                     // 4 = int16, 16 = float32
    float vox_offset = 352.f;
    float scl_slope = 1.f;
    float scl_inter = 0.f;
    std::int32_t sizeof_hdr = 348;
    std::array<char, 4> magic = {'n', '+', '1', '\0'};
    bool big_endian = false;
};

std::vector<std::uint8_t> make_nifti(const nifti_spec& spec, const std::vector<double>& voxels);

// Per-test scratch directory under a process-unique root.
std::filesystem::path temp_dir(const std::string& name);

}  // namespace testutil
