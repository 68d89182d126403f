#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <zlib.h>

#include "ctxplain/error.hpp"

namespace ctx {

inline bool is_gzip(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

// Inflate a gzip stream fully into memory.
inline std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> bytes) {
    z_stream zs{};
    // 15 + 16 selects gzip decoding
    if (inflateInit2(&zs, 15 + 16) != Z_OK) throw io_error("inflateInit2 failed");
    std::vector<std::uint8_t> out;
    std::vector<std::uint8_t> buf(1 << 16);
    zs.next_in = const_cast<Bytef*>(bytes.data());
    zs.avail_in = static_cast<uInt>(bytes.size());
    int rc = Z_OK;
    do {
        zs.next_out = buf.data();
        zs.avail_out = static_cast<uInt>(buf.size());
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw io_error("gzip stream corrupt");
        }
        out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
    } while (rc != Z_STREAM_END);
    inflateEnd(&zs);
    return out;
}

}  // namespace ctx
