#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ctxplain/error.hpp"
#include "ctxplain/model.hpp"

namespace ctx {

// Weight container: "CTXW", then u32 format version, then u32 tensor count,
// then per tensor a length-prefixed UTF-8 name, u32 rank, u32 dims and the
// raw float32 payload. All integers and floats are little-endian.
inline constexpr std::uint32_t weights_format_version = 1;

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

inline void put_f32(std::vector<std::uint8_t>& out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

struct byte_reader {
    const std::uint8_t* p;
    std::size_t n;
    std::size_t pos = 0;

    void need(std::size_t k) const {
        if (pos + k > n) throw truncated_file("weight container ends mid-record");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = static_cast<std::uint32_t>(p[pos]) |
                          (static_cast<std::uint32_t>(p[pos + 1]) << 8) |
                          (static_cast<std::uint32_t>(p[pos + 2]) << 16) |
                          (static_cast<std::uint32_t>(p[pos + 3]) << 24);
        pos += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string str(std::size_t k) {
        need(k);
        std::string s(reinterpret_cast<const char*>(p + pos), k);
        pos += k;
        return s;
    }
};

}  // namespace detail

inline std::string param_name(std::size_t layer, const char* which) {
    return "layers." + std::to_string(layer) + "." + which;
}

struct named_tensor {
    std::string name;
    tensor value;
};

inline std::vector<std::uint8_t> serialize_weights(const std::vector<named_tensor>& tensors) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), {'C', 'T', 'X', 'W'});
    detail::put_u32(out, weights_format_version);
    detail::put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        detail::put_u32(out, static_cast<std::uint32_t>(t.name.size()));
        out.insert(out.end(), t.name.begin(), t.name.end());
        detail::put_u32(out, static_cast<std::uint32_t>(t.value.rank()));
        for (auto d : t.value.shape) detail::put_u32(out, static_cast<std::uint32_t>(d));
        for (float v : t.value.data) detail::put_f32(out, v);
    }
    return out;
}

inline std::vector<named_tensor> deserialize_weights(const std::vector<std::uint8_t>& bytes) {
    detail::byte_reader r{bytes.data(), bytes.size()};
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "CTXW", 4) != 0)
        throw bad_magic("weight container does not start with CTXW");
    r.pos = 4;
    const std::uint32_t ver = r.u32();
    if (ver != weights_format_version)
        throw version_mismatch("weight container has format version " + std::to_string(ver) +
                               ", expected " + std::to_string(weights_format_version));
    const std::uint32_t count = r.u32();
    std::vector<named_tensor> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        named_tensor t;
        t.name = r.str(r.u32());
        const std::uint32_t rank = r.u32();
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = r.u32();
        t.value = tensor(std::move(shape));
        for (auto& v : t.value.data) v = r.f32();
        out.push_back(std::move(t));
    }
    return out;
}

inline std::vector<named_tensor> collect_params(const model& m) {
    std::vector<named_tensor> out;
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        const auto& l = m.layers[i];
        if (!l.has_params()) continue;
        out.push_back({param_name(i, l.weights_name()), l.weights});
        out.push_back({param_name(i, "bias"), l.bias});
    }
    return out;
}

inline std::vector<std::uint8_t> serialize_model_weights(const model& m) {
    return serialize_weights(collect_params(m));
}

// Loads by name into the layer stack. Every parameter of the model must be
// present with its exact shape, and the container must not carry strays.
inline void load_model_weights(const std::vector<std::uint8_t>& bytes, model& m) {
    auto tensors = deserialize_weights(bytes);
    auto expected = collect_params(m);
    if (tensors.size() != expected.size())
        throw shape_mismatch("weight container holds " + std::to_string(tensors.size()) +
                             " tensors, model has " + std::to_string(expected.size()) +
                             " parameters");
    for (const auto& t : tensors) {
        bool found = false;
        for (std::size_t i = 0; i < m.layers.size() && !found; ++i) {
            auto& l = m.layers[i];
            if (!l.has_params()) continue;
            if (t.name == param_name(i, l.weights_name())) {
                if (t.value.shape != l.weights.shape)
                    throw shape_mismatch("tensor " + t.name + " has shape " +
                                         shape_string(t.value.shape) + ", model expects " +
                                         shape_string(l.weights.shape));
                l.weights = t.value;
                found = true;
            } else if (t.name == param_name(i, "bias")) {
                if (t.value.shape != l.bias.shape)
                    throw shape_mismatch("tensor " + t.name + " has shape " +
                                         shape_string(t.value.shape) + ", model expects " +
                                         shape_string(l.bias.shape));
                l.bias = t.value;
                found = true;
            }
        }
        if (!found) throw shape_mismatch("weight container names unknown tensor " + t.name);
    }
    m.bump_version();
}

inline void save_weights_file(const std::string& path, const model& m) {
    auto bytes = serialize_model_weights(m);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw io_error("short write to " + path);
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

inline void load_weights_file(const std::string& path, model& m) {
    load_model_weights(read_file_bytes(path), m);
}

}  // namespace ctx
