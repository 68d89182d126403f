#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "ctxplain/error.hpp"
#include "ctxplain/model.hpp"

namespace cli {

// Architecture sidecar: the CTXW weight container carries tensors only, so
// the layer stack travels in a small JSON file next to it.
inline nlohmann::ordered_json arch_to_json(const ctx::model& m) {
    nlohmann::ordered_json j;
    j["format"] = "ctxplain-arch";
    j["version"] = 1;
    j["input_shape"] = m.input_shape;
    auto& layers = j["layers"] = nlohmann::ordered_json::array();
    for (const auto& l : m.layers) {
        nlohmann::ordered_json e;
        e["kind"] = ctx::layer_kind_name(l.kind);
        switch (l.kind) {
            case ctx::layer_kind::conv2d:
                e["out_channels"] = l.weights.dim(0);
                e["in_channels"] = l.weights.dim(1);
                e["kernel"] = l.weights.dim(2);
                e["stride"] = l.stride;
                e["pad"] = l.pad;
                e["frozen"] = l.frozen;
                break;
            case ctx::layer_kind::dense:
                e["out"] = l.weights.dim(0);
                e["in"] = l.weights.dim(1);
                e["frozen"] = l.frozen;
                break;
            case ctx::layer_kind::maxpool2d:
                e["pool"] = l.pool;
                e["stride"] = l.stride;
                break;
            default:
                break;
        }
        layers.push_back(std::move(e));
    }
    return j;
}

inline ctx::model model_from_arch(const nlohmann::json& j) {
    using L = ctx::basic_layer<float>;
    if (j.value("format", "") != "ctxplain-arch")
        throw ctx::error("architecture file is not in ctxplain-arch format");
    if (j.value("version", 0) != 1)
        throw ctx::version_mismatch("architecture file has unsupported version");
    ctx::model m;
    m.input_shape = j.at("input_shape").get<std::vector<std::size_t>>();
    for (const auto& e : j.at("layers")) {
        const std::string kind = e.at("kind").get<std::string>();
        if (kind == "conv2d") {
            auto l = L::conv2d(e.at("out_channels").get<std::size_t>(),
                               e.at("in_channels").get<std::size_t>(),
                               e.at("kernel").get<std::size_t>(), e.value("stride", std::size_t{1}),
                               e.value("pad", std::size_t{0}));
            l.frozen = e.value("frozen", false);
            m.layers.push_back(std::move(l));
        } else if (kind == "dense") {
            auto l = L::dense(e.at("out").get<std::size_t>(), e.at("in").get<std::size_t>());
            l.frozen = e.value("frozen", false);
            m.layers.push_back(std::move(l));
        } else if (kind == "maxpool2d") {
            m.layers.push_back(
                L::maxpool2d(e.at("pool").get<std::size_t>(), e.at("stride").get<std::size_t>()));
        } else if (kind == "relu") {
            m.layers.push_back(L::relu());
        } else if (kind == "sigmoid") {
            m.layers.push_back(L::sigmoid());
        } else if (kind == "global_avg_pool") {
            m.layers.push_back(L::global_avg_pool());
        } else {
            throw ctx::error("architecture file names unknown layer kind \"" + kind + "\"");
        }
    }
    return m;
}

inline void save_arch(const std::string& path, const ctx::model& m) {
    std::ofstream f(path);
    if (!f) throw ctx::io_error("cannot open " + path + " for writing");
    f << arch_to_json(m).dump(2) << "\n";
    if (!f) throw ctx::io_error("short write to " + path);
}

inline ctx::model load_arch(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ctx::io_error("cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ctx::error("cannot parse " + path + ": " + e.what());
    }
    try {
        return model_from_arch(j);
    } catch (const nlohmann::json::exception& e) {
        throw ctx::error("architecture file " + path + " is malformed: " + e.what());
    }
}

}  // namespace cli
