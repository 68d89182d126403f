#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "ctxplain/backbone.hpp"
#include "ctxplain/model.hpp"
#include "ctxplain/rng.hpp"
#include "ctxplain/weights_io.hpp"

#include "support.hpp"

namespace {

ctx::model two_param_model() {
    ctx::model m;
    m.input_shape = {1, 4, 4};
    m.layers.push_back(ctx::layer::conv2d(2, 1, 3, 1, 1));
    m.layers.push_back(ctx::layer::relu());
    m.layers.push_back(ctx::layer::global_avg_pool());
    m.layers.push_back(ctx::layer::dense(1, 2));
    ctx::rng64 rng(77);
    for (auto& l : m.layers)
        if (l.has_params()) {
            for (auto& v : l.weights.data) v = static_cast<float>(rng.uniform(-1, 1));
            for (auto& v : l.bias.data) v = static_cast<float>(rng.uniform(-1, 1));
        }
    return m;
}

}  // namespace

TEST_CASE("param_name spells layer index and tensor role") {
    CHECK(ctx::param_name(0, "kernel") == "layers.0.kernel");
    CHECK(ctx::param_name(13, "bias") == "layers.13.bias");
}

TEST_CASE("collect_params names tensors by kind and skips parameterless layers") {
    auto m = two_param_model();
    auto params = ctx::collect_params(m);
    REQUIRE(params.size() == 4);
    CHECK(params[0].name == "layers.0.kernel");
    CHECK(params[1].name == "layers.0.bias");
    CHECK(params[2].name == "layers.3.weight");
    CHECK(params[3].name == "layers.3.bias");
}

TEST_CASE("named tensors survive a serialize/deserialize round trip bit-exactly") {
    std::vector<ctx::named_tensor> in;
    ctx::named_tensor a;
    a.name = "layers.0.kernel";
    a.value = ctx::tensor({2, 1, 3, 3});
    ctx::rng64 rng(5);
    for (auto& v : a.value.data) v = static_cast<float>(rng.uniform(-10, 10));
    a.value[0] = -0.0f;
    a.value[1] = 3.14159274f;
    in.push_back(a);
    ctx::named_tensor b;
    b.name = "layers.0.bias";
    b.value = ctx::tensor({2});
    b.value.data = {1.5f, -2.25f};
    in.push_back(b);

    const auto bytes = ctx::serialize_weights(in);
    REQUIRE(bytes.size() >= 4);
    CHECK(bytes[0] == 'C');
    CHECK(bytes[1] == 'T');
    CHECK(bytes[2] == 'X');
    CHECK(bytes[3] == 'W');

    const auto out = ctx::deserialize_weights(bytes);
    REQUIRE(out.size() == in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
        CHECK(out[i].name == in[i].name);
        CHECK(out[i].value.shape == in[i].value.shape);
        CHECK(out[i].value.data == in[i].value.data);
    }
    CHECK(std::signbit(out[0].value[0]));
    // a second serialization of the decoded tensors reproduces the bytes
    CHECK(ctx::serialize_weights(out) == bytes);
}

TEST_CASE("model weights round-trip through the container into a fresh model") {
    auto m = two_param_model();
    const auto bytes = ctx::serialize_model_weights(m);

    auto fresh = two_param_model();
    for (auto& l : fresh.layers)
        if (l.has_params()) {
            l.weights.fill(0.0f);
            l.bias.fill(0.0f);
        }
    ctx::load_model_weights(bytes, fresh);
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        CHECK(fresh.layers[i].weights.data == m.layers[i].weights.data);
        CHECK(fresh.layers[i].bias.data == m.layers[i].bias.data);
    }
    CHECK(ctx::serialize_model_weights(fresh) == bytes);
}

TEST_CASE("loading weights invalidates outstanding forward records") {
    auto m = two_param_model();
    ctx::tensor x({1, 1, 4, 4});
    x.fill(0.25f);
    auto rec = m.forward(x);
    ctx::load_model_weights(ctx::serialize_model_weights(m), m);
    ctx::tensor d({1, 1});
    d.fill(1.0f);
    CHECK_THROWS_AS(m.backward(rec, d), ctx::stale_record);
}

TEST_CASE("the loader rejects damaged containers") {
    auto m = two_param_model();
    const auto good = ctx::serialize_model_weights(m);

    SECTION("wrong magic") {
        auto bad = good;
        bad[0] = 'X';
        CHECK_THROWS_AS(ctx::deserialize_weights(bad), ctx::bad_magic);
    }
    SECTION("empty buffer") {
        CHECK_THROWS_AS(ctx::deserialize_weights({}), ctx::bad_magic);
    }
    SECTION("unknown format version") {
        auto bad = good;
        bad[4] = 9;
        CHECK_THROWS_AS(ctx::deserialize_weights(bad), ctx::version_mismatch);
    }
    SECTION("payload cut short") {
        auto bad = good;
        bad.pop_back();
        CHECK_THROWS_AS(ctx::deserialize_weights(bad), ctx::truncated_file);
    }
    SECTION("header cut short") {
        std::vector<std::uint8_t> bad(good.begin(), good.begin() + 6);
        CHECK_THROWS_AS(ctx::deserialize_weights(bad), ctx::truncated_file);
    }
}

TEST_CASE("the loader enforces the model's parameter inventory") {
    auto m = two_param_model();
    const auto bytes = ctx::serialize_model_weights(m);

    SECTION("tensor count mismatch") {
        ctx::model small;
        small.input_shape = {2};
        small.layers.push_back(ctx::layer::dense(1, 2));
        CHECK_THROWS_AS(ctx::load_model_weights(bytes, small), ctx::shape_mismatch);
    }
    SECTION("name mismatch: a dense layer cannot satisfy a conv kernel") {
        ctx::model other;
        other.input_shape = {2};
        other.layers.push_back(ctx::layer::dense(2, 2));
        other.layers.push_back(ctx::layer::relu());
        other.layers.push_back(ctx::layer::relu());
        other.layers.push_back(ctx::layer::dense(1, 2));
        CHECK_THROWS_AS(ctx::load_model_weights(bytes, other), ctx::shape_mismatch);
    }
    SECTION("shape mismatch on a matching name") {
        ctx::model wider;
        wider.input_shape = {1, 4, 4};
        wider.layers.push_back(ctx::layer::conv2d(3, 1, 3, 1, 1));
        wider.layers.push_back(ctx::layer::relu());
        wider.layers.push_back(ctx::layer::global_avg_pool());
        wider.layers.push_back(ctx::layer::dense(1, 3));
        CHECK_THROWS_AS(ctx::load_model_weights(bytes, wider), ctx::shape_mismatch);
    }
}

TEST_CASE("weights save to disk and load back identically") {
    const auto dir = testutil::temp_dir("weights");
    const auto path = (dir / "model.ctxw").string();

    auto m = ctx::tiny_backbone(31, 32);
    ctx::save_weights_file(path, m);

    auto fresh = ctx::tiny_backbone(32, 32);  // different seed, same architecture
    REQUIRE(ctx::serialize_model_weights(fresh) != ctx::serialize_model_weights(m));
    ctx::load_weights_file(path, fresh);
    CHECK(ctx::serialize_model_weights(fresh) == ctx::serialize_model_weights(m));

    CHECK(ctx::read_file_bytes(path) == ctx::serialize_model_weights(m));
}

TEST_CASE("file helpers report I/O failures") {
    const auto dir = testutil::temp_dir("weights-io");
    CHECK_THROWS_AS(ctx::read_file_bytes((dir / "absent.ctxw").string()), ctx::io_error);
    auto m = two_param_model();
    CHECK_THROWS_AS(ctx::load_weights_file((dir / "absent.ctxw").string(), m), ctx::io_error);
    CHECK_THROWS_AS(ctx::save_weights_file((dir / "no-such-dir" / "w.ctxw").string(), m),
                    ctx::io_error);
}
