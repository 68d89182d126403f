#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ctxplain/backbone.hpp"
#include "ctxplain/model.hpp"
#include "ctxplain/rng.hpp"

namespace {

using dmodel = ctx::basic_model<double>;
using dlayer = ctx::basic_layer<double>;
using dtensor = ctx::basic_tensor<double>;

}  // namespace

TEST_CASE("a 3x3 convolution with known weights matches hand arithmetic") {
    dmodel m;
    m.input_shape = {1, 3, 3};
    auto conv = dlayer::conv2d(1, 1, 2);  // stride 1, no padding
    conv.weights.data = {1, 2, 3, 4};
    conv.bias.data = {10};
    m.layers.push_back(conv);

    dtensor x({1, 1, 3, 3});
    x.data = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    auto rec = m.forward(x);
    REQUIRE(rec.output().shape == std::vector<std::size_t>{1, 1, 2, 2});
    // window [1 2; 4 5] . [1 2; 3 4] + 10 = 1+4+12+20+10 = 47, etc.
    CHECK(rec.output().data == std::vector<double>{47, 57, 77, 87});
}

TEST_CASE("padding and stride shape arithmetic") {
    dmodel m;
    m.input_shape = {1, 5, 5};
    m.layers.push_back(dlayer::conv2d(2, 1, 3, 2, 1));
    auto shapes = m.boundary_shapes(1);
    // (5 + 2*1 - 3)/2 + 1 = 3
    CHECK(shapes[1] == std::vector<std::size_t>{1, 2, 3, 3});
}

TEST_CASE("padded convolution reads zeros outside the frame") {
    dmodel m;
    m.input_shape = {1, 2, 2};
    auto conv = dlayer::conv2d(1, 1, 3, 1, 1);
    conv.weights.fill(1.0);
    m.layers.push_back(conv);
    dtensor x({1, 1, 2, 2});
    x.data = {1, 2, 3, 4};
    auto rec = m.forward(x);
    // each output sums the in-frame pixels under a 3x3 window
    CHECK(rec.output().data == std::vector<double>{10, 10, 10, 10});
}

TEST_CASE("relu and sigmoid forward values") {
    dmodel m;
    m.input_shape = {4};
    m.layers.push_back(dlayer::relu());
    dtensor x({1, 4});
    x.data = {-2, -0.5, 0, 3};
    CHECK(m.forward(x).output().data == std::vector<double>{0, 0, 0, 3});

    dmodel s;
    s.input_shape = {3};
    s.layers.push_back(dlayer::sigmoid());
    dtensor y({1, 3});
    y.data = {0, 100, -100};
    auto out = s.forward(y).output();
    CHECK(out[0] == 0.5);
    CHECK(out[1] > 0.999999);
    CHECK(out[2] < 0.000001);
}

TEST_CASE("maxpool keeps the first occurrence of a tied maximum") {
    dmodel m;
    m.input_shape = {1, 2, 2};
    m.layers.push_back(dlayer::maxpool2d(2, 2));
    dtensor x({1, 1, 2, 2});
    x.data = {7, 7, 7, 7};
    auto rec = m.forward(x);
    CHECK(rec.output().data == std::vector<double>{7});
    REQUIRE(rec.pool_argmax.size() == 1);
    REQUIRE(rec.pool_argmax[0].size() == 1);
    CHECK(rec.pool_argmax[0][0] == 0);  // flat index of the first tied winner
}

TEST_CASE("maxpool argmax stores flat input indices") {
    dmodel m;
    m.input_shape = {1, 4, 4};
    m.layers.push_back(dlayer::maxpool2d(2, 2));
    dtensor x({1, 1, 4, 4});
    for (std::size_t i = 0; i < 16; ++i) x[i] = static_cast<double>(i);
    auto rec = m.forward(x);
    CHECK(rec.output().data == std::vector<double>{5, 7, 13, 15});
    CHECK(rec.pool_argmax[0] == std::vector<std::size_t>{5, 7, 13, 15});
}

TEST_CASE("global average pooling averages each channel plane") {
    dmodel m;
    m.input_shape = {2, 2, 2};
    m.layers.push_back(dlayer::global_avg_pool());
    dtensor x({1, 2, 2, 2});
    x.data = {1, 2, 3, 4, 10, 20, 30, 40};
    CHECK(m.forward(x).output().data == std::vector<double>{2.5, 25});
}

TEST_CASE("dense layers compute Wx + b per batch row") {
    dmodel m;
    m.input_shape = {2};
    auto d = dlayer::dense(2, 2);
    d.weights.data = {1, 2, 3, 4};  // row-major [out, in]
    d.bias.data = {0.5, -0.5};
    m.layers.push_back(d);
    dtensor x({2, 2});
    x.data = {1, 1, 2, 0};
    auto out = m.forward(x).output();
    CHECK(out.data == std::vector<double>{3.5, 6.5, 2.5, 5.5});
}

TEST_CASE("forward rejects inputs that do not match the declared shape") {
    dmodel m;
    m.input_shape = {1, 4, 4};
    m.layers.push_back(dlayer::relu());
    dtensor bad({1, 1, 3, 3});
    CHECK_THROWS_AS(m.forward(bad), ctx::shape_mismatch);
    dtensor flat({4});
    CHECK_THROWS_AS(m.forward(flat), ctx::shape_mismatch);
}

TEST_CASE("a stale forward record is rejected after parameters change") {
    dmodel m;
    m.input_shape = {2};
    m.layers.push_back(dlayer::dense(1, 2));
    dtensor x({1, 2});
    x.data = {1, 2};
    auto rec = m.forward(x);
    m.bump_version();
    dtensor dy({1, 1});
    dy.fill(1.0);
    CHECK_THROWS_AS(m.backward(rec, dy), ctx::stale_record);
    CHECK_THROWS_AS(m.backward_span(rec, 1, 0, dy), ctx::stale_record);
}

TEST_CASE("slice plus adopt_params reproduces the full forward pass") {
    auto backbone = ctx::tiny_backbone(42, 32);
    auto m = ctx::build_transfer_model(backbone, 43, 16);
    const std::size_t cut = 6;

    auto stem = m.slice(0, cut);
    auto head = m.slice(cut, m.layers.size());
    REQUIRE(stem.layers.size() + head.layers.size() == m.layers.size());

    ctx::tensor x({1, 1, 32, 32});
    ctx::rng64 rng(77);
    for (auto& v : x.data) v = static_cast<float>(rng.uniform());

    auto full = m.forward(x);
    auto mid = stem.forward(x);
    auto composed = head.forward(mid.output());
    REQUIRE(composed.output().numel() == full.output().numel());
    for (std::size_t i = 0; i < full.output().numel(); ++i)
        CHECK(composed.output()[i] == full.output()[i]);

    // adopting the head back into a copy changes nothing when weights match
    auto copy = m;
    copy.adopt_params(head, cut);
    auto again = copy.forward(x);
    for (std::size_t i = 0; i < full.output().numel(); ++i)
        CHECK(again.output()[i] == full.output()[i]);
}

TEST_CASE("adopt_params validates layer kinds and bumps the version") {
    dmodel m;
    m.input_shape = {2};
    m.layers.push_back(dlayer::dense(2, 2));
    m.layers.push_back(dlayer::relu());
    const auto v0 = m.version;

    dmodel donor;
    donor.input_shape = {2};
    donor.layers.push_back(dlayer::dense(2, 2));
    donor.layers[0].weights.fill(3.0);
    m.adopt_params(donor, 0);
    CHECK(m.version > v0);
    CHECK(m.layers[0].weights.data == std::vector<double>(4, 3.0));

    dmodel wrong;
    wrong.layers.push_back(dlayer::relu());
    wrong.layers.push_back(dlayer::relu());
    wrong.layers.push_back(dlayer::relu());
    CHECK_THROWS_AS(m.adopt_params(wrong, 0), ctx::index_out_of_range);
    dmodel mismatched;
    mismatched.layers.push_back(dlayer::relu());
    CHECK_THROWS_AS(m.adopt_params(mismatched, 0), ctx::shape_mismatch);
}

TEST_CASE("tiny backbone delivers a 32x28x28 feature map for 224 input") {
    auto m = ctx::tiny_backbone(1, 224);
    auto shapes = m.boundary_shapes(1);
    CHECK(shapes.back() == std::vector<std::size_t>{1, 32, 28, 28});
}

TEST_CASE("transfer head parameter count follows C*H + H + H + 1") {
    auto backbone = ctx::tiny_backbone(2, 224);
    auto m = ctx::build_transfer_model(backbone, 3, 512);
    std::size_t head_params = 0;
    for (std::size_t i = backbone.layers.size(); i < m.layers.size(); ++i) {
        head_params += m.layers[i].weights.numel() + m.layers[i].bias.numel();
    }
    CHECK(head_params == 32 * 512 + 512 + 512 + 1);
}

TEST_CASE("transfer model freezes the backbone and trains the head") {
    auto backbone = ctx::tiny_backbone(4, 64);
    auto m = ctx::build_transfer_model(backbone, 5, 8);
    for (std::size_t i = 0; i < backbone.layers.size(); ++i) CHECK(m.layers[i].frozen);
    for (std::size_t i = backbone.layers.size(); i < m.layers.size(); ++i)
        CHECK_FALSE(m.layers[i].frozen);

    auto open = ctx::build_transfer_model(backbone, 5, 8, false);
    for (const auto& l : open.layers) CHECK_FALSE(l.frozen);
}

TEST_CASE("transfer model requires a rank-4 backbone output") {
    dmodel flat;
    flat.input_shape = {4};
    flat.layers.push_back(dlayer::dense(4, 4));
    auto f = flat.cast<float>();
    CHECK_THROWS_AS(ctx::build_transfer_model(f, 1, 8), ctx::no_conv_output);
}

TEST_CASE("glorot initialization respects the fan bound and the seed") {
    auto a = ctx::tensor::glorot_uniform({16, 8}, 8, 16, 99);
    auto b = ctx::tensor::glorot_uniform({16, 8}, 8, 16, 99);
    auto c = ctx::tensor::glorot_uniform({16, 8}, 8, 16, 100);
    CHECK(a.data == b.data);
    CHECK(a.data != c.data);
    const float bound = std::sqrt(6.0f / (8 + 16));
    float mean = 0.f;
    for (float v : a.data) {
        CHECK(std::abs(v) <= bound);
        mean += v;
    }
    CHECK(std::abs(mean / a.numel()) < bound / 4);
}

TEST_CASE("backbone initialization is deterministic in the seed") {
    auto a = ctx::tiny_backbone(7, 64);
    auto b = ctx::tiny_backbone(7, 64);
    auto c = ctx::tiny_backbone(8, 64);
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        CHECK(a.layers[i].weights.data == b.layers[i].weights.data);
        if (a.layers[i].has_params()) CHECK(a.layers[i].bias.data == b.layers[i].bias.data);
    }
    bool differs = false;
    for (std::size_t i = 0; i < a.layers.size(); ++i)
        differs |= a.layers[i].weights.data != c.layers[i].weights.data;
    CHECK(differs);
}

TEST_CASE("conv biases start at zero") {
    auto m = ctx::tiny_backbone(11, 64);
    for (const auto& l : m.layers)
        if (l.has_params())
            for (float v : l.bias.data) CHECK(v == 0.f);
}

TEST_CASE("param_count sums weights and biases") {
    dmodel m;
    m.input_shape = {1, 4, 4};
    m.layers.push_back(dlayer::conv2d(2, 1, 3));  // 2*1*3*3 + 2 = 20
    m.layers.push_back(dlayer::relu());
    m.layers.push_back(dlayer::global_avg_pool());
    m.layers.push_back(dlayer::dense(1, 2));  // 2 + 1 = 3
    CHECK(m.param_count() == 23);
}
