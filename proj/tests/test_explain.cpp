#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ctxplain/explain.hpp"
#include "ctxplain/image_ops.hpp"
#include "ctxplain/model.hpp"
#include "ctxplain/rng.hpp"

namespace {

using dmodel = ctx::basic_model<double>;
using dlayer = ctx::basic_layer<double>;
using dtensor = ctx::basic_tensor<double>;

void randomize(ctx::model& m, std::uint64_t seed) {
    ctx::rng64 rng(seed);
    for (auto& l : m.layers)
        if (l.has_params()) {
            for (auto& v : l.weights.data) v = static_cast<float>(rng.uniform(-0.8, 0.8));
            for (auto& v : l.bias.data) v = static_cast<float>(rng.uniform(-0.2, 0.2));
        }
}

ctx::float_image ramp_image(int w, int h) {
    ctx::float_image img(w, h, 1);
    for (std::size_t j = 0; j < img.data.size(); ++j)
        img.data[j] = static_cast<float>(j) / static_cast<float>(img.data.size() - 1);
    return img;
}

ctx::tensor batch1(const ctx::float_image& img) {
    ctx::tensor x({1, 1, static_cast<std::size_t>(img.height), static_cast<std::size_t>(img.width)});
    std::copy(img.data.begin(), img.data.end(), x.data.begin());
    return x;
}

}  // namespace

TEST_CASE("grad_cam_raw alphas match central differences of the logit") {
    // piecewise-linear tail after the localized conv layer, so central
    // differences are exact wherever no ReLU unit changes sign
    dmodel m;
    m.input_shape = {1, 4, 4};
    m.layers.push_back(dlayer::conv2d(3, 1, 3, 1, 1));
    m.layers.push_back(dlayer::relu());
    m.layers.push_back(dlayer::conv2d(4, 3, 3, 1, 1));
    m.layers.push_back(dlayer::relu());
    m.layers.push_back(dlayer::global_avg_pool());
    m.layers.push_back(dlayer::dense(1, 4));
    m.layers.push_back(dlayer::sigmoid());

    const double h = 1e-5;
    bool found = false;
    dtensor x({1, 1, 4, 4});
    ctx::basic_forward_record<double> rec;
    for (std::uint64_t attempt = 0; attempt < 80 && !found; ++attempt) {
        ctx::rng64 rng(3100 + attempt);
        for (auto& l : m.layers)
            if (l.has_params()) {
                for (auto& v : l.weights.data) v = rng.uniform(-0.8, 0.8);
                for (auto& v : l.bias.data) v = rng.uniform(-0.2, 0.2);
            }
        m.bump_version();
        for (auto& v : x.data) v = rng.uniform(0.0, 1.0);
        rec = m.forward(x);
        found = true;
        for (double v : rec.acts[3].data)  // the ReLU the perturbation crosses
            if (std::abs(v) < 1e-3) found = false;
    }
    REQUIRE(found);

    const auto cam = ctx::grad_cam_raw(m, rec, ctx::explain_target::positive);
    CHECK(cam.conv_layer == 2);

    auto tail = m.slice(3, m.layers.size());
    const std::size_t tail_logit = tail.layers.size() - 1;
    auto logit_of = [&](const dtensor& a) {
        auto r = tail.forward(a);
        return r.acts[tail_logit][0];
    };

    dtensor a = rec.acts[3];
    const std::size_t channels = a.dim(1), area = a.dim(2) * a.dim(3);
    REQUIRE(cam.alphas.numel() == channels);

    double worst = 0.0;
    std::vector<double> alpha_fd(channels, 0.0);
    for (std::size_t k = 0; k < channels; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < area; ++j) {
            const std::size_t idx = k * area + j;
            const double keep = a[idx];
            a[idx] = keep + h;
            const double up = logit_of(a);
            a[idx] = keep - h;
            const double dn = logit_of(a);
            a[idx] = keep;
            acc += (up - dn) / (2 * h);
        }
        alpha_fd[k] = acc / static_cast<double>(area);
        const double denom = std::max({std::abs(alpha_fd[k]), std::abs(cam.alphas[k]), 1e-2});
        worst = std::max(worst, std::abs(alpha_fd[k] - cam.alphas[k]) / denom);
    }
    CHECK(worst < 1e-8);

    // the map is the ReLU of the alpha-weighted channel sum
    for (std::size_t j = 0; j < area; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < channels; ++k) acc += cam.alphas[k] * a[k * area + j];
        CHECK(cam.map[j] == std::max(acc, 0.0));
    }
}

TEST_CASE("a single positive-channel model reduces grad_cam to its activation") {
    // last conv -> GAP -> dense(+w) -> sigmoid: alpha is a positive constant,
    // so the normalized heatmap equals the upsampled, normalized ReLU of the
    // conv output; the pooling stage makes the upsample a genuine 4x4 -> 8x8
    ctx::model m;
    m.input_shape = {1, 8, 8};
    m.layers.push_back(ctx::layer::conv2d(1, 1, 3, 1, 1));
    m.layers.push_back(ctx::layer::maxpool2d(2, 2));
    m.layers.push_back(ctx::layer::conv2d(1, 1, 3, 1, 1));
    m.layers.push_back(ctx::layer::global_avg_pool());
    m.layers.push_back(ctx::layer::dense(1, 1));
    m.layers.push_back(ctx::layer::sigmoid());
    ctx::rng64 rng(3200);
    for (auto& v : m.layers[0].weights.data) v = static_cast<float>(rng.uniform(0.0, 1.0));
    for (auto& v : m.layers[2].weights.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    m.layers[2].bias[0] = -0.1f;
    m.layers[4].weights[0] = 2.0f;

    auto img = ramp_image(8, 8);
    auto rec = m.forward(batch1(img));
    const auto& a = rec.acts[3];  // last conv output, 4x4
    REQUIRE(a.dim(2) == 4);
    bool mixed = false;
    for (float v : a.data) mixed = mixed || v < 0.f;
    REQUIRE(mixed);  // the map's ReLU must actually clip something

    ctx::float_image coarse(4, 4, 1);
    for (std::size_t j = 0; j < a.numel(); ++j) coarse.data[j] = std::max(a[j], 0.0f);
    auto fine = ctx::resize_bilinear(coarse, img.width, img.height);
    float mx = 0.f;
    for (float v : fine.data) mx = std::max(mx, v);
    REQUIRE(mx > 0.f);

    const auto heat = ctx::grad_cam(m, img, ctx::explain_target::positive);
    REQUIRE(heat.values.size() == fine.data.size());
    for (std::size_t j = 0; j < fine.data.size(); ++j)
        CHECK(std::abs(heat.values[j] - fine.data[j] / mx) < 1e-6f);
}

TEST_CASE("grad_cam is invariant to positive scaling of the logit") {
    ctx::model m;
    m.input_shape = {1, 8, 8};
    m.layers.push_back(ctx::layer::conv2d(2, 1, 3, 1, 1));
    m.layers.push_back(ctx::layer::relu());
    m.layers.push_back(ctx::layer::global_avg_pool());
    m.layers.push_back(ctx::layer::dense(1, 2));
    m.layers.push_back(ctx::layer::sigmoid());
    randomize(m, 3300);

    auto img = ramp_image(8, 8);
    const auto before = ctx::grad_cam(m, img, ctx::explain_target::positive);
    float peak = 0.f;
    for (float v : before.values) peak = std::max(peak, v);
    REQUIRE(peak == 1.0f);  // a non-degenerate map normalizes to a unit peak

    for (auto& v : m.layers[3].weights.data) v *= 3.0f;
    m.layers[3].bias[0] *= 3.0f;
    m.bump_version();
    const auto after = ctx::grad_cam(m, img, ctx::explain_target::positive);
    REQUIRE(after.values.size() == before.values.size());
    for (std::size_t j = 0; j < before.values.size(); ++j)
        CHECK(std::abs(after.values[j] - before.values[j]) < 1e-6f);
}

TEST_CASE("an all-negative map falls back to a zero heatmap") {
    ctx::model m;
    m.input_shape = {1, 4, 4};
    m.layers.push_back(ctx::layer::conv2d(1, 1, 3, 1, 1));
    m.layers.push_back(ctx::layer::global_avg_pool());
    m.layers.push_back(ctx::layer::dense(1, 1));
    m.layers.push_back(ctx::layer::sigmoid());
    for (auto& v : m.layers[0].weights.data) v = 0.1f;
    m.layers[0].bias[0] = 0.1f;       // conv output strictly positive
    m.layers[2].weights[0] = -2.0f;   // alpha strictly negative

    ctx::float_image img(4, 4, 1);
    for (auto& v : img.data) v = 0.5f;
    const auto heat = ctx::grad_cam(m, img, ctx::explain_target::positive);
    for (float v : heat.values) CHECK(v == 0.0f);
}

TEST_CASE("guided and standard backprop agree on a ReLU-free network") {
    ctx::model m;
    m.input_shape = {1, 5, 5};
    m.layers.push_back(ctx::layer::conv2d(2, 1, 3, 1, 0));
    m.layers.push_back(ctx::layer::global_avg_pool());
    m.layers.push_back(ctx::layer::dense(1, 2));
    m.layers.push_back(ctx::layer::sigmoid());
    randomize(m, 3400);

    auto img = ramp_image(5, 5);
    auto rec = m.forward(batch1(img));
    auto g = ctx::input_gradient(m, rec, ctx::explain_target::positive, ctx::backprop_mode::guided);
    auto s =
        ctx::input_gradient(m, rec, ctx::explain_target::positive, ctx::backprop_mode::standard);
    CHECK(g.data == s.data);
}

TEST_CASE("guided backprop zeroes gradients blocked by either gate") {
    ctx::model m;
    m.input_shape = {4};
    m.layers.push_back(ctx::layer::relu());

    ctx::tensor x({1, 4});
    x.data = {-1.f, 2.f, 3.f, -4.f};
    auto rec = m.forward(x);
    ctx::tensor up({1, 4});
    up.data = {1.f, -1.f, 5.f, 2.f};

    auto standard = m.backward(rec, up, ctx::backprop_mode::standard);
    CHECK(standard.input.data == std::vector<float>{0.f, -1.f, 5.f, 0.f});
    auto guided = m.backward(rec, up, ctx::backprop_mode::guided);
    CHECK(guided.input.data == std::vector<float>{0.f, 0.f, 5.f, 0.f});
}

TEST_CASE("the negative target is the exact negation of the positive one") {
    ctx::model m;
    m.input_shape = {1, 6, 6};
    m.layers.push_back(ctx::layer::conv2d(2, 1, 3, 1, 1));
    m.layers.push_back(ctx::layer::relu());
    m.layers.push_back(ctx::layer::global_avg_pool());
    m.layers.push_back(ctx::layer::dense(1, 2));
    m.layers.push_back(ctx::layer::sigmoid());
    randomize(m, 3500);

    auto rec = m.forward(batch1(ramp_image(6, 6)));
    auto pos =
        ctx::input_gradient(m, rec, ctx::explain_target::positive, ctx::backprop_mode::standard);
    auto neg =
        ctx::input_gradient(m, rec, ctx::explain_target::negative, ctx::backprop_mode::standard);
    REQUIRE(pos.numel() == neg.numel());
    for (std::size_t j = 0; j < pos.numel(); ++j) CHECK(neg[j] == -pos[j]);
}

TEST_CASE("a terminal sigmoid does not change the explained logit") {
    ctx::model bare;
    bare.input_shape = {1, 6, 6};
    bare.layers.push_back(ctx::layer::conv2d(2, 1, 3, 1, 1));
    bare.layers.push_back(ctx::layer::relu());
    bare.layers.push_back(ctx::layer::global_avg_pool());
    bare.layers.push_back(ctx::layer::dense(1, 2));
    randomize(bare, 3600);

    ctx::model capped = bare;
    capped.layers.push_back(ctx::layer::sigmoid());

    auto img = ramp_image(6, 6);
    auto rec_bare = bare.forward(batch1(img));
    auto rec_capped = capped.forward(batch1(img));
    auto g_bare = ctx::input_gradient(bare, rec_bare, ctx::explain_target::positive,
                                      ctx::backprop_mode::standard);
    auto g_capped = ctx::input_gradient(capped, rec_capped, ctx::explain_target::positive,
                                        ctx::backprop_mode::standard);
    CHECK(g_bare.data == g_capped.data);
}

TEST_CASE("saliency_from_gradient min-max normalizes and keeps the raw values") {
    ctx::tensor g({1, 1, 1, 3});
    g.data = {-2.f, 0.f, 2.f};
    auto s = ctx::saliency_from_gradient(g, 3, 1);
    CHECK(s.raw == std::vector<float>{-2.f, 0.f, 2.f});
    CHECK(s.render == std::vector<float>{0.f, 0.5f, 1.f});

    ctx::tensor flat({1, 1, 1, 3});
    flat.fill(4.f);
    auto z = ctx::saliency_from_gradient(flat, 3, 1);
    CHECK(z.raw == std::vector<float>{4.f, 4.f, 4.f});
    CHECK(z.render == std::vector<float>{0.f, 0.f, 0.f});
}

TEST_CASE("guided_grad_cam is the exact product of its factors") {
    ctx::heatmap h(4, 1);
    h.values = {0.f, 0.5f, 1.f, 0.25f};
    ctx::saliency_map s;
    s.width = 4;
    s.height = 1;
    s.raw = {9.f, 9.f, 9.f, 9.f};  // must be ignored
    s.render = {1.f, 0.5f, 0.5f, 0.8f};

    auto g = ctx::guided_grad_cam(h, s);
    const std::vector<float> want = {0.f, 0.5f * 0.5f, 0.5f, 0.25f * 0.8f};
    CHECK(g.raw == want);
    CHECK(g.render == g.raw);

    ctx::saliency_map wrong = s;
    wrong.width = 3;
    CHECK_THROWS_AS(ctx::guided_grad_cam(h, wrong), ctx::shape_mismatch);
}

TEST_CASE("enhance_green triples only the green channel") {
    ctx::saliency_map s;
    s.width = 2;
    s.height = 1;
    s.render = {50.0f / 255.0f, 200.0f / 255.0f};
    s.raw = s.render;
    auto rgb = ctx::enhance_green(s);
    CHECK(rgb.data == std::vector<std::uint8_t>{50, 150, 50, 200, 255, 200});
}

TEST_CASE("heat_colormap hits its stops and interpolates linearly") {
    auto at = [](double v) { return ctx::heat_colormap(v); };
    CHECK(at(0.0) == std::array<double, 3>{0, 0, 255});
    CHECK(at(0.5) == std::array<double, 3>{0, 255, 0});
    CHECK(at(1.0) == std::array<double, 3>{255, 0, 0});
    CHECK(at(0.25) == std::array<double, 3>{0, 127.5, 127.5});
    CHECK(at(0.75) == std::array<double, 3>{127.5, 127.5, 0});
    CHECK(at(-1.0) == at(0.0));
    CHECK(at(2.0) == at(1.0));
}

TEST_CASE("overlay blends the colormap over gray at the requested alpha") {
    ctx::gray_image8 img(1, 1);
    img.data = {100};
    ctx::heatmap h(1, 1);
    h.values = {1.0f};
    auto rgb = ctx::overlay(img, h, 0.4);
    CHECK(rgb.data == std::vector<std::uint8_t>{162, 60, 60});

    CHECK_THROWS_AS(ctx::overlay(img, h, 1.5), ctx::error);
    ctx::heatmap wide(2, 1);
    CHECK_THROWS_AS(ctx::overlay(img, wide, 0.4), ctx::shape_mismatch);
}

TEST_CASE("render_gray quantizes the render channel") {
    ctx::saliency_map s;
    s.width = 3;
    s.height = 1;
    s.render = {0.f, 0.5f, 1.f};
    s.raw = s.render;
    auto g = ctx::render_gray(s);
    CHECK(g.data == std::vector<std::uint8_t>{0, 128, 255});
}

TEST_CASE("saliency entry points validate their inputs") {
    ctx::model dense_only;
    dense_only.input_shape = {4};
    dense_only.layers.push_back(ctx::layer::dense(1, 4));
    dense_only.layers.push_back(ctx::layer::sigmoid());
    randomize(dense_only, 3700);
    ctx::tensor x({1, 4});
    x.fill(0.3f);
    auto rec = dense_only.forward(x);
    CHECK_THROWS_AS(ctx::grad_cam_raw(dense_only, rec, ctx::explain_target::positive),
                    ctx::no_conv_layer);

    ctx::forward_record empty;
    CHECK_THROWS_AS(ctx::grad_cam_raw(dense_only, empty, ctx::explain_target::positive),
                    ctx::no_forward_record);
    CHECK_THROWS_AS(ctx::input_gradient(dense_only, empty, ctx::explain_target::positive,
                                        ctx::backprop_mode::standard),
                    ctx::no_forward_record);
}
