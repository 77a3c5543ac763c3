#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "tspfcn/errors.hpp"
#include "tspfcn/gradcheck.hpp"
#include "tspfcn/model.hpp"
#include "tspfcn/raster.hpp"

using namespace tspfcn;
using namespace tspfcn::net;

namespace {

ArchConfig tiny() {
    ArchConfig a;
    a.input_size = 32;
    a.head_channels = 16;
    a.score_channels = 2;
    return a;
}

double naive_loss(const Tensor<double>& y, const Tensor<double>& label) {
    const double eps = 1e-12;
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double v = std::min(std::max(y[i], eps), 1.0 - eps);
        s -= label[i] * std::log(v);
    }
    return s / static_cast<double>(y.size());
}

} // namespace

TEST_CASE("loss matches a direct loop and its closed forms") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    LabelMask m(6, 5);
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 6; ++x) {
            m.set_path(x, y, u(rng) < 0.3);
        }
    }
    const auto label = m.one_hot<double>();
    Tensor<double> probs(label.shape());
    for (auto& v : probs.values()) {
        v = u(rng);
    }
    probs[0] = 0.0;
    CHECK(loss(probs, label) == doctest::Approx(naive_loss(probs, label)).epsilon(1e-12));

    CHECK(std::abs(loss(Tensor<double>(label.shape(), 0.5), label) - std::log(2.0) / 2.0) < 1e-12);
    CHECK(loss(label, label) <= 1e-11);
    CHECK_THROWS_AS(loss(Tensor<double>({2, 5, 5}), label), ShapeError);
}

TEST_CASE("architecture presets and validation") {
    const auto p = ArchConfig::paper();
    CHECK(p.input_size == 224);
    CHECK(p.channels == std::array<int, 5>{64, 128, 256, 512, 512});
    CHECK(ArchConfig::desk() == ArchConfig{});
    ArchConfig bad;
    bad.input_size = 48;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK(arch_from_json(to_json(p)) == p);
    auto c = tiny();
    c.output = OutputActivation::channel_sigmoid;
    CHECK(arch_from_json(to_json(c)) == c);
    CHECK(output_activation_from_string(to_string(OutputActivation::paired_sigmoid)) ==
          OutputActivation::paired_sigmoid);
}

TEST_CASE("initialization is seeded, biases are 0.1 and weights lie in the Xavier range") {
    const auto a = init_model<float>(tiny(), 3);
    const auto b = init_model<float>(tiny(), 3);
    const auto c = init_model<float>(tiny(), 4);
    CHECK(a.params().size() == b.params().size());
    bool differs = false;
    for (std::size_t i = 0; i < a.params().size(); ++i) {
        CHECK(a.params()[i].value == b.params()[i].value);
        differs = differs || !(a.params()[i].value == c.params()[i].value);
        const auto& prm = a.params()[i];
        if (prm.name.ends_with(".b")) {
            for (float v : prm.value.values()) {
                CHECK(v == 0.1f);
            }
        } else {
            const auto& s = prm.value.shape();
            const double bound = std::sqrt(6.0 / ((s[0] + s[1]) * s[2] * s[3]));
            for (float v : prm.value.values()) {
                CHECK(std::abs(v) <= bound + 1e-7);
            }
        }
    }
    CHECK(differs);
}

TEST_CASE("forward yields paired probabilities and is pure at inference") {
    const auto model = init_model<double>(tiny(), 1);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Tensor<double> img({3, 32, 32});
    for (auto& v : img.values()) {
        v = u(rng);
    }
    const auto y = predict(model, img);
    REQUIRE(y.shape() == Shape{2, 32, 32});
    for (int yy = 0; yy < 32; ++yy) {
        for (int xx = 0; xx < 32; ++xx) {
            CHECK(y.at(0, yy, xx) + y.at(1, yy, xx) == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(y.at(1, yy, xx) > 0.0);
            CHECK(y.at(1, yy, xx) < 1.0);
        }
    }
    CHECK(predict(model, img) == y);
    CHECK_THROWS_AS(predict(model, Tensor<double>({3, 64, 64})), ShapeError);

    auto poisoned = img;
    poisoned[10] = NAN;
    CHECK_THROWS_AS(predict(model, poisoned), NumericError);
}

TEST_CASE("backward agrees with central differences for both output activations") {
    for (auto act : {OutputActivation::paired_sigmoid, OutputActivation::channel_sigmoid}) {
        auto a = tiny();
        a.output = act;
        GradCheckConfig cfg;
        cfg.samples = 60;
        const auto r = gradient_check(a, cfg);
        INFO(r.summary());
        CHECK(r.passed);
        CHECK(r.checked == 60);
    }
}

TEST_CASE("gradient check catches a corrupted gradient") {
    GradCheckConfig cfg;
    cfg.samples = 40;
    cfg.tamper = [](Gradients<double>& g) {
        for (auto& t : g) {
            for (auto& v : t.values()) {
                v *= 1.01;
            }
        }
    };
    CHECK_FALSE(gradient_check(tiny(), cfg).passed);
    CHECK(relative_error(1.0, 1.0) == 0.0);
    CHECK(relative_error(0.0, 0.0) == 0.0);
}

TEST_CASE("Adam first step moves every weight by about the learning rate against its gradient") {
    auto model = init_model<double>(tiny(), 5);
    const auto before = model;
    auto grads = zero_gradients(model);
    std::mt19937_64 rng(6);
    std::normal_distribution<double> nd;
    for (auto& t : grads) {
        for (auto& v : t.values()) {
            v = nd(rng);
        }
    }
    auto state = AdamState<double>::zeros(model);
    AdamConfig cfg;
    cfg.learning_rate = 1e-3;
    adam_step(model, grads, state, cfg);
    CHECK(state.step == 1);
    for (std::size_t p = 0; p < grads.size(); ++p) {
        for (std::size_t i = 0; i < grads[p].size(); ++i) {
            const double g = grads[p][i];
            // m_hat = g, v_hat = g^2 after bias correction
            const double expect = -cfg.learning_rate * g / (std::abs(g) + cfg.epsilon);
            CHECK(model.params()[p].value[i] - before.params()[p].value[i] ==
                  doctest::Approx(expect).epsilon(1e-9));
        }
    }
}

TEST_CASE("checkpoints round-trip bitwise and reject corruption") {
    auto a = tiny();
    a.output = OutputActivation::channel_sigmoid;
    const auto model = init_model<float>(a, 8);
    const auto path = (std::filesystem::temp_directory_path() / "tspfcn_model.ckpt").string();
    save_checkpoint(model, path);
    const auto back = load_checkpoint(path);
    CHECK(back.arch() == model.arch());
    REQUIRE(back.params().size() == model.params().size());
    for (std::size_t i = 0; i < model.params().size(); ++i) {
        CHECK(back.params()[i].name == model.params()[i].name);
        CHECK(back.params()[i].value == model.params()[i].value);
    }

    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 3);
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
    std::ofstream(path, std::ios::binary) << "TSPFCN99xxxx";
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
}
