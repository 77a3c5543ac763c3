#include <doctest.h>

#include <cmath>
#include <random>

#include "tspfcn/errors.hpp"
#include "tspfcn/layers.hpp"

using namespace tspfcn;
using namespace tspfcn::layers;

namespace {

Tensor<double> random_tensor(Shape s, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Tensor<double> t(std::move(s));
    for (auto& v : t.values()) {
        v = u(rng);
    }
    return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

Tensor<double> naive_conv(const Tensor<double>& in, const Tensor<double>& w, const Tensor<double>& b) {
    const int cin = in.dim(0), h = in.dim(1), wd = in.dim(2);
    const int cout = w.dim(0), k = w.dim(2), r = k / 2;
    Tensor<double> out({cout, h, wd});
    for (int co = 0; co < cout; ++co) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < wd; ++x) {
                double s = b[co];
                for (int ci = 0; ci < cin; ++ci) {
                    for (int ky = 0; ky < k; ++ky) {
                        for (int kx = 0; kx < k; ++kx) {
                            const int iy = y + ky - r, ix = x + kx - r;
                            if (iy >= 0 && ix >= 0 && iy < h && ix < wd) {
                                s += in.at(ci, iy, ix) *
                                     w[((static_cast<std::size_t>(co) * cin + ci) * k + ky) * k + kx];
                            }
                        }
                    }
                }
                out.at(co, y, x) = s;
            }
        }
    }
    return out;
}

Tensor<double> naive_conv_transpose(const Tensor<double>& in, const Tensor<double>& w,
                                    const Tensor<double>& b, int s) {
    const int cin = in.dim(0), h = in.dim(1), wd = in.dim(2);
    const int cout = w.dim(1), k = 2 * s, pad = s / 2;
    Tensor<double> out({cout, h * s, wd * s});
    for (int co = 0; co < cout; ++co) {
        for (int y = 0; y < h * s; ++y) {
            for (int x = 0; x < wd * s; ++x) {
                out.at(co, y, x) = b[co];
            }
        }
    }
    for (int ci = 0; ci < cin; ++ci) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < wd; ++x) {
                for (int co = 0; co < cout; ++co) {
                    for (int ky = 0; ky < k; ++ky) {
                        for (int kx = 0; kx < k; ++kx) {
                            const int oy = y * s - pad + ky, ox = x * s - pad + kx;
                            if (oy >= 0 && ox >= 0 && oy < h * s && ox < wd * s) {
                                out.at(co, oy, ox) +=
                                    in.at(ci, y, x) *
                                    w[((static_cast<std::size_t>(ci) * cout + co) * k + ky) * k + kx];
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

} // namespace

TEST_CASE("same convolution matches a direct loop") {
    std::mt19937_64 rng(1);
    for (int k : {1, 3}) {
        const auto in = random_tensor({3, 7, 5}, rng);
        const auto w = random_tensor({4, 3, k, k}, rng);
        const auto b = random_tensor({4}, rng);
        const auto got = conv2d(in, w, b);
        const auto want = naive_conv(in, w, b);
        REQUIRE(got.shape() == want.shape());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
        }
        CHECK(conv2d(in, w, b, Compute{3}) == got);
    }
    CHECK_THROWS_AS(conv2d(Tensor<double>({2, 4, 4}), Tensor<double>({1, 3, 3, 3}), Tensor<double>({1})),
                    ShapeError);
}

TEST_CASE("transposed convolution matches a scatter loop") {
    std::mt19937_64 rng(2);
    for (int s : {2, 4, 8}) {
        const auto in = random_tensor({2, 3, 2}, rng);
        const auto w = random_tensor({2, 3, 2 * s, 2 * s}, rng);
        const auto b = random_tensor({3}, rng);
        const auto got = conv_transpose2d(in, w, b, s);
        const auto want = naive_conv_transpose(in, w, b, s);
        REQUIRE(got.shape() == want.shape());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("convolution backward matches central differences of a linear probe") {
    std::mt19937_64 rng(3);
    auto in = random_tensor({2, 5, 4}, rng);
    auto w = random_tensor({3, 2, 3, 3}, rng);
    auto b = random_tensor({3}, rng);
    const auto probe = random_tensor({3, 5, 4}, rng);
    Tensor<double> gw(w.shape()), gb(b.shape());
    const auto gin = conv2d_backward(in, w, probe, gw, gb);
    const double h = 1e-6;
    auto f = [&] { return dot(conv2d(in, w, b), probe); };
    for (std::size_t i = 0; i < w.size(); i += 5) {
        const double keep = w[i];
        w[i] = keep + h;
        const double up = f();
        w[i] = keep - h;
        const double dn = f();
        w[i] = keep;
        CHECK(gw[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-6));
    }
    for (std::size_t i = 0; i < in.size(); i += 3) {
        const double keep = in[i];
        in[i] = keep + h;
        const double up = f();
        in[i] = keep - h;
        const double dn = f();
        in[i] = keep;
        CHECK(gin[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-6));
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
        double s = 0.0;
        for (int p = 0; p < 20; ++p) {
            s += probe[i * 20 + p];
        }
        CHECK(gb[i] == doctest::Approx(s).epsilon(1e-12));
    }

    Tensor<double> gw3(w.shape()), gb3(b.shape());
    CHECK(conv2d_backward(in, w, probe, gw3, gb3, Compute{2}) == gin);
    CHECK(gw3 == gw);
}

TEST_CASE("transposed convolution backward matches central differences") {
    std::mt19937_64 rng(4);
    auto in = random_tensor({2, 2, 3}, rng);
    auto w = random_tensor({2, 2, 4, 4}, rng);
    const auto b = random_tensor({2}, rng);
    const auto probe = random_tensor({2, 4, 6}, rng);
    Tensor<double> gw(w.shape()), gb(b.shape());
    const auto gin = conv_transpose2d_backward(in, w, probe, 2, gw, gb);
    const double h = 1e-6;
    auto f = [&] { return dot(conv_transpose2d(in, w, b, 2), probe); };
    for (std::size_t i = 0; i < w.size(); i += 3) {
        const double keep = w[i];
        w[i] = keep + h;
        const double up = f();
        w[i] = keep - h;
        const double dn = f();
        w[i] = keep;
        CHECK(gw[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-6));
    }
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double keep = in[i];
        in[i] = keep + h;
        const double up = f();
        in[i] = keep - h;
        const double dn = f();
        in[i] = keep;
        CHECK(gin[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-6));
    }
}

TEST_CASE("max pooling routes gradients to the argmax") {
    Tensor<double> in({1, 2, 4}, std::vector<double>{1, 5, 2, 0, 3, 4, 8, 7});
    std::vector<std::uint32_t> arg;
    const auto out = maxpool2(in, arg);
    REQUIRE(out.shape() == Shape{1, 1, 2});
    CHECK(out[0] == 5.0);
    CHECK(out[1] == 8.0);
    const auto g = maxpool2_backward(in.shape(), arg, Tensor<double>({1, 1, 2}, std::vector<double>{2, 3}));
    CHECK(g.values() == std::vector<double>{0, 2, 0, 0, 0, 0, 3, 0});
}

TEST_CASE("activations") {
    Tensor<double> t({1, 1, 4}, std::vector<double>{-2, 0, 3, -0.5});
    auto r = t;
    relu_inplace(r);
    CHECK(r.values() == std::vector<double>{0, 0, 3, 0});
    Tensor<double> g({1, 1, 4}, 1.0);
    relu_backward_inplace(r, g);
    CHECK(g.values() == std::vector<double>{0, 0, 1, 0});

    auto s = t;
    sigmoid_inplace(s);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(s[i] == doctest::Approx(1.0 / (1.0 + std::exp(-t[i]))).epsilon(1e-15));
    }

    std::mt19937_64 rng(5);
    Tensor<double> ones({1, 100, 100}, 1.0);
    std::vector<double> mask;
    dropout_inplace(ones, 0.5, rng, mask);
    double sum = 0.0;
    for (double v : ones.values()) {
        CHECK((v == 0.0 || v == 2.0));
        sum += v;
    }
    CHECK(sum / 10000.0 == doctest::Approx(1.0).epsilon(0.05));

    const Tensor<double> a({1, 2, 2}, 1.0), b({2, 2, 2}, 2.0);
    const auto c = concat_channels<double>({&a, &b});
    CHECK(c.shape() == Shape{3, 2, 2});
    CHECK(c.at(0, 1, 1) == 1.0);
    CHECK(c.at(2, 0, 0) == 2.0);
}
