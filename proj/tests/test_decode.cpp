#include <doctest.h>

#include <algorithm>

#include "tspfcn/decode.hpp"
#include "tspfcn/errors.hpp"
#include "tspfcn/solvers.hpp"

using namespace tspfcn;
using namespace tspfcn::decode;

namespace {

bool same_cycle(std::vector<int> a, std::vector<int> b) {
    if (a.size() != b.size()) {
        return false;
    }
    std::rotate(a.begin(), std::find(a.begin(), a.end(), 0), a.end());
    std::rotate(b.begin(), std::find(b.begin(), b.end(), 0), b.end());
    if (a == b) {
        return true;
    }
    std::reverse(b.begin() + 1, b.end());
    return a == b;
}

} // namespace

TEST_CASE("segment samples are symmetric and exclude the lower endpoint") {
    const auto inst = generate_instance(6, 21);
    const auto pc = normalize(inst, 224, 224);
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
            if (i == j) {
                continue;
            }
            const auto s = sample_pixels(pc, i, j);
            CHECK(s == sample_pixels(pc, j, i));
            const auto a = city_pixel(pc, i), b = city_pixel(pc, j);
            CHECK(s.size() == static_cast<std::size_t>(std::max(std::abs(a.x - b.x), std::abs(a.y - b.y))));
            CHECK(s.back() == std::max(a, b));
        }
    }
    CHECK_THROWS_AS(sample_pixels(pc, 2, 2), ConfigError);
}

TEST_CASE("path density counts black samples over p") {
    const auto inst = generate_instance(5, 3);
    const auto pc = normalize(inst, 64, 64);
    LabelMask mask(64, 64);
    const auto s = sample_pixels(pc, 0, 1);
    REQUIRE(s.size() >= 4);
    for (std::size_t k = 0; k < s.size(); k += 2) {
        mask.set_path(s[k].x, s[k].y, true);
    }
    const auto d = path_density(mask, pc, 0, 1);
    CHECK(d.p == static_cast<int>(s.size()));
    CHECK(d.q == static_cast<int>((s.size() + 1) / 2));
    CHECK(d.rho == doctest::Approx(static_cast<double>(d.q) / d.p));
    CHECK_FALSE(d.evidence);

    const CityCover none(pc, 0);
    CHECK(path_density(mask, pc, 0, 1, &none).evidence);
    CHECK(path_density(LabelMask(64, 64), pc, 0, 1).rho == 0.0);
    CHECK_THROWS_AS(path_density(LabelMask(32, 32), pc, 0, 1), ShapeError);
}

TEST_CASE("coincident city pixels give p = 0 and density 1") {
    const TspInstance inst("d", {{0.0, 0.0}, {1e-6, 0.0}, {1.0, 1.0}});
    const auto pc = normalize(inst, 64, 64);
    const auto d = path_density(LabelMask(64, 64), pc, 0, 1);
    CHECK(d.degenerate);
    CHECK(d.p == 0);
    CHECK(d.rho == 1.0);
}

TEST_CASE("departure sets") {
    CHECK(departures(5, 0, 1) == std::vector<int>{0, 1, 2, 3, 4});
    CHECK(departures(5, 5, 9) == std::vector<int>{0, 1, 2, 3, 4});
    const auto d3 = departures(10, 3, 7);
    const auto d8 = departures(10, 8, 7);
    CHECK(d3.size() == 3);
    CHECK(std::equal(d3.begin(), d3.end(), d8.begin()));
    CHECK(departures(10, 3, 7) == d3);
    for (int v : d8) {
        CHECK(v >= 0);
        CHECK(v < 10);
    }
}

TEST_CASE("clean labels decode to the optimal cycle") {
    for (std::uint64_t s = 0; s < 30; ++s) {
        const auto inst = generate_instance(9, 500 + s);
        const auto cfg = RenderConfig::paper();
        if (inspect(inst, cfg).pixel_collision) {
            continue;
        }
        const auto opt = solvers::solve_dp(inst);
        const auto mask = render_label(inst, opt, cfg);
        const auto sol = post_process(mask, inst, DecodeConfig{});
        CHECK(validate_tour(inst, sol.tour.order).valid);
        CHECK(sol.tour.length == doctest::Approx(opt.length).epsilon(1e-9));
        CHECK(same_cycle(sol.tour.order, opt.order));
    }
}

TEST_CASE("decoded tours are valid on arbitrary masks and count every density evaluation") {
    const auto inst = generate_instance(8, 4);
    LabelMask noise(64, 64);
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
            noise.set_path(x, y, (x * 7 + y * 13) % 5 == 0);
        }
    }
    for (int m : {1, 3, 8}) {
        DecodeConfig cfg;
        cfg.m = m;
        const auto sol = post_process(noise, inst, cfg);
        CHECK(validate_tour(inst, sol.tour.order).valid);
        CHECK(sol.stats.evaluations == static_cast<long>(m) * 8 * 7 / 2);
        CHECK(sol.runs.size() == static_cast<std::size_t>(m));
        const auto best = std::min_element(sol.runs.begin(), sol.runs.end(),
                                           [](auto& a, auto& b) { return a.length < b.length; });
        CHECK(sol.tour.length == best->length);
    }
}

TEST_CASE("a requested departure rotates the tour without changing it") {
    const auto inst = generate_instance(7, 12);
    const auto mask = render_label(inst, solvers::solve_dp(inst), RenderConfig::paper());
    DecodeConfig cfg;
    const auto base = post_process(mask, inst, cfg);
    cfg.departure = 4;
    const auto rot = post_process(mask, inst, cfg);
    CHECK(rot.tour.order.front() == 4);
    CHECK(rot.tour.length == base.tour.length);
    CHECK(same_cycle(rot.tour.order, base.tour.order));

    cfg.departure = 7;
    CHECK_THROWS_AS(post_process(mask, inst, cfg), ConfigError);
    cfg.departure.reset();
    cfg.m = -1;
    CHECK_THROWS_AS(post_process(mask, inst, cfg), ConfigError);
}

TEST_CASE("solution JSON carries order, length and diagnostics") {
    const auto inst = generate_instance(5, 2);
    const auto mask = render_label(inst, solvers::solve_dp(inst), RenderConfig::desk());
    DecodeConfig cfg;
    cfg.city_halfwidth = RenderConfig::desk().city_halfwidth;
    const auto j = to_json(post_process(mask, inst, cfg));
    CHECK(j.at("order").size() == 5);
    CHECK(j.at("m") == 5);
    CHECK(j.at("diagnostics").at("density_evaluations") == 50);
}

TEST_CASE("linear fit quality") {
    CHECK(linear_r_squared({1, 2, 3, 4}, {2, 4, 6, 8}) == doctest::Approx(1.0));
    CHECK(linear_r_squared({1, 2, 3, 4}, {1, -1, 1, -1}) < 0.5);
    CHECK_THROWS_AS(linear_r_squared({1}, {1}), ConfigError);
}
