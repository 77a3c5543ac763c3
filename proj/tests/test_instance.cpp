#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "tspfcn/errors.hpp"
#include "tspfcn/instance.hpp"

using namespace tspfcn;

TEST_CASE("instance rejects fewer than three cities and non-finite coordinates") {
    CHECK_THROWS_AS(TspInstance("a", {{0, 0}, {1, 1}}), InvalidInstanceError);
    CHECK_THROWS_AS(TspInstance("a", {{0, 0}, {1, 1}, {NAN, 0}}), InvalidInstanceError);
    CHECK_THROWS_AS(generate_instance(2, 1), InvalidInstanceError);
}

TEST_CASE("generation is deterministic and stays inside the bounds") {
    const Bounds b{-2.0, 3.0, 5.0, 4.0};
    const auto a = generate_instance(12, 99, b);
    const auto c = generate_instance(12, 99, b);
    CHECK(a.coords() == c.coords());
    CHECK(a.coords() != generate_instance(12, 100, b).coords());
    for (const auto& p : a.coords()) {
        CHECK(p.x >= b.x_min);
        CHECK(p.x <= b.x_max);
        CHECK(p.y >= b.y_min);
        CHECK(p.y <= b.y_max);
    }
}

TEST_CASE("tour length equals the brute-force closed edge sum") {
    const auto inst = generate_instance(9, 7);
    std::vector<int> order(9);
    std::iota(order.begin(), order.end(), 0);
    double expect = 0.0;
    for (int k = 0; k < 9; ++k) {
        const auto& p = inst.coords()[order[k]];
        const auto& q = inst.coords()[order[(k + 1) % 9]];
        expect += std::hypot(p.x - q.x, p.y - q.y);
    }
    CHECK(tour_length(inst, order) == doctest::Approx(expect).epsilon(1e-14));

    const DistanceMatrix d(inst);
    CHECK(d(2, 5) == doctest::Approx(inst.distance(5, 2)));
    CHECK(d(4, 4) == 0.0);
}

TEST_CASE("tour validation names the defect") {
    const auto inst = generate_instance(5, 1);
    CHECK(validate_tour(inst, std::vector<int>{0, 1, 2, 3, 4}).valid);
    CHECK(validate_tour(inst, std::vector<int>{0, 1, 2, 3}).defect == TourDefect::missing);
    CHECK(validate_tour(inst, std::vector<int>{0, 1, 2, 3, 5}).defect == TourDefect::out_of_range);
    CHECK(validate_tour(inst, std::vector<int>{0, 1, 2, 3, 3}).defect == TourDefect::duplicate);
    CHECK_THROWS_AS(tour_length(inst, std::vector<int>{0, 0, 1, 2, 3}), InvalidTourError);
    CHECK_THROWS_AS(inst.with_optimal(Tour{{0, 1}, 1.0}), InvalidTourError);
}

TEST_CASE("normalization maps the bounding box onto [0, w] x [0, h]") {
    const TspInstance inst("t", {{1.0, 10.0}, {3.0, 14.0}, {2.0, 11.0}});
    const auto pc = normalize(inst, 100, 50);
    CHECK(pc.points[0].x == 0.0);
    CHECK(pc.points[1].x == 100.0);
    CHECK(pc.points[2].x == doctest::Approx(50.0));
    CHECK(pc.points[0].y == 0.0);
    CHECK(pc.points[1].y == 50.0);
    CHECK(pc.points[2].y == doctest::Approx(12.5));
    CHECK_FALSE(pc.degenerate());

    const TspInstance flat("f", {{0.0, 1.0}, {1.0, 1.0}, {2.0, 1.0}});
    const auto pf = normalize(flat, 64, 64);
    CHECK(pf.degenerate_y);
    CHECK(pf.points[1].y == 32.0);
}

TEST_CASE("instances survive a JSON Lines round trip") {
    auto inst = generate_instance(6, 3, {}, "x");
    inst = inst.with_optimal(make_tour(inst, {0, 2, 1, 3, 5, 4}));
    const auto path = (std::filesystem::temp_directory_path() / "tspfcn_inst.jsonl").string();
    write_instances_jsonl(path, std::vector<TspInstance>{inst});
    const auto back = read_instances_jsonl(path);
    REQUIRE(back.size() == 1);
    CHECK(back[0].id() == "x");
    CHECK(back[0].coords() == inst.coords());
    REQUIRE(back[0].optimal().has_value());
    CHECK(back[0].optimal()->order == inst.optimal()->order);
    CHECK(back[0].optimal()->length == inst.optimal()->length);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(instance_from_json(nlohmann::json{{"coords", {{1, 2}, {3}}}}), FormatError);
    CHECK_THROWS_AS(read_instances_jsonl("/nonexistent/x.jsonl"), IoError);
}
