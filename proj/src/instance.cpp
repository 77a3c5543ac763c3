#include "tspfcn/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "tspfcn/errors.hpp"

namespace tspfcn {

TspInstance::TspInstance(std::string id, std::vector<Point> coords)
    : id_(std::move(id)), coords_(std::move(coords)) {
    if (coords_.size() < 3) {
        throw InvalidInstanceError("instance needs at least 3 cities, got " +
                                   std::to_string(coords_.size()));
    }
    for (const auto& p : coords_) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw InvalidInstanceError("instance '" + id_ + "' has a non-finite coordinate");
        }
    }
}

double TspInstance::distance(int i, int j) const {
    const auto& a = coords_.at(static_cast<std::size_t>(i));
    const auto& b = coords_.at(static_cast<std::size_t>(j));
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

TspInstance TspInstance::with_optimal(Tour tour) const {
    auto verdict = validate_tour(*this, tour.order);
    if (!verdict) {
        throw InvalidTourError("instance '" + id_ + "': " + verdict.reason);
    }
    TspInstance copy = *this;
    copy.optimal_ = std::move(tour);
    return copy;
}

DistanceMatrix::DistanceMatrix(const TspInstance& instance)
    : n_(instance.size()), d_(static_cast<std::size_t>(n_) * n_, 0.0) {
    for (int i = 0; i < n_; ++i) {
        for (int j = i + 1; j < n_; ++j) {
            const double d = instance.distance(i, j);
            d_[static_cast<std::size_t>(i) * n_ + j] = d;
            d_[static_cast<std::size_t>(j) * n_ + i] = d;
        }
    }
}

TspInstance generate_instance(int n, std::uint64_t seed, const Bounds& bounds, std::string id) {
    if (n < 3) {
        throw InvalidInstanceError("generate_instance: n must be >= 3, got " + std::to_string(n));
    }
    if (!(bounds.x_max > bounds.x_min) || !(bounds.y_max > bounds.y_min)) {
        throw InvalidInstanceError("generate_instance: degenerate bounds");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(bounds.x_min, bounds.x_max);
    std::uniform_real_distribution<double> uy(bounds.y_min, bounds.y_max);
    std::vector<Point> coords(static_cast<std::size_t>(n));
    for (auto& p : coords) {
        p.x = ux(rng);
        p.y = uy(rng);
    }
    if (id.empty()) {
        id = "n" + std::to_string(n) + "_s" + std::to_string(seed);
    }
    return TspInstance(std::move(id), std::move(coords));
}

TourVerdict validate_tour(const TspInstance& instance, std::span<const int> order) {
    const int n = instance.size();
    TourVerdict v;
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (int c : order) {
        if (c < 0 || c >= n) {
            v.defect = TourDefect::out_of_range;
            v.reason = "city index " + std::to_string(c) + " out of range";
            return v;
        }
        if (seen[static_cast<std::size_t>(c)]) {
            v.defect = TourDefect::duplicate;
            v.reason = "city " + std::to_string(c) + " visited twice";
            return v;
        }
        seen[static_cast<std::size_t>(c)] = 1;
    }
    if (static_cast<int>(order.size()) != n) {
        // All entries are distinct and in range, so a short order misses cities.
        v.defect = static_cast<int>(order.size()) < n ? TourDefect::missing : TourDefect::wrong_length;
        v.reason = "tour has " + std::to_string(order.size()) + " cities, expected " +
                   std::to_string(n);
        return v;
    }
    v.valid = true;
    return v;
}

double tour_length(const TspInstance& instance, std::span<const int> order) {
    auto verdict = validate_tour(instance, order);
    if (!verdict) {
        throw InvalidTourError(verdict.reason);
    }
    const std::size_t n = order.size();
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        total += instance.distance(order[k], order[k + 1]);
    }
    return total + instance.distance(order[n - 1], order[0]);
}

Tour make_tour(const TspInstance& instance, std::vector<int> order) {
    const double len = tour_length(instance, order);
    return Tour{std::move(order), len};
}

namespace {

struct AxisMap {
    double origin;
    double scale; // lambda; pixel = (v - origin) / scale
    bool degenerate;
};

AxisMap fit_axis(double lo, double hi) {
    if (!(hi > lo)) {
        return {lo, 0.0, true};
    }
    return {lo, hi - lo, false};
}

} // namespace

PixelCoords normalize(const TspInstance& instance, int w, int h) {
    if (w < 2 || h < 2) {
        throw ConfigError("normalize: image dims must be >= 2");
    }
    const auto& c = instance.coords();
    auto [xlo, xhi] = std::minmax_element(c.begin(), c.end(),
                                          [](const Point& a, const Point& b) { return a.x < b.x; });
    auto [ylo, yhi] = std::minmax_element(c.begin(), c.end(),
                                          [](const Point& a, const Point& b) { return a.y < b.y; });
    const AxisMap mx = fit_axis(xlo->x, xhi->x);
    const AxisMap my = fit_axis(ylo->y, yhi->y);

    PixelCoords out;
    out.w = w;
    out.h = h;
    out.degenerate_x = mx.degenerate;
    out.degenerate_y = my.degenerate;
    out.points.reserve(c.size());
    for (const auto& p : c) {
        // (v - min) / ((max - min) / w), written so the max maps to exactly w.
        const double px = mx.degenerate ? w / 2.0 : (p.x - mx.origin) * w / mx.scale;
        const double py = my.degenerate ? h / 2.0 : (p.y - my.origin) * h / my.scale;
        out.points.push_back({std::clamp(px, 0.0, static_cast<double>(w)),
                              std::clamp(py, 0.0, static_cast<double>(h))});
    }
    return out;
}

nlohmann::json to_json(const TspInstance& instance) {
    nlohmann::json j;
    j["id"] = instance.id();
    auto coords = nlohmann::json::array();
    for (const auto& p : instance.coords()) {
        coords.push_back({p.x, p.y});
    }
    j["coords"] = std::move(coords);
    if (instance.optimal()) {
        j["tour"] = instance.optimal()->order;
        j["length"] = instance.optimal()->length;
    }
    return j;
}

TspInstance instance_from_json(const nlohmann::json& j) {
    try {
        std::vector<Point> coords;
        for (const auto& xy : j.at("coords")) {
            if (!xy.is_array() || xy.size() != 2) {
                throw FormatError("coordinate entry must be [x, y]");
            }
            coords.push_back({xy[0].get<double>(), xy[1].get<double>()});
        }
        TspInstance inst(j.value("id", std::string{}), std::move(coords));
        if (j.contains("tour")) {
            auto order = j.at("tour").get<std::vector<int>>();
            Tour t = make_tour(inst, std::move(order));
            if (j.contains("length")) {
                t.length = j.at("length").get<double>();
            }
            inst = inst.with_optimal(std::move(t));
        }
        return inst;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed instance JSON: ") + e.what());
    }
}

void write_instances_jsonl(const std::string& path, std::span<const TspInstance> instances) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError("cannot open " + path + " for writing");
    }
    for (const auto& inst : instances) {
        os << to_json(inst).dump() << '\n';
    }
    if (!os) {
        throw IoError("write failed: " + path);
    }
}

std::vector<TspInstance> read_instances_jsonl(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open " + path);
    }
    std::vector<TspInstance> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        out.push_back(instance_from_json(j));
    }
    return out;
}

} // namespace tspfcn
