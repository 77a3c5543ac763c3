#pragma once

/// @file instance.hpp
/// @brief Euclidean TSP instances, tours and projection onto the image grid.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace tspfcn {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

/// Axis-aligned world rectangle used for random generation.
struct Bounds {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 1.0;
    double y_max = 1.0;
};

/// City visiting order together with its closed-cycle length.
struct Tour {
    std::vector<int> order;
    double length = 0.0;
};

/// A set of n >= 3 cities in the plane, optionally carrying a known optimal tour.
class TspInstance {
  public:
    /// Throws InvalidInstanceError if fewer than 3 cities or a coordinate is not finite.
    TspInstance(std::string id, std::vector<Point> coords);

    const std::string& id() const noexcept { return id_; }
    const std::vector<Point>& coords() const noexcept { return coords_; }
    int size() const noexcept { return static_cast<int>(coords_.size()); }
    double distance(int i, int j) const;

    const std::optional<Tour>& optimal() const noexcept { return optimal_; }

    /// Copy of this instance with the known optimal tour attached (validated).
    TspInstance with_optimal(Tour tour) const;

  private:
    std::string id_;
    std::vector<Point> coords_;
    std::optional<Tour> optimal_;
};

/// Dense symmetric Euclidean distance matrix, row-major.
class DistanceMatrix {
  public:
    explicit DistanceMatrix(const TspInstance& instance);

    int size() const noexcept { return n_; }
    double operator()(int i, int j) const noexcept { return d_[static_cast<std::size_t>(i) * n_ + j]; }

  private:
    int n_;
    std::vector<double> d_;
};

TspInstance generate_instance(int n, std::uint64_t seed, const Bounds& bounds = {},
                              std::string id = {});

/// Sum of consecutive Euclidean distances plus the closing edge.
/// Throws InvalidTourError when `order` is not a permutation of 0..n-1.
double tour_length(const TspInstance& instance, std::span<const int> order);

enum class TourDefect { none, wrong_length, out_of_range, duplicate, missing };

struct TourVerdict {
    bool valid = false;
    TourDefect defect = TourDefect::none;
    std::string reason;

    explicit operator bool() const noexcept { return valid; }
};

TourVerdict validate_tour(const TspInstance& instance, std::span<const int> order);

/// Validates `order` and pairs it with its length.
Tour make_tour(const TspInstance& instance, std::vector<int> order);

/// Float pixel positions of every city after projection onto a w x h image.
struct PixelCoords {
    std::vector<Point> points;
    int w = 0;
    int h = 0;
    bool degenerate_x = false;
    bool degenerate_y = false;

    bool degenerate() const noexcept { return degenerate_x || degenerate_y; }
};

/// Min-max projection: extremes land on 0 and w (resp. h). A zero-width axis is
/// placed on the image centerline and flagged.
PixelCoords normalize(const TspInstance& instance, int w, int h);

nlohmann::json to_json(const TspInstance& instance);
TspInstance instance_from_json(const nlohmann::json& j);

/// One JSON object per line.
void write_instances_jsonl(const std::string& path, std::span<const TspInstance> instances);
std::vector<TspInstance> read_instances_jsonl(const std::string& path);

} // namespace tspfcn
