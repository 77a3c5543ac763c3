#pragma once

/// @file decode.hpp
/// @brief Greedy path-density decoding of a binarized prediction into a tour.
///
/// For a city pair (i, j) the segment between their pixel positions is sampled at
/// p = max(|dx|, |dy|) pixels and the density rho = (black samples) / p scores the pair.
/// From a departure city the decoder repeatedly moves to the unvisited city with the
/// highest density, then closes the loop. Several departures are tried and the shortest
/// tour is kept.
///
/// Equal densities are common on clean masks, where every pair inside a cluster of
/// overlapping city squares reads as fully connected. Ties therefore prefer a segment
/// with at least one black sample outside every city square, then the shorter edge,
/// then the lower city index.

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "tspfcn/instance.hpp"
#include "tspfcn/raster.hpp"

namespace tspfcn::decode {

struct DecodeConfig {
    /// Number of departure cities; 0 means one per city (m = n).
    int m = 0;
    /// Problem-given departure city; the returned order is rotated to start there.
    std::optional<int> departure;
    std::uint64_t seed = 1;
    /// Half-width of the rendered city squares; negative disables the evidence tie-break.
    int city_halfwidth = 6;

    void validate(int n) const;
};

/// Sampled pixels t = 1..p between the pixels of cities i and j. Endpoints are ordered
/// lexicographically first, so the result does not depend on argument order. Empty when
/// both cities share a pixel.
std::vector<PixelPos> sample_pixels(const PixelCoords& pc, int i, int j);

/// Pixels covered by any city square.
class CityCover {
  public:
    CityCover() = default;
    CityCover(const PixelCoords& pc, int halfwidth);

    bool covered(int x, int y) const {
        return !cells_.empty() && cells_[static_cast<std::size_t>(y) * w_ + x] != 0;
    }

  private:
    int w_ = 0;
    std::vector<char> cells_;
};

struct Density {
    int p = 0;
    int q = 0;
    double rho = 0.0;
    bool degenerate = false; // p == 0, rho defined as 1
    bool evidence = false;   // a black sample lies outside every city square
};

Density path_density(const LabelMask& mask, const PixelCoords& pc, int i, int j,
                     const CityCover* cover = nullptr);

/// Counters gathered while decoding.
struct DecodeStats {
    long evaluations = 0;      // density evaluations
    long ties = 0;             // greedy steps where the best density was shared
    long degenerate_pairs = 0; // evaluations with p == 0
};

/// Greedy construction from `departure`. `pc` must be the projection of `instance` onto the
/// mask grid; without a cover, ties go straight to the shorter edge.
Tour greedy_tour(const LabelMask& mask, const TspInstance& instance, const PixelCoords& pc,
                 int departure, DecodeStats* stats = nullptr, const CityCover* cover = nullptr);

/// Departure cities for a decode: every city once when m == n, otherwise m seeded draws
/// with repetition. The draws for m are a prefix of the draws for any larger m != n.
std::vector<int> departures(int n, int m, std::uint64_t seed);

struct DepartureRun {
    int departure = 0;
    double length = 0.0;
};

struct Solution {
    Tour tour;
    int m = 0;
    int best_departure = 0;
    DecodeStats stats;
    std::vector<DepartureRun> runs;
};

nlohmann::json to_json(const Solution& s);

/// Runs greedy_tour from every departure and keeps the shortest tour (earliest departure
/// on equal length).
Solution post_process(const LabelMask& mask, const TspInstance& instance, const DecodeConfig& cfg);

struct TimingRow {
    int m = 0;
    double mean_ms = 0.0; // mean decode time per instance
    long evaluations = 0; // total over the batch
};

struct TimingTable {
    std::vector<TimingRow> rows;
    double r_squared = 0.0; // least-squares line of mean_ms against m
};

/// Decodes every (mask, instance) pair for each m, `repeats` times, and fits time vs m.
TimingTable decode_timing(const std::vector<TspInstance>& instances,
                          const std::vector<LabelMask>& masks, const std::vector<int>& ms,
                          std::uint64_t seed, int repeats = 3);

/// Coefficient of determination of the least-squares line through (x, y).
double linear_r_squared(const std::vector<double>& x, const std::vector<double>& y);

} // namespace tspfcn::decode
