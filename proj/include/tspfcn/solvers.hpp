#pragma once

/// @file solvers.hpp
/// @brief Exact and heuristic solvers for the symmetric Euclidean TSP.
///
/// Exact solvers (exhaustive, Held-Karp, branch and bound) produce the label oracle and the
/// correctness baseline; the genetic and ant colony solvers are timing baselines.

#include <cstdint>
#include <string>

#include "tspfcn/instance.hpp"

namespace tspfcn::solvers {

inline constexpr int kExhaustiveMaxN = 12;
inline constexpr int kDpMaxN = 20;
inline constexpr int kBranchBoundMaxN = 20;

/// Work counters reported by the exact solvers.
struct SearchStats {
    std::uint64_t nodes = 0; // permutations evaluated (exhaustive) or tree nodes expanded (B&B)
};

Tour solve_exhaustive(const TspInstance& instance, SearchStats* stats = nullptr);
Tour solve_dp(const TspInstance& instance);
Tour solve_branch_bound(const TspInstance& instance, SearchStats* stats = nullptr);

struct GaConfig {
    int population = 300;
    double crossover_rate = 0.85;
    double mutation_rate = 0.02; // per-position swap probability
    int generations = 500;
    int tournament = 3;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Order crossover, swap mutation, tournament selection, one elite.
Tour solve_genetic(const TspInstance& instance, const GaConfig& cfg = {});

struct AcoConfig {
    int ant_num = 8;
    double rho = 0.5;
    double alpha = 1.0;
    double beta = 2.0;
    int iterations = 200;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Ant System: every ant deposits 1/L on its tour after evaporation by rho.
Tour solve_ant_colony(const TspInstance& instance, const AcoConfig& cfg = {});

enum class Algorithm { exhaustive, dp, branch_bound, genetic, ant_colony };

Algorithm algorithm_from_string(const std::string& s);
std::string to_string(Algorithm a);

Tour solve(Algorithm algo, const TspInstance& instance, const GaConfig& ga = {},
           const AcoConfig& aco = {});

/// Nearest-neighbour construction from city 0; used as the B&B incumbent and the ACO
/// pheromone scale.
Tour nearest_neighbor_tour(const TspInstance& instance);

} // namespace tspfcn::solvers
