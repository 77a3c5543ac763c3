#include "tspfcn/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "tspfcn/errors.hpp"

namespace tspfcn::solvers {

namespace {

void guard_size(const TspInstance& instance, int max_n, const char* name) {
    if (instance.size() > max_n) {
        throw SizeLimitError(std::string(name) + ": n=" + std::to_string(instance.size()) +
                             " exceeds limit " + std::to_string(max_n));
    }
}

double cycle_cost(const DistanceMatrix& d, const std::vector<int>& order) {
    double total = 0.0;
    const std::size_t n = order.size();
    for (std::size_t k = 0; k + 1 < n; ++k) {
        total += d(order[k], order[k + 1]);
    }
    return total + d(order[n - 1], order[0]);
}

} // namespace

Tour nearest_neighbor_tour(const TspInstance& instance) {
    const DistanceMatrix d(instance);
    const int n = d.size();
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    std::vector<int> order{0};
    used[0] = 1;
    for (int step = 1; step < n; ++step) {
        const int cur = order.back();
        int best = -1;
        for (int j = 0; j < n; ++j) {
            if (!used[static_cast<std::size_t>(j)] && (best < 0 || d(cur, j) < d(cur, best))) {
                best = j;
            }
        }
        used[static_cast<std::size_t>(best)] = 1;
        order.push_back(best);
    }
    return make_tour(instance, std::move(order));
}

Tour solve_exhaustive(const TspInstance& instance, SearchStats* stats) {
    guard_size(instance, kExhaustiveMaxN, "exhaustive search");
    const DistanceMatrix d(instance);
    std::vector<int> perm(static_cast<std::size_t>(instance.size()));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    std::uint64_t count = 0;
    // City 0 stays first; every cyclic rotation is then enumerated exactly once.
    do {
        ++count;
        const double c = cycle_cost(d, perm);
        if (c < best_cost) {
            best_cost = c;
            best = perm;
        }
    } while (std::next_permutation(perm.begin() + 1, perm.end()));
    if (stats) {
        stats->nodes = count;
    }
    return make_tour(instance, std::move(best));
}

Tour solve_dp(const TspInstance& instance) {
    guard_size(instance, kDpMaxN, "dynamic programming");
    const DistanceMatrix d(instance);
    const int n = instance.size();
    const int m = n - 1; // cities 1..n-1 are bit k-1
    const std::size_t subsets = std::size_t{1} << m;
    constexpr double inf = std::numeric_limits<double>::infinity();

    // cost[S * m + j]: shortest path from city 0 through exactly the set S ending at city j+1.
    std::vector<double> cost(subsets * m, inf);
    std::vector<std::int8_t> parent(subsets * m, -1);
    for (int j = 0; j < m; ++j) {
        cost[(std::size_t{1} << j) * m + j] = d(0, j + 1);
    }
    for (std::size_t s = 1; s < subsets; ++s) {
        for (int j = 0; j < m; ++j) {
            if (!(s & (std::size_t{1} << j))) {
                continue;
            }
            const double base = cost[s * m + j];
            if (base == inf) {
                continue;
            }
            for (int k = 0; k < m; ++k) {
                if (s & (std::size_t{1} << k)) {
                    continue;
                }
                const std::size_t t = s | (std::size_t{1} << k);
                const double c = base + d(j + 1, k + 1);
                if (c < cost[t * m + k]) {
                    cost[t * m + k] = c;
                    parent[t * m + k] = static_cast<std::int8_t>(j);
                }
            }
        }
    }

    const std::size_t full = subsets - 1;
    int last = 0;
    double best = inf;
    for (int j = 0; j < m; ++j) {
        const double c = cost[full * m + j] + d(j + 1, 0);
        if (c < best) {
            best = c;
            last = j;
        }
    }
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(n));
    std::size_t s = full;
    int j = last;
    while (j >= 0) {
        order.push_back(j + 1);
        const int p = parent[s * m + j];
        s &= ~(std::size_t{1} << j);
        j = p;
    }
    order.push_back(0);
    std::reverse(order.begin(), order.end());
    return make_tour(instance, std::move(order));
}

namespace {

class BranchAndBound {
  public:
    explicit BranchAndBound(const TspInstance& instance)
        : d_(instance), n_(instance.size()), min_edge_(static_cast<std::size_t>(n_)),
          neighbors_(static_cast<std::size_t>(n_)), visited_(static_cast<std::size_t>(n_), 0) {
        for (int i = 0; i < n_; ++i) {
            auto& nb = neighbors_[static_cast<std::size_t>(i)];
            for (int j = 0; j < n_; ++j) {
                if (j != i) {
                    nb.push_back(j);
                }
            }
            std::sort(nb.begin(), nb.end(), [&](int a, int b) { return d_(i, a) < d_(i, b); });
            min_edge_[static_cast<std::size_t>(i)] = d_(i, nb.front());
        }
        const Tour nn = nearest_neighbor_tour(instance);
        best_order_ = nn.order;
        best_cost_ = cycle_cost(d_, best_order_);
    }

    std::vector<int> run() {
        double unvisited_min = 0.0;
        for (int i = 1; i < n_; ++i) {
            unvisited_min += min_edge_[static_cast<std::size_t>(i)];
        }
        path_.assign(1, 0);
        visited_[0] = 1;
        expand(0.0, unvisited_min);
        return best_order_;
    }

    std::uint64_t nodes() const noexcept { return nodes_; }

  private:
    // unvisited_min: sum of cheapest incident edge over cities not yet on the path.
    void expand(double cost, double unvisited_min) {
        ++nodes_;
        const int cur = path_.back();
        if (static_cast<int>(path_.size()) == n_) {
            const double total = cost + d_(cur, 0);
            if (total < best_cost_) {
                best_cost_ = total;
                best_order_ = path_;
            }
            return;
        }
        for (int next : neighbors_[static_cast<std::size_t>(cur)]) {
            if (visited_[static_cast<std::size_t>(next)]) {
                continue;
            }
            const double c = cost + d_(cur, next);
            const double rest = unvisited_min - min_edge_[static_cast<std::size_t>(next)];
            // The current city and every unvisited city still need one outgoing edge.
            if (c + min_edge_[static_cast<std::size_t>(next)] + rest >= best_cost_) {
                continue;
            }
            visited_[static_cast<std::size_t>(next)] = 1;
            path_.push_back(next);
            expand(c, rest);
            path_.pop_back();
            visited_[static_cast<std::size_t>(next)] = 0;
        }
    }

    DistanceMatrix d_;
    int n_;
    std::vector<double> min_edge_;
    std::vector<std::vector<int>> neighbors_;
    std::vector<char> visited_;
    std::vector<int> path_;
    std::vector<int> best_order_;
    double best_cost_ = 0.0;
    std::uint64_t nodes_ = 0;
};

} // namespace

Tour solve_branch_bound(const TspInstance& instance, SearchStats* stats) {
    guard_size(instance, kBranchBoundMaxN, "branch and bound");
    BranchAndBound bb(instance);
    auto order = bb.run();
    if (stats) {
        stats->nodes = bb.nodes();
    }
    return make_tour(instance, std::move(order));
}

void GaConfig::validate() const {
    if (population < 2) {
        throw ConfigError("GA population must be >= 2");
    }
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0) ||
        !(mutation_rate >= 0.0 && mutation_rate <= 1.0)) {
        throw ConfigError("GA rates must lie in [0, 1]");
    }
    if (generations < 0 || tournament < 1) {
        throw ConfigError("GA generations must be >= 0 and tournament size >= 1");
    }
}

namespace {

std::vector<int> order_crossover(const std::vector<int>& p1, const std::vector<int>& p2,
                                 std::mt19937_64& rng) {
    const int n = static_cast<int>(p1.size());
    std::uniform_int_distribution<int> pick(0, n - 1);
    int a = pick(rng);
    int b = pick(rng);
    if (a > b) {
        std::swap(a, b);
    }
    std::vector<int> child(static_cast<std::size_t>(n), -1);
    std::vector<char> taken(static_cast<std::size_t>(n), 0);
    for (int i = a; i <= b; ++i) {
        child[static_cast<std::size_t>(i)] = p1[static_cast<std::size_t>(i)];
        taken[static_cast<std::size_t>(p1[static_cast<std::size_t>(i)])] = 1;
    }
    int write = (b + 1) % n;
    for (int k = 0; k < n; ++k) {
        const int gene = p2[static_cast<std::size_t>((b + 1 + k) % n)];
        if (taken[static_cast<std::size_t>(gene)]) {
            continue;
        }
        child[static_cast<std::size_t>(write)] = gene;
        write = (write + 1) % n;
    }
    return child;
}

} // namespace

Tour solve_genetic(const TspInstance& instance, const GaConfig& cfg) {
    cfg.validate();
    const DistanceMatrix d(instance);
    const int n = instance.size();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_int_distribution<int> pick_member(0, cfg.population - 1);
    std::uniform_int_distribution<int> pick_pos(0, n - 1);

    std::vector<std::vector<int>> pop(static_cast<std::size_t>(cfg.population));
    std::vector<double> fit(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) {
        pop[i].resize(static_cast<std::size_t>(n));
        std::iota(pop[i].begin(), pop[i].end(), 0);
        std::shuffle(pop[i].begin(), pop[i].end(), rng);
        fit[i] = cycle_cost(d, pop[i]);
    }

    auto tournament = [&]() -> const std::vector<int>& {
        int best = pick_member(rng);
        for (int k = 1; k < cfg.tournament; ++k) {
            const int c = pick_member(rng);
            if (fit[static_cast<std::size_t>(c)] < fit[static_cast<std::size_t>(best)]) {
                best = c;
            }
        }
        return pop[static_cast<std::size_t>(best)];
    };

    std::vector<std::vector<int>> next(pop.size());
    std::vector<double> next_fit(pop.size());
    for (int g = 0; g < cfg.generations; ++g) {
        const auto elite = static_cast<std::size_t>(
            std::min_element(fit.begin(), fit.end()) - fit.begin());
        next[0] = pop[elite];
        next_fit[0] = fit[elite];
        for (std::size_t i = 1; i < next.size(); ++i) {
            const auto& p1 = tournament();
            const auto& p2 = tournament();
            std::vector<int> child = u01(rng) < cfg.crossover_rate ? order_crossover(p1, p2, rng) : p1;
            for (int pos = 0; pos < n; ++pos) {
                if (u01(rng) < cfg.mutation_rate) {
                    std::swap(child[static_cast<std::size_t>(pos)],
                              child[static_cast<std::size_t>(pick_pos(rng))]);
                }
            }
            next_fit[i] = cycle_cost(d, child);
            next[i] = std::move(child);
        }
        pop.swap(next);
        fit.swap(next_fit);
    }
    const auto best = static_cast<std::size_t>(std::min_element(fit.begin(), fit.end()) - fit.begin());
    return make_tour(instance, pop[best]);
}

void AcoConfig::validate() const {
    if (ant_num < 1) {
        throw ConfigError("ACO needs at least one ant");
    }
    if (!(rho > 0.0 && rho < 1.0)) {
        throw ConfigError("ACO evaporation rho must lie in (0, 1)");
    }
    if (iterations < 0) {
        throw ConfigError("ACO iterations must be >= 0");
    }
}

Tour solve_ant_colony(const TspInstance& instance, const AcoConfig& cfg) {
    cfg.validate();
    const DistanceMatrix d(instance);
    const int n = instance.size();
    const auto nn = static_cast<std::size_t>(n);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_int_distribution<int> pick_city(0, n - 1);

    const Tour greedy = nearest_neighbor_tour(instance);
    std::vector<double> tau(nn * nn, 1.0 / (n * greedy.length));
    std::vector<double> eta_pow(nn * nn, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i != j) {
                eta_pow[i * nn + j] = std::pow(1.0 / std::max(d(i, j), 1e-12), cfg.beta);
            }
        }
    }

    if (cfg.iterations == 0) {
        return greedy;
    }
    std::vector<int> best_order;
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<std::vector<int>> tours(static_cast<std::size_t>(cfg.ant_num));
    std::vector<double> costs(tours.size());
    std::vector<double> weight(nn);
    std::vector<char> visited(nn);

    for (int it = 0; it < cfg.iterations; ++it) {
        for (std::size_t a = 0; a < tours.size(); ++a) {
            auto& tour = tours[a];
            tour.assign(1, pick_city(rng));
            std::fill(visited.begin(), visited.end(), 0);
            visited[static_cast<std::size_t>(tour[0])] = 1;
            for (int step = 1; step < n; ++step) {
                const auto cur = static_cast<std::size_t>(tour.back());
                double total = 0.0;
                for (std::size_t j = 0; j < nn; ++j) {
                    weight[j] = visited[j] ? 0.0 : std::pow(tau[cur * nn + j], cfg.alpha) * eta_pow[cur * nn + j];
                    total += weight[j];
                }
                int chosen = -1;
                if (total > 0.0) {
                    double r = u01(rng) * total;
                    for (std::size_t j = 0; j < nn; ++j) {
                        if (visited[j]) {
                            continue;
                        }
                        chosen = static_cast<int>(j);
                        r -= weight[j];
                        if (r <= 0.0) {
                            break;
                        }
                    }
                } else {
                    for (std::size_t j = 0; j < nn && chosen < 0; ++j) {
                        if (!visited[j]) {
                            chosen = static_cast<int>(j);
                        }
                    }
                }
                visited[static_cast<std::size_t>(chosen)] = 1;
                tour.push_back(chosen);
            }
            costs[a] = cycle_cost(d, tour);
            if (costs[a] < best_cost) {
                best_cost = costs[a];
                best_order = tour;
            }
        }
        for (double& t : tau) {
            t *= 1.0 - cfg.rho;
        }
        for (std::size_t a = 0; a < tours.size(); ++a) {
            const double deposit = 1.0 / costs[a];
            const auto& tour = tours[a];
            for (std::size_t k = 0; k < nn; ++k) {
                const auto i = static_cast<std::size_t>(tour[k]);
                const auto j = static_cast<std::size_t>(tour[(k + 1) % nn]);
                tau[i * nn + j] += deposit;
                tau[j * nn + i] += deposit;
            }
        }
    }
    return make_tour(instance, std::move(best_order));
}

Algorithm algorithm_from_string(const std::string& s) {
    if (s == "exh") return Algorithm::exhaustive;
    if (s == "dp") return Algorithm::dp;
    if (s == "bb") return Algorithm::branch_bound;
    if (s == "ga") return Algorithm::genetic;
    if (s == "aco") return Algorithm::ant_colony;
    throw ConfigError("unknown algorithm '" + s + "' (expected exh|dp|bb|ga|aco)");
}

std::string to_string(Algorithm a) {
    switch (a) {
    case Algorithm::exhaustive:
        return "exh";
    case Algorithm::dp:
        return "dp";
    case Algorithm::branch_bound:
        return "bb";
    case Algorithm::genetic:
        return "ga";
    case Algorithm::ant_colony:
        return "aco";
    }
    return "?";
}

Tour solve(Algorithm algo, const TspInstance& instance, const GaConfig& ga, const AcoConfig& aco) {
    switch (algo) {
    case Algorithm::exhaustive:
        return solve_exhaustive(instance);
    case Algorithm::dp:
        return solve_dp(instance);
    case Algorithm::branch_bound:
        return solve_branch_bound(instance);
    case Algorithm::genetic:
        return solve_genetic(instance, ga);
    case Algorithm::ant_colony:
        return solve_ant_colony(instance, aco);
    }
    throw ConfigError("unknown algorithm");
}

} // namespace tspfcn::solvers
