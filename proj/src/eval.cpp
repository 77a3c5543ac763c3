#include "tspfcn/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "tspfcn/dataset.hpp"
#include "tspfcn/errors.hpp"
#include "tspfcn/parallel.hpp"

namespace tspfcn::eval {

namespace {

using clock = std::chrono::steady_clock;

double elapsed_ms(clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
}

int solver_limit(solvers::Algorithm a) {
    switch (a) {
    case solvers::Algorithm::exhaustive:
        return solvers::kExhaustiveMaxN;
    case solvers::Algorithm::dp:
        return solvers::kDpMaxN;
    case solvers::Algorithm::branch_bound:
        return solvers::kBranchBoundMaxN;
    default:
        return 1 << 20;
    }
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size();
    return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) {
        throw IoError("cannot write " + path);
    }
    os.precision(10);
    return os;
}

} // namespace

bool within(double produced, double optimal, double percent) {
    return produced <= (1.0 + percent / 100.0) * optimal * (1.0 + kLengthTol);
}

MetricsReport compute_metrics(std::span<const SolutionRecord> records) {
    if (records.empty()) {
        throw ConfigError("cannot compute metrics over an empty solution set");
    }
    MetricsReport r;
    r.samples = records.size();
    std::array<std::size_t, 5> hits{};
    constexpr std::array<double, 5> pct{0.0, 1.0, 2.0, 5.0, 10.0};
    double ratio_sum = 0.0;
    for (const auto& s : records) {
        if (!(s.optimal > 0.0)) {
            throw ConfigError("optimal tour lengths must be positive");
        }
        if (!s.valid) {
            ++r.invalid;
            continue;
        }
        ratio_sum += s.produced / s.optimal;
        for (std::size_t k = 0; k < pct.size(); ++k) {
            hits[k] += within(s.produced, s.optimal, pct[k]) ? 1 : 0;
        }
    }
    const double total = static_cast<double>(r.samples);
    r.e0 = hits[0] / total;
    r.e1 = hits[1] / total;
    r.e2 = hits[2] / total;
    r.e5 = hits[3] / total;
    r.e10 = hits[4] / total;
    const std::size_t valid = r.samples - r.invalid;
    r.r_aver = valid ? ratio_sum / static_cast<double>(valid) : std::nan("");
    return r;
}

nlohmann::json to_json(const MetricsReport& r) {
    return {{"e0", r.e0},     {"e1", r.e1},           {"e2", r.e2},
            {"e5", r.e5},     {"e10", r.e10},         {"r_aver", r.r_aver},
            {"samples", r.samples}, {"invalid", r.invalid}};
}

FcnPredictor::FcnPredictor(const net::Model<float>& model, RenderConfig render,
                           layers::Compute compute)
    : model_(model), render_(std::move(render)), compute_(compute) {
    const int s = model.arch().input_size;
    if (render_.w != s || render_.h != s) {
        throw ShapeError("model expects " + std::to_string(s) + "x" + std::to_string(s) +
                         " images, render config is " + std::to_string(render_.w) + "x" +
                         std::to_string(render_.h));
    }
}

LabelMask FcnPredictor::mask(const TspInstance& instance) const {
    const auto image = image_to_tensor<float>(render_image(instance, render_));
    return binarize(net::predict(model_, image, compute_));
}

PassthroughPredictor::PassthroughPredictor(RenderConfig render) : render_(std::move(render)) {
    render_.validate();
}

LabelMask PassthroughPredictor::mask(const TspInstance& instance) const {
    if (!instance.optimal()) {
        throw InvalidTourError("passthrough needs the optimal tour of " + instance.id());
    }
    return render_label(instance, *instance.optimal(), render_);
}

nlohmann::json to_json(const PipelineReport& r, bool with_samples) {
    nlohmann::json j{{"metrics", to_json(r.metrics)},
                     {"instances", r.instances},
                     {"collisions", r.collisions},
                     {"collision_rate", r.collision_rate()},
                     {"mean_predict_ms", r.mean_predict_ms},
                     {"mean_decode_ms", r.mean_decode_ms}};
    if (with_samples) {
        auto arr = nlohmann::json::array();
        for (const auto& s : r.samples) {
            arr.push_back({{"id", s.id},
                           {"n", s.n},
                           {"produced", s.produced},
                           {"optimal", s.optimal},
                           {"valid", s.valid},
                           {"collision", s.collision},
                           {"predict_ms", s.predict_ms},
                           {"decode_ms", s.decode_ms},
                           {"density_evaluations", s.evaluations}});
        }
        j["samples"] = std::move(arr);
    }
    return j;
}

PipelineReport run_pipeline_eval(const Predictor& predictor,
                                 const std::vector<TspInstance>& instances,
                                 const EvalOptions& opts) {
    decode::DecodeConfig dc = opts.decode;
    if (dc.city_halfwidth >= 0) {
        dc.city_halfwidth = predictor.render().city_halfwidth;
    }
    PipelineReport report;
    report.instances = instances.size();
    report.samples.resize(instances.size());
    parallel_for_index(instances.size(), opts.jobs, [&](std::size_t k) {
        const auto& inst = instances[k];
        if (!inst.optimal()) {
            throw InvalidTourError("instance " + inst.id() + " has no reference optimal tour");
        }
        SampleResult& s = report.samples[k];
        s.id = inst.id();
        s.n = inst.size();
        s.optimal = inst.optimal()->length;
        s.collision = inspect(inst, predictor.render()).pixel_collision;
        auto t0 = clock::now();
        const LabelMask mask = predictor.mask(inst);
        s.predict_ms = elapsed_ms(t0);
        t0 = clock::now();
        const auto sol = decode::post_process(mask, inst, dc);
        s.decode_ms = elapsed_ms(t0);
        s.produced = sol.tour.length;
        s.valid = static_cast<bool>(validate_tour(inst, sol.tour.order));
        s.evaluations = sol.stats.evaluations;
    });

    std::vector<SolutionRecord> records;
    for (const auto& s : report.samples) {
        report.collisions += s.collision ? 1 : 0;
        report.mean_predict_ms += s.predict_ms;
        report.mean_decode_ms += s.decode_ms;
        if (!(opts.exclude_collisions && s.collision)) {
            records.push_back({s.produced, s.optimal, s.valid});
        }
    }
    if (!instances.empty()) {
        report.mean_predict_ms /= static_cast<double>(instances.size());
        report.mean_decode_ms /= static_cast<double>(instances.size());
    }
    report.metrics = compute_metrics(records);
    return report;
}

std::vector<SweepRow> generalization_sweep(const Predictor& predictor, int n_min, int n_max,
                                           std::size_t per_n, std::uint64_t seed,
                                           const EvalOptions& opts) {
    if (n_min < 3 || n_max < n_min) {
        throw ConfigError("city-count range must satisfy 3 <= n_min <= n_max");
    }
    std::vector<SweepRow> rows;
    for (int n = n_min; n <= n_max; ++n) {
        SweepRow row;
        row.n = n;
        if (n > kResolutionSafeMaxN) {
            row.warnings.push_back("n=" + std::to_string(n) + " exceeds the resolution-safe limit of " +
                                   std::to_string(kResolutionSafeMaxN) + " cities");
        }
        const auto instances =
            generate_labelled(n, per_n, seed + static_cast<std::uint64_t>(n), opts.jobs);
        row.report = run_pipeline_eval(predictor, instances, opts);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
    auto os = open_out(path);
    os << "n,instances,collisions,e0,e1,e2,e5,e10,r_aver,invalid,mean_predict_ms,mean_decode_ms\n";
    for (const auto& r : rows) {
        const auto& m = r.report.metrics;
        os << r.n << ',' << r.report.instances << ',' << r.report.collisions << ',' << m.e0 << ','
           << m.e1 << ',' << m.e2 << ',' << m.e5 << ',' << m.e10 << ',' << m.r_aver << ','
           << m.invalid << ',' << r.report.mean_predict_ms << ',' << r.report.mean_decode_ms
           << '\n';
    }
}

LabelMask corrupt_mask(const LabelMask& mask, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) {
        throw ConfigError("corruption fraction must lie in [0, 1]");
    }
    std::vector<PixelPos> path;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask.is_path(x, y)) {
                path.push_back({x, y});
            }
        }
    }
    std::mt19937_64 rng(seed);
    std::shuffle(path.begin(), path.end(), rng);
    const auto flips = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(path.size())));
    LabelMask out = mask;
    for (std::size_t k = 0; k < flips; ++k) {
        out.set_path(path[k].x, path[k].y, false);
    }
    return out;
}

DepartureSweep departure_sweep(const std::vector<TspInstance>& instances,
                               const std::vector<LabelMask>& masks, const std::vector<int>& ms,
                               std::uint64_t seed, int city_halfwidth, int timing_repeats) {
    if (instances.size() != masks.size() || instances.empty()) {
        throw ConfigError("departure sweep needs one mask per instance and a non-empty batch");
    }
    DepartureSweep sweep;
    for (int m : ms) {
        DepartureRow row;
        row.m = m;
        decode::DecodeConfig dc;
        dc.m = m;
        dc.seed = seed;
        dc.city_halfwidth = city_halfwidth;
        std::vector<SolutionRecord> records;
        for (std::size_t i = 0; i < instances.size(); ++i) {
            if (!instances[i].optimal()) {
                throw InvalidTourError("instance " + instances[i].id() + " has no optimal tour");
            }
            const auto sol = decode::post_process(masks[i], instances[i], dc);
            row.evaluations += sol.stats.evaluations;
            records.push_back({sol.tour.length, instances[i].optimal()->length,
                               static_cast<bool>(validate_tour(instances[i], sol.tour.order))});
        }
        row.metrics = compute_metrics(records);
        sweep.rows.push_back(row);
    }
    const auto timing = decode::decode_timing(instances, masks, ms, seed, timing_repeats);
    for (std::size_t k = 0; k < sweep.rows.size(); ++k) {
        sweep.rows[k].mean_ms = timing.rows[k].mean_ms;
    }
    sweep.r_squared = timing.r_squared;
    return sweep;
}

void write_departure_csv(const DepartureSweep& sweep, const std::string& path) {
    auto os = open_out(path);
    os << "m,e0,e1,e2,e5,e10,r_aver,density_evaluations,mean_decode_ms\n";
    for (const auto& r : sweep.rows) {
        const auto& m = r.metrics;
        os << r.m << ',' << m.e0 << ',' << m.e1 << ',' << m.e2 << ',' << m.e5 << ',' << m.e10 << ','
           << m.r_aver << ',' << r.evaluations << ',' << r.mean_ms << '\n';
    }
}

void BenchConfig::validate() const {
    if (ns.empty() || timing_instances == 0 || repetitions < 1 || warmups < 0) {
        throw ConfigError("benchmark needs city counts, >= 1 timing instance and >= 1 repetition");
    }
    for (int n : ns) {
        if (n < 3 || n > solvers::kDpMaxN) {
            throw ConfigError("benchmark city counts must lie in 3.." +
                              std::to_string(solvers::kDpMaxN) + " (DP reference)");
        }
    }
    ga.validate();
    aco.validate();
}

std::vector<BenchRow> benchmark_solvers(const BenchConfig& cfg) {
    cfg.validate();
    std::vector<BenchRow> rows;
    for (int n : cfg.ns) {
        BenchRow row;
        row.n = n;
        const auto seed = cfg.seed + 1000003ULL * static_cast<std::uint64_t>(n);
        const auto timing = generate_labelled(n, cfg.timing_instances, seed);

        for (std::size_t a = 0; a < kBenchAlgorithms.size(); ++a) {
            const auto algo = kBenchAlgorithms[a];
            if (n > solver_limit(algo)) {
                continue;
            }
            auto run_all = [&] {
                double sink = 0.0;
                for (const auto& inst : timing) {
                    sink += solvers::solve(algo, inst, cfg.ga, cfg.aco).length;
                }
                return sink;
            };
            for (int w = 0; w < cfg.warmups; ++w) {
                run_all();
            }
            std::vector<double> reps;
            for (int r = 0; r < cfg.repetitions; ++r) {
                const auto t0 = clock::now();
                run_all();
                reps.push_back(elapsed_ms(t0) / static_cast<double>(timing.size()));
            }
            row.median_ms[a] = median(reps);
        }

        const auto accuracy = cfg.accuracy_instances == 0
                                  ? timing
                                  : generate_labelled(n, cfg.accuracy_instances, seed + 7);
        std::size_t ga_hits = 0, aco_hits = 0;
        for (const auto& inst : accuracy) {
            const double opt = inst.optimal()->length;
            ga_hits += within(solvers::solve_genetic(inst, cfg.ga).length, opt, 0.0) ? 1 : 0;
            aco_hits += within(solvers::solve_ant_colony(inst, cfg.aco).length, opt, 0.0) ? 1 : 0;
        }
        row.ga_e0 = static_cast<double>(ga_hits) / static_cast<double>(accuracy.size());
        row.aco_e0 = static_cast<double>(aco_hits) / static_cast<double>(accuracy.size());

        if (cfg.pipeline) {
            EvalOptions opts;
            opts.decode.m = cfg.decode_m;
            opts.exclude_collisions = false;
            // Repeat the single-instance pipeline to get a median per stage.
            std::vector<double> pred, dec;
            for (int r = 0; r < cfg.warmups + cfg.repetitions; ++r) {
                const auto rep = run_pipeline_eval(*cfg.pipeline, timing, opts);
                if (r >= cfg.warmups) {
                    pred.push_back(rep.mean_predict_ms);
                    dec.push_back(rep.mean_decode_ms);
                }
                row.decode_evaluations = rep.samples.front().evaluations;
            }
            row.predict_ms = median(pred);
            row.decode_ms = median(dec);
            row.pipeline_e0 = run_pipeline_eval(*cfg.pipeline, accuracy, opts).metrics.e0;
        }
        rows.push_back(row);
    }
    return rows;
}

bool strictly_increasing(const std::vector<BenchRow>& rows, solvers::Algorithm algo, int n_lo,
                         int n_hi) {
    const auto a = static_cast<std::size_t>(
        std::find(kBenchAlgorithms.begin(), kBenchAlgorithms.end(), algo) - kBenchAlgorithms.begin());
    std::optional<double> prev;
    for (int n = n_lo; n <= n_hi; ++n) {
        const auto it = std::find_if(rows.begin(), rows.end(), [n](const auto& r) { return r.n == n; });
        if (it == rows.end() || !it->median_ms[a]) {
            return false;
        }
        if (prev && !(*it->median_ms[a] > *prev)) {
            return false;
        }
        prev = it->median_ms[a];
    }
    return true;
}

namespace {

template <typename T>
void put(std::ostream& os, const std::optional<T>& v) {
    if (v) {
        os << *v;
    }
}

} // namespace

void write_bench_csv(const std::vector<BenchRow>& rows, const std::string& path) {
    auto os = open_out(path);
    os << "n,exhaustive_ms,dp_ms,branch_bound_ms,genetic_ms,ant_colony_ms,genetic_e0,ant_colony_e0,"
          "fcn_ms,decode_ms,pipeline_e0,decode_evaluations\n";
    for (const auto& r : rows) {
        os << r.n;
        for (const auto& t : r.median_ms) {
            os << ',';
            put(os, t);
        }
        os << ',';
        put(os, r.ga_e0);
        os << ',';
        put(os, r.aco_e0);
        os << ',';
        put(os, r.predict_ms);
        os << ',';
        put(os, r.decode_ms);
        os << ',';
        put(os, r.pipeline_e0);
        os << ',' << r.decode_evaluations << '\n';
    }
}

nlohmann::json to_json(const BenchRow& row) {
    nlohmann::json j{{"n", row.n}, {"decode_evaluations", row.decode_evaluations}};
    for (std::size_t a = 0; a < kBenchAlgorithms.size(); ++a) {
        const auto key = solvers::to_string(kBenchAlgorithms[a]) + "_ms";
        j[key] = row.median_ms[a] ? nlohmann::json(*row.median_ms[a]) : nlohmann::json(nullptr);
    }
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    j["genetic_e0"] = opt(row.ga_e0);
    j["ant_colony_e0"] = opt(row.aco_e0);
    j["fcn_ms"] = opt(row.predict_ms);
    j["decode_ms"] = opt(row.decode_ms);
    j["pipeline_e0"] = opt(row.pipeline_e0);
    return j;
}

} // namespace tspfcn::eval
