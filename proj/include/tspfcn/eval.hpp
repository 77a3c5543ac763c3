#pragma once

/// @file eval.hpp
/// @brief Accuracy metrics, the predict -> binarize -> decode pipeline, sweeps over city
/// count and departure count, and the cross-solver timing benchmark.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tspfcn/decode.hpp"
#include "tspfcn/model.hpp"
#include "tspfcn/solvers.hpp"

namespace tspfcn::eval {

/// Relative slack used when comparing tour lengths.
inline constexpr double kLengthTol = 1e-9;

/// True when produced <= (1 + percent/100) * optimal, up to kLengthTol relative.
bool within(double produced, double optimal, double percent);

struct SolutionRecord {
    double produced = 0.0;
    double optimal = 0.0;
    bool valid = true;
};

struct MetricsReport {
    double e0 = 0.0, e1 = 0.0, e2 = 0.0, e5 = 0.0, e10 = 0.0; // fractions
    double r_aver = 0.0; // mean produced / optimal over valid tours
    std::size_t samples = 0;
    std::size_t invalid = 0;
};

/// Invalid tours fail every e_k and are left out of r_aver. Throws ConfigError on an empty
/// set or a non-positive optimal length.
MetricsReport compute_metrics(std::span<const SolutionRecord> records);

nlohmann::json to_json(const MetricsReport& r);

/// Source of binarized masks for the pipeline.
class Predictor {
  public:
    virtual ~Predictor() = default;
    virtual LabelMask mask(const TspInstance& instance) const = 0;
    virtual const RenderConfig& render() const = 0;
    virtual std::string name() const = 0;
};

/// render_image -> forward (inference) -> per-pixel argmax.
class FcnPredictor final : public Predictor {
  public:
    /// Throws ShapeError when the render size differs from the model input size.
    FcnPredictor(const net::Model<float>& model, RenderConfig render,
                 layers::Compute compute = {});
    LabelMask mask(const TspInstance& instance) const override;
    const RenderConfig& render() const override { return render_; }
    std::string name() const override { return "fcn"; }

  private:
    const net::Model<float>& model_;
    RenderConfig render_;
    layers::Compute compute_;
};

/// Emits the rendered optimal-tour label, bypassing the network.
class PassthroughPredictor final : public Predictor {
  public:
    explicit PassthroughPredictor(RenderConfig render);
    LabelMask mask(const TspInstance& instance) const override;
    const RenderConfig& render() const override { return render_; }
    std::string name() const override { return "oracle-passthrough"; }

  private:
    RenderConfig render_;
};

struct EvalOptions {
    /// city_halfwidth is taken from the predictor's render config unless negative.
    decode::DecodeConfig decode;
    /// Leave instances with two cities on one pixel out of the metrics (still counted).
    bool exclude_collisions = true;
    int jobs = 1;
};

struct SampleResult {
    std::string id;
    int n = 0;
    double produced = 0.0;
    double optimal = 0.0;
    bool valid = false;
    bool collision = false;
    double predict_ms = 0.0;
    double decode_ms = 0.0;
    long evaluations = 0;
};

struct PipelineReport {
    MetricsReport metrics;
    std::size_t instances = 0;
    std::size_t collisions = 0;
    double mean_predict_ms = 0.0;
    double mean_decode_ms = 0.0;
    std::vector<SampleResult> samples;

    double collision_rate() const {
        return instances ? static_cast<double>(collisions) / instances : 0.0;
    }
};

nlohmann::json to_json(const PipelineReport& r, bool with_samples = false);

/// Every instance must carry its optimal tour.
PipelineReport run_pipeline_eval(const Predictor& predictor,
                                 const std::vector<TspInstance>& instances,
                                 const EvalOptions& opts = {});

struct SweepRow {
    int n = 0;
    PipelineReport report;
    std::vector<std::string> warnings;
};

/// Largest city count for which distinct-pixel placement is considered safe.
inline constexpr int kResolutionSafeMaxN = 12;

/// Full pipeline on `per_n` fresh DP-labelled instances for every n in [n_min, n_max].
std::vector<SweepRow> generalization_sweep(const Predictor& predictor, int n_min, int n_max,
                                           std::size_t per_n, std::uint64_t seed,
                                           const EvalOptions& opts = {});

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

/// Flips a seeded `fraction` of the path-class pixels to background.
LabelMask corrupt_mask(const LabelMask& mask, double fraction, std::uint64_t seed);

struct DepartureRow {
    int m = 0;
    MetricsReport metrics;
    long evaluations = 0;
    double mean_ms = 0.0;
};

struct DepartureSweep {
    std::vector<DepartureRow> rows;
    double r_squared = 0.0; // decode time against m
};

/// Decodes every mask for each m (nested seeded departure sets) and scores the result.
DepartureSweep departure_sweep(const std::vector<TspInstance>& instances,
                               const std::vector<LabelMask>& masks, const std::vector<int>& ms,
                               std::uint64_t seed, int city_halfwidth, int timing_repeats = 3);

void write_departure_csv(const DepartureSweep& sweep, const std::string& path);

inline constexpr std::array<solvers::Algorithm, 5> kBenchAlgorithms{
    solvers::Algorithm::exhaustive, solvers::Algorithm::dp, solvers::Algorithm::branch_bound,
    solvers::Algorithm::genetic, solvers::Algorithm::ant_colony};

struct BenchConfig {
    std::vector<int> ns{4, 5, 6, 7, 8, 9, 10, 11, 12};
    std::size_t timing_instances = 3;   // instances per timing cell
    std::size_t accuracy_instances = 0; // heuristic / pipeline e0 sample per n (0 = timing set)
    int repetitions = 20;
    int warmups = 3;
    solvers::GaConfig ga;
    solvers::AcoConfig aco;
    std::uint64_t seed = 1;
    const Predictor* pipeline = nullptr; // adds FCN/decode columns when set
    int decode_m = 0;

    void validate() const;
};

struct BenchRow {
    int n = 0;
    std::array<std::optional<double>, 5> median_ms; // per kBenchAlgorithms, empty past guard
    std::optional<double> ga_e0, aco_e0;
    std::optional<double> predict_ms, decode_ms, pipeline_e0;
    long decode_evaluations = 0; // per instance
};

/// Median over `repetitions` of the mean per-instance wall time, after `warmups` untimed runs.
std::vector<BenchRow> benchmark_solvers(const BenchConfig& cfg);

/// True when the median time of `algo` strictly increases over every n in [n_lo, n_hi].
bool strictly_increasing(const std::vector<BenchRow>& rows, solvers::Algorithm algo, int n_lo,
                         int n_hi);

void write_bench_csv(const std::vector<BenchRow>& rows, const std::string& path);
nlohmann::json to_json(const BenchRow& row);

} // namespace tspfcn::eval
