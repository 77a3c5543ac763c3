#pragma once

/// @file commands.hpp
/// @brief Implementations behind the `tspfcn` subcommands. Each command writes its outputs
/// plus one run manifest and returns the process exit code; errors surface as exceptions
/// carrying their own exit code.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tspfcn/raster.hpp"
#include "tspfcn/solvers.hpp"

namespace tspfcn::cli {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kDataDirEnv = "TSPFCN_DATA_DIR";

struct GlobalOptions {
    std::uint64_t seed = 1;
    int jobs = 1;
    std::string out;
    std::vector<std::string> argv; // recorded verbatim in the manifest
};

/// Image options shared by every command that renders.
struct RenderOptions {
    std::optional<int> size; // default: the checkpoint input size, else 64
    std::optional<int> city_halfwidth; // default scales with size
    int label_thickness = 1;
    std::string mode = "full-graph";

    RenderConfig config(int default_size = 64) const;
};

struct GenOptions {
    int n = 10;
    std::size_t count = 20;
    RenderOptions render;
};

struct RenderCmdOptions {
    std::string in; // instances.jsonl
    RenderOptions render;
};

struct SolveOptions {
    std::string algo = "dp";
    std::string in;
    solvers::GaConfig ga;
    solvers::AcoConfig aco;
};

struct TrainOptions {
    std::string data;
    std::string test;
    std::string arch = "desk";
    std::string init_checkpoint; // continue from this model
    bool fine_tune = false;
    long iterations = 3000; // per chunk
    long chunk_size = 3000;
    long snapshot_every = 50;
    long eval_samples = 16;
    double learning_rate = 1e-4;
    std::optional<double> dropout;
    std::string output_activation = "paired-sigmoid";
    int threads = 1;
    bool quiet = false;
};

/// Where masks come from: a checkpoint or the rendered labels.
struct PredictorOptions {
    std::string checkpoint;
    bool oracle_passthrough = false;
};

struct PredictOptions {
    PredictorOptions predictor;
    std::string in; // instances.jsonl, or a dataset directory
    RenderOptions render;
};

struct DecodeOptions {
    std::string mask;
    std::string instance;
    int m = 0;
    std::optional<int> departure;
    std::optional<int> city_halfwidth;
};

struct EvalOptions {
    PredictorOptions predictor;
    std::string data; // dataset directory; empty generates instances
    int n = 10;
    std::size_t count = 100;
    int m = 0;
    RenderOptions render;
    bool include_collisions = false;
};

struct BenchOptions {
    std::string ns = "4..12";
    std::size_t timing_instances = 3;
    std::size_t accuracy_instances = 0;
    int repetitions = 20;
    int warmups = 3;
    solvers::GaConfig ga;
    solvers::AcoConfig aco;
    PredictorOptions predictor; // optional pipeline columns
    RenderOptions render;
    int m = 0;
};

struct SweepOptions {
    std::string kind = "cities"; // cities | departures
    PredictorOptions predictor;
    std::string ns = "4..12";
    std::size_t count = 100;
    std::string ms = "1..10";
    double corrupt = 0.01;
    int n = 10;
    RenderOptions render;
};

/// "4..12" or "4,6,8" (or a mix such as "4..6,10").
std::vector<int> parse_int_list(const std::string& spec);

/// Dataset root for relative paths: TSPFCN_DATA_DIR when set, else the working directory.
std::string resolve_data_path(const std::string& path);

/// Manifest written next to a command's outputs.
struct RunManifest {
    std::string command;
    nlohmann::json config;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;

    nlohmann::json to_json(const GlobalOptions& g, const std::string& started,
                           const std::string& finished) const;
};

int cmd_gen(const GlobalOptions& g, const GenOptions& o);
int cmd_render(const GlobalOptions& g, const RenderCmdOptions& o);
int cmd_solve(const GlobalOptions& g, const SolveOptions& o);
int cmd_train(const GlobalOptions& g, const TrainOptions& o);
int cmd_predict(const GlobalOptions& g, const PredictOptions& o);
int cmd_decode(const GlobalOptions& g, const DecodeOptions& o);
int cmd_eval(const GlobalOptions& g, const EvalOptions& o);
int cmd_bench(const GlobalOptions& g, const BenchOptions& o);
int cmd_sweep(const GlobalOptions& g, const SweepOptions& o);

} // namespace tspfcn::cli
