#pragma once

/// @file train.hpp
/// @brief Adam training with one sample per iteration over a growing dataset pool.
///
/// The pool starts at chunk_size samples and gains another chunk every max_iterations
/// iterations until the whole dataset is in use, so a dataset of N samples trains for
/// max_iterations * ceil(N / chunk_size) iterations in total.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tspfcn/dataset.hpp"
#include "tspfcn/model.hpp"

namespace tspfcn::net {

struct TrainConfig {
    AdamConfig adam;
    long max_iterations = 3000; // per dataset chunk
    long chunk_size = 3000;
    long snapshot_every = 50;
    long eval_samples = 16; // samples per loss estimate, taken from the front of each set
    std::uint64_t seed = 1;
    layers::Compute compute{};
    std::string snapshot_dir; // iter_{k}.png of the probe prediction; empty disables
    std::size_t probe = 0;    // training sample used for snapshots

    void validate() const;
};

struct CurveRow {
    long iteration = 0;
    double train_loss = 0.0;
    double test_loss = 0.0; // NaN without a test set
};

struct TrainResult {
    std::vector<CurveRow> curve;
    long iterations = 0;
};

using ProgressFn = std::function<void(const CurveRow&)>;

/// Total iterations the schedule runs for `samples` training samples.
long scheduled_iterations(const TrainConfig& cfg, std::size_t samples);

/// Size of the active pool at 0-based iteration `it`.
std::size_t pool_size(const TrainConfig& cfg, std::size_t samples, long it);

/// Mean inference loss over the first `limit` samples.
double mean_loss(const Model<float>& model, const Dataset& data, std::size_t limit,
                 const layers::Compute& compute = {});

/// Trains in place. Records a curve row (and a probe snapshot) at iteration 0, every
/// snapshot_every iterations and at the end. Throws ShapeError when the images do not match
/// the model input size.
TrainResult train(Model<float>& model, const Dataset& data, const Dataset* test,
                  const TrainConfig& cfg, const ProgressFn& progress = {});

/// Continues training on `extra` only (fresh Adam moments); same bookkeeping as train.
TrainResult fine_tune(Model<float>& model, const Dataset& extra, const TrainConfig& cfg,
                      const ProgressFn& progress = {});

void write_curve_csv(const std::vector<CurveRow>& curve, const std::string& path);

} // namespace tspfcn::net
