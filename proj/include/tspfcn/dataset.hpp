#pragma once

/// @file dataset.hpp
/// @brief Labelled samples (instance, input image, label mask) and their on-disk layout:
///
///     manifest.json       count, n, seed, render config
///     instances.jsonl     one instance per line with its optimal tour
///     images/{id}.png     rendered input
///     labels/{id}.png     label mask, path = 255

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tspfcn/instance.hpp"
#include "tspfcn/raster.hpp"

namespace tspfcn {

struct Sample {
    TspInstance instance;
    RasterImage image;
    LabelMask label;
};

struct DatasetInfo {
    int n = 0; // 0 when city counts are mixed
    std::uint64_t seed = 0;
    RenderConfig render;
};

struct Dataset {
    DatasetInfo info;
    std::vector<Sample> samples;

    std::size_t size() const noexcept { return samples.size(); }
};

/// Seed of the k-th instance of a generated set; a fixed function of (seed, k).
std::uint64_t instance_seed(std::uint64_t seed, std::size_t k);

/// `count` random n-city instances, each labelled with its dynamic-programming optimum.
std::vector<TspInstance> generate_labelled(int n, std::size_t count, std::uint64_t seed,
                                           int jobs = 1);

/// Renders every instance (which must carry its optimal tour) into a sample.
Dataset build_dataset(std::vector<TspInstance> instances, const RenderConfig& render,
                      std::uint64_t seed = 0, int jobs = 1);

/// generate_labelled followed by build_dataset.
Dataset make_dataset(int n, std::size_t count, std::uint64_t seed, const RenderConfig& render,
                     int jobs = 1);

nlohmann::json manifest_json(const Dataset& ds);

/// Creates `dir` if needed and writes the layout above.
void write_dataset(const Dataset& ds, const std::string& dir);
/// Reads and cross-checks a dataset directory. Throws FormatError or ShapeError when the
/// manifest, instances and PNG files disagree.
Dataset read_dataset(const std::string& dir);

} // namespace tspfcn
