#include "tspfcn/dataset.hpp"

#include <filesystem>
#include <cstdio>
#include <fstream>
#include <optional>

#include "tspfcn/errors.hpp"
#include "tspfcn/parallel.hpp"
#include "tspfcn/png_io.hpp"
#include "tspfcn/solvers.hpp"

namespace fs = std::filesystem;

namespace tspfcn {

std::uint64_t instance_seed(std::uint64_t seed, std::size_t k) {
    // splitmix64 finalizer over (seed, k)
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(k) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<TspInstance> generate_labelled(int n, std::size_t count, std::uint64_t seed,
                                           int jobs) {
    if (n > solvers::kDpMaxN) {
        throw SizeLimitError("labels come from the DP solver, which is limited to n <= " +
                             std::to_string(solvers::kDpMaxN));
    }
    std::vector<std::optional<TspInstance>> slots(count);
    parallel_for_index(count, jobs, [&](std::size_t k) {
        char id[64];
        std::snprintf(id, sizeof id, "n%d_s%llu_%05zu", n, static_cast<unsigned long long>(seed), k);
        auto inst = generate_instance(n, instance_seed(seed, k), {}, id);
        slots[k] = inst.with_optimal(solvers::solve_dp(inst));
    });
    std::vector<TspInstance> out;
    out.reserve(count);
    for (auto& s : slots) {
        out.push_back(std::move(*s));
    }
    return out;
}

Dataset build_dataset(std::vector<TspInstance> instances, const RenderConfig& render,
                      std::uint64_t seed, int jobs) {
    render.validate();
    Dataset ds;
    ds.info.seed = seed;
    ds.info.render = render;
    ds.info.n = instances.empty() ? 0 : instances.front().size();
    std::vector<RasterImage> images(instances.size());
    std::vector<LabelMask> labels(instances.size());
    parallel_for_index(instances.size(), jobs, [&](std::size_t k) {
        const auto& inst = instances[k];
        if (!inst.optimal()) {
            throw InvalidTourError("instance " + inst.id() + " has no optimal tour to render");
        }
        images[k] = render_image(inst, render);
        labels[k] = render_label(inst, *inst.optimal(), render);
    });
    for (std::size_t k = 0; k < instances.size(); ++k) {
        if (instances[k].size() != ds.info.n) {
            ds.info.n = 0;
        }
        ds.samples.push_back({std::move(instances[k]), std::move(images[k]), std::move(labels[k])});
    }
    return ds;
}

Dataset make_dataset(int n, std::size_t count, std::uint64_t seed, const RenderConfig& render,
                     int jobs) {
    return build_dataset(generate_labelled(n, count, seed, jobs), render, seed, jobs);
}

nlohmann::json manifest_json(const Dataset& ds) {
    return {{"count", ds.size()},
            {"n", ds.info.n},
            {"seed", ds.info.seed},
            {"render", to_json(ds.info.render)},
            {"label_solver", "dp"}};
}

void write_dataset(const Dataset& ds, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "images", ec);
    fs::create_directories(fs::path(dir) / "labels", ec);
    if (ec) {
        throw IoError("cannot create dataset directory " + dir + ": " + ec.message());
    }
    {
        std::ofstream os(fs::path(dir) / "manifest.json");
        os << manifest_json(ds).dump(2) << '\n';
        if (!os) {
            throw IoError("cannot write " + dir + "/manifest.json");
        }
    }
    std::vector<TspInstance> instances;
    instances.reserve(ds.size());
    for (const auto& s : ds.samples) {
        instances.push_back(s.instance);
        save_png(s.image, (fs::path(dir) / "images" / (s.instance.id() + ".png")).string());
        save_label_png(s.label, (fs::path(dir) / "labels" / (s.instance.id() + ".png")).string());
    }
    write_instances_jsonl((fs::path(dir) / "instances.jsonl").string(), instances);
}

Dataset read_dataset(const std::string& dir) {
    const fs::path root(dir);
    std::ifstream is(root / "manifest.json");
    if (!is) {
        throw IoError("no manifest.json in " + dir);
    }
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(dir + "/manifest.json: " + e.what());
    }
    Dataset ds;
    try {
        ds.info.n = manifest.at("n").get<int>();
        ds.info.seed = manifest.at("seed").get<std::uint64_t>();
        ds.info.render = render_config_from_json(manifest.at("render"));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(dir + "/manifest.json: " + e.what());
    }
    auto instances = read_instances_jsonl((root / "instances.jsonl").string());
    const auto count = manifest.value("count", instances.size());
    if (count != instances.size()) {
        throw FormatError(dir + ": manifest lists " + std::to_string(count) + " samples, found " +
                          std::to_string(instances.size()));
    }
    const auto& r = ds.info.render;
    for (auto& inst : instances) {
        auto image = load_png((root / "images" / (inst.id() + ".png")).string(), r.w, r.h);
        auto label = load_label_png((root / "labels" / (inst.id() + ".png")).string(), r.w, r.h);
        ds.samples.push_back({std::move(inst), std::move(image), std::move(label)});
    }
    return ds;
}

} // namespace tspfcn
