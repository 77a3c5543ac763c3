#include "tspfcn/train.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "tspfcn/errors.hpp"
#include "tspfcn/png_io.hpp"

namespace tspfcn::net {

void TrainConfig::validate() const {
    if (!(adam.learning_rate > 0.0)) {
        throw ConfigError("learning rate must be positive");
    }
    if (max_iterations < 0 || chunk_size < 1 || snapshot_every < 1 || eval_samples < 1) {
        throw ConfigError("iterations >= 0, chunk size, snapshot interval and eval samples >= 1");
    }
}

long scheduled_iterations(const TrainConfig& cfg, std::size_t samples) {
    const auto chunks = (static_cast<long>(samples) + cfg.chunk_size - 1) / cfg.chunk_size;
    return cfg.max_iterations * std::max(1L, chunks);
}

std::size_t pool_size(const TrainConfig& cfg, std::size_t samples, long it) {
    const long chunk = cfg.max_iterations > 0 ? it / cfg.max_iterations : 0;
    return std::min(samples, static_cast<std::size_t>(cfg.chunk_size * (chunk + 1)));
}

double mean_loss(const Model<float>& model, const Dataset& data, std::size_t limit,
                 const layers::Compute& compute) {
    const std::size_t k = std::min(limit, data.size());
    if (k == 0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const auto& s = data.samples[i];
        sum += loss(predict(model, image_to_tensor<float>(s.image), compute),
                    s.label.one_hot<float>());
    }
    return sum / static_cast<double>(k);
}

namespace {

void check_compatible(const Model<float>& model, const Dataset& data, const char* what) {
    const int s = model.arch().input_size;
    for (const auto& smp : data.samples) {
        if (smp.image.width() != s || smp.image.height() != s || smp.label.width() != s ||
            smp.label.height() != s) {
            throw ShapeError(std::string(what) + " sample " + smp.instance.id() + " is " +
                             std::to_string(smp.image.width()) + "x" +
                             std::to_string(smp.image.height()) + " but the model expects " +
                             std::to_string(s) + "x" + std::to_string(s));
        }
    }
}

TrainResult run(Model<float>& model, const Dataset& data, const Dataset* test,
                const TrainConfig& cfg, const ProgressFn& progress) {
    cfg.validate();
    if (data.size() == 0) {
        throw ConfigError("training set is empty");
    }
    check_compatible(model, data, "training");
    if (test) {
        check_compatible(model, *test, "test");
    }
    if (!cfg.snapshot_dir.empty()) {
        std::filesystem::create_directories(cfg.snapshot_dir);
    }
    const std::size_t probe = std::min(cfg.probe, data.size() - 1);
    const auto limit = static_cast<std::size_t>(cfg.eval_samples);

    TrainResult result;
    auto record = [&](long it) {
        CurveRow row{it, mean_loss(model, data, limit, cfg.compute),
                     test ? mean_loss(model, *test, limit, cfg.compute)
                          : std::numeric_limits<double>::quiet_NaN()};
        result.curve.push_back(row);
        if (!cfg.snapshot_dir.empty()) {
            const auto probs =
                predict(model, image_to_tensor<float>(data.samples[probe].image), cfg.compute);
            save_png(probs_to_image(probs), cfg.snapshot_dir + "/iter_" + std::to_string(it) + ".png");
        }
        if (progress) {
            progress(row);
        }
    };

    const long total = scheduled_iterations(cfg, data.size());
    std::mt19937_64 rng(cfg.seed);
    AdamState<float> state = AdamState<float>::zeros(model);
    ForwardCache<float> cache;
    record(0);
    for (long it = 0; it < total; ++it) {
        std::uniform_int_distribution<std::size_t> pick(0, pool_size(cfg, data.size(), it) - 1);
        const auto& s = data.samples[pick(rng)];
        forward(model, image_to_tensor<float>(s.image), ForwardOptions{true, cfg.compute}, &rng,
                &cache);
        const auto grads = backward(model, cache, s.label.one_hot<float>(), cfg.compute);
        adam_step(model, grads, state, cfg.adam);
        const long done = it + 1;
        if (done % cfg.snapshot_every == 0 || done == total) {
            record(done);
        }
    }
    result.iterations = total;
    return result;
}

} // namespace

TrainResult train(Model<float>& model, const Dataset& data, const Dataset* test,
                  const TrainConfig& cfg, const ProgressFn& progress) {
    return run(model, data, test, cfg, progress);
}

TrainResult fine_tune(Model<float>& model, const Dataset& extra, const TrainConfig& cfg,
                      const ProgressFn& progress) {
    return run(model, extra, nullptr, cfg, progress);
}

void write_curve_csv(const std::vector<CurveRow>& curve, const std::string& path) {
    std::ofstream os(path);
    if (!os) {
        throw IoError("cannot write " + path);
    }
    os.precision(10);
    os << "iteration,train_loss,test_loss\n";
    for (const auto& r : curve) {
        os << r.iteration << ',' << r.train_loss << ',';
        if (std::isnan(r.test_loss)) {
            os << "nan";
        } else {
            os << r.test_loss;
        }
        os << '\n';
    }
}

} // namespace tspfcn::net
