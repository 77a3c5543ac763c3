// Acceptance suite: one PASS/FAIL line per criterion. Optional arguments select criteria by
// number, e.g. `tspfcn_acceptance 2 7`.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tspfcn/dataset.hpp"
#include "tspfcn/decode.hpp"
#include "tspfcn/eval.hpp"
#include "tspfcn/gradcheck.hpp"
#include "tspfcn/model.hpp"
#include "tspfcn/png_io.hpp"
#include "tspfcn/solvers.hpp"
#include "tspfcn/train.hpp"

using namespace tspfcn;
namespace fs = std::filesystem;

namespace {

// Tolerances and sizes.
constexpr double kExactRelTol = 1e-9;
constexpr int kExactPerN = 200;
constexpr int kCleanInstances = 200;
constexpr double kMaxCollisionRate = 0.02;
constexpr int kGradSamples = 240;
constexpr double kGradTol = 1e-3;
constexpr double kHalfLn2Tol = 1e-12;
constexpr double kPerfectLossTol = 1e-11;
constexpr long kMemorizeIterations = 2000;
constexpr int kMemorizeInstances = 8;
constexpr int kMemorizeCities = 10;
constexpr double kMemorizeLossRatio = 0.10;
constexpr int kDepartureInstances = 100;
constexpr double kCorruption = 0.01;
constexpr double kMinRSquared = 0.9;
constexpr double kRAverTol = 1e-4;
constexpr std::size_t kHeuristicInstances = 480;
constexpr double kMinGaE0 = 0.95;
constexpr double kMinAcoE0 = 0.80;
constexpr int kSweepPerN = 100;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

Outcome exact_solvers() {
    std::size_t checked = 0, mismatches = 0;
    double worst = 0.0;
    for (int n = 4; n <= 9; ++n) {
        for (int k = 0; k < kExactPerN; ++k) {
            const auto inst = generate_instance(n, instance_seed(0xacc1ULL + n, k));
            const double dp = solvers::solve_dp(inst).length;
            for (double other : {solvers::solve_exhaustive(inst).length,
                                 solvers::solve_branch_bound(inst).length}) {
                const double rel = std::abs(other - dp) / dp;
                worst = std::max(worst, rel);
                mismatches += rel > kExactRelTol ? 1 : 0;
            }
            ++checked;
        }
    }
    return {mismatches == 0, std::to_string(checked) + " instances, n=4..9, worst rel diff " +
                                 fmt("%.2e", worst)};
}

Outcome clean_decoder() {
    const auto instances = generate_labelled(10, kCleanInstances, 0xacc2ULL);
    const eval::PassthroughPredictor pred(RenderConfig::paper());
    const auto r = eval::run_pipeline_eval(pred, instances);
    const bool ok = r.metrics.e0 == 1.0 && r.collision_rate() < kMaxCollisionRate;
    return {ok, "e0 " + fmt("%.4f", r.metrics.e0) + " over " + std::to_string(r.metrics.samples) +
                    " scored, collision rate " + fmt("%.4f", r.collision_rate())};
}

Outcome gradients() {
    net::ArchConfig a = net::ArchConfig::desk();
    a.input_size = 32;
    a.dropout_rate = 0.0;
    net::GradCheckConfig cfg;
    cfg.samples = kGradSamples;
    cfg.tolerance = kGradTol;
    const auto r = net::gradient_check(a, cfg);
    return {r.passed && r.checked >= 200,
            std::to_string(r.checked) + " parameters, max rel error " + fmt("%.2e", r.max_rel_error)};
}

Outcome loss_closed_forms() {
    const auto inst = generate_labelled(8, 1, 0xacc4ULL).front();
    const auto label = render_label(inst, *inst.optimal(), RenderConfig::paper()).one_hot<double>();
    const double half = net::loss(Tensor<double>(label.shape(), 0.5), label);
    const double perfect = net::loss(label, label);
    const double err = std::abs(half - std::log(2.0) / 2.0);
    return {err <= kHalfLn2Tol && perfect <= kPerfectLossTol,
            "|J(0.5) - ln2/2| " + fmt("%.2e", err) + ", J(label) " + fmt("%.2e", perfect)};
}

Outcome memorization() {
    const RenderConfig rc = RenderConfig::desk();
    const auto ds = make_dataset(kMemorizeCities, kMemorizeInstances, 0xacc5ULL, rc);
    net::ArchConfig arch = net::ArchConfig::desk();
    arch.dropout_rate = 0.5;
    auto model = net::init_model<float>(arch, 1);
    net::TrainConfig tc;
    tc.adam.learning_rate = 1e-4;
    tc.max_iterations = kMemorizeIterations;
    tc.chunk_size = kMemorizeInstances;
    tc.snapshot_every = 500;
    tc.eval_samples = kMemorizeInstances;
    const auto res = net::train(model, ds, nullptr, tc);
    const double first = res.curve.front().train_loss;
    const double last = res.curve.back().train_loss;

    const eval::FcnPredictor pred(model, rc);
    std::vector<TspInstance> instances;
    for (const auto& s : ds.samples) {
        instances.push_back(s.instance);
    }
    eval::EvalOptions opts;
    opts.exclude_collisions = false;
    const auto r = eval::run_pipeline_eval(pred, instances, opts);
    const double ratio = last / first;
    return {ratio < kMemorizeLossRatio && r.metrics.e5 == 1.0,
            "loss " + fmt("%.4g", first) + " -> " + fmt("%.4g", last) + " (ratio " +
                fmt("%.4f", ratio) + "), e5 " + fmt("%.3f", r.metrics.e5) + ", e0 " +
                fmt("%.3f", r.metrics.e0)};
}

Outcome departures() {
    const int n = 10;
    const RenderConfig rc = RenderConfig::paper();
    const auto instances = generate_labelled(n, kDepartureInstances, 0xacc6ULL);
    std::vector<LabelMask> masks;
    for (std::size_t k = 0; k < instances.size(); ++k) {
        const auto clean = render_label(instances[k], *instances[k].optimal(), rc);
        masks.push_back(eval::corrupt_mask(clean, kCorruption, instance_seed(0xc0441ULL, k)));
    }
    std::vector<int> ms;
    for (int m = 1; m <= n; ++m) {
        ms.push_back(m);
    }
    const auto sweep = eval::departure_sweep(instances, masks, ms, 0xacc6ULL, rc.city_halfwidth, 15);
    bool counts = true;
    for (const auto& row : sweep.rows) {
        const long expect = static_cast<long>(kDepartureInstances) * row.m * n * (n - 1) / 2;
        counts = counts && row.evaluations == expect;
    }
    const double e1 = sweep.rows.front().metrics.e0;
    const double e10 = sweep.rows.back().metrics.e0;
    return {e10 >= e1 && counts && sweep.r_squared >= kMinRSquared,
            "e0 m=1 " + fmt("%.2f", e1) + ", m=10 " + fmt("%.2f", e10) + ", counters " +
                (counts ? "exact" : "WRONG") + ", R^2 " + fmt("%.4f", sweep.r_squared)};
}

Outcome metric_arithmetic() {
    const std::vector<eval::SolutionRecord> recs{{1.00, 1.0, true}, {1.005, 1.0, true}, {1.03, 1.0, true}};
    const auto r = eval::compute_metrics(recs);
    const bool ok = std::abs(r.e0 - 1.0 / 3.0) < 1e-12 && std::abs(r.e1 - 2.0 / 3.0) < 1e-12 &&
                    std::abs(r.e2 - 2.0 / 3.0) < 1e-12 && r.e5 == 1.0 &&
                    std::abs(r.r_aver - 1.0116666666666667) < kRAverTol;
    std::ostringstream os;
    os << "e0 " << fmt("%.4f", r.e0) << " e1 " << fmt("%.4f", r.e1) << " e2 " << fmt("%.4f", r.e2)
       << " e5 " << fmt("%.4f", r.e5) << " R_aver " << fmt("%.6f", r.r_aver);
    return {ok, os.str()};
}

Outcome benchmark_trend() {
    eval::BenchConfig timing;
    timing.ns = {8, 9, 10, 11};
    timing.timing_instances = 2;
    timing.repetitions = 5;
    timing.warmups = 1;
    timing.ga.generations = 1;
    timing.aco.iterations = 1;
    const auto rows = eval::benchmark_solvers(timing);
    const bool rising = eval::strictly_increasing(rows, solvers::Algorithm::exhaustive, 8, 11);
    const auto& r11 = rows.back();
    const double exh11 = *r11.median_ms[0];
    const double bb11 = *r11.median_ms[2];

    const auto instances = generate_labelled(10, kHeuristicInstances, 0xacc8ULL);
    std::size_t ga_hits = 0, aco_hits = 0;
    for (std::size_t k = 0; k < instances.size(); ++k) {
        solvers::GaConfig ga;
        ga.seed = k + 1;
        solvers::AcoConfig aco;
        aco.seed = k + 1;
        const double opt = instances[k].optimal()->length;
        ga_hits += eval::within(solvers::solve_genetic(instances[k], ga).length, opt, 0.0) ? 1 : 0;
        aco_hits += eval::within(solvers::solve_ant_colony(instances[k], aco).length, opt, 0.0) ? 1 : 0;
    }
    const double ga_e0 = static_cast<double>(ga_hits) / instances.size();
    const double aco_e0 = static_cast<double>(aco_hits) / instances.size();
    std::ostringstream os;
    os << "exhaustive ms n=8..11:";
    for (const auto& r : rows) {
        os << ' ' << fmt("%.3g", *r.median_ms[0]);
    }
    os << (rising ? " (rising)" : " (NOT rising)") << ", B&B n=11 " << fmt("%.3g", bb11)
       << " ms, GA e0 " << fmt("%.4f", ga_e0) << ", ACO e0 " << fmt("%.4f", aco_e0);
    return {rising && exh11 > bb11 && ga_e0 >= kMinGaE0 && aco_e0 >= kMinAcoE0, os.str()};
}

Outcome passthrough_sweep() {
    const eval::PassthroughPredictor pred(RenderConfig::paper());
    const auto rows = eval::generalization_sweep(pred, 4, 12, kSweepPerN, 0xacc9ULL);
    bool ok = true;
    std::ostringstream os;
    os << "e0 per n:";
    for (const auto& r : rows) {
        ok = ok && r.report.metrics.e0 == 1.0;
        os << ' ' << r.n << '=' << fmt("%.2f", r.report.metrics.e0);
    }
    return {ok, os.str()};
}

Outcome round_trips() {
    const fs::path dir = fs::temp_directory_path() / "tspfcn_acceptance";
    fs::create_directories(dir);
    const auto inst = generate_labelled(10, 1, 0xacc10ULL).front();
    const auto rc = RenderConfig::paper();
    const auto img = render_input(inst, rc);
    const auto mask = render_label(inst, *inst.optimal(), rc);
    save_png(img, (dir / "img.png").string());
    save_label_png(mask, (dir / "mask.png").string());
    const bool png_ok = load_png((dir / "img.png").string()) == img &&
                        load_label_png((dir / "mask.png").string()) == mask;

    const auto model = net::init_model<float>(net::ArchConfig::desk(), 3);
    net::save_checkpoint(model, (dir / "m.ckpt").string());
    const auto back = net::load_checkpoint((dir / "m.ckpt").string());
    bool ckpt_ok = back.arch() == model.arch() && back.params().size() == model.params().size();
    for (std::size_t i = 0; ckpt_ok && i < model.params().size(); ++i) {
        ckpt_ok = back.params()[i].value == model.params()[i].value;
    }

    const bool det = render_input(inst, rc) == img && render_label(inst, *inst.optimal(), rc) == mask &&
                     render_scatter(inst, rc) == render_scatter(inst, rc);
    fs::remove_all(dir);
    return {png_ok && ckpt_ok && det, std::string("png ") + (png_ok ? "ok" : "MISMATCH") +
                                          ", checkpoint " + (ckpt_ok ? "ok" : "MISMATCH") +
                                          ", render " + (det ? "deterministic" : "NONDETERMINISTIC")};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"exact-solver oracle equivalence", exact_solvers},
        {"clean-label decoder exactness", clean_decoder},
        {"gradient verification", gradients},
        {"loss analytics", loss_closed_forms},
        {"memorization descent", memorization},
        {"decoder departure monotonicity and cost", departures},
        {"metric arithmetic", metric_arithmetic},
        {"benchmark trend", benchmark_trend},
        {"oracle-passthrough generalization sweep", passthrough_sweep},
        {"round-trips", round_trips},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        only.insert(std::atoi(argv[i]));
    }
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!only.empty() && !only.count(id)) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id,
                    criteria[k].first.c_str(), o.detail.c_str(), s);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
