#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tspfcn/commands.hpp"
#include "tspfcn/errors.hpp"

using namespace tspfcn::cli;

namespace {

void add_render(CLI::App* sub, RenderOptions& r) {
    sub->add_option("--size", r.size, "Image side in pixels (multiple of 32 for the network)");
    sub->add_option("--halfwidth", r.city_halfwidth, "City square half-width in pixels");
    sub->add_option("--label-thickness", r.label_thickness, "Tour line thickness in the label");
    sub->add_option("--mode", r.mode, "Input rendering: full-graph or scatter")
        ->check(CLI::IsMember({"full-graph", "scatter"}));
}

void add_predictor(CLI::App* sub, PredictorOptions& p) {
    sub->add_option("--checkpoint", p.checkpoint, "Trained model checkpoint");
    sub->add_flag("--oracle-passthrough", p.oracle_passthrough,
                  "Use the rendered optimal-tour label instead of a network prediction");
}

void add_ga(CLI::App* sub, tspfcn::solvers::GaConfig& ga) {
    sub->add_option("--ga-pop", ga.population, "GA population");
    sub->add_option("--ga-cross", ga.crossover_rate, "GA crossover rate");
    sub->add_option("--ga-mut", ga.mutation_rate, "GA per-position swap probability");
    sub->add_option("--ga-gen", ga.generations, "GA generations");
}

void add_aco(CLI::App* sub, tspfcn::solvers::AcoConfig& aco) {
    sub->add_option("--aco-ants", aco.ant_num, "ACO ants per iteration");
    sub->add_option("--aco-rho", aco.rho, "ACO evaporation rate");
    sub->add_option("--aco-alpha", aco.alpha, "ACO pheromone weight");
    sub->add_option("--aco-beta", aco.beta, "ACO distance weight");
    sub->add_option("--aco-iter", aco.iterations, "ACO iterations");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Euclidean TSP as image-to-image learning: data, solvers, FCN, decoder, metrics"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    for (int i = 0; i < argc; ++i) {
        g.argv.emplace_back(argv[i]);
    }
    app.add_option("--seed", g.seed, "Master RNG seed");
    app.add_option("--jobs", g.jobs, "Worker threads for per-sample work")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "Output file or directory");

    GenOptions gen;
    auto* c_gen = app.add_subcommand("gen", "Generate DP-labelled instances, images and labels");
    c_gen->add_option("--n", gen.n, "Cities per instance")->required();
    c_gen->add_option("--count", gen.count, "Number of instances")->required();
    add_render(c_gen, gen.render);

    RenderCmdOptions render;
    auto* c_render = app.add_subcommand("render", "Render images (and labels) for instances");
    c_render->add_option("--in", render.in, "instances.jsonl")->required();
    add_render(c_render, render.render);

    SolveOptions solve;
    auto* c_solve = app.add_subcommand("solve", "Solve instances with one algorithm");
    c_solve->add_option("--algo", solve.algo, "exh | dp | bb | ga | aco")
        ->check(CLI::IsMember({"exh", "dp", "bb", "ga", "aco"}));
    c_solve->add_option("--in", solve.in, "instances.jsonl")->required();
    add_ga(c_solve, solve.ga);
    add_aco(c_solve, solve.aco);

    TrainOptions train;
    auto* c_train = app.add_subcommand("train", "Train (or fine-tune) the FCN on a dataset");
    c_train->add_option("--data", train.data, "Training dataset directory")->required();
    c_train->add_option("--test", train.test, "Held-out dataset directory");
    c_train->add_option("--arch", train.arch, "desk | paper")->check(CLI::IsMember({"desk", "paper"}));
    c_train->add_option("--checkpoint", train.init_checkpoint, "Start from this model");
    c_train->add_flag("--fine-tune", train.fine_tune, "Continue training --checkpoint on --data");
    c_train->add_option("--iterations", train.iterations, "Iterations per dataset chunk");
    c_train->add_option("--chunk", train.chunk_size, "Samples added per chunk");
    c_train->add_option("--snapshot-every", train.snapshot_every, "Curve/snapshot interval");
    c_train->add_option("--eval-samples", train.eval_samples, "Samples per loss estimate");
    c_train->add_option("--lr", train.learning_rate, "Adam learning rate");
    c_train->add_option("--dropout", train.dropout, "Dropout rate of the head");
    c_train->add_option("--output", train.output_activation, "paired-sigmoid | channel-sigmoid")
        ->check(CLI::IsMember({"paired-sigmoid", "channel-sigmoid"}));
    c_train->add_option("--threads", train.threads, "Convolution threads")->check(CLI::PositiveNumber);
    c_train->add_flag("--quiet", train.quiet, "No progress output");

    PredictOptions predict;
    auto* c_predict = app.add_subcommand("predict", "Write black/white prediction masks");
    c_predict->add_option("--in", predict.in, "instances.jsonl, instance JSON or dataset dir")->required();
    add_predictor(c_predict, predict.predictor);
    add_render(c_predict, predict.render);

    DecodeOptions dec;
    auto* c_decode = app.add_subcommand("decode", "Extract a tour from a mask image");
    c_decode->add_option("--mask", dec.mask, "Mask PNG, black = path")->required();
    c_decode->add_option("--instance", dec.instance, "Instance JSON")->required();
    c_decode->add_option("--m", dec.m, "Departure cities (0 = all)");
    c_decode->add_option("--departure", dec.departure, "Rotate the tour to start here");
    c_decode->add_option("--halfwidth", dec.city_halfwidth, "City square half-width of the mask");

    EvalOptions ev;
    auto* c_eval = app.add_subcommand("eval", "Pipeline metrics against DP optima");
    add_predictor(c_eval, ev.predictor);
    c_eval->add_option("--data", ev.data, "Dataset directory (otherwise instances are generated)");
    c_eval->add_option("--n", ev.n, "Cities per generated instance");
    c_eval->add_option("--count", ev.count, "Generated instances");
    c_eval->add_option("--m", ev.m, "Departure cities (0 = all)");
    c_eval->add_flag("--include-collisions", ev.include_collisions,
                     "Score instances whose cities share a pixel");
    add_render(c_eval, ev.render);

    BenchOptions bench;
    auto* c_bench = app.add_subcommand("bench", "Solver timing table");
    c_bench->add_option("--n", bench.ns, "City counts, e.g. 4..12");
    c_bench->add_option("--instances", bench.timing_instances, "Instances per timing cell");
    c_bench->add_option("--accuracy-instances", bench.accuracy_instances,
                        "Instances for heuristic e0 (0 = timing set)");
    c_bench->add_option("--reps", bench.repetitions, "Timed repetitions");
    c_bench->add_option("--warmups", bench.warmups, "Untimed warm-up runs");
    c_bench->add_option("--m", bench.m, "Decoder departures for the pipeline columns");
    add_ga(c_bench, bench.ga);
    add_aco(c_bench, bench.aco);
    add_predictor(c_bench, bench.predictor);
    add_render(c_bench, bench.render);

    SweepOptions sweep;
    auto* c_sweep = app.add_subcommand("sweep", "City-count or departure-count sweep");
    c_sweep->add_option("--kind", sweep.kind, "cities | departures")
        ->check(CLI::IsMember({"cities", "departures"}));
    c_sweep->add_option("--n", sweep.ns, "City counts (cities sweep)");
    c_sweep->add_option("--count", sweep.count, "Instances per point");
    c_sweep->add_option("--ms", sweep.ms, "Departure counts (departures sweep)");
    c_sweep->add_option("--cities", sweep.n, "Cities per instance (departures sweep)");
    c_sweep->add_option("--corrupt", sweep.corrupt, "Fraction of path pixels flipped (departures sweep)");
    add_predictor(c_sweep, sweep.predictor);
    add_render(c_sweep, sweep.render);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(tspfcn::ErrorCategory::usage);
    }

    try {
        if (c_gen->parsed()) return cmd_gen(g, gen);
        if (c_render->parsed()) return cmd_render(g, render);
        if (c_solve->parsed()) return cmd_solve(g, solve);
        if (c_train->parsed()) return cmd_train(g, train);
        if (c_predict->parsed()) return cmd_predict(g, predict);
        if (c_decode->parsed()) return cmd_decode(g, dec);
        if (c_eval->parsed()) return cmd_eval(g, ev);
        if (c_bench->parsed()) return cmd_bench(g, bench);
        if (c_sweep->parsed()) return cmd_sweep(g, sweep);
    } catch (const tspfcn::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(tspfcn::ErrorCategory::data);
    }
    return static_cast<int>(tspfcn::ErrorCategory::usage);
}
