#include "tspfcn/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "tspfcn/dataset.hpp"
#include "tspfcn/decode.hpp"
#include "tspfcn/errors.hpp"
#include "tspfcn/eval.hpp"
#include "tspfcn/model.hpp"
#include "tspfcn/png_io.hpp"
#include "tspfcn/train.hpp"

namespace fs = std::filesystem;

namespace tspfcn::cli {

namespace {

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
}

void ensure_parent(const fs::path& file) {
    if (file.has_parent_path()) {
        ensure_dir(file.parent_path());
    }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    ensure_parent(path);
    std::ofstream os(path);
    os << j.dump(2) << '\n';
    if (!os) {
        throw IoError("cannot write " + path.string());
    }
}

std::string out_or(const GlobalOptions& g, const std::string& fallback) {
    return g.out.empty() ? fallback : g.out;
}

/// Writes the run manifest and returns 0. Directory outputs get run_manifest.json inside,
/// file outputs get {file}.manifest.json beside them.
int finish(const GlobalOptions& g, const RunManifest& m, const std::string& started,
           const fs::path& out, bool out_is_dir) {
    const fs::path path = out_is_dir ? out / "run_manifest.json"
                                     : fs::path(out.string() + ".manifest.json");
    write_json(path, m.to_json(g, started, utc_now()));
    return 0;
}

nlohmann::json ga_json(const solvers::GaConfig& c) {
    return {{"population", c.population},   {"crossover_rate", c.crossover_rate},
            {"mutation_rate", c.mutation_rate}, {"generations", c.generations},
            {"tournament", c.tournament},   {"seed", c.seed}};
}

nlohmann::json aco_json(const solvers::AcoConfig& c) {
    return {{"ant_num", c.ant_num}, {"rho", c.rho},   {"alpha", c.alpha},
            {"beta", c.beta},       {"iterations", c.iterations}, {"seed", c.seed}};
}

nlohmann::json predictor_json(const PredictorOptions& p) {
    return {{"checkpoint", p.checkpoint}, {"oracle_passthrough", p.oracle_passthrough}};
}

/// A predictor together with the model it borrows.
struct LoadedPredictor {
    std::unique_ptr<net::Model<float>> model;
    std::unique_ptr<eval::Predictor> predictor;
};

LoadedPredictor load_predictor(const PredictorOptions& p, const RenderConfig& render,
                               bool required) {
    LoadedPredictor lp;
    if (p.oracle_passthrough && !p.checkpoint.empty()) {
        throw ConfigError("--checkpoint and --oracle-passthrough are mutually exclusive");
    }
    if (p.oracle_passthrough) {
        lp.predictor = std::make_unique<eval::PassthroughPredictor>(render);
    } else if (!p.checkpoint.empty()) {
        lp.model = std::make_unique<net::Model<float>>(net::load_checkpoint(p.checkpoint));
        if (lp.model->arch().input_size != render.w) {
            throw ConfigError("checkpoint input size " + std::to_string(lp.model->arch().input_size) +
                              " does not match image size " + std::to_string(render.w));
        }
        lp.predictor = std::make_unique<eval::FcnPredictor>(*lp.model, render);
    } else if (required) {
        throw ConfigError("a predictor is required: pass --checkpoint FILE or --oracle-passthrough");
    }
    return lp;
}

/// Image size implied by the predictor: the checkpoint input size, else the desk default.
int default_size(const PredictorOptions& p) {
    return p.checkpoint.empty() ? 64 : net::load_checkpoint(p.checkpoint).arch().input_size;
}

std::vector<TspInstance> read_single_or_many(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open " + path);
    }
    // A pretty-printed single object spans several lines; try it whole first.
    std::stringstream buf;
    buf << is.rdbuf();
    try {
        const auto j = nlohmann::json::parse(buf.str());
        if (j.is_object()) {
            return {instance_from_json(j)};
        }
    } catch (const nlohmann::json::parse_error&) {
    }
    return read_instances_jsonl(path);
}

} // namespace

RenderConfig RenderOptions::config(int default_size) const {
    RenderConfig cfg = RenderConfig::sized(size.value_or(default_size));
    if (city_halfwidth) {
        cfg.city_halfwidth = *city_halfwidth;
    }
    cfg.label_thickness = label_thickness;
    cfg.mode = render_mode_from_string(mode);
    if (cfg.mode == RenderMode::tour_label) {
        throw ConfigError("input images are rendered as full-graph or scatter, not tour-label");
    }
    cfg.validate();
    return cfg;
}

std::vector<int> parse_int_list(const std::string& spec) {
    std::vector<int> out;
    std::stringstream ss(spec);
    std::string part;
    auto to_int = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(s, &used);
            if (used != s.size()) {
                throw std::invalid_argument(s);
            }
            return v;
        } catch (const std::exception&) {
            throw ConfigError("cannot parse integer list '" + spec + "'");
        }
    };
    while (std::getline(ss, part, ',')) {
        const auto dots = part.find("..");
        if (dots == std::string::npos) {
            out.push_back(to_int(part));
            continue;
        }
        const int lo = to_int(part.substr(0, dots));
        const int hi = to_int(part.substr(dots + 2));
        if (hi < lo) {
            throw ConfigError("empty range '" + part + "'");
        }
        for (int v = lo; v <= hi; ++v) {
            out.push_back(v);
        }
    }
    if (out.empty()) {
        throw ConfigError("empty integer list");
    }
    return out;
}

std::string resolve_data_path(const std::string& path) {
    if (path.empty() || fs::path(path).is_absolute()) {
        return path;
    }
    if (const char* root = std::getenv(kDataDirEnv); root && *root) {
        return (fs::path(root) / path).string();
    }
    return path;
}

nlohmann::json RunManifest::to_json(const GlobalOptions& g, const std::string& started,
                                    const std::string& finished) const {
    return {{"command", command},
            {"argv", g.argv},
            {"tool_version", kToolVersion},
            {"seed", g.seed},
            {"jobs", g.jobs},
            {"config", config},
            {"inputs", inputs},
            {"outputs", outputs},
            {"started", started},
            {"finished", finished}};
}

int cmd_gen(const GlobalOptions& g, const GenOptions& o) {
    const auto started = utc_now();
    const RenderConfig rc = o.render.config();
    const fs::path out = out_or(g, "data/n" + std::to_string(o.n) + "_s" + std::to_string(g.seed));
    const auto ds = make_dataset(o.n, o.count, g.seed, rc, g.jobs);
    write_dataset(ds, out.string());
    RunManifest m{"gen",
                  {{"n", o.n}, {"count", o.count}, {"render", to_json(rc)}},
                  {},
                  {out.string()}};
    std::cout << "wrote " << ds.size() << " samples to " << out.string() << '\n';
    return finish(g, m, started, out, true);
}

int cmd_render(const GlobalOptions& g, const RenderCmdOptions& o) {
    const auto started = utc_now();
    const RenderConfig rc = o.render.config();
    const auto instances = read_instances_jsonl(resolve_data_path(o.in));
    const fs::path out = out_or(g, "render");
    ensure_dir(out / "images");
    std::size_t labels = 0;
    for (const auto& inst : instances) {
        save_png(render_image(inst, rc), (out / "images" / (inst.id() + ".png")).string());
        if (inst.optimal()) {
            ensure_dir(out / "labels");
            save_label_png(render_label(inst, *inst.optimal(), rc),
                           (out / "labels" / (inst.id() + ".png")).string());
            ++labels;
        }
    }
    RunManifest m{"render", {{"render", to_json(rc)}}, {o.in}, {out.string()}};
    std::cout << "rendered " << instances.size() << " images and " << labels << " labels\n";
    return finish(g, m, started, out, true);
}

int cmd_solve(const GlobalOptions& g, const SolveOptions& o) {
    const auto started = utc_now();
    const auto algo = solvers::algorithm_from_string(o.algo);
    const auto instances = read_instances_jsonl(resolve_data_path(o.in));
    const fs::path out = out_or(g, "solutions.jsonl");
    ensure_parent(out);
    std::ofstream os(out);
    if (!os) {
        throw IoError("cannot write " + out.string());
    }
    for (const auto& inst : instances) {
        const auto t0 = std::chrono::steady_clock::now();
        const Tour t = solvers::solve(algo, inst, o.ga, o.aco);
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        nlohmann::json line{{"id", inst.id()},
                            {"algo", solvers::to_string(algo)},
                            {"order", t.order},
                            {"length", t.length},
                            {"ms", ms}};
        if (inst.optimal()) {
            line["optimal_length"] = inst.optimal()->length;
        }
        os << line.dump() << '\n';
    }
    RunManifest m{"solve",
                  {{"algo", solvers::to_string(algo)}, {"ga", ga_json(o.ga)}, {"aco", aco_json(o.aco)}},
                  {o.in},
                  {out.string()}};
    return finish(g, m, started, out, false);
}

int cmd_train(const GlobalOptions& g, const TrainOptions& o) {
    const auto started = utc_now();
    const auto data = read_dataset(resolve_data_path(o.data));
    std::optional<Dataset> test;
    if (!o.test.empty()) {
        test = read_dataset(resolve_data_path(o.test));
    }

    net::Model<float> model;
    if (!o.init_checkpoint.empty()) {
        model = net::load_checkpoint(o.init_checkpoint);
    } else {
        net::ArchConfig arch;
        if (o.arch == "paper") {
            arch = net::ArchConfig::paper();
        } else if (o.arch == "desk") {
            arch = net::ArchConfig::desk();
        } else {
            throw ConfigError("unknown architecture preset '" + o.arch + "' (desk or paper)");
        }
        if (o.dropout) {
            arch.dropout_rate = *o.dropout;
        }
        arch.output = net::output_activation_from_string(o.output_activation);
        model = net::init_model<float>(arch, g.seed);
    }
    if (o.fine_tune && o.init_checkpoint.empty()) {
        throw ConfigError("--fine-tune needs --checkpoint");
    }

    const fs::path out = out_or(g, "runs/train");
    ensure_dir(out);
    net::TrainConfig tc;
    tc.adam.learning_rate = o.learning_rate;
    tc.max_iterations = o.iterations;
    tc.chunk_size = o.chunk_size;
    tc.snapshot_every = o.snapshot_every;
    tc.eval_samples = o.eval_samples;
    tc.seed = g.seed;
    tc.compute.threads = o.threads;
    tc.snapshot_dir = (out / "snapshots").string();

    auto progress = [&](const net::CurveRow& r) {
        if (!o.quiet) {
            std::cerr << "iter " << r.iteration << " train_loss " << r.train_loss << " test_loss "
                      << r.test_loss << '\n';
        }
    };
    const auto result = o.fine_tune ? net::fine_tune(model, data, tc, progress)
                                    : net::train(model, data, test ? &*test : nullptr, tc, progress);
    net::save_checkpoint(model, (out / "model.ckpt").string());
    net::write_curve_csv(result.curve, (out / "curve.csv").string());

    RunManifest m{"train",
                  {{"arch", net::to_json(model.arch())},
                   {"learning_rate", tc.adam.learning_rate},
                   {"beta1", tc.adam.beta1},
                   {"beta2", tc.adam.beta2},
                   {"epsilon", tc.adam.epsilon},
                   {"max_iterations", tc.max_iterations},
                   {"chunk_size", tc.chunk_size},
                   {"snapshot_every", tc.snapshot_every},
                   {"eval_samples", tc.eval_samples},
                   {"threads", tc.compute.threads},
                   {"fine_tune", o.fine_tune},
                   {"iterations_run", result.iterations}},
                  {o.data, o.test, o.init_checkpoint},
                  {(out / "model.ckpt").string(), (out / "curve.csv").string(),
                   tc.snapshot_dir}};
    return finish(g, m, started, out, true);
}

int cmd_predict(const GlobalOptions& g, const PredictOptions& o) {
    const auto started = utc_now();
    const std::string in = resolve_data_path(o.in);
    std::vector<TspInstance> instances;
    RenderConfig rc;
    if (fs::is_directory(in)) {
        auto ds = read_dataset(in);
        rc = ds.info.render;
        for (auto& s : ds.samples) {
            instances.push_back(std::move(s.instance));
        }
    } else {
        instances = read_single_or_many(in);
        rc = o.render.config(default_size(o.predictor));
    }
    const auto lp = load_predictor(o.predictor, rc, true);
    const fs::path out = out_or(g, "predictions");
    ensure_dir(out / "masks");
    for (const auto& inst : instances) {
        save_png(mask_to_image(lp.predictor->mask(inst)),
                 (out / "masks" / (inst.id() + ".png")).string());
    }
    RunManifest m{"predict",
                  {{"predictor", predictor_json(o.predictor)}, {"render", to_json(rc)}},
                  {o.in, o.predictor.checkpoint},
                  {(out / "masks").string()}};
    std::cout << "wrote " << instances.size() << " masks to " << (out / "masks").string() << '\n';
    return finish(g, m, started, out, true);
}

int cmd_decode(const GlobalOptions& g, const DecodeOptions& o) {
    const auto started = utc_now();
    const auto instances = read_single_or_many(resolve_data_path(o.instance));
    if (instances.size() != 1) {
        throw ConfigError("--instance must hold exactly one instance, found " +
                          std::to_string(instances.size()));
    }
    const auto& inst = instances.front();
    const LabelMask mask = image_to_mask(load_png(resolve_data_path(o.mask)));
    decode::DecodeConfig dc;
    dc.m = o.m;
    dc.departure = o.departure;
    dc.seed = g.seed;
    dc.city_halfwidth = o.city_halfwidth ? *o.city_halfwidth
                                         : RenderConfig::sized(mask.width()).city_halfwidth;
    const auto sol = decode::post_process(mask, inst, dc);
    auto j = decode::to_json(sol);
    j["id"] = inst.id();
    if (inst.optimal()) {
        j["optimal_length"] = inst.optimal()->length;
    }
    const fs::path out = out_or(g, "solution.json");
    write_json(out, j);
    std::cout << "length " << sol.tour.length << '\n';
    RunManifest m{"decode",
                  {{"m", sol.m},
                   {"departure", o.departure ? nlohmann::json(*o.departure) : nlohmann::json(nullptr)},
                   {"city_halfwidth", dc.city_halfwidth}},
                  {o.mask, o.instance},
                  {out.string()}};
    return finish(g, m, started, out, false);
}

int cmd_eval(const GlobalOptions& g, const EvalOptions& o) {
    const auto started = utc_now();
    std::vector<TspInstance> instances;
    RenderConfig rc = o.render.config(default_size(o.predictor));
    if (!o.data.empty()) {
        auto ds = read_dataset(resolve_data_path(o.data));
        const auto mode = rc.mode;
        rc = ds.info.render;
        rc.mode = mode;
        for (auto& s : ds.samples) {
            instances.push_back(std::move(s.instance));
        }
    } else {
        instances = generate_labelled(o.n, o.count, g.seed, g.jobs);
    }
    const auto lp = load_predictor(o.predictor, rc, true);
    eval::EvalOptions eo;
    eo.decode.m = o.m;
    eo.decode.seed = g.seed;
    eo.exclude_collisions = !o.include_collisions;
    eo.jobs = g.jobs;
    const auto report = eval::run_pipeline_eval(*lp.predictor, instances, eo);

    const fs::path out = out_or(g, "eval");
    write_json(out / "report.json", eval::to_json(report, true));
    {
        std::ofstream os(out / "metrics.csv");
        const auto& r = report.metrics;
        os << "predictor,mode,instances,collisions,e0,e1,e2,e5,e10,r_aver,invalid\n"
           << lp.predictor->name() << ',' << to_string(rc.mode) << ',' << report.instances << ','
           << report.collisions << ',' << r.e0 << ',' << r.e1 << ',' << r.e2 << ',' << r.e5 << ','
           << r.e10 << ',' << r.r_aver << ',' << r.invalid << '\n';
    }
    std::cout << eval::to_json(report.metrics).dump() << '\n';
    RunManifest m{"eval",
                  {{"predictor", predictor_json(o.predictor)},
                   {"render", to_json(rc)},
                   {"m", o.m},
                   {"n", o.n},
                   {"count", o.count},
                   {"exclude_collisions", eo.exclude_collisions}},
                  {o.data, o.predictor.checkpoint},
                  {(out / "report.json").string(), (out / "metrics.csv").string()}};
    return finish(g, m, started, out, true);
}

int cmd_bench(const GlobalOptions& g, const BenchOptions& o) {
    const auto started = utc_now();
    eval::BenchConfig bc;
    bc.ns = parse_int_list(o.ns);
    bc.timing_instances = o.timing_instances;
    bc.accuracy_instances = o.accuracy_instances;
    bc.repetitions = o.repetitions;
    bc.warmups = o.warmups;
    bc.ga = o.ga;
    bc.aco = o.aco;
    bc.seed = g.seed;
    bc.decode_m = o.m;
    const RenderConfig rc = o.render.config(default_size(o.predictor));
    const auto lp = load_predictor(o.predictor, rc, false);
    bc.pipeline = lp.predictor.get();
    const auto rows = eval::benchmark_solvers(bc);

    const fs::path out = out_or(g, "bench");
    ensure_dir(out);
    eval::write_bench_csv(rows, (out / "bench.csv").string());
    auto arr = nlohmann::json::array();
    for (const auto& r : rows) {
        arr.push_back(eval::to_json(r));
    }
    write_json(out / "bench.json", arr);
    RunManifest m{"bench",
                  {{"ns", bc.ns},
                   {"timing_instances", bc.timing_instances},
                   {"accuracy_instances", bc.accuracy_instances},
                   {"repetitions", bc.repetitions},
                   {"warmups", bc.warmups},
                   {"ga", ga_json(bc.ga)},
                   {"aco", aco_json(bc.aco)},
                   {"predictor", predictor_json(o.predictor)},
                   {"render", to_json(rc)}},
                  {o.predictor.checkpoint},
                  {(out / "bench.csv").string(), (out / "bench.json").string()}};
    return finish(g, m, started, out, true);
}

int cmd_sweep(const GlobalOptions& g, const SweepOptions& o) {
    const auto started = utc_now();
    const RenderConfig rc = o.render.config(default_size(o.predictor));
    const fs::path out = out_or(g, "sweep");
    ensure_dir(out);
    RunManifest m{"sweep", {{"kind", o.kind}, {"predictor", predictor_json(o.predictor)}, {"render", to_json(rc)}},
                  {o.predictor.checkpoint}, {}};

    if (o.kind == "cities") {
        const auto ns = parse_int_list(o.ns);
        const auto lp = load_predictor(o.predictor, rc, true);
        eval::EvalOptions eo;
        eo.decode.seed = g.seed;
        eo.jobs = g.jobs;
        const auto lo = *std::min_element(ns.begin(), ns.end());
        const auto hi = *std::max_element(ns.begin(), ns.end());
        const auto rows = eval::generalization_sweep(*lp.predictor, lo, hi, o.count, g.seed, eo);
        eval::write_sweep_csv(rows, (out / "sweep.csv").string());
        auto arr = nlohmann::json::array();
        for (const auto& r : rows) {
            for (const auto& w : r.warnings) {
                std::cerr << "warning: " << w << '\n';
            }
            arr.push_back({{"n", r.n}, {"report", eval::to_json(r.report)}, {"warnings", r.warnings}});
        }
        write_json(out / "sweep.json", arr);
        m.config["ns"] = ns;
        m.config["count"] = o.count;
        m.outputs = {(out / "sweep.csv").string(), (out / "sweep.json").string()};
    } else if (o.kind == "departures") {
        const auto ms = parse_int_list(o.ms);
        PredictorOptions p = o.predictor;
        if (p.checkpoint.empty()) {
            p.oracle_passthrough = true;
        }
        const auto lp = load_predictor(p, rc, true);
        const auto instances = generate_labelled(o.n, o.count, g.seed, g.jobs);
        std::vector<LabelMask> masks;
        for (std::size_t k = 0; k < instances.size(); ++k) {
            masks.push_back(eval::corrupt_mask(lp.predictor->mask(instances[k]), o.corrupt,
                                               instance_seed(g.seed ^ 0xc0ffeeULL, k)));
        }
        const auto sweep =
            eval::departure_sweep(instances, masks, ms, g.seed, rc.city_halfwidth);
        eval::write_departure_csv(sweep, (out / "departures.csv").string());
        write_json(out / "departures.json",
                   {{"r_squared", sweep.r_squared}, {"rows", [&] {
                         auto arr = nlohmann::json::array();
                         for (const auto& r : sweep.rows) {
                             arr.push_back({{"m", r.m},
                                            {"metrics", eval::to_json(r.metrics)},
                                            {"density_evaluations", r.evaluations},
                                            {"mean_decode_ms", r.mean_ms}});
                         }
                         return arr;
                     }()}});
        m.config["ms"] = ms;
        m.config["n"] = o.n;
        m.config["count"] = o.count;
        m.config["corrupt"] = o.corrupt;
        m.outputs = {(out / "departures.csv").string(), (out / "departures.json").string()};
    } else {
        throw ConfigError("unknown sweep kind '" + o.kind + "' (cities or departures)");
    }
    return finish(g, m, started, out, true);
}

} // namespace tspfcn::cli
