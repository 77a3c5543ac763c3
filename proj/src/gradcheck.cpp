#include "tspfcn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "tspfcn/solvers.hpp"

namespace tspfcn::net {

double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

std::string GradCheckReport::summary() const {
    std::ostringstream os;
    os << (passed ? "passed" : "FAILED") << ": " << checked
       << " parameters, max relative error " << max_rel_error;
    for (const auto& e : worst) {
        os << "\n  " << e.param << '[' << e.index << "] analytic=" << e.analytic
           << " numeric=" << e.numeric << " rel=" << e.rel_error;
    }
    return os.str();
}

GradCheckReport gradient_check(const ArchConfig& arch, const GradCheckConfig& cfg) {
    ArchConfig a = arch;
    a.dropout_rate = 0.0;
    Model<double> model = init_model<double>(a, cfg.seed);

    RenderConfig rc = RenderConfig::desk();
    rc.w = rc.h = a.input_size;
    rc.city_halfwidth = std::max(1, a.input_size / 32);
    const auto inst = generate_instance(cfg.cities, cfg.seed);
    const auto image = image_to_tensor<double>(render_input(inst, rc));
    const auto label = render_label(inst, solvers::solve_dp(inst), rc).one_hot<double>();

    ForwardCache<double> cache;
    forward(model, image, ForwardOptions{}, nullptr, &cache);
    Gradients<double> grads = backward(model, cache, label);
    if (cfg.tamper) {
        cfg.tamper(grads);
    }

    std::mt19937_64 rng(cfg.seed ^ 0x5eedULL);
    auto& params = model.params();
    GradCheckReport report;
    std::vector<GradCheckEntry> entries;
    for (int k = 0; k < cfg.samples; ++k) {
        const std::size_t p = static_cast<std::size_t>(k) % params.size();
        auto& t = params[p].value;
        const std::size_t i = std::uniform_int_distribution<std::size_t>(0, t.size() - 1)(rng);
        const double orig = t[i];
        t[i] = orig + cfg.step;
        const double up = loss(predict(model, image), label);
        t[i] = orig - cfg.step;
        const double down = loss(predict(model, image), label);
        t[i] = orig;
        GradCheckEntry e{params[p].name, i, grads[p][i], (up - down) / (2.0 * cfg.step), 0.0};
        e.rel_error = relative_error(e.analytic, e.numeric);
        report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
        entries.push_back(std::move(e));
    }
    report.checked = cfg.samples;
    report.passed = report.max_rel_error < cfg.tolerance;
    std::sort(entries.begin(), entries.end(),
              [](const auto& x, const auto& y) { return x.rel_error > y.rel_error; });
    entries.resize(std::min(entries.size(), cfg.worst));
    report.worst = std::move(entries);
    return report;
}

} // namespace tspfcn::net
