#pragma once

/// @file gradcheck.hpp
/// @brief Central finite-difference verification of the analytic network gradients.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tspfcn/model.hpp"

namespace tspfcn::net {

struct GradCheckConfig {
    int samples = 200;
    double step = 1e-5;
    double tolerance = 1e-3;
    std::uint64_t seed = 1;
    int cities = 6;
    std::size_t worst = 5; // offenders listed in the report
    /// Applied to the analytic gradients before comparison (used to prove the check bites).
    std::function<void(Gradients<double>&)> tamper;
};

struct GradCheckEntry {
    std::string param;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradCheckReport {
    int checked = 0;
    double max_rel_error = 0.0;
    bool passed = false;
    std::vector<GradCheckEntry> worst; // largest errors first

    std::string summary() const;
};

/// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

/// Builds a 64-bit model from `arch` (dropout forced off), renders a random instance at
/// the model resolution and compares analytic gradients with central differences for
/// `samples` parameters, visiting the parameter tensors round-robin.
GradCheckReport gradient_check(const ArchConfig& arch, const GradCheckConfig& cfg = {});

} // namespace tspfcn::net
