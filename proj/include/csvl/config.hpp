#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "csvl/geometry.hpp"

namespace csvl {

/// Flat INI-style experiment description: [section] headers with
/// key = value lines, values being scalars or space-separated tuples.
/// Parsing is round-trip stable: parse(emit(parse(text))) == parse(text).
struct ExperimentConfig {
    // [domain]
    double L1 = 1.0;
    double L2 = 1.0;
    int n = 128;
    double offset_x = 0.5;
    double offset_y = 0.5;

    // [vortices]  p<i> = x y multiplicity
    std::vector<Vec2> vortex_points;
    std::vector<int> multiplicities;

    // [bubbles]  q<i> = x y
    std::vector<Vec2> bubble_seeds;
    double d = 0.0;     // cutoff base (squared length); 0 selects the default
    double alpha = 0.4; // weighted-norm exponent
    double delta = 0.1; // concentration ball radius

    // [sweep]  eps = e1 e2 ...  (or eps_start/eps_end/eps_count, log-spaced)
    std::vector<double> eps_schedule;
    double beta0 = 0.2;
    double beta1 = 5.0;

    // [tolerances]
    double newton_tol = 1e-10;
    double tol_reduced = 1e-8;
    int quad_levels = 24;

    // [output]
    std::string directory = "out";

    int N() const;
    int k() const { return static_cast<int>(bubble_seeds.size()); }
};

// Throws invalid_configuration_error with a line diagnostic on malformed
// input or on violated invariants (N != 2k, empty schedule, bad grid).
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical emission: fixed section and key order, full precision.
std::string emit_config(const ExperimentConfig& cfg);

// FNV-1a hash of the canonical emission; embedded in every report.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string config_hash_hex(const ExperimentConfig& cfg);

// Whole-file atomic write: temp file in the same directory, then rename.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

} // namespace csvl
