#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qlattr/parameters.hpp"
#include "qlattr/subdivision.hpp"
#include "qlattr/system.hpp"
#include "qlattr/transfer.hpp"

namespace qlattr {

/// Configuration problem with the offending field spelled out.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& field, const std::string& message)
        : std::runtime_error("config error at '" + field + "': " + message), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct MeasureSpec {
    std::string name;
    ParamMode mode = ParamMode::kUniform; // dirac / uniform / gauss
    Vec mu;
    double sigma2 = 0.0;
    int points_per_box = 64;
    int param_samples = 64;
    double epsilon = 0.0;
    double tol = 1e-10;
    int max_iter = 100000;
    std::optional<std::uint64_t> seed; // defaults to the experiment seed
    bool dump_matrix = false;
};

struct SubdivisionSpec {
    std::optional<int> depth;
    std::optional<double> epsilon;
    int points_per_box = 32;
    int grid_size = 16;
    ParamMode mode = ParamMode::kGrid; // grid or dirac
    Vec dirac_value;
    std::vector<int> snapshots;
    std::optional<Vec> comparison_dirac; // extra fixed-parameter covering
};

struct RenderSpec {
    std::vector<std::array<int, 2>> axes = {{0, 1}};
    int width = 900;
    int height = 700;
};

struct ExperimentConfig {
    int version = 1;
    std::uint64_t seed = 0;
    std::string system_name;
    double T = 0.0;
    double h = 0.0;
    SystemConstants constants;
    double escape_bound = 1e6;
    Box domain;
    std::vector<Box> excluded;
    Box lambda_box;
    SubdivisionSpec subdivision;
    std::vector<MeasureSpec> measures;
    RenderSpec render;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Instantiate the configured system (with escape bound applied).
SystemModel system_from_config(const ExperimentConfig& cfg);
/// Parameter model for the subdivision phase (grid or dirac).
ParameterModel subdivision_parameters(const ExperimentConfig& cfg);
/// Parameter model for one measure entry.
ParameterModel measure_parameters(const ExperimentConfig& cfg, const MeasureSpec& m);

struct MeasureSummary {
    std::string name;
    std::int64_t dim = 0;
    double residual = 0.0;
    bool converged = false;
    int iterations = 0;
    std::int64_t dropped_boxes = 0;
    double max_leak = 0.0;
    double mean_leak = 0.0;
};

struct RunOptions {
    int workers = 1;
    std::optional<std::uint64_t> seed_override;
    std::ostream* log = nullptr; // per-step subdivision stats etc.
    std::function<void(const std::string& measure, const TransitionMatrix&)> matrix_observer;
};

struct RunResult {
    std::size_t covering_leaves = 0;
    bool empty_covering = false;
    std::vector<StepStats> stats;
    std::vector<MeasureSummary> measures;
};

/// Full pipeline: subdivision (with snapshot coverings), optional
/// fixed-parameter comparison covering, transition matrices and invariant
/// measures, CSV and SVG artifacts — all into out_dir. Re-running with the
/// same config and seed reproduces every output byte for byte.
RunResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                         const RunOptions& opts);

void write_summary_json(std::ostream& os, const MeasureSummary& s, const TransitionMatrix& P);

} // namespace qlattr
