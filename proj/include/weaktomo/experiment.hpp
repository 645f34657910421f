#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "weaktomo/matrix_core.hpp"

namespace weaktomo {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kReportSchemaVersion = 1;

struct NoiseSpec {
    double delta_w = 1.0;
    std::uint64_t ensemble_size = 100000;
    bool exact = false;  // infinite ensemble: exact expectations, no pointer noise
};

struct StateSpec {
    std::optional<std::uint64_t> seed;   // defaults to a sub-seed of the root seed
    int rank = 0;                        // defaults to N on load
    std::optional<ComplexMatrix> matrix; // explicit density matrix instead of a random one
};

enum class ProbeKind { Mub, Amplitudes, Simplex };

struct ProbeSpec {
    ProbeKind kind = ProbeKind::Mub;
    ComplexVector amplitudes;      // kind == Amplitudes, as written; normalized at use
    std::vector<double> weights;   // kind == Simplex, |c_i|^2
};

struct ScanSpec {
    int divisions = 100;
    std::uint64_t empirical_repetitions = 0;  // 0 disables the Monte Carlo column
};

struct OutputSpec {
    std::string path;   // empty or "-" means stdout
    std::string format = "json";
};

struct ExperimentConfig {
    int schema_version = kConfigSchemaVersion;
    std::string scheme = "standard";
    int dim = 2;
    std::uint64_t seed = 0;
    NoiseSpec noise;
    StateSpec state;
    ProbeSpec probe;
    int post_count = 0;  // Wu scheme; defaults to N on load
    std::uint64_t repetitions = 1;
    ScanSpec scan;
    OutputSpec output;
    unsigned threads = 0;

    nlohmann::json to_json() const;
};

/// Parses and validates a JSON config. Unknown keys, wrong types and out of
/// range values raise ConfigError with the field path and source line.
ExperimentConfig parse_config(const std::string &text);
ExperimentConfig load_config(const std::string &path);

struct RunSeeds {
    std::uint64_t root = 0;
    std::uint64_t state = 0;
    std::uint64_t noise = 0;
    bool operator==(const RunSeeds &) const = default;
};

RunSeeds run_seeds(const ExperimentConfig &config);

struct FeasibilityInfo {
    std::string verdict;
    std::string summary;
    long real_data = 0;
    long required = 0;
    bool operator==(const FeasibilityInfo &) const = default;
};

struct TomographyReport {
    std::string command;
    std::string scheme;
    int dim = 0;
    std::uint64_t repetitions = 0;
    std::string reconstruction;        // "full" or "post-selection block"
    ComplexMatrix truth;
    ComplexMatrix mean_estimate;
    double frobenius_distance = 0.0;     // mean over repetitions
    double frobenius_distance_max = 0.0;
    RealMatrix per_entry_residuals;      // mean |estimate - truth| per entry
    std::optional<double> empirical_error_volume;
    std::optional<double> empirical_error_volume_std_error;
    std::optional<double> state_space_error_volume;
    std::optional<double> pushforward_error_volume;   // lb only
    std::optional<double> analytic_error_volume;      // lb only, per-trial delta_w
    std::optional<double> analytic_ensemble_error_volume;  // lb only, delta_w / sqrt(n)
    std::optional<double> metric_det;                 // lb only
    std::optional<std::vector<double>> probe_weights; // lb only
    std::optional<FeasibilityInfo> feasibility;       // wu only
    std::vector<std::string> flags;
    std::uint64_t flagged_repetitions = 0;
    RunSeeds seeds;
    nlohmann::json config;
    double wall_time_s = 0.0;

    bool valid() const { return flags.empty(); }
    bool operator==(const TomographyReport &) const;
};

struct ScanRow {
    std::vector<double> weights;
    double analytic_volume = 0.0;
    std::optional<double> empirical_volume;
    std::optional<double> empirical_volume_std_error;
    bool argmin = false;
    bool operator==(const ScanRow &) const = default;
};

struct ScanReport {
    int dim = 0;
    double delta_w = 0.0;
    int divisions = 0;
    std::vector<ScanRow> rows;
    std::vector<double> refined_argmin;
    double refined_min_volume = 0.0;
    double refined_distance_to_uniform = 0.0;
    bool certified = false;
    RunSeeds seeds;
    nlohmann::json config;
    double wall_time_s = 0.0;

    bool operator==(const ScanReport &) const;
};

struct MubReport {
    int dim = 0;
    std::vector<StateBasis> bases;
    RealMatrix deviation_table;   // pairwise deviations, zero diagonal
    double max_pairwise_deviation = 0.0;
    std::vector<std::string> flags;
    nlohmann::json config;
    double wall_time_s = 0.0;

    bool valid() const { return flags.empty(); }
};

TomographyReport run_reconstruct(const ExperimentConfig &config);
TomographyReport run_error_volume(const ExperimentConfig &config);
ScanReport run_optimality_scan(const ExperimentConfig &config);
MubReport run_mub(const ExperimentConfig &config);

nlohmann::json to_json(const TomographyReport &r);
nlohmann::json to_json(const ScanReport &r);
nlohmann::json to_json(const MubReport &r);
TomographyReport tomography_report_from_json(const nlohmann::json &j);
ScanReport scan_report_from_json(const nlohmann::json &j);

// CSV: header row mandatory, RFC 4180 quoting.
std::string csv_escape(const std::string &field);
std::string write_csv(const std::vector<std::vector<std::string>> &rows);
std::vector<std::vector<std::string>> parse_csv(const std::string &text);
std::string format_double(double v);   // shortest round-trip form

/// Reports as path,type,value rows (JSON pointer paths).
std::string json_to_csv(const nlohmann::json &j);
nlohmann::json json_from_csv(const std::string &text);

/// Tabular scan: index, c2_0..c2_{N-1}, analytic_volume, empirical_volume,
/// empirical_volume_std_error, argmin.
std::string scan_to_csv(const ScanReport &r);
std::vector<ScanRow> scan_rows_from_csv(const std::string &text);

}  // namespace weaktomo
