#pragma once

// Configuration, experiment orchestration and CSV emission behind the
// `rareis` command line tool.

#include "rareis/control.hpp"
#include "rareis/estimate.hpp"
#include "rareis/model.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rareis {

enum class SamplerMethod { mc, is1d, is_hom, is_astar };

[[nodiscard]] std::string_view method_name(SamplerMethod method);
[[nodiscard]] SamplerMethod parse_method(std::string_view name);
[[nodiscard]] PolicyVariant policy_variant(SamplerMethod method);

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitVerification = 2;
inline constexpr int kExitNumerical = 3;

struct RunConfig {
    ModelSpec model;                  // threshold is overwritten per z value
    std::vector<double> thresholds;
    SamplerMethod method = SamplerMethod::is1d;
    std::optional<double> energy_override;
    int batches = 100;
    int samples = 5000;
    std::uint64_t seed = 1;
    int workers = 0;  // 0: available parallelism

    [[nodiscard]] ModelSpec model_at(double z) const;
};

/// Parses `key = value` lines; `#` starts a comment. Recognized keys:
///   model.d model.n model.a model.w model.b horizon threshold
///   sampler.method sampler.c run.batches run.samples run.seed run.workers
/// Lists are comma separated. Unknown keys, malformed values and invalid
/// models raise ConfigError prefixed with "<source>:<line>:".
[[nodiscard]] RunConfig parse_config(std::istream& in, std::string_view source = "<config>");
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);

inline constexpr std::string_view kEstimateHeader =
    "z,n,method,estimate,rel_error,log10_estimate,c_star,W0,U0,batches,samples,seed,wall_time_s";

struct EstimateRow {
    double z = 0.0;
    int n = 0;
    SamplerMethod method = SamplerMethod::mc;
    BatchStats stats;
    std::optional<double> c_star;
    std::optional<double> initial_value;  // W(0,0)
    std::optional<double> rate_u0;        // U(0,0)
    std::uint64_t seed = 0;
};

[[nodiscard]] std::string format_row(const EstimateRow& row);

/// Fields of one CSV row; absent optionals are the empty cells.
struct ParsedRow {
    double z = 0.0;
    int n = 0;
    SamplerMethod method = SamplerMethod::mc;
    std::optional<double> estimate;
    std::optional<double> rel_error;
    std::optional<double> log10_estimate;
    std::optional<double> c_star;
    std::optional<double> initial_value;
    std::optional<double> rate_u0;
    int batches = 0;
    int samples = 0;
    std::uint64_t seed = 0;
    double wall_time = 0.0;
};

[[nodiscard]] ParsedRow parse_row(std::string_view line);

/// Runs one estimate for threshold z.
[[nodiscard]] EstimateRow estimate_one(const RunConfig& config, double z);

/// One CSV row per threshold written to `csv` (header first); a summary line
/// per row goes to `log`.
std::vector<EstimateRow> cmd_estimate(const RunConfig& config, std::ostream& csv,
                                      std::ostream& log);

struct TableDefinition {
    std::string name;  // file stem
    ModelSpec model;
    SamplerMethod is_method;
    std::vector<double> thresholds;
};

/// The three reference experiments: one group with b = 0 and b = 5, and two
/// inhomogeneous groups (w = (0.8, 0.2), a = (0.01, 0.05), b = 5); n = 125,
/// T = 5, z = 0.10, 0.15, ..., 0.40.
[[nodiscard]] std::vector<TableDefinition> published_tables();

/// Writes <out_dir>/<name>.csv for every table with an importance sampling
/// row and a plain Monte Carlo row per threshold.
void cmd_tables(std::uint64_t seed, int workers, const std::filesystem::path& out_dir,
                std::ostream& log, int batches = 100, int samples = 5000);

/// Runs the structural checks and a small-population oracle comparison;
/// returns true when every check passes.
bool cmd_verify(const RunConfig& config, std::ostream& report);

inline constexpr std::string_view kOracleHeader = "z,n,exact_probability,binomial_reference,states";

void cmd_oracle(const RunConfig& config, std::ostream& csv);

}  // namespace rareis
