#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mggan/config.hpp"
#include "mggan/plot.hpp"

namespace mggan {

inline constexpr const char* kToolVersion = "0.1.0";

namespace streams {
inline constexpr std::uint64_t final_eval = 7;
inline constexpr std::uint64_t reconstruction = 8;
} // namespace streams

/// Column order of metrics.csv.
inline const std::vector<std::string> kMetricsColumns{"step",     "d_x_loss",       "d_m_loss", "g_x_loss",
                                                      "g_m_loss", "modes_captured", "hq_ratio", "balance_entropy"};

/// metrics.csv contents: header plus one row per logged step, LF endings.
/// Fields that do not apply (manifold losses without guidance, mode statistics
/// on image data) are left empty.
std::string metrics_csv(const std::vector<MetricRow>& rows);

struct RunOutcome {
    bool completed = false;
    std::string failure; // set when training failed
    std::filesystem::path output;
};

/// pretrain -> train -> final evaluation -> inverse mapper, reconstruction and
/// interpolation, writing everything under config.output. A training failure
/// leaves the partial metrics, checkpoint and a manifest marked "failed".
RunOutcome run_experiment(const ExperimentConfig& config, std::ostream& log);

/// Final-report comparison of completed runs on one data spec. Writes
/// comparison.csv (and comparison.ppm for ring data) into `out_dir`. Nothing is
/// written unless every run directory validates.
void compare_runs(const std::vector<std::filesystem::path>& run_dirs, const std::filesystem::path& out_dir);

/// Reloads a checkpoint and evaluates its generator on fresh samples. Returns
/// the JSON report; with `out_dir`, also writes samples.csv, scatter.ppm and eval.json.
std::string evaluate_checkpoint(const std::filesystem::path& checkpoint, const ExperimentConfig& config,
                                const std::optional<std::filesystem::path>& out_dir);

/// Renders a two-column samples CSV against `spec`.
void plot_samples(const std::filesystem::path& samples_csv, const MixtureSpec& spec, const std::filesystem::path& out);

} // namespace mggan
