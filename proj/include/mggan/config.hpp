#pragma once

// Experiment configuration: a flat, line-oriented `key = value` text format.
//
//   # comment
//   name = ring-mggan
//   data.std = 0.01
//   train.steps = 25000
//
// One assignment per line. Keys are dotted section names from a fixed set;
// unknown or repeated keys are rejected. '#' starts a comment anywhere on a
// line. Surrounding whitespace is ignored. Values are unquoted.

#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mggan/guidance.hpp"
#include "mggan/training.hpp"

namespace mggan {

enum class DataKind { Ring, Idx };

struct DataSpec {
    DataKind kind = DataKind::Ring;
    int modes = 8;
    double radius = 2.0;
    double stddev = 0.01;
    std::filesystem::path path; // IDX file when kind == Idx

    MixtureSpec mixture() const { return ring_mixture(modes, radius, stddev); }
    bool operator==(const DataSpec&) const = default;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::filesystem::path output = "runs/experiment";
    DataSpec data;
    TrainConfig train;
    AutoencoderConfig autoencoder;
    InverseMapperConfig inverse;
    Index final_eval_samples = 10000;
    Index ms_ssim_samples = 100;
    Index reconstruction_samples = 256;
    int interpolation_pairs = 4;
    int interpolation_steps = 8;
    bool plot_frames = false;

    // Keys that appeared in the parsed file, for defaults that depend on others.
    std::set<std::string> explicit_keys;

    /// Cross-field checks; throws ConfigError naming the offending key.
    void validate() const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical `key = value` lines for every key, in a fixed order. Parsing the
/// result gives back an equal configuration.
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& config);
std::string to_text(const ExperimentConfig& config);

/// Every key the parser accepts.
std::vector<std::string> config_keys();

} // namespace mggan
