// mggan: run, compare, evaluate and plot manifold-guided GAN experiments.
//
//   mggan run <config> [--out DIR]
//   mggan compare <run-dir> <run-dir>... [--out DIR]
//   mggan eval <checkpoint> <config> [--out DIR]
//   mggan plot <samples.csv> <out.ppm> [--config FILE | --modes N --radius R --std S]
//
// MGGAN_SEED, when set, replaces the seed from the config file.
// Exit codes: 0 success, 1 other error, 2 config error, 3 training failure.

#include <charconv>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "mggan/experiment.hpp"

namespace {

constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitTraining = 3;

mggan::ExperimentConfig load(const std::string& path, const std::string& out)
{
    mggan::ExperimentConfig config = mggan::load_config(path);
    if (const char* env = std::getenv("MGGAN_SEED")) {
        const std::string s(env);
        std::uint64_t seed = 0;
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
        if (s.empty() || ec != std::errc() || end != s.data() + s.size())
            throw mggan::ConfigError("MGGAN_SEED: expected an unsigned integer, got '" + s + "'", 0, "seed");
        config.train.seed = seed;
    }
    if (!out.empty()) config.output = out;
    config.validate();
    return config;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Manifold-guided GAN experiments"};
    app.require_subcommand(1);

    std::string run_config, run_out;
    auto* run = app.add_subcommand("run", "Pretrain, train and evaluate one experiment");
    run->add_option("config", run_config, "Config file")->required();
    run->add_option("--out", run_out, "Output directory (overrides the config)");

    std::vector<std::string> compare_dirs;
    std::string compare_out = "comparison";
    auto* compare = app.add_subcommand("compare", "Tabulate final metrics of completed runs");
    compare->add_option("runs", compare_dirs, "Run directories")->required();
    compare->add_option("--out", compare_out, "Output directory")->capture_default_str();

    std::string eval_ckpt, eval_config, eval_out;
    auto* eval = app.add_subcommand("eval", "Evaluate a saved generator");
    eval->add_option("checkpoint", eval_ckpt, "Checkpoint file")->required();
    eval->add_option("config", eval_config, "Config the checkpoint was trained with")->required();
    eval->add_option("--out", eval_out, "Also write samples and report here");

    std::string plot_csv, plot_out, plot_config;
    int plot_modes = 8;
    double plot_radius = 2.0, plot_std = 0.01;
    auto* plot = app.add_subcommand("plot", "Render a samples CSV as a PPM scatter plot");
    plot->add_option("samples", plot_csv, "Two-column samples CSV")->required();
    plot->add_option("out", plot_out, "Output .ppm")->required();
    auto* plot_cfg_opt = plot->add_option("--config", plot_config, "Take the ring from this config");
    plot->add_option("--modes", plot_modes, "Ring modes")->capture_default_str()->excludes(plot_cfg_opt);
    plot->add_option("--radius", plot_radius, "Ring radius")->capture_default_str()->excludes(plot_cfg_opt);
    plot->add_option("--std", plot_std, "Mode standard deviation")->capture_default_str()->excludes(plot_cfg_opt);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const auto outcome = mggan::run_experiment(load(run_config, run_out), std::cout);
            if (!outcome.completed) {
                std::cerr << "training failed: " << outcome.failure << "\n"
                          << "partial results in " << outcome.output.string() << "\n";
                return kExitTraining;
            }
        } else if (*compare) {
            std::vector<std::filesystem::path> dirs(compare_dirs.begin(), compare_dirs.end());
            mggan::compare_runs(dirs, compare_out);
            std::cout << (std::filesystem::path(compare_out) / "comparison.csv").string() << "\n";
        } else if (*eval) {
            std::optional<std::filesystem::path> out;
            if (!eval_out.empty()) out = eval_out;
            std::cout << mggan::evaluate_checkpoint(eval_ckpt, load(eval_config, ""), out) << "\n";
        } else if (*plot) {
            mggan::MixtureSpec spec;
            if (!plot_config.empty()) {
                const auto config = mggan::load_config(plot_config);
                if (config.data.kind != mggan::DataKind::Ring)
                    throw mggan::ConfigError("plot needs ring data", 0, "data.kind");
                spec = config.data.mixture();
            } else {
                spec = mggan::ring_mixture(plot_modes, plot_radius, plot_std);
            }
            mggan::plot_samples(plot_csv, spec, plot_out);
        }
    } catch (const mggan::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const mggan::TrainingFailure& e) {
        std::cerr << "training failed: " << e.what() << "\n";
        return kExitTraining;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return 0;
}
