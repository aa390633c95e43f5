#include "mggan/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <map>
#include <set>
#include <ostream>

#include <json.hpp>

#include "mggan/io.hpp"

namespace mggan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct LoadedData {
    Sampler sampler;
    Index x_dim = 2;
    std::optional<MixtureSpec> spec;
    std::optional<ImageDataset> images;
};

LoadedData load_data(const ExperimentConfig& config)
{
    LoadedData d;
    if (config.data.kind == DataKind::Ring) {
        d.spec = config.data.mixture();
        d.sampler = mixture_sampler(*d.spec);
        d.x_dim = 2;
        return d;
    }
    try {
        d.images = load_idx_grayscale(config.data.path);
    } catch (const IdxError& e) {
        throw ConfigError(std::string("data.path: ") + e.what(), 0, "data.path");
    }
    d.sampler = dataset_sampler(*d.images);
    d.x_dim = d.images->height * d.images->width;
    return d;
}

json data_json(const ExperimentConfig& config, const LoadedData& data)
{
    if (config.data.kind == DataKind::Ring)
        return {{"kind", "ring"}, {"modes", config.data.modes}, {"radius", config.data.radius},
                {"std", config.data.stddev}};
    return {{"kind", "idx"},
            {"path", fs::absolute(config.data.path).lexically_normal().string()},
            {"count", data.images->count},
            {"height", data.images->height},
            {"width", data.images->width}};
}

std::string hex(std::uint64_t v)
{
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json nullable(std::optional<double> v)
{
    if (v && std::isfinite(*v)) return *v;
    return nullptr;
}

json report_json(const ModeReport& r)
{
    return {{"modes_captured", r.modes_captured()},
            {"captured", r.captured},
            {"counts", r.counts},
            {"hq_ratio", r.high_quality_ratio},
            {"balance_entropy", r.balance_entropy},
            {"sample_count", r.sample_count}};
}

std::string samples_csv(const MatrixF& samples)
{
    std::vector<std::string> header;
    if (samples.cols() == 2) {
        header = {"x", "y"};
    } else {
        for (Index j = 0; j < samples.cols(); ++j) header.push_back("x" + std::to_string(j));
    }
    return numeric_csv(header, samples.cast<double>());
}

/// Mean pairwise MS-SSIM of the first `n` rows viewed as h x w images, using as
/// many scales as the image size allows. Empty when even one scale does not fit.
std::optional<double> image_diversity(const MatrixF& rows, Index h, Index w, Index n, Rng& rng)
{
    int scales = 0;
    for (int k = 5; k >= 1 && scales == 0; --k)
        if (MsSsimParams::with_scales(k).min_side() <= std::min(h, w)) scales = k;
    if (scales == 0) return std::nullopt;
    std::vector<MatrixF> images;
    for (Index i = 0; i < std::min(n, rows.rows()); ++i)
        images.push_back(Eigen::Map<const MatrixF>(rows.row(i).data(), h, w));
    if (images.size() < 2) return std::nullopt;
    return pairwise_ms_ssim(images, MsSsimParams::with_scales(scales), rng);
}

struct Networks {
    MlpConfig g_config;
    MlpConfig dx_config;
    MlpConfig dm_config;
    MlpConfig r_config;
    AutoencoderConfig ae;
};

Networks network_shapes(const ExperimentConfig& config, Index x_dim)
{
    Networks n;
    n.g_config = generator_config(config.train, x_dim);
    n.dx_config = discriminator_config(x_dim, config.train.hidden);
    n.dm_config = manifold_discriminator_config(config.train.m_dim, config.train.hidden);
    n.r_config = inverse_mapper_config(config.train.m_dim, config.train.z_dim, config.inverse.hidden);
    n.ae = config.autoencoder;
    n.ae.x_dim = x_dim;
    n.ae.m_dim = config.train.m_dim;
    return n;
}

struct ReconstructionSummary {
    double mse = 0;
    double permutation_mse = 0;
    std::optional<double> mode_preservation;
    std::optional<double> interpolation_gap_ratio;
};

class RunWriter {
public:
    RunWriter(const ExperimentConfig& config, std::ostream& log) : config_(config), log_(log) {}

    RunOutcome run()
    {
        const fs::path& out = config_.output;
        fs::create_directories(out);
        const LoadedData data = load_data(config_);
        const Networks shapes = network_shapes(config_, data.x_dim);
        const Rng root(config_.train.seed);
        manifest_["name"] = config_.name;
        manifest_["tool_version"] = kToolVersion;
        manifest_["seed"] = config_.train.seed;
        manifest_["config"] = json::object();
        for (const auto& [k, v] : config_entries(config_)) manifest_["config"][k] = v;
        manifest_["data"] = data_json(config_, data);
        write_text("config.txt", to_text(config_));

        std::optional<Autoencoder> ae;
        std::optional<TrainState> state;
        std::optional<InverseMapper> inverse;
        try {
            // The autoencoder is pretrained in every run: guided runs use its
            // encoder during training, and every run needs it for the inverse mapper.
            auto t0 = std::chrono::steady_clock::now();
            log_ << "[pretrain] denoising autoencoder, up to " << shapes.ae.steps << " steps\n";
            Rng pretrain_rng = root.split(streams::pretrain);
            PretrainResult pre = pretrain_dae(data.sampler, shapes.ae, pretrain_rng);
            ae = pre.autoencoder;
            write_pretrain_loss(pre.loss_history);
            timings_["pretrain"] = seconds_since(t0);
            log_ << "[pretrain] " << pre.loss_history.size() << " steps, final loss " << pre.loss_history.back()
                 << "\n";

            Rng dm_rng = root.split(streams::manifold_discriminator);
            GuidanceNetwork gn = freeze(*ae, dm_rng, config_.train.hidden);
            manifest_["encoder_hash"]["frozen"] = hex(gn.encoder_hash());

            t0 = std::chrono::steady_clock::now();
            state = make_train_state(config_.train, data.x_dim,
                                     config_.train.guidance ? std::optional<GuidanceNetwork>(gn) : std::nullopt);
            log_ << "[train] " << config_.train.total_steps << " steps, guidance "
                 << (config_.train.guidance ? "on" : "off") << "\n";
            train(*state, data.sampler, data.spec, [&](const TrainState& s, const MetricRow& row) {
                write_text("metrics.csv", metrics_csv(s.log));
                log_ << "[train] step " << row.step << " d_x " << row.d_x_loss << " g_x " << row.g_x_loss;
                if (row.report)
                    log_ << " modes " << row.report->modes_captured() << " hq " << row.report->high_quality_ratio;
                log_ << "\n";
                if (config_.plot_frames && data.spec) write_frame(s, *data.spec, row.step);
            });
            write_text("metrics.csv", metrics_csv(state->log));
            timings_["train"] = seconds_since(t0);
            const GuidanceNetwork& used = state->guidance ? *state->guidance : gn;
            manifest_["encoder_hash"]["after_training"] = hex(hash(used.encoder()));

            t0 = std::chrono::steady_clock::now();
            final_evaluation(*state, data, root);
            timings_["evaluation"] = seconds_since(t0);

            t0 = std::chrono::steady_clock::now();
            log_ << "[inverse] fitting R for " << config_.inverse.steps << " steps\n";
            Rng inv_rng = root.split(streams::inverse_mapper);
            inverse = train_inverse_mapper(state->g_config, state->g, used, config_.train.prior_spec(),
                                           config_.inverse, inv_rng);
            manifest_["final"]["inverse_mapper_loss"] = inverse->loss_history.back();
            const ReconstructionSummary rec = reconstruction_artifacts(*state, used, *inverse, data, root);
            manifest_["final"]["reconstruction_mse"] = rec.mse;
            manifest_["final"]["permutation_mse"] = rec.permutation_mse;
            manifest_["final"]["mode_preservation"] = nullable(rec.mode_preservation);
            manifest_["final"]["interpolation_gap_ratio"] = nullable(rec.interpolation_gap_ratio);
            timings_["inverse_mapper"] = seconds_since(t0);

            save(state, ae, inverse);
            finish("completed", {});
            log_ << "[done] " << (out / "manifest.json").string() << "\n";
            return {true, {}, out};
        } catch (const TrainingFailure& e) {
            if (state) write_text("metrics.csv", metrics_csv(state->log));
            save(state, ae, inverse);
            finish("failed", json{{"message", e.what()}, {"step", e.step()}});
            log_ << "[failed] " << e.what() << "\n";
            return {false, e.what(), out};
        }
    }

private:
    void write_text(const std::string& name, const std::string& text)
    {
        write_file_atomic(config_.output / name, text);
        artifacts_.insert(name);
    }

    void write_pretrain_loss(const std::vector<double>& history)
    {
        MatrixD rows(static_cast<Index>(history.size()), 2);
        for (std::size_t i = 0; i < history.size(); ++i) {
            rows(static_cast<Index>(i), 0) = static_cast<double>(i + 1);
            rows(static_cast<Index>(i), 1) = history[i];
        }
        write_text("pretrain_loss.csv", numeric_csv({"step", "loss"}, rows));
    }

    void write_frame(const TrainState& s, const MixtureSpec& spec, std::int64_t step)
    {
        // Own stream per frame so plotting never shifts training or evaluation draws.
        Rng rng = Rng(config_.train.seed).split(streams::final_eval).split(static_cast<std::uint64_t>(step));
        char name[32];
        std::snprintf(name, sizeof name, "frames/step_%08lld.ppm", static_cast<long long>(step));
        fs::create_directories(config_.output / "frames");
        write_ppm(config_.output / name, render_scatter(generate(s, config_.train.eval_samples, rng), spec));
        artifacts_.insert(name);
    }

    void final_evaluation(const TrainState& state, const LoadedData& data, const Rng& root)
    {
        Rng rng = root.split(streams::final_eval);
        const MatrixF samples = generate(state, config_.final_eval_samples, rng);
        json& final = manifest_["final"];
        if (data.spec) {
            const ModeReport r = mode_coverage(samples, *data.spec);
            final["report"] = report_json(r);
            log_ << "[eval] " << r.modes_captured() << " modes captured, hq " << r.high_quality_ratio << ", entropy "
                 << r.balance_entropy << "\n";
            write_text("samples.csv", samples_csv(samples));
            write_ppm(config_.output / "scatter.ppm", render_scatter(samples, *data.spec));
            artifacts_.insert("scatter.ppm");
        } else {
            const auto& img = *data.images;
            final["ms_ssim"] = nullable(image_diversity(samples, img.height, img.width, config_.ms_ssim_samples, rng));
            final["ms_ssim_real"] =
                nullable(image_diversity(img.pixels, img.height, img.width, config_.ms_ssim_samples, rng));
            write_text("samples.csv", samples_csv(samples.topRows(std::min<Index>(samples.rows(), config_.ms_ssim_samples))));
        }
    }

    ReconstructionSummary reconstruction_artifacts(const TrainState& state, const GuidanceNetwork& gn,
                                                   const InverseMapper& r, const LoadedData& data, const Rng& root)
    {
        Rng rng = root.split(streams::reconstruction);
        const MatrixF x = data.sampler(config_.reconstruction_samples, rng);
        const MatrixF x_hat = reconstruct(x, state.g_config, state.g, gn, r);
        ReconstructionSummary s;
        s.mse = (x - x_hat).cast<double>().rowwise().squaredNorm().mean();

        // Random-pair baseline: each sample against its successor in a shuffled order.
        std::vector<Index> order(static_cast<std::size_t>(x.rows()));
        for (Index i = 0; i < x.rows(); ++i) order[static_cast<std::size_t>(i)] = i;
        for (Index i = x.rows() - 1; i > 0; --i)
            std::swap(order[static_cast<std::size_t>(i)],
                      order[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i + 1)))]);
        double base = 0;
        for (std::size_t i = 0; i < order.size(); ++i)
            base += (x.row(order[i]) - x.row(order[(i + 1) % order.size()])).cast<double>().squaredNorm();
        s.permutation_mse = base / static_cast<double>(order.size());

        MatrixD rec(x.rows(), 2 * x.cols());
        rec << x.cast<double>(), x_hat.cast<double>();
        std::vector<std::string> header;
        for (Index j = 0; j < x.cols(); ++j) header.push_back(x.cols() == 2 ? (j ? "y" : "x") : "x" + std::to_string(j));
        for (Index j = 0; j < x.cols(); ++j)
            header.push_back(x.cols() == 2 ? (j ? "y_hat" : "x_hat") : "x_hat" + std::to_string(j));
        write_text("reconstruction.csv", numeric_csv(header, rec));

        if (data.spec) {
            const auto a = nearest_mode(x, *data.spec);
            const auto b = nearest_mode(x_hat, *data.spec);
            std::size_t same = 0;
            for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
            s.mode_preservation = static_cast<double>(same) / static_cast<double>(a.size());
        }

        const int k = config_.interpolation_steps;
        const Index pairs = std::min<Index>(config_.interpolation_pairs, x.rows() / 2);
        MatrixD interp(pairs * (k + 2), 3 + x.cols());
        double worst = 0;
        for (Index p = 0; p < pairs; ++p) {
            const MatrixF path =
                latent_interpolate(x.row(2 * p), x.row(2 * p + 1), k, state.g_config, state.g, gn, r);
            std::vector<double> gaps;
            for (Index i = 0; i < path.rows(); ++i) {
                const Index row = p * (k + 2) + i;
                interp(row, 0) = static_cast<double>(p);
                interp(row, 1) = static_cast<double>(i);
                interp(row, 2) = static_cast<double>(i) / static_cast<double>(k + 1);
                interp.row(row).tail(x.cols()) = path.row(i).cast<double>();
                if (i > 0) gaps.push_back((path.row(i) - path.row(i - 1)).cast<double>().norm());
            }
            std::sort(gaps.begin(), gaps.end());
            const double median = gaps.size() % 2 ? gaps[gaps.size() / 2]
                                                  : 0.5 * (gaps[gaps.size() / 2 - 1] + gaps[gaps.size() / 2]);
            const double ratio = median > 0 ? gaps.back() / median : (gaps.back() > 0 ? INFINITY : 1.0);
            worst = std::max(worst, ratio);
        }
        if (pairs > 0) s.interpolation_gap_ratio = worst;
        std::vector<std::string> ih{"pair", "index", "t"};
        for (Index j = 0; j < x.cols(); ++j) ih.push_back(x.cols() == 2 ? (j ? "y" : "x") : "x" + std::to_string(j));
        write_text("interpolation.csv", numeric_csv(ih, interp));
        return s;
    }

    void save(const std::optional<TrainState>& state, const std::optional<Autoencoder>& ae,
              const std::optional<InverseMapper>& inverse)
    {
        std::map<std::string, const NetworkParams<float>*> nets;
        if (state) {
            nets["g"] = &state->g;
            nets["dx"] = &state->dx;
            if (state->guidance) nets["dm"] = &state->guidance->discriminator();
        }
        if (ae) {
            nets["ae.encoder"] = &ae->encoder;
            nets["ae.decoder"] = &ae->decoder;
        }
        if (inverse) nets["r"] = &inverse->params;
        if (nets.empty()) return;
        save_checkpoint(config_.output / "checkpoint.mgck", nets);
        artifacts_.insert("checkpoint.mgck");
    }

    void finish(const std::string& status, const json& failure)
    {
        manifest_["status"] = status;
        if (!failure.is_null()) manifest_["failure"] = failure;
        manifest_["timings_seconds"] = timings_;
        json list = json::array();
        for (const auto& a : artifacts_)
            if (fs::exists(config_.output / a)) list.push_back(a);
        manifest_["artifacts"] = list;
        write_file_atomic(config_.output / "manifest.json", manifest_.dump(2) + "\n");
    }

    const ExperimentConfig& config_;
    std::ostream& log_;
    json manifest_ = json::object();
    json timings_ = json::object();
    std::set<std::string> artifacts_;
};

std::string field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

json read_manifest(const fs::path& dir)
{
    const fs::path p = dir / "manifest.json";
    if (!fs::exists(p)) throw ArgumentError("no manifest.json in " + dir.string());
    try {
        return json::parse(read_file(p));
    } catch (const json::exception& e) {
        throw ArgumentError("unreadable manifest " + p.string() + ": " + e.what());
    }
}

} // namespace

std::string metrics_csv(const std::vector<MetricRow>& rows)
{
    std::string out;
    for (std::size_t j = 0; j < kMetricsColumns.size(); ++j) out += (j ? "," : "") + kMetricsColumns[j];
    out += '\n';
    for (const auto& r : rows) {
        out += std::to_string(r.step) + ',' + format_double(r.d_x_loss) + ',' + field(r.d_m_loss) + ',' +
               format_double(r.g_x_loss) + ',' + field(r.g_m_loss) + ',';
        if (r.report)
            out += std::to_string(r.report->modes_captured()) + ',' + format_double(r.report->high_quality_ratio) +
                   ',' + format_double(r.report->balance_entropy);
        else
            out += ",,";
        out += '\n';
    }
    return out;
}

RunOutcome run_experiment(const ExperimentConfig& config, std::ostream& log)
{
    config.validate();
    return RunWriter(config, log).run();
}

void compare_runs(const std::vector<fs::path>& run_dirs, const fs::path& out_dir)
{
    if (run_dirs.size() < 2) throw ArgumentError("compare: need at least two run directories");
    std::vector<json> manifests;
    for (const auto& d : run_dirs) {
        json m = read_manifest(d);
        if (m.value("status", "") != "completed") throw ArgumentError("run in " + d.string() + " did not complete");
        if (!manifests.empty() && m["data"] != manifests.front()["data"])
            throw ArgumentError("data specs differ: " + run_dirs.front().string() + " has " +
                                manifests.front()["data"].dump() + ", " + d.string() + " has " + m["data"].dump());
        manifests.push_back(std::move(m));
    }
    const bool ring = manifests.front()["data"]["kind"] == "ring";
    std::vector<Raster> panels;
    if (ring)
        for (const auto& d : run_dirs) panels.push_back(read_ppm(d / "scatter.ppm"));

    auto num = [](const json& j, const char* key) -> std::string {
        if (!j.contains(key) || j[key].is_null()) return {};
        return format_double(j[key].get<double>());
    };
    std::string csv = "run,name,guidance,loss,seed,modes_captured,hq_ratio,balance_entropy,ms_ssim,"
                      "reconstruction_mse,permutation_mse,mode_preservation\n";
    for (std::size_t i = 0; i < manifests.size(); ++i) {
        const json& m = manifests[i];
        const json& f = m["final"];
        const json& cfg = m["config"];
        csv += run_dirs[i].string() + ',' + m["name"].get<std::string>() + ',' +
               cfg["model.guidance"].get<std::string>() + ',' + cfg["model.loss"].get<std::string>() + ',' +
               std::to_string(m["seed"].get<std::uint64_t>()) + ',';
        if (f.contains("report"))
            csv += std::to_string(f["report"]["modes_captured"].get<int>()) + ',' + num(f["report"], "hq_ratio") +
                   ',' + num(f["report"], "balance_entropy") + ',';
        else
            csv += ",,,";
        csv += num(f, "ms_ssim") + ',' + num(f, "reconstruction_mse") + ',' + num(f, "permutation_mse") + ',' +
               num(f, "mode_preservation") + '\n';
    }
    fs::create_directories(out_dir);
    write_file_atomic(out_dir / "comparison.csv", csv);
    if (ring) write_ppm(out_dir / "comparison.ppm", side_by_side(panels));
}

std::string evaluate_checkpoint(const fs::path& checkpoint, const ExperimentConfig& config,
                                const std::optional<fs::path>& out_dir)
{
    config.validate();
    const LoadedData data = load_data(config);
    const Networks shapes = network_shapes(config, data.x_dim);
    Rng shape_rng(0);
    NetworkParams<float> g = init_network(shapes.g_config, shape_rng);
    NetworkParams<float> dx = init_network(shapes.dx_config, shape_rng);
    NetworkParams<float> dm = init_network(shapes.dm_config, shape_rng);
    NetworkParams<float> r = init_network(shapes.r_config, shape_rng);
    NetworkParams<float> enc = init_network(shapes.ae.encoder_config(), shape_rng);
    NetworkParams<float> dec = init_network(shapes.ae.decoder_config(), shape_rng);
    std::map<std::string, NetworkParams<float>*> nets{
        {"g", &g}, {"dx", &dx}, {"r", &r}, {"ae.encoder", &enc}, {"ae.decoder", &dec}};
    if (config.train.guidance) nets["dm"] = &dm;
    load_checkpoint(checkpoint, nets);

    TrainState state = make_train_state(
        config.train, data.x_dim,
        config.train.guidance ? std::optional<GuidanceNetwork>(GuidanceNetwork(shapes.ae.encoder_config(), enc,
                                                                                shapes.dm_config, dm))
                              : std::nullopt);
    state.g = g;
    Rng rng = Rng(config.train.seed).split(streams::final_eval);
    const MatrixF samples = generate(state, config.final_eval_samples, rng);
    json report{{"checkpoint", checkpoint.string()}, {"generator_hash", hex(hash(g))}};
    if (data.spec) {
        report["report"] = report_json(mode_coverage(samples, *data.spec));
    } else {
        report["ms_ssim"] = nullable(
            image_diversity(samples, data.images->height, data.images->width, config.ms_ssim_samples, rng));
    }
    if (out_dir) {
        fs::create_directories(*out_dir);
        write_file_atomic(*out_dir / "samples.csv", samples_csv(samples));
        if (data.spec) write_ppm(*out_dir / "scatter.ppm", render_scatter(samples, *data.spec));
        write_file_atomic(*out_dir / "eval.json", report.dump(2) + "\n");
    }
    return report.dump(2);
}

void plot_samples(const fs::path& samples_csv_path, const MixtureSpec& spec, const fs::path& out)
{
    const NumericCsv csv = read_numeric_csv(samples_csv_path);
    if (csv.header.size() != 2)
        throw ArgumentError(samples_csv_path.string() + ": expected two columns, found " +
                            std::to_string(csv.header.size()));
    write_ppm(out, render_scatter(csv.rows.cast<float>(), spec));
}

} // namespace mggan
