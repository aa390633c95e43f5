#include "mggan/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace mggan {

namespace {

// Thrown by value parsers; parse_config attaches the line and key.
struct BadValue {
    std::string message;
};

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& v)
{
    T out{};
    const char* first = v.data();
    const char* last = v.data() + v.size();
    if (!v.empty() && v[0] == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last || first == last) throw BadValue{"'" + v + "' is not a valid number"};
    return out;
}

template <typename T>
std::string format_number(T v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

bool parse_bool(const std::string& v)
{
    if (v == "true") return true;
    if (v == "false") return false;
    throw BadValue{"'" + v + "' is not a boolean (true or false)"};
}

std::string format_bool(bool b) { return b ? "true" : "false"; }

template <typename E>
E parse_enum(const std::string& v, const std::vector<std::pair<std::string, E>>& names)
{
    std::string allowed;
    for (const auto& [n, e] : names) {
        if (n == v) return e;
        allowed += (allowed.empty() ? "" : ", ") + n;
    }
    throw BadValue{"'" + v + "' is not one of: " + allowed};
}

template <typename E>
std::string format_enum(E v, const std::vector<std::pair<std::string, E>>& names)
{
    for (const auto& [n, e] : names)
        if (e == v) return n;
    return "?";
}

const std::vector<std::pair<std::string, DataKind>> kDataKinds{{"ring", DataKind::Ring}, {"idx", DataKind::Idx}};
const std::vector<std::pair<std::string, LossKind>> kLossKinds{{"nonsaturating", LossKind::NonSaturating},
                                                               {"leastsquares", LossKind::LeastSquares}};
const std::vector<std::pair<std::string, PriorKind>> kPriorKinds{{"normal", PriorKind::Normal},
                                                                 {"uniform", PriorKind::Uniform}};
const std::vector<std::pair<std::string, ReconstructionLoss>> kReconLosses{{"l2", ReconstructionLoss::L2},
                                                                           {"l1", ReconstructionLoss::L1}};
const std::vector<std::pair<std::string, Activation>> kActivations{{"identity", Activation::Identity},
                                                                   {"relu", Activation::Relu},
                                                                   {"leaky_relu", Activation::LeakyRelu},
                                                                   {"tanh", Activation::Tanh},
                                                                   {"sigmoid", Activation::Sigmoid}};

struct Key {
    std::string name;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T, typename Access>
Key number_key(std::string name, Access access)
{
    return {std::move(name), [access](ExperimentConfig& c, const std::string& v) { access(c) = parse_number<T>(v); },
            [access](const ExperimentConfig& c) { return format_number<T>(access(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Access>
Key bool_key(std::string name, Access access)
{
    return {std::move(name), [access](ExperimentConfig& c, const std::string& v) { access(c) = parse_bool(v); },
            [access](const ExperimentConfig& c) { return format_bool(access(const_cast<ExperimentConfig&>(c))); }};
}

template <typename E, typename Access>
Key enum_key(std::string name, const std::vector<std::pair<std::string, E>>& names, Access access)
{
    return {std::move(name),
            [access, &names](ExperimentConfig& c, const std::string& v) { access(c) = parse_enum(v, names); },
            [access, &names](const ExperimentConfig& c) {
                return format_enum(access(const_cast<ExperimentConfig&>(c)), names);
            }};
}

const std::vector<Key>& keys()
{
    using C = ExperimentConfig;
    static const std::vector<Key> table{
        {"name", [](C& c, const std::string& v) { c.name = v; }, [](const C& c) { return c.name; }},
        {"output", [](C& c, const std::string& v) { c.output = v; }, [](const C& c) { return c.output.string(); }},
        number_key<std::uint64_t>("seed", [](C& c) -> auto& { return c.train.seed; }),

        enum_key("data.kind", kDataKinds, [](C& c) -> auto& { return c.data.kind; }),
        number_key<int>("data.modes", [](C& c) -> auto& { return c.data.modes; }),
        number_key<double>("data.radius", [](C& c) -> auto& { return c.data.radius; }),
        number_key<double>("data.std", [](C& c) -> auto& { return c.data.stddev; }),
        {"data.path", [](C& c, const std::string& v) { c.data.path = v; },
         [](const C& c) { return c.data.path.string(); }},

        enum_key("model.loss", kLossKinds, [](C& c) -> auto& { return c.train.loss; }),
        bool_key("model.guidance", [](C& c) -> auto& { return c.train.guidance; }),
        number_key<Index>("model.z_dim", [](C& c) -> auto& { return c.train.z_dim; }),
        number_key<Index>("model.m_dim", [](C& c) -> auto& { return c.train.m_dim; }),
        number_key<Index>("model.hidden", [](C& c) -> auto& { return c.train.hidden; }),
        enum_key("model.prior", kPriorKinds, [](C& c) -> auto& { return c.train.prior; }),
        number_key<float>("model.output_scale", [](C& c) -> auto& { return c.train.output_scale; }),
        bool_key("model.g_batch_norm", [](C& c) -> auto& { return c.train.g_batch_norm; }),
        enum_key("model.g_activation", kActivations, [](C& c) -> auto& { return c.train.g_activation; }),

        number_key<int>("ae.steps", [](C& c) -> auto& { return c.autoencoder.steps; }),
        number_key<Index>("ae.batch", [](C& c) -> auto& { return c.autoencoder.batch; }),
        number_key<Index>("ae.hidden", [](C& c) -> auto& { return c.autoencoder.hidden; }),
        enum_key("ae.activation", kActivations, [](C& c) -> auto& { return c.autoencoder.activation; }),
        number_key<double>("ae.corruption_std", [](C& c) -> auto& { return c.autoencoder.corruption_std; }),
        enum_key("ae.loss", kReconLosses, [](C& c) -> auto& { return c.autoencoder.loss; }),
        number_key<float>("ae.lr", [](C& c) -> auto& { return c.autoencoder.adam.lr; }),
        number_key<float>("ae.beta1", [](C& c) -> auto& { return c.autoencoder.adam.beta1; }),
        number_key<float>("ae.beta2", [](C& c) -> auto& { return c.autoencoder.adam.beta2; }),
        number_key<int>("ae.plateau_window", [](C& c) -> auto& { return c.autoencoder.plateau_window; }),
        number_key<double>("ae.plateau_tolerance", [](C& c) -> auto& { return c.autoencoder.plateau_tolerance; }),

        number_key<std::int64_t>("train.steps", [](C& c) -> auto& { return c.train.total_steps; }),
        number_key<Index>("train.batch", [](C& c) -> auto& { return c.train.batch; }),
        number_key<int>("train.d_steps", [](C& c) -> auto& { return c.train.d_steps; }),
        number_key<std::int64_t>("train.eval_interval", [](C& c) -> auto& { return c.train.eval_interval; }),
        number_key<Index>("train.eval_samples", [](C& c) -> auto& { return c.train.eval_samples; }),
        number_key<float>("train.lr", [](C& c) -> auto& { return c.train.adam.lr; }),
        number_key<float>("train.beta1", [](C& c) -> auto& { return c.train.adam.beta1; }),
        number_key<float>("train.beta2", [](C& c) -> auto& { return c.train.adam.beta2; }),
        number_key<float>("train.eps", [](C& c) -> auto& { return c.train.adam.eps; }),

        number_key<int>("inverse.steps", [](C& c) -> auto& { return c.inverse.steps; }),
        number_key<Index>("inverse.batch", [](C& c) -> auto& { return c.inverse.batch; }),
        number_key<Index>("inverse.hidden", [](C& c) -> auto& { return c.inverse.hidden; }),
        number_key<float>("inverse.lr", [](C& c) -> auto& { return c.inverse.adam.lr; }),

        number_key<Index>("eval.samples", [](C& c) -> auto& { return c.final_eval_samples; }),
        number_key<Index>("eval.ms_ssim_samples", [](C& c) -> auto& { return c.ms_ssim_samples; }),
        number_key<Index>("eval.reconstruction_samples", [](C& c) -> auto& { return c.reconstruction_samples; }),
        number_key<int>("eval.interpolation_pairs", [](C& c) -> auto& { return c.interpolation_pairs; }),
        number_key<int>("eval.interpolation_steps", [](C& c) -> auto& { return c.interpolation_steps; }),
        bool_key("plot.frames", [](C& c) -> auto& { return c.plot_frames; }),
    };
    return table;
}

const Key* find_key(const std::string& name)
{
    for (const auto& k : keys())
        if (k.name == name) return &k;
    return nullptr;
}

void check(bool ok, const std::string& key, const std::string& message)
{
    if (!ok) throw ConfigError(key + ": " + message, 0, key);
}

// Settings implied by the data kind unless the file set them.
void apply_derived_defaults(ExperimentConfig& c)
{
    if (c.data.kind == DataKind::Idx && !c.explicit_keys.contains("model.output_scale")) c.train.output_scale = 1.0f;
    c.autoencoder.m_dim = c.train.m_dim;
}

} // namespace

void ExperimentConfig::validate() const
{
    check(!name.empty(), "name", "must not be empty");
    check(!output.empty(), "output", "must not be empty");
    if (data.kind == DataKind::Ring) {
        check(data.modes >= 1, "data.modes", "must be at least 1");
        check(data.radius > 0.0, "data.radius", "must be positive");
        check(data.stddev > 0.0, "data.std", "must be positive");
        check(data.radius < train.output_scale, "model.output_scale",
              "generator range " + format_number(train.output_scale) + " cannot reach the ring radius " +
                  format_number(data.radius));
    } else {
        check(!data.path.empty(), "data.path", "required when data.kind = idx");
        check(train.output_scale <= 1.0f, "model.output_scale", "images live in [-1, 1]; scale must be at most 1");
    }
    check(train.z_dim >= 1, "model.z_dim", "must be at least 1");
    check(train.m_dim >= 1, "model.m_dim", "must be at least 1");
    check(train.hidden >= 1, "model.hidden", "must be at least 1");
    check(train.output_scale > 0.0f, "model.output_scale", "must be positive");
    check(train.total_steps >= 0, "train.steps", "must be non-negative");
    check(train.batch >= 2, "train.batch", "must be at least 2");
    check(train.d_steps >= 1, "train.d_steps", "must be at least 1");
    check(train.eval_interval >= 1, "train.eval_interval", "must be positive");
    check(train.total_steps == 0 || train.eval_interval <= train.total_steps, "train.eval_interval",
          "must not exceed train.steps");
    check(train.eval_samples >= 1, "train.eval_samples", "must be positive");
    check(train.adam.lr > 0.0f, "train.lr", "must be positive");
    check(train.adam.beta1 >= 0.0f && train.adam.beta1 < 1.0f, "train.beta1", "must be in [0, 1)");
    check(train.adam.beta2 >= 0.0f && train.adam.beta2 < 1.0f, "train.beta2", "must be in [0, 1)");
    check(train.adam.eps > 0.0f, "train.eps", "must be positive");
    check(autoencoder.steps >= 1, "ae.steps", "must be at least 1");
    check(autoencoder.batch >= 1, "ae.batch", "must be at least 1");
    check(autoencoder.hidden >= 1, "ae.hidden", "must be at least 1");
    check(autoencoder.corruption_std >= 0.0, "ae.corruption_std", "must be non-negative");
    check(autoencoder.adam.lr > 0.0f, "ae.lr", "must be positive");
    check(autoencoder.adam.beta1 >= 0.0f && autoencoder.adam.beta1 < 1.0f, "ae.beta1", "must be in [0, 1)");
    check(autoencoder.adam.beta2 >= 0.0f && autoencoder.adam.beta2 < 1.0f, "ae.beta2", "must be in [0, 1)");
    check(autoencoder.plateau_window >= 1, "ae.plateau_window", "must be positive");
    check(autoencoder.plateau_tolerance >= 0.0, "ae.plateau_tolerance", "must be non-negative");
    check(inverse.steps >= 1, "inverse.steps", "must be at least 1");
    check(inverse.batch >= 2, "inverse.batch", "must be at least 2");
    check(inverse.hidden >= 1, "inverse.hidden", "must be at least 1");
    check(inverse.adam.lr > 0.0f, "inverse.lr", "must be positive");
    check(final_eval_samples >= 1, "eval.samples", "must be positive");
    check(ms_ssim_samples >= 2, "eval.ms_ssim_samples", "must be at least 2");
    check(reconstruction_samples >= 2, "eval.reconstruction_samples", "must be at least 2");
    check(interpolation_pairs >= 0, "eval.interpolation_pairs", "must be non-negative");
    check(interpolation_steps >= 1, "eval.interpolation_steps", "must be at least 1");
}

ExperimentConfig parse_config(std::istream& in)
{
    ExperimentConfig c;
    std::string raw;
    int line_no = 0;
    std::map<std::string, int> seen;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'", line_no);
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": missing key", line_no);
        const Key* k = find_key(key);
        if (k == nullptr)
            throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'", line_no, key);
        if (const auto it = seen.find(key); it != seen.end())
            throw ConfigError("line " + std::to_string(line_no) + ": key '" + key + "' already set on line " +
                                  std::to_string(it->second),
                              line_no, key);
        seen.emplace(key, line_no);
        try {
            k->set(c, value);
        } catch (const BadValue& e) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + key + ": " + e.message, line_no, key);
        }
        c.explicit_keys.insert(key);
    }
    apply_derived_defaults(c);
    c.validate();
    return c;
}

ExperimentConfig parse_config_text(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse_config(in);
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& config)
{
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : keys()) out.emplace_back(k.name, k.get(config));
    return out;
}

std::string to_text(const ExperimentConfig& config)
{
    std::string out;
    for (const auto& [k, v] : config_entries(config)) out += k + " = " + v + "\n";
    return out;
}

std::vector<std::string> config_keys()
{
    std::vector<std::string> out;
    for (const auto& k : keys()) out.push_back(k.name);
    return out;
}

} // namespace mggan
