#include "mggan/nets.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>

namespace mggan {

bool MlpConfig::has_batch_norm() const
{
    for (const auto& l : layers)
        if (l.batch_norm) return true;
    return false;
}

void MlpConfig::validate() const
{
    if (input_width <= 0) throw ArgumentError("MlpConfig: input width must be positive");
    if (layers.empty()) throw ArgumentError("MlpConfig: at least one layer is required");
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (layers[i].width <= 0) throw ArgumentError("MlpConfig: layer " + std::to_string(i) + " has non-positive width");
    if (layers.back().batch_norm) throw ArgumentError("MlpConfig: batch norm is not allowed on the output layer");
    if (!(bn_momentum > 0.0f && bn_momentum < 1.0f)) throw ArgumentError("MlpConfig: bn momentum must lie in (0, 1)");
    if (!(bn_eps > 0.0f)) throw ArgumentError("MlpConfig: bn eps must be positive");
}

NetworkParams<float> init_network(const MlpConfig& config, Rng& rng)
{
    config.validate();
    NetworkParams<float> params;
    Index in = config.input_width;
    for (std::size_t l = 0; l < config.layers.size(); ++l) {
        const std::string prefix = "layer" + std::to_string(l);
        const Index out = config.layers[l].width;
        MatrixF w(in, out);
        for (Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<float>(rng.normal(0.0, 0.02));
        params.add(prefix + ".weight", std::move(w));
        params.add(prefix + ".bias", MatrixF::Zero(1, out));
        if (config.layers[l].batch_norm) {
            params.add(prefix + ".bn.gamma", MatrixF::Ones(1, out));
            params.add(prefix + ".bn.beta", MatrixF::Zero(1, out));
            params.add(prefix + ".bn.running_mean", MatrixF::Zero(1, out), false);
            params.add(prefix + ".bn.running_var", MatrixF::Ones(1, out), false);
        }
        in = out;
    }
    return params;
}

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv(std::uint64_t& h, const void* data, std::size_t n)
{
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
}

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path)
{
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw CheckpointTruncatedError("checkpoint " + path.string() + " is truncated");
    return v;
}

} // namespace

std::uint64_t hash(const NetworkParams<float>& params)
{
    std::uint64_t h = kFnvOffset;
    for (const auto& e : params) {
        fnv(h, e.name.data(), e.name.size());
        const std::int64_t shape[2] = {e.value.rows(), e.value.cols()};
        fnv(h, shape, sizeof(shape));
        fnv(h, e.value.data(), sizeof(float) * static_cast<std::size_t>(e.value.size()));
    }
    return h;
}

std::uint64_t checkpoint_size(const std::vector<NamedTensor>& tensors)
{
    std::uint64_t n = 4 + 4 + 4;
    for (const auto& t : tensors) n += 2 + t.name.size() + 4 + 8 * 2 + 4 * static_cast<std::uint64_t>(t.value.size());
    return n;
}

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors)
{
    std::set<std::string> seen;
    for (const auto& t : tensors) {
        if (!seen.insert(t.name).second) throw CheckpointError("duplicate tensor name " + t.name);
        if (t.name.size() > 0xFFFF) throw CheckpointError("tensor name too long: " + t.name.substr(0, 64));
    }
    // Write to a sibling temp file, then rename, so readers never see a partial checkpoint.
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw CheckpointError("cannot open " + tmp.string() + " for writing");
        os.write("MGCK", 4);
        put<std::uint32_t>(os, kCheckpointVersion);
        put<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
        for (const auto& t : tensors) {
            put<std::uint16_t>(os, static_cast<std::uint16_t>(t.name.size()));
            os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
            put<std::uint32_t>(os, 2);
            put<std::uint64_t>(os, static_cast<std::uint64_t>(t.value.rows()));
            put<std::uint64_t>(os, static_cast<std::uint64_t>(t.value.cols()));
            os.write(reinterpret_cast<const char*>(t.value.data()),
                     static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(t.value.size())));
        }
        if (!os) throw CheckpointError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("cannot open checkpoint " + path.string());
    char magic[4];
    if (!is.read(magic, 4)) throw CheckpointTruncatedError("checkpoint " + path.string() + " is truncated");
    if (std::memcmp(magic, "MGCK", 4) != 0) throw CheckpointMagicError("bad checkpoint magic in " + path.string());
    const auto version = get<std::uint32_t>(is, path);
    if (version != kCheckpointVersion)
        throw CheckpointVersionError("unsupported checkpoint version " + std::to_string(version) + " in " +
                                     path.string());
    const auto count = get<std::uint32_t>(is, path);

    std::vector<NamedTensor> out;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = get<std::uint16_t>(is, path);
        std::string name(len, '\0');
        if (!is.read(name.data(), len)) throw CheckpointTruncatedError("checkpoint " + path.string() + " is truncated");
        const auto rank = get<std::uint32_t>(is, path);
        if (rank > 2) throw CheckpointError("tensor " + name + " has unsupported rank " + std::to_string(rank));
        std::uint64_t dims[2] = {1, 1};
        for (std::uint32_t r = 0; r < rank; ++r) dims[2 - rank + r] = get<std::uint64_t>(is, path);
        if (dims[0] > (1ULL << 32) || dims[1] > (1ULL << 32))
            throw CheckpointError("tensor " + name + " has implausible dimensions");
        MatrixF value(static_cast<Index>(dims[0]), static_cast<Index>(dims[1]));
        if (!is.read(reinterpret_cast<char*>(value.data()),
                     static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(value.size()))))
            throw CheckpointTruncatedError("checkpoint " + path.string() + " is truncated in tensor " + name);
        out.push_back(NamedTensor{std::move(name), std::move(value)});
    }
    if (is.peek() != std::char_traits<char>::eof())
        throw CheckpointError("trailing bytes after last tensor in " + path.string());
    return out;
}

void save_checkpoint(const std::filesystem::path& path, const std::map<std::string, const NetworkParams<float>*>& nets)
{
    std::vector<NamedTensor> tensors;
    for (const auto& [prefix, params] : nets)
        for (const auto& e : *params) tensors.push_back(NamedTensor{prefix + "." + e.name, e.value});
    write_checkpoint(path, tensors);
}

void load_checkpoint(const std::filesystem::path& path, const std::map<std::string, NetworkParams<float>*>& nets)
{
    const auto tensors = read_checkpoint(path);
    std::set<std::string> loaded;
    for (const auto& t : tensors) {
        NetworkParams<float>::Entry* target = nullptr;
        for (const auto& [prefix, params] : nets) {
            if (t.name.size() > prefix.size() + 1 && t.name.compare(0, prefix.size(), prefix) == 0 &&
                t.name[prefix.size()] == '.') {
                target = params->find(std::string_view(t.name).substr(prefix.size() + 1));
                if (target != nullptr) break;
            }
        }
        if (target == nullptr) throw UnknownTensorError("unknown tensor " + t.name + " in " + path.string());
        if (target->value.rows() != t.value.rows() || target->value.cols() != t.value.cols())
            throw DimensionError("tensor " + t.name + " has shape " + shape_string(t.value) + ", expected " +
                                 shape_string(target->value));
        target->value = t.value;
        loaded.insert(t.name);
    }
    for (const auto& [prefix, params] : nets)
        for (const auto& e : *params)
            if (!loaded.contains(prefix + "." + e.name))
                throw CheckpointError("checkpoint " + path.string() + " lacks tensor " + prefix + "." + e.name);
}

} // namespace mggan
