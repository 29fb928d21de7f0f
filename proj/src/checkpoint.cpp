#include "fedtab/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace fedtab {

namespace {

constexpr char kMagic[4] = {'F', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::vector<unsigned char>& out, const T& v) {
    const auto* p = reinterpret_cast<const unsigned char*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T get(const std::vector<unsigned char>& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw std::runtime_error("checkpoint: truncated data");
    T v;
    std::memcpy(&v, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

}  // namespace

std::vector<unsigned char> params_to_bytes(const ModelParams& params) {
    std::vector<unsigned char> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put(out, kVersion);
    const auto& c = params.config;
    put(out, static_cast<std::int32_t>(c.input_dim));
    put(out, static_cast<std::int32_t>(c.n_classes));
    put(out, static_cast<std::int32_t>(c.n_d));
    put(out, static_cast<std::int32_t>(c.n_a));
    put(out, static_cast<std::int32_t>(c.n_steps));
    put(out, c.gamma);
    put(out, c.lambda_sparse);
    put(out, c.bn_momentum);
    put(out, c.epsilon);
    put(out, static_cast<std::uint32_t>(params.tensors.size()));
    for (const auto& t : params.tensors) {
        put(out, static_cast<std::uint32_t>(t.name.size()));
        out.insert(out.end(), t.name.begin(), t.name.end());
        put(out, static_cast<std::uint8_t>(t.trainable ? 1 : 0));
        put(out, static_cast<std::uint32_t>(t.shape.size()));
        for (int dim : t.shape) put(out, static_cast<std::int64_t>(dim));
        for (double v : t.values) put(out, v);
    }
    return out;
}

ModelParams params_from_bytes(const std::vector<unsigned char>& bytes) {
    std::size_t pos = 0;
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic");
    pos = 4;
    if (get<std::uint32_t>(bytes, pos) != kVersion)
        throw std::runtime_error("checkpoint: unsupported version");

    ModelParams p;
    p.config.input_dim = get<std::int32_t>(bytes, pos);
    p.config.n_classes = get<std::int32_t>(bytes, pos);
    p.config.n_d = get<std::int32_t>(bytes, pos);
    p.config.n_a = get<std::int32_t>(bytes, pos);
    p.config.n_steps = get<std::int32_t>(bytes, pos);
    p.config.gamma = get<double>(bytes, pos);
    p.config.lambda_sparse = get<double>(bytes, pos);
    p.config.bn_momentum = get<double>(bytes, pos);
    p.config.epsilon = get<double>(bytes, pos);

    const std::uint32_t count = get<std::uint32_t>(bytes, pos);
    p.tensors.resize(count);
    for (auto& t : p.tensors) {
        const std::uint32_t name_len = get<std::uint32_t>(bytes, pos);
        if (pos + name_len > bytes.size()) throw std::runtime_error("checkpoint: truncated name");
        t.name.assign(reinterpret_cast<const char*>(bytes.data() + pos), name_len);
        pos += name_len;
        t.trainable = get<std::uint8_t>(bytes, pos) != 0;
        const std::uint32_t ndim = get<std::uint32_t>(bytes, pos);
        std::size_t total = 1;
        t.shape.resize(ndim);
        for (auto& dim : t.shape) {
            dim = static_cast<int>(get<std::int64_t>(bytes, pos));
            total *= static_cast<std::size_t>(dim);
        }
        t.values.resize(total);
        for (auto& v : t.values) v = get<double>(bytes, pos);
    }
    if (pos != bytes.size()) throw std::runtime_error("checkpoint: trailing data");
    return p;
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
    const auto bytes = params_to_bytes(params);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("checkpoint write failure: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return params_from_bytes(bytes);
}

}  // namespace fedtab
