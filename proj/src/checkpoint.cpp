// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "mst/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace mst {

namespace {

constexpr char kMagic[8] = {'M', 'S', 'T', 'C', 'K', 'P', 'T', '1'};

void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
void put_f64s(std::ostream& os, const double* p, std::size_t n) {
    os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * 8));
}

std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
std::uint64_t get_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
void get_f64s(std::istream& is, double* p, std::size_t n) {
    is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * 8));
}

void put_params(std::ostream& os, const ParamList& params) {
    put_u32(os, static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        put_u32(os, static_cast<std::uint32_t>(p.name.size()));
        os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        const auto& shape = p.tensor.shape();
        put_u32(os, static_cast<std::uint32_t>(shape.size()));
        for (std::size_t d : shape) put_u64(os, d);
        put_f64s(os, p.tensor.value().data(), p.tensor.numel());
    }
}

void get_params(std::istream& is, ParamList& params, const std::string& which) {
    const std::uint32_t count = get_u32(is);
    if (count != params.size())
        throw error("checkpoint: " + which + " has " + std::to_string(count) +
                    " tensors, model expects " + std::to_string(params.size()));
    for (auto& p : params) {
        const std::uint32_t name_len = get_u32(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (name != p.name)
            throw error("checkpoint: expected tensor '" + p.name + "', found '" + name + "'");
        const std::uint32_t ndim = get_u32(is);
        std::vector<std::size_t> shape(ndim);
        for (auto& d : shape) d = get_u64(is);
        if (shape != p.tensor.shape())
            throw error("checkpoint: tensor '" + name + "' has shape " + shape_str(shape) +
                        ", model expects " + shape_str(p.tensor.shape()));
        get_f64s(is, p.tensor.value_mut().data(), p.tensor.numel());
    }
}

void put_moments(std::ostream& os, const Adam& opt) {
    put_u64(os, static_cast<std::uint64_t>(opt.step_count()));
    put_u64(os, opt.moment1().size());
    put_f64s(os, opt.moment1().data(), opt.moment1().size());
    put_f64s(os, opt.moment2().data(), opt.moment2().size());
}

void get_moments(std::istream& is, Adam& opt) {
    opt.set_step_count(static_cast<std::int64_t>(get_u64(is)));
    const std::uint64_t n = get_u64(is);
    if (n != opt.moment1().size())
        throw error("checkpoint: optimizer state length mismatch");
    get_f64s(is, opt.moment1().data(), n);
    get_f64s(is, opt.moment2().data(), n);
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamList& model_params,
                     const Adam& model_opt, const ParamList& disc_params, const Adam& disc_opt,
                     const CheckpointState& state) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw error("cannot write checkpoint '" + path + "'");
    os.write(kMagic, 8);
    put_u32(os, 1);
    put_u64(os, state.iteration);
    put_u32(os, static_cast<std::uint32_t>(state.rng_state.size()));
    os.write(state.rng_state.data(), static_cast<std::streamsize>(state.rng_state.size()));
    put_params(os, model_params);
    put_params(os, disc_params);
    put_moments(os, model_opt);
    put_moments(os, disc_opt);
    if (!os) throw error("checkpoint write failed for '" + path + "'");
}

namespace {

CheckpointState load_header(std::istream& is, const std::string& path) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw error("'" + path + "' is not a checkpoint file");
    const std::uint32_t version = get_u32(is);
    if (version != 1)
        throw error("checkpoint '" + path + "' has unsupported version " +
                    std::to_string(version));
    CheckpointState state;
    state.iteration = get_u64(is);
    const std::uint32_t rng_len = get_u32(is);
    state.rng_state.resize(rng_len);
    is.read(state.rng_state.data(), rng_len);
    return state;
}

}  // namespace

CheckpointState load_checkpoint(const std::string& path, ParamList& model_params, Adam& model_opt,
                                ParamList& disc_params, Adam& disc_opt) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw error("cannot open checkpoint '" + path + "'");
    CheckpointState state = load_header(is, path);
    get_params(is, model_params, "model section");
    get_params(is, disc_params, "discriminator section");
    get_moments(is, model_opt);
    get_moments(is, disc_opt);
    if (!is) throw error("checkpoint '" + path + "' is truncated");
    return state;
}

CheckpointState load_checkpoint_params(const std::string& path, ParamList& model_params,
                                       ParamList& disc_params) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw error("cannot open checkpoint '" + path + "'");
    CheckpointState state = load_header(is, path);
    get_params(is, model_params, "model section");
    get_params(is, disc_params, "discriminator section");
    if (!is) throw error("checkpoint '" + path + "' is truncated");
    return state;
}

}  // namespace mst
