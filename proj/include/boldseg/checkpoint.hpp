#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "boldseg/config.hpp"
#include "boldseg/io.hpp"
#include "boldseg/train.hpp"
#include "boldseg/unet.hpp"

namespace boldseg {

// Checkpoint container: magic "BSCK", u32 version, then three length-prefixed
// blocks (train config JSON, float32 parameters in registry order, float32
// buffers) and the training history JSON. Everything little-endian.

namespace ckptdetail {

constexpr char kMagic[4] = {'B', 'S', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

inline void write_u32(std::ofstream& f, std::uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), 4);
}
inline void write_u64(std::ofstream& f, std::uint64_t v) {
    f.write(reinterpret_cast<const char*>(&v), 8);
}
inline void write_blob(std::ofstream& f, const std::string& s) {
    write_u64(f, s.size());
    f.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint32_t read_u32(std::ifstream& f, const std::string& path) {
    std::uint32_t v = 0;
    detail::read_exact(f, &v, 4, path);
    return v;
}
inline std::uint64_t read_u64(std::ifstream& f, const std::string& path) {
    std::uint64_t v = 0;
    detail::read_exact(f, &v, 8, path);
    return v;
}
inline std::string read_blob(std::ifstream& f, const std::string& path) {
    std::uint64_t n = read_u64(f, path);
    require(n < (1ull << 32), ErrKind::bad_data, path, ": implausible block size ", n);
    std::string s(n, '\0');
    if (n) detail::read_exact(f, s.data(), n, path);
    return s;
}

inline nlohmann::json history_to_json(const TrainHistory& h) {
    return nlohmann::json{{"train_loss", h.train_loss},
                          {"val_dice", h.val_dice},
                          {"best_epoch", h.best_epoch},
                          {"best_val_dice", h.best_val_dice}};
}

inline TrainHistory history_from_json(const nlohmann::json& j) {
    TrainHistory h;
    h.train_loss = j.at("train_loss").get<std::vector<double>>();
    h.val_dice = j.at("val_dice").get<std::vector<double>>();
    h.best_epoch = j.at("best_epoch").get<int>();
    h.best_val_dice = j.at("best_val_dice").get<double>();
    return h;
}

}  // namespace ckptdetail

struct Checkpoint {
    UNet<float> net;
    TrainConfig config;
    TrainHistory history;

    Checkpoint(UNet<float> n, TrainConfig c, TrainHistory h)
        : net(std::move(n)), config(std::move(c)), history(std::move(h)) {}
};

inline void save_checkpoint(UNet<float>& net, const TrainConfig& cfg, const TrainHistory& hist,
                            const std::string& path) {
    using namespace ckptdetail;
    auto f = detail::open_out(path);
    f.write(kMagic, 4);
    write_u32(f, kVersion);
    write_blob(f, train_config_to_json(cfg).dump());

    std::uint64_t np = 0;
    for (const auto& p : net.params()) np += p.value->size();
    write_u64(f, np);
    for (const auto& p : net.params())
        f.write(reinterpret_cast<const char*>(p.value->data()),
                static_cast<std::streamsize>(p.value->size() * sizeof(float)));

    std::uint64_t nb = 0;
    for (const auto& b : net.buffers()) nb += b.value->size();
    write_u64(f, nb);
    for (const auto& b : net.buffers())
        f.write(reinterpret_cast<const char*>(b.value->data()),
                static_cast<std::streamsize>(b.value->size() * sizeof(float)));

    write_blob(f, history_to_json(hist).dump());
    require(f.good(), ErrKind::io, path, ": write failed");
    f.close();
    require(f.good(), ErrKind::io, path, ": close failed");
}

inline Checkpoint load_checkpoint(const std::string& path) {
    using namespace ckptdetail;
    auto f = detail::open_in(path);
    char magic[4] = {};
    detail::read_exact(f, magic, 4, path);
    require(std::memcmp(magic, kMagic, 4) == 0, ErrKind::bad_data, path,
            ": not a checkpoint file");
    std::uint32_t ver = read_u32(f, path);
    require(ver == kVersion, ErrKind::bad_data, path, ": unsupported checkpoint version ", ver);

    nlohmann::json cj;
    try {
        cj = nlohmann::json::parse(read_blob(f, path));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrKind::bad_data, path, ": config block: ", e.what());
    }
    TrainConfig cfg = train_config_from_json(cj);

    UNet<float> net(cfg.unet);
    std::uint64_t np = read_u64(f, path);
    std::uint64_t want = 0;
    for (const auto& p : net.params()) want += p.value->size();
    require(np == want, ErrKind::bad_data, path, ": parameter count ", np, " != expected ", want);
    for (auto& p : net.params())
        detail::read_exact(f, p.value->data(), p.value->size() * sizeof(float), path);

    std::uint64_t nb = read_u64(f, path);
    want = 0;
    for (const auto& b : net.buffers()) want += b.value->size();
    require(nb == want, ErrKind::bad_data, path, ": buffer count ", nb, " != expected ", want);
    for (auto& b : net.buffers())
        detail::read_exact(f, b.value->data(), b.value->size() * sizeof(float), path);

    nlohmann::json hj;
    try {
        hj = nlohmann::json::parse(read_blob(f, path));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrKind::bad_data, path, ": history block: ", e.what());
    }
    TrainHistory hist;
    try {
        hist = history_from_json(hj);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrKind::bad_data, path, ": history block: ", e.what());
    }
    return Checkpoint(std::move(net), std::move(cfg), std::move(hist));
}

}  // namespace boldseg
