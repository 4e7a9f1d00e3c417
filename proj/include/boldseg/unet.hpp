#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "boldseg/core.hpp"
#include "boldseg/nn.hpp"
#include "boldseg/rng.hpp"
#include "boldseg/tensor.hpp"

namespace boldseg {

struct UNetConfig {
    int levels = 5;         // resolution scales; levels-1 pooling stages
    int base_channels = 16; // channels at the finest scale, doubling per level
    int in_channels = 1;

    void validate() const {
        require(levels >= 2, ErrKind::bad_config, "unet: levels must be >= 2, got ", levels);
        require(base_channels >= 1, ErrKind::bad_config, "unet: base_channels must be >= 1");
        require(in_channels >= 1, ErrKind::bad_config, "unet: in_channels must be >= 1");
    }
    int channels_at(int level) const { return base_channels << level; }
    int divisor() const { return 1 << (levels - 1); }
};

// Learnable scalar count:
//   per double-conv block (cin -> c): 27*c*(cin + c) + 2c biases + 4c norm
//   per decoder upsample (c2 -> c):   8*c2*c + c bias
//   head (c0 -> 1):                   c0 + 1
// summed over encoder blocks, bottleneck, and decoder blocks.
inline std::uint64_t expected_parameter_count(const UNetConfig& cfg) {
    cfg.validate();
    auto dconv = [](std::uint64_t cin, std::uint64_t c) {
        return 27 * c * (cin + c) + 2 * c + 4 * c;
    };
    std::uint64_t total = 0;
    std::uint64_t prev = cfg.in_channels;
    for (int i = 0; i < cfg.levels - 1; ++i) {
        std::uint64_t c = cfg.channels_at(i);
        total += dconv(prev, c);
        prev = c;
    }
    total += dconv(prev, cfg.channels_at(cfg.levels - 1));
    for (int i = cfg.levels - 2; i >= 0; --i) {
        std::uint64_t c = cfg.channels_at(i), c2 = cfg.channels_at(i + 1);
        total += 8 * c2 * c + c;          // transpose conv
        total += dconv(2 * c, c);         // conv block after skip concat
    }
    total += static_cast<std::uint64_t>(cfg.base_channels) + 1;  // 1x1x1 head
    return total;
}

template <class T>
struct DoubleConv {
    Conv3d<T> conv1, conv2;
    BatchNorm3d<T> bn1, bn2;
    ReLU<T> relu1, relu2;

    DoubleConv() = default;
    DoubleConv(int cin, int c)
        : conv1(cin, c, 3), conv2(c, c, 3), bn1(c), bn2(c) {}

    void forward(const Tensor<T>& in, Tensor<T>& out, bool train) {
        Tensor<T> a, bn, r;
        conv1.forward(in, a);
        bn1.forward(a, bn, train);
        relu1.forward(bn, r);
        conv2.forward(r, a);
        bn2.forward(a, bn, train);
        relu2.forward(bn, out);
    }
    void backward(const Tensor<T>& gout, Tensor<T>& gin) {
        Tensor<T> g1, g2;
        relu2.backward(gout, g1);
        bn2.backward(g1, g2);
        conv2.backward(g2, g1);
        relu1.backward(g1, g2);
        bn1.backward(g2, g1);
        conv1.backward(g1, gin);
    }
    void init_he(RngStream& rng) {
        conv1.init_he(rng);
        conv2.init_he(rng);
    }
    void register_into(const std::string& prefix, std::vector<ParamRef<T>>& params,
                       std::vector<BufferRef<T>>& buffers) {
        conv1.register_into(prefix + ".conv1", params);
        bn1.register_into(prefix + ".bn1", params, buffers);
        conv2.register_into(prefix + ".conv2", params);
        bn2.register_into(prefix + ".bn2", params, buffers);
    }
};

// Encoder/decoder 3D U-Net with skip concatenation and a single-channel
// sigmoid head.
template <class T>
class UNet {
  public:
    explicit UNet(const UNetConfig& cfg) : cfg_(cfg) {
        cfg.validate();
        int prev = cfg.in_channels;
        for (int i = 0; i < cfg.levels - 1; ++i) {
            enc_.emplace_back(prev, cfg.channels_at(i));
            prev = cfg.channels_at(i);
        }
        pools_.resize(cfg.levels - 1);
        bottleneck_ = DoubleConv<T>(prev, cfg.channels_at(cfg.levels - 1));
        for (int i = cfg.levels - 2; i >= 0; --i) {
            ups_.emplace_back(cfg.channels_at(i + 1), cfg.channels_at(i));
            dec_.emplace_back(2 * cfg.channels_at(i), cfg.channels_at(i));
        }
        head_ = Conv3d<T>(cfg.base_channels, 1, 1);
        build_registry();
    }

    UNet(const UNet&) = delete;
    UNet& operator=(const UNet&) = delete;
    UNet(UNet&& o) noexcept { move_from(std::move(o)); }
    UNet& operator=(UNet&& o) noexcept {
        if (this != &o) move_from(std::move(o));
        return *this;
    }

    const UNetConfig& config() const { return cfg_; }
    std::vector<ParamRef<T>>& params() { return params_; }
    std::vector<BufferRef<T>>& buffers() { return buffers_; }

    std::uint64_t parameter_count() const {
        std::uint64_t total = 0;
        for (const auto& p : params_) total += p.value->size();
        return total;
    }

    void init(std::uint64_t seed) {
        RngStream rng(seed);
        for (auto& e : enc_) e.init_he(rng);
        bottleneck_.init_he(rng);
        for (std::size_t i = 0; i < ups_.size(); ++i) {
            ups_[i].init_he(rng);
            dec_[i].init_he(rng);
        }
        head_.init_he(rng);
    }

    void zero_grad() {
        for (auto& p : params_) std::fill(p.grad->begin(), p.grad->end(), T(0));
    }

    // Probabilities in (0,1), same spatial dims as the input.
    const Tensor<T>& forward(const Tensor<T>& in, bool train) {
        require(in.c == cfg_.in_channels, ErrKind::precondition, "unet: expected ",
                cfg_.in_channels, "-channel input, got ", in.c);
        int d = cfg_.divisor();
        require(in.x % d == 0 && in.y % d == 0 && in.z % d == 0, ErrKind::precondition,
                "unet: input dims ", in.x, "x", in.y, "x", in.z, " not divisible by ", d);
        int L = cfg_.levels;
        skips_.assign(L - 1, Tensor<T>{});
        Tensor<T> flow = in;
        for (int i = 0; i < L - 1; ++i) {
            enc_[i].forward(flow, skips_[i], train);
            pools_[i].forward(skips_[i], flow);
        }
        Tensor<T> u;
        bottleneck_.forward(flow, u, train);
        for (int i = L - 2; i >= 0; --i) {
            std::size_t s = dec_index(i);
            Tensor<T> t, cat;
            ups_[s].forward(u, t);
            require(t.x == skips_[i].x && t.y == skips_[i].y && t.z == skips_[i].z,
                    ErrKind::internal, "unet: skip dims mismatch at level ", i);
            concat_channels(t, skips_[i], cat);
            dec_[s].forward(cat, u, train);
        }
        Tensor<T> logits;
        head_.forward(u, logits);
        sigmoid_.forward(logits, probs_);
        return probs_;
    }

    // dLdp has the output shape; fills every parameter gradient buffer.
    void backward(const Tensor<T>& dLdp) {
        int L = cfg_.levels;
        Tensor<T> g, g2;
        sigmoid_.backward(dLdp, g);
        head_.backward(g, g2);
        std::vector<Tensor<T>> gskip(L - 1);
        Tensor<T> gu = std::move(g2);
        for (int i = 0; i <= L - 2; ++i) {
            std::size_t s = dec_index(i);
            Tensor<T> gcat, gt;
            dec_[s].backward(gu, gcat);
            split_channels(gcat, cfg_.channels_at(i), gt, gskip[i]);
            ups_[s].backward(gt, gu);
        }
        Tensor<T> gx;
        bottleneck_.backward(gu, gx);
        for (int i = L - 2; i >= 0; --i) {
            Tensor<T> gs;
            pools_[i].backward(gx, gs);
            require(gs.same_shape(gskip[i]), ErrKind::internal, "unet: skip gradient mismatch");
            for (std::size_t j = 0; j < gs.data.size(); ++j) gs.data[j] += gskip[i].data[j];
            enc_[i].backward(gs, gx);
        }
    }

  private:
    // decoder containers are stored in application order (coarse to fine)
    std::size_t dec_index(int level) const {
        return static_cast<std::size_t>(cfg_.levels - 2 - level);
    }

    void build_registry() {
        params_.clear();
        buffers_.clear();
        for (std::size_t i = 0; i < enc_.size(); ++i)
            enc_[i].register_into(cat("enc", i), params_, buffers_);
        bottleneck_.register_into("bottleneck", params_, buffers_);
        for (std::size_t s = 0; s < ups_.size(); ++s) {
            int level = cfg_.levels - 2 - static_cast<int>(s);
            ups_[s].register_into(cat("dec", level, ".up"), params_);
            dec_[s].register_into(cat("dec", level), params_, buffers_);
        }
        head_.register_into("head", params_);
    }

    void move_from(UNet&& o) {
        cfg_ = o.cfg_;
        enc_ = std::move(o.enc_);
        pools_ = std::move(o.pools_);
        bottleneck_ = std::move(o.bottleneck_);
        ups_ = std::move(o.ups_);
        dec_ = std::move(o.dec_);
        head_ = std::move(o.head_);
        sigmoid_ = std::move(o.sigmoid_);
        skips_ = std::move(o.skips_);
        probs_ = std::move(o.probs_);
        build_registry();
    }

    UNetConfig cfg_;
    std::vector<DoubleConv<T>> enc_;
    std::vector<MaxPool2<T>> pools_;
    DoubleConv<T> bottleneck_;
    std::vector<TConv2<T>> ups_;
    std::vector<DoubleConv<T>> dec_;
    Conv3d<T> head_;
    Sigmoid<T> sigmoid_;
    std::vector<Tensor<T>> skips_;
    Tensor<T> probs_;
    std::vector<ParamRef<T>> params_;
    std::vector<BufferRef<T>> buffers_;
};

}  // namespace boldseg
