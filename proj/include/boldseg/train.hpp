#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "boldseg/augment.hpp"
#include "boldseg/boundary.hpp"
#include "boldseg/losses.hpp"
#include "boldseg/metrics.hpp"
#include "boldseg/optim.hpp"
#include "boldseg/preprocess.hpp"
#include "boldseg/rng.hpp"
#include "boldseg/segment.hpp"
#include "boldseg/series.hpp"
#include "boldseg/unet.hpp"

namespace boldseg {

struct TrainConfig {
    double learning_rate = 1e-4;
    int epochs = 3000;
    int batch_size = 8;
    OptimizerKind optimizer = OptimizerKind::adam;
    LossConfig loss;
    UNetConfig unet;
    AugmentConfig augment;
    bool augment_enabled = false;
    Shape3 target_dims{0, 0, 0};  // all-zero = native frame dims
    std::uint64_t seed = 1;

    void validate() const {
        require(learning_rate > 0 && std::isfinite(learning_rate), ErrKind::bad_config,
                "train: learning_rate must be > 0");
        require(epochs >= 1, ErrKind::bad_config, "train: epochs must be >= 1");
        require(batch_size >= 1, ErrKind::bad_config, "train: batch_size must be >= 1");
        loss.validate();
        unet.validate();
        augment.validate();
        bool zero = target_dims.nx == 0 && target_dims.ny == 0 && target_dims.nz == 0;
        require(zero || (target_dims.nx > 0 && target_dims.ny > 0 && target_dims.nz > 0),
                ErrKind::bad_config, "train: target_dims must be all zero or all positive");
    }
};

struct TrainHistory {
    std::vector<double> train_loss;  // per-epoch mean per-sample loss
    std::vector<double> val_dice;    // per-epoch mean Dice at threshold 0.5
    int best_epoch = -1;
    double best_val_dice = -1.0;
};

struct TrainResult {
    UNet<float> net;  // weights of the best-validation epoch
    TrainHistory history;
};

namespace traindetail {

struct Sample {
    Tensor<float> x;              // (1,1,dims)
    std::vector<std::uint8_t> y;  // voxels
    WeightMap w;
    bool has_w = false;
};

// Boundary weights from the (augmented) ground truth. Labels without a
// boundary (all background / all foreground) get zero weights: the band is
// empty, nothing to emphasize.
inline void attach_weights(Sample& s, const Shape3& dims, const Spacing& spacing,
                           const LossConfig& loss) {
    if (!loss.boundary_weighting) return;
    std::size_t fg = 0;
    for (auto v : s.y) fg += v;
    LabelMap m;
    m.dim = dims;
    m.spacing = spacing;
    m.data = s.y;
    if (fg == 0 || fg == s.y.size()) {
        s.w.dim = dims;
        s.w.spacing = spacing;
        s.w.w1 = loss.w1;
        s.w.w2 = loss.w2;
        s.w.kernel = loss.kernel;
        s.w.data.assign(s.y.size(), 0.0f);
    } else {
        s.w = weight_map(m, loss.w1, loss.w2, loss.kernel);
    }
    s.has_w = true;
}

inline Sample make_sample(const Volume& v, const LabelMap& y, const Shape3& target,
                          const TrainConfig& cfg, RngStream* aug_rng) {
    Volume vv = v;
    LabelMap yy = y;
    if (cfg.augment_enabled && aug_rng) {
        auto a = augment_sample(vv, yy, cfg.augment, *aug_rng);
        vv = std::move(a.first);
        yy = std::move(a.second);
    }
    vv = crop_or_pad(vv, target);
    yy = crop_or_pad(yy, target);
    Sample s;
    s.x = volume_to_tensor<float>(vv);
    s.y = std::move(yy.data);
    attach_weights(s, target, vv.spacing, cfg.loss);
    return s;
}

}  // namespace traindetail

// One optimizer pass over a batch already assembled into samples of equal
// dims. Returns the batch loss (mean of per-sample losses).
inline double train_step(UNet<float>& net, Optimizer<float>& opt, const TrainConfig& cfg,
                         std::vector<traindetail::Sample>& batch) {
    int b = static_cast<int>(batch.size());
    const Tensor<float>& first = batch.front().x;
    Tensor<float> x(b, 1, first.x, first.y, first.z);
    std::size_t vox = x.voxels();
    for (int i = 0; i < b; ++i)
        std::copy(batch[i].x.data.begin(), batch[i].x.data.end(), x.slab(i, 0));
    const Tensor<float>& probs = net.forward(x, true);
    Tensor<float> dldp(b, 1, first.x, first.y, first.z);
    std::vector<double> losses(b);
    for (int i = 0; i < b; ++i) {
        const traindetail::Sample& s = batch[i];
        auto lr = composite_loss(probs.slab(i, 0), s.y.data(), vox, cfg.loss,
                                 s.has_w ? &s.w : nullptr);
        losses[i] = lr.value;
        float inv_b = 1.0f / static_cast<float>(b);
        float* g = dldp.slab(i, 0);
        for (std::size_t j = 0; j < vox; ++j) g[j] = lr.grad[j] * inv_b;
    }
    net.zero_grad();
    net.backward(dldp);
    opt.step(net.params());
    return pairwise_mean(losses);
}

// Mean validation Dice at threshold 0.5 over every labeled frame, evaluated
// in the padded inference grid without component post-processing.
inline double validation_dice(UNet<float>& net, const std::vector<BoldSeries>& val_set,
                              const Shape3& target) {
    std::vector<double> dices;
    for (const auto& series : val_set)
        for (const auto& [t, label] : series.labels) {
            Volume v = crop_or_pad(series.frames[t], target);
            LabelMap y = crop_or_pad(label, target);
            Tensor<float> in = volume_to_tensor<float>(v);
            const Tensor<float>& probs = net.forward(in, false);
            LabelMap pred;
            pred.dim = target;
            pred.spacing = v.spacing;
            pred.data.resize(target.size());
            for (std::size_t i = 0; i < pred.data.size(); ++i)
                pred.data[i] = probs.data[i] > 0.5f ? 1 : 0;
            dices.push_back(dice(y, pred));
        }
    require(!dices.empty(), ErrKind::precondition, "validation set has no labeled frames");
    return pairwise_mean(dices);
}

// Epoch regimen: one uniformly drawn labeled frame per training subject,
// optional augmentation, fixed-size batches in shuffled subject order, Adam or
// SGD steps, validation Dice tracking with best-epoch checkpointing.
inline TrainResult train(const std::vector<BoldSeries>& train_set,
                         const std::vector<BoldSeries>& val_set, const TrainConfig& cfg,
                         std::ostream* progress = nullptr) {
    cfg.validate();
    require(!train_set.empty(), ErrKind::precondition, "train: empty training set");
    require(!val_set.empty(), ErrKind::precondition, "train: empty validation set");
    for (std::size_t i = 0; i < train_set.size(); ++i)
        require(!train_set[i].labels.empty(), ErrKind::precondition, "train: training series ", i,
                " has zero labeled frames");

    Shape3 target = cfg.target_dims;
    if (target.nx == 0) target = train_set.front().frames.front().dim;
    int m = cfg.unet.divisor();
    require(target.nx % m == 0 && target.ny % m == 0 && target.nz % m == 0, ErrKind::bad_config,
            "train: dims ", target.str(), " not divisible by the network factor ", m);

    RngStream root(cfg.seed);
    UNet<float> net(cfg.unet);
    net.init(root.fork(0).seed());
    Optimizer<float> opt(cfg.optimizer, cfg.learning_rate);

    // Per-subject labeled frame indices, fixed order.
    std::vector<std::vector<int>> label_keys(train_set.size());
    for (std::size_t s = 0; s < train_set.size(); ++s)
        for (const auto& [t, lbl] : train_set[s].labels) label_keys[s].push_back(t);

    TrainHistory hist;
    std::vector<std::vector<float>> best_params;
    std::vector<std::vector<float>> best_buffers;

    int n_subj = static_cast<int>(train_set.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        RngStream er = root.fork(static_cast<std::uint64_t>(epoch) + 1);
        std::vector<int> order(n_subj);
        for (int i = 0; i < n_subj; ++i) order[i] = i;
        for (int i = n_subj - 1; i > 0; --i) std::swap(order[i], order[er.uniform_int(0, i)]);

        std::vector<traindetail::Sample> batch;
        double loss_sum = 0.0;
        int n_samples = 0;
        for (int k = 0; k < n_subj; ++k) {
            int s = order[k];
            const auto& keys = label_keys[s];
            int pick = keys[static_cast<std::size_t>(
                er.uniform_int(0, static_cast<int>(keys.size()) - 1))];
            RngStream aug = er.fork(0x5000 + static_cast<std::uint64_t>(s));
            const BoldSeries& ser = train_set[static_cast<std::size_t>(s)];
            batch.push_back(traindetail::make_sample(ser.frames[pick], ser.labels.at(pick),
                                                     target, cfg, &aug));
            if (static_cast<int>(batch.size()) == cfg.batch_size || k == n_subj - 1) {
                double l = train_step(net, opt, cfg, batch);
                loss_sum += l * static_cast<double>(batch.size());
                n_samples += static_cast<int>(batch.size());
                batch.clear();
            }
        }
        hist.train_loss.push_back(loss_sum / n_samples);
        double vd = validation_dice(net, val_set, target);
        hist.val_dice.push_back(vd);
        if (vd > hist.best_val_dice) {
            hist.best_val_dice = vd;
            hist.best_epoch = epoch;
            best_params.clear();
            for (const auto& p : net.params()) best_params.push_back(*p.value);
            best_buffers.clear();
            for (const auto& b : net.buffers()) best_buffers.push_back(*b.value);
        }
        if (progress)
            (*progress) << "epoch " << epoch << " loss " << hist.train_loss.back() << " val_dice "
                        << vd << "\n";
    }

    for (std::size_t i = 0; i < net.params().size(); ++i) *net.params()[i].value = best_params[i];
    for (std::size_t i = 0; i < net.buffers().size(); ++i)
        *net.buffers()[i].value = best_buffers[i];
    return TrainResult{std::move(net), std::move(hist)};
}

}  // namespace boldseg
