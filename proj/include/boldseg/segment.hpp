#pragma once

#include <utility>
#include <vector>

#include "boldseg/components.hpp"
#include "boldseg/core.hpp"
#include "boldseg/preprocess.hpp"
#include "boldseg/series.hpp"
#include "boldseg/tensor.hpp"
#include "boldseg/timeseries.hpp"
#include "boldseg/unet.hpp"
#include "boldseg/volume.hpp"

namespace boldseg {

inline int round_up_multiple(int v, int m) { return ((v + m - 1) / m) * m; }

// Smallest grid >= dims whose axes divide the network's pooling factor.
inline Shape3 inference_dims(const Shape3& d, const UNetConfig& cfg) {
    int m = cfg.divisor();
    return Shape3{round_up_multiple(d.nx, m), round_up_multiple(d.ny, m),
                  round_up_multiple(d.nz, m)};
}

struct SegmentResult {
    LabelMap mask;
    bool empty_prediction = false;
};

template <class T>
Tensor<T> volume_to_tensor(const Volume& v) {
    Tensor<T> t(1, 1, v.dim.nx, v.dim.ny, v.dim.nz);
    for (std::size_t i = 0; i < v.data.size(); ++i) t.data[i] = static_cast<T>(v.data[i]);
    return t;
}

// Eval-mode inference: pad to a divisible grid, threshold at 0.5 (strictly
// greater), keep the largest 26-connected component, restore original dims.
template <class T>
SegmentResult segment(UNet<T>& net, const Volume& v) {
    Shape3 target = inference_dims(v.dim, net.config());
    Volume padded = crop_or_pad(v, target);
    Tensor<T> in = volume_to_tensor<T>(padded);
    const Tensor<T>& probs = net.forward(in, false);
    LabelMap mask;
    mask.dim = target;
    mask.spacing = v.spacing;
    mask.data.resize(target.size());
    for (std::size_t i = 0; i < mask.data.size(); ++i)
        mask.data[i] = probs.data[i] > T(0.5) ? 1 : 0;
    if (mask.foreground_count() > 0) mask = largest_component_26(mask);
    mask = crop_or_pad(mask, v.dim);
    SegmentResult r;
    r.empty_prediction = mask.foreground_count() == 0;
    r.mask = std::move(mask);
    return r;
}

// Independent per-frame segmentation at indices 0, stride, 2*stride, ...
template <class T>
std::vector<FramePrediction> segment_series(UNet<T>& net, const BoldSeries& series, int stride) {
    require(stride >= 1, ErrKind::precondition, "segment_series: stride must be >= 1");
    std::vector<FramePrediction> preds;
    for (int t = 0; t < series.frame_count(); t += stride) {
        SegmentResult r = segment(net, series.frames[t]);
        FramePrediction p;
        p.frame_index = t;
        p.mask = std::move(r.mask);
        p.empty = r.empty_prediction;
        preds.push_back(std::move(p));
    }
    return preds;
}

}  // namespace boldseg
