#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "boldseg/augment.hpp"
#include "boldseg/core.hpp"
#include "boldseg/rng.hpp"
#include "boldseg/series.hpp"
#include "boldseg/volume.hpp"

namespace boldseg {

// Synthetic subject: a superellipsoid "placenta" over textured background,
// with a hyperoxia intensity ramp and optional per-frame elastic motion.
struct PhantomConfig {
    Shape3 dims{48, 48, 32};
    Spacing spacing{3.0, 3.0, 3.0};
    std::array<double, 3> center{23.5, 23.5, 15.5};  // voxel coordinates
    std::array<double, 3> semi_axes{14.0, 11.0, 7.0};
    double exponent = 3.0;
    double background_level = 30.0;
    double texture_amplitude = 10.0;
    double texture_correlation_vox = 2.0;
    double baseline_intensity = 100.0;
    double ramp_target = 0.10;  // fractional increase at plateau
    int ramp_start = 20;
    int ramp_end = 30;
    double noise_sigma = 0.0;
    double motion_amplitude = 0.0;        // control-point displacement bound, voxels
    std::vector<double> motion_schedule;  // optional per-frame override, length T
    int motion_control_points = 5;
    int frame_count = 60;
    int hyperoxic_start = 20;
    int return_start = 50;
    double min_margin_vox = 6.0;
    std::uint64_t seed = 1;

    double motion_at(int t) const {
        if (!motion_schedule.empty()) return motion_schedule[static_cast<std::size_t>(t)];
        return motion_amplitude;
    }
    double max_motion() const {
        double m = motion_amplitude;
        for (double v : motion_schedule) m = std::max(m, v);
        return motion_schedule.empty() ? motion_amplitude : m;
    }

    void validate() const {
        check_positive_dims(dims);
        check_positive_spacing(spacing);
        require(frame_count >= 1, ErrKind::bad_config, "phantom: frame_count must be >= 1");
        require(hyperoxic_start > 0 && hyperoxic_start <= return_start &&
                    return_start <= frame_count,
                ErrKind::bad_config, "phantom: need 0 < hyperoxic_start <= return_start <= T");
        require(ramp_start >= hyperoxic_start && ramp_end >= ramp_start &&
                    ramp_end <= return_start,
                ErrKind::bad_config,
                "phantom: ramp window must lie inside the hyperoxic phase");
        require(ramp_target >= 0 && std::isfinite(ramp_target), ErrKind::bad_config,
                "phantom: ramp_target must be >= 0");
        require(exponent > 0, ErrKind::bad_config, "phantom: exponent must be > 0");
        require(noise_sigma >= 0 && texture_amplitude >= 0 && texture_correlation_vox >= 0,
                ErrKind::bad_config, "phantom: amplitudes must be >= 0");
        require(motion_amplitude >= 0, ErrKind::bad_config, "phantom: motion must be >= 0");
        require(motion_schedule.empty() ||
                    motion_schedule.size() == static_cast<std::size_t>(frame_count),
                ErrKind::bad_config, "phantom: motion_schedule length must equal frame_count");
        for (double v : motion_schedule)
            require(v >= 0, ErrKind::bad_config, "phantom: motion_schedule entries must be >= 0");
        require(motion_control_points >= 2, ErrKind::bad_config,
                "phantom: motion_control_points must be >= 2");
        require(min_margin_vox >= 0, ErrKind::bad_config, "phantom: min_margin_vox must be >= 0");
        double m = max_motion();
        int n[3] = {dims.nx, dims.ny, dims.nz};
        for (int a = 0; a < 3; ++a) {
            require(semi_axes[a] > 0, ErrKind::bad_config, "phantom: semi_axes must be > 0");
            double lo = center[a] - semi_axes[a] - m;
            double hi = center[a] + semi_axes[a] + m;
            require(lo >= min_margin_vox && hi <= n[a] - 1 - min_margin_vox, ErrKind::bad_config,
                    "phantom: shape escapes the grid on axis ", a, " (extent [", lo, ", ", hi,
                    "] with margin ", min_margin_vox, ")");
        }
    }
};

namespace phantomdetail {

constexpr std::uint64_t kSaltTexture = 0x7e87;
constexpr std::uint64_t kSaltMotion = 0x3a0000;
constexpr std::uint64_t kSaltNoise = 0x9c0000;
constexpr std::uint64_t kSaltSubject = 0x5b0000;

// Separable Gaussian blur with border renormalization.
inline void gaussian_smooth(std::vector<float>& f, const Shape3& d, double sigma) {
    if (sigma <= 0) return;
    int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> w(2 * r + 1);
    for (int i = -r; i <= r; ++i) w[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    std::vector<float> tmp(f.size());
    int n[3] = {d.nx, d.ny, d.nz};
    long stride[3] = {1, d.nx, static_cast<long>(d.nx) * d.ny};
    for (int axis = 0; axis < 3; ++axis) {
        int len = n[axis];
        long st = stride[axis];
        for (int z = 0; z < (axis == 2 ? 1 : d.nz); ++z)
            for (int y = 0; y < (axis == 1 ? 1 : d.ny); ++y)
                for (int x = 0; x < (axis == 0 ? 1 : d.nx); ++x) {
                    long base = x + static_cast<long>(d.nx) * (y + static_cast<long>(d.ny) * z);
                    for (int i = 0; i < len; ++i) {
                        double acc = 0, wsum = 0;
                        for (int k = -r; k <= r; ++k) {
                            int j = i + k;
                            if (j < 0 || j >= len) continue;
                            acc += w[k + r] * f[base + j * st];
                            wsum += w[k + r];
                        }
                        tmp[base + i * st] = static_cast<float>(acc / wsum);
                    }
                }
        f = tmp;
    }
}

}  // namespace phantomdetail

// Precomputes the per-series background texture and derives per-frame motion
// fields so frames can be generated independently (and in parallel).
class PhantomSampler {
  public:
    explicit PhantomSampler(const PhantomConfig& cfg) : cfg_(cfg) {
        cfg.validate();
        texture_.assign(cfg.dims.size(), static_cast<float>(cfg.background_level));
        if (cfg.texture_amplitude > 0) {
            RngStream rng = RngStream(cfg.seed).fork(phantomdetail::kSaltTexture);
            std::vector<float> noise(cfg.dims.size());
            for (auto& v : noise) v = static_cast<float>(rng.normal());
            phantomdetail::gaussian_smooth(noise, cfg.dims, cfg.texture_correlation_vox);
            for (std::size_t i = 0; i < texture_.size(); ++i)
                texture_[i] = static_cast<float>(cfg.background_level +
                                                 cfg.texture_amplitude * noise[i]);
        }
    }

    const PhantomConfig& config() const { return cfg_; }

    double ramp_at(int t) const {
        if (t < cfg_.ramp_start) return 0.0;
        if (t < cfg_.ramp_end) {
            double rise = cfg_.ramp_end - cfg_.ramp_start;
            return cfg_.ramp_target * (t - cfg_.ramp_start) / rise;
        }
        if (t < cfg_.return_start) return cfg_.ramp_target;
        double fall = std::max(1, cfg_.ramp_end - cfg_.ramp_start);
        double v = cfg_.ramp_target * (1.0 - (t - cfg_.return_start) / fall);
        return std::max(0.0, v);
    }

    bool inside_shape(double x, double y, double z) const {
        double s = std::pow(std::abs((x - cfg_.center[0]) / cfg_.semi_axes[0]), cfg_.exponent) +
                   std::pow(std::abs((y - cfg_.center[1]) / cfg_.semi_axes[1]), cfg_.exponent) +
                   std::pow(std::abs((z - cfg_.center[2]) / cfg_.semi_axes[2]), cfg_.exponent);
        return s <= 1.0;
    }

    // Frame motion as an elastic control grid seeded from (cfg.seed, t).
    ElasticField motion_field(int t) const {
        ElasticField f;
        f.ncp = cfg_.motion_control_points;
        f.linear = false;
        std::size_t n = static_cast<std::size_t>(f.ncp) * f.ncp * f.ncp;
        f.dx.assign(n, 0.0);
        f.dy.assign(n, 0.0);
        f.dz.assign(n, 0.0);
        double m = cfg_.motion_at(t);
        if (m <= 0) return f;
        RngStream rng = RngStream(cfg_.seed).fork(phantomdetail::kSaltMotion +
                                                  static_cast<std::uint64_t>(t));
        for (std::size_t i = 0; i < n; ++i) f.dx[i] = rng.uniform(-m, m);
        for (std::size_t i = 0; i < n; ++i) f.dy[i] = rng.uniform(-m, m);
        for (std::size_t i = 0; i < n; ++i) f.dz[i] = rng.uniform(-m, m);
        return f;
    }

    // Mask is the analytic inside-test at the elastically warped point, so the
    // placental intensity stays exactly constant per frame regardless of
    // motion. noise_rng is consumed only when noise_sigma > 0.
    std::pair<Volume, LabelMap> frame(int t, RngStream& noise_rng) const {
        require(t >= 0 && t < cfg_.frame_count, ErrKind::precondition, "phantom: frame ", t,
                " out of range [0, ", cfg_.frame_count, ")");
        Volume v;
        v.dim = cfg_.dims;
        v.spacing = cfg_.spacing;
        v.data.resize(cfg_.dims.size());
        LabelMap y;
        y.dim = cfg_.dims;
        y.spacing = cfg_.spacing;
        y.data.resize(cfg_.dims.size());
        bool moving = cfg_.motion_at(t) > 0;
        ElasticField f;
        if (moving) f = motion_field(t);
        double inside_val = cfg_.baseline_intensity * (1.0 + ramp_at(t));
        std::size_t i = 0;
        for (int z = 0; z < cfg_.dims.nz; ++z)
            for (int yy = 0; yy < cfg_.dims.ny; ++yy)
                for (int x = 0; x < cfg_.dims.nx; ++x, ++i) {
                    double qx = x, qy = yy, qz = z;
                    if (moving) {
                        auto d = elastic_displacement_at(f, cfg_.dims, x, yy, z);
                        qx += d[0];
                        qy += d[1];
                        qz += d[2];
                    }
                    bool in = inside_shape(qx, qy, qz);
                    y.data[i] = in ? 1 : 0;
                    v.data[i] = in ? static_cast<float>(inside_val) : texture_[i];
                }
        if (cfg_.noise_sigma > 0)
            for (auto& val : v.data)
                val = static_cast<float>(static_cast<double>(val) +
                                         noise_rng.normal(0.0, cfg_.noise_sigma));
        return {std::move(v), std::move(y)};
    }

  private:
    PhantomConfig cfg_;
    std::vector<float> texture_;
};

inline std::pair<Volume, LabelMap> make_phantom_frame(const PhantomConfig& cfg, int t,
                                                      RngStream& rng) {
    return PhantomSampler(cfg).frame(t, rng);
}

// Full series with a ground-truth label for every frame. Per-frame noise
// streams derive from (seed, t), so the series is reproducible frame-wise.
inline BoldSeries make_phantom_series(const PhantomConfig& cfg) {
    PhantomSampler sampler(cfg);
    std::vector<Volume> frames(cfg.frame_count);
    std::map<int, LabelMap> labels;
    for (int t = 0; t < cfg.frame_count; ++t) {
        RngStream rng = RngStream(cfg.seed).fork(phantomdetail::kSaltNoise +
                                                 static_cast<std::uint64_t>(t));
        auto fr = sampler.frame(t, rng);
        frames[t] = std::move(fr.first);
        labels.emplace(t, std::move(fr.second));
    }
    return BoldSeries(std::move(frames), cfg.hyperoxic_start, cfg.return_start,
                      std::move(labels));
}

enum class Split { train = 0, val = 1, test = 2 };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

struct PhantomSubject {
    std::string id;
    PhantomConfig cfg;
    Split split = Split::train;
    std::vector<int> labeled_frames;  // sorted, nonempty
};

struct PhantomDataset {
    std::vector<PhantomSubject> subjects;
};

namespace phantomdetail {

// Draw count distinct labeled frames from [0, return_start); when count >= 2
// force at least one normoxic and one hyperoxic index.
inline std::vector<int> draw_labeled_frames(const PhantomConfig& cfg, int count, RngStream& rng) {
    std::vector<int> picked;
    auto draw_in = [&](int lo, int hi) {
        for (;;) {
            int t = rng.uniform_int(lo, hi);
            if (std::find(picked.begin(), picked.end(), t) == picked.end()) return t;
        }
    };
    int last = cfg.return_start - 1;
    if (count >= 2 && cfg.hyperoxic_start >= 1 && cfg.hyperoxic_start <= last) {
        picked.push_back(draw_in(0, cfg.hyperoxic_start - 1));
        picked.push_back(draw_in(cfg.hyperoxic_start, last));
    }
    while (static_cast<int>(picked.size()) < count) picked.push_back(draw_in(0, last));
    std::sort(picked.begin(), picked.end());
    return picked;
}

}  // namespace phantomdetail

// n subjects with randomized shape/signal/motion around the base config,
// split 65/15/20 (floor for val and test, remainder to train). Training and
// validation subjects get 1..6 labeled frames spanning both phases; test
// subjects keep every frame labeled.
inline PhantomDataset make_dataset(int n_subjects, const PhantomConfig& base,
                                   std::uint64_t seed) {
    require(n_subjects >= 5, ErrKind::precondition, "make_dataset: need at least 5 subjects");
    base.validate();
    int n_val = static_cast<int>(std::floor(0.15 * n_subjects));
    int n_test = static_cast<int>(std::floor(0.20 * n_subjects));
    int n_train = n_subjects - n_val - n_test;
    RngStream root(seed);
    PhantomDataset ds;
    for (int i = 0; i < n_subjects; ++i) {
        RngStream rng = root.fork(phantomdetail::kSaltSubject + static_cast<std::uint64_t>(i));
        PhantomSubject s;
        s.id = cat("subj_", i < 10 ? "00" : (i < 100 ? "0" : ""), i);
        s.cfg = base;
        s.cfg.seed = rng.fork(0).seed();
        for (int a = 0; a < 3; ++a) s.cfg.center[a] = base.center[a] + rng.uniform(-1.5, 1.5);
        for (int a = 0; a < 3; ++a) s.cfg.semi_axes[a] = base.semi_axes[a] * rng.uniform(0.8, 1.2);
        s.cfg.exponent = rng.uniform(2.0, 4.0);
        s.cfg.baseline_intensity = base.baseline_intensity * rng.uniform(0.9, 1.1);
        s.cfg.background_level = base.background_level * rng.uniform(0.9, 1.1);
        s.cfg.motion_amplitude = base.motion_amplitude * rng.uniform(0.5, 1.5);
        double m = s.cfg.max_motion();
        int n[3] = {base.dims.nx, base.dims.ny, base.dims.nz};
        for (int a = 0; a < 3; ++a) {
            double room = std::min(s.cfg.center[a], n[a] - 1 - s.cfg.center[a]) -
                          s.cfg.min_margin_vox - m;
            require(room >= 1.0, ErrKind::bad_config,
                    "make_dataset: base config leaves no room for the shape on axis ", a);
            s.cfg.semi_axes[a] = std::min(s.cfg.semi_axes[a], room);
        }
        s.cfg.validate();
        if (i < n_train)
            s.split = Split::train;
        else if (i < n_train + n_val)
            s.split = Split::val;
        else
            s.split = Split::test;
        if (s.split == Split::test) {
            for (int t = 0; t < s.cfg.frame_count; ++t) s.labeled_frames.push_back(t);
        } else {
            int count = rng.uniform_int(1, 6);
            s.labeled_frames = phantomdetail::draw_labeled_frames(s.cfg, count, rng);
        }
        ds.subjects.push_back(std::move(s));
    }
    return ds;
}

// Series for one subject; train/val keep only the drawn labeled frames.
inline BoldSeries materialize_subject(const PhantomSubject& s) {
    BoldSeries full = make_phantom_series(s.cfg);
    if (s.split == Split::test) return full;
    std::map<int, LabelMap> keep;
    for (int t : s.labeled_frames) {
        auto it = full.labels.find(t);
        require(it != full.labels.end(), ErrKind::internal, "materialize_subject: missing label");
        keep.emplace(t, it->second);
    }
    return BoldSeries(std::move(full.frames), s.cfg.hyperoxic_start, s.cfg.return_start,
                      std::move(keep));
}

}  // namespace boldseg
