#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "boldseg/core.hpp"
#include "boldseg/distance.hpp"
#include "boldseg/volume.hpp"

namespace boldseg {

inline double dice(const LabelMap& y, const LabelMap& yhat) {
    require(y.dim == yhat.dim, ErrKind::precondition, "dice: dim mismatch ", y.dim.str(), " vs ",
            yhat.dim.str());
    std::uint64_t a = 0, b = 0, inter = 0;
    for (std::size_t i = 0; i < y.data.size(); ++i) {
        a += y.data[i];
        b += yhat.data[i];
        inter += static_cast<std::uint64_t>(y.data[i]) & yhat.data[i];
    }
    if (a == 0 && b == 0) return 1.0;
    if (a == 0 || b == 0) return 0.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
}

struct SurfaceDistances {
    std::vector<double> from_truth;  // each truth-surface voxel to the prediction surface, mm
    std::vector<double> from_pred;   // converse direction
};

// Directed surface-to-surface distances. Surfaces are foreground voxels with a
// 6-connected in-bounds background neighbor; distances are exact Euclidean
// between voxel centers in mm.
inline SurfaceDistances surface_distances(const LabelMap& y, const LabelMap& yhat,
                                          const Spacing& spacing) {
    require(y.dim == yhat.dim, ErrKind::precondition, "surface_distances: dim mismatch");
    check_positive_spacing(spacing);
    require(y.foreground_count() > 0, ErrKind::precondition,
            "surface_distances: truth mask is empty");
    require(yhat.foreground_count() > 0, ErrKind::precondition,
            "surface_distances: prediction mask is empty");
    std::vector<std::uint8_t> sy = boundary_voxels(y);
    std::vector<std::uint8_t> sp = boundary_voxels(yhat);
    require(std::find(sy.begin(), sy.end(), 1) != sy.end(), ErrKind::precondition,
            "surface_distances: truth mask has no boundary (covers the whole grid)");
    require(std::find(sp.begin(), sp.end(), 1) != sp.end(), ErrKind::precondition,
            "surface_distances: prediction mask has no boundary (covers the whole grid)");
    std::vector<double> dsq_to_pred =
        squared_distance_to_sites(sp, y.dim, spacing.sx, spacing.sy, spacing.sz);
    std::vector<double> dsq_to_truth =
        squared_distance_to_sites(sy, y.dim, spacing.sx, spacing.sy, spacing.sz);
    SurfaceDistances out;
    for (std::size_t i = 0; i < sy.size(); ++i)
        if (sy[i]) out.from_truth.push_back(std::sqrt(dsq_to_pred[i]));
    for (std::size_t i = 0; i < sp.size(); ++i)
        if (sp[i]) out.from_pred.push_back(std::sqrt(dsq_to_truth[i]));
    return out;
}

// 95th percentile (nearest rank) of the union of both directed multisets.
inline double hd95(const LabelMap& y, const LabelMap& yhat, const Spacing& spacing) {
    SurfaceDistances sd = surface_distances(y, yhat, spacing);
    std::vector<double> all;
    all.reserve(sd.from_truth.size() + sd.from_pred.size());
    all.insert(all.end(), sd.from_truth.begin(), sd.from_truth.end());
    all.insert(all.end(), sd.from_pred.begin(), sd.from_pred.end());
    std::sort(all.begin(), all.end());
    return percentile_nearest_rank_sorted(all, 0.95);
}

// Mean over the sorted union, so swapping the arguments reproduces the exact
// same summation order and assd(a, b) == assd(b, a) bitwise.
inline double assd(const LabelMap& y, const LabelMap& yhat, const Spacing& spacing) {
    SurfaceDistances sd = surface_distances(y, yhat, spacing);
    std::vector<double> all;
    all.reserve(sd.from_truth.size() + sd.from_pred.size());
    all.insert(all.end(), sd.from_truth.begin(), sd.from_truth.end());
    all.insert(all.end(), sd.from_pred.begin(), sd.from_pred.end());
    std::sort(all.begin(), all.end());
    return pairwise_mean(all);
}

// Mean intensity over mask voxels in scan order.
inline double mean_masked_signal(const Volume& v, const LabelMap& mask) {
    check_same_grid(v, mask);
    std::vector<double> vals;
    for (std::size_t i = 0; i < mask.data.size(); ++i)
        if (mask.data[i]) vals.push_back(static_cast<double>(v.data[i]));
    require(!vals.empty(), ErrKind::precondition, "mean_masked_signal: empty mask");
    return pairwise_mean(vals);
}

// |mean(v over prediction) - mean(v over truth)| / mean(v over truth).
inline double rel_bold_error(const Volume& v, const LabelMap& y, const LabelMap& yhat) {
    check_same_grid(v, y);
    check_same_grid(v, yhat);
    require(y.foreground_count() > 0, ErrKind::precondition, "rel_bold_error: truth mask is empty");
    require(yhat.foreground_count() > 0, ErrKind::precondition,
            "rel_bold_error: prediction mask is empty");
    double b = mean_masked_signal(v, y);
    require(b != 0.0, ErrKind::bad_data, "rel_bold_error: mean truth signal is zero");
    double bh = mean_masked_signal(v, yhat);
    return std::abs(bh - b) / std::abs(b);
}

// Flags used for nullable metric fields.
inline constexpr const char* kFlagEmptyPrediction = "empty_prediction";
inline constexpr const char* kFlagEmptyTruth = "empty_truth";
inline constexpr const char* kFlagZeroBaseline = "zero_baseline_signal";
inline constexpr const char* kFlagDegenerateSurface = "degenerate_surface";

struct MetricReport {
    std::uint64_t truth_count = 0;
    std::uint64_t pred_count = 0;
    std::uint64_t intersection_count = 0;
    double dice = 0.0;
    std::optional<double> hd95_mm;
    std::optional<double> assd_mm;
    std::optional<double> rel_bold_error;
    std::vector<std::string> flags;

    bool has_flag(const std::string& f) const {
        return std::find(flags.begin(), flags.end(), f) != flags.end();
    }
};

// All metrics for one (volume, truth, prediction) triplet. Uncomputable
// metrics stay null and the reason lands in flags; nothing is encoded as a
// sentinel zero.
inline MetricReport evaluate_pair(const Volume& v, const LabelMap& y, const LabelMap& yhat) {
    check_same_grid(v, y);
    check_same_grid(v, yhat);
    MetricReport r;
    for (std::size_t i = 0; i < y.data.size(); ++i) {
        r.truth_count += y.data[i];
        r.pred_count += yhat.data[i];
        r.intersection_count += static_cast<std::uint64_t>(y.data[i]) & yhat.data[i];
    }
    r.dice = dice(y, yhat);
    if (r.truth_count == 0) r.flags.push_back(kFlagEmptyTruth);
    if (r.pred_count == 0) r.flags.push_back(kFlagEmptyPrediction);
    if (r.truth_count > 0 && r.pred_count > 0) {
        std::size_t total = y.data.size();
        if (r.truth_count == total || r.pred_count == total) {
            r.flags.push_back(kFlagDegenerateSurface);
        } else {
            SurfaceDistances sd = surface_distances(y, yhat, v.spacing);
            std::vector<double> all;
            all.reserve(sd.from_truth.size() + sd.from_pred.size());
            all.insert(all.end(), sd.from_truth.begin(), sd.from_truth.end());
            all.insert(all.end(), sd.from_pred.begin(), sd.from_pred.end());
            std::sort(all.begin(), all.end());
            r.assd_mm = pairwise_mean(all);
            r.hd95_mm = percentile_nearest_rank_sorted(all, 0.95);
        }
        double b = mean_masked_signal(v, y);
        if (b == 0.0)
            r.flags.push_back(kFlagZeroBaseline);
        else
            r.rel_bold_error = std::abs(mean_masked_signal(v, yhat) - b) / std::abs(b);
    }
    return r;
}

inline constexpr const char* kMetricCsvHeader =
    "subject_id,frame_index,phase,dice,hd95_mm,assd_mm,rel_bold_error,flags";

namespace csvdetail {

inline std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

inline std::string join_flags(const std::vector<std::string>& flags) {
    std::string s;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        if (i) s += ';';
        s += flags[i];
    }
    return s;
}

}  // namespace csvdetail

inline std::string metric_csv_row(const std::string& subject_id, int frame_index,
                                  const std::string& phase, const MetricReport& r) {
    std::ostringstream os;
    os << subject_id << ',' << frame_index << ',' << phase << ',' << csvdetail::num(r.dice) << ','
       << csvdetail::opt(r.hd95_mm) << ',' << csvdetail::opt(r.assd_mm) << ','
       << csvdetail::opt(r.rel_bold_error) << ',' << csvdetail::join_flags(r.flags);
    return os.str();
}

}  // namespace boldseg
