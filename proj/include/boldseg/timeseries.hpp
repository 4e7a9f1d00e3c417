#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "boldseg/core.hpp"
#include "boldseg/metrics.hpp"
#include "boldseg/series.hpp"

namespace boldseg {

// One analyzed frame: mask plus the empty-prediction flag from segmentation.
struct FramePrediction {
    int frame_index = 0;
    LabelMap mask;
    bool empty = false;
};

struct SummaryStats {
    double mean = 0.0;
    double sd = 0.0;      // sample sd (n-1); 0 when n == 1
    double median = 0.0;  // nearest-rank, consistent with the percentile rule
    int count = 0;
};

inline std::optional<SummaryStats> summarize(std::vector<double> vals) {
    if (vals.empty()) return std::nullopt;
    SummaryStats s;
    s.count = static_cast<int>(vals.size());
    s.mean = pairwise_mean(vals);
    if (vals.size() > 1) {
        std::vector<double> sq(vals.size());
        for (std::size_t i = 0; i < vals.size(); ++i) {
            double d = vals[i] - s.mean;
            sq[i] = d * d;
        }
        s.sd = std::sqrt(pairwise_sum(sq) / static_cast<double>(vals.size() - 1));
    }
    std::sort(vals.begin(), vals.end());
    s.median = percentile_nearest_rank_sorted(vals, 0.5);
    return s;
}

struct ConsistencyPair {
    int frame_a = 0, frame_b = 0;
    bool skipped = false;
    std::string skip_reason;
    double dice = 0.0;
    std::optional<double> hd95_mm;
    std::optional<double> assd_mm;
    std::optional<double> bold_diff;  // |b_{t+1} - b_t| / b_t, each frame's own mask
};

struct ConsistencyReport {
    std::vector<ConsistencyPair> pairs;  // one per consecutive analyzed pair
    std::optional<SummaryStats> dice_stats, hd95_stats, assd_stats, bold_diff_stats;
};

namespace tsdetail {

inline void check_predictions(const BoldSeries& series,
                              const std::vector<FramePrediction>& preds) {
    int prev = -1;
    for (const auto& p : preds) {
        require(p.frame_index > prev, ErrKind::precondition,
                "predictions must be sorted by frame index without duplicates");
        require(p.frame_index < series.frame_count(), ErrKind::precondition, "prediction index ",
                p.frame_index, " out of range for ", series.frame_count(), " frames");
        check_same_grid(p.mask.dim, series.frames.front().dim, "prediction mask");
        prev = p.frame_index;
    }
}

}  // namespace tsdetail

// Metrics between each pair of consecutive analyzed frames. Pairs touching an
// empty prediction are recorded as skipped, never folded into the summaries
// as zeros.
inline ConsistencyReport consistency(const BoldSeries& series,
                                     const std::vector<FramePrediction>& preds) {
    require(preds.size() >= 2, ErrKind::precondition, "consistency: need at least 2 predictions");
    tsdetail::check_predictions(series, preds);
    ConsistencyReport rep;
    std::vector<double> dices, hds, assds, bolds;
    for (std::size_t i = 0; i + 1 < preds.size(); ++i) {
        const FramePrediction& a = preds[i];
        const FramePrediction& b = preds[i + 1];
        ConsistencyPair pair;
        pair.frame_a = a.frame_index;
        pair.frame_b = b.frame_index;
        if (a.empty || a.mask.foreground_count() == 0 || b.empty ||
            b.mask.foreground_count() == 0) {
            pair.skipped = true;
            pair.skip_reason = kFlagEmptyPrediction;
            rep.pairs.push_back(std::move(pair));
            continue;
        }
        pair.dice = dice(a.mask, b.mask);
        dices.push_back(pair.dice);
        std::size_t total = a.mask.data.size();
        if (a.mask.foreground_count() < total && b.mask.foreground_count() < total) {
            const Spacing& sp = series.frames.front().spacing;
            pair.hd95_mm = hd95(a.mask, b.mask, sp);
            pair.assd_mm = assd(a.mask, b.mask, sp);
            hds.push_back(*pair.hd95_mm);
            assds.push_back(*pair.assd_mm);
        }
        double ba = mean_masked_signal(series.frames[a.frame_index], a.mask);
        if (ba != 0.0) {
            double bb = mean_masked_signal(series.frames[b.frame_index], b.mask);
            pair.bold_diff = std::abs(bb - ba) / std::abs(ba);
            bolds.push_back(*pair.bold_diff);
        }
        rep.pairs.push_back(std::move(pair));
    }
    rep.dice_stats = summarize(std::move(dices));
    rep.hd95_stats = summarize(std::move(hds));
    rep.assd_stats = summarize(std::move(assds));
    rep.bold_diff_stats = summarize(std::move(bolds));
    return rep;
}

struct TracePoint {
    int frame_index = 0;
    Phase phase = Phase::normoxic;
    std::optional<double> mean_signal;  // set only for analyzed, non-empty frames
};

struct OxygenationReport {
    double b_n = 0.0;      // mean of baseline per-frame masked means
    double b_h = 0.0;      // mean over the last `window` analyzed hyperoxic frames
    double delta_b = 0.0;  // |b_h - b_n| / b_n
    int window = 10;
    std::vector<TracePoint> trace;  // one entry per series frame
    std::vector<std::string> notes;
};

// Hyperoxia response from analyzed frames. Baseline = analyzed normoxic
// frames; plateau = last `window` analyzed hyperoxic frames. Empty-prediction
// frames count as gaps.
inline OxygenationReport oxygenation_response(const BoldSeries& series,
                                              const std::vector<FramePrediction>& preds,
                                              int window = 10) {
    require(window >= 1, ErrKind::bad_config, "oxygenation_response: window must be >= 1");
    require(!preds.empty(), ErrKind::precondition, "oxygenation_response: no predictions");
    tsdetail::check_predictions(series, preds);

    OxygenationReport rep;
    rep.window = window;
    rep.trace.resize(series.frame_count());
    for (int t = 0; t < series.frame_count(); ++t) {
        rep.trace[t].frame_index = t;
        rep.trace[t].phase = series.phases[t];
    }

    std::vector<double> baseline;
    std::vector<std::size_t> hyper_idx;  // indices into preds
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const FramePrediction& p = preds[i];
        bool valid = !p.empty && p.mask.foreground_count() > 0;
        if (valid) {
            double m = mean_masked_signal(series.frames[p.frame_index], p.mask);
            rep.trace[p.frame_index].mean_signal = m;
        }
        Phase ph = series.phases[p.frame_index];
        if (ph == Phase::normoxic && valid) baseline.push_back(*rep.trace[p.frame_index].mean_signal);
        if (ph == Phase::hyperoxic) hyper_idx.push_back(i);
    }
    require(!baseline.empty(), ErrKind::precondition,
            "oxygenation_response: no valid analyzed baseline frames");
    require(static_cast<int>(hyper_idx.size()) >= window, ErrKind::precondition,
            "oxygenation_response: hyperoxic run has only ", hyper_idx.size(),
            " analyzed frames, fewer than the ", window,
            "-frame window; rerun with a smaller --window");

    std::vector<double> plateau;
    int gaps = 0;
    for (std::size_t k = hyper_idx.size() - static_cast<std::size_t>(window);
         k < hyper_idx.size(); ++k) {
        const FramePrediction& p = preds[hyper_idx[k]];
        if (rep.trace[p.frame_index].mean_signal)
            plateau.push_back(*rep.trace[p.frame_index].mean_signal);
        else
            ++gaps;
    }
    if (gaps > 0) rep.notes.push_back(cat(gaps, " empty-prediction gaps in the plateau window"));
    require(!plateau.empty(), ErrKind::precondition,
            "oxygenation_response: every frame in the plateau window is an empty prediction");

    rep.b_n = pairwise_mean(baseline);
    rep.b_h = pairwise_mean(plateau);
    require(rep.b_n != 0.0, ErrKind::bad_data, "oxygenation_response: baseline signal is zero");
    rep.delta_b = std::abs(rep.b_h - rep.b_n) / std::abs(rep.b_n);
    return rep;
}

struct LabeledFrameMetrics {
    std::string subject_id;
    int frame_index = 0;
    Phase phase = Phase::normoxic;
    MetricReport report;
};

struct SensitivityEntry {
    std::string subject_id;
    std::optional<double> dice_diff;
    std::optional<double> hd95_diff;
    std::optional<double> assd_diff;
    std::optional<double> rel_bold_diff;
};

struct SensitivityReport {
    std::vector<SensitivityEntry> entries;
    std::vector<std::string> skipped_subjects;  // labels in only one phase
};

// Per-subject |metric_normoxic - metric_hyperoxic| with phase means when a
// phase holds several labeled frames. Return-phase labels do not enter.
inline SensitivityReport phase_sensitivity(const std::vector<LabeledFrameMetrics>& frames) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<const LabeledFrameMetrics*>> by_subject;
    for (const auto& f : frames) {
        if (!by_subject.count(f.subject_id)) order.push_back(f.subject_id);
        by_subject[f.subject_id].push_back(&f);
    }
    SensitivityReport rep;
    for (const auto& id : order) {
        std::vector<const MetricReport*> nor, hyp;
        for (const auto* f : by_subject[id]) {
            if (f->phase == Phase::normoxic) nor.push_back(&f->report);
            if (f->phase == Phase::hyperoxic) hyp.push_back(&f->report);
        }
        if (nor.empty() || hyp.empty()) {
            rep.skipped_subjects.push_back(id);
            continue;
        }
        auto phase_mean = [](const std::vector<const MetricReport*>& rs,
                             auto pick) -> std::optional<double> {
            std::vector<double> vals;
            for (const auto* r : rs) {
                auto v = pick(*r);
                if (v) vals.push_back(*v);
            }
            if (vals.empty()) return std::nullopt;
            return pairwise_mean(vals);
        };
        auto diff = [&](auto pick) -> std::optional<double> {
            auto a = phase_mean(nor, pick);
            auto b = phase_mean(hyp, pick);
            if (!a || !b) return std::nullopt;
            return std::abs(*a - *b);
        };
        SensitivityEntry e;
        e.subject_id = id;
        e.dice_diff = diff([](const MetricReport& r) { return std::optional<double>(r.dice); });
        e.hd95_diff = diff([](const MetricReport& r) { return r.hd95_mm; });
        e.assd_diff = diff([](const MetricReport& r) { return r.assd_mm; });
        e.rel_bold_diff = diff([](const MetricReport& r) { return r.rel_bold_error; });
        rep.entries.push_back(std::move(e));
    }
    return rep;
}

inline constexpr const char* kTraceCsvHeader = "frame,phase,mean_signal,dice_prev";

// Per-frame trace rows for plotting; dice_prev holds the consistency Dice of
// the pair ending at that frame.
inline std::string trace_csv(const OxygenationReport& oxy, const ConsistencyReport* consist) {
    std::map<int, double> dice_at;
    if (consist)
        for (const auto& p : consist->pairs)
            if (!p.skipped) dice_at[p.frame_b] = p.dice;
    std::ostringstream os;
    os << kTraceCsvHeader << '\n';
    for (const auto& t : oxy.trace) {
        os << t.frame_index << ',' << phase_name(t.phase) << ','
           << (t.mean_signal ? csvdetail::num(*t.mean_signal) : std::string()) << ',';
        auto it = dice_at.find(t.frame_index);
        if (it != dice_at.end()) os << csvdetail::num(it->second);
        os << '\n';
    }
    return os.str();
}

}  // namespace boldseg
