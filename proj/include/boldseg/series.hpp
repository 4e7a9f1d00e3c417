#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "boldseg/volume.hpp"

namespace boldseg {

// Oxygenation phase of one frame. Wire strings: "normoxic", "hyperoxic", "return".
enum class Phase { normoxic, hyperoxic, return_normoxic };

inline const char* phase_name(Phase p) {
    switch (p) {
        case Phase::normoxic: return "normoxic";
        case Phase::hyperoxic: return "hyperoxic";
        case Phase::return_normoxic: return "return";
    }
    return "?";
}

inline Phase phase_from_name(const std::string& s) {
    if (s == "normoxic") return Phase::normoxic;
    if (s == "hyperoxic") return Phase::hyperoxic;
    if (s == "return") return Phase::return_normoxic;
    fail(ErrKind::bad_data, "unknown phase tag '", s, "'");
}

// An ordered BOLD time series: frames share grid and spacing, phases run
// normoxic -> hyperoxic -> return, and a sparse subset of frames carries
// ground-truth labels.
struct BoldSeries {
    std::vector<Volume> frames;
    std::vector<Phase> phases;
    std::map<int, LabelMap> labels;  // frame index -> mask

    BoldSeries() = default;

    // hyper_start: first hyperoxic frame; return_start: first return frame
    // (== frame count when the series ends while hyperoxic).
    BoldSeries(std::vector<Volume> f, int hyper_start, int return_start,
               std::map<int, LabelMap> lbl)
        : frames(std::move(f)), labels(std::move(lbl)) {
        int t = static_cast<int>(frames.size());
        require(t > 0, ErrKind::precondition, "BoldSeries: no frames");
        require(0 < hyper_start && hyper_start <= return_start && return_start <= t,
                ErrKind::precondition, "BoldSeries: phase boundaries (", hyper_start, ", ",
                return_start, ") invalid for ", t, " frames");
        phases.resize(frames.size());
        for (int i = 0; i < t; ++i)
            phases[i] = i < hyper_start ? Phase::normoxic
                        : i < return_start ? Phase::hyperoxic
                                           : Phase::return_normoxic;
        validate();
    }

    int frame_count() const { return static_cast<int>(frames.size()); }

    int hyperoxic_start() const {
        for (int i = 0; i < frame_count(); ++i)
            if (phases[i] == Phase::hyperoxic) return i;
        return frame_count();
    }
    int return_start() const {
        for (int i = 0; i < frame_count(); ++i)
            if (phases[i] == Phase::return_normoxic) return i;
        return frame_count();
    }

    void validate() const {
        require(!frames.empty(), ErrKind::precondition, "BoldSeries: no frames");
        require(phases.size() == frames.size(), ErrKind::precondition,
                "BoldSeries: phase tag count mismatch");
        const Shape3& d = frames.front().dim;
        const Spacing& s = frames.front().spacing;
        for (const auto& f : frames) {
            check_same_grid(f.dim, d, "BoldSeries frames");
            require(f.spacing == s, ErrKind::precondition, "BoldSeries: frame spacing mismatch");
        }
        // Phases must form contiguous runs in protocol order.
        int stage = 0;
        for (Phase p : phases) {
            int k = p == Phase::normoxic ? 0 : p == Phase::hyperoxic ? 1 : 2;
            require(k >= stage, ErrKind::precondition,
                    "BoldSeries: phase tags out of order (normoxic -> hyperoxic -> return)");
            stage = k;
        }
        for (const auto& [idx, lbl] : labels) {
            require(idx >= 0 && idx < frame_count(), ErrKind::precondition,
                    "BoldSeries: labeled index ", idx, " out of range");
            check_same_grid(lbl.dim, d, "BoldSeries label");
        }
    }
};

}  // namespace boldseg
