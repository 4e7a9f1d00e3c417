#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "boldseg/metrics.hpp"
#include "boldseg/rng.hpp"
#include "helpers.hpp"

using namespace boldseg;

namespace {

// Definition-level oracle: directed surface distances via brute force.
std::vector<double> oracle_union_distances(const LabelMap& y, const LabelMap& yhat,
                                           const Spacing& sp) {
    auto sy = boundary_voxels(y);
    auto sp_ = boundary_voxels(yhat);
    auto d_to_pred = testutil::brute_force_sqdist(sp_, y.dim, sp.sx, sp.sy, sp.sz);
    auto d_to_truth = testutil::brute_force_sqdist(sy, y.dim, sp.sx, sp.sy, sp.sz);
    std::vector<double> all;
    for (std::size_t i = 0; i < sy.size(); ++i)
        if (sy[i]) all.push_back(std::sqrt(d_to_pred[i]));
    for (std::size_t i = 0; i < sp_.size(); ++i)
        if (sp_[i]) all.push_back(std::sqrt(d_to_truth[i]));
    return all;
}

}  // namespace

TEST(Dice, EmptyMaskConventions) {
    Shape3 d{4, 4, 4};
    LabelMap empty(d, {1, 1, 1}, std::vector<std::uint8_t>(64, 0));
    LabelMap some = testutil::cuboid_mask(d, 0, 2, 0, 2, 0, 2);
    EXPECT_DOUBLE_EQ(dice(empty, empty), 1.0);
    EXPECT_DOUBLE_EQ(dice(empty, some), 0.0);
    EXPECT_DOUBLE_EQ(dice(some, empty), 0.0);
    EXPECT_DOUBLE_EQ(dice(some, some), 1.0);
}

TEST(Dice, ShiftedCubeIsExactlyHalf) {
    Shape3 d{10, 8, 8};
    LabelMap a = testutil::cuboid_mask(d, 1, 5, 2, 6, 2, 6);
    LabelMap b = testutil::cuboid_mask(d, 3, 7, 2, 6, 2, 6);
    EXPECT_DOUBLE_EQ(dice(a, b), 0.5);
}

TEST(Dice, SymmetricAndDisjointIsZero) {
    RngStream rng(901);
    LabelMap a = testutil::random_mask({7, 7, 7}, rng);
    LabelMap b = testutil::random_mask({7, 7, 7}, rng);
    EXPECT_DOUBLE_EQ(dice(a, b), dice(b, a));
    Shape3 d{8, 4, 4};
    LabelMap left = testutil::cuboid_mask(d, 0, 3, 0, 4, 0, 4);
    LabelMap right = testutil::cuboid_mask(d, 5, 8, 0, 4, 0, 4);
    EXPECT_DOUBLE_EQ(dice(left, right), 0.0);
}

TEST(SurfaceMetrics, ZeroOnIdenticalMasks) {
    LabelMap m = testutil::cuboid_mask({8, 8, 8}, 2, 6, 2, 6, 2, 6, {3.0, 3.0, 6.0});
    EXPECT_DOUBLE_EQ(hd95(m, m, m.spacing), 0.0);
    EXPECT_DOUBLE_EQ(assd(m, m, m.spacing), 0.0);
}

TEST(SurfaceMetrics, SingleVoxelPairHandValue) {
    Shape3 d{8, 3, 3};
    Spacing sp{2.0, 1.0, 1.0};
    LabelMap a = testutil::cuboid_mask(d, 1, 2, 1, 2, 1, 2, sp);
    LabelMap b = testutil::cuboid_mask(d, 4, 5, 1, 2, 1, 2, sp);
    // Surfaces are the voxels themselves, 3 voxels apart in x at 2 mm.
    EXPECT_DOUBLE_EQ(hd95(a, b, sp), 6.0);
    EXPECT_DOUBLE_EQ(assd(a, b, sp), 6.0);
}

TEST(SurfaceMetrics, SymmetricUnderSwap) {
    RngStream rng(902);
    for (int trial = 0; trial < 8; ++trial) {
        LabelMap a = testutil::random_mixed_mask({8, 7, 6}, rng, 0.3);
        LabelMap b = testutil::random_mixed_mask({8, 7, 6}, rng, 0.3);
        Spacing sp{3.0, 3.0, 6.0};
        EXPECT_DOUBLE_EQ(hd95(a, b, sp), hd95(b, a, sp));
        EXPECT_NEAR(assd(a, b, sp), assd(b, a, sp), 1e-12);
    }
}

TEST(SurfaceMetrics, ScaleWithSpacing) {
    RngStream rng(903);
    LabelMap a = testutil::random_mixed_mask({7, 7, 7}, rng, 0.25);
    LabelMap b = testutil::random_mixed_mask({7, 7, 7}, rng, 0.25);
    double h1 = hd95(a, b, {1, 1, 1}), h2 = hd95(a, b, {2, 2, 2});
    double a1 = assd(a, b, {1, 1, 1}), a2 = assd(a, b, {2, 2, 2});
    EXPECT_DOUBLE_EQ(h2, 2.0 * h1);
    EXPECT_DOUBLE_EQ(a2, 2.0 * a1);
}

TEST(SurfaceMetrics, MatchDefinitionLevelOracle) {
    RngStream rng(904);
    for (int trial = 0; trial < 6; ++trial) {
        LabelMap a = testutil::random_mixed_mask({9, 6, 5}, rng, 0.3, {3.0, 3.0, 6.0});
        LabelMap b = testutil::random_mixed_mask({9, 6, 5}, rng, 0.3, {3.0, 3.0, 6.0});
        auto all = oracle_union_distances(a, b, a.spacing);
        std::sort(all.begin(), all.end());
        double expect_hd = all[static_cast<std::size_t>(
            std::ceil(0.95 * static_cast<double>(all.size())) - 1)];
        double expect_assd = 0.0;
        for (double v : all) expect_assd += v;
        expect_assd /= static_cast<double>(all.size());
        EXPECT_DOUBLE_EQ(hd95(a, b, a.spacing), expect_hd);
        EXPECT_NEAR(assd(a, b, a.spacing), expect_assd, 1e-12);
    }
}

TEST(SurfaceMetrics, RejectDegenerateMasks) {
    Shape3 d{4, 4, 4};
    LabelMap empty(d, {1, 1, 1}, std::vector<std::uint8_t>(64, 0));
    LabelMap full(d, {1, 1, 1}, std::vector<std::uint8_t>(64, 1));
    LabelMap some = testutil::cuboid_mask(d, 1, 3, 1, 3, 1, 3);
    EXPECT_THROW(hd95(empty, some, {1, 1, 1}), Error);
    EXPECT_THROW(hd95(some, empty, {1, 1, 1}), Error);
    EXPECT_THROW(hd95(full, some, {1, 1, 1}), Error);
    EXPECT_THROW(assd(some, full, {1, 1, 1}), Error);
}

TEST(RelBoldError, HandValue) {
    Shape3 d{4, 1, 1};
    Volume v(d, {1, 1, 1}, {100.0f, 100.0f, 90.0f, 80.0f});
    LabelMap y(d, {1, 1, 1}, {1, 1, 0, 0});   // mean 100
    LabelMap yh(d, {1, 1, 1}, {0, 1, 1, 0});  // mean 95
    EXPECT_DOUBLE_EQ(rel_bold_error(v, y, yh), 0.05);
    EXPECT_DOUBLE_EQ(rel_bold_error(v, y, y), 0.0);
}

TEST(EvaluatePair, FullReportOnRegularMasks) {
    Shape3 d{10, 8, 8};
    Spacing sp{3.0, 3.0, 6.0};
    Volume v(d, sp, std::vector<float>(d.size(), 50.0f));
    LabelMap y = testutil::cuboid_mask(d, 1, 5, 2, 6, 2, 6, sp);
    LabelMap yh = testutil::cuboid_mask(d, 3, 7, 2, 6, 2, 6, sp);
    MetricReport r = evaluate_pair(v, y, yh);
    EXPECT_EQ(r.truth_count, 64u);
    EXPECT_EQ(r.pred_count, 64u);
    EXPECT_EQ(r.intersection_count, 32u);
    EXPECT_DOUBLE_EQ(r.dice, 0.5);
    ASSERT_TRUE(r.hd95_mm.has_value());
    ASSERT_TRUE(r.assd_mm.has_value());
    EXPECT_DOUBLE_EQ(*r.hd95_mm, hd95(y, yh, sp));
    EXPECT_DOUBLE_EQ(*r.assd_mm, assd(y, yh, sp));
    ASSERT_TRUE(r.rel_bold_error.has_value());
    EXPECT_DOUBLE_EQ(*r.rel_bold_error, 0.0);  // constant intensity
    EXPECT_TRUE(r.flags.empty());
}

TEST(EvaluatePair, EmptyPredictionFlagsAndNulls) {
    Shape3 d{6, 6, 6};
    Volume v(d, {1, 1, 1}, std::vector<float>(d.size(), 10.0f));
    LabelMap y = testutil::cuboid_mask(d, 1, 4, 1, 4, 1, 4);
    LabelMap none(d, {1, 1, 1}, std::vector<std::uint8_t>(d.size(), 0));
    MetricReport r = evaluate_pair(v, y, none);
    EXPECT_DOUBLE_EQ(r.dice, 0.0);
    EXPECT_FALSE(r.hd95_mm.has_value());
    EXPECT_FALSE(r.assd_mm.has_value());
    EXPECT_FALSE(r.rel_bold_error.has_value());
    EXPECT_TRUE(r.has_flag(kFlagEmptyPrediction));
    EXPECT_FALSE(r.has_flag(kFlagEmptyTruth));

    MetricReport both = evaluate_pair(v, none, none);
    EXPECT_DOUBLE_EQ(both.dice, 1.0);
    EXPECT_TRUE(both.has_flag(kFlagEmptyPrediction));
    EXPECT_TRUE(both.has_flag(kFlagEmptyTruth));
}

TEST(EvaluatePair, WholeGridMaskIsDegenerateSurface) {
    Shape3 d{4, 4, 4};
    Volume v(d, {1, 1, 1}, std::vector<float>(64, 20.0f));
    LabelMap full(d, {1, 1, 1}, std::vector<std::uint8_t>(64, 1));
    LabelMap some = testutil::cuboid_mask(d, 1, 3, 1, 3, 1, 3);
    MetricReport r = evaluate_pair(v, full, some);
    EXPECT_TRUE(r.has_flag(kFlagDegenerateSurface));
    EXPECT_FALSE(r.hd95_mm.has_value());
    EXPECT_FALSE(r.assd_mm.has_value());
    ASSERT_TRUE(r.rel_bold_error.has_value());  // signal means still defined
    EXPECT_DOUBLE_EQ(*r.rel_bold_error, 0.0);
}

TEST(EvaluatePair, ZeroBaselineFlagged) {
    Shape3 d{4, 4, 4};
    Volume v(d, {1, 1, 1}, std::vector<float>(64, 0.0f));
    LabelMap y = testutil::cuboid_mask(d, 0, 2, 0, 2, 0, 2);
    MetricReport r = evaluate_pair(v, y, y);
    EXPECT_TRUE(r.has_flag(kFlagZeroBaseline));
    EXPECT_FALSE(r.rel_bold_error.has_value());
    ASSERT_TRUE(r.hd95_mm.has_value());
    EXPECT_DOUBLE_EQ(*r.hd95_mm, 0.0);
}

TEST(MetricCsv, HeaderAndRowFormat) {
    EXPECT_STREQ(kMetricCsvHeader,
                 "subject_id,frame_index,phase,dice,hd95_mm,assd_mm,rel_bold_error,flags");
    MetricReport r;
    r.dice = 0.5;
    r.rel_bold_error = 0.25;
    r.flags = {"empty_prediction", "zero_baseline_signal"};
    EXPECT_EQ(metric_csv_row("subj_003", 7, "hyperoxic", r),
              "subj_003,7,hyperoxic,0.5,,,0.25,empty_prediction;zero_baseline_signal");
    MetricReport full;
    full.dice = 1.0;
    full.hd95_mm = 6.0;
    full.assd_mm = 1.5;
    full.rel_bold_error = 0.0;
    EXPECT_EQ(metric_csv_row("s", 0, "normoxic", full), "s,0,normoxic,1,6,1.5,0,");
}

TEST(MeanMaskedSignal, ScanOrderMeanAndEmptyRejection) {
    Shape3 d{3, 1, 1};
    Volume v(d, {1, 1, 1}, {1.0f, 2.0f, 4.0f});
    LabelMap m(d, {1, 1, 1}, {1, 0, 1});
    EXPECT_DOUBLE_EQ(mean_masked_signal(v, m), 2.5);
    LabelMap none(d, {1, 1, 1}, {0, 0, 0});
    EXPECT_THROW(mean_masked_signal(v, none), Error);
}
