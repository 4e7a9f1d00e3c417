// boldseg command line: phantom data generation, preprocessing, boundary
// weight maps, augmentation previews, training, inference, and the
// time-series analyses. One subcommand per pipeline stage; JSON summary on
// stdout, progress on stderr, data only under --out.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "boldseg/augment.hpp"
#include "boldseg/boundary.hpp"
#include "boldseg/checkpoint.hpp"
#include "boldseg/config.hpp"
#include "boldseg/io.hpp"
#include "boldseg/metrics.hpp"
#include "boldseg/phantom.hpp"
#include "boldseg/preprocess.hpp"
#include "boldseg/segment.hpp"
#include "boldseg/threading.hpp"
#include "boldseg/timeseries.hpp"
#include "boldseg/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exit codes, also listed in README: 0 ok, 2 usage, 3 config, 4 missing
// input, 5 malformed data, 6 precondition, 7 internal.
int exit_code_for(boldseg::ErrKind k) {
    switch (k) {
        case boldseg::ErrKind::bad_config: return 3;
        case boldseg::ErrKind::io: return 4;
        case boldseg::ErrKind::bad_data: return 5;
        case boldseg::ErrKind::precondition: return 6;
        case boldseg::ErrKind::internal: return 7;
    }
    return 7;
}

void emit(json j) { std::cout << j.dump() << "\n"; }

std::string frame_file(const char* stem, int t, const std::string& ext) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%04d%s", stem, t, ext.c_str());
    return buf;
}

boldseg::PhantomConfig load_phantom_config(const std::string& path) {
    if (path.empty()) return boldseg::PhantomConfig{};
    return boldseg::phantom_config_from_json(boldseg::load_json_file(path));
}

// ---------------------------------------------------------------------------
// phantom

struct PhantomOpts {
    std::string config, out, format = ".bvol";
    int subjects = 1;
    std::optional<std::uint64_t> seed;
};

json run_phantom(const PhantomOpts& o) {
    boldseg::PhantomConfig cfg = load_phantom_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    cfg.validate();
    json summary{{"subcommand", "phantom"}, {"subjects", o.subjects}, {"seed", cfg.seed}};
    if (o.subjects == 1) {
        boldseg::BoldSeries series = boldseg::make_phantom_series(cfg);
        std::string manifest = boldseg::write_series_manifest(series, o.out, o.format);
        summary["out"] = manifest;
        summary["frames"] = series.frame_count();
        return summary;
    }
    boldseg::PhantomDataset ds = boldseg::make_dataset(o.subjects, cfg, cfg.seed);
    std::vector<std::string> train, val, test;
    for (const auto& s : ds.subjects) {
        boldseg::BoldSeries series = boldseg::materialize_subject(s);
        boldseg::write_series_manifest(series, (fs::path(o.out) / s.id).string(), o.format);
        std::string rel = s.id + "/series.json";
        if (s.split == boldseg::Split::train) train.push_back(rel);
        else if (s.split == boldseg::Split::val) val.push_back(rel);
        else test.push_back(rel);
        std::cerr << "phantom: wrote " << s.id << " (" << boldseg::split_name(s.split) << ")\n";
    }
    std::string manifest = (fs::path(o.out) / "dataset.json").string();
    boldseg::write_dataset_manifest(train, val, test, manifest);
    summary["out"] = manifest;
    summary["train"] = train.size();
    summary["val"] = val.size();
    summary["test"] = test.size();
    return summary;
}

// ---------------------------------------------------------------------------
// preprocess

struct PreprocessOpts {
    std::string in, out, format = ".bvol";
    bool split_interleaved = false;
    bool normalize = false;
    std::vector<double> resample;     // spacing mm, 3 values
    std::vector<int> target_dims;     // 3 values
};

json run_preprocess(const PreprocessOpts& o) {
    boldseg::BoldSeries series = boldseg::read_series_manifest(o.in);
    json ops = json::array();

    if (o.split_interleaved) {
        boldseg::require(series.labels.empty(), boldseg::ErrKind::precondition,
                         "preprocess: interleave split would orphan the labeled frames");
        std::vector<boldseg::Volume> frames;
        for (const auto& f : series.frames) {
            auto [even, odd] = boldseg::split_interleaved(f);
            frames.push_back(std::move(even));
            frames.push_back(std::move(odd));
        }
        series = boldseg::BoldSeries(std::move(frames), 2 * series.hyperoxic_start(),
                                     2 * series.return_start(), {});
        ops.push_back("split_interleaved");
    }
    if (!o.resample.empty()) {
        boldseg::require(series.labels.empty(), boldseg::ErrKind::precondition,
                         "preprocess: resampling a labeled series is not supported");
        boldseg::Spacing target{o.resample[0], o.resample[1], o.resample[2]};
        std::vector<boldseg::Volume> frames;
        for (const auto& f : series.frames) frames.push_back(boldseg::resample_linear(f, target));
        series = boldseg::BoldSeries(std::move(frames), series.hyperoxic_start(),
                                     series.return_start(), {});
        ops.push_back("resample");
    }
    if (o.normalize) {
        for (auto& f : series.frames) f = boldseg::normalize_p90(f);
        ops.push_back("normalize_p90");
    }
    if (!o.target_dims.empty()) {
        boldseg::Shape3 t{o.target_dims[0], o.target_dims[1], o.target_dims[2]};
        for (auto& f : series.frames) f = boldseg::crop_or_pad(f, t);
        for (auto& [idx, lbl] : series.labels) lbl = boldseg::crop_or_pad(lbl, t);
        ops.push_back("crop_or_pad");
    }

    std::string manifest = boldseg::write_series_manifest(series, o.out, o.format);
    return json{{"subcommand", "preprocess"},
                {"out", manifest},
                {"frames", series.frame_count()},
                {"ops", ops}};
}

// ---------------------------------------------------------------------------
// boundary

struct BoundaryOpts {
    std::string in, out;
    double w1 = 40.0, w2 = 1.0;
    int kernel = 11;
};

json run_boundary(const BoundaryOpts& o) {
    boldseg::LabelMap y = boldseg::read_label(o.in);
    boldseg::WeightMap w = boldseg::weight_map(y, o.w1, o.w2, o.kernel);
    boldseg::Volume out(w.dim, w.spacing, w.data);
    boldseg::write_volume(out, o.out);
    std::size_t band = 0;
    for (float v : w.data) band += v != 0.0f;
    return json{{"subcommand", "boundary"}, {"out", o.out},      {"w1", o.w1},
                {"w2", o.w2},               {"kernel", o.kernel}, {"band_voxels", band},
                {"voxels", w.data.size()}};
}

// ---------------------------------------------------------------------------
// augment-preview

struct AugmentPreviewOpts {
    std::string in, config, out, format = ".bvol";
    int frame = -1;
    int count = 4;
    std::uint64_t seed = 1;
};

json run_augment_preview(const AugmentPreviewOpts& o) {
    boldseg::BoldSeries series = boldseg::read_series_manifest(o.in);
    int frame = o.frame;
    if (frame < 0) {
        boldseg::require(!series.labels.empty(), boldseg::ErrKind::precondition,
                         "augment-preview: series has no labeled frames");
        frame = series.labels.begin()->first;
    }
    auto it = series.labels.find(frame);
    boldseg::require(it != series.labels.end(), boldseg::ErrKind::precondition,
                     "augment-preview: frame ", frame, " has no label");
    boldseg::AugmentConfig cfg;
    if (!o.config.empty())
        cfg = boldseg::augment_config_from_json(boldseg::load_json_file(o.config));
    boldseg::require(o.count >= 1, boldseg::ErrKind::bad_config,
                     "augment-preview: count must be >= 1");

    fs::create_directories(o.out);
    boldseg::RngStream root(o.seed);
    json files = json::array();
    for (int i = 0; i < o.count; ++i) {
        boldseg::RngStream rng = root.fork(static_cast<std::uint64_t>(i));
        auto [v, y] = boldseg::augment_sample(series.frames[frame], it->second, cfg, rng);
        std::string vf = frame_file("aug_vol", i, o.format);
        std::string lf = frame_file("aug_lbl", i, o.format);
        boldseg::write_volume(v, (fs::path(o.out) / vf).string());
        boldseg::write_label(y, (fs::path(o.out) / lf).string());
        files.push_back(json{{"volume", vf}, {"label", lf}});
    }
    json j{{"format", "boldseg-augment-preview"},
           {"version", 1},
           {"source", o.in},
           {"frame", frame},
           {"seed", o.seed},
           {"samples", files}};
    std::string manifest = (fs::path(o.out) / "preview.json").string();
    auto f = boldseg::detail::open_out(manifest);
    f << j.dump(2) << "\n";
    return json{{"subcommand", "augment-preview"}, {"out", manifest}, {"count", o.count},
                {"frame", frame}, {"seed", o.seed}};
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
    std::string config, data, out;
    std::optional<std::uint64_t> seed;
};

json run_train(const TrainOpts& o) {
    boldseg::TrainConfig cfg =
        boldseg::train_config_from_json(boldseg::load_json_file(o.config));
    if (o.seed) cfg.seed = *o.seed;
    boldseg::DatasetManifest ds = boldseg::read_dataset_manifest(o.data);
    boldseg::require(!ds.train.empty(), boldseg::ErrKind::bad_config,
                     "train: dataset lists no training series");
    boldseg::require(!ds.val.empty(), boldseg::ErrKind::bad_config,
                     "train: dataset lists no validation series");

    std::vector<boldseg::BoldSeries> train_set, val_set;
    for (const auto& p : ds.train) train_set.push_back(boldseg::read_series_manifest(p));
    for (const auto& p : ds.val) val_set.push_back(boldseg::read_series_manifest(p));

    boldseg::TrainResult r = boldseg::train(train_set, val_set, cfg, &std::cerr);

    std::string tmp = o.out + ".tmp";
    boldseg::save_checkpoint(r.net, cfg, r.history, tmp);
    fs::rename(tmp, o.out);
    return json{{"subcommand", "train"},
                {"out", o.out},
                {"epochs", cfg.epochs},
                {"parameters", r.net.parameter_count()},
                {"best_epoch", r.history.best_epoch},
                {"best_val_dice", r.history.best_val_dice},
                {"seed", cfg.seed}};
}

// ---------------------------------------------------------------------------
// segment

struct SegmentOpts {
    std::string checkpoint, in, out, format = ".bvol";
    int stride = 1;
};

json run_segment(const SegmentOpts& o) {
    boldseg::Checkpoint ckpt = boldseg::load_checkpoint(o.checkpoint);
    boldseg::BoldSeries series = boldseg::read_series_manifest(o.in);
    std::vector<boldseg::FramePrediction> preds =
        boldseg::segment_series(ckpt.net, series, o.stride);

    fs::create_directories(o.out);
    json frames = json::array();
    int empty_count = 0;
    for (const auto& p : preds) {
        std::string mf = frame_file("pred", p.frame_index, o.format);
        boldseg::write_label(p.mask, (fs::path(o.out) / mf).string());
        frames.push_back(json{{"frame", p.frame_index}, {"mask", mf}, {"empty", p.empty}});
        empty_count += p.empty;
    }
    json j{{"format", "boldseg-predictions"},
           {"version", 1},
           {"series", o.in},
           {"stride", o.stride},
           {"frames", frames}};
    std::string manifest = (fs::path(o.out) / "predictions.json").string();
    auto f = boldseg::detail::open_out(manifest);
    f << j.dump(2) << "\n";
    return json{{"subcommand", "segment"},
                {"out", manifest},
                {"frames", preds.size()},
                {"empty_predictions", empty_count},
                {"stride", o.stride}};
}

// Predictions manifest -> in-memory predictions, masks loaded relative to it.
std::vector<boldseg::FramePrediction> read_predictions(const std::string& path) {
    json j = boldseg::load_json_file(path);
    boldseg::require(j.is_object() && j.value("format", "") == "boldseg-predictions",
                     boldseg::ErrKind::bad_data, path, ": not a boldseg-predictions manifest");
    boldseg::require(j.contains("frames") && j["frames"].is_array(), boldseg::ErrKind::bad_data,
                     path, ": missing 'frames'");
    fs::path base = fs::path(path).parent_path();
    std::vector<boldseg::FramePrediction> preds;
    for (const auto& e : j["frames"]) {
        boldseg::FramePrediction p;
        p.frame_index = e.at("frame").get<int>();
        p.empty = e.at("empty").get<bool>();
        std::string mp = (base / e.at("mask").get<std::string>()).string();
        boldseg::require(fs::exists(mp), boldseg::ErrKind::io, path, ": mask file missing: ", mp);
        p.mask = boldseg::read_label(mp);
        preds.push_back(std::move(p));
    }
    return preds;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOpts {
    std::string in, pred, out, subject;
};

json run_evaluate(const EvaluateOpts& o) {
    boldseg::BoldSeries series = boldseg::read_series_manifest(o.in);
    std::vector<boldseg::FramePrediction> preds = read_predictions(o.pred);
    boldseg::require(!series.labels.empty(), boldseg::ErrKind::precondition,
                     "evaluate: series has no labeled frames");
    std::string subject = o.subject;
    if (subject.empty()) {
        subject = fs::path(o.in).parent_path().filename().string();
        if (subject.empty()) subject = "subject";
    }

    std::ostringstream csv;
    csv << boldseg::kMetricCsvHeader << '\n';
    std::vector<double> dices;
    int rows = 0;
    for (const auto& p : preds) {
        auto it = series.labels.find(p.frame_index);
        if (it == series.labels.end()) continue;
        boldseg::MetricReport r =
            boldseg::evaluate_pair(series.frames[p.frame_index], it->second, p.mask);
        csv << boldseg::metric_csv_row(subject, p.frame_index,
                                       boldseg::phase_name(series.phases[p.frame_index]), r)
            << '\n';
        dices.push_back(r.dice);
        ++rows;
    }
    boldseg::require(rows > 0, boldseg::ErrKind::precondition,
                     "evaluate: no predicted frame carries a ground-truth label");
    auto f = boldseg::detail::open_out(o.out);
    f << csv.str();
    json summary{{"subcommand", "evaluate"}, {"out", o.out}, {"rows", rows},
                 {"subject", subject}};
    summary["mean_dice"] = boldseg::pairwise_mean(dices);
    return summary;
}

// ---------------------------------------------------------------------------
// consistency

json stats_json(const std::optional<boldseg::SummaryStats>& s) {
    if (!s) return nullptr;
    return json{{"mean", s->mean}, {"sd", s->sd}, {"median", s->median}, {"count", s->count}};
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

struct ConsistencyOpts {
    std::string in, pred, out;
};

json run_consistency(const ConsistencyOpts& o) {
    boldseg::BoldSeries series = boldseg::read_series_manifest(o.in);
    std::vector<boldseg::FramePrediction> preds = read_predictions(o.pred);
    boldseg::ConsistencyReport rep = boldseg::consistency(series, preds);

    json pairs = json::array();
    int skipped = 0;
    for (const auto& p : rep.pairs) {
        json pj{{"frame_a", p.frame_a}, {"frame_b", p.frame_b}, {"skipped", p.skipped}};
        if (p.skipped) {
            pj["skip_reason"] = p.skip_reason;
            ++skipped;
        } else {
            pj["dice"] = p.dice;
            pj["hd95_mm"] = opt_json(p.hd95_mm);
            pj["assd_mm"] = opt_json(p.assd_mm);
            pj["bold_diff"] = opt_json(p.bold_diff);
        }
        pairs.push_back(std::move(pj));
    }
    json j{{"format", "boldseg-consistency"},
           {"version", 1},
           {"series", o.in},
           {"pairs", pairs},
           {"dice", stats_json(rep.dice_stats)},
           {"hd95_mm", stats_json(rep.hd95_stats)},
           {"assd_mm", stats_json(rep.assd_stats)},
           {"bold_diff", stats_json(rep.bold_diff_stats)}};
    auto f = boldseg::detail::open_out(o.out);
    f << j.dump(2) << "\n";
    json summary{{"subcommand", "consistency"},
                 {"out", o.out},
                 {"pairs", rep.pairs.size()},
                 {"skipped_pairs", skipped}};
    if (rep.dice_stats) summary["mean_dice"] = rep.dice_stats->mean;
    return summary;
}

// ---------------------------------------------------------------------------
// hyperoxia

struct HyperoxiaOpts {
    std::string in, pred, out, trace;
    int window = 10;
};

json run_hyperoxia(const HyperoxiaOpts& o) {
    boldseg::BoldSeries series = boldseg::read_series_manifest(o.in);
    std::vector<boldseg::FramePrediction> preds = read_predictions(o.pred);
    boldseg::OxygenationReport rep = boldseg::oxygenation_response(series, preds, o.window);

    json trace = json::array();
    for (const auto& t : rep.trace)
        trace.push_back(json{{"frame", t.frame_index},
                             {"phase", boldseg::phase_name(t.phase)},
                             {"mean_signal", opt_json(t.mean_signal)}});
    json j{{"format", "boldseg-hyperoxia"},
           {"version", 1},
           {"series", o.in},
           {"b_n", rep.b_n},
           {"b_h", rep.b_h},
           {"delta_b", rep.delta_b},
           {"window", rep.window},
           {"notes", rep.notes},
           {"trace", trace}};
    auto f = boldseg::detail::open_out(o.out);
    f << j.dump(2) << "\n";

    if (!o.trace.empty()) {
        std::optional<boldseg::ConsistencyReport> consist;
        if (preds.size() >= 2) consist = boldseg::consistency(series, preds);
        auto tf = boldseg::detail::open_out(o.trace);
        tf << boldseg::trace_csv(rep, consist ? &*consist : nullptr);
    }
    return json{{"subcommand", "hyperoxia"}, {"out", o.out},       {"b_n", rep.b_n},
                {"b_h", rep.b_h},            {"delta_b", rep.delta_b}, {"window", rep.window}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"placental BOLD MRI segmentation toolkit"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker thread cap (0 = hardware)");

    PhantomOpts ph;
    auto* c_ph = app.add_subcommand("phantom", "generate synthetic series or datasets");
    c_ph->add_option("--config", ph.config, "phantom config JSON");
    c_ph->add_option("--out", ph.out, "output directory")->required();
    c_ph->add_option("--subjects", ph.subjects, "1 = single series, >=5 = split dataset");
    c_ph->add_option("--seed", ph.seed, "seed override");
    c_ph->add_option("--format", ph.format, "frame file extension (.bvol or .nii)");

    PreprocessOpts pp;
    auto* c_pp = app.add_subcommand("preprocess", "series-level preprocessing");
    c_pp->add_option("--in", pp.in, "series manifest")->required();
    c_pp->add_option("--out", pp.out, "output directory")->required();
    c_pp->add_flag("--split-interleaved", pp.split_interleaved,
                   "split each frame into even/odd slice volumes");
    c_pp->add_flag("--normalize", pp.normalize, "divide by the 90th-percentile intensity");
    c_pp->add_option("--resample", pp.resample, "target spacing mm (3 values)")->expected(3);
    c_pp->add_option("--target-dims", pp.target_dims, "crop/pad to dims (3 values)")->expected(3);
    c_pp->add_option("--format", pp.format, "frame file extension (.bvol or .nii)");

    BoundaryOpts bd;
    auto* c_bd = app.add_subcommand("boundary", "boundary weight map from a label mask");
    c_bd->add_option("--in", bd.in, "label file")->required();
    c_bd->add_option("--out", bd.out, "output weight volume")->required();
    c_bd->add_option("--w1", bd.w1, "background band weight");
    c_bd->add_option("--w2", bd.w2, "foreground band weight");
    c_bd->add_option("--kernel", bd.kernel, "odd pooling window");

    AugmentPreviewOpts ap;
    auto* c_ap = app.add_subcommand("augment-preview", "write augmented copies of one frame");
    c_ap->add_option("--in", ap.in, "series manifest")->required();
    c_ap->add_option("--config", ap.config, "augmentation config JSON");
    c_ap->add_option("--out", ap.out, "output directory")->required();
    c_ap->add_option("--frame", ap.frame, "labeled frame index (default: first labeled)");
    c_ap->add_option("--count", ap.count, "number of samples");
    c_ap->add_option("--seed", ap.seed, "rng seed");
    c_ap->add_option("--format", ap.format, "file extension (.bvol or .nii)");

    TrainOpts tr;
    auto* c_tr = app.add_subcommand("train", "train a segmentation model");
    c_tr->add_option("--config", tr.config, "train config JSON")->required();
    c_tr->add_option("--data", tr.data, "dataset manifest")->required();
    c_tr->add_option("--out", tr.out, "checkpoint path")->required();
    c_tr->add_option("--seed", tr.seed, "seed override");

    SegmentOpts sg;
    auto* c_sg = app.add_subcommand("segment", "segment a series with a checkpoint");
    c_sg->add_option("--checkpoint", sg.checkpoint, "checkpoint path")->required();
    c_sg->add_option("--in", sg.in, "series manifest")->required();
    c_sg->add_option("--out", sg.out, "output directory")->required();
    c_sg->add_option("--stride", sg.stride, "segment every k-th frame");
    c_sg->add_option("--format", sg.format, "mask file extension (.bvol or .nii)");

    EvaluateOpts ev;
    auto* c_ev = app.add_subcommand("evaluate", "metrics on labeled, predicted frames");
    c_ev->add_option("--in", ev.in, "series manifest")->required();
    c_ev->add_option("--pred", ev.pred, "predictions manifest")->required();
    c_ev->add_option("--out", ev.out, "metrics CSV path")->required();
    c_ev->add_option("--subject", ev.subject, "subject id for the CSV (default: series dir)");

    ConsistencyOpts cs;
    auto* c_cs = app.add_subcommand("consistency", "consecutive-frame agreement report");
    c_cs->add_option("--in", cs.in, "series manifest")->required();
    c_cs->add_option("--pred", cs.pred, "predictions manifest")->required();
    c_cs->add_option("--out", cs.out, "report JSON path")->required();

    HyperoxiaOpts hx;
    auto* c_hx = app.add_subcommand("hyperoxia", "oxygenation response report");
    c_hx->add_option("--in", hx.in, "series manifest")->required();
    c_hx->add_option("--pred", hx.pred, "predictions manifest")->required();
    c_hx->add_option("--out", hx.out, "report JSON path")->required();
    c_hx->add_option("--window", hx.window, "plateau window (analyzed hyperoxic frames)");
    c_hx->add_option("--trace", hx.trace, "also write a per-frame trace CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    boldseg::set_thread_cap(threads);
    try {
        if (*c_ph) emit(run_phantom(ph));
        else if (*c_pp) emit(run_preprocess(pp));
        else if (*c_bd) emit(run_boundary(bd));
        else if (*c_ap) emit(run_augment_preview(ap));
        else if (*c_tr) emit(run_train(tr));
        else if (*c_sg) emit(run_segment(sg));
        else if (*c_ev) emit(run_evaluate(ev));
        else if (*c_cs) emit(run_consistency(cs));
        else if (*c_hx) emit(run_hyperoxia(hx));
    } catch (const boldseg::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 7;
    }
    return 0;
}
