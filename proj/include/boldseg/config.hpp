#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "boldseg/augment.hpp"
#include "boldseg/core.hpp"
#include "boldseg/losses.hpp"
#include "boldseg/optim.hpp"
#include "boldseg/phantom.hpp"
#include "boldseg/train.hpp"
#include "boldseg/unet.hpp"

namespace boldseg {

namespace confdetail {

using nlohmann::json;

// Tracks which keys a parser consumed so leftovers can be rejected by name.
// Typos in config files should fail loudly, not silently fall back to
// defaults.
class Keys {
public:
    Keys(const json& j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
        require(j.is_object(), ErrKind::bad_config, ctx_, ": expected a JSON object");
    }

    bool has(const std::string& k) {
        seen_.push_back(k);
        return j_.contains(k);
    }

    const json& at(const std::string& k) { return j_.at(k); }

    void finish() {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            bool known = false;
            for (const auto& s : seen_)
                if (s == it.key()) known = true;
            require(known, ErrKind::bad_config, ctx_, ": unknown key \"", it.key(), "\"");
        }
    }

    double num(const std::string& k, double fallback) {
        if (!has(k)) return fallback;
        const json& v = j_.at(k);
        require(v.is_number(), ErrKind::bad_config, ctx_, ".", k, ": expected a number");
        return v.get<double>();
    }

    int integer(const std::string& k, int fallback) {
        if (!has(k)) return fallback;
        const json& v = j_.at(k);
        require(v.is_number_integer(), ErrKind::bad_config, ctx_, ".", k, ": expected an integer");
        return v.get<int>();
    }

    std::uint64_t u64(const std::string& k, std::uint64_t fallback) {
        if (!has(k)) return fallback;
        const json& v = j_.at(k);
        require(v.is_number_integer() && v.get<double>() >= 0, ErrKind::bad_config, ctx_, ".", k,
                ": expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    bool boolean(const std::string& k, bool fallback) {
        if (!has(k)) return fallback;
        const json& v = j_.at(k);
        require(v.is_boolean(), ErrKind::bad_config, ctx_, ".", k, ": expected a boolean");
        return v.get<bool>();
    }

    std::string str(const std::string& k, const std::string& fallback) {
        if (!has(k)) return fallback;
        const json& v = j_.at(k);
        require(v.is_string(), ErrKind::bad_config, ctx_, ".", k, ": expected a string");
        return v.get<std::string>();
    }

    std::array<double, 3> vec3(const std::string& k, std::array<double, 3> fallback) {
        if (!has(k)) return fallback;
        const json& v = j_.at(k);
        require(v.is_array() && v.size() == 3, ErrKind::bad_config, ctx_, ".", k,
                ": expected an array of 3 numbers");
        std::array<double, 3> out{};
        for (int i = 0; i < 3; ++i) {
            require(v[i].is_number(), ErrKind::bad_config, ctx_, ".", k,
                    ": expected an array of 3 numbers");
            out[static_cast<std::size_t>(i)] = v[i].get<double>();
        }
        return out;
    }

    Shape3 dims3(const std::string& k, Shape3 fallback) {
        if (!has(k)) return fallback;
        const json& v = j_.at(k);
        require(v.is_array() && v.size() == 3, ErrKind::bad_config, ctx_, ".", k,
                ": expected an array of 3 integers");
        Shape3 out;
        int* p[3] = {&out.nx, &out.ny, &out.nz};
        for (int i = 0; i < 3; ++i) {
            require(v[i].is_number_integer(), ErrKind::bad_config, ctx_, ".", k,
                    ": expected an array of 3 integers");
            *p[i] = v[i].get<int>();
        }
        return out;
    }

    const json& j_;
    std::string ctx_;
    std::vector<std::string> seen_;
};

}  // namespace confdetail

inline LossConfig loss_config_from_json(const nlohmann::json& j,
                                        const std::string& ctx = "loss") {
    confdetail::Keys k(j, ctx);
    LossConfig cfg;
    if (k.has("name")) {
        require(!j.contains("base") && !j.contains("boundary_weighting"), ErrKind::bad_config, ctx,
                ": give either \"name\" or \"base\"/\"boundary_weighting\", not both");
        k.seen_.push_back("base");
        k.seen_.push_back("boundary_weighting");
        cfg = loss_config_from_name(k.str("name", ""));
    } else {
        std::string base = k.str("base", "ce");
        cfg.base = base_loss_from_name(base);
        cfg.boundary_weighting = k.boolean("boundary_weighting", false);
    }
    cfg.w1 = k.num("w1", cfg.w1);
    cfg.w2 = k.num("w2", cfg.w2);
    cfg.kernel = k.integer("kernel", cfg.kernel);
    cfg.focal_gamma = k.num("focal_gamma", cfg.focal_gamma);
    cfg.dice_smooth = k.num("dice_smooth", cfg.dice_smooth);
    cfg.dice_lambda = k.num("dice_lambda", cfg.dice_lambda);
    k.finish();
    cfg.validate();
    return cfg;
}

inline nlohmann::json loss_config_to_json(const LossConfig& c) {
    return nlohmann::json{{"base", base_loss_name(c.base)},
                          {"boundary_weighting", c.boundary_weighting},
                          {"w1", c.w1},
                          {"w2", c.w2},
                          {"kernel", c.kernel},
                          {"focal_gamma", c.focal_gamma},
                          {"dice_smooth", c.dice_smooth},
                          {"dice_lambda", c.dice_lambda}};
}

inline UNetConfig unet_config_from_json(const nlohmann::json& j,
                                        const std::string& ctx = "unet") {
    confdetail::Keys k(j, ctx);
    UNetConfig cfg;
    cfg.levels = k.integer("levels", cfg.levels);
    cfg.base_channels = k.integer("base_channels", cfg.base_channels);
    cfg.in_channels = k.integer("in_channels", cfg.in_channels);
    k.finish();
    cfg.validate();
    return cfg;
}

inline nlohmann::json unet_config_to_json(const UNetConfig& c) {
    return nlohmann::json{
        {"levels", c.levels}, {"base_channels", c.base_channels}, {"in_channels", c.in_channels}};
}

inline AugmentConfig augment_config_from_json(const nlohmann::json& j,
                                              const std::string& ctx = "augment") {
    confdetail::Keys k(j, ctx);
    AugmentConfig c;
    c.max_translation_vox = k.num("max_translation_vox", c.max_translation_vox);
    c.max_rotation_deg = k.num("max_rotation_deg", c.max_rotation_deg);
    c.flip_x = k.boolean("flip_x", c.flip_x);
    c.flip_y = k.boolean("flip_y", c.flip_y);
    c.flip_z = k.boolean("flip_z", c.flip_z);
    c.noise_sigma = k.num("noise_sigma", c.noise_sigma);
    c.elastic_control_points = k.integer("elastic_control_points", c.elastic_control_points);
    c.elastic_max_disp_vox = k.num("elastic_max_disp_vox", c.elastic_max_disp_vox);
    c.elastic_linear_densify = k.boolean("elastic_linear_densify", c.elastic_linear_densify);
    c.volume_intensity_shift_frac =
        k.num("volume_intensity_shift_frac", c.volume_intensity_shift_frac);
    c.placenta_intensity_shift = k.num("placenta_intensity_shift", c.placenta_intensity_shift);
    c.prob_flip = k.num("prob_flip", c.prob_flip);
    c.prob_affine = k.num("prob_affine", c.prob_affine);
    c.prob_elastic = k.num("prob_elastic", c.prob_elastic);
    c.prob_intensity = k.num("prob_intensity", c.prob_intensity);
    c.prob_noise = k.num("prob_noise", c.prob_noise);
    k.finish();
    c.validate();
    return c;
}

inline nlohmann::json augment_config_to_json(const AugmentConfig& c) {
    return nlohmann::json{{"max_translation_vox", c.max_translation_vox},
                          {"max_rotation_deg", c.max_rotation_deg},
                          {"flip_x", c.flip_x},
                          {"flip_y", c.flip_y},
                          {"flip_z", c.flip_z},
                          {"noise_sigma", c.noise_sigma},
                          {"elastic_control_points", c.elastic_control_points},
                          {"elastic_max_disp_vox", c.elastic_max_disp_vox},
                          {"elastic_linear_densify", c.elastic_linear_densify},
                          {"volume_intensity_shift_frac", c.volume_intensity_shift_frac},
                          {"placenta_intensity_shift", c.placenta_intensity_shift},
                          {"prob_flip", c.prob_flip},
                          {"prob_affine", c.prob_affine},
                          {"prob_elastic", c.prob_elastic},
                          {"prob_intensity", c.prob_intensity},
                          {"prob_noise", c.prob_noise}};
}

inline PhantomConfig phantom_config_from_json(const nlohmann::json& j,
                                              const std::string& ctx = "phantom") {
    confdetail::Keys k(j, ctx);
    PhantomConfig c;
    c.dims = k.dims3("dims", c.dims);
    auto sp = k.vec3("spacing_mm", {c.spacing.sx, c.spacing.sy, c.spacing.sz});
    c.spacing = Spacing{sp[0], sp[1], sp[2]};
    c.center = k.vec3("center_vox", c.center);
    c.semi_axes = k.vec3("semi_axes_vox", c.semi_axes);
    c.exponent = k.num("exponent", c.exponent);
    c.background_level = k.num("background_level", c.background_level);
    c.texture_amplitude = k.num("texture_amplitude", c.texture_amplitude);
    c.texture_correlation_vox = k.num("texture_correlation_vox", c.texture_correlation_vox);
    c.baseline_intensity = k.num("baseline_intensity", c.baseline_intensity);
    c.ramp_target = k.num("ramp_target", c.ramp_target);
    c.ramp_start = k.integer("ramp_start", c.ramp_start);
    c.ramp_end = k.integer("ramp_end", c.ramp_end);
    c.noise_sigma = k.num("noise_sigma", c.noise_sigma);
    c.motion_amplitude = k.num("motion_amplitude", c.motion_amplitude);
    if (k.has("motion_schedule")) {
        const auto& v = k.at("motion_schedule");
        require(v.is_array(), ErrKind::bad_config, ctx,
                ".motion_schedule: expected an array of numbers");
        c.motion_schedule.clear();
        for (const auto& e : v) {
            require(e.is_number(), ErrKind::bad_config, ctx,
                    ".motion_schedule: expected an array of numbers");
            c.motion_schedule.push_back(e.get<double>());
        }
    }
    c.motion_control_points = k.integer("motion_control_points", c.motion_control_points);
    c.frame_count = k.integer("frame_count", c.frame_count);
    c.hyperoxic_start = k.integer("hyperoxic_start", c.hyperoxic_start);
    c.return_start = k.integer("return_start", c.return_start);
    c.min_margin_vox = k.num("min_margin_vox", c.min_margin_vox);
    c.seed = k.u64("seed", c.seed);
    k.finish();
    c.validate();
    return c;
}

inline nlohmann::json phantom_config_to_json(const PhantomConfig& c) {
    nlohmann::json j{{"dims", {c.dims.nx, c.dims.ny, c.dims.nz}},
                     {"spacing_mm", {c.spacing.sx, c.spacing.sy, c.spacing.sz}},
                     {"center_vox", c.center},
                     {"semi_axes_vox", c.semi_axes},
                     {"exponent", c.exponent},
                     {"background_level", c.background_level},
                     {"texture_amplitude", c.texture_amplitude},
                     {"texture_correlation_vox", c.texture_correlation_vox},
                     {"baseline_intensity", c.baseline_intensity},
                     {"ramp_target", c.ramp_target},
                     {"ramp_start", c.ramp_start},
                     {"ramp_end", c.ramp_end},
                     {"noise_sigma", c.noise_sigma},
                     {"motion_amplitude", c.motion_amplitude},
                     {"motion_control_points", c.motion_control_points},
                     {"frame_count", c.frame_count},
                     {"hyperoxic_start", c.hyperoxic_start},
                     {"return_start", c.return_start},
                     {"min_margin_vox", c.min_margin_vox},
                     {"seed", c.seed}};
    if (!c.motion_schedule.empty()) j["motion_schedule"] = c.motion_schedule;
    return j;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j,
                                          const std::string& ctx = "train") {
    confdetail::Keys k(j, ctx);
    TrainConfig c;
    c.learning_rate = k.num("learning_rate", c.learning_rate);
    c.epochs = k.integer("epochs", c.epochs);
    c.batch_size = k.integer("batch_size", c.batch_size);
    c.optimizer = optimizer_from_name(k.str("optimizer", optimizer_name(c.optimizer)));
    if (k.has("loss")) c.loss = loss_config_from_json(k.at("loss"), ctx + ".loss");
    if (k.has("unet")) c.unet = unet_config_from_json(k.at("unet"), ctx + ".unet");
    if (k.has("augment")) c.augment = augment_config_from_json(k.at("augment"), ctx + ".augment");
    c.augment_enabled = k.boolean("augment_enabled", c.augment_enabled);
    c.target_dims = k.dims3("target_dims", c.target_dims);
    c.seed = k.u64("seed", c.seed);
    k.finish();
    c.validate();
    return c;
}

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
    return nlohmann::json{{"learning_rate", c.learning_rate},
                          {"epochs", c.epochs},
                          {"batch_size", c.batch_size},
                          {"optimizer", optimizer_name(c.optimizer)},
                          {"loss", loss_config_to_json(c.loss)},
                          {"unet", unet_config_to_json(c.unet)},
                          {"augment", augment_config_to_json(c.augment)},
                          {"augment_enabled", c.augment_enabled},
                          {"target_dims", {c.target_dims.nx, c.target_dims.ny, c.target_dims.nz}},
                          {"seed", c.seed}};
}

}  // namespace boldseg
