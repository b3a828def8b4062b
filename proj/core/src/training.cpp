// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "conerf/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "conerf/checkpoint.hpp"
#include "conerf/error.hpp"
#include "conerf/metrics.hpp"
#include "conerf/ops.hpp"

namespace conerf {

using ad::Index;
using ad::Tensor;
using ad::Var;
using nlohmann::json;

namespace {

constexpr std::uint64_t kBatchStream = 0x6261746368ULL;
constexpr std::uint64_t kStratifiedStream = 0x7374726174ULL;
constexpr double kReferenceSteps = 250000.0;

json last_interval_json(const LastInterval& l) {
    const char* kind = l.kind == LastInterval::Kind::kToFar   ? "to_far"
                       : l.kind == LastInterval::Kind::kFixed ? "fixed"
                                                              : "median_multiple";
    return json{{"kind", kind}, {"value", l.value}};
}

LastInterval last_interval_from(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    const double value = j.value("value", 0.0);
    if (kind == "to_far") return LastInterval::to_far();
    if (kind == "fixed") return LastInterval::fixed(value);
    if (kind == "median_multiple") return LastInterval::median_multiple(value);
    throw DataError("unknown last-interval kind '" + kind + "'");
}

}  // namespace

void TrainConfig::validate() const {
    require(batch_rays > 0, "batch size must be positive");
    require(total_steps > 0, "total steps must be positive");
    require(annotated_quota >= 0.0 && annotated_quota <= 1.0, "annotated quota must lie in [0, 1]");
    require(mask_focus >= 0.0 && mask_focus <= 1.0, "mask focus must lie in [0, 1]");
    require(samples_per_ray >= 1, "samples per ray must be positive");
    require(schedule_scale >= 0.0, "schedule scale must be non-negative");
    require(lr_initial >= 0.0 && lr_final >= 0.0, "learning rates must be non-negative");
    weights.validate();
    focal.validate();
}

double TrainConfig::effective_schedule_scale() const {
    return schedule_scale > 0.0 ? schedule_scale : static_cast<double>(total_steps) / kReferenceSteps;
}

std::string train_config_to_json(const TrainConfig& c) {
    json j{{"batch_rays", c.batch_rays},
           {"total_steps", c.total_steps},
           {"annotated_quota", c.annotated_quota},
           {"mask_focus", c.mask_focus},
           {"samples_per_ray", c.samples_per_ray},
           {"stratified", c.stratified},
           {"last_interval", last_interval_json(c.last_interval)},
           {"background", c.background},
           {"seed", c.seed},
           {"schedule_scale", c.schedule_scale},
           {"weights", {{"recon", c.weights.recon}, {"enc", c.weights.enc}, {"attr", c.weights.attr},
                        {"mask", c.weights.mask}}},
           {"focal", {{"gamma", c.focal.gamma}, {"alpha", c.focal.alpha}}},
           {"lr_initial", c.lr_initial},
           {"lr_final", c.lr_final}};
    return j.dump(2);
}

TrainConfig desk_train_config(FieldMode mode) {
    TrainConfig c;
    if (mode == FieldMode::k2D) {
        c.total_steps = 2500;
        c.lr_initial = 1e-3;
        c.lr_final = 1e-4;
    }
    return c;
}

TrainConfig train_config_from_json(const std::string& text, const TrainConfig& defaults) {
    TrainConfig c = defaults;
    try {
        const json j = json::parse(text);
        c.batch_rays = j.value("batch_rays", c.batch_rays);
        c.total_steps = j.value("total_steps", c.total_steps);
        c.annotated_quota = j.value("annotated_quota", c.annotated_quota);
        c.mask_focus = j.value("mask_focus", c.mask_focus);
        c.samples_per_ray = j.value("samples_per_ray", c.samples_per_ray);
        c.stratified = j.value("stratified", c.stratified);
        if (j.contains("last_interval")) c.last_interval = last_interval_from(j.at("last_interval"));
        c.background = j.value("background", c.background);
        c.seed = j.value("seed", c.seed);
        c.schedule_scale = j.value("schedule_scale", c.schedule_scale);
        if (j.contains("weights")) {
            const json& w = j.at("weights");
            c.weights.recon = w.value("recon", c.weights.recon);
            c.weights.enc = w.value("enc", c.weights.enc);
            c.weights.attr = w.value("attr", c.weights.attr);
            c.weights.mask = w.value("mask", c.weights.mask);
        }
        if (j.contains("focal")) {
            c.focal.gamma = j.at("focal").value("gamma", c.focal.gamma);
            c.focal.alpha = j.at("focal").value("alpha", c.focal.alpha);
        }
        c.lr_initial = j.value("lr_initial", c.lr_initial);
        c.lr_final = j.value("lr_final", c.lr_final);
    } catch (const json::exception& e) {
        throw DataError(std::string("invalid training config: ") + e.what());
    }
    try {
        c.validate();
    } catch (const ContractViolation& e) {
        throw DataError(std::string("invalid training config: ") + e.what());
    }
    return c;
}

RayBatch sample_ray_batch(const Dataset& dataset, const TrainConfig& config, Rng& rng) {
    if (dataset.num_frames() == 0) throw DataError("cannot sample rays from an empty dataset");
    const int rays = config.batch_rays;
    const int width = dataset.width();
    const int height = dataset.height();
    const int attributes = dataset.num_attributes();
    const std::vector<int> annotated = dataset.annotated_frames();
    const int quota = annotated.empty()
                          ? 0
                          : std::min(rays, static_cast<int>(std::ceil(config.annotated_quota * rays - 1e-9)));

    std::map<int, std::vector<int>> focus_pixels;
    auto inside_union = [&](int frame) -> const std::vector<int>& {
        auto it = focus_pixels.find(frame);
        if (it != focus_pixels.end()) return it->second;
        std::vector<int> pixels;
        const Frame& f = dataset.frames[static_cast<std::size_t>(frame)];
        for (int p = 0; p < width * height; ++p) {
            for (const auto& a : f.annotations) {
                if (a && a->mask.pixels[static_cast<std::size_t>(p)] >= 0.5) {
                    pixels.push_back(p);
                    break;
                }
            }
        }
        return focus_pixels.emplace(frame, std::move(pixels)).first->second;
    };

    RayBatch b;
    b.frames.reserve(static_cast<std::size_t>(rays));
    const auto pixel_count = static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
    for (int r = 0; r < rays; ++r) {
        int frame;
        int pixel;
        const bool from_quota = r < quota;
        if (from_quota) {
            frame = annotated[uniform_index(rng, annotated.size())];
            const std::vector<int>& focus = inside_union(frame);
            if (config.mask_focus > 0.0 && !focus.empty() && uniform01(rng) < config.mask_focus) {
                pixel = focus[uniform_index(rng, focus.size())];
            } else {
                pixel = static_cast<int>(uniform_index(rng, pixel_count));
            }
        } else {
            frame = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(dataset.num_frames())));
            pixel = static_cast<int>(uniform_index(rng, pixel_count));
        }
        b.frames.push_back(frame);
        b.pixels.push_back(PixelCoord{pixel % width, pixel / width});
        b.from_quota.push_back(from_quota);
    }

    b.colors = Tensor::matrix(rays, 3);
    b.mask_target = Tensor::matrix(rays, attributes);
    b.mask_weight = Tensor::matrix(rays, attributes);
    if (dataset.mode() == FieldMode::k2D) {
        b.plane = Tensor::matrix(rays, 2);
    } else {
        b.rays.reserve(static_cast<std::size_t>(rays));
    }
    std::map<std::pair<int, int>, int> counts;
    for (int r = 0; r < rays; ++r) {
        const Frame& f = dataset.frames[static_cast<std::size_t>(b.frames[static_cast<std::size_t>(r)])];
        const PixelCoord p = b.pixels[static_cast<std::size_t>(r)];
        for (int k = 0; k < 3; ++k) b.colors(r, k) = f.image.at(p.x, p.y, k);
        if (dataset.mode() == FieldMode::k2D) {
            const auto uv = pixel_to_plane(p, width, height);
            b.plane(r, 0) = uv[0];
            b.plane(r, 1) = uv[1];
        } else {
            b.rays.push_back(generate_ray(*f.camera, p));
        }
        for (int a = 0; a < attributes; ++a) {
            const auto& ann = f.annotations[static_cast<std::size_t>(a)];
            if (!ann) continue;
            b.mask_target(r, a) = ann->mask.at(p.x, p.y, 0);
            ++counts[{b.frames[static_cast<std::size_t>(r)], a}];
        }
    }
    for (int r = 0; r < rays; ++r) {
        for (int a = 0; a < attributes; ++a) {
            const auto it = counts.find({b.frames[static_cast<std::size_t>(r)], a});
            if (it != counts.end()) b.mask_weight(r, a) = 1.0 / it->second;
        }
    }
    return b;
}

ModelConfig model_config_for(const Dataset& dataset, const TrainConfig& train, bool full_size) {
    ModelConfig c = full_size ? ModelConfig::full_size(dataset.mode(), dataset.num_attributes(), dataset.num_frames())
                                : ModelConfig::desk(dataset.mode(), dataset.num_attributes(), dataset.num_frames());
    return c.with_schedule_scale(train.effective_schedule_scale());
}

ConerfModel model_from_checkpoint(const Checkpoint& checkpoint) {
    ConerfModel model(checkpoint.model, checkpoint.train.seed);
    for (ad::Parameter* p : model.parameters()) {
        const auto it = checkpoint.parameters.find(p->name);
        if (it == checkpoint.parameters.end()) throw DataError("checkpoint lacks parameter " + p->name);
        if (!it->second.same_shape(p->value)) {
            throw DataError("checkpoint parameter " + p->name + " has shape " + it->second.shape_string() +
                            ", expected " + p->value.shape_string());
        }
        p->value = it->second;
    }
    return model;
}

namespace {

void require_matches(const Dataset& dataset, const ModelConfig& config) {
    if (dataset.num_frames() == 0) throw DataError("cannot train on an empty dataset");
    require(config.mode == dataset.mode(), "model mode does not match the dataset");
    require(config.num_frames == dataset.num_frames(), "model frame count does not match the dataset");
    require(config.num_attributes == dataset.num_attributes(), "model attribute count does not match the dataset");
}

void attribute_targets(const Dataset& dataset, Tensor& target, Tensor& indicator) {
    target = Tensor::matrix(dataset.num_frames(), dataset.num_attributes());
    indicator = Tensor::matrix(dataset.num_frames(), dataset.num_attributes());
    for (int c = 0; c < dataset.num_frames(); ++c) {
        for (int a = 0; a < dataset.num_attributes(); ++a) {
            const auto& ann = dataset.frames[static_cast<std::size_t>(c)].annotations[static_cast<std::size_t>(a)];
            if (!ann) continue;
            target(c, a) = ann->value;
            indicator(c, a) = 1.0;
        }
    }
}

}  // namespace

Trainer::Trainer(const Dataset& dataset, ModelConfig model_config, TrainConfig config)
    : dataset_(dataset),
      config_(std::move(config)),
      model_((config_.validate(), require_matches(dataset, model_config), model_config), config_.seed),
      adam_(config_.learning_rate()) {
    attribute_targets(dataset_, attribute_target_, attribute_indicator_);
}

Trainer::Trainer(const Dataset& dataset, const Checkpoint& checkpoint)
    : dataset_(dataset),
      config_(checkpoint.train),
      model_((require_matches(dataset, checkpoint.model), model_from_checkpoint(checkpoint))),
      adam_(config_.learning_rate()),
      step_(checkpoint.step) {
    adam_.state() = checkpoint.optimizer;
    require(adam_.state().step == step_, "checkpoint optimizer step does not match its training step");
    attribute_targets(dataset_, attribute_target_, attribute_indicator_);
}

LossTerms Trainer::build_losses(ad::Tape& tape, const RayBatch& batch) const {
    const ModelConfig& cfg = model_.config();
    std::vector<Index> frames(batch.frames.begin(), batch.frames.end());
    Var codes = tape.leaf(model_.latent_codes());
    Var appearance = tape.leaf(model_.appearance_codes());
    Var attributes = model_.attribute_map(tape, codes);

    RayQuery query;
    query.rays = batch.rays;
    query.plane = batch.plane;
    query.latents = ad::gather_rows(codes, frames);
    query.attributes = ad::gather_rows(attributes, frames);
    query.appearance = ad::gather_rows(appearance, frames);

    RenderSettings settings;
    settings.samples_per_ray = config_.samples_per_ray;
    settings.stratified = config_.stratified;
    settings.last_interval = config_.last_interval;
    settings.background = config_.background;
    settings.alphas = EncodingAlphas::at_step(cfg, step_);
    Rng rng = make_rng(config_.seed, kStratifiedStream, static_cast<std::uint64_t>(step_));
    const RayOutputs out = render_rays(tape, model_, query, settings, &rng);

    LossTerms terms;
    terms.recon = recon_loss(out.rgb, tape.constant(batch.colors));
    terms.enc = latent_prior_loss(codes);
    terms.attr = attr_loss(attributes, attribute_target_, attribute_indicator_);
    terms.mask = mask_loss(ad::slice_cols(out.masks, 1, cfg.num_attributes), batch.mask_target, batch.mask_weight,
                           config_.focal);
    return terms;
}

LossReport Trainer::step() {
    Rng rng = make_rng(config_.seed, kBatchStream, static_cast<std::uint64_t>(step_));
    const RayBatch batch = sample_ray_batch(dataset_, config_, rng);
    ad::Tape tape;
    const LossTerms terms = build_losses(tape, batch);
    const Var total = total_loss(terms, config_.weights);

    LossReport report;
    report.step = step_;
    report.total = total.value().item();
    report.recon = terms.recon.value().item();
    report.enc = terms.enc.value().item();
    report.attr = terms.attr.value().item();
    report.mask = terms.mask.value().item();
    report.learning_rate = adam_.current_learning_rate();
    if (!std::isfinite(report.total)) {
        std::ostringstream msg;
        msg << "non-finite loss at step " << step_ << " (recon " << report.recon << ", enc " << report.enc
            << ", attr " << report.attr << ", mask " << report.mask << ")";
        throw TrainingError(msg.str());
    }
    const ad::GradientMap& grads = tape.backward(total);
    const std::vector<ad::Parameter*> params = model_.parameters();
    adam_.step(params, grads);
    ++step_;
    return report;
}

Checkpoint Trainer::checkpoint() const {
    Checkpoint c;
    c.step = step_;
    c.model = model_.config();
    c.train = config_;
    for (const ad::Parameter* p : model_.parameters()) c.parameters.emplace(p->name, p->value);
    c.optimizer = adam_.state();
    c.attributes = dataset_.manifest.attributes;
    c.image_width = dataset_.width();
    c.image_height = dataset_.height();
    return c;
}

double validation_psnr(const ConerfModel& model, const Dataset& dataset, const RenderSettings& settings, int frame,
                       int crop) {
    require(frame >= 0 && frame < dataset.num_frames(), "validation frame out of range");
    const int w = std::min(crop, dataset.width());
    const int h = std::min(crop, dataset.height());
    const int x0 = (dataset.width() - w) / 2;
    const int y0 = (dataset.height() - h) / 2;
    const Frame& truth = dataset.frames[static_cast<std::size_t>(frame)];
    RenderedImage rendered;
    if (dataset.mode() == FieldMode::k2D) {
        rendered = render_image_2d(model, dataset.width(), dataset.height(), frame_codes(model, frame), settings);
    } else {
        Camera camera = *truth.camera;
        camera.width = w;
        camera.height = h;
        camera.cx -= x0;
        camera.cy -= y0;
        rendered = render_image(model, camera, frame_codes(model, frame), settings);
    }
    Image predicted(w, h, 3);
    Image expected(w, h, 3);
    const bool full = dataset.mode() == FieldMode::k2D;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int k = 0; k < 3; ++k) {
                const int sx = full ? x + x0 : x;
                const int sy = full ? y + y0 : y;
                predicted.at(x, y, k) = rendered.rgb[(static_cast<std::size_t>(sy) * rendered.width + sx) * 3 + k];
                expected.at(x, y, k) = truth.image.at(x + x0, y + y0, k);
            }
        }
    }
    return psnr(predicted, expected);
}

RenderSettings inference_settings(const Checkpoint& checkpoint) {
    RenderSettings s;
    s.samples_per_ray = checkpoint.train.samples_per_ray;
    s.stratified = false;
    s.last_interval = checkpoint.train.last_interval;
    s.background = checkpoint.train.background;
    s.alphas = EncodingAlphas::at_step(checkpoint.model, checkpoint.step);
    return s;
}

std::vector<LossReport> fit(Trainer& trainer, const Dataset& dataset, const FitOptions& options) {
    std::vector<LossReport> trace;
    std::ofstream csv;
    if (!options.out_dir.empty()) {
        std::filesystem::create_directories(options.out_dir);
        const std::filesystem::path log = options.out_dir / "metrics.csv";
        const bool resume = trainer.current_step() > 0 && std::filesystem::exists(log);
        csv.open(log, resume ? std::ios::app : std::ios::trunc);
        if (!csv) throw DataError("cannot write " + log.string());
        if (!resume) csv << "step,total,recon,enc,attr,mask,learning_rate,psnr\n";
        csv.precision(10);
    }
    const std::int64_t total = trainer.config().total_steps;
    while (trainer.current_step() < total) {
        const LossReport report = trainer.step();
        trace.push_back(report);
        const std::int64_t done = trainer.current_step();
        const bool last = done == total;
        const bool log_due = last || (options.log_every > 0 && done % options.log_every == 0);
        if (log_due) {
            std::optional<double> score;
            if (last || (options.validation_every > 0 && done % options.validation_every == 0)) {
                score = validation_psnr(trainer.model(), dataset, inference_settings(trainer.checkpoint()),
                                        options.validation_frame, options.validation_crop);
            }
            if (csv.is_open()) {
                csv << report.step << ',' << report.total << ',' << report.recon << ',' << report.enc << ','
                    << report.attr << ',' << report.mask << ',' << report.learning_rate << ',';
                if (score) csv << *score;
                csv << '\n' << std::flush;
            }
            if (options.on_log) options.on_log(report, score);
        }
        if (!options.out_dir.empty() && options.checkpoint_every > 0 && done % options.checkpoint_every == 0 &&
            !last) {
            char name[32];
            std::snprintf(name, sizeof name, "step_%08lld.ckpt", static_cast<long long>(done));
            save_checkpoint(options.out_dir / name, trainer.checkpoint());
        }
    }
    if (!options.out_dir.empty()) save_checkpoint(options.out_dir / "final.ckpt", trainer.checkpoint());
    return trace;
}

}  // namespace conerf
