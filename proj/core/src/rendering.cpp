// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "conerf/rendering.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "conerf/error.hpp"
#include "conerf/ops.hpp"

namespace conerf {

using ad::Index;
using ad::Tensor;
using ad::Var;

std::vector<double> sample_ray(const Ray& ray, int samples, bool stratified, Rng* rng) {
    require(samples >= 1, "a ray needs at least one sample");
    require(ray.near < ray.far, "ray bounds out of order");
    require(!stratified || rng != nullptr, "stratified sampling needs a random source");
    std::vector<double> depths(static_cast<std::size_t>(samples));
    if (samples == 1) {
        const double offset = stratified ? uniform01(*rng) : 0.5;
        depths[0] = ray.near + offset * (ray.far - ray.near);
        return depths;
    }
    const double step = (ray.far - ray.near) / (samples - 1);
    for (int i = 0; i < samples; ++i) {
        const double node = ray.near + i * step;
        if (!stratified) {
            depths[static_cast<std::size_t>(i)] = node;
            continue;
        }
        const double lo = i == 0 ? ray.near : node - 0.5 * step;
        const double hi = i == samples - 1 ? ray.far : node + 0.5 * step;
        depths[static_cast<std::size_t>(i)] = lo + (hi - lo) * uniform01(*rng);
    }
    return depths;
}

std::vector<double> interval_lengths(std::span<const double> depths, double far, LastInterval last) {
    require(!depths.empty(), "interval lengths of an empty sample set");
    const std::size_t n = depths.size();
    std::vector<double> deltas(n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        deltas[i] = depths[i + 1] - depths[i];
        require(deltas[i] > 0.0, "sample depths must be strictly increasing");
    }
    switch (last.kind) {
        case LastInterval::Kind::kToFar:
            deltas[n - 1] = std::max(far - depths[n - 1], 0.0);
            break;
        case LastInterval::Kind::kFixed:
            deltas[n - 1] = last.value;
            break;
        case LastInterval::Kind::kMedianMultiple: {
            if (n == 1) {
                deltas[0] = std::max(far - depths[0], 0.0) * last.value;
                break;
            }
            std::vector<double> spacing(deltas.begin(), deltas.end() - 1);
            std::nth_element(spacing.begin(), spacing.begin() + static_cast<std::ptrdiff_t>(spacing.size() / 2),
                             spacing.end());
            deltas[n - 1] = last.value * spacing[spacing.size() / 2];
            break;
        }
    }
    return deltas;
}

CompositeResult composite(std::span<const double> depths, std::span<const double> sigma,
                          std::span<const double> payload, int channels, double far, LastInterval last) {
    require(sigma.size() == depths.size(), "one density per depth");
    require(channels >= 0 && payload.size() == depths.size() * static_cast<std::size_t>(channels),
            "payload must hold samples x channels values");
    const std::vector<double> deltas = interval_lengths(depths, far, last);
    CompositeResult out;
    out.payload.assign(static_cast<std::size_t>(channels), 0.0);
    out.weights.resize(depths.size());
    double transmittance = 1.0;
    for (std::size_t i = 0; i < depths.size(); ++i) {
        require(sigma[i] >= 0.0, "densities must be non-negative");
        const double survive = std::exp(-sigma[i] * deltas[i]);
        const double w = transmittance * (1.0 - survive);
        out.weights[i] = w;
        out.opacity += w;
        for (int k = 0; k < channels; ++k) out.payload[static_cast<std::size_t>(k)] += w * payload[i * channels + k];
        transmittance *= survive;
    }
    return out;
}

Var composite(Var sigma, const Tensor& deltas, Var payload) {
    ad::Tape& tape = *sigma.tape();
    const Tensor& sv = sigma.value();
    const Tensor& pv = payload.value();
    const Index rays = sv.rows();
    const Index samples = sv.cols();
    const Index channels = pv.cols();
    require(deltas.rows() == rays && deltas.cols() == samples, "composite: deltas must match sigma");
    require(pv.rows() == rays * samples, "composite: payload must have one row per sample");
    Tensor out = Tensor::matrix(rays, channels);
    for (Index r = 0; r < rays; ++r) {
        double transmittance = 1.0;
        for (Index s = 0; s < samples; ++s) {
            const double survive = std::exp(-sv(r, s) * deltas(r, s));
            const double w = transmittance * (1.0 - survive);
            const double* p = pv.data() + (r * samples + s) * channels;
            for (Index k = 0; k < channels; ++k) out(r, k) += w * p[k];
            transmittance *= survive;
        }
    }
    return tape.record(std::move(out), {sigma, payload}, [sigma, payload, deltas](ad::Tape& t, const Tensor& g) {
        const Tensor& sv = t.value(sigma);
        const Tensor& pv = t.value(payload);
        const Index rays = sv.rows();
        const Index samples = sv.cols();
        const Index channels = pv.cols();
        Tensor* gs = t.needs_grad(sigma) ? &t.grad(sigma) : nullptr;
        Tensor* gp = t.needs_grad(payload) ? &t.grad(payload) : nullptr;
        std::vector<double> weights(static_cast<std::size_t>(samples));
        std::vector<double> next_transmittance(static_cast<std::size_t>(samples));
        std::vector<double> contribution(static_cast<std::size_t>(samples));
        for (Index r = 0; r < rays; ++r) {
            const double* gr = g.data() + r * channels;
            double transmittance = 1.0;
            for (Index s = 0; s < samples; ++s) {
                const double survive = std::exp(-sv(r, s) * deltas(r, s));
                const std::size_t si = static_cast<std::size_t>(s);
                weights[si] = transmittance * (1.0 - survive);
                transmittance *= survive;
                next_transmittance[si] = transmittance;
                const double* p = pv.data() + (r * samples + s) * channels;
                double c = 0.0;
                for (Index k = 0; k < channels; ++k) c += gr[k] * p[k];
                contribution[si] = c;
                if (gp) {
                    double* gpr = gp->data() + (r * samples + s) * channels;
                    for (Index k = 0; k < channels; ++k) gpr[k] += gr[k] * weights[si];
                }
            }
            if (!gs) continue;
            // dL/dsigma_i = delta_i * (T_{i+1} c_i - sum_{j>i} w_j c_j)
            double tail = 0.0;
            for (Index s = samples; s-- > 0;) {
                const std::size_t si = static_cast<std::size_t>(s);
                (*gs)(r, s) += deltas(r, s) * (next_transmittance[si] * contribution[si] - tail);
                tail += weights[si] * contribution[si];
            }
        }
    });
}

namespace {

Tensor repeat_row(std::span<const double> row, Index n) {
    Tensor t = Tensor::matrix(n, static_cast<Index>(row.size()));
    for (Index i = 0; i < n; ++i) std::copy(row.begin(), row.end(), t.data() + i * static_cast<Index>(row.size()));
    return t;
}

EncodingAlphas alphas_for(const ConerfModel& model, const RenderSettings& settings) {
    return settings.alphas.value_or(EncodingAlphas::open(model.config()));
}

}  // namespace

RayOutputs render_rays(ad::Tape& tape, const ConerfModel& model, const RayQuery& query,
                       const RenderSettings& settings, Rng* rng) {
    const ModelConfig& cfg = model.config();
    FieldOptions options{alphas_for(model, settings), settings.force_zero_masks};
    RayOutputs out;
    if (cfg.mode == FieldMode::k2D) {
        const Index n = query.plane.rows();
        require(query.plane.cols() == 2, "2D queries need [R,2] plane coordinates");
        FieldInputs in{tape.constant(query.plane), query.latents, query.attributes, Var{}, query.appearance};
        FieldOutputs f = model.evaluate(tape, in, options);
        out.rgb = f.radiance.rgb;
        out.masks = f.masks.channels;
        out.opacity = tape.constant(Tensor::matrix(n, 1, 1.0));
        return out;
    }

    const Index rays = static_cast<Index>(query.rays.size());
    const int samples = settings.samples_per_ray;
    require(rays > 0, "render_rays needs at least one ray");
    Tensor points = Tensor::matrix(rays * samples, 3);
    Tensor views = Tensor::matrix(rays * samples, 3);
    Tensor deltas = Tensor::matrix(rays, samples);
    std::vector<Index> ray_of_sample(static_cast<std::size_t>(rays * samples));
    for (Index r = 0; r < rays; ++r) {
        const Ray& ray = query.rays[static_cast<std::size_t>(r)];
        const std::vector<double> depths = sample_ray(ray, samples, settings.stratified, rng);
        const std::vector<double> dl = interval_lengths(depths, ray.far, settings.last_interval);
        for (int s = 0; s < samples; ++s) {
            const Index row = r * samples + s;
            const Eigen::Vector3d p = ray.origin + depths[static_cast<std::size_t>(s)] * ray.direction;
            for (int k = 0; k < 3; ++k) {
                points(row, k) = p[k];
                views(row, k) = ray.direction[k];
            }
            deltas(r, s) = dl[static_cast<std::size_t>(s)];
            ray_of_sample[static_cast<std::size_t>(row)] = r;
        }
    }
    FieldInputs in{tape.constant(std::move(points)), ad::gather_rows(query.latents, ray_of_sample),
                   ad::gather_rows(query.attributes, ray_of_sample), tape.constant(std::move(views)),
                   cfg.appearance_dim > 0 ? ad::gather_rows(query.appearance, ray_of_sample) : query.appearance};
    FieldOutputs f = model.evaluate(tape, in, options);
    Var sigma = ad::reshape(f.radiance.sigma, rays, samples);
    Var payload = ad::concat_cols({f.radiance.rgb, tape.constant(Tensor::matrix(rays * samples, 1, 1.0))});
    Var accumulated = composite(sigma, deltas, payload);
    Var rgb = ad::slice_cols(accumulated, 0, 3);
    out.opacity = ad::slice_cols(accumulated, 3, 1);
    const auto& bg = settings.background;
    Var background = tape.constant(Tensor::row({bg[0], bg[1], bg[2]}));
    out.rgb = ad::add(rgb, ad::mul(ad::add_scalar(ad::neg(out.opacity), 1.0), background));
    out.masks = composite(ad::stop_gradient(sigma), deltas, f.masks.channels);
    return out;
}

std::vector<double> regress_attributes(const ConerfModel& model, std::span<const double> latent) {
    require(static_cast<int>(latent.size()) == model.config().latent_dim, "latent code width mismatch");
    ad::Tape tape(ad::Tape::Mode::kInference);
    Var beta = tape.constant(Tensor(ad::Shape{1, static_cast<Index>(latent.size())},
                                    std::vector<double>(latent.begin(), latent.end())));
    const Tensor& a = model.attribute_map(tape, beta).value();
    return std::vector<double>(a.values().begin(), a.values().end());
}

FrameCodes frame_codes(const ConerfModel& model, int frame, std::optional<std::vector<double>> attributes) {
    const ModelConfig& cfg = model.config();
    require(frame >= 0 && frame < cfg.num_frames, "frame " + std::to_string(frame) + " out of range");
    const Tensor& codes = model.latent_codes().value;
    FrameCodes out;
    out.latent.assign(codes.data() + frame * cfg.latent_dim, codes.data() + (frame + 1) * cfg.latent_dim);
    // Appearance codes only absorb per-image nuisance during training; they are zeroed for rendering.
    out.appearance.assign(static_cast<std::size_t>(cfg.appearance_dim), 0.0);
    out.attributes = std::move(attributes);
    return out;
}

namespace {

struct ResolvedCodes {
    std::vector<double> latent;
    std::vector<double> attributes;
    std::vector<double> appearance;
};

ResolvedCodes resolve(const ConerfModel& model, const FrameCodes& codes) {
    const ModelConfig& cfg = model.config();
    require(static_cast<int>(codes.latent.size()) == cfg.latent_dim, "latent code width mismatch");
    ResolvedCodes r;
    r.latent = codes.latent;
    if (codes.attributes) {
        require(static_cast<int>(codes.attributes->size()) == cfg.num_attributes, "attribute count mismatch");
        for (double v : *codes.attributes) require(v >= -1.0 && v <= 1.0, "attribute values must lie in [-1, 1]");
        r.attributes = *codes.attributes;
    } else {
        r.attributes = regress_attributes(model, codes.latent);
    }
    r.appearance = codes.appearance.empty() ? std::vector<double>(static_cast<std::size_t>(cfg.appearance_dim), 0.0)
                                            : codes.appearance;
    require(static_cast<int>(r.appearance.size()) == cfg.appearance_dim, "appearance code width mismatch");
    return r;
}

struct ChunkResult {
    Tensor rgb, masks, opacity;
};

ChunkResult run_chunk(const ConerfModel& model, const ResolvedCodes& codes, std::vector<Ray> rays, Tensor plane,
                      Index n, const RenderSettings& settings, Rng* rng) {
    ad::Tape tape(ad::Tape::Mode::kInference);
    RayQuery q;
    q.rays = std::move(rays);
    q.plane = std::move(plane);
    q.latents = tape.constant(repeat_row(codes.latent, n));
    q.attributes = tape.constant(repeat_row(codes.attributes, n));
    q.appearance = tape.constant(repeat_row(codes.appearance, n));
    RayOutputs out = render_rays(tape, model, q, settings, rng);
    return ChunkResult{out.rgb.value(), out.masks.value(), out.opacity.value()};
}

PixelRender to_pixel(const ChunkResult& c) {
    PixelRender p;
    for (int k = 0; k < 3; ++k) p.color[static_cast<std::size_t>(k)] = c.rgb(0, k);
    p.masks.assign(c.masks.values().begin(), c.masks.values().end());
    p.opacity = c.opacity(0, 0);
    return p;
}

int thread_count(const RenderSettings& settings) {
    if (settings.threads > 0) return settings.threads;
    return std::max(1u, std::thread::hardware_concurrency());
}

template <typename MakeChunk>
RenderedImage render_chunks(const ConerfModel& model, int width, int height, const RenderSettings& settings,
                            MakeChunk make_chunk) {
    const int channels = model.config().num_attributes + 1;
    RenderedImage img;
    img.width = width;
    img.height = height;
    const Index pixels = static_cast<Index>(width) * height;
    img.rgb.assign(static_cast<std::size_t>(pixels * 3), 0.0);
    img.opacity.assign(static_cast<std::size_t>(pixels), 0.0);
    img.masks.assign(static_cast<std::size_t>(channels), std::vector<double>(static_cast<std::size_t>(pixels), 0.0));

    const Index chunk = std::max(1, settings.chunk_rays);
    const Index chunks = (pixels + chunk - 1) / chunk;
    std::atomic<Index> next{0};
    auto worker = [&] {
        for (Index c = next++; c < chunks; c = next++) {
            const Index begin = c * chunk;
            const Index end = std::min(pixels, begin + chunk);
            Rng rng = make_rng(settings.seed, 0x72656e646572ULL, static_cast<std::uint64_t>(c));
            const ChunkResult r = make_chunk(begin, end, &rng);
            for (Index i = begin; i < end; ++i) {
                const Index local = i - begin;
                for (int k = 0; k < 3; ++k) img.rgb[static_cast<std::size_t>(i * 3 + k)] = r.rgb(local, k);
                img.opacity[static_cast<std::size_t>(i)] = r.opacity(local, 0);
                for (int m = 0; m < channels; ++m)
                    img.masks[static_cast<std::size_t>(m)][static_cast<std::size_t>(i)] = r.masks(local, m);
            }
        }
    };
    const int threads = static_cast<int>(std::min<Index>(thread_count(settings), chunks));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    return img;
}

}  // namespace

PixelRender render_pixel(const ConerfModel& model, const Ray& ray, const FrameCodes& codes,
                         const RenderSettings& settings) {
    require(model.config().mode == FieldMode::k3D, "render_pixel needs a 3D model; use render_pixel_2d");
    const ResolvedCodes rc = resolve(model, codes);
    Rng rng = make_rng(settings.seed, 0x72656e646572ULL, 0);
    return to_pixel(run_chunk(model, rc, {ray}, Tensor(), 1, settings, &rng));
}

PixelRender render_pixel_2d(const ConerfModel& model, std::array<double, 2> plane_point, const FrameCodes& codes,
                            const RenderSettings& settings) {
    require(model.config().mode == FieldMode::k2D, "render_pixel_2d called on a 3D model");
    const ResolvedCodes rc = resolve(model, codes);
    return to_pixel(run_chunk(model, rc, {}, Tensor::from_rows({{plane_point[0], plane_point[1]}}), 1, settings,
                              nullptr));
}

RenderedImage render_image(const ConerfModel& model, const Camera& camera, const FrameCodes& codes,
                           const RenderSettings& settings) {
    require(model.config().mode == FieldMode::k3D, "render_image needs a 3D model; use render_image_2d");
    camera.validate();
    const ResolvedCodes rc = resolve(model, codes);
    return render_chunks(model, camera.width, camera.height, settings, [&](Index begin, Index end, Rng* rng) {
        std::vector<Ray> rays;
        for (Index i = begin; i < end; ++i) {
            rays.push_back(generate_ray(
                camera, PixelCoord{static_cast<int>(i % camera.width), static_cast<int>(i / camera.width)}));
        }
        return run_chunk(model, rc, std::move(rays), Tensor(), end - begin, settings, rng);
    });
}

RenderedImage render_image_2d(const ConerfModel& model, int width, int height, const FrameCodes& codes,
                              const RenderSettings& settings) {
    require(model.config().mode == FieldMode::k2D, "render_image_2d called on a 3D model");
    require(width > 0 && height > 0, "image extents must be positive");
    const ResolvedCodes rc = resolve(model, codes);
    return render_chunks(model, width, height, settings, [&](Index begin, Index end, Rng*) {
        Tensor plane = Tensor::matrix(end - begin, 2);
        for (Index i = begin; i < end; ++i) {
            const auto uv = pixel_to_plane(PixelCoord{static_cast<int>(i % width), static_cast<int>(i / width)},
                                           width, height);
            plane(i - begin, 0) = uv[0];
            plane(i - begin, 1) = uv[1];
        }
        return run_chunk(model, rc, {}, std::move(plane), end - begin, settings, nullptr);
    });
}

}  // namespace conerf
