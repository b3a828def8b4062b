// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "conerf/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "conerf/error.hpp"

namespace conerf {

void EncodingSpec::validate() const {
    require(frequencies >= 1, "encoding needs at least one frequency band");
    require(window.duration >= 0.0, "encoding window duration must be non-negative");
}

EncodingSpec EncodingSpec::scaled(double factor) const {
    EncodingSpec out = *this;
    out.window.start *= factor;
    out.window.duration *= factor;
    return out;
}

double window_weight(double alpha, int band) {
    const double x = std::clamp(alpha - static_cast<double>(band), 0.0, 1.0);
    return 0.5 * (1.0 - std::cos(std::numbers::pi * x));
}

double schedule_alpha(std::int64_t step, const EncodingSpec& spec) {
    require(step >= 0, "schedule step must be non-negative");
    const double bands = static_cast<double>(spec.frequencies);
    if (spec.window.duration <= 0.0) return bands;
    const double progress = (static_cast<double>(step) - spec.window.start) / spec.window.duration;
    return bands * std::clamp(progress, 0.0, 1.0);
}

std::vector<double> positional_encode(std::span<const double> point, const EncodingSpec& spec, double alpha) {
    spec.validate();
    require(alpha >= 0.0, "encoding window position must be non-negative");
    const int d = static_cast<int>(point.size());
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(spec.output_width(d)));
    if (spec.include_identity) out.insert(out.end(), point.begin(), point.end());
    for (int k = 0; k < spec.frequencies; ++k) {
        const double w = window_weight(alpha, k);
        const double freq = std::ldexp(std::numbers::pi, k);
        for (double p : point) out.push_back(w * std::sin(freq * p));
        for (double p : point) out.push_back(w * std::cos(freq * p));
    }
    return out;
}

ad::Var positional_encode(ad::Var x, const EncodingSpec& spec, double alpha) {
    using ad::Index;
    spec.validate();
    require(alpha >= 0.0, "encoding window position must be non-negative");
    ad::Tape& tape = *x.tape();
    const ad::Tensor& xv = x.value();
    const Index n = xv.rows();
    const Index d = xv.cols();
    const Index width = spec.output_width(static_cast<int>(d));
    const Index id_cols = spec.include_identity ? d : 0;
    std::vector<double> weights(static_cast<std::size_t>(spec.frequencies));
    for (int k = 0; k < spec.frequencies; ++k) weights[static_cast<std::size_t>(k)] = window_weight(alpha, k);

    ad::Tensor out = ad::Tensor::matrix(n, width);
    for (Index i = 0; i < n; ++i) {
        double* row = out.data() + i * width;
        for (Index j = 0; j < id_cols; ++j) row[j] = xv(i, j);
        for (int k = 0; k < spec.frequencies; ++k) {
            const double w = weights[static_cast<std::size_t>(k)];
            const double freq = std::ldexp(std::numbers::pi, k);
            double* s = row + id_cols + 2 * k * d;
            double* c = s + d;
            for (Index j = 0; j < d; ++j) {
                s[j] = w * std::sin(freq * xv(i, j));
                c[j] = w * std::cos(freq * xv(i, j));
            }
        }
    }
    const int bands = spec.frequencies;
    return tape.record(std::move(out), {x}, [x, weights, bands, id_cols](ad::Tape& t, const ad::Tensor& g) {
        const ad::Tensor& xv = t.value(x);
        ad::Tensor& gx = t.grad(x);
        const Index n = xv.rows();
        const Index d = xv.cols();
        const Index width = g.cols();
        for (Index i = 0; i < n; ++i) {
            const double* grow = g.data() + i * width;
            for (Index j = 0; j < id_cols; ++j) gx(i, j) += grow[j];
            for (int k = 0; k < bands; ++k) {
                const double w = weights[static_cast<std::size_t>(k)];
                if (w == 0.0) continue;
                const double freq = std::ldexp(std::numbers::pi, k);
                const double* gs = grow + id_cols + 2 * k * d;
                const double* gc = gs + d;
                for (Index j = 0; j < d; ++j) {
                    const double arg = freq * xv(i, j);
                    gx(i, j) += w * freq * (gs[j] * std::cos(arg) - gc[j] * std::sin(arg));
                }
            }
        }
    });
}

}  // namespace conerf
