// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "conerf/ops.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>

#include "conerf/error.hpp"

namespace conerf::ad {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

ConstMatrixMap view(const Tensor& t) { return ConstMatrixMap(t.data(), t.rows(), t.cols()); }
MatrixMap view(Tensor& t) { return MatrixMap(t.data(), t.rows(), t.cols()); }

Tape& tape_of(Var a) {
    require(a.valid(), "operation on an unbound Var");
    return *a.tape();
}

Tape& tape_of(Var a, Var b) {
    Tape& t = tape_of(a);
    require(b.tape() == &t, "operands recorded on different tapes");
    return t;
}

struct Broadcast {
    Index rows, cols;
    Index a_rows, a_cols, b_rows, b_cols;

    Index a_at(Index r, Index c) const { return (a_rows == 1 ? 0 : r) * a_cols + (a_cols == 1 ? 0 : c); }
    Index b_at(Index r, Index c) const { return (b_rows == 1 ? 0 : r) * b_cols + (b_cols == 1 ? 0 : c); }
};

Broadcast broadcast(const Tensor& a, const Tensor& b) {
    auto axis = [](Index x, Index y) {
        require(x == y || x == 1 || y == 1, "incompatible broadcast extents");
        return std::max(x, y);
    };
    return Broadcast{axis(a.rows(), b.rows()), axis(a.cols(), b.cols()), a.rows(), a.cols(), b.rows(), b.cols()};
}

template <typename Forward, typename Partials>
Var binary(Var a, Var b, Forward f, Partials df) {
    Tape& tape = tape_of(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    const Broadcast bc = broadcast(av, bv);
    Tensor out = Tensor::matrix(bc.rows, bc.cols);
    for (Index r = 0; r < bc.rows; ++r)
        for (Index c = 0; c < bc.cols; ++c) out(r, c) = f(av[bc.a_at(r, c)], bv[bc.b_at(r, c)]);
    return tape.record(std::move(out), {a, b}, [a, b, bc, df](Tape& t, const Tensor& g) {
        const Tensor& av = t.value(a);
        const Tensor& bv = t.value(b);
        const bool ga_on = t.needs_grad(a);
        const bool gb_on = t.needs_grad(b);
        Tensor* ga = ga_on ? &t.grad(a) : nullptr;
        Tensor* gb = gb_on ? &t.grad(b) : nullptr;
        for (Index r = 0; r < bc.rows; ++r) {
            for (Index c = 0; c < bc.cols; ++c) {
                const Index ia = bc.a_at(r, c);
                const Index ib = bc.b_at(r, c);
                const auto [da, db] = df(av[ia], bv[ib]);
                const double gi = g(r, c);
                if (ga) (*ga)[ia] += gi * da;
                if (gb) (*gb)[ib] += gi * db;
            }
        }
    });
}

// f gives the value, df(x) its derivative at input x.
template <typename Forward, typename Derivative>
Var unary(Var a, Forward f, Derivative df) {
    Tape& tape = tape_of(a);
    const Tensor& av = a.value();
    Tensor out(Shape{av.rows(), av.cols()});
    for (Index i = 0; i < av.size(); ++i) out[i] = f(av[i]);
    return tape.record(std::move(out), {a}, [a, df](Tape& t, const Tensor& g) {
        const Tensor& x = t.value(a);
        Tensor& ga = t.grad(a);
        for (Index i = 0; i < x.size(); ++i) ga[i] += g[i] * df(x[i]);
    });
}

double stable_sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Var add(Var a, Var b) {
    return binary(a, b, [](double x, double y) { return x + y; },
                  [](double, double) { return std::pair{1.0, 1.0}; });
}

Var sub(Var a, Var b) {
    return binary(a, b, [](double x, double y) { return x - y; },
                  [](double, double) { return std::pair{1.0, -1.0}; });
}

Var mul(Var a, Var b) {
    return binary(a, b, [](double x, double y) { return x * y; },
                  [](double x, double y) { return std::pair{y, x}; });
}

Var neg(Var a) { return scale(a, -1.0); }

Var scale(Var a, double factor) {
    return unary(a, [factor](double x) { return factor * x; }, [factor](double) { return factor; });
}

Var add_scalar(Var a, double offset) {
    return unary(a, [offset](double x) { return x + offset; }, [](double) { return 1.0; });
}

Var matmul(Var a, Var b) {
    Tape& tape = tape_of(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require(av.cols() == bv.rows(), "matmul inner extents differ: " + av.shape_string() + " x " + bv.shape_string());
    Tensor out = Tensor::matrix(av.rows(), bv.cols());
    view(out).noalias() = view(av) * view(bv);
    return tape.record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
        if (t.needs_grad(a)) view(t.grad(a)).noalias() += view(g) * view(t.value(b)).transpose();
        if (t.needs_grad(b)) view(t.grad(b)).noalias() += view(t.value(a)).transpose() * view(g);
    });
}

Var linear(Var x, Var w, Var bias) {
    Tape& tape = tape_of(x, w);
    require(bias.tape() == &tape, "operands recorded on different tapes");
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    const Tensor& bv = bias.value();
    require(xv.cols() == wv.rows(), "linear: input width " + std::to_string(xv.cols()) +
                                        " does not match weight rows " + std::to_string(wv.rows()));
    require(bv.size() == wv.cols(), "linear: bias width does not match weight columns");
    Tensor out = Tensor::matrix(xv.rows(), wv.cols());
    auto o = view(out);
    o.noalias() = view(xv) * view(wv);
    o.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bv.data(), bv.size());
    return tape.record(std::move(out), {x, w, bias}, [x, w, bias](Tape& t, const Tensor& g) {
        const auto gv = view(g);
        if (t.needs_grad(x)) view(t.grad(x)).noalias() += gv * view(t.value(w)).transpose();
        if (t.needs_grad(w)) view(t.grad(w)).noalias() += view(t.value(x)).transpose() * gv;
        if (t.needs_grad(bias)) {
            Tensor& gb = t.grad(bias);
            Eigen::Map<Eigen::RowVectorXd>(gb.data(), gb.size()) += gv.colwise().sum();
        }
    });
}

Var relu(Var a) {
    return unary(a, [](double x) { return x > 0 ? x : 0.0; }, [](double x) { return x > 0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
    return unary(a, stable_sigmoid, [](double x) {
        const double s = stable_sigmoid(x);
        return s * (1.0 - s);
    });
}

Var tanh(Var a) {
    return unary(a, [](double x) { return std::tanh(x); }, [](double x) {
        const double y = std::tanh(x);
        return 1.0 - y * y;
    });
}

Var softplus(Var a) {
    return unary(a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
                 stable_sigmoid);
}

Var exp(Var a) {
    return unary(a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var log(Var a) {
    return unary(a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Var sin(Var a) {
    return unary(a, [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); });
}

Var cos(Var a) {
    return unary(a, [](double x) { return std::cos(x); }, [](double x) { return -std::sin(x); });
}

Var square(Var a) {
    return unary(a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

Var clamp(Var a, double lo, double hi) {
    require(lo <= hi, "clamp bounds out of order");
    return unary(a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
                 [lo, hi](double x) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Var sum(Var a) {
    Tape& tape = tape_of(a);
    double total = 0.0;
    for (double v : a.value().values()) total += v;
    return tape.record(Tensor::matrix(1, 1, total), {a}, [a](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(a);
        const double gi = g[0];
        for (double& v : ga.values()) v += gi;
    });
}

Var mean(Var a) {
    const Index n = a.value().size();
    require(n > 0, "mean of an empty tensor");
    return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var row_sum(Var a) {
    Tape& tape = tape_of(a);
    const Tensor& av = a.value();
    Tensor out = Tensor::matrix(av.rows(), 1);
    view(out) = view(av).rowwise().sum();
    return tape.record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
        auto ga = view(t.grad(a));
        const auto gv = view(g);
        ga.colwise() += gv.col(0);
    });
}

Var concat_cols(const std::vector<Var>& parts) {
    require(!parts.empty(), "concat of zero tensors");
    Tape& tape = tape_of(parts.front());
    const Index rows = parts.front().rows();
    Index cols = 0;
    for (Var p : parts) {
        require(p.tape() == &tape, "operands recorded on different tapes");
        require(p.rows() == rows, "concat_cols row mismatch");
        cols += p.cols();
    }
    Tensor out = Tensor::matrix(rows, cols);
    Index offset = 0;
    for (Var p : parts) {
        view(out).middleCols(offset, p.cols()) = view(p.value());
        offset += p.cols();
    }
    return tape.record(std::move(out), parts, [parts](Tape& t, const Tensor& g) {
        Index offset = 0;
        for (Var p : parts) {
            const Index c = t.value(p).cols();
            if (t.needs_grad(p)) view(t.grad(p)) += view(g).middleCols(offset, c);
            offset += c;
        }
    });
}

Var slice_cols(Var a, Index begin, Index count) {
    Tape& tape = tape_of(a);
    const Tensor& av = a.value();
    require(begin >= 0 && count >= 0 && begin + count <= av.cols(), "slice_cols out of range");
    Tensor out = Tensor::matrix(av.rows(), count);
    view(out) = view(av).middleCols(begin, count);
    return tape.record(std::move(out), {a}, [a, begin, count](Tape& t, const Tensor& g) {
        view(t.grad(a)).middleCols(begin, count) += view(g);
    });
}

Var gather_rows(Var a, std::span<const Index> indices) {
    Tape& tape = tape_of(a);
    const Tensor& av = a.value();
    const Index cols = av.cols();
    Tensor out = Tensor::matrix(static_cast<Index>(indices.size()), cols);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const Index src = indices[i];
        require(src >= 0 && src < av.rows(), "gather_rows index out of range");
        std::copy_n(av.data() + src * cols, cols, out.data() + static_cast<Index>(i) * cols);
    }
    std::vector<Index> idx(indices.begin(), indices.end());
    return tape.record(std::move(out), {a}, [a, idx = std::move(idx), cols](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            double* dst = ga.data() + idx[i] * cols;
            const double* src = g.data() + static_cast<Index>(i) * cols;
            for (Index c = 0; c < cols; ++c) dst[c] += src[c];
        }
    });
}

Var reshape(Var a, Index rows, Index cols) {
    Tape& tape = tape_of(a);
    Tensor out = a.value().reshaped(Shape{rows, cols});
    return tape.record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(a);
        for (Index i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
}

Var stop_gradient(Var a) { return tape_of(a).constant(a.value()); }

Var quaternion_rigid_transform(Var q_raw, Var t, Var x) {
    Tape& tape = tape_of(q_raw, t);
    require(x.tape() == &tape, "operands recorded on different tapes");
    const Tensor& qv = q_raw.value();
    const Tensor& tv = t.value();
    const Tensor& xv = x.value();
    const Index n = xv.rows();
    require(qv.cols() == 4 && tv.cols() == 3 && xv.cols() == 3, "quaternion transform expects [N,4], [N,3], [N,3]");
    require(qv.rows() == n && tv.rows() == n, "quaternion transform row mismatch");

    Tensor out = Tensor::matrix(n, 3);
    for (Index i = 0; i < n; ++i) {
        const Eigen::Vector4d raw(1.0 + qv(i, 0), qv(i, 1), qv(i, 2), qv(i, 3));
        const double norm = raw.norm();
        require(norm > 0.0, "zero-norm quaternion in rigid transform");
        const Eigen::Quaterniond q(raw[0] / norm, raw[1] / norm, raw[2] / norm, raw[3] / norm);
        const Eigen::Vector3d p = q * Eigen::Vector3d(xv(i, 0), xv(i, 1), xv(i, 2));
        for (int k = 0; k < 3; ++k) out(i, k) = p[k] + tv(i, k);
    }
    return tape.record(std::move(out), {q_raw, t, x}, [q_raw, t, x](Tape& tp, const Tensor& g) {
        const Tensor& qv = tp.value(q_raw);
        const Tensor& xv = tp.value(x);
        const Index n = xv.rows();
        const bool gq_on = tp.needs_grad(q_raw);
        const bool gx_on = tp.needs_grad(x);
        if (tp.needs_grad(t)) {
            Tensor& gt = tp.grad(t);
            for (Index i = 0; i < g.size(); ++i) gt[i] += g[i];
        }
        if (!gq_on && !gx_on) return;
        Tensor* gq = gq_on ? &tp.grad(q_raw) : nullptr;
        Tensor* gx = gx_on ? &tp.grad(x) : nullptr;
        for (Index i = 0; i < n; ++i) {
            const Eigen::Vector4d raw(1.0 + qv(i, 0), qv(i, 1), qv(i, 2), qv(i, 3));
            const double norm = raw.norm();
            const Eigen::Vector4d u = raw / norm;
            const double w = u[0];
            const Eigen::Vector3d v(u[1], u[2], u[3]);
            const Eigen::Vector3d p(xv(i, 0), xv(i, 1), xv(i, 2));
            const Eigen::Vector3d go(g(i, 0), g(i, 1), g(i, 2));
            // R(u) p = (w^2 - v.v) p + 2 (v.p) v + 2 w (v x p)
            if (gx) {
                const Eigen::Quaterniond q(w, v[0], v[1], v[2]);
                const Eigen::Vector3d back = q.conjugate() * go;
                for (int k = 0; k < 3; ++k) (*gx)(i, k) += back[k];
            }
            if (gq) {
                const Eigen::Vector3d vxp = v.cross(p);
                // d/dw
                const Eigen::Vector3d d_w = 2.0 * w * p + 2.0 * vxp;
                Eigen::Vector4d d_u;
                d_u[0] = go.dot(d_w);
                for (int j = 0; j < 3; ++j) {
                    Eigen::Vector3d e = Eigen::Vector3d::Zero();
                    e[j] = 1.0;
                    const Eigen::Vector3d d_vj = -2.0 * v[j] * p + 2.0 * p[j] * v + 2.0 * v.dot(p) * e + 2.0 * w * e.cross(p);
                    d_u[j + 1] = go.dot(d_vj);
                }
                // u = raw / |raw|: du/draw = (I - u u^T) / |raw|
                const Eigen::Vector4d d_raw = (d_u - u * u.dot(d_u)) / norm;
                for (int k = 0; k < 4; ++k) (*gq)(i, k) += d_raw[k];
            }
        }
    });
}

Var planar_rigid_transform(Var angle, Var t, Var x) {
    Tape& tape = tape_of(angle, t);
    require(x.tape() == &tape, "operands recorded on different tapes");
    const Tensor& av = angle.value();
    const Tensor& tv = t.value();
    const Tensor& xv = x.value();
    const Index n = xv.rows();
    require(av.cols() == 1 && tv.cols() == 2 && xv.cols() == 2, "planar transform expects [N,1], [N,2], [N,2]");
    require(av.rows() == n && tv.rows() == n, "planar transform row mismatch");
    Tensor out = Tensor::matrix(n, 2);
    for (Index i = 0; i < n; ++i) {
        const double c = std::cos(av(i, 0));
        const double s = std::sin(av(i, 0));
        out(i, 0) = c * xv(i, 0) - s * xv(i, 1) + tv(i, 0);
        out(i, 1) = s * xv(i, 0) + c * xv(i, 1) + tv(i, 1);
    }
    return tape.record(std::move(out), {angle, t, x}, [angle, t, x](Tape& tp, const Tensor& g) {
        const Tensor& av = tp.value(angle);
        const Tensor& xv = tp.value(x);
        const Index n = xv.rows();
        if (tp.needs_grad(t)) {
            Tensor& gt = tp.grad(t);
            for (Index i = 0; i < g.size(); ++i) gt[i] += g[i];
        }
        Tensor* ga = tp.needs_grad(angle) ? &tp.grad(angle) : nullptr;
        Tensor* gx = tp.needs_grad(x) ? &tp.grad(x) : nullptr;
        for (Index i = 0; i < n; ++i) {
            const double c = std::cos(av(i, 0));
            const double s = std::sin(av(i, 0));
            const double g0 = g(i, 0);
            const double g1 = g(i, 1);
            if (ga) {
                const double d0 = -s * xv(i, 0) - c * xv(i, 1);
                const double d1 = c * xv(i, 0) - s * xv(i, 1);
                (*ga)(i, 0) += g0 * d0 + g1 * d1;
            }
            if (gx) {
                (*gx)(i, 0) += c * g0 + s * g1;
                (*gx)(i, 1) += -s * g0 + c * g1;
            }
        }
    });
}

}  // namespace conerf::ad
