// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "conerf/tensor.hpp"

namespace conerf::ad {

/// A named trainable tensor. Parameters outlive tapes; a tape only records
/// read access to them and reports gradients through a GradientMap.
struct Parameter {
    std::string name;
    Tensor value;
};

class Tape;

/// Handle to a value recorded on a tape.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    Index rows() const { return value().rows(); }
    Index cols() const { return value().cols(); }
    bool valid() const noexcept { return tape_ != nullptr; }
    Tape* tape() const noexcept { return tape_; }
    std::size_t id() const noexcept { return id_; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Gradients keyed by parameter, in the order parameters were first read.
class GradientMap {
public:
    const Tensor* find(const Parameter& p) const;
    const Tensor& at(const Parameter& p) const;
    bool empty() const noexcept { return order_.empty(); }
    std::size_t size() const noexcept { return order_.size(); }
    const std::vector<const Parameter*>& parameters() const noexcept { return order_; }
    void clear();

    Tensor& slot(const Parameter& p);

private:
    std::vector<const Parameter*> order_;
    std::unordered_map<const Parameter*, Tensor> grads_;
};

/// Reverse-mode tape. Operations append nodes in evaluation order; backward()
/// walks them in reverse. A tape in inference mode records values only.
class Tape {
public:
    enum class Mode { kTraining, kInference };
    using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

    explicit Tape(Mode mode = Mode::kTraining) : mode_(mode) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Mode mode() const noexcept { return mode_; }

    Var constant(Tensor value);
    /// Reads a parameter. Repeated reads of the same parameter share one node.
    Var leaf(const Parameter& parameter);

    /// Accumulates d(loss)/d(parameter) for every parameter reachable from
    /// `loss` into the tape's gradient map. Calling twice accumulates twice.
    const GradientMap& backward(Var loss);
    const GradientMap& gradients() const noexcept { return gradients_; }
    void zero_grad() { gradients_.clear(); }

    const Tensor& value(Var v) const;
    std::size_t size() const noexcept { return nodes_.size(); }

    // Used by operation implementations.
    bool needs_grad(Var v) const;
    Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward);
    Var record(Tensor value, const std::vector<Var>& parents, BackwardFn backward);
    /// Gradient slot of a node, zero-initialized on first access.
    Tensor& grad(Var v);

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool needs_grad = false;
        bool has_grad = false;
        BackwardFn backward;
        const Parameter* parameter = nullptr;
    };

    void check_owner(Var v) const;

    Mode mode_;
    std::vector<Node> nodes_;
    std::unordered_map<const Parameter*, std::size_t> leaves_;
    GradientMap gradients_;
};

}  // namespace conerf::ad
