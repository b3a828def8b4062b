// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "conerf/tape.hpp"

#include "conerf/error.hpp"

namespace conerf::ad {

const Tensor& Var::value() const {
    require(tape_ != nullptr, "use of an unbound Var");
    return tape_->value(*this);
}

const Tensor* GradientMap::find(const Parameter& p) const {
    auto it = grads_.find(&p);
    return it == grads_.end() ? nullptr : &it->second;
}

const Tensor& GradientMap::at(const Parameter& p) const {
    const Tensor* g = find(p);
    require(g != nullptr, "no gradient recorded for parameter '" + p.name + "'");
    return *g;
}

void GradientMap::clear() {
    order_.clear();
    grads_.clear();
}

Tensor& GradientMap::slot(const Parameter& p) {
    auto [it, inserted] = grads_.try_emplace(&p);
    if (inserted) {
        it->second = Tensor(p.value.shape(), 0.0);
        order_.push_back(&p);
    }
    return it->second;
}

void Tape::check_owner(Var v) const {
    require(v.tape_ == this, "Var belongs to a different tape");
    require(v.id_ < nodes_.size(), "Var id out of range");
}

const Tensor& Tape::value(Var v) const {
    check_owner(v);
    return nodes_[v.id_].value;
}

bool Tape::needs_grad(Var v) const {
    check_owner(v);
    return nodes_[v.id_].needs_grad;
}

Var Tape::constant(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, false, false, {}, nullptr});
    return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(const Parameter& parameter) {
    if (auto it = leaves_.find(&parameter); it != leaves_.end()) return Var(this, it->second);
    const bool trainable = mode_ == Mode::kTraining;
    nodes_.push_back(Node{parameter.value, {}, trainable, false, {}, trainable ? &parameter : nullptr});
    leaves_.emplace(&parameter, nodes_.size() - 1);
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward) {
    bool any = false;
    for (Var p : parents) {
        check_owner(p);
        any = any || nodes_[p.id_].needs_grad;
    }
    if (!any) backward = nullptr;
    nodes_.push_back(Node{std::move(value), {}, any, false, std::move(backward), nullptr});
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, const std::vector<Var>& parents, BackwardFn backward) {
    bool any = false;
    for (Var p : parents) {
        check_owner(p);
        any = any || nodes_[p.id_].needs_grad;
    }
    if (!any) backward = nullptr;
    nodes_.push_back(Node{std::move(value), {}, any, false, std::move(backward), nullptr});
    return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad(Var v) {
    check_owner(v);
    Node& node = nodes_[v.id_];
    if (!node.has_grad) {
        node.grad = Tensor(node.value.shape(), 0.0);
        node.has_grad = true;
    }
    return node.grad;
}

const GradientMap& Tape::backward(Var loss) {
    check_owner(loss);
    require(nodes_[loss.id_].value.size() == 1,
            "backward() needs a scalar loss, got shape " + nodes_[loss.id_].value.shape_string());
    for (Node& node : nodes_) {
        node.has_grad = false;
        node.grad = Tensor();
    }
    if (!nodes_[loss.id_].needs_grad) return gradients_;
    grad(loss).fill(1.0);
    for (std::size_t i = loss.id_ + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (!node.needs_grad || !node.has_grad) continue;
        if (node.parameter != nullptr) {
            gradients_.slot(*node.parameter) += node.grad;
        } else if (node.backward) {
            // The closure may touch other nodes' grads; hand it a stable copy.
            const Tensor out_grad = std::move(node.grad);
            node.backward(*this, out_grad);
        }
    }
    return gradients_;
}

}  // namespace conerf::ad
