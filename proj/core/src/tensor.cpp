// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "conerf/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "conerf/error.hpp"

namespace conerf::ad {

Index element_count(const Shape& shape) {
    Index n = 1;
    for (Index extent : shape) {
        require(extent >= 0, "tensor extents must be non-negative");
        n *= extent;
    }
    return n;
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), values_(static_cast<std::size_t>(element_count(shape_)), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(values.begin(), values.end()) {
    require(element_count(shape_) == static_cast<Index>(values_.size()),
            "tensor value count does not match shape " + shape_string());
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

Tensor Tensor::matrix(Index rows, Index cols, double fill) { return Tensor(Shape{rows, cols}, fill); }

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const Index r = static_cast<Index>(rows.size());
    const Index c = r == 0 ? 0 : static_cast<Index>(rows.begin()->size());
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(r * c));
    for (const auto& row : rows) {
        require(static_cast<Index>(row.size()) == c, "ragged rows in Tensor::from_rows");
        values.insert(values.end(), row.begin(), row.end());
    }
    return Tensor(Shape{r, c}, std::move(values));
}

Tensor Tensor::row(std::initializer_list<double> values) {
    return Tensor(Shape{1, static_cast<Index>(values.size())}, std::vector<double>(values));
}

Index Tensor::rows() const noexcept {
    if (shape_.size() < 2) return 1;
    Index r = 1;
    for (std::size_t i = 0; i + 1 < shape_.size(); ++i) r *= shape_[i];
    return r;
}

Index Tensor::cols() const noexcept {
    if (shape_.empty()) return 1;
    return shape_.back();
}

double Tensor::item() const {
    require(values_.size() == 1, "item() on tensor of shape " + shape_string());
    return values_.front();
}

void Tensor::fill(double value) noexcept { std::fill(values_.begin(), values_.end(), value); }

Tensor Tensor::reshaped(Shape shape) const {
    require(element_count(shape) == size(), "reshape changes element count");
    Tensor out = *this;
    out.shape_ = std::move(shape);
    return out;
}

Tensor& Tensor::operator+=(const Tensor& other) {
    require(size() == other.size(), "accumulate between " + shape_string() + " and " + other.shape_string());
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

std::string Tensor::shape_string() const {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) out << (i ? "," : "") << shape_[i];
    out << ']';
    return out.str();
}

}  // namespace conerf::ad
