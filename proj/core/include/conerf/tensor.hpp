// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace conerf::ad {

using Index = std::ptrdiff_t;
using Shape = std::vector<Index>;

inline constexpr std::size_t kTensorAlignment = 64;

/// Over-aligned allocator for tensor storage. Every buffer starts on the
/// same boundary, so vectorised kernels round identically from run to run.
template <typename T>
struct AlignedAllocator {
    using value_type = T;

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) {
        return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{kTensorAlignment}));
    }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t{kTensorAlignment}); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const noexcept {
        return true;
    }
};

using Storage = std::vector<double, AlignedAllocator<double>>;

/// Dense row-major array of doubles.
///
/// Storage is n-dimensional, but every differentiable operation views a
/// tensor as a matrix: rank 0 is 1x1, rank 1 is a 1xN row, and higher ranks
/// fold all leading extents into rows.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    static Tensor scalar(double value);
    static Tensor matrix(Index rows, Index cols, double fill = 0.0);
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor row(std::initializer_list<double> values);

    const Shape& shape() const noexcept { return shape_; }
    Index rank() const noexcept { return static_cast<Index>(shape_.size()); }
    Index size() const noexcept { return static_cast<Index>(values_.size()); }
    Index rows() const noexcept;
    Index cols() const noexcept;
    bool empty() const noexcept { return values_.empty(); }

    double* data() noexcept { return values_.data(); }
    const double* data() const noexcept { return values_.data(); }
    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    double& operator[](Index i) { return values_[static_cast<std::size_t>(i)]; }
    double operator[](Index i) const { return values_[static_cast<std::size_t>(i)]; }
    double& operator()(Index r, Index c) { return values_[static_cast<std::size_t>(r * cols() + c)]; }
    double operator()(Index r, Index c) const {
        return values_[static_cast<std::size_t>(r * cols() + c)];
    }

    /// Value of a tensor holding exactly one element.
    double item() const;

    bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }
    void fill(double value) noexcept;
    /// Same values, new extents; the element count must not change.
    Tensor reshaped(Shape shape) const;

    /// Element-wise accumulate; shapes must match.
    Tensor& operator+=(const Tensor& other);

    std::string shape_string() const;

private:
    Shape shape_;
    Storage values_;
};

Index element_count(const Shape& shape);

}  // namespace conerf::ad
