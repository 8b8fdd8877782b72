// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ieadapt {

using Dims = std::vector<std::size_t>;

std::size_t element_count(const Dims& dims);
std::string dims_to_string(const Dims& dims);

/// Dense row-major float32 array. The element count always equals the
/// product of the extents.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Dims dims, float fill = 0.0f);
    Tensor(Dims dims, std::vector<float> data);

    static Tensor matrix(std::size_t rows, std::size_t cols,
                         std::initializer_list<float> values);

    const Dims& dims() const noexcept { return dims_; }
    std::size_t rank() const noexcept { return dims_.size(); }
    std::size_t dim(std::size_t i) const { return dims_.at(i); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }
    float* raw() noexcept { return data_.data(); }
    const float* raw() const noexcept { return data_.data(); }

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    // Unchecked 2-D access over (leading, last) extents.
    float& at(std::size_t r, std::size_t c) { return data_[r * dims_.back() + c]; }
    float at(std::size_t r, std::size_t c) const { return data_[r * dims_.back() + c]; }

    std::span<float> row(std::size_t r);
    std::span<const float> row(std::size_t r) const;

    Tensor reshaped(Dims dims) const;
    bool all_finite() const noexcept;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Dims dims_;
    std::vector<float> data_;
};

void require_rank(const Tensor& t, std::size_t rank, const char* what);
void require_same_dims(const Tensor& a, const Tensor& b, const char* what);

}  // namespace ieadapt
