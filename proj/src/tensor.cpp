// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#include "ieadapt/tensor.hpp"

#include <cmath>
#include <sstream>

#include "ieadapt/errors.hpp"

namespace ieadapt {

std::size_t element_count(const Dims& dims) {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

std::string dims_to_string(const Dims& dims) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) os << 'x';
        os << dims[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(Dims dims, float fill) : dims_(std::move(dims)), data_(element_count(dims_), fill) {}

Tensor::Tensor(Dims dims, std::vector<float> data) : dims_(std::move(dims)), data_(std::move(data)) {
    if (data_.size() != element_count(dims_)) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match dims " + dims_to_string(dims_));
    }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<float> values) {
    return Tensor({rows, cols}, std::vector<float>(values));
}

std::span<float> Tensor::row(std::size_t r) {
    const std::size_t w = dims_.back();
    return std::span<float>(data_).subspan(r * w, w);
}

std::span<const float> Tensor::row(std::size_t r) const {
    const std::size_t w = dims_.back();
    return std::span<const float>(data_).subspan(r * w, w);
}

Tensor Tensor::reshaped(Dims dims) const {
    if (element_count(dims) != data_.size()) {
        throw ShapeError("cannot reshape " + dims_to_string(dims_) + " to " + dims_to_string(dims));
    }
    return Tensor(std::move(dims), data_);
}

bool Tensor::all_finite() const noexcept {
    for (float v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
    if (t.rank() != rank) {
        throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                         dims_to_string(t.dims()));
    }
}

void require_same_dims(const Tensor& a, const Tensor& b, const char* what) {
    if (a.dims() != b.dims()) {
        throw ShapeError(std::string(what) + ": " + dims_to_string(a.dims()) + " vs " +
                         dims_to_string(b.dims()));
    }
}

}  // namespace ieadapt
