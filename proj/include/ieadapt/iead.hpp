// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "ieadapt/tensor.hpp"

namespace ieadapt::iead {

// Container layout (all little-endian):
//   "IEAD" | u32 version = 1 | u8 dtype = 0 (f32) | u8 ndim | u64 dims[ndim] | f32 payload
inline constexpr char kMagic[4] = {'I', 'E', 'A', 'D'};
inline constexpr std::uint32_t kVersion = 1;

std::string encode(const Tensor& t);
Tensor decode(const std::string& bytes);

void save(const std::filesystem::path& path, const Tensor& t);
Tensor load(const std::filesystem::path& path);

}  // namespace ieadapt::iead
