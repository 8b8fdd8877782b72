// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#include "ieadapt/iead.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ieadapt/errors.hpp"

namespace ieadapt::iead {

namespace {

template <typename T>
void put_le(std::string& out, T value) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw IoError("IEAD: truncated stream");
    std::uint64_t u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        u |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    pos += sizeof(T);
    return static_cast<T>(u);
}

}  // namespace

std::string encode(const Tensor& t) {
    if (t.rank() > 255) throw ShapeError("IEAD: rank above 255");
    std::string out(kMagic, 4);
    put_le<std::uint32_t>(out, kVersion);
    out.push_back(0);
    out.push_back(static_cast<char>(t.rank()));
    for (auto d : t.dims()) put_le<std::uint64_t>(out, d);
    out.reserve(out.size() + 4 * t.size());
    for (float v : t.data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

Tensor decode(const std::string& bytes) {
    if (bytes.size() < 10 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw IoError("IEAD: bad magic");
    std::size_t pos = 4;
    const auto version = get_le<std::uint32_t>(bytes, pos);
    if (version != kVersion) throw IoError("IEAD: unsupported version " + std::to_string(version));
    const auto dtype = get_le<std::uint8_t>(bytes, pos);
    if (dtype != 0) throw IoError("IEAD: unsupported dtype " + std::to_string(dtype));
    const auto ndim = get_le<std::uint8_t>(bytes, pos);
    Dims dims(ndim);
    for (auto& d : dims) d = static_cast<std::size_t>(get_le<std::uint64_t>(bytes, pos));
    const std::size_t n = element_count(dims);
    if (bytes.size() - pos != 4 * n) throw IoError("IEAD: payload size mismatch");
    std::vector<float> data(n);
    for (auto& v : data) v = std::bit_cast<float>(get_le<std::uint32_t>(bytes, pos));
    return Tensor(std::move(dims), std::move(data));
}

void save(const std::filesystem::path& path, const Tensor& t) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    const std::string bytes = encode(t);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write failed: " + path.string());
}

Tensor load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return decode(ss.str());
}

}  // namespace ieadapt::iead
