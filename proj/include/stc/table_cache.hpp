/*
 Copyright 2026 The stc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef STC_TABLE_CACHE_HPP
#define STC_TABLE_CACHE_HPP

// Binary cache for IntegralTable.
//
// Layout (all integers and doubles little-endian):
//   char[8]  magic "STCTABLE"
//   uint32   format version (1)
//   uint32   reserved (0)
//   uint64   key (FNV-1a over n, m, A, B, Q, R, step, count)
//   uint64   n, m, count
//   float64  step
//   per grid point: E (n*n), G (n*n), H0 (n*n), H1 (n*m), H2 (m*m), row-major

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "stc/tables.hpp"

namespace stc {

inline constexpr std::uint32_t kTableCacheVersion = 1;

namespace detail {

inline constexpr std::array<char, 8> kTableMagic{'S', 'T', 'C', 'T', 'A', 'B', 'L', 'E'};

template <class T>
T toLittleEndian(T v)
{
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    } else {
        return v;
    }
}

class Fnv1a {
public:
    void add(const void* data, std::size_t size)
    {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            hash_ ^= p[i];
            hash_ *= 1099511628211ULL;
        }
    }
    template <class T>
    void addValue(T v)
    {
        v = toLittleEndian(v);
        add(&v, sizeof(T));
    }
    void addMatrix(const Matrix& m)
    {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                addValue(m(i, j));
            }
        }
    }
    std::uint64_t value() const { return hash_; }

private:
    std::uint64_t hash_ = 14695981039346656037ULL;
};

template <class T>
void writeValue(std::ostream& os, T v)
{
    v = toLittleEndian(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T readValue(std::istream& is)
{
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) {
        throw IoError("table cache: truncated file");
    }
    return toLittleEndian(v);
}

inline void writeMatrix(std::ostream& os, const Matrix& m)
{
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            writeValue(os, m(i, j));
        }
    }
}

inline Matrix readMatrix(std::istream& is, Eigen::Index rows, Eigen::Index cols)
{
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            m(i, j) = readValue<double>(is);
        }
    }
    return m;
}

}  // namespace detail

inline std::uint64_t tableKey(const LtiSystem& sys, const TimeGrid& grid)
{
    detail::Fnv1a h;
    h.addValue(static_cast<std::uint64_t>(sys.stateDim()));
    h.addValue(static_cast<std::uint64_t>(sys.inputDim()));
    h.addMatrix(sys.a());
    h.addMatrix(sys.b());
    h.addMatrix(sys.q());
    h.addMatrix(sys.r());
    h.addValue(grid.step());
    h.addValue(static_cast<std::uint64_t>(grid.count()));
    return h.value();
}

inline void saveTable(const IntegralTable& table, const std::filesystem::path& path)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw IoError("table cache: cannot open " + path.string() + " for writing");
    }
    const auto& sys = table.system();
    os.write(detail::kTableMagic.data(), detail::kTableMagic.size());
    detail::writeValue(os, kTableCacheVersion);
    detail::writeValue(os, std::uint32_t{0});
    detail::writeValue(os, tableKey(sys, table.grid()));
    detail::writeValue(os, static_cast<std::uint64_t>(sys.stateDim()));
    detail::writeValue(os, static_cast<std::uint64_t>(sys.inputDim()));
    detail::writeValue(os, static_cast<std::uint64_t>(table.count()));
    detail::writeValue(os, table.grid().step());
    for (std::size_t i = 0; i < table.count(); ++i) {
        const TableEntry t = table.at(i);
        detail::writeMatrix(os, t.e);
        detail::writeMatrix(os, t.g);
        detail::writeMatrix(os, t.h0);
        detail::writeMatrix(os, t.h1);
        detail::writeMatrix(os, t.h2);
    }
    if (!os) {
        throw IoError("table cache: write to " + path.string() + " failed");
    }
}

/// Returns the cached table when the file exists and its key matches (sys, grid).
inline std::optional<IntegralTable> loadTable(const std::filesystem::path& path, const LtiSystem& sys,
                                              const TimeGrid& grid)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        return std::nullopt;
    }
    std::array<char, 8> magic{};
    is.read(magic.data(), magic.size());
    if (!is || magic != detail::kTableMagic) {
        throw IoError("table cache: " + path.string() + " is not a table cache file");
    }
    const auto version = detail::readValue<std::uint32_t>(is);
    if (version != kTableCacheVersion) {
        return std::nullopt;
    }
    (void)detail::readValue<std::uint32_t>(is);
    const auto key = detail::readValue<std::uint64_t>(is);
    const auto n = detail::readValue<std::uint64_t>(is);
    const auto m = detail::readValue<std::uint64_t>(is);
    const auto count = detail::readValue<std::uint64_t>(is);
    const auto step = detail::readValue<double>(is);
    if (key != tableKey(sys, grid) || n != static_cast<std::uint64_t>(sys.stateDim()) ||
        m != static_cast<std::uint64_t>(sys.inputDim()) || count != grid.count() || step != grid.step()) {
        return std::nullopt;
    }
    const auto ni = static_cast<Eigen::Index>(n);
    const auto mi = static_cast<Eigen::Index>(m);
    std::vector<Matrix> e, g, h0, h1, h2;
    for (std::uint64_t i = 0; i < count; ++i) {
        e.push_back(detail::readMatrix(is, ni, ni));
        g.push_back(detail::readMatrix(is, ni, ni));
        h0.push_back(detail::readMatrix(is, ni, ni));
        h1.push_back(detail::readMatrix(is, ni, mi));
        h2.push_back(detail::readMatrix(is, mi, mi));
    }
    return IntegralTable(sys, grid, std::move(e), std::move(g), std::move(h0), std::move(h1), std::move(h2));
}

/// Loads from `dir` when a matching cache exists, otherwise builds and stores it.
inline IntegralTable cachedTable(const std::filesystem::path& dir, const LtiSystem& sys, const TimeGrid& grid)
{
    char name[40];
    std::snprintf(name, sizeof(name), "table-%016llx.bin", static_cast<unsigned long long>(tableKey(sys, grid)));
    const auto path = dir / name;
    if (auto cached = loadTable(path, sys, grid)) {
        return std::move(*cached);
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    IntegralTable table = buildTable(sys, grid);
    // Concurrent writers of the same key each publish a complete file by rename.
    auto tmp = path;
    tmp += ".tmp-" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    saveTable(table, tmp);
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
    }
    return table;
}

}  // namespace stc

#endif  // STC_TABLE_CACHE_HPP
