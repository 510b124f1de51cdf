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
#ifndef STC_IO_HPP
#define STC_IO_HPP

// JSON documents for systems and network layouts, and RFC-4180 CSV helpers.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "stc/plant.hpp"

namespace stc {

using Json = nlohmann::ordered_json;

// --- matrices and systems ----------------------------------------------------------

/// Row-major flat array.
inline Json matrixToJson(const Matrix& m)
{
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            arr.push_back(m(i, j));
        }
    }
    return arr;
}

inline Matrix matrixFromJson(const Json& j, Eigen::Index rows, Eigen::Index cols, const std::string& name)
{
    detail::require<InputError>(j.is_array(), name + " must be an array of numbers");
    detail::require<DimensionError>(j.size() == static_cast<std::size_t>(rows * cols),
                                    name + " must have " + std::to_string(rows * cols) + " entries");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index k = 0; k < cols; ++k) {
            const Json& v = j[static_cast<std::size_t>(i * cols + k)];
            detail::require<InputError>(v.is_number(), name + " entries must be numbers");
            m(i, k) = v.get<double>();
        }
    }
    requireFinite(m, name.c_str());
    return m;
}

inline Json systemToJson(const LtiSystem& sys)
{
    Json j;
    j["n"] = sys.stateDim();
    j["m"] = sys.inputDim();
    j["A"] = matrixToJson(sys.a());
    j["B"] = matrixToJson(sys.b());
    j["Q"] = matrixToJson(sys.q());
    j["R"] = matrixToJson(sys.r());
    return j;
}

inline LtiSystem systemFromJson(const Json& j)
{
    detail::require<InputError>(j.is_object(), "system must be an object");
    detail::require<InputError>(j.contains("n") && j["n"].is_number_integer() && j["n"].get<long long>() >= 1,
                                "system.n must be a positive integer");
    detail::require<InputError>(j.contains("m") && j["m"].is_number_integer() && j["m"].get<long long>() >= 1,
                                "system.m must be a positive integer");
    const auto n = static_cast<Eigen::Index>(j["n"].get<long long>());
    const auto m = static_cast<Eigen::Index>(j["m"].get<long long>());
    for (const char* key : {"A", "B", "Q", "R"}) {
        detail::require<InputError>(j.contains(key), std::string("system.") + key + " is required");
    }
    return LtiSystem(matrixFromJson(j["A"], n, n, "system.A"), matrixFromJson(j["B"], n, m, "system.B"),
                     matrixFromJson(j["Q"], n, n, "system.Q"), matrixFromJson(j["R"], m, m, "system.R"));
}

// --- network layouts ----------------------------------------------------------------

inline NodeType nodeTypeFromName(const std::string& s)
{
    if (s == "square") {
        return NodeType::Square;
    }
    if (s == "circle") {
        return NodeType::Circle;
    }
    throw InputError("node type must be \"square\" or \"circle\", got \"" + s + "\"");
}

/// Generated network: parameters, drawn layout and the assembled system.
inline Json networkToJson(const NetworkSpec& spec, const NetworkLayout& layout, const LtiSystem& sys)
{
    Json j;
    j["N"] = spec.subsystemCount;
    j["side"] = spec.side;
    j["beta"] = spec.decayRate;
    j["seed"] = spec.seed;
    Json nodes = Json::array();
    for (std::size_t i = 0; i < layout.positions.size(); ++i) {
        nodes.push_back({{"x", layout.positions[i].x},
                         {"y", layout.positions[i].y},
                         {"type", nodeTypeName(layout.types[i])}});
    }
    j["nodes"] = nodes;
    j["system"] = systemToJson(sys);
    return j;
}

/// Node positions and types from a document written by networkToJson.
inline NetworkLayout layoutFromJson(const Json& j)
{
    detail::require<InputError>(j.is_object() && j.contains("nodes") && j["nodes"].is_array(),
                                "network document must contain a nodes array");
    NetworkLayout layout;
    for (const auto& node : j["nodes"]) {
        detail::require<InputError>(node.contains("x") && node.contains("y") && node.contains("type"),
                                    "each node needs x, y and type");
        layout.positions.push_back({node["x"].get<double>(), node["y"].get<double>()});
        layout.types.push_back(nodeTypeFromName(node["type"].get<std::string>()));
    }
    return layout;
}

// --- files --------------------------------------------------------------------------

inline std::string readTextFile(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline void writeTextFile(const std::filesystem::path& path, const std::string& text)
{
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    os << text;
    os.flush();
    if (!os) {
        throw IoError("write to " + path.string() + " failed");
    }
}

// --- CSV ------------------------------------------------------------------------------

/// Twelve significant digits; integers print without exponent or trailing zeros.
inline std::string formatNumber(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::string csvField(const std::string& s)
{
    if (s.find_first_of(",\"\r\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

/// In-memory CSV with a header row; serialized with CRLF record separators.
class CsvTable {
public:
    CsvTable() = default;
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    const std::vector<std::string>& header() const { return header_; }
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }

    void addRow(std::vector<std::string> row)
    {
        detail::require<InputError>(row.size() == header_.size(), "CsvTable: row width differs from header");
        rows_.push_back(std::move(row));
    }

    void addNumbers(const std::vector<double>& values)
    {
        std::vector<std::string> row;
        row.reserve(values.size());
        for (double v : values) {
            row.push_back(formatNumber(v));
        }
        addRow(std::move(row));
    }

    /// Column index by name, or throws InputError.
    std::size_t column(const std::string& name) const
    {
        for (std::size_t i = 0; i < header_.size(); ++i) {
            if (header_[i] == name) {
                return i;
            }
        }
        throw InputError("CSV has no column \"" + name + "\"");
    }

    std::vector<double> numbers(const std::string& name) const
    {
        const std::size_t c = column(name);
        std::vector<double> out;
        out.reserve(rows_.size());
        for (const auto& r : rows_) {
            out.push_back(std::stod(r[c]));
        }
        return out;
    }

    std::string str() const
    {
        std::string out;
        auto line = [&out](const std::vector<std::string>& fields) {
            for (std::size_t i = 0; i < fields.size(); ++i) {
                if (i > 0) {
                    out += ',';
                }
                out += csvField(fields[i]);
            }
            out += "\r\n";
        };
        line(header_);
        for (const auto& r : rows_) {
            line(r);
        }
        return out;
    }

    static CsvTable parse(const std::string& text)
    {
        std::vector<std::vector<std::string>> records;
        std::vector<std::string> fields;
        std::string field;
        bool quoted = false;
        bool any = false;
        for (std::size_t i = 0; i < text.size(); ++i) {
            const char c = text[i];
            if (quoted) {
                if (c == '"') {
                    if (i + 1 < text.size() && text[i + 1] == '"') {
                        field += '"';
                        ++i;
                    } else {
                        quoted = false;
                    }
                } else {
                    field += c;
                }
                continue;
            }
            if (c == '"') {
                quoted = true;
                any = true;
            } else if (c == ',') {
                fields.push_back(std::move(field));
                field.clear();
                any = true;
            } else if (c == '\r' || c == '\n') {
                if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
                    ++i;
                }
                fields.push_back(std::move(field));
                field.clear();
                records.push_back(std::move(fields));
                fields.clear();
                any = false;
            } else {
                field += c;
                any = true;
            }
        }
        detail::require<InputError>(!quoted, "CSV: unterminated quoted field");
        if (any || !field.empty()) {
            fields.push_back(std::move(field));
            records.push_back(std::move(fields));
        }
        detail::require<InputError>(!records.empty(), "CSV: missing header row");
        CsvTable t(records.front());
        for (std::size_t r = 1; r < records.size(); ++r) {
            t.addRow(std::move(records[r]));
        }
        return t;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline CsvTable readCsv(const std::filesystem::path& path)
{
    return CsvTable::parse(readTextFile(path));
}

inline void writeCsv(const std::filesystem::path& path, const CsvTable& table)
{
    writeTextFile(path, table.str());
}

}  // namespace stc

#endif  // STC_IO_HPP
