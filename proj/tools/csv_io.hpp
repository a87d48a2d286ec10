/*
 * Copyright 2026 The compact-gp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "compact_gp/errors.hpp"

namespace cgp::cli {

/// Malformed input file; `line()` is the 1-based line that failed.
class CsvError : public InvalidArgument {
public:
    CsvError(const std::string& what, std::size_t line)
        : InvalidArgument(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

/// Numeric CSV with one header row whose leading columns must be `expected`
/// (extra columns are kept). Throws CsvError on the first bad line, including
/// a file without data rows.
Table read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);

/// CSV writer for a header plus equal-length numeric columns.
std::string to_csv(const std::vector<std::string>& header, const std::vector<const Eigen::VectorXd*>& columns);

}  // namespace cgp::cli
