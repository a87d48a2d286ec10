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

#include "csv_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cgp::cli {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

Table read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path.string());
    Table table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty()) continue;
        const auto fields = split(view);
        if (!have_header) {
            for (auto f : fields) table.header.emplace_back(f);
            if (table.header.size() < expected.size()) throw CsvError("header must start with the expected columns", line_no);
            for (std::size_t k = 0; k < expected.size(); ++k)
                if (table.header[k] != expected[k])
                    throw CsvError("expected column '" + expected[k] + "', found '" + table.header[k] + "'", line_no);
            table.columns.resize(table.header.size());
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw CsvError("expected " + std::to_string(table.header.size()) + " fields, found " +
                               std::to_string(fields.size()),
                           line_no);
        }
        for (std::size_t k = 0; k < fields.size(); ++k) {
            double v = 0.0;
            const auto f = fields[k];
            const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
            if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v))
                throw CsvError("not a finite number: '" + std::string(f) + "'", line_no);
            table.columns[k].push_back(v);
        }
    }
    if (!have_header) throw CsvError("empty file", line_no == 0 ? 1 : line_no);
    if (table.rows() == 0) throw CsvError("no data rows", line_no + 1);
    return table;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_text_atomic(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InvalidArgument("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw InvalidArgument("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string to_csv(const std::vector<std::string>& header, const std::vector<const Eigen::VectorXd*>& columns) {
    std::ostringstream out;
    for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
    out << '\n';
    const Eigen::Index rows = columns.empty() ? 0 : columns.front()->size();
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (std::size_t k = 0; k < columns.size(); ++k) out << (k ? "," : "") << format_double((*columns[k])[i]);
        out << '\n';
    }
    return out.str();
}

}  // namespace cgp::cli
