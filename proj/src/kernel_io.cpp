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

#include "compact_gp/kernel_io.hpp"

#include <fstream>
#include <sstream>

#include "compact_gp/errors.hpp"

namespace cgp {

nlohmann::json kernel_to_json(const CompactKernel& kernel, double noise) {
    const int m = kernel.order();
    std::vector<double> a;
    a.reserve(static_cast<std::size_t>(m) * m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) a.push_back(kernel.A()(i, j));
    return nlohmann::json{{"basis", to_string(kernel.basis().family)},
                          {"order", m},
                          {"cutoff", kernel.cutoff()},
                          {"A", a},
                          {"noise", noise}};
}

KernelModel kernel_from_json(const nlohmann::json& doc) {
    try {
        const BasisSpec basis = make_basis(parse_basis_family(doc.at("basis").get<std::string>()),
                                           doc.at("order").get<int>());
        const auto a = doc.at("A").get<std::vector<double>>();
        const auto m = static_cast<std::size_t>(basis.order);
        if (a.size() != m * m) {
            throw InvalidArgument("kernel JSON: 'A' must have " + std::to_string(m * m) + " entries");
        }
        Eigen::MatrixXd A(basis.order, basis.order);
        for (int i = 0; i < basis.order; ++i)
            for (int j = 0; j < basis.order; ++j) A(i, j) = a[static_cast<std::size_t>(i) * m + j];
        const double noise = doc.value("noise", 0.0);
        if (!(noise >= 0.0)) throw InvalidArgument("kernel JSON: 'noise' must be non-negative");
        // CompactKernel symmetrizes A
        return KernelModel{CompactKernel(compute_phi(basis), A, doc.at("cutoff").get<double>()), noise};
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("kernel JSON: ") + e.what());
    }
}

KernelModel read_kernel_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open kernel file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("cannot parse " + path.string() + ": " + e.what());
    }
    return kernel_from_json(doc);
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw InvalidArgument("cannot write " + tmp.string());
        out << doc.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace cgp
