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

#include "compact_gp/basis.hpp"

#include <algorithm>
#include <cctype>

#include "compact_gp/errors.hpp"

namespace cgp {

BasisSpec make_basis(BasisFamily family, int order) {
    if (order < 1 || order > kMaxBasisOrder) {
        throw OrderOutOfRange("basis order " + std::to_string(order) + " outside [1, " +
                              std::to_string(kMaxBasisOrder) + "]");
    }
    return BasisSpec{family, order};
}

std::string to_string(BasisFamily family) {
    return family == BasisFamily::Fourier ? "fourier" : "polynomial";
}

BasisFamily parse_basis_family(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "fourier") return BasisFamily::Fourier;
    if (lower == "polynomial" || lower == "poly") return BasisFamily::Polynomial;
    throw InvalidArgument("unknown basis family '" + std::string(name) + "'");
}

}  // namespace cgp
