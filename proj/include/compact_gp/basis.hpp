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

#include <string>
#include <string_view>

namespace cgp {

enum class BasisFamily { Polynomial, Fourier };

/// Upper bound on the number of basis functions.
inline constexpr int kMaxBasisOrder = 32;

/// A basis family and its size M. Construct through make_basis().
struct BasisSpec {
    BasisFamily family = BasisFamily::Fourier;
    int order = 1;

    friend bool operator==(const BasisSpec&, const BasisSpec&) = default;
};

/// Throws OrderOutOfRange unless 1 <= order <= kMaxBasisOrder.
BasisSpec make_basis(BasisFamily family, int order);

std::string to_string(BasisFamily family);

/// Accepts "fourier" or "polynomial" (case-insensitive); throws InvalidArgument otherwise.
BasisFamily parse_basis_family(std::string_view name);

}  // namespace cgp
