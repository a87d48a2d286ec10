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

#include <cmath>
#include <numbers>

namespace cgp {

/// Normalized sinc, sin(πx)/(πx), with a Taylor branch near the removable
/// singularity.
inline double sinc(double x) {
    const double px = std::numbers::pi * x;
    if (std::abs(x) < 1e-4) {
        const double px2 = px * px;
        return 1.0 - px2 / 6.0 + px2 * px2 / 120.0;
    }
    return std::sin(px) / px;
}

}  // namespace cgp
