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

#include <json.hpp>

#include "compact_gp/kernels.hpp"

namespace cgp {

/// A compact kernel together with its observation-noise variance, as stored on disk:
///   {"basis": "fourier"|"polynomial", "order": M, "cutoff": c,
///    "A": [row-major M*M], "noise": σ_n²}
struct KernelModel {
    CompactKernel kernel;
    double noise = 0.0;
};

nlohmann::json kernel_to_json(const CompactKernel& kernel, double noise);

/// A is read in full and symmetrized as (A + Aᵀ)/2. Throws InvalidArgument on
/// malformed documents.
KernelModel kernel_from_json(const nlohmann::json& doc);

KernelModel read_kernel_file(const std::filesystem::path& path);

/// Writes pretty-printed JSON atomically (temp file + rename).
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace cgp
