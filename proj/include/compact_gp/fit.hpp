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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "compact_gp/basis.hpp"
#include "compact_gp/gp.hpp"

namespace cgp {

struct FitConfig {
    double learning_rate = 0.05;
    int max_epochs = 300;
    double tolerance = 1e-6;  // on the change of per-point NLL between epochs
    int probes = 16;          // Hutchinson probes, sparse mode
    std::vector<double> cutoffs{1.0};
    std::optional<double> noise;  // initial (or fixed) σ_n²; default 0.01·var(y)
    bool learn_noise = true;
    double noise_floor = 1e-8;  // relative to the variance scale of y
    std::uint64_t seed = 0;
    InferenceMode mode = InferenceMode::Dense;
    CgOptions cg;
    Index dense_limit = kDefaultDenseLimit;

    /// Throws InvalidArgument for non-positive settings or an empty / non-positive cutoff grid.
    void validate() const;
};

struct CutoffResult {
    double cutoff = 0.0;
    double nll = 0.0;  // best per-point NLL, +inf on failure
    int epochs = 0;
    std::string error;
};

struct FitReport {
    std::optional<CompactKernel> kernel;
    double noise = 0.0;
    double nll = 0.0;  // per point
    std::vector<double> nll_trace;  // per point, one value per epoch of the chosen cutoff
    double cutoff = 0.0;
    double seconds = 0.0;
    Index cg_iterations = 0;
    double min_psd_margin = 0.0;  // smallest min-eig(A)/tr(A) seen while optimizing
    std::vector<CutoffResult> candidates;
};

/// Maximum-likelihood fit of A = LLᵀ (and optionally σ_n²) by Adam for each
/// cutoff in the grid; returns the cutoff with the lowest NLL. Only 1-D data.
/// Throws AllCutoffsFailed when no cutoff produced a finite NLL.
FitReport fit_mle(const GPDataset& data, const BasisSpec& basis, const FitConfig& cfg);

nlohmann::json fit_report_to_json(const FitReport& report);

}  // namespace cgp
