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

#include "compact_gp/quadrature.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace cgp {

namespace {

GaussLegendreRule compute_rule(int order) {
    GaussLegendreRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    for (int i = 0; i < (order + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // three-term recurrence for P_order(x) and its derivative
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= order; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = order * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[order - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[order - 1 - i] = w;
    }
    if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
    return rule;
}

}  // namespace

const GaussLegendreRule& gauss_legendre(int order) {
    if (order < 1 || order > 512) throw InvalidArgument("Gauss-Legendre order must be in [1, 512]");
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<GaussLegendreRule>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[order];
    if (!slot) {
        if (order == 1) {
            slot = std::make_unique<GaussLegendreRule>();
            slot->nodes = Eigen::VectorXd::Zero(1);
            slot->weights = Eigen::VectorXd::Constant(1, 2.0);
        } else {
            slot = std::make_unique<GaussLegendreRule>(compute_rule(order));
        }
    }
    return *slot;
}

CompositeRule composite_rule(double a, double b, int panels, int order) {
    if (panels < 1) throw InvalidArgument("composite rule needs at least one panel");
    const GaussLegendreRule& rule = gauss_legendre(order);
    CompositeRule out;
    out.nodes.resize(static_cast<Eigen::Index>(panels) * order);
    out.weights.resize(out.nodes.size());
    const double width = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        const double mid = lo + 0.5 * width;
        for (int k = 0; k < order; ++k) {
            out.nodes[p * order + k] = mid + 0.5 * width * rule.nodes[k];
            out.weights[p * order + k] = 0.5 * width * rule.weights[k];
        }
    }
    return out;
}

}  // namespace cgp
