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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "compact_gp/errors.hpp"

namespace cgp {

/// Gauss–Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

/// Rule with `order` nodes, computed by Newton iteration on P_order.
/// Rules are cached per order; the returned reference stays valid.
const GaussLegendreRule& gauss_legendre(int order);

/// Nodes and weights of a composite rule over [a, b]: `panels` equal
/// subintervals, each with an `order`-point Gauss–Legendre rule.
struct CompositeRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

CompositeRule composite_rule(double a, double b, int panels, int order);

template <typename Fn>
double integrate_composite(Fn&& f, double a, double b, int panels, int order) {
    const CompositeRule rule = composite_rule(a, b, panels, order);
    double sum = 0.0;
    for (Eigen::Index k = 0; k < rule.nodes.size(); ++k) sum += rule.weights[k] * f(rule.nodes[k]);
    return sum;
}

namespace detail {

template <typename Fn>
double gl_on(Fn& f, double a, double b, const GaussLegendreRule& rule) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (Eigen::Index k = 0; k < rule.nodes.size(); ++k) sum += rule.weights[k] * f(mid + half * rule.nodes[k]);
    return half * sum;
}

template <typename Fn>
double adaptive_step(Fn& f, double a, double b, double whole, double tol, double tol_floor, int depth,
                     int max_depth, const GaussLegendreRule& rule) {
    const double mid = 0.5 * (a + b);
    const double left = gl_on(f, a, mid, rule);
    const double right = gl_on(f, mid, b, rule);
    const double refined = left + right;
    if (std::abs(refined - whole) <= tol) return refined;
    if (depth >= max_depth) {
        throw QuadratureNonConvergence("adaptive Gauss-Legendre did not reach tolerance on [" +
                                       std::to_string(a) + ", " + std::to_string(b) + "]");
    }
    // halving stops at the floor, otherwise endpoint singularities never settle
    const double sub = std::max(0.5 * tol, tol_floor);
    return adaptive_step(f, a, mid, left, sub, tol_floor, depth + 1, max_depth, rule) +
           adaptive_step(f, mid, b, right, sub, tol_floor, depth + 1, max_depth, rule);
}

}  // namespace detail

/// Adaptive bisection with a 20-point Gauss–Legendre rule per interval.
/// Throws QuadratureNonConvergence when `max_depth` bisections do not reach
/// `abs_tol`.
template <typename Fn>
double integrate_adaptive(Fn&& f, double a, double b, double abs_tol = 1e-12, int max_depth = 40) {
    if (b <= a) return 0.0;
    const GaussLegendreRule& rule = gauss_legendre(20);
    const double whole = detail::gl_on(f, a, b, rule);
    return detail::adaptive_step(f, a, b, whole, abs_tol, 1e-6 * abs_tol, 0, max_depth, rule);
}

}  // namespace cgp
