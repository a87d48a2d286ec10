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

#include "compact_gp/kernels.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "compact_gp/errors.hpp"
#include "compact_gp/sinc.hpp"

namespace cgp {

CompactKernel::CompactKernel(PhiMatrix phi, const Eigen::MatrixXd& A, double cutoff)
    : phi_(std::move(phi)), cutoff_(cutoff) {
    const int m = phi_.order();
    if (A.rows() != m || A.cols() != m) {
        throw DimensionMismatch("parameter matrix must be " + std::to_string(m) + "x" + std::to_string(m));
    }
    if (!(cutoff > 0.0) || !std::isfinite(cutoff)) throw InvalidArgument("cutoff must be positive and finite");
    if (!A.allFinite()) throw InvalidArgument("parameter matrix has non-finite entries");
    A_ = 0.5 * (A + A.transpose());
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A_, Eigen::EigenvaluesOnly)
                               .eigenvalues()
                               .minCoeff();
    if (min_eig < -1e-10 * std::max(1.0, A_.trace())) {
        throw InvalidArgument("parameter matrix is not positive semi-definite (min eigenvalue " +
                              std::to_string(min_eig) + ")");
    }
}

double CompactKernel::operator()(double t) const {
    const double tau = std::abs(t) / cutoff_;
    if (tau >= 1.0) return 0.0;
    return phi_.contract(A_, tau);
}

Eigen::MatrixXd CompactKernel::grad_A(double t) const { return phi_(std::abs(t) / cutoff_); }

TargetKernel::TargetKernel(TargetFamily family_, double amplitude_, double lengthscale_)
    : family(family_), amplitude(amplitude_), lengthscale(lengthscale_) {
    if (!(amplitude > 0.0) || !std::isfinite(amplitude)) throw InvalidArgument("amplitude must be positive");
    if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) throw InvalidArgument("lengthscale must be positive");
}

double TargetKernel::operator()(double t) const {
    const double r = std::abs(t) / lengthscale;
    const double u = std::max(0.0, 1.0 - r);  // (1 - |t|)_+
    double f = 0.0;
    switch (family) {
        case TargetFamily::SE:
            f = std::exp(-r * r);
            break;
        case TargetFamily::OU:
            f = std::exp(-r);
            break;
        case TargetFamily::Matern52: {
            const double s = std::sqrt(5.0) * r;
            f = std::exp(-s) * (1.0 + s + 5.0 / 3.0 * r * r);
            break;
        }
        case TargetFamily::Sinc:
            f = sinc(r);
            break;
        case TargetFamily::Wendland1:
            f = u;
            break;
        case TargetFamily::Wendland2:
            f = std::pow(u, 4) * (4.0 * r + 1.0);
            break;
        case TargetFamily::Wendland3:
            f = std::pow(u, 6) * (35.0 * r * r + 18.0 * r + 3.0) / 3.0;
            break;
        case TargetFamily::Wendland4:
            f = std::pow(u, 8) * (32.0 * r * r * r + 25.0 * r * r + 8.0 * r + 1.0);
            break;
    }
    return amplitude * f;
}

bool TargetKernel::is_compact() const {
    switch (family) {
        case TargetFamily::Wendland1:
        case TargetFamily::Wendland2:
        case TargetFamily::Wendland3:
        case TargetFamily::Wendland4:
            return true;
        default:
            return false;
    }
}

double TargetKernel::support() const {
    return is_compact() ? lengthscale : std::numeric_limits<double>::infinity();
}

std::string to_string(TargetFamily family) {
    switch (family) {
        case TargetFamily::SE: return "se";
        case TargetFamily::OU: return "ou";
        case TargetFamily::Matern52: return "matern52";
        case TargetFamily::Sinc: return "sinc";
        case TargetFamily::Wendland1: return "wendland1";
        case TargetFamily::Wendland2: return "wendland2";
        case TargetFamily::Wendland3: return "wendland3";
        case TargetFamily::Wendland4: return "wendland4";
    }
    return "unknown";
}

TargetFamily parse_target_family(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "se") return TargetFamily::SE;
    if (lower == "ou") return TargetFamily::OU;
    if (lower == "matern52" || lower == "matern") return TargetFamily::Matern52;
    if (lower == "sinc") return TargetFamily::Sinc;
    if (lower == "wendland1" || lower == "w1") return TargetFamily::Wendland1;
    if (lower == "wendland2" || lower == "w2") return TargetFamily::Wendland2;
    if (lower == "wendland3" || lower == "w3") return TargetFamily::Wendland3;
    if (lower == "wendland4" || lower == "w4") return TargetFamily::Wendland4;
    throw InvalidArgument("unknown target kernel '" + std::string(name) + "'");
}

double target_eval(const TargetKernel& k, double t) { return k(t); }
double kernel_eval(const CompactKernel& k, double t) { return k(t); }
Eigen::MatrixXd kernel_grad_A(const CompactKernel& k, double t) { return k.grad_A(t); }

double evaluate(const Kernel& k, double t) {
    return std::visit([t](const auto& kernel) { return kernel(t); }, k);
}

double support_radius(const Kernel& k) {
    if (const auto* c = std::get_if<CompactKernel>(&k)) return c->cutoff();
    return std::get<TargetKernel>(k).support();
}

double tensor_product_eval(const Kernel& k, std::span<const double> x) {
    if (x.empty()) throw DimensionMismatch("tensor-product kernel needs at least one coordinate");
    const double radius = support_radius(k);
    for (double xj : x)
        if (std::abs(xj) >= radius) return 0.0;
    double product = 1.0;
    for (double xj : x) product *= evaluate(k, xj);
    return product;
}

}  // namespace cgp
