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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cgp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class OrderOutOfRange : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class QuadratureNonConvergence : public Error {
public:
    using Error::Error;
};

class EigenFailure : public Error {
public:
    using Error::Error;
};

class InfeasibleConstraint : public Error {
public:
    using Error::Error;
};

class UnsortedInput : public Error {
public:
    using Error::Error;
};

class DuplicatePoints : public Error {
public:
    using Error::Error;
};

class PatternTooSmall : public Error {
public:
    using Error::Error;
};

/// Raised by CG when pᵀAp ≤ 0, i.e. the operator is not positive definite.
class BreakdownDetected : public Error {
public:
    using Error::Error;
};

class CgNotConverged : public Error {
public:
    CgNotConverged(const std::string& what, std::size_t iterations, double residual)
        : Error(what), iterations_(iterations), residual_(residual) {}

    std::size_t iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    std::size_t iterations_;
    double residual_;
};

class NotPositiveDefinite : public Error {
public:
    NotPositiveDefinite(const std::string& what, std::ptrdiff_t pivot)
        : Error(what + " (failing pivot " + std::to_string(pivot) + ")"), pivot_(pivot) {}

    /// Zero-based row at which the factorization hit a non-positive pivot.
    std::ptrdiff_t pivot() const noexcept { return pivot_; }

private:
    std::ptrdiff_t pivot_;
};

class AllCutoffsFailed : public Error {
public:
    using Error::Error;
};

}  // namespace cgp
