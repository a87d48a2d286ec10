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

#include "compact_gp/fit.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "compact_gp/kernel_io.hpp"
#include "compact_gp/phi.hpp"

namespace cgp {

void FitConfig::validate() const {
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
    if (max_epochs < 1) throw InvalidArgument("max_epochs must be at least 1");
    if (!(tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
    if (probes < 1) throw InvalidArgument("probes must be at least 1");
    if (!(noise_floor > 0.0)) throw InvalidArgument("noise floor must be positive");
    if (noise && !(*noise > 0.0)) throw InvalidArgument("noise variance must be positive");
    if (cutoffs.empty()) throw InvalidArgument("cutoff grid is empty");
    for (double c : cutoffs)
        if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("cutoff must be > 0 (got " + std::to_string(c) + ")");
}

namespace {

struct Adam {
    Eigen::VectorXd m, v;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    int t = 0;

    explicit Adam(Eigen::Index n) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}

    void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, double lr) {
        ++t;
        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v + (1.0 - beta2) * grad.cwiseAbs2();
        const double c1 = 1.0 - std::pow(beta1, t);
        const double c2 = 1.0 - std::pow(beta2, t);
        theta.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    }
};

// θ = [vech(L) column-major over the lower triangle, log σ_n²]
Eigen::MatrixXd unpack_lower(const Eigen::VectorXd& theta, int M) {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(M, M);
    Eigen::Index k = 0;
    for (int j = 0; j < M; ++j)
        for (int i = j; i < M; ++i) L(i, j) = theta[k++];
    return L;
}

struct CutoffRun {
    CutoffResult summary;
    Eigen::MatrixXd A;
    double noise = 0.0;
    std::vector<double> trace;
    Index cg_iterations = 0;
    double min_margin = std::numeric_limits<double>::infinity();
};

CutoffRun run_cutoff(const GPDataset& data, const PhiMatrix& phi, double cutoff, const FitConfig& cfg,
                     double var_scale, std::uint64_t stream) {
    const int M = phi.order();
    const Index n = data.size();
    const Eigen::Index nl = M * (M + 1) / 2;
    const double log_floor = std::log(cfg.noise_floor * var_scale);

    Eigen::VectorXd theta(nl + 1);
    theta.head(nl) = Eigen::VectorXd::Zero(nl);
    {
        Eigen::Index k = 0;
        for (int j = 0; j < M; ++j)
            for (int i = j; i < M; ++i, ++k)
                if (i == j) theta[k] = std::sqrt(var_scale / M);
    }
    theta[nl] = std::log(cfg.noise.value_or(0.01 * var_scale));

    CutoffRun run;
    run.summary.cutoff = cutoff;
    run.summary.nll = std::numeric_limits<double>::infinity();
    const CompactGramCache cache(phi, cutoff, data.x);
    Adam adam(nl + 1);

    GradientOptions gopts;
    gopts.mode = cfg.mode;
    gopts.probes = cfg.probes;
    gopts.cg = cfg.cg;
    gopts.dense_limit = cfg.dense_limit;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const Eigen::MatrixXd L = unpack_lower(theta, M);
        const Eigen::MatrixXd A = L * L.transpose();
        const double noise = std::exp(std::max(theta[nl], log_floor));
        const double trA = A.trace();
        if (trA > 0.0) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
            run.min_margin = std::min(run.min_margin, es.eigenvalues()[0] / trA);
        }

        gopts.seed = stream * 1000003ULL + static_cast<std::uint64_t>(epoch);
        const NllGradient g = nll_grad_A(cache, A, data, noise, gopts);
        run.cg_iterations += g.cg_iterations;
        double nll = g.nll;
        if (cfg.mode == InferenceMode::Sparse) nll = nll_sparse(cache.assemble(A, noise), data.y, cfg.cg);
        if (!std::isfinite(nll) || !g.dA.allFinite() || !std::isfinite(g.dnoise)) {
            throw Error("non-finite NLL or gradient at epoch " + std::to_string(epoch));
        }
        const double per_point = nll / static_cast<double>(n);
        run.trace.push_back(per_point);
        run.summary.epochs = epoch + 1;
        if (per_point < run.summary.nll) {
            run.summary.nll = per_point;
            run.A = A;
            run.noise = noise;
        }
        if (epoch > 0 && std::abs(run.trace[epoch] - run.trace[epoch - 1]) < cfg.tolerance) break;

        Eigen::VectorXd grad = Eigen::VectorXd::Zero(nl + 1);
        const Eigen::MatrixXd dL = (g.dA + g.dA.transpose()) * L;
        Eigen::Index k = 0;
        for (int j = 0; j < M; ++j)
            for (int i = j; i < M; ++i) grad[k++] = dL(i, j);
        if (cfg.learn_noise) grad[nl] = g.dnoise * noise;
        adam.step(theta, grad, cfg.learning_rate);
        if (!cfg.learn_noise) theta[nl] = std::log(noise);
        theta[nl] = std::max(theta[nl], log_floor);
    }
    return run;
}

}  // namespace

FitReport fit_mle(const GPDataset& data, const BasisSpec& basis, const FitConfig& cfg) {
    cfg.validate();
    if (data.dim() != 1) throw DimensionMismatch("fit_mle supports 1-D inputs only");
    if (data.size() < 1) throw InvalidArgument("fit_mle needs at least one observation");
    const auto start = std::chrono::steady_clock::now();

    const double mean = data.y.mean();
    double var_scale = (data.y.array() - mean).square().mean();
    if (!(var_scale > 0.0)) var_scale = 1.0;

    const PhiMatrix phi = compute_phi(basis);
    FitReport report;
    std::optional<CutoffRun> best;
    for (std::size_t c = 0; c < cfg.cutoffs.size(); ++c) {
        CutoffRun run;
        try {
            run = run_cutoff(data, phi, cfg.cutoffs[c], cfg, var_scale, cfg.seed + c);
        } catch (const Error& e) {
            CutoffResult failed;
            failed.cutoff = cfg.cutoffs[c];
            failed.nll = std::numeric_limits<double>::infinity();
            failed.error = e.what();
            report.candidates.push_back(failed);
            continue;
        }
        report.cg_iterations += run.cg_iterations;
        report.candidates.push_back(run.summary);
        if (std::isfinite(run.summary.nll) && (!best || run.summary.nll < best->summary.nll)) best = std::move(run);
    }
    if (!best) {
        std::string msg = "every cutoff failed:";
        for (const auto& c : report.candidates) msg += " c=" + std::to_string(c.cutoff) + " (" + c.error + ")";
        throw AllCutoffsFailed(msg);
    }

    report.kernel.emplace(phi, best->A, best->summary.cutoff);
    report.noise = best->noise;
    report.nll = best->summary.nll;
    report.nll_trace = std::move(best->trace);
    report.cutoff = best->summary.cutoff;
    report.min_psd_margin = best->min_margin;
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

nlohmann::json fit_report_to_json(const FitReport& report) {
    nlohmann::json doc;
    if (report.kernel) doc["kernel"] = kernel_to_json(*report.kernel, report.noise);
    doc["nll"] = report.nll;
    doc["nll_convention"] = "per-point";
    doc["nll_trace"] = report.nll_trace;
    doc["cutoff"] = report.cutoff;
    doc["seconds"] = report.seconds;
    doc["cg_iterations"] = report.cg_iterations;
    doc["min_psd_margin"] = std::isfinite(report.min_psd_margin) ? nlohmann::json(report.min_psd_margin) : nullptr;
    auto& cands = doc["candidates"] = nlohmann::json::array();
    for (const auto& c : report.candidates) {
        nlohmann::json entry{{"cutoff", c.cutoff}, {"epochs", c.epochs}};
        entry["nll"] = std::isfinite(c.nll) ? nlohmann::json(c.nll) : nullptr;
        if (!c.error.empty()) entry["error"] = c.error;
        cands.push_back(entry);
    }
    return doc;
}

}  // namespace cgp
