#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "isinglab/ising.hpp"
#include "isinglab/solve_report.hpp"
#include "isinglab/types.hpp"

namespace isinglab {

struct ExactMleOptions
{
    double gradient_tol = 1e-9; // relative to n
    int max_iter = 200;
    double coefficient_cap = 30.0;
    Index p_max = kDefaultMaxExactP;
};

struct ExactMleFit
{
    ThetaMatrix theta;
    double log_likelihood = 0.0;
    SolveReport report;
    bool separation = false;
};

/// Maximum of the exact Ising log-likelihood with off-diagonal coefficients
/// outside `allowed` fixed at zero. Damped Newton ascent; gradient
/// (X^T X)_kl - n E[X_k X_l] and Hessian -n Cov(T) come from enumeration.
inline ExactMleFit exact_constrained_mle(const BinaryDataset& data, const EdgeSet& allowed,
                                         const ExactMleOptions& opt = {})
{
    Stopwatch clock;
    const Index p = data.p();
    if (allowed.p() != p)
        throw DimensionMismatch("edge set and dataset disagree on p");
    if (p > opt.p_max)
        throw DimensionTooLarge("exact_constrained_mle limited to p <= " + std::to_string(opt.p_max));

    // Parameter layout: p diagonal entries, then allowed pairs.
    std::vector<std::pair<Index, Index>> params;
    for (Index k = 0; k < p; ++k)
        params.emplace_back(k, k);
    for (const auto& e : allowed)
        params.push_back(e);
    const auto d = static_cast<Index>(params.size());
    const double n = static_cast<double>(data.n());

    const Matrix xtx = data.data().transpose() * data.data();
    Vector suff(d);
    for (Index a = 0; a < d; ++a)
        suff(a) = xtx(params[static_cast<std::size_t>(a)].first, params[static_cast<std::size_t>(a)].second);

    auto to_theta = [&](const Vector& v) {
        Matrix t = Matrix::Zero(p, p);
        for (Index a = 0; a < d; ++a) {
            const auto [k, l] = params[static_cast<std::size_t>(a)];
            t(k, l) = v(a);
            t(l, k) = v(a);
        }
        return ThetaMatrix(std::move(t));
    };
    auto loglik = [&](const Vector& v) {
        const ThetaMatrix th = to_theta(v);
        return suff.dot(v) - n * log_partition(th, opt.p_max);
    };

    Vector v = Vector::Zero(d);
    for (Index k = 0; k < p; ++k) {
        const double m = std::clamp(data.data().col(k).mean(), 1e-12, 1.0 - 1e-12);
        v(k) = std::clamp(logit(m), -opt.coefficient_cap, opt.coefficient_cap);
    }

    ExactMleFit fit;
    double f = loglik(v);
    std::vector<double> stat(static_cast<std::size_t>(d));
    for (int it = 1; it <= opt.max_iter; ++it) {
        const ThetaMatrix th = to_theta(v);
        const auto lw = log_weights(th, opt.p_max);
        const double a = log_sum_exp(lw);
        Vector mean = Vector::Zero(d);
        Matrix second = Matrix::Zero(d, d);
        for (std::size_t s = 0; s < lw.size(); ++s) {
            const double pr = std::exp(lw[s] - a);
            if (pr == 0.0)
                continue;
            for (Index q = 0; q < d; ++q) {
                const auto [k, l] = params[static_cast<std::size_t>(q)];
                stat[static_cast<std::size_t>(q)] =
                    ((s >> k) & 1u) && ((s >> l) & 1u) ? 1.0 : 0.0;
            }
            for (Index q = 0; q < d; ++q) {
                if (stat[static_cast<std::size_t>(q)] == 0.0)
                    continue;
                mean(q) += pr;
                for (Index r = q; r < d; ++r)
                    if (stat[static_cast<std::size_t>(r)] != 0.0)
                        second(q, r) += pr;
            }
        }
        second.triangularView<Eigen::StrictlyLower>() = second.transpose().triangularView<Eigen::StrictlyLower>();
        const Vector grad = suff - n * mean;
        const double gnorm = grad.cwiseAbs().maxCoeff();
        fit.report.iterations = it;
        fit.report.final_gap_or_delta = gnorm / n;
        if (gnorm <= opt.gradient_tol * n) {
            fit.report.converged = true;
            break;
        }
        Matrix info = n * (second - mean * mean.transpose());
        info.diagonal().array() += 1e-12 * n;
        const Vector dir = info.ldlt().solve(grad);

        const double slack = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f));
        double step = 1.0;
        Vector cand = v + dir;
        double fc = loglik(cand);
        while (!(fc >= f - slack) && step > 1e-12) {
            step *= 0.5;
            cand = v + step * dir;
            fc = loglik(cand);
        }
        if (!(fc >= f - slack)) {
            // no ascent possible at working precision
            fit.report.converged = gnorm <= 1e-6 * n;
            break;
        }
        v = cand;
        f = fc;
        if (v.cwiseAbs().maxCoeff() > opt.coefficient_cap) {
            v = v.cwiseMax(-opt.coefficient_cap).cwiseMin(opt.coefficient_cap);
            f = loglik(v);
            fit.separation = true;
            fit.report.converged = true;
            break;
        }
    }
    fit.theta = to_theta(v);
    fit.log_likelihood = f;
    fit.report.wall_time = clock.seconds();
    if (!fit.report.converged)
        throw NotConvergedError("exact_constrained_mle did not converge", fit.report);
    return fit;
}

} // namespace isinglab
