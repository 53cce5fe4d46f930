#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "isinglab/ising.hpp"
#include "isinglab/solve_report.hpp"
#include "isinglab/types.hpp"

namespace isinglab {

struct PseudoLikelihoodOptions
{
    double tol = 1e-9; // max coefficient change of a Newton step
    int max_iter = 500; // Newton steps
    double coefficient_cap = 30.0;
};

struct PseudoLikelihoodFit
{
    ThetaMatrix theta;
    SolveReport report;
    bool separation = false;
};

/// Gradient of -pseudo-l / n with respect to each free coefficient, where an
/// off-diagonal coefficient collects the contributions of both conditional
/// regressions it appears in.
inline Matrix pseudo_likelihood_gradient(const BinaryDataset& data, const ThetaMatrix& theta)
{
    const Matrix& x = data.data();
    const Matrix eta = conditional_predictors(x, theta.values());
    Matrix resid(x.rows(), x.cols()); // mu - x
    for (Index k = 0; k < x.cols(); ++k)
        for (Index i = 0; i < x.rows(); ++i)
            resid(i, k) = sigmoid(eta(i, k)) - x(i, k);
    const Matrix cross = x.transpose() * resid; // (l,k): sum_i x_il (mu_ik - x_ik)
    Matrix g = cross + cross.transpose();
    g.diagonal() = resid.colwise().sum().transpose();
    return g / static_cast<double>(x.rows());
}

/// Largest violation of the optimality conditions of
/// -pseudo-l/n + sum_{k<l} Lambda_kl |theta_kl| (infinite penalties skipped).
inline double pseudo_likelihood_kkt_residual(const BinaryDataset& data, const PenaltySpec& penalty,
                                             const ThetaMatrix& theta)
{
    const Matrix g = pseudo_likelihood_gradient(data, theta);
    double worst = 0.0;
    for (Index k = 0; k < theta.p(); ++k) {
        worst = std::max(worst, std::abs(g(k, k)));
        for (Index l = k + 1; l < theta.p(); ++l) {
            const double lam = penalty.at(k, l);
            if (std::isinf(lam))
                continue;
            const double t = theta(k, l);
            if (t == 0.0)
                worst = std::max(worst, std::max(0.0, std::abs(g(k, l)) - lam));
            else
                worst = std::max(worst, std::abs(g(k, l) + lam * (t > 0 ? 1.0 : -1.0)));
        }
    }
    return worst;
}

/// Smallest scalar lambda at which every off-diagonal coefficient is zero:
/// the largest off-diagonal gradient magnitude at the intercept-only fit.
inline double pseudo_likelihood_lambda_max(const BinaryDataset& data)
{
    const Index p = data.p();
    Matrix theta = Matrix::Zero(p, p);
    for (Index k = 0; k < p; ++k) {
        const double m = std::clamp(data.data().col(k).mean(), 1e-12, 1.0 - 1e-12);
        theta(k, k) = logit(m);
    }
    const Matrix g = pseudo_likelihood_gradient(data, ThetaMatrix(theta));
    double best = 0.0;
    for (Index k = 0; k < p; ++k)
        for (Index l = k + 1; l < p; ++l)
            best = std::max(best, std::abs(g(k, l)));
    return best;
}

namespace detail {

// -pseudo-l / n + sum_{k<l} Lambda_kl |theta_kl| at predictors eta.
inline double pseudo_objective(const Matrix& x, const Matrix& eta, const Matrix& theta,
                               const PenaltySpec& penalty)
{
    double s = 0.0;
    for (Index k = 0; k < x.cols(); ++k)
        for (Index i = 0; i < x.rows(); ++i)
            s += softplus(eta(i, k)) - x(i, k) * eta(i, k);
    s /= static_cast<double>(x.rows());
    for (Index k = 0; k < x.cols(); ++k)
        for (Index l = k + 1; l < x.cols(); ++l) {
            const double lam = penalty.at(k, l);
            if (!std::isinf(lam) && theta(k, l) != 0.0)
                s += lam * std::abs(theta(k, l));
        }
    return s;
}

} // namespace detail

/// l1-penalized pseudo-likelihood maximization over symmetric Theta:
///   max pseudo-l(X, Theta) - n sum_{k<l} Lambda_kl |theta_kl|.
/// Each off-diagonal coordinate is a single parameter shared by the two
/// conditional regressions it enters. Diagonal (intercepts) unpenalized,
/// infinite penalties pin coefficients at zero.
///
/// Proximal Newton: the loss is replaced by its second-order expansion in the
/// predictors (diagonal weights mu(1-mu)), the penalized quadratic model is
/// minimized by cyclic coordinate descent, and the step is backtracked on the
/// true objective. Stops when a step changes no coefficient by more than tol.
inline PseudoLikelihoodFit pseudo_likelihood_fit(const BinaryDataset& data,
                                                 const PenaltySpec& penalty,
                                                 const std::optional<ThetaMatrix>& warm_start = std::nullopt,
                                                 const PseudoLikelihoodOptions& opt = {})
{
    Stopwatch clock;
    const Matrix& x = data.data();
    const Index p = data.p();
    const Index n = data.n();
    const double nd = static_cast<double>(n);
    penalty.check_dimension(p);

    Matrix theta = Matrix::Zero(p, p);
    if (warm_start) {
        if (warm_start->p() != p)
            throw DimensionMismatch("warm start dimension differs from p");
        theta = warm_start->values();
    } else {
        for (Index k = 0; k < p; ++k) {
            const double m = std::clamp(x.col(k).mean(), 1e-12, 1.0 - 1e-12);
            theta(k, k) = std::clamp(logit(m), -opt.coefficient_cap, opt.coefficient_cap);
        }
    }
    std::vector<std::pair<Index, Index>> free_pairs;
    for (Index k = 0; k < p; ++k)
        for (Index l = k + 1; l < p; ++l) {
            if (std::isinf(penalty.at(k, l))) {
                theta(k, l) = 0.0;
                theta(l, k) = 0.0;
            } else {
                free_pairs.emplace_back(k, l);
            }
        }
    std::vector<std::vector<Index>> rows_on(static_cast<std::size_t>(p));
    for (Index k = 0; k < p; ++k)
        for (Index i = 0; i < n; ++i)
            if (x(i, k) != 0.0)
                rows_on[static_cast<std::size_t>(k)].push_back(i);

    PseudoLikelihoodFit fit;
    Matrix eta = conditional_predictors(x, theta);
    double obj = detail::pseudo_objective(x, eta, theta, penalty);
    Matrix w(n, p), r(n, p), d(p, p), d_eta;

    for (int it = 1; it <= opt.max_iter; ++it) {
        for (Index k = 0; k < p; ++k)
            for (Index i = 0; i < n; ++i) {
                const double mu = sigmoid(eta(i, k));
                w(i, k) = std::max(mu * (1.0 - mu), 1e-16) / nd; // below the cap's curvature
                r(i, k) = (mu - x(i, k)) / nd;
            }
        const Matrix xw = x.transpose() * w; // (l,k): sum_i x_il w_ik
        const Vector hdiag = w.colwise().sum().transpose();

        // Coordinate descent on the quadratic model; r holds its gradient
        // with respect to the predictors.
        d.setZero();
        auto pair_step = [&](Index k, Index l) {
            const auto& on_l = rows_on[static_cast<std::size_t>(l)];
            const auto& on_k = rows_on[static_cast<std::size_t>(k)];
            const double h = xw(l, k) + xw(k, l);
            if (h <= 0.0)
                return 0.0;
            double g = 0.0;
            for (Index i : on_l)
                g += r(i, k);
            for (Index i : on_k)
                g += r(i, l);
            const double a = theta(k, l) + d(k, l);
            const double updated = soft_threshold(h * a - g, penalty.at(k, l)) / h;
            const double step = updated - a;
            if (step == 0.0)
                return 0.0;
            d(k, l) += step;
            d(l, k) = d(k, l);
            for (Index i : on_l)
                r(i, k) += w(i, k) * step;
            for (Index i : on_k)
                r(i, l) += w(i, l) * step;
            return std::abs(step);
        };
        auto diag_step = [&](Index k) {
            const double step = -r.col(k).sum() / hdiag(k);
            d(k, k) += step;
            r.col(k) += w.col(k) * step;
            return std::abs(step);
        };
        auto sweep = [&](bool active_only) {
            double change = 0.0;
            for (Index k = 0; k < p; ++k)
                change = std::max(change, diag_step(k));
            for (const auto& [k, l] : free_pairs)
                if (!active_only || theta(k, l) + d(k, l) != 0.0)
                    change = std::max(change, pair_step(k, l));
            return change;
        };
        const double inner_tol = std::max(1e-3 * opt.tol, 1e-15);
        for (int inner = 0; inner < 100000; ++inner) {
            if (sweep(false) < inner_tol)
                break;
            for (int a = 0; a < 100000; ++a)
                if (sweep(true) < inner_tol)
                    break;
        }

        // Backtracking on the true objective.
        d_eta = conditional_predictors(x, d);
        double step = 1.0;
        Matrix cand_theta, cand_eta;
        double cand_obj = obj;
        bool accepted = false;
        for (int h = 0; h < 60; ++h) {
            cand_theta = theta + step * d;
            cand_eta = eta + step * d_eta;
            cand_obj = detail::pseudo_objective(x, cand_eta, cand_theta, penalty);
            if (cand_obj <= obj + 1e-15 * std::abs(obj)) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        const double change = accepted ? step * d.cwiseAbs().maxCoeff() : 0.0;
        fit.report.iterations = it;
        fit.report.final_gap_or_delta = change;
        if (!accepted) {
            // no descent at working precision: converged if the step was tiny
            fit.report.converged = d.cwiseAbs().maxCoeff() < std::sqrt(opt.tol);
            break;
        }
        // exact zeros where the model put them
        for (const auto& [k, l] : free_pairs)
            if (theta(k, l) + d(k, l) == 0.0)
                cand_theta(k, l) = cand_theta(l, k) = 0.0;
        theta = std::move(cand_theta);
        eta = std::move(cand_eta);
        obj = cand_obj;
        if (theta.cwiseAbs().maxCoeff() > opt.coefficient_cap) {
            theta = theta.cwiseMax(-opt.coefficient_cap).cwiseMin(opt.coefficient_cap);
            fit.separation = true;
            fit.report.converged = true;
            break;
        }
        if (change < opt.tol) {
            fit.report.converged = true;
            break;
        }
    }

    fit.theta = ThetaMatrix(std::move(theta));
    fit.report.wall_time = clock.seconds();
    if (!fit.report.converged)
        throw NotConvergedError("pseudo_likelihood_fit did not converge", fit.report);
    return fit;
}

} // namespace isinglab
