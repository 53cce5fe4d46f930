#pragma once

#include <cmath>
#include <limits>
#include <optional>

#include "isinglab/solve_report.hpp"
#include "isinglab/types.hpp"

namespace isinglab {

struct LogisticOptions
{
    double tol = 1e-10;       // max coefficient change between Newton steps
    int max_iter = 200;       // outer (quadratic model) iterations
    int max_inner_iter = 5000;
    double coefficient_cap = 30.0;
};

struct LogisticFit
{
    double intercept = 0.0;
    Vector beta;
    SolveReport report;
    /// Some |coefficient| reached the cap; the estimate was clamped.
    bool separation = false;
};

/// Sum over observations of log P(y_i | x_i).
inline double logistic_log_likelihood(const Matrix& x, const Vector& y, double intercept,
                                      const Vector& beta)
{
    double ll = 0.0;
    for (Index i = 0; i < x.rows(); ++i) {
        double eta = intercept;
        if (beta.size() > 0)
            eta += x.row(i).dot(beta);
        ll -= softplus(-(2.0 * y(i) - 1.0) * eta);
    }
    return ll;
}

/// Smallest lambda at which every slope of the penalized fit is zero.
inline double logistic_lambda_max(const Matrix& x, const Vector& y)
{
    if (x.cols() == 0)
        return 0.0;
    const double ybar = y.mean();
    const Vector score = x.transpose() * (y.array() - ybar).matrix() / static_cast<double>(x.rows());
    return score.cwiseAbs().maxCoeff();
}

/// Score (1/n) X^T (y - mu) of the logistic log-likelihood at a fit.
inline Vector logistic_score(const Matrix& x, const Vector& y, const LogisticFit& fit)
{
    Vector eta = Vector::Constant(x.rows(), fit.intercept);
    if (x.cols() > 0)
        eta += x * fit.beta;
    Vector resid(x.rows());
    for (Index i = 0; i < x.rows(); ++i)
        resid(i) = y(i) - sigmoid(eta(i));
    return x.transpose() * resid / static_cast<double>(x.rows());
}

/// Largest violation of the lasso-logistic optimality conditions:
/// |score_j| <= lambda on zero slopes, score_j = lambda sign(beta_j) on the
/// others, zero intercept score.
inline double logistic_kkt_residual(const Matrix& x, const Vector& y, double lambda,
                                    const LogisticFit& fit)
{
    const Vector score = logistic_score(x, y, fit);
    Vector eta = Vector::Constant(x.rows(), fit.intercept);
    if (x.cols() > 0)
        eta += x * fit.beta;
    double s0 = 0.0;
    for (Index i = 0; i < x.rows(); ++i)
        s0 += y(i) - sigmoid(eta(i));
    double worst = std::abs(s0) / static_cast<double>(x.rows());
    for (Index j = 0; j < x.cols(); ++j) {
        if (fit.beta(j) == 0.0)
            worst = std::max(worst, std::max(0.0, std::abs(score(j)) - lambda));
        else
            worst = std::max(worst, std::abs(score(j) - lambda * (fit.beta(j) > 0 ? 1.0 : -1.0)));
    }
    return worst;
}

namespace detail {

inline double penalized_logistic_objective(const Matrix& x, const Vector& y, double lambda,
                                           double b0, const Vector& beta)
{
    const double n = static_cast<double>(x.rows());
    double pen = beta.size() > 0 ? lambda * beta.cwiseAbs().sum() : 0.0;
    return -logistic_log_likelihood(x, y, b0, beta) / n + pen;
}

} // namespace detail

/// l1-penalized logistic regression of y on the columns of x with an
/// unpenalized intercept:
///   min (1/n) sum_i log(1 + exp(-y~_i (b0 + x_i b))) + lambda |b|_1.
/// Proximal Newton: each outer step minimizes the local quadratic model by
/// cyclic coordinate descent, followed by a backtracking step on the true
/// objective.
inline LogisticFit l1_logistic(const Matrix& x, const Vector& y, double lambda,
                               const std::optional<LogisticFit>& warm_start = std::nullopt,
                               const LogisticOptions& opt = {})
{
    Stopwatch clock;
    const Index n = x.rows();
    const Index q = x.cols();
    if (y.size() != n)
        throw DimensionMismatch("response length differs from design rows");
    if (!(lambda >= 0.0))
        throw InvalidArgument("lambda must be >= 0");
    const double nd = static_cast<double>(n);

    LogisticFit fit;
    fit.beta = Vector::Zero(q);
    if (warm_start && warm_start->beta.size() == q) {
        fit.intercept = warm_start->intercept;
        fit.beta = warm_start->beta;
    } else {
        const double ybar = std::clamp(y.mean(), 1e-12, 1.0 - 1e-12);
        fit.intercept = std::clamp(logit(ybar), -opt.coefficient_cap, opt.coefficient_cap);
    }

    Vector eta(n), w(n), r(n), d_eta(n);
    Vector xsq_w(q);
    double obj = detail::penalized_logistic_objective(x, y, lambda, fit.intercept, fit.beta);

    for (int it = 1; it <= opt.max_iter; ++it) {
        eta.setConstant(fit.intercept);
        if (q > 0)
            eta.noalias() += x * fit.beta;
        for (Index i = 0; i < n; ++i) {
            const double mu = sigmoid(eta(i));
            w(i) = std::max(mu * (1.0 - mu), 1e-10);
            r(i) = y(i) - mu;
        }
        for (Index j = 0; j < q; ++j)
            xsq_w(j) = x.col(j).cwiseAbs2().dot(w) / nd;
        const double w_sum = w.sum() / nd;

        // Coordinate descent on the quadratic model; d_eta tracks the change
        // in linear predictor, u = r - w * d_eta is the working gradient.
        double b0 = fit.intercept;
        Vector beta = fit.beta;
        d_eta.setZero();
        for (int inner = 0; inner < opt.max_inner_iter; ++inner) {
            double max_delta = 0.0;
            {
                double g = 0.0;
                for (Index i = 0; i < n; ++i)
                    g += r(i) - w(i) * d_eta(i);
                const double delta = (g / nd) / w_sum;
                if (delta != 0.0) {
                    b0 += delta;
                    d_eta.array() += delta;
                    max_delta = std::max(max_delta, std::abs(delta));
                }
            }
            for (Index j = 0; j < q; ++j) {
                if (xsq_w(j) <= 0.0)
                    continue;
                double g = 0.0;
                for (Index i = 0; i < n; ++i)
                    g += x(i, j) * (r(i) - w(i) * d_eta(i));
                g /= nd;
                const double old = beta(j);
                const double updated = soft_threshold(xsq_w(j) * old + g, lambda) / xsq_w(j);
                const double delta = updated - old;
                if (delta != 0.0) {
                    beta(j) = updated;
                    d_eta.noalias() += delta * x.col(j);
                    max_delta = std::max(max_delta, std::abs(delta));
                }
            }
            if (max_delta < opt.tol * 0.1)
                break;
        }

        // Backtracking on the true objective.
        double step = 1.0;
        double new_b0 = b0;
        Vector new_beta = beta;
        double new_obj = detail::penalized_logistic_objective(x, y, lambda, new_b0, new_beta);
        while (new_obj > obj + 1e-15 * std::abs(obj) && step > 1e-10) {
            step *= 0.5;
            new_b0 = fit.intercept + step * (b0 - fit.intercept);
            new_beta = fit.beta + step * (beta - fit.beta);
            new_obj = detail::penalized_logistic_objective(x, y, lambda, new_b0, new_beta);
        }
        double change = std::abs(new_b0 - fit.intercept);
        if (q > 0)
            change = std::max(change, (new_beta - fit.beta).cwiseAbs().maxCoeff());

        fit.intercept = new_b0;
        fit.beta = new_beta;
        obj = std::min(obj, new_obj);
        fit.report.iterations = it;
        fit.report.final_gap_or_delta = change;

        const bool capped = std::abs(fit.intercept) > opt.coefficient_cap ||
                            (q > 0 && fit.beta.cwiseAbs().maxCoeff() > opt.coefficient_cap);
        if (capped) {
            fit.separation = true;
            fit.intercept = std::clamp(fit.intercept, -opt.coefficient_cap, opt.coefficient_cap);
            fit.beta = fit.beta.cwiseMax(-opt.coefficient_cap).cwiseMin(opt.coefficient_cap);
            fit.report.converged = true;
            break;
        }
        if (change < opt.tol) {
            fit.report.converged = true;
            break;
        }
    }
    fit.report.wall_time = clock.seconds();
    if (!fit.report.converged)
        throw NotConvergedError("l1_logistic did not converge", fit.report);
    return fit;
}

/// Unpenalized logistic regression by damped Newton; coefficients are capped
/// (and `separation` set) when the data are separable.
inline LogisticFit logistic_mle(const Matrix& x, const Vector& y, const LogisticOptions& opt = {})
{
    Stopwatch clock;
    const Index n = x.rows();
    const Index q = x.cols();
    if (y.size() != n)
        throw DimensionMismatch("response length differs from design rows");
    Matrix design(n, q + 1);
    design.col(0).setOnes();
    design.rightCols(q) = x;

    Vector coef = Vector::Zero(q + 1);
    coef(0) = std::clamp(logit(std::clamp(y.mean(), 1e-12, 1.0 - 1e-12)), -opt.coefficient_cap,
                         opt.coefficient_cap);
    auto nll = [&](const Vector& c) {
        double s = 0.0;
        const Vector eta = design * c;
        for (Index i = 0; i < n; ++i)
            s += softplus(-(2.0 * y(i) - 1.0) * eta(i));
        return s;
    };

    LogisticFit fit;
    double f = nll(coef);
    for (int it = 1; it <= opt.max_iter; ++it) {
        const Vector eta = design * coef;
        Vector grad = Vector::Zero(q + 1);
        Vector w(n);
        for (Index i = 0; i < n; ++i) {
            const double mu = sigmoid(eta(i));
            w(i) = mu * (1.0 - mu);
            grad.noalias() += (y(i) - mu) * design.row(i).transpose();
        }
        Matrix hess = design.transpose() * w.asDiagonal() * design;
        hess.diagonal().array() += 1e-12 * std::max(1.0, hess.diagonal().maxCoeff());
        const Vector dir = hess.ldlt().solve(grad);

        double step = 1.0;
        Vector cand = coef + dir;
        double fc = nll(cand);
        const double slack = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f));
        while (!(fc <= f + slack) && step > 1e-10) {
            step *= 0.5;
            cand = coef + step * dir;
            fc = nll(cand);
        }
        const double change = (cand - coef).cwiseAbs().maxCoeff();
        coef = cand;
        f = std::min(f, fc);
        fit.report.iterations = it;
        fit.report.final_gap_or_delta = change;
        if (coef.cwiseAbs().maxCoeff() > opt.coefficient_cap) {
            fit.separation = true;
            coef = coef.cwiseMax(-opt.coefficient_cap).cwiseMin(opt.coefficient_cap);
            fit.report.converged = true;
            break;
        }
        if (change < opt.tol || grad.cwiseAbs().maxCoeff() < 1e-14 * static_cast<double>(n)) {
            fit.report.converged = true;
            break;
        }
    }
    fit.intercept = coef(0);
    fit.beta = coef.tail(q);
    fit.report.wall_time = clock.seconds();
    if (!fit.report.converged)
        throw NotConvergedError("logistic_mle did not converge", fit.report);
    return fit;
}

} // namespace isinglab
