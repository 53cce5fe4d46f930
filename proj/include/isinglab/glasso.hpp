#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "isinglab/ising.hpp"
#include "isinglab/solve_report.hpp"
#include "isinglab/types.hpp"

namespace isinglab {

struct GlassoOptions
{
    /// Outer stop: mean |change in W| per sweep < tol * mean |S_offdiag|.
    double tol = 1e-6;
    int max_iter = 10000;
    /// Inner lasso stop: max coordinate change < inner_tol.
    double inner_tol = 1e-12;
    int max_inner_iter = 100000;
};

struct GlassoResult
{
    Matrix w; // covariance estimate
    Matrix m; // precision estimate
    SolveReport report;
};

namespace detail {

// Lasso subproblem of one glasso column:
//   min_b 1/2 b' W11 b - b' s12 + sum_k rho_k |b_k|
// with rho_k = +inf meaning b_k pinned at zero. When every finite rho is
// zero the minimizer is the solution of the linear system on the free set.
inline void glasso_column(const Matrix& w11, const Vector& s12, const Vector& rho,
                          Vector& beta, const GlassoOptions& opt)
{
    const Index q = s12.size();
    bool all_zero_or_inf = true;
    std::vector<Index> free_set;
    for (Index k = 0; k < q; ++k) {
        if (std::isinf(rho(k))) {
            beta(k) = 0.0;
            continue;
        }
        free_set.push_back(k);
        if (rho(k) != 0.0)
            all_zero_or_inf = false;
    }
    if (free_set.empty())
        return;

    if (all_zero_or_inf) {
        const auto f = static_cast<Index>(free_set.size());
        Matrix a(f, f);
        Vector b(f);
        for (Index i = 0; i < f; ++i) {
            b(i) = s12(free_set[static_cast<std::size_t>(i)]);
            for (Index j = 0; j < f; ++j)
                a(i, j) = w11(free_set[static_cast<std::size_t>(i)],
                              free_set[static_cast<std::size_t>(j)]);
        }
        Eigen::LDLT<Matrix> ldlt(a);
        const Vector sol = ldlt.solve(b);
        if (ldlt.info() == Eigen::Success && sol.allFinite()) {
            for (Index i = 0; i < f; ++i)
                beta(free_set[static_cast<std::size_t>(i)]) = sol(i);
            return;
        }
        // singular block: fall through to coordinate descent
    }

    Vector resid = s12 - w11 * beta; // s12 - W11 b
    for (int it = 0; it < opt.max_inner_iter; ++it) {
        double max_delta = 0.0;
        for (Index k : free_set) {
            const double old = beta(k);
            const double z = resid(k) + w11(k, k) * old;
            const double updated = soft_threshold(z, rho(k)) / w11(k, k);
            const double delta = updated - old;
            if (delta != 0.0) {
                beta(k) = updated;
                resid -= delta * w11.col(k);
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }
        if (max_delta < opt.inner_tol)
            break;
    }
}

inline Matrix drop_index(const Matrix& a, Index j)
{
    const Index p = a.rows();
    Matrix out(p - 1, p - 1);
    for (Index r = 0, rr = 0; r < p; ++r) {
        if (r == j)
            continue;
        for (Index c = 0, cc = 0; c < p; ++c) {
            if (c == j)
                continue;
            out(rr, cc++) = a(r, c);
        }
        ++rr;
    }
    return out;
}

inline Vector drop_entry(const Vector& v, Index j)
{
    Vector out(v.size() - 1);
    for (Index r = 0, rr = 0; r < v.size(); ++r)
        if (r != j)
            out(rr++) = v(r);
    return out;
}

} // namespace detail

/// Graphical lasso with per-entry penalties by block coordinate descent over
/// columns. Maximizes log|M| - tr(M S) - sum_{k != l} Lambda_kl |M_kl|; the
/// diagonal is never penalized. Entries with infinite penalty are exactly zero
/// in M.
inline GlassoResult glasso(const Matrix& s, const PenaltySpec& penalty,
                           const std::optional<Matrix>& warm_start = std::nullopt,
                           const GlassoOptions& opt = {})
{
    Stopwatch clock;
    const Index p = s.rows();
    if (p < 1 || s.cols() != p)
        throw DimensionMismatch("glasso needs a square surrogate matrix");
    penalty.check_dimension(p);
    for (Index k = 0; k < p; ++k)
        if (!(s(k, k) > 0.0))
            throw NonPositiveDefiniteInput("surrogate diagonal must be positive");

    GlassoResult res;
    // betas(.,j) holds the column-j regression coefficients, entry j unused.
    Matrix betas = Matrix::Zero(p, p);
    res.w = s;
    if (warm_start) {
        const Matrix& m0 = *warm_start;
        if (m0.rows() != p || m0.cols() != p)
            throw DimensionMismatch("warm start dimension differs from p");
        Eigen::LDLT<Matrix> ldlt(m0);
        if (ldlt.info() == Eigen::Success) {
            Matrix w0 = ldlt.solve(Matrix::Identity(p, p));
            if (w0.allFinite()) {
                res.w = 0.5 * (w0 + w0.transpose());
                for (Index j = 0; j < p; ++j)
                    for (Index k = 0; k < p; ++k)
                        if (k != j)
                            betas(k, j) = -m0(k, j) / m0(j, j);
            }
        }
    }
    res.w.diagonal() = s.diagonal();
    for (Index j = 0; j < p; ++j)
        for (Index k = 0; k < p; ++k)
            if (k != j && std::isinf(penalty.at(k, j)))
                betas(k, j) = 0.0;

    double scale = 0.0;
    for (Index k = 0; k < p; ++k)
        for (Index l = 0; l < p; ++l)
            if (k != l)
                scale += std::abs(s(k, l));
    scale = p > 1 ? scale / static_cast<double>(p * (p - 1)) : 0.0;
    if (scale == 0.0)
        scale = 1.0;

    if (p == 1) {
        res.m = s.cwiseInverse();
        res.report = {0, 0.0, true, clock.seconds()};
        return res;
    }

    for (int sweep = 1; sweep <= opt.max_iter; ++sweep) {
        double change = 0.0;
        for (Index j = 0; j < p; ++j) {
            const Matrix w11 = detail::drop_index(res.w, j);
            const Vector s12 = detail::drop_entry(s.col(j), j);
            Vector rho(p - 1);
            for (Index k = 0, kk = 0; k < p; ++k)
                if (k != j)
                    rho(kk++) = penalty.at(k, j);
            Vector beta = detail::drop_entry(betas.col(j), j);
            detail::glasso_column(w11, s12, rho, beta, opt);
            const Vector w12 = w11 * beta;
            for (Index k = 0, kk = 0; k < p; ++k) {
                if (k == j)
                    continue;
                change += std::abs(w12(kk) - res.w(k, j));
                res.w(k, j) = w12(kk);
                res.w(j, k) = w12(kk);
                betas(k, j) = beta(kk);
                ++kk;
            }
        }
        change /= static_cast<double>(p * (p - 1));
        res.report.iterations = sweep;
        res.report.final_gap_or_delta = change / scale;
        if (change <= opt.tol * scale) {
            res.report.converged = true;
            break;
        }
    }

    // Assemble M from the column regressions, then symmetrize.
    Matrix m = Matrix::Zero(p, p);
    for (Index j = 0; j < p; ++j) {
        double dot = 0.0;
        for (Index k = 0; k < p; ++k)
            if (k != j)
                dot += res.w(k, j) * betas(k, j);
        const double mjj = 1.0 / (res.w(j, j) - dot);
        m(j, j) = mjj;
        for (Index k = 0; k < p; ++k)
            if (k != j)
                m(k, j) = -betas(k, j) * mjj;
    }
    res.m = 0.5 * (m + m.transpose());
    for (Index k = 0; k < p; ++k)
        for (Index l = 0; l < p; ++l)
            if (k != l && std::isinf(penalty.at(k, l)))
                res.m(k, l) = 0.0;
    res.report.wall_time = clock.seconds();

    if (!res.report.converged)
        throw NotConvergedError("glasso did not converge", res.report);
    if (!res.m.allFinite())
        throw NotPositiveDefinite("glasso produced a non-finite precision matrix");
    return res;
}

/// Largest KKT violation of a glasso solution:
/// stationarity W - S = Lambda * sign(M) on nonzero off-diagonal entries,
/// the box |W - S| <= Lambda on zero entries, and W_kk = S_kk on the diagonal.
/// Entries with infinite penalty are unconstrained in W.
inline double glasso_kkt_residual(const Matrix& s, const PenaltySpec& penalty,
                                  const Matrix& w, const Matrix& m)
{
    const Index p = s.rows();
    double worst = 0.0;
    for (Index k = 0; k < p; ++k) {
        worst = std::max(worst, std::abs(w(k, k) - s(k, k)));
        for (Index l = 0; l < p; ++l) {
            if (l == k)
                continue;
            const double lam = penalty.at(k, l);
            if (std::isinf(lam))
                continue;
            const double gap = w(k, l) - s(k, l);
            if (m(k, l) != 0.0) {
                const double sign = m(k, l) > 0.0 ? 1.0 : -1.0;
                worst = std::max(worst, std::abs(gap - lam * sign));
            } else {
                worst = std::max(worst, std::max(0.0, std::abs(gap) - lam));
            }
        }
    }
    return worst;
}

/// Largest deviation of M W from the identity.
inline double inverse_residual(const Matrix& m, const Matrix& w)
{
    return (m * w - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff();
}

} // namespace isinglab
