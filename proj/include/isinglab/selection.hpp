#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "isinglab/glasso.hpp"
#include "isinglab/ising.hpp"
#include "isinglab/logistic.hpp"
#include "isinglab/methods.hpp"
#include "isinglab/metrics.hpp"
#include "isinglab/pseudo_likelihood.hpp"

namespace isinglab {

struct RefitOptions
{
    GlassoOptions glasso{.tol = 1e-10, .max_iter = 10000, .inner_tol = 1e-14, .max_inner_iter = 100000};
    LogisticOptions logistic;
    PseudoLikelihoodOptions pseudo;
};

/// Un-shrunk estimate under a fixed sparsity pattern plus the method-matched
/// log-likelihood term used by BIC, on the 2 log-likelihood scale:
///   GAUSS  n (log|C| - tr(C S))
///   BMN    2 pseudo-l          (half variant: pseudo-l)
///   SEPLOG 2 sum_k log-likelihood of node k's restricted regression
struct Refit
{
    ThetaMatrix theta;
    double loglik_term = 0.0;
    bool separation = false;
    std::optional<Matrix> precision;
    std::optional<Matrix> directed;
};

namespace detail {

inline Refit gauss_refit(const SurrogateMatrix& s, const EdgeSet& edges, double n,
                         const std::optional<Matrix>& warm, const GlassoOptions& opt)
{
    const GlassoResult r = glasso(s.values, PenaltySpec::refit(edges), warm, opt);
    Refit out;
    out.theta = negated(r.m);
    out.loglik_term = n * gaussian_log_likelihood(r.m, s.values);
    out.precision = r.m;
    return out;
}

inline Refit seplogit_refit(const BinaryDataset& data, const EdgeSet& edges, const LogisticOptions& opt)
{
    const Index p = data.p();
    Matrix d = Matrix::Zero(p, p);
    Refit out;
    double ll = 0.0;
    for (Index k = 0; k < p; ++k) {
        std::vector<Index> nb;
        for (Index l = 0; l < p; ++l)
            if (l != k && edges.contains(k, l))
                nb.push_back(l);
        Matrix x(data.n(), static_cast<Index>(nb.size()));
        for (std::size_t j = 0; j < nb.size(); ++j)
            x.col(static_cast<Index>(j)) = data.data().col(nb[j]);
        const Vector y = data.data().col(k);
        LogisticFit f;
        try {
            f = logistic_mle(x, y, opt);
        } catch (const Error& e) {
            throw Error(e.kind(), "node=" + std::to_string(k) + ": " + e.what());
        }
        out.separation = out.separation || f.separation;
        d(k, k) = f.intercept;
        for (std::size_t j = 0; j < nb.size(); ++j)
            d(k, nb[j]) = f.beta(static_cast<Index>(j));
        ll += logistic_log_likelihood(x, y, f.intercept, f.beta);
    }
    out.theta = directed_mean(d);
    out.loglik_term = 2.0 * ll;
    out.directed = std::move(d);
    return out;
}

} // namespace detail

/// Refit of `edges` for `method`. `surrogate` may carry a precomputed
/// Gaussian surrogate of the right kind; `warm` is the shrunk estimate.
inline Refit refit_pattern(const BinaryDataset& data, MethodId method, const EdgeSet& edges,
                           const GraphEstimate* warm = nullptr, const RefitOptions& opt = {},
                           const SurrogateMatrix* surrogate = nullptr)
{
    if (edges.p() != data.p())
        throw DimensionMismatch("edge set and dataset disagree on p");
    const double n = static_cast<double>(data.n());
    switch (family(method)) {
    case MethodFamily::GAUSS: {
        std::optional<Matrix> start;
        if (warm && warm->precision)
            start = warm->precision;
        if (surrogate) {
            if (surrogate->kind != surrogate_kind(method))
                throw InvalidArgument("surrogate kind does not match " + to_string(method));
            return detail::gauss_refit(*surrogate, edges, n, start, opt.glasso);
        }
        return detail::gauss_refit(gaussian_surrogate(data, surrogate_kind(method)), edges, n, start,
                                   opt.glasso);
    }
    case MethodFamily::BMN: {
        std::optional<ThetaMatrix> start;
        if (warm && warm->theta_shrunk)
            start = warm->theta_shrunk;
        const PseudoLikelihoodFit f = pseudo_likelihood_fit(data, PenaltySpec::refit(edges), start, opt.pseudo);
        Refit out;
        out.theta = f.theta;
        out.separation = f.separation;
        const double pl = pseudo_log_likelihood(data, f.theta);
        out.loglik_term = method == MethodId::BMN_PSEUDO_HALF ? pl : 2.0 * pl;
        return out;
    }
    case MethodFamily::SEPLOGIT:
        return detail::seplogit_refit(data, edges, opt.logistic);
    }
    return {};
}

/// Un-shrunk coefficients for a path point; zeros exactly off its edge set.
inline ThetaMatrix unshrunk_refit(const BinaryDataset& data, const GraphEstimate& estimate,
                                  const RefitOptions& opt = {})
{
    return refit_pattern(data, estimate.method, estimate.edges, &estimate, opt).theta;
}

struct BicScore
{
    double lambda = 0.0;
    double loglik_term = 0.0;
    std::size_t df = 0;
    double score = 0.0;
    bool separation = false;
};

inline BicScore make_bic_score(double loglik_term, std::size_t df, Index n, double lambda = 0.0)
{
    return BicScore{lambda, loglik_term, df,
                    loglik_term - static_cast<double>(df) * std::log(static_cast<double>(n)), false};
}

/// df = p diagonal parameters + one per edge.
inline std::size_t bic_df(const EdgeSet& edges)
{
    return static_cast<std::size_t>(edges.p()) + edges.size();
}

struct BicSelection
{
    std::size_t index = 0; // into the path
    GraphEstimate chosen;  // with theta_unshrunk set
    /// One entry per path point; refits that failed are absent from `scores`
    /// and listed in `warnings`.
    std::vector<BicScore> scores;
    std::vector<std::size_t> scored_index;
    std::vector<std::string> warnings;
};

/// Refit every path point, score it, keep the maximum (first maximum, i.e.
/// the larger lambda, on ties).
inline BicSelection bic_select(const BinaryDataset& data, const std::vector<GraphEstimate>& path,
                               MethodId method, const RefitOptions& opt = {})
{
    if (path.empty())
        throw InvalidArgument("empty path");
    std::optional<SurrogateMatrix> s;
    if (family(method) == MethodFamily::GAUSS)
        s = gaussian_surrogate(data, surrogate_kind(method));

    BicSelection sel;
    std::optional<Refit> best_refit;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < path.size(); ++i) {
        Refit r;
        try {
            r = refit_pattern(data, method, path[i].edges, &path[i], opt, s ? &*s : nullptr);
        } catch (const Error& e) {
            sel.warnings.push_back("lambda=" + detail::fmt_lambda(path[i].lambda) + ": " + e.kind() +
                                   ": " + e.what());
            continue;
        }
        BicScore b = make_bic_score(r.loglik_term, bic_df(path[i].edges), data.n(), path[i].lambda);
        b.separation = r.separation;
        sel.scores.push_back(b);
        sel.scored_index.push_back(i);
        if (b.score > best) {
            best = b.score;
            sel.index = i;
            best_refit = std::move(r);
        }
    }
    if (!best_refit)
        throw NotConverged("every refit on the path failed (" + to_string(method) + "; first: " +
                           sel.warnings.front() + ")");
    sel.chosen = path[sel.index];
    sel.chosen.method = method;
    sel.chosen.theta_unshrunk = best_refit->theta;
    return sel;
}

/// Path point with the best accuracy against `truth`; first maximum on ties.
inline std::size_t oracle_index(const std::vector<GraphEstimate>& path, const EdgeSet& truth)
{
    if (path.empty())
        throw InvalidArgument("empty path");
    if (family(path.front().method) == MethodFamily::SEPLOGIT)
        throw UnsupportedMethod("oracle selection is not defined for SepLogit");
    std::size_t best_i = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < path.size(); ++i) {
        const double acc = confusion(path[i].edges, truth).accuracy;
        if (acc > best) {
            best = acc;
            best_i = i;
        }
    }
    return best_i;
}

inline GraphEstimate oracle_select(const std::vector<GraphEstimate>& path, const EdgeSet& truth)
{
    return path[oracle_index(path, truth)];
}

} // namespace isinglab
