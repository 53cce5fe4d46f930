#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "isinglab/glasso.hpp"
#include "isinglab/grid.hpp"
#include "isinglab/ising.hpp"
#include "isinglab/logistic.hpp"
#include "isinglab/pseudo_likelihood.hpp"
#include "isinglab/types.hpp"

namespace isinglab {

enum class MethodId {
    SEPLOGIT_AND,
    SEPLOGIT_OR,
    BMN_PSEUDO,
    BMN_PSEUDO_HALF,
    GAUSS_COV13,
    GAUSS_COV,
    GAUSS_COR
};

enum class MethodFamily { SEPLOGIT, BMN, GAUSS };

inline constexpr MethodId kAllMethods[] = {
    MethodId::SEPLOGIT_AND, MethodId::SEPLOGIT_OR,  MethodId::BMN_PSEUDO, MethodId::BMN_PSEUDO_HALF,
    MethodId::GAUSS_COV13,  MethodId::GAUSS_COV,    MethodId::GAUSS_COR};

inline std::string to_string(MethodId m)
{
    switch (m) {
    case MethodId::SEPLOGIT_AND: return "SepLogit_AND";
    case MethodId::SEPLOGIT_OR: return "SepLogit_OR";
    case MethodId::BMN_PSEUDO: return "BMNPseudo";
    case MethodId::BMN_PSEUDO_HALF: return "BMNPseudo_half";
    case MethodId::GAUSS_COV13: return "GaussCov13";
    case MethodId::GAUSS_COV: return "GaussCov";
    case MethodId::GAUSS_COR: return "GaussCor";
    }
    return "?";
}

/// Accepts the display names above and the enumerator spellings, ignoring
/// case, '_', '-' and spaces ("gausscor", "SEPLOGIT_OR", "BMNPseudo 1/2").
inline MethodId parse_method(const std::string& text)
{
    std::string key;
    for (char c : text)
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '/')
            key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    static const std::map<std::string, MethodId> table = {
        {"seplogitand", MethodId::SEPLOGIT_AND},   {"seplogitor", MethodId::SEPLOGIT_OR},
        {"bmnpseudo", MethodId::BMN_PSEUDO},       {"bmnpseudohalf", MethodId::BMN_PSEUDO_HALF},
        {"bmnpseudo1/2", MethodId::BMN_PSEUDO_HALF}, {"gausscov13", MethodId::GAUSS_COV13},
        {"gausscov1/3", MethodId::GAUSS_COV13},    {"gausscov", MethodId::GAUSS_COV},
        {"gausscor", MethodId::GAUSS_COR}};
    const auto it = table.find(key);
    if (it == table.end())
        throw UnsupportedMethod("unknown method '" + text + "'");
    return it->second;
}

inline MethodFamily family(MethodId m)
{
    switch (m) {
    case MethodId::SEPLOGIT_AND:
    case MethodId::SEPLOGIT_OR: return MethodFamily::SEPLOGIT;
    case MethodId::BMN_PSEUDO:
    case MethodId::BMN_PSEUDO_HALF: return MethodFamily::BMN;
    default: return MethodFamily::GAUSS;
    }
}

inline SurrogateKind surrogate_kind(MethodId m)
{
    switch (m) {
    case MethodId::GAUSS_COV13: return SurrogateKind::COV_PLUS_THIRD;
    case MethodId::GAUSS_COV: return SurrogateKind::COV;
    case MethodId::GAUSS_COR: return SurrogateKind::COR;
    default: throw UnsupportedMethod(to_string(m) + " has no Gaussian surrogate");
    }
}

/// Coding of the coefficients a method reports: the Gaussian methods work on
/// spin data, the logistic ones on {0,1} data.
inline Coding native_coding(MethodId m)
{
    return family(m) == MethodFamily::GAUSS ? Coding::SPIN : Coding::ZERO_ONE;
}

/// One point of a regularization path.
struct GraphEstimate
{
    MethodId method = MethodId::GAUSS_COR;
    double lambda = std::numeric_limits<double>::quiet_NaN();
    EdgeSet edges;
    /// GAUSS: -M; SEPLOGIT: mean of the directed coefficients, intercepts on
    /// the diagonal; BMN: the fitted Theta.
    std::optional<ThetaMatrix> theta_shrunk;
    std::optional<ThetaMatrix> theta_unshrunk;
    /// GAUSS only: the precision estimate (warm start for refits).
    std::optional<Matrix> precision;
    /// SEPLOGIT only: row k holds node k's regression, intercept on the diagonal.
    std::optional<Matrix> directed;
};

/// Solver settings shared by the path fits.
struct PathOptions
{
    int grid_count = 50;
    double grid_ratio = 1000.0;
    double edge_threshold = 1e-8;
    GlassoOptions glasso;
    LogisticOptions logistic;
    PseudoLikelihoodOptions pseudo;
};

namespace detail {

inline double max_offdiag_abs(const Matrix& s)
{
    double best = 0.0;
    for (Index k = 0; k < s.rows(); ++k)
        for (Index l = k + 1; l < s.cols(); ++l)
            best = std::max(best, std::abs(s(k, l)));
    return best;
}

// Design matrix of the regression of node k on all the others.
inline Matrix drop_column(const Matrix& x, Index k)
{
    Matrix out(x.rows(), x.cols() - 1);
    for (Index l = 0, c = 0; l < x.cols(); ++l)
        if (l != k)
            out.col(c++) = x.col(l);
    return out;
}

inline std::string fmt_lambda(double lambda)
{
    std::ostringstream os;
    os.precision(6);
    os << lambda;
    return os.str();
}

[[noreturn]] inline void annotate(const Error& e, MethodId m, double lambda, Index node = -1)
{
    std::string where = to_string(m) + ", lambda=" + fmt_lambda(lambda);
    if (node >= 0)
        where += ", node=" + std::to_string(node);
    throw Error(e.kind(), where + ": " + e.what());
}

inline ThetaMatrix negated(const Matrix& m)
{
    Matrix t = -0.5 * (m + m.transpose());
    return ThetaMatrix(std::move(t));
}

inline ThetaMatrix directed_mean(const Matrix& d)
{
    Matrix t = 0.5 * (d + d.transpose());
    return ThetaMatrix(std::move(t));
}

} // namespace detail

/// Smallest penalty at which the method's fit has no edge.
inline double lambda_max(const BinaryDataset& data, MethodId method)
{
    switch (family(method)) {
    case MethodFamily::GAUSS:
        return detail::max_offdiag_abs(gaussian_surrogate(data, surrogate_kind(method)).values);
    case MethodFamily::BMN:
        return pseudo_likelihood_lambda_max(data);
    case MethodFamily::SEPLOGIT: {
        double best = 0.0;
        for (Index k = 0; k < data.p(); ++k)
            best = std::max(best, logistic_lambda_max(detail::drop_column(data.data(), k),
                                                      data.data().col(k)));
        return best;
    }
    }
    return 0.0;
}

/// The default path grid for a method on this dataset.
inline LambdaGrid default_grid(const BinaryDataset& data, MethodId method, const PathOptions& opt = {})
{
    return make_grid(lambda_max(data, method), opt.grid_count, opt.grid_ratio);
}

/// Per-node l1-logistic paths; directed(k, l) = coefficient of node l in the
/// regression of node k, directed(k, k) = intercept. One matrix per lambda.
inline std::vector<Matrix> seplogit_directed_path(const BinaryDataset& data, const LambdaGrid& grid,
                                                  const LogisticOptions& opt = {},
                                                  MethodId label = MethodId::SEPLOGIT_OR)
{
    const Index p = data.p();
    std::vector<Matrix> out(grid.size(), Matrix::Zero(p, p));
    for (Index k = 0; k < p; ++k) {
        const Matrix x = detail::drop_column(data.data(), k);
        const Vector y = data.data().col(k);
        std::optional<LogisticFit> warm;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            try {
                warm = l1_logistic(x, y, grid.values[i], warm, opt);
            } catch (const Error& e) {
                detail::annotate(e, label, grid.values[i], k);
            }
            Matrix& d = out[i];
            d(k, k) = warm->intercept;
            for (Index l = 0, c = 0; l < p; ++l)
                if (l != k)
                    d(k, l) = warm->beta(c++);
        }
    }
    return out;
}

/// AND / OR combination of directed neighborhoods.
inline GraphEstimate seplogit_estimate(const Matrix& directed, MethodId method, double lambda,
                                       double threshold = 1e-8)
{
    const Index p = directed.rows();
    GraphEstimate g;
    g.method = method;
    g.lambda = lambda;
    g.edges = EdgeSet(p);
    for (Index k = 0; k < p; ++k)
        for (Index l = k + 1; l < p; ++l) {
            const bool kl = std::abs(directed(k, l)) > threshold;
            const bool lk = std::abs(directed(l, k)) > threshold;
            if (method == MethodId::SEPLOGIT_AND ? (kl && lk) : (kl || lk))
                g.edges.insert(k, l);
        }
    g.directed = directed;
    g.theta_shrunk = detail::directed_mean(directed);
    return g;
}

/// Glasso path on the method's surrogate with warm starts.
inline std::vector<GraphEstimate> gauss_path(const SurrogateMatrix& s, MethodId method,
                                             const LambdaGrid& grid, const PathOptions& opt = {})
{
    std::vector<GraphEstimate> path;
    std::optional<Matrix> warm;
    for (double lambda : grid.values) {
        GlassoResult r;
        try {
            r = glasso(s.values, PenaltySpec::scalar(lambda), warm, opt.glasso);
        } catch (const Error& e) {
            detail::annotate(e, method, lambda);
        }
        GraphEstimate g;
        g.method = method;
        g.lambda = lambda;
        g.edges = EdgeSet::from_support(r.m, opt.edge_threshold);
        g.theta_shrunk = detail::negated(r.m);
        g.precision = r.m;
        warm = r.m;
        path.push_back(std::move(g));
    }
    return path;
}

/// Pseudo-likelihood path with warm starts.
inline std::vector<GraphEstimate> bmn_path(const BinaryDataset& data, MethodId method,
                                           const LambdaGrid& grid, const PathOptions& opt = {})
{
    std::vector<GraphEstimate> path;
    std::optional<ThetaMatrix> warm;
    for (double lambda : grid.values) {
        PseudoLikelihoodFit f;
        try {
            f = pseudo_likelihood_fit(data, PenaltySpec::scalar(lambda), warm, opt.pseudo);
        } catch (const Error& e) {
            detail::annotate(e, method, lambda);
        }
        GraphEstimate g;
        g.method = method;
        g.lambda = lambda;
        g.edges = EdgeSet::from_support(f.theta.values(), opt.edge_threshold);
        g.theta_shrunk = f.theta;
        warm = f.theta;
        path.push_back(std::move(g));
    }
    return path;
}

/// The path of one method over `grid` (descending lambda).
inline std::vector<GraphEstimate> fit_path(const BinaryDataset& data, MethodId method,
                                           const LambdaGrid& grid, const PathOptions& opt = {})
{
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid.values[i] < grid.values[i - 1]))
            throw InvalidGrid("grid must be strictly descending");
    switch (family(method)) {
    case MethodFamily::GAUSS:
        return gauss_path(gaussian_surrogate(data, surrogate_kind(method)), method, grid, opt);
    case MethodFamily::BMN:
        return bmn_path(data, method, grid, opt);
    case MethodFamily::SEPLOGIT: {
        const auto directed = seplogit_directed_path(data, grid, opt.logistic, method);
        std::vector<GraphEstimate> path;
        for (std::size_t i = 0; i < grid.size(); ++i)
            path.push_back(seplogit_estimate(directed[i], method, grid.values[i], opt.edge_threshold));
        return path;
    }
    }
    return {};
}

/// Paths of several methods on one dataset, each on its own default grid.
/// Methods sharing a fit (SepLogit AND/OR, BMNPseudo and its half variant)
/// reuse it; `seconds[m]` is the time of the fit behind method m.
struct MethodPaths
{
    std::map<MethodId, std::vector<GraphEstimate>> paths;
    std::map<MethodId, double> seconds;
};

inline MethodPaths fit_paths(const BinaryDataset& data, const std::vector<MethodId>& methods,
                             const PathOptions& opt = {})
{
    MethodPaths out;
    const std::set<MethodId> wanted(methods.begin(), methods.end());
    auto want = [&](MethodId m) { return wanted.count(m) > 0; };

    if (want(MethodId::SEPLOGIT_AND) || want(MethodId::SEPLOGIT_OR)) {
        Stopwatch clock;
        const LambdaGrid grid = default_grid(data, MethodId::SEPLOGIT_OR, opt);
        const std::vector<Matrix> directed = seplogit_directed_path(data, grid, opt.logistic);
        const double t = clock.seconds();
        for (MethodId m : {MethodId::SEPLOGIT_AND, MethodId::SEPLOGIT_OR}) {
            if (!want(m))
                continue;
            auto& path = out.paths[m];
            for (std::size_t i = 0; i < grid.size(); ++i)
                path.push_back(seplogit_estimate(directed[i], m, grid.values[i], opt.edge_threshold));
            out.seconds[m] = t;
        }
    }
    if (want(MethodId::BMN_PSEUDO) || want(MethodId::BMN_PSEUDO_HALF)) {
        Stopwatch clock;
        const LambdaGrid grid = default_grid(data, MethodId::BMN_PSEUDO, opt);
        const auto path = bmn_path(data, MethodId::BMN_PSEUDO, grid, opt);
        const double t = clock.seconds();
        for (MethodId m : {MethodId::BMN_PSEUDO, MethodId::BMN_PSEUDO_HALF}) {
            if (!want(m))
                continue;
            auto copy = path;
            for (auto& g : copy)
                g.method = m;
            out.paths[m] = std::move(copy);
            out.seconds[m] = t;
        }
    }
    for (MethodId m : {MethodId::GAUSS_COV13, MethodId::GAUSS_COV, MethodId::GAUSS_COR}) {
        if (!want(m))
            continue;
        Stopwatch clock;
        const SurrogateMatrix s = gaussian_surrogate(data, surrogate_kind(m));
        const LambdaGrid grid = make_grid(detail::max_offdiag_abs(s.values), opt.grid_count, opt.grid_ratio);
        out.paths[m] = gauss_path(s, m, grid, opt);
        out.seconds[m] = clock.seconds();
    }
    return out;
}

/// Edge set a ∩ b with coefficients cleared (to be refit).
inline GraphEstimate intersect_models(const GraphEstimate& a, const GraphEstimate& b)
{
    if (a.edges.p() != b.edges.p())
        throw DimensionMismatch("models differ in p");
    GraphEstimate g;
    g.method = a.method;
    g.edges = intersection(a.edges, b.edges);
    return g;
}

} // namespace isinglab
