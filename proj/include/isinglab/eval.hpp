#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "isinglab/datagen.hpp"
#include "isinglab/exact_mle.hpp"
#include "isinglab/methods.hpp"
#include "isinglab/metrics.hpp"
#include "isinglab/selection.hpp"

namespace isinglab {

// ---------------------------------------------------------------- deviance

/// One lambda of the approximate-deviance comparison. Every column is the
/// deviance of the refit on this lambda's pattern relative to the refit on
/// the complete pattern, on the criterion's own scale:
///   pseudo      2 (pl_sat - pl)        half    pl_sat - pl
///   exact       2 (l_sat - l)          gauss   n (L_sat - L), per surrogate
struct DevianceRow
{
    double lambda = 0.0;
    std::size_t edges = 0;
    double pseudo = 0.0;
    double pseudo_half = 0.0;
    double exact = 0.0;
    double gauss_cov13 = 0.0;
    double gauss_cov = 0.0;
    double gauss_cor = 0.0;
};

struct DevianceOptions
{
    int grid_count = 50;
    double grid_ratio = 1000.0;
    PathOptions path;
    RefitOptions refit{.glasso = {.tol = 1e-12, .max_iter = 10000, .inner_tol = 1e-14, .max_inner_iter = 100000},
                       .logistic = {},
                       .pseudo = {.tol = 1e-11, .max_iter = 500, .coefficient_cap = 30.0}};
    ExactMleOptions exact{.gradient_tol = 1e-11, .max_iter = 200, .coefficient_cap = 30.0,
                          .p_max = kDefaultMaxExactP};
};

struct DevianceCurves
{
    std::vector<DevianceRow> rows;
    std::vector<std::string> warnings;
};

namespace detail {

struct PatternLogLiks
{
    double pl = 0.0, exact = 0.0, g1 = 0.0, g2 = 0.0, g3 = 0.0;
};

inline PatternLogLiks pattern_logliks(const BinaryDataset& data, const EdgeSet& edges,
                                      const SurrogateMatrix (&s)[3], const DevianceOptions& opt)
{
    PatternLogLiks out;
    const PseudoLikelihoodFit pf = pseudo_likelihood_fit(data, PenaltySpec::refit(edges), std::nullopt,
                                                         opt.refit.pseudo);
    out.pl = pseudo_log_likelihood(data, pf.theta);
    out.exact = exact_constrained_mle(data, edges, opt.exact).log_likelihood;
    double* g[3] = {&out.g1, &out.g2, &out.g3};
    for (int v = 0; v < 3; ++v) {
        const GlassoResult r = glasso(s[v].values, PenaltySpec::refit(edges), std::nullopt, opt.refit.glasso);
        *g[v] = gaussian_log_likelihood(r.m, s[v].values);
    }
    return out;
}

} // namespace detail

/// Approximate deviances along the BMNPseudo path of `data` over `grid` (p
/// small enough for exact enumeration). Rows whose refits fail are dropped
/// with a warning.
inline DevianceCurves deviance_curves(const BinaryDataset& data, const LambdaGrid& grid,
                                      const DevianceOptions& opt = {})
{
    if (data.p() > opt.exact.p_max)
        throw DimensionTooLarge("deviance curves need p <= " + std::to_string(opt.exact.p_max));
    const SurrogateMatrix s[3] = {gaussian_surrogate(data, SurrogateKind::COV_PLUS_THIRD),
                                  gaussian_surrogate(data, SurrogateKind::COV),
                                  gaussian_surrogate(data, SurrogateKind::COR)};
    const double n = static_cast<double>(data.n());
    const auto sat = detail::pattern_logliks(data, EdgeSet::complete(data.p()), s, opt);
    const auto path = bmn_path(data, MethodId::BMN_PSEUDO, grid, opt.path);

    DevianceCurves out;
    for (const auto& g : path) {
        detail::PatternLogLiks ll;
        try {
            ll = detail::pattern_logliks(data, g.edges, s, opt);
        } catch (const Error& e) {
            out.warnings.push_back("lambda=" + detail::fmt_lambda(g.lambda) + ": " + e.kind() + ": " + e.what());
            continue;
        }
        DevianceRow r;
        r.lambda = g.lambda;
        r.edges = g.edges.size();
        r.pseudo = 2.0 * (sat.pl - ll.pl);
        r.pseudo_half = sat.pl - ll.pl;
        r.exact = 2.0 * (sat.exact - ll.exact);
        r.gauss_cov13 = n * (sat.g1 - ll.g1);
        r.gauss_cov = n * (sat.g2 - ll.g2);
        r.gauss_cor = n * (sat.g3 - ll.g3);
        out.rows.push_back(r);
    }
    return out;
}

/// Same on the default grid of the BMNPseudo path.
inline DevianceCurves deviance_curves(const BinaryDataset& data, const DevianceOptions& opt = {})
{
    if (data.p() > opt.exact.p_max)
        throw DimensionTooLarge("deviance curves need p <= " + std::to_string(opt.exact.p_max));
    const LambdaGrid grid =
        make_grid(pseudo_likelihood_lambda_max(data), opt.grid_count, opt.grid_ratio);
    return deviance_curves(data, grid, opt);
}


// ---------------------------------------------------------------- MSE

/// Coefficient estimate of `method` refit under the true pattern, expressed
/// in `coding` (the design's native coding).
inline ThetaMatrix refit_under_truth(const BinaryDataset& data, MethodId method, const EdgeSet& truth,
                                     Coding coding, const RefitOptions& opt = {})
{
    const Refit r = refit_pattern(data, method, truth, nullptr, opt);
    return convert_interactions(r.theta, native_coding(method), coding);
}

/// MSE of the conditional log-odds ratios of `method` under the true pattern.
inline double truth_pattern_mse(const BinaryDataset& data, MethodId method, const BuiltDesign& design,
                                const RefitOptions& opt = {})
{
    return odds_ratio_mse(refit_under_truth(data, method, design.truth, design.native_coding, opt),
                          design.native);
}

// ---------------------------------------------------------------- benchmark

enum class SelectionMode { ORACLE, BIC };

/// Experimental grid of a campaign.
struct CampaignConfig
{
    std::vector<DesignSpec> designs;
    std::vector<MethodId> methods;
    std::vector<Index> sample_sizes;
    int replicates = 50;
    SelectionMode selection = SelectionMode::BIC;
    int grid_count = 50;
    double grid_ratio = 1000.0;
    std::uint64_t seed = 1;       // data seed; replicate r uses seed ^ r
    int threads = 0;              // 0: hardware concurrency (capped by ISINGLAB_THREADS)
    bool timing = true;           // false: time columns are not measured (reproducible output)
    bool mse = false;             // also score coefficients refit under the true pattern
    std::string output_dir = ".";
    GibbsOptions gibbs;
};

/// One (design, n, replicate, method) cell.
struct BenchmarkRow
{
    std::string design;
    Index n = 0;
    int replicate = 0;
    MethodId method = MethodId::GAUSS_COR;
    double lambda = std::numeric_limits<double>::quiet_NaN();
    ConfusionSummary summary;
    double time_s = std::numeric_limits<double>::quiet_NaN();           // path fit only
    double time_inclusive_s = std::numeric_limits<double>::quiet_NaN(); // path + selection refits
    double mse = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";

    bool ok() const { return status == "ok"; }
};

struct MeanSd
{
    double mean = std::numeric_limits<double>::quiet_NaN();
    double sd = std::numeric_limits<double>::quiet_NaN();
};

/// Mean and sample standard deviation of the finite values (NaN when none;
/// sd NaN with a single value).
inline MeanSd mean_sd(const std::vector<double>& v)
{
    std::vector<double> x;
    for (double a : v)
        if (std::isfinite(a))
            x.push_back(a);
    MeanSd out;
    if (x.empty())
        return out;
    double s = 0.0;
    for (double a : x)
        s += a;
    out.mean = s / static_cast<double>(x.size());
    if (x.size() > 1) {
        double q = 0.0;
        for (double a : x)
            q += (a - out.mean) * (a - out.mean);
        out.sd = std::sqrt(q / static_cast<double>(x.size() - 1));
    }
    return out;
}

struct BenchmarkAggregate
{
    std::string design;
    Index n = 0;
    MethodId method = MethodId::GAUSS_COR;
    int replicates = 0; // successful rows
    int failures = 0;
    MeanSd pos, fpr, tpr, pre, acc, f1, time_s, time_inclusive_s, mse;
};

struct BenchmarkReport
{
    std::vector<BenchmarkRow> rows;
    std::vector<BenchmarkAggregate> aggregates;
};

/// Aggregates of the rows, grouped by (design, n, method) in first-seen order.
inline std::vector<BenchmarkAggregate> aggregate_rows(const std::vector<BenchmarkRow>& rows)
{
    std::vector<BenchmarkAggregate> out;
    std::vector<std::vector<const BenchmarkRow*>> groups;
    for (const auto& r : rows) {
        std::size_t g = 0;
        while (g < out.size() &&
               !(out[g].design == r.design && out[g].n == r.n && out[g].method == r.method))
            ++g;
        if (g == out.size()) {
            BenchmarkAggregate a;
            a.design = r.design;
            a.n = r.n;
            a.method = r.method;
            out.push_back(a);
            groups.emplace_back();
        }
        groups[g].push_back(&r);
    }
    for (std::size_t g = 0; g < out.size(); ++g) {
        std::vector<double> pos, fpr, tpr, pre, acc, f1, t, ti, mse;
        for (const BenchmarkRow* r : groups[g]) {
            if (!r->ok()) {
                ++out[g].failures;
                continue;
            }
            ++out[g].replicates;
            pos.push_back(static_cast<double>(r->summary.pos));
            fpr.push_back(r->summary.fpr);
            tpr.push_back(r->summary.tpr);
            pre.push_back(r->summary.precision);
            acc.push_back(r->summary.accuracy);
            f1.push_back(r->summary.f1);
            t.push_back(r->time_s);
            ti.push_back(r->time_inclusive_s);
            mse.push_back(r->mse);
        }
        auto& a = out[g];
        a.pos = mean_sd(pos);
        a.fpr = mean_sd(fpr);
        a.tpr = mean_sd(tpr);
        a.pre = mean_sd(pre);
        a.acc = mean_sd(acc);
        a.f1 = mean_sd(f1);
        a.time_s = mean_sd(t);
        a.time_inclusive_s = mean_sd(ti);
        a.mse = mean_sd(mse);
    }
    return out;
}

/// Worker count: the configured value (or the hardware concurrency), capped
/// by ISINGLAB_THREADS when set.
inline int resolve_threads(int configured)
{
    int t = configured > 0 ? configured : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("ISINGLAB_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0)
            t = std::min(t, cap);
    }
    return std::max(1, t);
}

namespace detail {

struct CellTask
{
    std::size_t design;
    std::size_t n;
    int replicate;
};

inline std::vector<BenchmarkRow> run_cell(const CampaignConfig& cfg, const BuiltDesign& design,
                                          Index n, int replicate)
{
    std::vector<BenchmarkRow> rows;
    auto blank = [&](MethodId m) {
        BenchmarkRow r;
        r.design = design.name;
        r.n = n;
        r.replicate = replicate;
        r.method = m;
        return r;
    };

    BinaryDataset data;
    try {
        data = sample_design(design, n, cfg.seed ^ static_cast<std::uint64_t>(replicate), cfg.gibbs);
    } catch (const Error& e) {
        for (MethodId m : cfg.methods) {
            rows.push_back(blank(m));
            rows.back().status = e.kind() + ": " + e.what();
        }
        return rows;
    }

    PathOptions popt;
    popt.grid_count = cfg.grid_count;
    popt.grid_ratio = cfg.grid_ratio;
    for (MethodId m : cfg.methods) {
        BenchmarkRow r = blank(m);
        try {
            // SepLogit AND/OR and BMNPseudo/half each refit their shared path,
            // so every method is timed on its own.
            Stopwatch clock;
            const MethodPaths fitted = fit_paths(data, {m}, popt);
            const double path_time = clock.seconds();
            const auto& path = fitted.paths.at(m);
            GraphEstimate chosen;
            if (cfg.selection == SelectionMode::ORACLE) {
                chosen = oracle_select(path, design.truth);
            } else {
                chosen = bic_select(data, path, m).chosen;
            }
            const double total = clock.seconds();
            r.lambda = chosen.lambda;
            r.summary = confusion(chosen.edges, design.truth);
            if (cfg.timing) {
                r.time_s = path_time;
                r.time_inclusive_s = total;
            }
            if (cfg.mse)
                r.mse = truth_pattern_mse(data, m, design);
        } catch (const Error& e) {
            r.status = e.kind() + ": " + e.what();
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace detail

/// Runs every (design, n, replicate) cell, in parallel across cells. Rows are
/// ordered by design, n, replicate, method regardless of completion order.
/// Failures are recorded in the row status and the campaign continues.
inline BenchmarkReport run_benchmark(const CampaignConfig& cfg)
{
    if (cfg.replicates < 1)
        throw ConfigError("replicates must be >= 1");
    if (cfg.designs.empty() || cfg.methods.empty() || cfg.sample_sizes.empty())
        throw ConfigError("campaign needs designs, methods and sample sizes");
    std::vector<BuiltDesign> built;
    for (const auto& d : cfg.designs)
        built.push_back(build_theta(d));

    std::vector<detail::CellTask> tasks;
    for (std::size_t d = 0; d < built.size(); ++d)
        for (std::size_t s = 0; s < cfg.sample_sizes.size(); ++s)
            for (int r = 0; r < cfg.replicates; ++r)
                tasks.push_back({d, s, r});

    std::vector<std::vector<BenchmarkRow>> results(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            const auto& t = tasks[i];
            results[i] = detail::run_cell(cfg, built[t.design], cfg.sample_sizes[t.n], t.replicate);
        }
    };
    const int nthreads = std::min<int>(resolve_threads(cfg.threads), static_cast<int>(tasks.size()));
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nthreads; ++i)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }

    BenchmarkReport rep;
    for (auto& cell : results)
        for (auto& row : cell)
            rep.rows.push_back(std::move(row));
    rep.aggregates = aggregate_rows(rep.rows);
    return rep;
}

} // namespace isinglab
