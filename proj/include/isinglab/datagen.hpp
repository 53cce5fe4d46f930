#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "isinglab/ising.hpp"
#include "isinglab/random.hpp"
#include "isinglab/types.hpp"

namespace isinglab {

enum class DesignId { T1, T2, T3, T4, T5 };

inline std::string to_string(DesignId id)
{
    switch (id) {
    case DesignId::T1: return "T1";
    case DesignId::T2: return "T2";
    case DesignId::T3: return "T3";
    case DesignId::T4: return "T4";
    case DesignId::T5: return "T5";
    }
    return "?";
}

/// Default design seed; with the default constants it yields a T1 instance
/// with 10 edges among 45 pairs.
inline constexpr std::uint64_t kDefaultDesignSeed = 11;

/// Constants of one simulation design. Off-diagonal magnitudes and the
/// diagonal are on the spin scale for T1-T4 and on the {0,1} scale for T5.
struct DesignParameters
{
    Index p = 10;
    double sd = 0.05;          // T1/T4: standard deviation of the primary draws
    double threshold = 0.06;   // T1/T4: keep |theta| > threshold
    double magnitude = 0.0;    // T2/T3: nonzero entries set to +-magnitude
    double diag_first = -1.3;  // diagonal runs arithmetically from first to last
    double diag_last = 0.0;
    // T5: theta = 0 if u < cut_zero, weak if u < cut_strong, strong otherwise
    double cut_zero = 0.9;
    double cut_strong = 0.95;
    double weak = std::log(1.5);
    double strong = std::log(2.0);

    static DesignParameters defaults(DesignId id)
    {
        DesignParameters d;
        switch (id) {
        case DesignId::T1:
            d.diag_first = 0.0; // balanced margins
            break;
        case DesignId::T2:
            d.magnitude = 0.2;
            break;
        case DesignId::T3:
            d.magnitude = 0.4;
            break;
        case DesignId::T4:
            d.sd = 0.3;
            d.threshold = 0.2;
            d.diag_first = -1.8;
            break;
        case DesignId::T5:
            d.p = 50;
            d.diag_first = logit(0.1);
            d.diag_last = logit(0.2);
            break;
        }
        return d;
    }
};

/// A design: base id, `copies` block-diagonal repetitions, seed, constants.
struct DesignSpec
{
    DesignId id = DesignId::T1;
    int copies = 1;
    std::uint64_t seed = kDefaultDesignSeed;
    DesignParameters params = DesignParameters::defaults(DesignId::T1);

    static DesignSpec make(DesignId id, int copies = 1, std::uint64_t seed = kDefaultDesignSeed)
    {
        return DesignSpec{id, copies, seed, DesignParameters::defaults(id)};
    }

    std::string name() const
    {
        return copies > 1 ? "BLOCK(" + to_string(id) + "," + std::to_string(copies) + ")"
                          : to_string(id);
    }
};

struct BuiltDesign
{
    std::string name;
    ThetaMatrix theta;         // {0,1}-scale, used for sampling
    ThetaMatrix native;        // scale the design was specified on
    Coding native_coding = Coding::SPIN;
    EdgeSet truth;
    int copies = 1;
    Index block_p = 0;
};

namespace detail {

inline Vector arithmetic(double first, double last, Index p)
{
    Vector v(p);
    for (Index k = 0; k < p; ++k)
        v(k) = p == 1 ? first : first + (last - first) * static_cast<double>(k) / static_cast<double>(p - 1);
    return v;
}

// Thresholded Gaussian draws, regenerated until at least one edge survives.
inline Matrix thresholded_normal(const DesignParameters& par, Rng& rng)
{
    const Index p = par.p;
    for (;;) {
        Matrix t = Matrix::Zero(p, p);
        Index edges = 0;
        for (Index k = 0; k < p; ++k)
            for (Index l = k + 1; l < p; ++l) {
                const double v = par.sd * rng.normal();
                if (std::abs(v) > par.threshold) {
                    t(k, l) = v;
                    t(l, k) = v;
                    ++edges;
                }
            }
        if (edges > 0 || p < 2)
            return t;
    }
}

inline BuiltDesign build_base(DesignId id, const DesignParameters& par, std::uint64_t seed)
{
    Rng rng(seed);
    const Index p = par.p;
    Matrix t;
    Coding coding = Coding::SPIN;
    switch (id) {
    case DesignId::T1:
    case DesignId::T4:
        t = thresholded_normal(par, rng);
        break;
    case DesignId::T2:
    case DesignId::T3: {
        // T1's sparsity pattern and signs, fixed magnitude
        DesignParameters t1 = DesignParameters::defaults(DesignId::T1);
        t1.p = p;
        t = thresholded_normal(t1, rng);
        for (Index k = 0; k < p; ++k)
            for (Index l = 0; l < p; ++l)
                if (t(k, l) != 0.0)
                    t(k, l) = t(k, l) > 0.0 ? par.magnitude : -par.magnitude;
        break;
    }
    case DesignId::T5: {
        coding = Coding::ZERO_ONE;
        t = Matrix::Zero(p, p);
        for (Index k = 0; k < p; ++k)
            for (Index l = k + 1; l < p; ++l) {
                const double u = rng.uniform();
                const double v = u < par.cut_zero ? 0.0 : (u >= par.cut_strong ? par.strong : par.weak);
                t(k, l) = v;
                t(l, k) = v;
            }
        break;
    }
    }
    t.diagonal() = arithmetic(par.diag_first, par.diag_last, p);

    BuiltDesign out;
    out.name = to_string(id);
    out.native = ThetaMatrix(t);
    out.native_coding = coding;
    out.theta = coding == Coding::SPIN ? spin_to_zero_one(out.native) : out.native;
    out.truth = EdgeSet::from_support(t, 0.0);
    out.block_p = p;
    return out;
}

inline Matrix block_diagonal(const Matrix& base, int copies)
{
    const Index b = base.rows();
    Matrix out = Matrix::Zero(b * copies, b * copies);
    for (int c = 0; c < copies; ++c)
        out.block(c * b, c * b, b, b) = base;
    return out;
}

} // namespace detail

/// The design's Theta (both scales) and its true edge set. Pure function of
/// the spec. BLOCK designs repeat one base instance on the diagonal.
inline BuiltDesign build_theta(const DesignSpec& spec)
{
    if (spec.copies < 1)
        throw InvalidArgument("design copies must be >= 1");
    if (spec.params.p < 1)
        throw InvalidArgument("design p must be >= 1");
    BuiltDesign base = detail::build_base(spec.id, spec.params, spec.seed);
    if (spec.copies == 1)
        return base;
    BuiltDesign out;
    out.name = spec.name();
    out.native = ThetaMatrix(detail::block_diagonal(base.native.values(), spec.copies));
    out.theta = ThetaMatrix(detail::block_diagonal(base.theta.values(), spec.copies));
    out.native_coding = base.native_coding;
    out.truth = EdgeSet::from_support(out.native.values(), 0.0);
    out.copies = spec.copies;
    out.block_p = base.block_p;
    return out;
}

/// n draws from the exact Ising law: enumerate P(x, Theta), draw the cell
/// counts of Multinomial(n, P), expand to rows and shuffle.
inline BinaryDataset sample_exact(const ThetaMatrix& theta, Index n, std::uint64_t seed,
                                  Index p_max = kDefaultMaxExactP)
{
    if (n < 1)
        throw InvalidArgument("sample size must be >= 1");
    const auto lw = log_weights(theta, p_max);
    const double a = log_sum_exp(lw);
    std::vector<double> cdf(lw.size());
    double acc = 0.0;
    for (std::size_t s = 0; s < lw.size(); ++s) {
        acc += std::exp(lw[s] - a);
        cdf[s] = acc;
    }
    Rng rng(seed);
    std::vector<Index> counts(lw.size(), 0);
    for (Index i = 0; i < n; ++i) {
        const double u = rng.uniform() * acc;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        if (it == cdf.end())
            --it;
        ++counts[static_cast<std::size_t>(it - cdf.begin())];
    }
    std::vector<std::uint64_t> rows;
    rows.reserve(static_cast<std::size_t>(n));
    for (std::size_t s = 0; s < counts.size(); ++s)
        rows.insert(rows.end(), static_cast<std::size_t>(counts[s]), s);
    for (std::size_t i = rows.size(); i > 1; --i)
        std::swap(rows[i - 1], rows[static_cast<std::size_t>(rng.below(i))]);

    const Index p = theta.p();
    Matrix x(n, p);
    for (Index i = 0; i < n; ++i)
        for (Index k = 0; k < p; ++k)
            x(i, k) = (rows[static_cast<std::size_t>(i)] >> k) & 1u ? 1.0 : 0.0;
    return BinaryDataset(std::move(x));
}

struct GibbsOptions
{
    int burn_in = 1000;  // sweeps discarded before recording
    int thinning = 10;   // sweeps between recorded observations
};

/// Single-chain systematic-scan Gibbs sampler started from x = 0.
inline BinaryDataset sample_gibbs(const ThetaMatrix& theta, Index n, std::uint64_t seed,
                                  const GibbsOptions& opt = {})
{
    if (opt.burn_in < 1 || opt.thinning < 1)
        throw InvalidArgument("burn_in and thinning must be >= 1");
    if (n < 1)
        throw InvalidArgument("sample size must be >= 1");
    const Index p = theta.p();
    const Matrix& t = theta.values();
    Rng rng(seed);
    Vector x = Vector::Zero(p);
    auto sweep = [&] {
        for (Index k = 0; k < p; ++k) {
            double field = t(k, k);
            for (Index l = 0; l < p; ++l)
                if (l != k)
                    field += t(k, l) * x(l);
            x(k) = rng.uniform() < sigmoid(field) ? 1.0 : 0.0;
        }
    };
    for (int s = 0; s < opt.burn_in; ++s)
        sweep();
    Matrix out(n, p);
    for (Index i = 0; i < n; ++i) {
        for (int s = 0; s < opt.thinning; ++s)
            sweep();
        out.row(i) = x.transpose();
    }
    return BinaryDataset(std::move(out));
}

/// Data for a built design: exact sampling when p is small enough, exact
/// per-block sampling for block-diagonal designs (blocks are independent),
/// Gibbs sampling otherwise.
inline BinaryDataset sample_design(const BuiltDesign& design, Index n, std::uint64_t seed,
                                   const GibbsOptions& gibbs = {},
                                   Index p_max = kDefaultMaxExactP)
{
    const Index p = design.theta.p();
    if (p <= p_max)
        return sample_exact(design.theta, n, seed, p_max);
    if (design.copies > 1 && design.block_p <= p_max) {
        Matrix x(n, p);
        for (int c = 0; c < design.copies; ++c) {
            const Index off = c * design.block_p;
            const ThetaMatrix block(design.theta.values().block(off, off, design.block_p, design.block_p));
            const BinaryDataset part =
                sample_exact(block, n, Rng::splitmix64(seed + static_cast<std::uint64_t>(c)), p_max);
            x.middleCols(off, design.block_p) = part.data();
        }
        return BinaryDataset(std::move(x));
    }
    return sample_gibbs(design.theta, n, seed, gibbs);
}

} // namespace isinglab
