#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "isinglab/types.hpp"

namespace isinglab {

/// Edge-recovery counts over the p(p-1)/2 unordered pairs and derived rates.
struct ConfusionSummary
{
    std::size_t pos = 0, tp = 0, fp = 0, fn = 0, tn = 0;
    double tpr = 0.0, fpr = 0.0, precision = 0.0, accuracy = 0.0, f1 = 0.0;
};

inline ConfusionSummary confusion(const EdgeSet& estimated, const EdgeSet& truth)
{
    if (estimated.p() != truth.p())
        throw DimensionMismatch("estimated and true edge sets differ in p");
    const auto p = static_cast<std::size_t>(truth.p());
    const std::size_t pairs = p * (p - 1) / 2;
    ConfusionSummary c;
    c.pos = estimated.size();
    for (const auto& [k, l] : estimated)
        truth.contains(k, l) ? ++c.tp : ++c.fp;
    c.fn = truth.size() - c.tp;
    c.tn = pairs - c.tp - c.fp - c.fn;

    const double tp = static_cast<double>(c.tp);
    c.tpr = truth.empty() ? 1.0 : tp / static_cast<double>(c.tp + c.fn);
    c.fpr = (c.fp + c.tn) == 0 ? 0.0 : static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
    c.precision = c.pos == 0 ? 1.0 : tp / static_cast<double>(c.pos);
    c.accuracy = pairs == 0 ? 1.0 : static_cast<double>(c.tp + c.tn) / static_cast<double>(pairs);
    // F1 from precision and recall; an empty estimate against a nonempty
    // truth has recall 0 and therefore F1 0.
    const double denom = c.precision + c.tpr;
    c.f1 = denom == 0.0 ? 0.0 : 2.0 * c.precision * c.tpr / denom;
    if (c.tp == 0 && !truth.empty())
        c.f1 = 0.0;
    return c;
}

/// kappa = |E1 ∩ E2| / min(|E1|, |E2|) (1 when either set is empty) and
/// kappa_bar = |E1 Δ E2|.
struct Agreement
{
    double kappa = 1.0;
    std::size_t kappa_bar = 0;
    bool kappa_defined = true;
};

inline Agreement agreement(const EdgeSet& a, const EdgeSet& b)
{
    if (a.p() != b.p())
        throw DimensionMismatch("edge sets differ in p");
    const std::size_t common = intersection(a, b).size();
    Agreement out;
    out.kappa_bar = (a.size() - common) + (b.size() - common);
    const std::size_t smaller = std::min(a.size(), b.size());
    if (smaller == 0) {
        out.kappa = 1.0;
        out.kappa_defined = false;
    } else {
        out.kappa = static_cast<double>(common) / static_cast<double>(smaller);
    }
    return out;
}

/// 1000 * sum_{k>l} (est - truth)^2 / #{k>l : truth_kl != 0}. The numerator
/// runs over every pair, the denominator counts true edges only.
inline double odds_ratio_mse(const ThetaMatrix& estimated, const ThetaMatrix& truth)
{
    if (estimated.p() != truth.p())
        throw DimensionMismatch("estimated and true Theta differ in p");
    double num = 0.0;
    std::size_t edges = 0;
    for (Index k = 0; k < truth.p(); ++k)
        for (Index l = 0; l < k; ++l) {
            const double d = estimated(k, l) - truth(k, l);
            num += d * d;
            if (truth(k, l) != 0.0)
                ++edges;
        }
    if (edges == 0)
        throw NoTrueEdges("true Theta has no nonzero off-diagonal entry");
    return 1000.0 * num / static_cast<double>(edges);
}

/// Off-diagonal rescaling between codings (spin coefficients are one quarter
/// of the {0,1} ones). The diagonal is left untouched.
inline ThetaMatrix convert_interactions(const ThetaMatrix& theta, Coding from, Coding to)
{
    if (from == to)
        return theta;
    const double f = from == Coding::SPIN ? 4.0 : 0.25;
    Matrix m = theta.values() * f;
    m.diagonal() = theta.values().diagonal();
    return ThetaMatrix(std::move(m));
}

} // namespace isinglab
