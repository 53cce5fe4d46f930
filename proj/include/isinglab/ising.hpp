#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "isinglab/types.hpp"

namespace isinglab {

/// Largest p for which the exact (2^p enumeration) routines run.
inline constexpr Index kDefaultMaxExactP = 20;

namespace detail {

inline void check_exact(const ThetaMatrix& theta, Index p_max)
{
    if (theta.p() > p_max)
        throw DimensionTooLarge("exact enumeration limited to p <= " +
                                std::to_string(p_max) + ", got p=" +
                                std::to_string(theta.p()));
    if (!theta.all_finite())
        throw NonFinite("theta contains NaN or infinite entries");
}

} // namespace detail

/// Unnormalized log-weights of all 2^p profiles of an Ising model,
/// state index s encodes x^(k) as bit k of s.
///
/// Profiles are visited in Gray-code order so that each step flips one
/// coordinate and the exponent is updated in O(p).
inline std::vector<double> log_weights(const ThetaMatrix& theta,
                                       Index p_max = kDefaultMaxExactP)
{
    detail::check_exact(theta, p_max);
    const Index p = theta.p();
    const Matrix& t = theta.values();
    const std::uint64_t states = std::uint64_t{1} << p;
    std::vector<double> out(states);

    // field(k) = theta_k + sum_{l != k} theta_kl x_l
    Vector field = t.diagonal();
    std::uint64_t x = 0;
    double energy = 0.0;
    out[0] = 0.0;
    for (std::uint64_t g = 1; g < states; ++g) {
        const auto j = static_cast<Index>(std::countr_zero(g));
        const std::uint64_t bit = std::uint64_t{1} << j;
        const double sign = (x & bit) ? -1.0 : 1.0;
        energy += sign * field(j);
        x ^= bit;
        for (Index l = 0; l < p; ++l)
            if (l != j)
                field(l) += sign * t(j, l);
        out[x] = energy;
    }
    return out;
}

inline double log_sum_exp(std::span<const double> v)
{
    double m = -kInf;
    for (double a : v)
        m = std::max(m, a);
    if (!std::isfinite(m))
        return m;
    double s = 0.0;
    for (double a : v)
        s += std::exp(a - m);
    return m + std::log(s);
}

/// A(Theta) = log sum_x exp(sum_k theta_k x_k + sum_{k<l} theta_kl x_k x_l).
inline double log_partition(const ThetaMatrix& theta, Index p_max = kDefaultMaxExactP)
{
    const auto lw = log_weights(theta, p_max);
    return log_sum_exp(lw);
}

inline double profile_exponent(std::span<const double> x, const ThetaMatrix& theta)
{
    const Index p = theta.p();
    double e = 0.0;
    for (Index k = 0; k < p; ++k) {
        if (x[static_cast<std::size_t>(k)] == 0.0)
            continue;
        e += theta(k, k);
        for (Index l = k + 1; l < p; ++l)
            e += theta(k, l) * x[static_cast<std::size_t>(l)];
    }
    return e;
}

/// P(x, Theta).
inline double probability(std::span<const double> x, const ThetaMatrix& theta,
                          Index p_max = kDefaultMaxExactP)
{
    if (static_cast<Index>(x.size()) != theta.p())
        throw DimensionMismatch("profile length differs from p");
    for (double v : x)
        if (v != 0.0 && v != 1.0)
            throw InvalidArgument("profile entries must be 0 or 1");
    const double a = log_partition(theta, p_max);
    return std::exp(profile_exponent(x, theta) - a);
}

/// Full distribution over profiles: probabilities and the second-moment
/// matrix E[X X^T] (diagonal holds E[X_k]).
struct ExactMoments
{
    double log_partition = 0.0;
    std::vector<double> probabilities;
    Matrix second_moment;
};

inline ExactMoments exact_moments(const ThetaMatrix& theta, Index p_max = kDefaultMaxExactP)
{
    ExactMoments out;
    const auto lw = log_weights(theta, p_max);
    out.log_partition = log_sum_exp(lw);
    const Index p = theta.p();
    out.probabilities.resize(lw.size());
    out.second_moment = Matrix::Zero(p, p);
    std::vector<Index> on;
    on.reserve(static_cast<std::size_t>(p));
    for (std::size_t s = 0; s < lw.size(); ++s) {
        const double pr = std::exp(lw[s] - out.log_partition);
        out.probabilities[s] = pr;
        on.clear();
        for (Index k = 0; k < p; ++k)
            if (s & (std::size_t{1} << k))
                on.push_back(k);
        for (std::size_t a = 0; a < on.size(); ++a)
            for (std::size_t b = a; b < on.size(); ++b)
                out.second_moment(on[a], on[b]) += pr;
    }
    out.second_moment.triangularView<Eigen::StrictlyLower>() =
        out.second_moment.transpose().triangularView<Eigen::StrictlyLower>();
    return out;
}

/// Exact log-likelihood sum_{l>=k} (X^T X)_{kl} theta_kl - n A(Theta).
inline double exact_log_likelihood(const BinaryDataset& data, const ThetaMatrix& theta,
                                   Index p_max = kDefaultMaxExactP)
{
    if (data.p() != theta.p())
        throw DimensionMismatch("dataset and theta disagree on p");
    const double a = log_partition(theta, p_max);
    const Matrix xtx = data.data().transpose() * data.data();
    double s = 0.0;
    for (Index k = 0; k < theta.p(); ++k)
        for (Index l = k; l < theta.p(); ++l)
            s += xtx(k, l) * theta(k, l);
    return s - static_cast<double>(data.n()) * a;
}

/// Linear predictors eta(i,k) = theta_k + sum_{l != k} theta_kl x_il, i.e.
/// the data matrix with column k set to one, times Theta[,k].
inline Matrix conditional_predictors(const Matrix& x, const Matrix& theta)
{
    Matrix off = theta;
    off.diagonal().setZero();
    Matrix eta = x * off;
    eta.rowwise() += theta.diagonal().transpose();
    return eta;
}

/// pseudo-l(X, Theta) = sum_i sum_k log P(x_ik | x_i,-k).
inline double pseudo_log_likelihood(const BinaryDataset& data, const ThetaMatrix& theta)
{
    if (data.p() != theta.p())
        throw DimensionMismatch("dataset and theta disagree on p");
    if (theta.values().hasNaN())
        throw NonFinite("theta contains NaN");
    const Matrix eta = conditional_predictors(data.data(), theta.values());
    double s = 0.0;
    for (Index k = 0; k < data.p(); ++k)
        for (Index i = 0; i < data.n(); ++i) {
            const double spin = 2.0 * data.data()(i, k) - 1.0;
            s -= softplus(-spin * eta(i, k));
        }
    return s;
}

/// Conditional odds ratio between k and l: exp(theta_kl) under {0,1}
/// coding and exp(4 theta_kl) under spin coding.
inline double conditional_odds_ratio(const ThetaMatrix& theta, Index k, Index l, Coding coding)
{
    if (k < 0 || l < 0 || k >= theta.p() || l >= theta.p() || k == l)
        throw IndexOutOfRange("conditional_odds_ratio needs distinct indices in [0,p)");
    const double t = theta(k, l);
    return coding == Coding::SPIN ? std::exp(4.0 * t) : std::exp(t);
}

/// Spin-scale Theta to the equivalent {0,1}-scale Theta (substituting z = 2x-1).
inline ThetaMatrix spin_to_zero_one(const ThetaMatrix& spin)
{
    const Index p = spin.p();
    Matrix out = 4.0 * spin.values();
    for (Index k = 0; k < p; ++k) {
        double off = 0.0;
        for (Index l = 0; l < p; ++l)
            if (l != k)
                off += spin(k, l);
        out(k, k) = 2.0 * spin(k, k) - 2.0 * off;
    }
    return ThetaMatrix(std::move(out));
}

enum class SurrogateKind { COV_PLUS_THIRD, COV, COR };

/// Gaussian stand-in for the binary second-moment structure, computed on
/// spin-coded data.
struct SurrogateMatrix
{
    SurrogateKind kind = SurrogateKind::COV;
    Matrix values;
};

/// Spin covariance with divisor n, then the kind transform.
inline SurrogateMatrix gaussian_surrogate(const BinaryDataset& data, SurrogateKind kind)
{
    if (data.n() < 2)
        throw InvalidArgument("gaussian_surrogate needs n >= 2");
    const Matrix z = data.spin();
    const Eigen::RowVectorXd mean = z.colwise().mean();
    const Matrix centered = z.rowwise() - mean;
    Matrix cov = (centered.transpose() * centered) / static_cast<double>(data.n());
    for (Index k = 0; k < cov.rows(); ++k)
        if (!(cov(k, k) > 0.0))
            throw ConstantColumn(static_cast<std::size_t>(k));

    SurrogateMatrix out{kind, {}};
    switch (kind) {
    case SurrogateKind::COV_PLUS_THIRD:
        cov.diagonal().array() += 1.0 / 3.0;
        out.values = std::move(cov);
        break;
    case SurrogateKind::COV:
        out.values = std::move(cov);
        break;
    case SurrogateKind::COR: {
        const Vector inv_sd = cov.diagonal().cwiseSqrt().cwiseInverse();
        out.values = inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
        out.values.diagonal().setOnes();
        break;
    }
    }
    return out;
}

/// log det(M) - tr(M S) for symmetric positive definite M.
inline double gaussian_log_likelihood(const Matrix& m, const Matrix& s)
{
    if (m.rows() != s.rows() || m.cols() != s.cols() || m.rows() != m.cols())
        throw DimensionMismatch("precision and surrogate must be square of equal size");
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("precision matrix is not positive definite");
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return logdet - m.cwiseProduct(s).sum();
}

} // namespace isinglab
