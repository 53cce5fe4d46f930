#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "isinglab/error.hpp"

namespace isinglab {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Coding of a binary variable: {0,1} or spin {-1,+1}.
enum class Coding { ZERO_ONE, SPIN };

/// Symmetric p x p coefficient matrix of an Ising model.
/// Diagonal entries are main effects, off-diagonal entries are pairwise
/// (conditional log-odds) interactions.
class ThetaMatrix
{
public:
    ThetaMatrix() = default;

    explicit ThetaMatrix(Index p) : values_(Matrix::Zero(p, p))
    {
        if (p < 1)
            throw InvalidArgument("ThetaMatrix needs p >= 1");
    }

    /// Throws InvalidArgument unless `values` is square and exactly symmetric.
    explicit ThetaMatrix(Matrix values) : values_(std::move(values))
    {
        if (values_.rows() < 1 || values_.rows() != values_.cols())
            throw InvalidArgument("ThetaMatrix must be square with p >= 1");
        for (Index k = 0; k < p(); ++k)
            for (Index l = k + 1; l < p(); ++l)
                if (!(values_(k, l) == values_(l, k)) &&
                    !(std::isnan(values_(k, l)) && std::isnan(values_(l, k))))
                    throw InvalidArgument("ThetaMatrix must be exactly symmetric");
    }

    static ThetaMatrix zeros(Index p) { return ThetaMatrix(p); }

    Index p() const noexcept { return values_.rows(); }
    const Matrix& values() const noexcept { return values_; }

    double operator()(Index k, Index l) const { return values_(k, l); }

    /// Sets both (k,l) and (l,k).
    void set(Index k, Index l, double v)
    {
        values_(k, l) = v;
        values_(l, k) = v;
    }

    bool all_finite() const { return values_.allFinite(); }

private:
    Matrix values_;
};

/// Unordered pairs (k,l) over p nodes, stored normalized with k < l.
class EdgeSet
{
public:
    using Edge = std::pair<Index, Index>;

    EdgeSet() = default;
    explicit EdgeSet(Index p) : p_(p) {}

    Index p() const noexcept { return p_; }
    std::size_t size() const noexcept { return edges_.size(); }
    bool empty() const noexcept { return edges_.empty(); }

    void insert(Index k, Index l)
    {
        if (k == l || k < 0 || l < 0 || k >= p_ || l >= p_)
            throw IndexOutOfRange("edge (" + std::to_string(k) + "," +
                                  std::to_string(l) + ") invalid for p=" +
                                  std::to_string(p_));
        edges_.insert(k < l ? Edge{k, l} : Edge{l, k});
    }

    bool contains(Index k, Index l) const
    {
        return edges_.count(k < l ? Edge{k, l} : Edge{l, k}) > 0;
    }

    auto begin() const { return edges_.begin(); }
    auto end() const { return edges_.end(); }

    static EdgeSet complete(Index p)
    {
        EdgeSet e(p);
        for (Index k = 0; k < p; ++k)
            for (Index l = k + 1; l < p; ++l)
                e.insert(k, l);
        return e;
    }

    /// Off-diagonal entries with |value| > threshold.
    static EdgeSet from_support(const Matrix& m, double threshold = 1e-8)
    {
        EdgeSet e(m.rows());
        for (Index k = 0; k < m.rows(); ++k)
            for (Index l = k + 1; l < m.cols(); ++l)
                if (std::abs(m(k, l)) > threshold)
                    e.insert(k, l);
        return e;
    }

    friend bool operator==(const EdgeSet& a, const EdgeSet& b)
    {
        return a.p_ == b.p_ && a.edges_ == b.edges_;
    }

private:
    Index p_ = 0;
    std::set<Edge> edges_;
};

inline EdgeSet intersection(const EdgeSet& a, const EdgeSet& b)
{
    if (a.p() != b.p())
        throw DimensionMismatch("edge sets over different p");
    EdgeSet out(a.p());
    for (const auto& [k, l] : a)
        if (b.contains(k, l))
            out.insert(k, l);
    return out;
}

/// n x p matrix of {0,1} observations with unique variable names.
class BinaryDataset
{
public:
    BinaryDataset() = default;

    /// Names default to V1..Vp when omitted.
    explicit BinaryDataset(Matrix data, std::vector<std::string> names = {})
        : data_(std::move(data)), names_(std::move(names))
    {
        if (data_.rows() < 1 || data_.cols() < 1)
            throw InvalidArgument("dataset needs n >= 1 and p >= 1");
        for (Index i = 0; i < data_.rows(); ++i)
            for (Index k = 0; k < data_.cols(); ++k)
                if (data_(i, k) != 0.0 && data_(i, k) != 1.0)
                    throw InvalidArgument("dataset entries must be 0 or 1");
        if (names_.empty()) {
            names_.reserve(static_cast<std::size_t>(data_.cols()));
            for (Index k = 0; k < data_.cols(); ++k)
                names_.push_back("V" + std::to_string(k + 1));
        }
        if (static_cast<Index>(names_.size()) != data_.cols())
            throw DimensionMismatch("name count differs from column count");
        std::unordered_set<std::string> seen;
        for (const auto& nm : names_)
            if (!seen.insert(nm).second)
                throw DuplicateName("duplicate variable name '" + nm + "'");
    }

    Index n() const noexcept { return data_.rows(); }
    Index p() const noexcept { return data_.cols(); }
    const Matrix& data() const noexcept { return data_; }
    const std::vector<std::string>& names() const noexcept { return names_; }

    /// z = 2x - 1.
    Matrix spin() const { return (2.0 * data_.array() - 1.0).matrix(); }

    /// Column subset, in the order given.
    BinaryDataset select_columns(const std::vector<Index>& cols) const
    {
        Matrix sub(n(), static_cast<Index>(cols.size()));
        std::vector<std::string> nm;
        for (std::size_t j = 0; j < cols.size(); ++j) {
            sub.col(static_cast<Index>(j)) = data_.col(cols[j]);
            nm.push_back(names_[static_cast<std::size_t>(cols[j])]);
        }
        return BinaryDataset(std::move(sub), std::move(nm));
    }

private:
    Matrix data_;
    std::vector<std::string> names_;
};

/// Scalar lambda or a symmetric matrix of per-entry penalties in [0, +inf].
/// +inf pins the corresponding entry at exactly zero.
class PenaltySpec
{
public:
    static PenaltySpec scalar(double lambda)
    {
        if (!(lambda >= 0.0) || std::isinf(lambda))
            throw InvalidArgument("scalar penalty must be finite and >= 0");
        PenaltySpec s;
        s.lambda_ = lambda;
        return s;
    }

    static PenaltySpec matrix(Matrix m)
    {
        if (m.rows() != m.cols())
            throw InvalidArgument("penalty matrix must be square");
        for (Index k = 0; k < m.rows(); ++k)
            for (Index l = 0; l < m.cols(); ++l) {
                if (std::isnan(m(k, l)) || m(k, l) < 0.0)
                    throw InvalidArgument("penalty entries must lie in [0, +inf]");
                if (m(k, l) != m(l, k))
                    throw InvalidArgument("penalty matrix must be symmetric");
            }
        PenaltySpec s;
        s.is_matrix_ = true;
        s.m_ = std::move(m);
        return s;
    }

    /// 0 on kept pairs, +inf elsewhere: the constraint set of an un-shrunk refit.
    static PenaltySpec refit(const EdgeSet& keep)
    {
        Matrix m = Matrix::Constant(keep.p(), keep.p(), kInf);
        m.diagonal().setZero();
        for (const auto& [k, l] : keep) {
            m(k, l) = 0.0;
            m(l, k) = 0.0;
        }
        return matrix(std::move(m));
    }

    bool is_matrix() const noexcept { return is_matrix_; }

    double at(Index k, Index l) const { return is_matrix_ ? m_(k, l) : lambda_; }

    void check_dimension(Index p) const
    {
        if (is_matrix_ && m_.rows() != p)
            throw DimensionMismatch("penalty matrix dimension differs from p");
    }

private:
    bool is_matrix_ = false;
    double lambda_ = 0.0;
    Matrix m_;
};

inline double sigmoid(double t)
{
    if (t >= 0.0) {
        const double e = std::exp(-t);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(t);
    return e / (1.0 + e);
}

/// log(1 + exp(t)) without overflow.
inline double softplus(double t)
{
    return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

inline double logit(double q) { return std::log(q / (1.0 - q)); }

inline double soft_threshold(double z, double gamma)
{
    if (z > gamma)
        return z - gamma;
    if (z < -gamma)
        return z + gamma;
    return 0.0;
}

} // namespace isinglab
