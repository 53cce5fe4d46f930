#pragma once

#include <cmath>
#include <vector>

#include "isinglab/error.hpp"

namespace isinglab {

/// Strictly descending penalty values, log-equispaced from lambda_max down
/// to lambda_max / ratio.
struct LambdaGrid
{
    std::vector<double> values;
    double ratio = 1000.0;

    std::size_t size() const noexcept { return values.size(); }
    double lambda_max() const { return values.front(); }
};

inline LambdaGrid make_grid(double lambda_max, int count = 50, double ratio = 1000.0)
{
    if (count < 2)
        throw InvalidGrid("grid needs at least 2 values");
    if (!(ratio > 1.0) || std::isinf(ratio))
        throw InvalidGrid("grid ratio must be finite and > 1");
    if (!(lambda_max > 0.0) || std::isinf(lambda_max))
        throw InvalidGrid("lambda_max must be finite and > 0");
    LambdaGrid g;
    g.ratio = ratio;
    g.values.resize(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        g.values[static_cast<std::size_t>(i)] =
            lambda_max * std::pow(ratio, -static_cast<double>(i) / static_cast<double>(count - 1));
    g.values.front() = lambda_max;
    g.values.back() = lambda_max / ratio;
    return g;
}

/// Wraps an explicit list of values; they must be positive and strictly descending.
inline LambdaGrid grid_from_values(std::vector<double> values)
{
    if (values.empty())
        throw InvalidGrid("empty grid");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] >= 0.0) || std::isinf(values[i]))
            throw InvalidGrid("grid values must be finite and >= 0");
        if (i > 0 && !(values[i] < values[i - 1]))
            throw InvalidGrid("grid must be strictly descending");
    }
    LambdaGrid g;
    g.values = std::move(values);
    g.ratio = g.values.back() > 0.0 ? g.values.front() / g.values.back() : 0.0;
    return g;
}

} // namespace isinglab
