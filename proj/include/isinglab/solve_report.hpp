#pragma once

#include <chrono>
#include <string>

#include "isinglab/error.hpp"

namespace isinglab {

/// Convergence summary of an iterative solve.
struct SolveReport
{
    int iterations = 0;
    double final_gap_or_delta = 0.0;
    bool converged = false;
    double wall_time = 0.0; // seconds
};

class NotConvergedError : public NotConverged
{
public:
    NotConvergedError(const std::string& what, SolveReport report)
        : NotConverged(what), report_(report)
    {}

    const SolveReport& report() const noexcept { return report_; }

private:
    SolveReport report_;
};

class Stopwatch
{
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}

    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

} // namespace isinglab
