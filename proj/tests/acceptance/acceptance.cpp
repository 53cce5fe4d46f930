// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "isinglab/cli.hpp"
#include "isinglab/datagen.hpp"
#include "isinglab/eval.hpp"
#include "isinglab/exact_mle.hpp"
#include "isinglab/glasso.hpp"
#include "isinglab/pseudo_likelihood.hpp"
#include "oracles.hpp"

using namespace isinglab;

namespace {

struct Outcome
{
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

const BenchmarkAggregate& find_agg(const BenchmarkReport& rep, MethodId m, Index n)
{
    for (const auto& a : rep.aggregates)
        if (a.method == m && a.n == n)
            return a;
    throw std::runtime_error("missing aggregate for " + to_string(m));
}

int failures_of(const BenchmarkReport& rep)
{
    int f = 0;
    for (const auto& a : rep.aggregates)
        f += a.failures;
    return f;
}

CampaignConfig campaign(DesignId id, int copies, std::vector<MethodId> methods, std::vector<Index> ns, int reps,
                        SelectionMode mode)
{
    CampaignConfig c;
    c.designs = {DesignSpec::make(id, copies)};
    c.methods = std::move(methods);
    c.sample_sizes = std::move(ns);
    c.replicates = reps;
    c.selection = mode;
    c.seed = 2024;
    return c;
}

// ---------------------------------------------------------------- criteria

Outcome exactness_oracle()
{
    std::mt19937_64 gen(101);
    std::uniform_int_distribution<int> pick_p(2, 10);
    double worst_sum = 0.0, worst_rel = 0.0;
    const double h = 1e-5;
    for (int trial = 0; trial < 100; ++trial) {
        const int p = pick_p(gen);
        const Matrix base = oracle::random_theta(p, gen, 1.0);
        const auto mom = exact_moments(ThetaMatrix(base));
        double s = 0.0;
        for (double v : mom.probabilities)
            s += v;
        worst_sum = std::max(worst_sum, std::abs(s - 1.0));
        for (int k = 0; k < p; ++k)
            for (int l = k; l < p; ++l) {
                Matrix a = base, b = base;
                a(k, l) += h;
                b(k, l) -= h;
                if (k != l) {
                    a(l, k) += h;
                    b(l, k) -= h;
                }
                const double fd = (log_partition(ThetaMatrix(a)) - log_partition(ThetaMatrix(b))) / (2.0 * h);
                const double m = mom.second_moment(k, l);
                worst_rel = std::max(worst_rel, std::abs(fd - m) / std::abs(m));
            }
    }
    return {worst_sum <= 1e-10 && worst_rel <= 1e-6,
            "max |sum P - 1| = " + fmt(worst_sum, 3) + ", max relative gradient error = " + fmt(worst_rel, 3)};
}

Outcome factor_two()
{
    double worst = 0.0;
    const ThetaMatrix truth(Matrix{{-0.3, 1.0}, {1.0, 0.2}});
    for (int r = 0; r < 20; ++r) {
        const BinaryDataset d = sample_exact(truth, 1000, 500 + static_cast<std::uint64_t>(r));
        const EdgeSet null_model(2), full = EdgeSet::complete(2);
        const PseudoLikelihoodOptions po{.tol = 1e-12, .max_iter = 500, .coefficient_cap = 30.0};
        const double pl_null =
            pseudo_log_likelihood(d, pseudo_likelihood_fit(d, PenaltySpec::refit(null_model), std::nullopt, po).theta);
        const double pl_full =
            pseudo_log_likelihood(d, pseudo_likelihood_fit(d, PenaltySpec::refit(full), std::nullopt, po).theta);
        ExactMleOptions eo;
        eo.gradient_tol = 1e-12;
        const double l_null = exact_constrained_mle(d, null_model, eo).log_likelihood;
        const double l_full = exact_constrained_mle(d, full, eo).log_likelihood;
        const double ratio = (2.0 * (pl_full - pl_null)) / (2.0 * (l_full - l_null));
        worst = std::max(worst, std::abs(ratio - 2.0));
    }
    return {worst <= 1e-3, "max |ratio - 2| over 20 datasets = " + fmt(worst, 3)};
}

Outcome glasso_correctness()
{
    std::mt19937_64 gen(303);
    std::uniform_int_distribution<int> pick_p(2, 20);
    std::uniform_real_distribution<double> frac(0.02, 0.9);
    const SurrogateKind kinds[] = {SurrogateKind::COV_PLUS_THIRD, SurrogateKind::COV, SurrogateKind::COR};
    double worst_kkt = 0.0, worst_inv = 0.0, worst_dual = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int p = pick_p(gen);
        Matrix t = oracle::random_theta(p, gen, 0.4);
        const BinaryDataset d = sample_exact(ThetaMatrix(t), 400, 3000 + static_cast<std::uint64_t>(trial));
        const SurrogateKind kind = kinds[trial % 3];
        if (kind == SurrogateKind::COR) {
            bool constant = false;
            for (int k = 0; k < p; ++k)
                constant |= d.data().col(k).minCoeff() == d.data().col(k).maxCoeff();
            if (constant)
                continue;
        }
        const Matrix s = gaussian_surrogate(d, kind).values;
        double mx = 0.0;
        for (int k = 0; k < p; ++k)
            for (int l = k + 1; l < p; ++l)
                mx = std::max(mx, std::abs(s(k, l)));
        const PenaltySpec pen = PenaltySpec::scalar(frac(gen) * mx);
        const GlassoResult r = glasso(s, pen);
        worst_kkt = std::max(worst_kkt, glasso_kkt_residual(s, pen, r.w, r.m));
        worst_inv = std::max(worst_inv, (r.m * r.w - Matrix::Identity(p, p)).cwiseAbs().maxCoeff());
    }
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix s = oracle::random_spd(2, gen);
        const double lam = frac(gen) * std::abs(s(0, 1)) * 1.5;
        const GlassoResult r = glasso(s, PenaltySpec::scalar(lam));
        worst_dual = std::max(worst_dual, std::abs(r.w(0, 1) - oracle::glasso_dual_w12(s(0, 1), lam)));
    }
    return {worst_kkt <= 1e-6 && worst_inv <= 1e-6 && worst_dual <= 1e-8,
            "max KKT = " + fmt(worst_kkt, 3) + ", max |MW - I| = " + fmt(worst_inv, 3) +
                ", max p=2 dual error = " + fmt(worst_dual, 3)};
}

Outcome oracle_reproduction()
{
    const auto rep = run_benchmark(campaign(DesignId::T3, 1,
                                            {MethodId::GAUSS_COR, MethodId::GAUSS_COV, MethodId::GAUSS_COV13},
                                            {2500}, 50, SelectionMode::ORACLE));
    const auto& cor = find_agg(rep, MethodId::GAUSS_COR, 2500);
    const auto& cov = find_agg(rep, MethodId::GAUSS_COV, 2500);
    const auto& c13 = find_agg(rep, MethodId::GAUSS_COV13, 2500);
    const bool ok = failures_of(rep) == 0 && cor.acc.mean >= 0.99 && cor.f1.mean >= 0.97 &&
                    c13.fpr.mean >= cor.fpr.mean;
    return {ok, "GaussCor ACC = " + fmt(cor.acc.mean) + ", F1 = " + fmt(cor.f1.mean) + ", FPR = " +
                    fmt(cor.fpr.mean) + "; GaussCov FPR = " + fmt(cov.fpr.mean) + "; GaussCov 1/3 FPR = " +
                    fmt(c13.fpr.mean) + "; failed cells = " + std::to_string(failures_of(rep))};
}

Outcome bic_reproduction()
{
    const auto big = run_benchmark(campaign(DesignId::T1, 1, {MethodId::GAUSS_COR}, {2500}, 50, SelectionMode::BIC));
    const auto small = run_benchmark(
        campaign(DesignId::T1, 1, {MethodId::BMN_PSEUDO, MethodId::BMN_PSEUDO_HALF}, {500}, 50, SelectionMode::BIC));
    const auto& cor = find_agg(big, MethodId::GAUSS_COR, 2500);
    const auto& full = find_agg(small, MethodId::BMN_PSEUDO, 500);
    const auto& half = find_agg(small, MethodId::BMN_PSEUDO_HALF, 500);
    const double gap = full.pos.mean - half.pos.mean;
    const bool ok = failures_of(big) == 0 && failures_of(small) == 0 && std::abs(cor.tpr.mean - 0.912) <= 0.05 &&
                    cor.fpr.mean <= 0.02 && half.pos.mean < full.pos.mean && std::abs(gap - (9.48 - 4.60)) <= 2.0;
    return {ok, "GaussCor TPR = " + fmt(cor.tpr.mean) + ", FPR = " + fmt(cor.fpr.mean) + "; n=500 POS BMNPseudo = " +
                    fmt(full.pos.mean) + ", BMNPseudo 1/2 = " + fmt(half.pos.mean) + " (gap " + fmt(gap) +
                    ", reference gap 4.88); failed cells = " + std::to_string(failures_of(big) + failures_of(small))};
}

Outcome large_p_sanity()
{
    const auto rep = run_benchmark(
        campaign(DesignId::T3, 5, {MethodId::GAUSS_COR, MethodId::SEPLOGIT_AND}, {2500}, 10, SelectionMode::BIC));
    const auto& cor = find_agg(rep, MethodId::GAUSS_COR, 2500);
    const auto& sep = find_agg(rep, MethodId::SEPLOGIT_AND, 2500);
    const bool ok = failures_of(rep) == 0 && cor.f1.mean >= 0.9 && cor.time_s.mean < sep.time_s.mean;
    return {ok, "GaussCor F1 = " + fmt(cor.f1.mean) + "; path time GaussCor = " + fmt(cor.time_s.mean, 3) +
                    " s, SepLogit = " + fmt(sep.time_s.mean, 3) + " s; failed cells = " +
                    std::to_string(failures_of(rep))};
}

Outcome mse_ordering()
{
    auto cfg = campaign(DesignId::T3, 1, {MethodId::GAUSS_COR, MethodId::SEPLOGIT_AND, MethodId::GAUSS_COV13}, {2500},
                        50, SelectionMode::BIC);
    cfg.mse = true;
    const auto rep = run_benchmark(cfg);
    const auto& cor = find_agg(rep, MethodId::GAUSS_COR, 2500);
    const auto& sep = find_agg(rep, MethodId::SEPLOGIT_AND, 2500);
    const auto& c13 = find_agg(rep, MethodId::GAUSS_COV13, 2500);
    const double ratio = cor.mse.mean / sep.mse.mean;
    const bool ok = failures_of(rep) == 0 && ratio > 5.0 && c13.mse.mean > cor.mse.mean;
    return {ok, "MSE GaussCor = " + fmt(cor.mse.mean) + ", SepLogit = " + fmt(sep.mse.mean) + " (ratio " +
                    fmt(ratio) + "), GaussCov 1/3 = " + fmt(c13.mse.mean) + "; failed cells = " +
                    std::to_string(failures_of(rep))};
}

Outcome deviance_properties()
{
    const BuiltDesign design = build_theta(DesignSpec::make(DesignId::T2));
    const BinaryDataset data = sample_design(design, 500, 1);
    const DevianceCurves c = deviance_curves(data);
    double g23 = 0.0, worst_order = 0.0, gap_full = 0.0, gap_half = 0.0;
    std::size_t violations = 0;
    for (const auto& r : c.rows) {
        g23 = std::max(g23, std::abs(r.gauss_cov - r.gauss_cor));
        const double below = r.exact - r.pseudo;
        if (below > 1e-6) {
            ++violations;
            worst_order = std::max(worst_order, below);
        }
        gap_full += std::abs(r.pseudo - r.exact);
        gap_half += std::abs(r.pseudo_half - r.exact);
    }
    const double rows = static_cast<double>(c.rows.size());
    gap_full /= rows;
    gap_half /= rows;
    const bool ok = !c.rows.empty() && c.warnings.empty() && g23 <= 1e-8 && violations == 0 && gap_half < gap_full;
    return {ok, std::to_string(c.rows.size()) + " rows, " + std::to_string(c.warnings.size()) +
                    " warnings; max |G2 - G3| = " + fmt(g23, 3) + "; rows with pseudo < exact = " +
                    std::to_string(violations) + " (worst " + fmt(worst_order, 3) +
                    "); mean gap to exact: full = " + fmt(gap_full) + ", half = " + fmt(gap_half)};
}

Outcome gibbs_fidelity()
{
    std::mt19937_64 gen(909);
    const int p = 5;
    const ThetaMatrix t(oracle::random_theta(p, gen, 1.0));
    const Index n = 100000;
    const BinaryDataset d = sample_gibbs(t, n, 77);
    const auto mom = exact_moments(t);
    std::vector<double> counts(std::size_t{1} << p, 0.0);
    for (Index i = 0; i < n; ++i)
        counts[oracle::profile_bits(d.data().row(i))] += 1.0;
    double stat = 0.0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
        const double e = static_cast<double>(n) * mom.probabilities[s];
        stat += (counts[s] - e) * (counts[s] - e) / e;
    }
    const double pv = oracle::chi_square_pvalue(stat, static_cast<double>(counts.size() - 1));
    return {pv > 0.001, "chi-square = " + fmt(stat) + " on " + std::to_string(counts.size() - 1) +
                            " df, p-value = " + fmt(pv)};
}

Outcome determinism()
{
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "isinglab_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "c.ini");
        f << "[campaign]\n"
             "designs = T1, T5, BLOCK(T3,2)\n"
             "methods = GaussCor, GaussCov13, SepLogit_AND, SepLogit_OR, BMNPseudo, BMNPseudo 1/2\n"
             "sample_sizes = 300\n"
             "replicates = 2\n"
             "grid_count = 15\n"
             "seed = 7\n"
             "timing = none\n"
             "mse = true\n"
             "output_dir = "
          << dir.string() << "\n";
    }
    auto run = [&](const std::string& tag, const std::string& threads) {
        const std::string cfg = (dir / "c.ini").string(), out = (dir / ("report_" + tag + ".csv")).string(),
                          sum = (dir / ("summary_" + tag + ".csv")).string();
        const char* argv[] = {"isinglab", "benchmark", "--config", cfg.c_str(), "--out", out.c_str(),
                              "--summary", sum.c_str(), "--threads", threads.c_str()};
        std::ostringstream o, e;
        const int code = cli_dispatch(10, argv, o, e);
        if (code != 0)
            throw std::runtime_error("benchmark exited with " + std::to_string(code) + ": " + e.str());
        std::ifstream a(out), b(sum);
        std::stringstream s;
        s << a.rdbuf() << b.rdbuf();
        return s.str();
    };
    const std::string first = run("a", "1"), second = run("b", "1"), third = run("c", "3");
    fs::remove_all(dir);
    const bool ok = first == second && first == third && !first.empty();
    return {ok, "two identical runs " + std::string(first == second ? "match" : "differ") +
                    " byte for byte; a 3-thread run " + (first == third ? "matches" : "differs") + " (" +
                    std::to_string(first.size()) + " bytes)"};
}

} // namespace

int main()
{
    struct Criterion
    {
        int id;
        const char* name;
        double limit_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "exactness oracle", 60.0, exactness_oracle},
        {2, "factor-2 pseudo-deviance", 60.0, factor_two},
        {3, "glasso correctness", 60.0, glasso_correctness},
        {4, "oracle selection on T3", 600.0, oracle_reproduction},
        {5, "BIC selection on T1", 1800.0, bic_reproduction},
        {6, "p=50 sanity", 3600.0, large_p_sanity},
        {7, "MSE ordering", 1200.0, mse_ordering},
        {8, "deviance-curve properties", 300.0, deviance_properties},
        {9, "Gibbs fidelity", 120.0, gibbs_fidelity},
        {10, "determinism", 1200.0, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs < c.limit_s;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail
                  << "; " << fmt(secs, 3) << " s (limit " << fmt(c.limit_s, 4) << " s)" << std::endl;
    }
    std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " FAILED") << std::endl;
    return failed == 0 ? 0 : 1;
}
