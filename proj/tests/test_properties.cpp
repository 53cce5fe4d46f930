#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "isinglab/datagen.hpp"
#include "isinglab/glasso.hpp"
#include "isinglab/io.hpp"
#include "isinglab/logistic.hpp"
#include "isinglab/methods.hpp"
#include "isinglab/metrics.hpp"
#include "isinglab/selection.hpp"
#include "oracles.hpp"

using namespace isinglab;

namespace {

class Seeded : public ::testing::TestWithParam<int>
{
protected:
    std::mt19937_64 gen{static_cast<std::uint64_t>(1000 + GetParam())};

    int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }

    EdgeSet random_edges(Index p, double density)
    {
        std::bernoulli_distribution b(density);
        EdgeSet e(p);
        for (Index k = 0; k < p; ++k)
            for (Index l = k + 1; l < p; ++l)
                if (b(gen))
                    e.insert(k, l);
        return e;
    }

    /// Sparse Theta on the {0,1} scale with moderate coefficients.
    ThetaMatrix sparse_theta(Index p)
    {
        const EdgeSet e = random_edges(p, 0.3);
        Matrix t = Matrix::Zero(p, p);
        for (Index k = 0; k < p; ++k)
            t(k, k) = uniform(-1.0, 0.5);
        for (const auto& [k, l] : e)
            t(k, l) = t(l, k) = uniform(-1.2, 1.2);
        return ThetaMatrix(t);
    }
};

std::vector<double> bits(std::uint64_t s, Index p)
{
    std::vector<double> x(static_cast<std::size_t>(p));
    for (Index k = 0; k < p; ++k)
        x[static_cast<std::size_t>(k)] = ((s >> k) & 1u) ? 1.0 : 0.0;
    return x;
}

} // namespace

// ---------------------------------------------------------------- exact law

using ExactLaw = Seeded;

TEST_P(ExactLaw, ProbabilitiesSumToOne)
{
    const Index p = uniform_int(1, 10);
    const ThetaMatrix t(oracle::random_theta(static_cast<int>(p), gen, 2.0));
    const auto mom = exact_moments(t);
    double s = 0.0;
    for (double v : mom.probabilities)
        s += v;
    EXPECT_NEAR(s, 1.0, 1e-10);
}

TEST_P(ExactLaw, LogPartitionGradientIsSecondMoment)
{
    const Index p = uniform_int(2, 7);
    const Matrix base = oracle::random_theta(static_cast<int>(p), gen, 1.0);
    const auto mom = exact_moments(ThetaMatrix(base));
    const Index k = uniform_int(0, static_cast<int>(p) - 2);
    const Index l = uniform_int(static_cast<int>(k) + 1, static_cast<int>(p) - 1);
    const double h = 1e-5;
    Matrix a = base, b = base;
    a(k, l) += h;
    a(l, k) += h;
    b(k, l) -= h;
    b(l, k) -= h;
    // an off-diagonal coefficient appears once in the exponent
    const double fd = (log_partition(ThetaMatrix(a)) - log_partition(ThetaMatrix(b))) / (2.0 * h);
    EXPECT_NEAR(fd, mom.second_moment(k, l), 1e-6 * std::max(1.0, std::abs(fd)));
    EXPECT_NEAR(mom.second_moment(k, l), oracle::second_moment(base)(k, l), 1e-10);
    Matrix c = base, d = base;
    c(k, k) += h;
    d(k, k) -= h;
    const double fd_diag = (log_partition(ThetaMatrix(c)) - log_partition(ThetaMatrix(d))) / (2.0 * h);
    EXPECT_NEAR(fd_diag, mom.second_moment(k, k), 1e-6 * std::max(1.0, std::abs(fd_diag)));
}

TEST_P(ExactLaw, PseudoEqualsExactAtIndependence)
{
    const Index p = uniform_int(1, 8);
    Matrix t = Matrix::Zero(p, p);
    for (Index k = 0; k < p; ++k)
        t(k, k) = uniform(-3.0, 3.0);
    const BinaryDataset d(oracle::random_binary(uniform_int(1, 60), static_cast<int>(p), gen, uniform(0.1, 0.9)));
    EXPECT_NEAR(pseudo_log_likelihood(d, ThetaMatrix(t)), exact_log_likelihood(d, ThetaMatrix(t)),
                1e-9 * std::max(1.0, std::abs(exact_log_likelihood(d, ThetaMatrix(t)))));
}

TEST_P(ExactLaw, LikelihoodsAreNonPositiveAndMatchOracle)
{
    const Index p = uniform_int(2, 8);
    const Matrix t = oracle::random_theta(static_cast<int>(p), gen, 1.5);
    const BinaryDataset d(oracle::random_binary(uniform_int(1, 40), static_cast<int>(p), gen));
    const double el = exact_log_likelihood(d, ThetaMatrix(t));
    const double pl = pseudo_log_likelihood(d, ThetaMatrix(t));
    EXPECT_LE(el, 0.0);
    EXPECT_LE(pl, 0.0);
    EXPECT_NEAR(el, oracle::log_likelihood(d.data(), t), 1e-9 * std::max(1.0, std::abs(el)));
    EXPECT_NEAR(pl, oracle::pseudo_log_likelihood(d.data(), t), 1e-9 * std::max(1.0, std::abs(pl)));
}

TEST_P(ExactLaw, SpinAndZeroOneCodingsDescribeTheSameLaw)
{
    const Index p = uniform_int(2, 6);
    const ThetaMatrix spin(oracle::random_theta(static_cast<int>(p), gen, 0.8));
    const ThetaMatrix zo = spin_to_zero_one(spin);
    // spin law by direct enumeration over z = 2x - 1
    std::vector<double> w;
    for (std::uint64_t s = 0; s < (1ULL << p); ++s) {
        double e = 0.0;
        for (Index k = 0; k < p; ++k) {
            const double zk = ((s >> k) & 1u) ? 1.0 : -1.0;
            e += spin(k, k) * zk;
            for (Index l = k + 1; l < p; ++l)
                e += spin(k, l) * zk * (((s >> l) & 1u) ? 1.0 : -1.0);
        }
        w.push_back(e);
    }
    const double a = log_sum_exp(w);
    for (std::uint64_t s = 0; s < (1ULL << p); ++s) {
        const auto x = bits(s, p);
        EXPECT_NEAR(probability(x, zo), std::exp(w[s] - a), 1e-12);
    }
    const Index k = 0, l = 1;
    EXPECT_NEAR(conditional_odds_ratio(spin, k, l, Coding::SPIN), conditional_odds_ratio(zo, k, l, Coding::ZERO_ONE),
                1e-9 * conditional_odds_ratio(zo, k, l, Coding::ZERO_ONE));
}

INSTANTIATE_TEST_SUITE_P(Random, ExactLaw, ::testing::Range(0, 25));

// ---------------------------------------------------------------- solvers

using Solvers = Seeded;

TEST_P(Solvers, GlassoBoxInverseAndPins)
{
    const int p = uniform_int(2, 9);
    const Matrix s = oracle::random_spd(p, gen);
    double mx = 0.0;
    for (int k = 0; k < p; ++k)
        for (int l = k + 1; l < p; ++l)
            mx = std::max(mx, std::abs(s(k, l)));
    Matrix pen = Matrix::Constant(p, p, uniform(0.0, 1.0) * mx);
    const EdgeSet pinned = random_edges(p, 0.25);
    for (const auto& [k, l] : pinned)
        pen(k, l) = pen(l, k) = kInf;
    const PenaltySpec spec = PenaltySpec::matrix(pen);
    const GlassoResult r = glasso(s, spec);
    EXPECT_LT(glasso_kkt_residual(s, spec, r.w, r.m), 1e-6);
    EXPECT_LT((r.m * r.w - Matrix::Identity(p, p)).cwiseAbs().maxCoeff(), 1e-6);
    for (int k = 0; k < p; ++k)
        for (int l = k + 1; l < p; ++l) {
            EXPECT_EQ(r.m(k, l), r.m(l, k));
            if (std::isfinite(pen(k, l))) {
                EXPECT_LE(std::abs(r.w(k, l) - s(k, l)), pen(k, l) + 1e-8);
            }
        }
    for (const auto& [k, l] : pinned) {
        EXPECT_EQ(r.m(k, l), 0.0);
        EXPECT_FALSE(std::signbit(r.m(k, l)) && r.m(k, l) != 0.0);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(r.m);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST_P(Solvers, GlassoWarmStartAgreesWithCold)
{
    const int p = uniform_int(3, 9);
    const Matrix s = oracle::random_spd(p, gen);
    const double lam_a = uniform(0.05, 0.3), lam_b = lam_a * uniform(0.3, 0.9);
    const auto a = glasso(s, PenaltySpec::scalar(lam_a));
    const auto cold = glasso(s, PenaltySpec::scalar(lam_b));
    const auto warm = glasso(s, PenaltySpec::scalar(lam_b), a.w);
    EXPECT_LT((cold.m - warm.m).cwiseAbs().maxCoeff(), 1e-5);
}

TEST_P(Solvers, LogisticKkt)
{
    const int n = uniform_int(40, 200), q = uniform_int(1, 8);
    const Matrix x = oracle::random_binary(n, q, gen, uniform(0.2, 0.8));
    Vector y(n);
    std::bernoulli_distribution b(uniform(0.2, 0.8));
    for (int i = 0; i < n; ++i)
        y(i) = (x(i, 0) == 1.0 && b(gen)) || b(gen) ? 1.0 : 0.0;
    if (y.sum() == 0.0 || y.sum() == n)
        y(0) = 1.0 - y(0);
    const double lam = logistic_lambda_max(x, y) * uniform(0.05, 1.2);
    const auto fit = l1_logistic(x, y, lam);
    if (!fit.separation) {
        EXPECT_LT(logistic_kkt_residual(x, y, lam, fit), 1e-6);
    }
    if (lam >= logistic_lambda_max(x, y)) {
        EXPECT_EQ(fit.beta.cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST_P(Solvers, PseudoLikelihoodKktAndPins)
{
    const Index p = uniform_int(2, 7);
    const ThetaMatrix t = sparse_theta(p);
    const BinaryDataset d = sample_exact(t, uniform_int(200, 600), static_cast<std::uint64_t>(GetParam()));
    for (Index k = 0; k < p; ++k)
        if (d.data().col(k).sum() == 0.0 || d.data().col(k).sum() == static_cast<double>(d.n()))
            GTEST_SKIP() << "degenerate draw";
    Matrix pen = Matrix::Constant(p, p, pseudo_likelihood_lambda_max(d) * uniform(0.05, 0.9));
    const EdgeSet pinned = random_edges(p, 0.3);
    for (const auto& [k, l] : pinned)
        pen(k, l) = pen(l, k) = kInf;
    const PenaltySpec spec = PenaltySpec::matrix(pen);
    const auto fit = pseudo_likelihood_fit(d, spec);
    if (!fit.separation) {
        EXPECT_LT(pseudo_likelihood_kkt_residual(d, spec, fit.theta), 1e-6);
    }
    for (const auto& [k, l] : pinned)
        EXPECT_EQ(fit.theta(k, l), 0.0);
    EXPECT_EQ(fit.theta.values(), fit.theta.values().transpose());
}

INSTANTIATE_TEST_SUITE_P(Random, Solvers, ::testing::Range(0, 20));

// ---------------------------------------------------------------- methods and selection

using Paths = Seeded;

TEST_P(Paths, AndInsideOrAndGaussSymmetric)
{
    const Index p = uniform_int(3, 8);
    const BinaryDataset d = sample_exact(sparse_theta(p), uniform_int(150, 400), static_cast<std::uint64_t>(GetParam()));
    for (Index k = 0; k < p; ++k)
        if (d.data().col(k).sum() == 0.0 || d.data().col(k).sum() == static_cast<double>(d.n()))
            GTEST_SKIP() << "degenerate draw";
    PathOptions opt;
    opt.grid_count = 12;
    const auto paths = fit_paths(d, {MethodId::SEPLOGIT_AND, MethodId::SEPLOGIT_OR, MethodId::GAUSS_COV}, opt).paths;
    const auto& a = paths.at(MethodId::SEPLOGIT_AND);
    const auto& o = paths.at(MethodId::SEPLOGIT_OR);
    ASSERT_EQ(a.size(), o.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (const auto& [k, l] : a[i].edges)
            EXPECT_TRUE(o[i].edges.contains(k, l)) << "point " << i;
    for (const auto& g : paths.at(MethodId::GAUSS_COV)) {
        const Matrix& t = g.theta_shrunk->values();
        EXPECT_EQ(t, t.transpose());
    }
    EXPECT_TRUE(a.front().edges.empty());
    EXPECT_TRUE(paths.at(MethodId::GAUSS_COV).front().edges.empty());
}

TEST_P(Paths, RefitKeepsZerosAndImprovesFit)
{
    const Index p = uniform_int(3, 7);
    const BinaryDataset d = sample_exact(sparse_theta(p), 500, static_cast<std::uint64_t>(GetParam()));
    for (Index k = 0; k < p; ++k)
        if (d.data().col(k).sum() < 5.0 || d.data().col(k).sum() > static_cast<double>(d.n()) - 5.0)
            GTEST_SKIP() << "near-degenerate draw";
    for (MethodId m : {MethodId::GAUSS_COR, MethodId::BMN_PSEUDO}) {
        const LambdaGrid grid = make_grid(lambda_max(d, m), 6, 20.0);
        const auto path = fit_path(d, m, grid);
        const auto& est = path[static_cast<std::size_t>(uniform_int(1, 5))];
        const Refit r = refit_pattern(d, m, est.edges, &est);
        for (Index k = 0; k < p; ++k)
            for (Index l = 0; l < p; ++l)
                if (k != l && !est.edges.contains(k, l)) {
                    EXPECT_EQ(r.theta(k, l), 0.0);
                }
        if (m == MethodId::BMN_PSEUDO) {
            EXPECT_GE(pseudo_log_likelihood(d, r.theta), pseudo_log_likelihood(d, *est.theta_shrunk) - 1e-8);
        } else {
            const auto s = gaussian_surrogate(d, SurrogateKind::COR);
            EXPECT_GE(gaussian_log_likelihood(*r.precision, s.values),
                      gaussian_log_likelihood(*est.precision, s.values) - 1e-8);
        }
    }
}

TEST_P(Paths, BicScoresDecomposeAndMaximumIsChosen)
{
    const Index p = uniform_int(3, 7);
    const BinaryDataset d = sample_exact(sparse_theta(p), 400, static_cast<std::uint64_t>(GetParam()));
    for (Index k = 0; k < p; ++k)
        if (d.data().col(k).sum() == 0.0 || d.data().col(k).sum() == static_cast<double>(d.n()))
            GTEST_SKIP() << "degenerate draw";
    const MethodId m = GetParam() % 2 ? MethodId::GAUSS_COV : MethodId::SEPLOGIT_OR;
    const auto path = fit_path(d, m, make_grid(lambda_max(d, m), 10, 100.0));
    const auto sel = bic_select(d, path, m);
    ASSERT_EQ(sel.scores.size(), sel.scored_index.size());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < sel.scores.size(); ++j) {
        const auto& s = sel.scores[j];
        EXPECT_EQ(s.score, s.loglik_term - static_cast<double>(s.df) * std::log(static_cast<double>(d.n())));
        EXPECT_EQ(s.df, bic_df(path[sel.scored_index[j]].edges));
        best = std::max(best, s.score);
    }
    const auto it = std::find(sel.scored_index.begin(), sel.scored_index.end(), sel.index);
    ASSERT_NE(it, sel.scored_index.end());
    EXPECT_EQ(sel.scores[static_cast<std::size_t>(it - sel.scored_index.begin())].score, best);
    EXPECT_EQ(bic_df(EdgeSet(p)), static_cast<std::size_t>(p));
    EXPECT_EQ(bic_df(EdgeSet::complete(p)), static_cast<std::size_t>(p * (p + 1) / 2));
}

TEST_P(Paths, GridIsStrictlyDescendingWithExactEndpoints)
{
    const double mx = uniform(1e-3, 10.0), ratio = uniform(1.5, 1e4);
    const int count = uniform_int(2, 80);
    const LambdaGrid g = make_grid(mx, count, ratio);
    ASSERT_EQ(g.size(), static_cast<std::size_t>(count));
    EXPECT_EQ(g.values.front(), mx);
    EXPECT_EQ(g.values.back(), mx / ratio);
    for (std::size_t i = 1; i < g.size(); ++i)
        EXPECT_LT(g.values[i], g.values[i - 1]);
}

INSTANTIATE_TEST_SUITE_P(Random, Paths, ::testing::Range(0, 10));

// ---------------------------------------------------------------- metrics and io

using Records = Seeded;

TEST_P(Records, ConfusionPartitionsPairs)
{
    const Index p = uniform_int(2, 30);
    const EdgeSet a = random_edges(p, uniform(0.0, 1.0)), t = random_edges(p, uniform(0.0, 1.0));
    const auto c = confusion(a, t);
    const auto pairs = static_cast<std::size_t>(p * (p - 1) / 2);
    EXPECT_EQ(c.tp + c.fp, c.pos);
    EXPECT_EQ(c.tp + c.fp + c.fn + c.tn, pairs);
    for (double v : {c.tpr, c.fpr, c.precision, c.accuracy, c.f1}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    if (c.precision + c.tpr > 0.0)
        EXPECT_NEAR(c.f1, 2.0 * c.precision * c.tpr / (c.precision + c.tpr), 1e-12);
    else
        EXPECT_EQ(c.f1, 0.0);
}

TEST_P(Records, AgreementBoundsAndSymmetry)
{
    const Index p = uniform_int(2, 25);
    const EdgeSet a = random_edges(p, uniform(0.0, 0.6));
    const EdgeSet b = GetParam() % 3 == 0 ? a : random_edges(p, uniform(0.0, 0.6));
    const auto ab = agreement(a, b), ba = agreement(b, a);
    EXPECT_EQ(ab.kappa, ba.kappa);
    EXPECT_EQ(ab.kappa_bar, ba.kappa_bar);
    EXPECT_GE(ab.kappa, 0.0);
    EXPECT_LE(ab.kappa, 1.0);
    const std::size_t common = intersection(a, b).size();
    EXPECT_EQ(ab.kappa_bar, a.size() + b.size() - 2 * common);
    if (!a.empty() && !b.empty()) {
        EXPECT_EQ(ab.kappa == 1.0 && ab.kappa_bar == 0, a == b);
    }
}

TEST_P(Records, MseNonNegativeAndZeroAtTruth)
{
    const Index p = uniform_int(2, 10);
    Matrix t = oracle::random_theta(static_cast<int>(p), gen, 1.0);
    t(0, 1) = t(1, 0) = 0.7;
    const ThetaMatrix truth(t);
    EXPECT_EQ(odds_ratio_mse(truth, truth), 0.0);
    const ThetaMatrix other(oracle::random_theta(static_cast<int>(p), gen, 1.0));
    EXPECT_GE(odds_ratio_mse(other, truth), 0.0);
}

TEST_P(Records, EdgeListRoundTrip)
{
    const Index p = uniform_int(2, 20);
    std::vector<std::string> names;
    for (Index k = 0; k < p; ++k)
        names.push_back("v" + std::to_string(k));
    const EdgeSet e = random_edges(p, uniform(0.0, 0.7));
    const ThetaMatrix t(oracle::random_theta(static_cast<int>(p), gen, 3.0));
    std::ostringstream out;
    write_edge_list(out, e, names, t);
    std::istringstream in(out.str());
    const auto recs = read_edge_list(in);
    EXPECT_EQ(to_edge_set(recs, names), e);
    for (const auto& r : recs) {
        const auto k = std::find(names.begin(), names.end(), r.a) - names.begin();
        const auto l = std::find(names.begin(), names.end(), r.b) - names.begin();
        EXPECT_EQ(r.theta, t(k, l));
    }
}

TEST_P(Records, DatasetRoundTrip)
{
    const BinaryDataset d(oracle::random_binary(uniform_int(1, 80), uniform_int(1, 15), gen, uniform(0.05, 0.95)));
    std::ostringstream out;
    write_binary_csv(out, d);
    std::istringstream in(out.str());
    const auto back = ingest_csv(in).data;
    EXPECT_EQ(back.data(), d.data());
    EXPECT_EQ(back.names(), d.names());
}

TEST_P(Records, FormatDoubleRoundTrips)
{
    for (int i = 0; i < 50; ++i) {
        const double v = uniform(-1.0, 1.0) * std::pow(10.0, uniform_int(-30, 30));
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
}

INSTANTIATE_TEST_SUITE_P(Random, Records, ::testing::Range(0, 30));

// ---------------------------------------------------------------- data generation

using Designs = Seeded;

TEST_P(Designs, BuildIsPureAndSamplesAreSeedDeterministic)
{
    const DesignId ids[] = {DesignId::T1, DesignId::T2, DesignId::T3, DesignId::T4, DesignId::T5};
    const DesignId id = ids[GetParam() % 5];
    const auto seed = static_cast<std::uint64_t>(uniform_int(0, 1 << 20));
    const DesignSpec spec = DesignSpec::make(id, 1, seed);
    const BuiltDesign a = build_theta(spec), b = build_theta(spec);
    EXPECT_EQ(a.native.values(), b.native.values());
    EXPECT_EQ(a.theta.values(), b.theta.values());
    EXPECT_EQ(a.truth, b.truth);
    EXPECT_EQ(EdgeSet::from_support(a.theta.values()), a.truth);
    const BinaryDataset x = sample_design(a, 50, seed), y = sample_design(a, 50, seed);
    EXPECT_EQ(x.data(), y.data());
    const int copies = uniform_int(2, 4);
    const BuiltDesign blk = build_theta(DesignSpec::make(id, copies, seed));
    EXPECT_EQ(blk.theta.p(), a.theta.p() * copies);
    EXPECT_EQ(blk.truth.size(), static_cast<std::size_t>(copies) * a.truth.size());
    for (const auto& [k, l] : blk.truth)
        EXPECT_EQ(k / a.theta.p(), l / a.theta.p());
}

INSTANTIATE_TEST_SUITE_P(Random, Designs, ::testing::Range(0, 10));
