#include <doctest.h>

#include <cmath>
#include <vector>

#include "afflab/equilibrium.hpp"
#include "afflab/harness.hpp"
#include "afflab/random.hpp"
#include "support/oracles.hpp"

using afflab::CylinderMeasure;
using afflab::MatrixTuple;
using afflab::SquareMatrix;

namespace {

MatrixTuple conformal_tuple(int d, int n_maps, double lambda) {
    std::vector<SquareMatrix> maps(n_maps, afflab::scaled(SquareMatrix::identity(d), lambda));
    return MatrixTuple::create(std::move(maps));
}

const std::vector<std::vector<double>> kDiagTriple = {{0.4, 0.2}, {0.3, 0.1}, {0.25, 0.15}};

MatrixTuple diagonal_tuple(const std::vector<std::vector<double>>& diags) {
    std::vector<SquareMatrix> maps;
    for (const auto& d : diags)
        maps.push_back(SquareMatrix::diagonal(std::span<const double>(d.data(), d.size())));
    return MatrixTuple::create(std::move(maps));
}

}  // namespace

TEST_SUITE("equilibrium") {

TEST_CASE("conformal tuple at depth 1 has uniform weights") {
    const MatrixTuple t = conformal_tuple(2, 3, 0.3);
    const CylinderMeasure m = afflab::gibbs_approximation(t, 1.2, 1);
    REQUIRE(m.size() == 3);
    for (double w : m.weights) CHECK(w == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("s = 0 gives the uniform measure at any depth") {
    const MatrixTuple t = diagonal_tuple(kDiagTriple);
    const CylinderMeasure m = afflab::gibbs_approximation(t, 0.0, 4);
    REQUIRE(m.size() == 81);
    for (double w : m.weights) CHECK(w == doctest::Approx(1.0 / 81.0).epsilon(1e-13));
    CHECK(afflab::entropy_estimate(m) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(afflab::lyapunov_estimate(t, 0.0, m) == 0.0);
}

TEST_CASE("weights are normalized and strictly positive") {
    const MatrixTuple t = diagonal_tuple(kDiagTriple);
    for (int depth : {1, 3, 5}) {
        const CylinderMeasure m = afflab::gibbs_approximation(t, 0.9, depth);
        double sum = 0.0;
        for (double w : m.weights) {
            CHECK(w > 0.0);
            sum += w;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        const auto marg = afflab::cylinder_marginals(m);
        for (const auto& level : marg)
            for (double w : level) CHECK(w > 0.0);
    }
}

TEST_CASE("order-aligned diagonal tuple: Bernoulli product weights cylinder-by-cylinder") {
    const MatrixTuple t = diagonal_tuple(kDiagTriple);
    const double s = 0.95;
    std::vector<double> p;
    double z = 0.0;
    for (const auto& diag : kDiagTriple) {
        p.push_back(oracles::svf_diagonal(diag, s));
        z += p.back();
    }
    for (double& x : p) x /= z;
    const int depth = 4;
    const CylinderMeasure m = afflab::gibbs_approximation(t, s, depth);
    std::size_t idx = 0;
    std::vector<int> word(depth, 0);
    for (;;) {
        double expected = 1.0;
        for (int letter : word) expected *= p[letter];
        CHECK(m.weights[idx] == doctest::Approx(expected).epsilon(1e-9));
        ++idx;
        int pos = depth - 1;
        while (pos >= 0 && word[pos] == 2) word[pos--] = 0;
        if (pos < 0) break;
        ++word[pos];
    }
}

TEST_CASE("entropy: uniform is log N, point-mass-like is near zero, Bernoulli closed form") {
    // Bernoulli closed form through a 1x1 diagonal pair (weights p, 1-p at depth n).
    std::vector<SquareMatrix> maps = {SquareMatrix(1, {0.5}), SquareMatrix(1, {0.1})};
    const MatrixTuple t = MatrixTuple::create(std::move(maps));
    const double s = 1.0;
    const double phi1 = 0.5, phi2 = 0.1;
    const double p = phi1 / (phi1 + phi2);
    const double expected = -p * std::log(p) - (1 - p) * std::log(1 - p);
    for (int depth : {2, 5}) {
        const CylinderMeasure m = afflab::gibbs_approximation(t, s, depth);
        CHECK(afflab::entropy_estimate(m) == doctest::Approx(expected).epsilon(1e-12));
    }
    // entropy range on a generic tuple
    const MatrixTuple g = afflab::sample_tuple(2, 3, 0.5, 99);
    const CylinderMeasure m = afflab::gibbs_approximation(g, 1.1, 5);
    const double h = afflab::entropy_estimate(m);
    CHECK(h >= 0.0);
    CHECK(h <= std::log(3.0) + 1e-12);
}

TEST_CASE("entropy of a point mass is zero (0 log 0 convention)") {
    afflab::CylinderMeasure m;
    m.depth = 3;
    m.alphabet = 2;
    m.s = afflab::SvfExponent::make(1.0, 2);
    m.log_z = 0.0;
    m.weights.assign(8, 0.0);
    m.log_phi.assign(8, -std::numeric_limits<double>::infinity());
    m.weights[5] = 1.0;
    m.log_phi[5] = 0.0;
    CHECK(afflab::entropy_estimate(m) == 0.0);
}

TEST_CASE("lyapunov estimate on conformal and diagonal tuples") {
    const double lambda = 0.3;
    const MatrixTuple t = conformal_tuple(2, 2, lambda);
    for (double s : {0.5, 1.5}) {
        for (int depth : {2, 4}) {
            const CylinderMeasure m = afflab::gibbs_approximation(t, s, depth);
            CHECK(afflab::lyapunov_estimate(t, s, m) ==
                  doctest::Approx(s * std::log(lambda)).epsilon(1e-12));
        }
    }
    // order-aligned diagonal: sum_i p_i log phi^s(A_i)
    const MatrixTuple dt = diagonal_tuple(kDiagTriple);
    const double s = 0.8;
    std::vector<double> phis;
    double z = 0.0;
    for (const auto& diag : kDiagTriple) {
        phis.push_back(oracles::svf_diagonal(diag, s));
        z += phis.back();
    }
    double expected = 0.0;
    for (double phi : phis) expected += (phi / z) * std::log(phi);
    const CylinderMeasure m = afflab::gibbs_approximation(dt, s, 4);
    CHECK(afflab::lyapunov_estimate(dt, s, m) == doctest::Approx(expected).epsilon(1e-11));
    CHECK_THROWS_AS(afflab::lyapunov_estimate(dt, 0.7, m), afflab::InputError);
}

TEST_CASE("variational identity: entropy + lyapunov equals a_n/n exactly") {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
        const MatrixTuple t = afflab::sample_tuple(2, 2, 0.5, seed);
        for (int depth : {4, 8}) {
            const CylinderMeasure m = afflab::gibbs_approximation(t, 1.3, depth);
            const double h = afflab::entropy_estimate(m);
            const double l = afflab::lyapunov_estimate(t, 1.3, m);
            const afflab::PressureEstimate est = afflab::pressure_estimate(t, 1.3, depth);
            CHECK(h + l == doctest::Approx(est.samples.back().value).epsilon(1e-10));
        }
    }
}

TEST_CASE("variational slack: zero on conformal tuples, contracting on random ones") {
    const MatrixTuple t = conformal_tuple(2, 2, 1.0 / 3.0);
    const afflab::VariationalDiagnostics diag = afflab::variational_check(t, 0.8, 4);
    CHECK(std::abs(diag.slack) <= 1e-10);
    CHECK(diag.gibbs_constant == doctest::Approx(1.0).epsilon(1e-9));

    const afflab::VariationalDiagnostics zero = afflab::variational_check(t, 0.0, 3);
    CHECK(std::abs(zero.slack) <= 1e-12);
    CHECK(zero.entropy == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(zero.lyapunov == 0.0);

    // |slack| nonincreasing from depth 4 to 8 (dyadic subadditivity)
    const MatrixTuple g = afflab::sample_tuple(2, 2, 0.5, 31);
    afflab::VariationalOptions opts;
    opts.pressure_n_max = 8;
    const double slack4 = afflab::variational_check(g, 1.1, 4, opts).slack;
    const double slack8 = afflab::variational_check(g, 1.1, 8, opts).slack;
    CHECK(slack4 <= slack8 + 1e-6);
}

TEST_CASE("slack is never positive: the estimate respects its upper bound") {
    // h_n + lambda_n = a_n/n dominates the extrapolated pressure, which is
    // clamped under the dyadic minimum.
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const MatrixTuple t = afflab::sample_tuple(2, 2, 0.5, seed);
        for (double s : {0.3, 1.2, 1.8}) {
            for (int depth : {4, 8}) {
                const afflab::VariationalDiagnostics d = afflab::variational_check(t, s, depth);
                CHECK(d.slack <= 1e-12);
            }
        }
    }
}

TEST_CASE("gibbs ratio diagnostic is 1 on conformal and order-aligned diagonal tuples") {
    const MatrixTuple c = conformal_tuple(2, 3, 0.25);
    const afflab::PressureEstimate pc = afflab::pressure_estimate(c, 1.4, 8);
    CHECK(afflab::gibbs_ratio_diagnostic(c, 1.4, 6, pc.value) ==
          doctest::Approx(1.0).epsilon(1e-9));

    const MatrixTuple dt = diagonal_tuple(kDiagTriple);
    const afflab::PressureEstimate pd = afflab::pressure_estimate(dt, 0.95, 8);
    CHECK(afflab::gibbs_ratio_diagnostic(dt, 0.95, 6, pd.value) ==
          doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("gibbs ratio stays bounded and trends down for a generic tuple") {
    const MatrixTuple t = afflab::sample_tuple(2, 2, 0.5, 7);
    const afflab::PressureEstimate est = afflab::pressure_estimate(t, 1.0, 8);
    const double c4 = afflab::gibbs_ratio_diagnostic(t, 1.0, 4, est.value);
    const double c10 = afflab::gibbs_ratio_diagnostic(t, 1.0, 10, est.value);
    CHECK(c4 >= 1.0);
    CHECK(c10 >= 1.0);
    CHECK(std::isfinite(c4));
    CHECK(std::isfinite(c10));
    CHECK(c10 <= c4 * 2.0);  // no blow-up as the depth grows
}

TEST_CASE("sigma-invariance gaps are reported and shrink for diagonal tuples") {
    const MatrixTuple t = diagonal_tuple(kDiagTriple);
    const CylinderMeasure m = afflab::gibbs_approximation(t, 0.95, 6);
    const std::vector<double> gaps = afflab::sigma_invariance_gaps(m);
    REQUIRE(gaps.size() == 6);
    for (double g : gaps) {
        CHECK(g >= 0.0);
        CHECK(std::isfinite(g));
    }
    // product measures are exactly invariant at every marginal level
    for (double g : gaps) CHECK(g <= 1e-12);
}

TEST_CASE("resource guards") {
    const MatrixTuple t = conformal_tuple(2, 3, 0.3);
    afflab::GibbsOptions opts;
    opts.word_budget = 50;
    CHECK_THROWS_AS(afflab::gibbs_approximation(t, 1.0, 8, opts), afflab::ResourceError);
    CHECK_THROWS_AS(afflab::gibbs_approximation(t, 1.0, 0), afflab::InputError);
}

}  // TEST_SUITE
