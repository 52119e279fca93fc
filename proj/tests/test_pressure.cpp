#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "afflab/pressure.hpp"
#include "afflab/random.hpp"
#include "support/oracles.hpp"

using afflab::MatrixTuple;
using afflab::PressureEstimate;
using afflab::SquareMatrix;

namespace {

MatrixTuple conformal_tuple(int d, int n_maps, double lambda) {
    std::vector<SquareMatrix> maps(n_maps, afflab::scaled(SquareMatrix::identity(d), lambda));
    return MatrixTuple::create(std::move(maps));
}

/// Order-aligned diagonal triple used throughout: every diagonal sorted
/// descending, so singular values multiply position-by-position along words.
const std::vector<std::vector<double>> kDiagTriple = {{0.4, 0.2}, {0.3, 0.1}, {0.25, 0.15}};

MatrixTuple diagonal_tuple(const std::vector<std::vector<double>>& diags) {
    std::vector<SquareMatrix> maps;
    for (const auto& d : diags)
        maps.push_back(SquareMatrix::diagonal(std::span<const double>(d.data(), d.size())));
    return MatrixTuple::create(std::move(maps));
}

MatrixTuple random_contracting_tuple(std::uint64_t seed, int d, int n_maps, double cap) {
    afflab::SeededRng rng(seed);
    std::vector<SquareMatrix> maps;
    for (int i = 0; i < n_maps; ++i) {
        SquareMatrix m = oracles::random_invertible(rng, d);
        maps.push_back(afflab::scaled(m, cap * (0.5 + 0.4 * rng.uniform01()) /
                                             afflab::operator_norm(m)));
    }
    return MatrixTuple::create(std::move(maps));
}

}  // namespace

TEST_SUITE("pressure") {

TEST_CASE("svf on a diagonal matrix follows the definition") {
    const double diag[] = {0.5, 0.2};
    const SquareMatrix a = SquareMatrix::diagonal(diag);
    CHECK(afflab::svf(a, 1.5) == doctest::Approx(0.5 * std::sqrt(0.2)).epsilon(1e-12));
    CHECK(afflab::svf(a, 0.0) == 1.0);  // phi^0 is exactly one
    CHECK(afflab::svf(a, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(afflab::svf(a, 2.0) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("svf above the ambient dimension uses |det|^{s/d}") {
    afflab::SeededRng rng(2024);
    for (int d = 2; d <= 4; ++d) {
        const SquareMatrix a = oracles::random_invertible(rng, d);
        const double det = oracles::determinant_laplace(a);
        const double s = d + 1.0;
        CHECK(afflab::log_svf(a, s) ==
              doctest::Approx((s / d) * std::log(std::abs(det))).epsilon(1e-9));
    }
}

TEST_CASE("svf rejects singular matrices and negative exponents") {
    SquareMatrix singular(2, {1, 2, 2, 4});
    CHECK_THROWS_AS(afflab::svf(singular, 1.0), afflab::InputError);
    CHECK_THROWS_AS(afflab::svf(SquareMatrix::identity(2), -0.5), afflab::InputError);
}

TEST_CASE("submultiplicativity of svf over random pairs and exponents") {
    afflab::SeededRng rng(99);
    for (int rep = 0; rep < 200; ++rep) {
        const int d = 2 + static_cast<int>(rng.uniform01() * 3.0);  // 2..4
        const SquareMatrix a = oracles::random_invertible(rng, d);
        const SquareMatrix b = oracles::random_invertible(rng, d);
        const double s = rng.uniform(0.1, static_cast<double>(d));
        CHECK(afflab::log_svf(a * b, s) <=
              afflab::log_svf(a, s) + afflab::log_svf(b, s) + 1e-9);
    }
}

TEST_CASE("pressure at s = 0 is log N at every depth") {
    const MatrixTuple t = random_contracting_tuple(7, 2, 3, 0.5);
    const PressureEstimate est = afflab::pressure_estimate(t, 0.0, 8);
    for (const afflab::PressureSample& s : est.samples)
        CHECK(s.value == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(est.value == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(est.uncertainty <= 1e-12);
}

TEST_CASE("conformal tuple: every sample equals log N + s log lambda") {
    const double lambda = 1.0 / 3.0;
    const MatrixTuple t = conformal_tuple(2, 2, lambda);
    for (double s : {0.25, 0.5, 1.0, 1.7}) {
        const PressureEstimate est = afflab::pressure_estimate(t, s, 8);
        const double expected = std::log(2.0) + s * std::log(lambda);
        for (const afflab::PressureSample& sample : est.samples)
            CHECK(sample.value == doctest::Approx(expected).epsilon(1e-10));
        CHECK(est.value == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("order-aligned diagonal oracle validated by brute force, then matched") {
    const MatrixTuple t = diagonal_tuple(kDiagTriple);
    for (double s : {0.3, 0.95, 1.4}) {
        // closed form P = log sum_i phi^s(A_i), phi from sorted |diagonals|
        double sum = 0.0;
        for (const auto& diag : kDiagTriple) sum += oracles::svf_diagonal(diag, s);
        const double closed_form = std::log(sum);

        // validate the closed form against brute force over Sigma_8 first
        const double brute = oracles::brute_force_log_sum(
            t, 8, [&](const SquareMatrix& p) { return afflab::log_svf(p, s); });
        CHECK(brute / 8.0 == doctest::Approx(closed_form).epsilon(1e-10));

        const PressureEstimate est = afflab::pressure_estimate(t, s, 8);
        CHECK(est.value == doctest::Approx(closed_form).epsilon(1e-8));
        for (const afflab::PressureSample& sample : est.samples)
            CHECK(sample.value == doctest::Approx(closed_form).epsilon(1e-10));
    }
}

TEST_CASE("norm pressure equals svf pressure sample-by-sample on [0,1]") {
    const MatrixTuple t = random_contracting_tuple(12, 2, 2, 0.5);
    for (double s : {0.0, 0.3, 0.7, 1.0}) {
        const PressureEstimate svf_est = afflab::pressure_estimate(t, s, 8);
        const PressureEstimate norm_est = afflab::norm_pressure_estimate(t, s, 8);
        REQUIRE(svf_est.samples.size() == norm_est.samples.size());
        for (std::size_t i = 0; i < svf_est.samples.size(); ++i)
            CHECK(svf_est.samples[i].log_sum == norm_est.samples[i].log_sum);
    }
}

TEST_CASE("norm pressure on a conformal tuple") {
    const MatrixTuple t = conformal_tuple(2, 3, 0.4);
    const PressureEstimate est = afflab::norm_pressure_estimate(t, 1.3, 8);
    const double expected = std::log(3.0) + 1.3 * std::log(0.4);
    for (const afflab::PressureSample& s : est.samples)
        CHECK(s.value == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("samples are subadditive") {
    const MatrixTuple t = random_contracting_tuple(21, 2, 2, 0.5);
    for (double s : {0.4, 1.2}) {
        const PressureEstimate est = afflab::pressure_estimate(t, s, 8);
        CHECK(afflab::subadditive_samples(est));
        CHECK(est.upper_bound >= est.value - est.uncertainty - 1e-12);
    }
}

TEST_CASE("pressure value is strictly decreasing and convex between integers") {
    const MatrixTuple t = random_contracting_tuple(33, 2, 2, 0.5);
    std::vector<double> grid;
    for (double s = 0.0; s <= 2.0001; s += 0.25) grid.push_back(s);
    std::vector<double> values;
    for (double s : grid) values.push_back(afflab::pressure_estimate(t, s, 8).value);
    for (std::size_t i = 0; i + 1 < values.size(); ++i) CHECK(values[i] > values[i + 1]);
    // convexity of the deepest samples inside [1, 2] (one grade throughout)
    const MatrixTuple t2 = random_contracting_tuple(34, 2, 2, 0.5);
    std::vector<double> inner;
    for (double s = 1.0; s <= 2.0001; s += 0.125) {
        const PressureEstimate est = afflab::pressure_estimate(t2, s, 8);
        inner.push_back(est.samples.back().value);
    }
    for (std::size_t i = 0; i + 2 < inner.size(); ++i)
        CHECK(inner[i + 2] - 2.0 * inner[i + 1] + inner[i] >= -1e-6);
}

TEST_CASE("affinity dimension of the conformal pair is log 2 / log 3") {
    const double lambda = 1.0 / 3.0;
    const MatrixTuple t = conformal_tuple(2, 2, lambda);
    const afflab::AffinityDimensionResult res = afflab::affinity_dimension(t, 1e-7);
    const double expected = std::log(2.0) / std::log(3.0);
    CHECK(res.dimension == doctest::Approx(expected).epsilon(1e-6));
    CHECK(res.bracket_lo <= res.dimension);
    CHECK(res.dimension <= res.bracket_hi);
    CHECK(res.bracket_hi - res.bracket_lo <= 1e-7);
    // residual is bounded by the bracket width times the pressure slope
    CHECK(std::abs(res.pressure_at_dimension) <= 5e-7);

    // cross-check against an oracle bisection on brute-force pressure at n = 10
    auto brute_pressure = [&](double s) {
        const double sum = oracles::brute_force_log_sum(t, 10, [&](const SquareMatrix& p) {
            std::vector<double> abs_diag = {std::abs(p(0, 0)), std::abs(p(1, 1))};
            return std::log(oracles::svf_diagonal(abs_diag, s));
        });
        return sum / 10.0;
    };
    const double oracle_root = oracles::bisect_decreasing(brute_pressure, 0.0, 2.0, 1e-9);
    CHECK(res.dimension == doctest::Approx(oracle_root).epsilon(1e-6));
}

TEST_CASE("affinity dimension of the diagonal triple matches the scalar oracle") {
    const MatrixTuple t = diagonal_tuple(kDiagTriple);
    const afflab::AffinityDimensionResult res = afflab::affinity_dimension(t, 1e-6);
    const double expected = oracles::diagonal_dimension_root(kDiagTriple);
    CHECK(res.dimension == doctest::Approx(expected).epsilon(1e-5));
}

TEST_CASE("affinity dimension clamps at the ambient dimension") {
    // d = 1, three maps scaled 0.9: the pressure root log3/log(10/9) is far
    // above 1, so the dimension must clamp to d = 1.
    std::vector<SquareMatrix> maps(3, SquareMatrix(1, {0.9}));
    const MatrixTuple t = MatrixTuple::create(std::move(maps));
    const afflab::AffinityDimensionResult res = afflab::affinity_dimension(t, 1e-6);
    CHECK(res.dimension == doctest::Approx(1.0));
    CHECK(res.bracket_lo > 1.0);  // the pressure root itself lives above the clamp
}

TEST_CASE("affinity dimension preconditions") {
    std::vector<SquareMatrix> maps = {SquareMatrix(1, {1.2}), SquareMatrix(1, {0.5})};
    const MatrixTuple t = MatrixTuple::create(std::move(maps));
    CHECK_THROWS_AS(afflab::affinity_dimension(t, 1e-6), afflab::PreconditionError);
    const MatrixTuple ok = conformal_tuple(2, 2, 0.4);
    CHECK_THROWS_AS(afflab::affinity_dimension(ok, 0.0), afflab::InputError);
}

TEST_CASE("single-map tuples have dimension zero") {
    afflab::SeededRng rng(55);
    SquareMatrix m = oracles::random_invertible(rng, 2);
    m = afflab::scaled(m, 0.45 / afflab::operator_norm(m));
    const MatrixTuple t = MatrixTuple::create_reduced({m});
    const afflab::AffinityDimensionResult res = afflab::affinity_dimension(t, 1e-6);
    CHECK(res.dimension == 0.0);
    CHECK(res.pressure_at_dimension == 0.0);
}

TEST_CASE("rational lift: d=2 p=1 q=2 is the matrix itself") {
    afflab::SeededRng rng(66);
    const SquareMatrix a = oracles::random_invertible(rng, 2);
    const SquareMatrix lift = afflab::rational_tensor_lift(a, 1, 2);
    CHECK(afflab::frobenius_norm(lift - a) == 0.0);
    CHECK(std::pow(afflab::operator_norm(lift), 0.5) ==
          doctest::Approx(afflab::svf(a, 0.5)).epsilon(1e-12));
}

TEST_CASE("rational lift: d=2 p=3 q=2 gives A (x) [det A]") {
    afflab::SeededRng rng(67);
    const SquareMatrix a = oracles::random_invertible(rng, 2);
    const SquareMatrix lift = afflab::rational_tensor_lift(a, 3, 2);
    REQUIRE(lift.n == 2);
    const double det = afflab::determinant(a);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(lift(i, j) == doctest::Approx(a(i, j) * det).epsilon(1e-13));
    const auto alphas = afflab::singular_values(a);
    CHECK(std::pow(afflab::operator_norm(lift), 0.5) ==
          doctest::Approx(alphas[0] * std::sqrt(alphas[1])).epsilon(1e-11));
}

TEST_CASE("rational lift norm identity across all reduced p/q with q <= 4") {
    afflab::SeededRng rng(68);
    for (int d : {2, 3}) {
        for (int rep = 0; rep < 5; ++rep) {
            const SquareMatrix a = oracles::random_invertible(rng, d);
            for (long long q = 2; q <= 4; ++q) {
                for (long long p = 1; p < q * d; ++p) {
                    if (std::gcd(p, q) != 1) continue;
                    const SquareMatrix lift = afflab::rational_tensor_lift(a, p, q);
                    const double lhs = afflab::log_svf(a, static_cast<double>(p) / q);
                    const double rhs = std::log(afflab::operator_norm(lift)) / q;
                    CHECK(std::abs(lhs - rhs) <= 1e-9);
                }
            }
        }
    }
}

TEST_CASE("rational lift input validation") {
    const SquareMatrix a = SquareMatrix::identity(2);
    CHECK_THROWS_AS(afflab::rational_tensor_lift(a, 2, 1), afflab::InputError);  // integral
    CHECK_THROWS_AS(afflab::rational_tensor_lift(a, 4, 2), afflab::InputError);  // reduces to 2
    CHECK_THROWS_AS(afflab::rational_tensor_lift(a, 9, 2), afflab::InputError);  // >= d
    CHECK_THROWS_AS(afflab::rational_tensor_lift(a, 0, 2), afflab::InputError);
}

TEST_CASE("parallel fold matches sequential within tolerance") {
    const MatrixTuple t = random_contracting_tuple(81, 2, 3, 0.5);
    afflab::PressureOptions seq;
    afflab::PressureOptions par;
    par.threads = 3;
    const PressureEstimate a = afflab::pressure_estimate(t, 0.8, 8, seq);
    const PressureEstimate b = afflab::pressure_estimate(t, 0.8, 8, par);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        CHECK(a.samples[i].log_sum == doctest::Approx(b.samples[i].log_sum).epsilon(1e-12));
}

TEST_CASE("strong contractions stay exact in the log domain") {
    // phi^s(A_w) ~ 1e-64 at depth 16; the log-domain sums must not degrade.
    const MatrixTuple t = conformal_tuple(2, 2, 0.01);
    const PressureEstimate est = afflab::pressure_estimate(t, 2.0, 16);
    const double expected = std::log(2.0) + 2.0 * std::log(0.01);
    for (const afflab::PressureSample& s : est.samples)
        CHECK(s.value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("budget violations raise resource errors") {
    const MatrixTuple t = conformal_tuple(2, 3, 0.4);
    afflab::PressureOptions opts;
    opts.word_budget = 100;
    CHECK_THROWS_AS(afflab::pressure_estimate(t, 0.5, 8, opts), afflab::ResourceError);
}

}  // TEST_SUITE
