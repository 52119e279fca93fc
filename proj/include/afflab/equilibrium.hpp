#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "afflab/errors.hpp"
#include "afflab/pressure.hpp"
#include "afflab/symbolic.hpp"

namespace afflab {

/// Depth-n Gibbs approximation mu_n([w]) = phi^s(A_w) / Z_n over Sigma_n.
/// Weights are stored in lexicographic word order and sum to 1; the log
/// normalizer is kept so entropy works on exact log-weights.
struct CylinderMeasure {
    int depth = 0;
    int alphabet = 0;
    SvfExponent s;
    double log_z = 0.0;              // log sum phi^s(A_w)
    std::vector<double> weights;     // normalized, lexicographic order
    std::vector<double> log_phi;     // log phi^s(A_w), same order

    std::size_t size() const { return weights.size(); }
};

struct GibbsOptions {
    std::uint64_t word_budget = kDefaultWordBudget;
    std::uint64_t table_cap = 1u << 22;  // hard cap on materialized weights
};

inline CylinderMeasure gibbs_approximation(const MatrixTuple& t, double s, int depth,
                                           const GibbsOptions& opts = {}) {
    if (depth < 1) throw InputError("gibbs_approximation: depth must be >= 1");
    const std::uint64_t words =
        words_at_depth(t.count(), depth, std::min(opts.word_budget, opts.table_cap));

    CylinderMeasure m;
    m.depth = depth;
    m.alphabet = t.count();
    m.s = SvfExponent::make(s, t.dim);
    m.log_phi.reserve(words);

    detail::LogSumExp acc;
    std::vector<double> sv, pre;
    fold_words(
        t, depth,
        [&](std::span<const int>, const SquareMatrix& prod) {
            singular_values_into(prod, sv);
            detail::log_prefix_from_singular(sv, pre);
            const double lp = detail::log_svf_from_prefix(pre, m.s);
            m.log_phi.push_back(lp);
            acc.add(lp);
        },
        opts.word_budget);

    const double lse = acc.value();
    m.weights.resize(m.log_phi.size());
    double total = 0.0;
    for (std::size_t i = 0; i < m.log_phi.size(); ++i) {
        m.weights[i] = std::exp(m.log_phi[i] - lse);
        total += m.weights[i];
    }
    for (double& w : m.weights) w /= total;
    m.log_z = lse + std::log(total);
    return m;
}

/// (1/n) sum -mu([w]) log mu([w]), with the 0 log 0 = 0 convention. Uses the
/// exact log-weights log phi - log Z, which keeps the variational identity
/// h + lambda = a_n/n an algebraic one.
inline double entropy_estimate(const CylinderMeasure& m) {
    if (m.depth < 1) throw InputError("entropy_estimate: empty measure");
    double h = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m.weights[i] <= 0.0) continue;
        h -= m.weights[i] * (m.log_phi[i] - m.log_z);
    }
    return h / m.depth;
}

/// (1/n) sum mu([w]) log phi^s(A_w).
inline double lyapunov_estimate(const MatrixTuple& t, double s, const CylinderMeasure& m) {
    if (t.count() != m.alphabet)
        throw InputError("lyapunov_estimate: measure was built over a different tuple");
    if (s != m.s.s) throw InputError("lyapunov_estimate: exponent mismatch");
    double l = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) l += m.weights[i] * m.log_phi[i];
    return l / m.depth;
}

/// Marginals of the depth-n measure on Sigma_m for every m <= n.
/// marginals[m][j] is the weight of the j-th (lexicographic) word of length m.
inline std::vector<std::vector<double>> cylinder_marginals(const CylinderMeasure& m) {
    std::vector<std::vector<double>> levels(static_cast<std::size_t>(m.depth) + 1);
    levels[m.depth] = m.weights;
    for (int lvl = m.depth - 1; lvl >= 0; --lvl) {
        const std::vector<double>& fine = levels[lvl + 1];
        std::vector<double>& coarse = levels[lvl];
        coarse.assign(fine.size() / m.alphabet, 0.0);
        for (std::size_t j = 0; j < coarse.size(); ++j) {
            double s = 0.0;
            for (int i = 0; i < m.alphabet; ++i)
                s += fine[j * static_cast<std::size_t>(m.alphabet) + i];
            coarse[j] = s;
        }
    }
    return levels;
}

/// Per-level sigma-invariance defect max_w |mu_m([w]) - sum_i mu_{m+1}([iw])|
/// for m = 0..n-1. Invariance only holds in the depth limit; this is a
/// reported diagnostic, not an assertion.
inline std::vector<double> sigma_invariance_gaps(const CylinderMeasure& m) {
    const std::vector<std::vector<double>> marg = cylinder_marginals(m);
    std::vector<double> gaps;
    std::uint64_t level_size = 1;
    for (int lvl = 0; lvl < m.depth; ++lvl) {
        double worst = 0.0;
        for (std::uint64_t j = 0; j < level_size; ++j) {
            double pre = 0.0;
            for (int i = 0; i < m.alphabet; ++i)
                pre += marg[lvl + 1][static_cast<std::size_t>(i) * level_size + j];
            worst = std::max(worst, std::abs(marg[lvl][j] - pre));
        }
        gaps.push_back(worst);
        level_size *= static_cast<std::uint64_t>(m.alphabet);
    }
    return gaps;
}

/// Empirical Gibbs constant: max over words w of length m <= n of
/// max(r, 1/r) with r = mu-marginal([w]) e^{mP} / phi^s(A_w).
inline double gibbs_ratio_diagnostic(const MatrixTuple& t, double s, int depth, double pressure,
                                     const GibbsOptions& opts = {}) {
    const CylinderMeasure m = gibbs_approximation(t, s, depth, opts);
    const std::vector<std::vector<double>> marg = cylinder_marginals(m);

    // log phi^s per node of the prefix tree, per level.
    std::vector<std::vector<double>> level_logphi(static_cast<std::size_t>(depth) + 1);
    {
        std::vector<std::uint64_t> fill(static_cast<std::size_t>(depth) + 1, 0);
        std::uint64_t sz = 1;
        for (int lvl = 0; lvl <= depth; ++lvl) {
            level_logphi[lvl].resize(sz);
            sz *= static_cast<std::uint64_t>(t.count());
        }
        std::vector<double> sv, pre;
        fold_word_tree(
            t, depth,
            [&](std::span<const int> word, const SquareMatrix& prod) {
                singular_values_into(prod, sv);
                detail::log_prefix_from_singular(sv, pre);
                const int lvl = static_cast<int>(word.size());
                level_logphi[lvl][fill[lvl]++] = detail::log_svf_from_prefix(pre, m.s);
            },
            opts.word_budget);
    }

    double worst = 1.0;
    for (int lvl = 1; lvl <= depth; ++lvl) {
        for (std::size_t j = 0; j < marg[lvl].size(); ++j) {
            if (marg[lvl][j] <= 0.0) continue;
            const double log_r =
                std::log(marg[lvl][j]) + lvl * pressure - level_logphi[lvl][j];
            worst = std::max(worst, std::exp(std::abs(log_r)));
        }
    }
    return worst;
}

/// Convergence diagnostics around the variational principle. For the Gibbs
/// approximation h_n + lambda_n = a_n/n exactly, so the slack P - (h+lambda)
/// measures how far the depth-n sample sits from the extrapolated limit.
struct VariationalDiagnostics {
    double entropy = 0.0;
    double lyapunov = 0.0;
    double pressure = 0.0;  // extrapolated
    double slack = 0.0;     // pressure - (entropy + lyapunov)
    double gibbs_constant = 1.0;
};

struct VariationalOptions {
    std::uint64_t word_budget = kDefaultWordBudget;
    int threads = 1;
    int pressure_n_max = 0;  // 0: use the measure depth
};

inline VariationalDiagnostics variational_check(const MatrixTuple& t, double s, int depth,
                                                const VariationalOptions& opts = {}) {
    const CylinderMeasure m = gibbs_approximation(t, s, depth, {.word_budget = opts.word_budget});
    VariationalDiagnostics diag;
    diag.entropy = entropy_estimate(m);
    diag.lyapunov = lyapunov_estimate(t, s, m);
    PressureOptions popts;
    popts.word_budget = opts.word_budget;
    popts.threads = opts.threads;
    const int n_max = opts.pressure_n_max > 0 ? opts.pressure_n_max : depth;
    const PressureEstimate est = pressure_estimate(t, s, n_max, popts);
    diag.pressure = est.value;
    diag.slack = diag.pressure - (diag.entropy + diag.lyapunov);
    diag.gibbs_constant =
        gibbs_ratio_diagnostic(t, s, depth, est.value, {.word_budget = opts.word_budget});
    return diag;
}

}  // namespace afflab
