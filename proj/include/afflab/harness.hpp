#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "afflab/errors.hpp"
#include "afflab/irreducibility.hpp"
#include "afflab/pressure.hpp"
#include "afflab/random.hpp"
#include "afflab/symbolic.hpp"

namespace afflab {

// ---------------------------------------------------------------------------
// Random tuple sampling
// ---------------------------------------------------------------------------

/// Gaussian-entry tuple with each map rescaled to an operator norm drawn
/// uniformly from (cap/2, cap). Deterministic under the seed.
inline MatrixTuple sample_tuple(int d, int n_maps, double cap, std::uint64_t seed) {
    if (d < 1) throw InputError("sample_tuple: dimension must be >= 1");
    if (n_maps < 1) throw InputError("sample_tuple: need at least one map");
    if (!(cap > 0.0) || cap >= 1.0) throw InputError("sample_tuple: cap must lie in (0,1)");
    SeededRng rng(seed);
    std::vector<SquareMatrix> maps;
    maps.reserve(n_maps);
    for (int m = 0; m < n_maps; ++m) {
        for (int attempt = 0;; ++attempt) {
            if (attempt > 100) throw InputError("sample_tuple: could not draw an invertible map");
            SquareMatrix a(d);
            for (double& x : a.a) x = rng.gaussian();
            const double norm = operator_norm(a);
            if (norm == 0.0) continue;
            const double target = cap * (0.5 + 0.5 * rng.uniform01());
            a = scaled(a, target / norm);
            if (!numerically_invertible(a)) continue;
            maps.push_back(std::move(a));
            break;
        }
    }
    return n_maps >= 2 ? MatrixTuple::create(std::move(maps), cap)
                       : MatrixTuple::create_reduced(std::move(maps), cap);
}

// ---------------------------------------------------------------------------
// Dimension-drop experiments
// ---------------------------------------------------------------------------

struct DropOptions {
    double dimension_tol = 1e-5;  // bisection bracket width
    AffinityOptions affinity{.bisect_word_cap = 65536, .n_max_diagnostics = 12};
    EigPairOptions eig;
    double cap_requirement = 0.5;  // norm bound required before asserting a strict drop
};

struct DropEntry {
    int removed = 0;  // 1-based map index
    AffinityDimensionResult result;
    double gap = 0.0;
    double combined_tolerance = 0.0;  // brackets plus propagated pressure uncertainty
};

struct DropConditions {
    bool cap_ok = false;
    double max_norm = 0.0;
    EigenvalueConditionSummary eigenvalue_condition;
};

struct DropReport {
    AffinityDimensionResult base;
    std::vector<DropEntry> removed;
    DropConditions conditions;
    bool strict_drop_asserted = false;
};

namespace detail {

inline double bracket_width(const AffinityDimensionResult& r) {
    return r.bracket_hi - r.bracket_lo;
}

inline double finite_or(double x, double fallback) {
    return std::isfinite(x) ? x : fallback;
}

}  // namespace detail

/// Computes the affinity dimension of the tuple and of every (N-1)-map
/// sub-tuple. The strict-drop flag is asserted only under the checked
/// hypotheses (norms below cap_requirement, eigenvalue condition) and when
/// every gap clears both bisection brackets plus the pressure uncertainty
/// converted to dimension units through the slope bound log(1/max-norm).
inline DropReport drop_experiment(const MatrixTuple& t, const DropOptions& opts = {}) {
    if (t.count() < 2) throw InputError("drop_experiment: need at least two maps");
    const double max_norm = max_operator_norm(t);
    if (max_norm >= 1.0)
        throw PreconditionError("drop_experiment: some map has operator norm >= 1");

    DropReport rep;
    rep.conditions.max_norm = max_norm;
    rep.conditions.cap_ok = max_norm < opts.cap_requirement;
    rep.conditions.eigenvalue_condition = check_eigenvalue_condition(t, opts.eig);

    rep.base = affinity_dimension(t, opts.dimension_tol, opts.affinity);
    const double slope_floor = -std::log(max_norm);  // |dP/ds| >= log(1/max-norm)
    const double base_unc =
        detail::finite_or(rep.base.diagnostics.uncertainty, 0.0) / slope_floor;

    bool all_gaps_clear = true;
    for (int j = 1; j <= t.count(); ++j) {
        DropEntry entry;
        entry.removed = j;
        entry.result = affinity_dimension(t.without(j), opts.dimension_tol, opts.affinity);
        entry.gap = rep.base.dimension - entry.result.dimension;
        const double reduced_unc =
            detail::finite_or(entry.result.diagnostics.uncertainty, 0.0) / slope_floor;
        entry.combined_tolerance = detail::bracket_width(rep.base) +
                                   detail::bracket_width(entry.result) + base_unc + reduced_unc;
        all_gaps_clear = all_gaps_clear && entry.gap > entry.combined_tolerance;
        rep.removed.push_back(std::move(entry));
    }
    rep.strict_drop_asserted = rep.conditions.cap_ok &&
                               rep.conditions.eigenvalue_condition.satisfied && all_gaps_clear;
    return rep;
}

// ---------------------------------------------------------------------------
// Genericity surveys
// ---------------------------------------------------------------------------

struct SurveyOptions {
    double cap = 0.5;
    bool with_drop = false;
    int threads = 1;
    EigPairOptions eig;
    DropOptions drop;
};

struct SurveyTrial {
    int index = 0;
    std::uint64_t sub_seed = 0;
    bool ok = false;           // trial ran to completion
    std::string error;         // failure note when !ok
    bool eig_pass = false;
    double e1_min_gap = 0.0;   // of the best pair
    double e2_min_minor = 0.0;
    int best_pair_i = 0, best_pair_j = 0;
    bool drop_checked = false;
    bool strict_drop = false;
    double min_gap = 0.0;      // smallest removal gap when drop_checked
};

struct SurveyReport {
    int d = 0, n_maps = 0, trials = 0;
    std::uint64_t seed = 0;
    std::vector<SurveyTrial> rows;
    double eig_pass_fraction = 0.0;
    double strict_drop_fraction = 0.0;  // among drop-checked trials
};

namespace detail {

inline SurveyTrial run_survey_trial(int d, int n_maps, int trial, std::uint64_t sub_seed,
                                    const SurveyOptions& opts) {
    SurveyTrial row;
    row.index = trial;
    row.sub_seed = sub_seed;
    try {
        const MatrixTuple t = sample_tuple(d, n_maps, opts.cap, row.sub_seed);
        const EigenvalueConditionSummary summary = check_eigenvalue_condition(t, opts.eig);
        row.eig_pass = summary.satisfied;
        // Report the best pair: maximize the smaller of the two margins.
        double best_score = -1.0;
        for (const EigenvalueConditionReport& p : summary.pairs) {
            const double score = std::min(p.e1_min_gap / opts.eig.e1_gap_rel,
                                          p.e2_min_minor / opts.eig.e2_minor_rel);
            if (score > best_score) {
                best_score = score;
                row.e1_min_gap = p.e1_min_gap;
                row.e2_min_minor = p.e2_min_minor;
                row.best_pair_i = p.i;
                row.best_pair_j = p.j;
            }
        }
        if (opts.with_drop) {
            const DropReport drop = drop_experiment(t, opts.drop);
            row.drop_checked = true;
            row.strict_drop = drop.strict_drop_asserted;
            double min_gap = std::numeric_limits<double>::infinity();
            for (const DropEntry& e : drop.removed) min_gap = std::min(min_gap, e.gap);
            row.min_gap = min_gap;
        }
        row.ok = true;
    } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
    }
    return row;
}

}  // namespace detail

/// Samples `trials` tuples and evaluates the eigenvalue condition (and
/// optionally the drop experiment) on each. Per-trial failures are recorded
/// and never abort the survey. Trials are independent (sub-seeds derive from
/// the root seed by index alone) and run concurrently when threads > 1; the
/// report is assembled in trial order either way.
inline SurveyReport genericity_survey(int d, int n_maps, int trials, std::uint64_t seed,
                                      const SurveyOptions& opts = {}) {
    if (trials < 1) throw InputError("genericity_survey: trials must be >= 1");
    SurveyReport rep;
    rep.d = d;
    rep.n_maps = n_maps;
    rep.trials = trials;
    rep.seed = seed;
    const SeededRng root(seed);

    rep.rows.resize(trials);
    const int workers = std::max(1, std::min(opts.threads, trials));
    if (workers == 1) {
        for (int trial = 0; trial < trials; ++trial)
            rep.rows[trial] = detail::run_survey_trial(
                d, n_maps, trial, root.fork(static_cast<std::uint64_t>(trial)).seed(), opts);
    } else {
        std::vector<std::future<void>> futures;
        futures.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            futures.push_back(std::async(std::launch::async, [&, w]() {
                for (int trial = w; trial < trials; trial += workers)
                    rep.rows[trial] = detail::run_survey_trial(
                        d, n_maps, trial, root.fork(static_cast<std::uint64_t>(trial)).seed(),
                        opts);
            }));
        }
        for (auto& f : futures) f.get();
    }

    int eig_passes = 0, drop_checked = 0, drop_passes = 0;
    for (const SurveyTrial& row : rep.rows) {
        if (row.ok && row.eig_pass) ++eig_passes;
        if (row.drop_checked) {
            ++drop_checked;
            if (row.strict_drop) ++drop_passes;
        }
    }
    rep.eig_pass_fraction = static_cast<double>(eig_passes) / trials;
    rep.strict_drop_fraction =
        drop_checked > 0 ? static_cast<double>(drop_passes) / drop_checked : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Rational-exponent consistency through the tensor lift
// ---------------------------------------------------------------------------

struct RationalConsistencyRow {
    int n = 0;
    double svf_sample = 0.0;   // a_n/n for P(phi^{p/q})
    double lift_sample = 0.0;  // a_n/n for the lifted tuple's norm pressure at 1/q
    double abs_diff = 0.0;
};

struct RationalConsistencyReport {
    long long p = 0, q = 0;
    int grade = 0;
    int lifted_dim = 0;
    std::vector<double> generator_residuals;  // |log phi^{p/q}(A_i) - (1/q) log||A_i'|||
    std::vector<RationalConsistencyRow> rows;
    double max_abs_diff = 0.0;
};

/// Exercises the rational-exponent reduction: phi^{p/q}(A_w) equals
/// ||lift(A)_w||^{1/q}, so the singular value pressure of the tuple at p/q
/// and the norm pressure of the lifted tuple at 1/q agree sample-by-sample.
inline RationalConsistencyReport rational_pressure_consistency(const MatrixTuple& t, long long p,
                                                               long long q, int n_max,
                                                               const PressureOptions& opts = {}) {
    RationalConsistencyReport rep;
    const long long g = std::gcd(p, q);
    rep.p = p / g;
    rep.q = q / g;
    rep.grade = static_cast<int>(rep.p / rep.q);

    std::vector<SquareMatrix> lifted;
    lifted.reserve(t.maps.size());
    for (const SquareMatrix& a : t.maps) lifted.push_back(rational_tensor_lift(a, rep.p, rep.q));
    rep.lifted_dim = lifted.front().n;

    const double s = static_cast<double>(rep.p) / static_cast<double>(rep.q);
    for (std::size_t i = 0; i < t.maps.size(); ++i) {
        const double lhs = log_svf(t.maps[i], s);
        const double rhs = std::log(operator_norm(lifted[i])) / static_cast<double>(rep.q);
        rep.generator_residuals.push_back(std::abs(lhs - rhs));
    }

    const MatrixTuple lifted_tuple = detail::derived_tuple(std::move(lifted));
    const PressureEstimate svf_est = pressure_estimate(t, s, n_max, opts);
    const PressureEstimate lift_est =
        norm_pressure_estimate(lifted_tuple, 1.0 / static_cast<double>(rep.q), n_max, opts);
    for (std::size_t i = 0; i < svf_est.samples.size(); ++i) {
        RationalConsistencyRow row;
        row.n = svf_est.samples[i].n;
        row.svf_sample = svf_est.samples[i].value;
        row.lift_sample = lift_est.samples[i].value;
        row.abs_diff = std::abs(row.svf_sample - row.lift_sample);
        rep.max_abs_diff = std::max(rep.max_abs_diff, row.abs_diff);
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace afflab
