#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "afflab/errors.hpp"
#include "afflab/matrix.hpp"
#include "afflab/multilinear.hpp"
#include "afflab/symbolic.hpp"

namespace afflab {

/// Exponent s >= 0 of the singular value function together with its grade:
/// k <= s < k+1 for s below the ambient dimension, determinant branch above.
struct SvfExponent {
    double s = 0.0;
    int grade = 0;
    bool top = false;  // s >= d: |det|^{s/d} branch

    static SvfExponent make(double s, int dim) {
        if (!std::isfinite(s) || s < 0.0) throw InputError("svf: exponent must be finite and >= 0");
        SvfExponent e;
        e.s = s;
        if (s >= static_cast<double>(dim)) {
            e.grade = dim;
            e.top = true;
        } else {
            e.grade = static_cast<int>(std::floor(s));
            e.top = false;
        }
        return e;
    }
};

namespace detail {

/// log of the singular value function from cumulative log-singular-value sums
/// (prefix[j] = sum of the first j log alphas, prefix[0] = 0).
inline double log_svf_from_prefix(std::span<const double> prefix, const SvfExponent& e) {
    const int d = static_cast<int>(prefix.size()) - 1;
    if (e.top) return (e.s / static_cast<double>(d)) * prefix[d];
    const int k = e.grade;
    return prefix[k] + (e.s - k) * (prefix[k + 1] - prefix[k]);
}

inline void log_prefix_from_singular(std::span<const double> alphas, std::vector<double>& prefix) {
    prefix.resize(alphas.size() + 1);
    prefix[0] = 0.0;
    for (std::size_t i = 0; i < alphas.size(); ++i)
        prefix[i + 1] = prefix[i] + std::log(std::max(alphas[i], 1e-300));
}

/// Log-sum-exp with a running maximum; order-insensitive up to roundoff, so
/// partitioned parallel folds can merge partial accumulators.
struct LogSumExp {
    double mx = -std::numeric_limits<double>::infinity();
    double sum = 0.0;

    void add(double x) {
        if (x == -std::numeric_limits<double>::infinity()) return;
        if (mx == -std::numeric_limits<double>::infinity()) {
            mx = x;
            sum = 1.0;
        } else if (x <= mx) {
            sum += std::exp(x - mx);
        } else {
            sum = sum * std::exp(mx - x) + 1.0;
            mx = x;
        }
    }

    void merge(const LogSumExp& o) {
        if (o.mx == -std::numeric_limits<double>::infinity()) return;
        if (mx == -std::numeric_limits<double>::infinity()) {
            *this = o;
        } else if (o.mx <= mx) {
            sum += o.sum * std::exp(o.mx - mx);
        } else {
            sum = sum * std::exp(mx - o.mx) + o.sum;
            mx = o.mx;
        }
    }

    double value() const {
        if (mx == -std::numeric_limits<double>::infinity())
            return -std::numeric_limits<double>::infinity();
        return mx + std::log(sum);
    }
};

/// DFS over the subtree rooted at `root_prod` (a node at `root_level`),
/// adding logw(product) into accs[level] at every sampled level.
template <typename F>
void subtree_level_sums(const MatrixTuple& t, const SquareMatrix& root_prod, int root_level,
                        int n_max, const std::vector<char>& sampled, std::vector<LogSumExp>& accs,
                        F& logw) {
    if (sampled[root_level]) accs[root_level].add(logw(root_prod));
    if (root_level == n_max) return;
    const int alphabet = t.count();
    const int rem = n_max - root_level;
    std::vector<SquareMatrix> stack(static_cast<std::size_t>(rem) + 1, SquareMatrix(t.dim));
    stack[0] = root_prod;
    std::vector<int> path(static_cast<std::size_t>(rem), 1);
    int level = 0;
    for (;;) {
        const int letter = path[level];
        if (letter > alphabet) {
            if (level == 0) return;
            --level;
            ++path[level];
            continue;
        }
        multiply_into(stack[level + 1], stack[level], t.maps[letter - 1]);
        const int global = root_level + level + 1;
        if (sampled[global]) accs[global].add(logw(stack[level + 1]));
        if (global == n_max) {
            ++path[level];
        } else {
            ++level;
            path[level] = 1;
        }
    }
}

/// a_n = log sum over Sigma_n of exp(logw(A_w)) for each requested level, in
/// one pass over the depth-n_max prefix tree. With threads > 1 the tree is
/// split by first letter and partial accumulators merge in letter order, so
/// the result is deterministic for a fixed thread count.
template <typename F>
std::vector<double> level_log_sums(const MatrixTuple& t, const std::vector<int>& levels,
                                   std::uint64_t budget, int threads, F&& logw) {
    if (levels.empty()) return {};
    const int n_max = levels.back();
    words_at_depth(t.count(), n_max, budget);
    std::vector<char> sampled(static_cast<std::size_t>(n_max) + 1, 0);
    for (int l : levels) sampled[l] = 1;

    std::vector<LogSumExp> accs(static_cast<std::size_t>(n_max) + 1);
    const int alphabet = t.count();
    if (threads <= 1 || alphabet < 2 || n_max < 2) {
        F fn = logw;
        subtree_level_sums(t, SquareMatrix::identity(t.dim), 0, n_max, sampled, accs, fn);
    } else {
        if (sampled[0]) accs[0].add(logw(SquareMatrix::identity(t.dim)));
        std::vector<std::future<std::vector<LogSumExp>>> futures;
        futures.reserve(alphabet);
        for (int letter = 1; letter <= alphabet; ++letter) {
            futures.push_back(std::async(std::launch::async, [&, letter]() {
                std::vector<LogSumExp> local(static_cast<std::size_t>(n_max) + 1);
                F fn = logw;
                subtree_level_sums(t, t.maps[letter - 1], 1, n_max, sampled, local, fn);
                return local;
            }));
        }
        for (auto& f : futures) {
            const std::vector<LogSumExp> local = f.get();
            for (int l = 0; l <= n_max; ++l) accs[l].merge(local[l]);
        }
    }

    std::vector<double> out;
    out.reserve(levels.size());
    for (int l : levels) out.push_back(accs[l].value());
    return out;
}

/// Aitken delta-squared on the last available triple; exact on geometric
/// error decay, falls back to the last sample when the differences vanish.
inline double aitken_limit(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    if (n < 3) return xs[n - 1];
    const double x0 = xs[n - 3], x1 = xs[n - 2], x2 = xs[n - 1];
    const double denom = x2 - 2.0 * x1 + x0;
    double scale = std::max({std::abs(x0), std::abs(x1), std::abs(x2), 1.0});
    if (std::abs(denom) <= 1e-13 * scale) return x2;
    const double d2 = x2 - x1;
    return x2 - d2 * d2 / denom;
}

}  // namespace detail

/// phi^s(A) from an explicit list of singular values (descending).
inline double log_svf_from_singular(std::span<const double> alphas, const SvfExponent& e) {
    std::vector<double> prefix;
    detail::log_prefix_from_singular(alphas, prefix);
    return detail::log_svf_from_prefix(prefix, e);
}

/// log phi^s(A): alpha_1...alpha_k * alpha_{k+1}^{s-k} for k <= s < k+1,
/// |det A|^{s/d} for s >= d, and phi^0 = 1.
inline double log_svf(const SquareMatrix& a, double s) {
    require_finite(a, "svf");
    if (!numerically_invertible(a)) throw InputError("svf: matrix is numerically singular");
    const SvfExponent e = SvfExponent::make(s, a.n);
    std::vector<double> sv;
    singular_values_into(a, sv);
    return log_svf_from_singular(sv, e);
}

inline double svf(const SquareMatrix& a, double s) { return std::exp(log_svf(a, s)); }

// ---------------------------------------------------------------------------
// Pressure estimates
// ---------------------------------------------------------------------------

struct PressureSample {
    int n = 0;
    double log_sum = 0.0;  // a_n
    double value = 0.0;    // a_n / n
};

/// Finite-depth view of a subadditive pressure. `value` is the Aitken limit
/// of the dyadic samples, `upper_bound` the smallest sample (the dyadic
/// subsequence is non-increasing), `uncertainty` the last dyadic gap.
struct PressureEstimate {
    double s = 0.0;
    std::vector<PressureSample> samples;
    double value = 0.0;
    double upper_bound = 0.0;
    double uncertainty = 0.0;
};

struct PressureOptions {
    std::uint64_t word_budget = kDefaultWordBudget;
    int threads = 1;
};

/// Depths {1, 2, 4, ...} up to n_max.
inline std::vector<int> dyadic_levels(int n_max) {
    if (n_max < 1) throw InputError("pressure: n_max must be >= 1");
    std::vector<int> levels;
    for (int n = 1; n <= n_max; n *= 2) levels.push_back(n);
    return levels;
}

namespace detail {

template <typename F>
PressureEstimate assemble_estimate(const MatrixTuple& t, double s, int n_max,
                                   const PressureOptions& opts, F&& logw) {
    const std::vector<int> levels = dyadic_levels(n_max);
    const std::vector<double> sums =
        level_log_sums(t, levels, opts.word_budget, opts.threads, std::forward<F>(logw));
    PressureEstimate est;
    est.s = s;
    std::vector<double> xs;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        PressureSample sample;
        sample.n = levels[i];
        sample.log_sum = sums[i];
        sample.value = sums[i] / levels[i];
        est.samples.push_back(sample);
        xs.push_back(sample.value);
    }
    est.upper_bound = *std::min_element(xs.begin(), xs.end());
    // The dyadic subsequence is non-increasing, so its minimum is a rigorous
    // upper bound for the limit; the extrapolation only ever refines below it
    // (noisy second differences can otherwise fling Aitken upward).
    est.value = std::min(detail::aitken_limit(xs), est.upper_bound);
    est.uncertainty = xs.size() >= 2 ? std::abs(xs[xs.size() - 1] - xs[xs.size() - 2])
                                     : std::numeric_limits<double>::infinity();
    return est;
}

}  // namespace detail

/// Singular value pressure samples a_n = log sum_{|w|=n} phi^s(A_w) at the
/// dyadic depths up to n_max.
inline PressureEstimate pressure_estimate(const MatrixTuple& t, double s, int n_max,
                                          const PressureOptions& opts = {}) {
    const SvfExponent e = SvfExponent::make(s, t.dim);
    // Scratch is captured by value: each parallel worker copies the functor
    // and gets its own buffers.
    return detail::assemble_estimate(
        t, s, n_max, opts,
        [e, sv = std::vector<double>(), prefix = std::vector<double>()](
            const SquareMatrix& prod) mutable {
            singular_values_into(prod, sv);
            detail::log_prefix_from_singular(sv, prefix);
            return detail::log_svf_from_prefix(prefix, e);
        });
}

/// Norm pressure: ||A_w||^s in place of phi^s(A_w).
inline PressureEstimate norm_pressure_estimate(const MatrixTuple& t, double s, int n_max,
                                               const PressureOptions& opts = {}) {
    if (!std::isfinite(s) || s < 0.0)
        throw InputError("norm pressure: exponent must be finite and >= 0");
    return detail::assemble_estimate(
        t, s, n_max, opts,
        [s, sv = std::vector<double>()](const SquareMatrix& prod) mutable {
            singular_values_into(prod, sv);
            return s * std::log(std::max(sv[0], 1e-300));
        });
}

/// a_{m+n} <= a_m + a_n (+tol) for every sampled pair.
inline bool subadditive_samples(const PressureEstimate& est, double tol = 1e-9) {
    for (const PressureSample& x : est.samples)
        for (const PressureSample& y : est.samples)
            for (const PressureSample& z : est.samples)
                if (z.n == x.n + y.n && z.log_sum > x.log_sum + y.log_sum + tol) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Affinity dimension
// ---------------------------------------------------------------------------

struct AffinityOptions {
    std::uint64_t word_budget = kDefaultWordBudget;
    int threads = 1;
    /// Per-evaluation enumeration target for the bisection: the fixed depth is
    /// the largest n with N^n <= bisect_word_cap (never above 10^6 words).
    std::uint64_t bisect_word_cap = 1024;
    int n_max_diagnostics = 8;       // dyadic estimate reported at the found dimension
    int single_map_log2_depth = 12;  // single-map path squares up to 2^this
};

struct AffinityDimensionResult {
    double dimension = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    double pressure_at_dimension = 0.0;  // extrapolated residual at `dimension`
    PressureEstimate diagnostics;
    int bisection_depth = 0;
};

namespace detail {

/// Per-word log-singular-value prefix sums at a fixed depth; lets the
/// bisection re-evaluate the pressure sum at many exponents after one fold.
struct SpectraCache {
    int dim = 0;
    int depth = 0;
    std::vector<double> prefix;  // (dim+1) entries per word

    double log_pressure_sum(const SvfExponent& e) const {
        LogSumExp acc;
        const std::size_t stride = static_cast<std::size_t>(dim) + 1;
        for (std::size_t off = 0; off < prefix.size(); off += stride)
            acc.add(log_svf_from_prefix(std::span<const double>(&prefix[off], stride), e));
        return acc.value();
    }
};

inline SpectraCache build_spectra_cache(const MatrixTuple& t, int depth, std::uint64_t budget) {
    SpectraCache cache;
    cache.dim = t.dim;
    cache.depth = depth;
    const std::uint64_t words = words_at_depth(t.count(), depth, budget);
    cache.prefix.reserve(static_cast<std::size_t>(words) * (t.dim + 1));
    std::vector<double> sv, pre;
    fold_words(
        t, depth,
        [&](std::span<const int>, const SquareMatrix& prod) {
            singular_values_into(prod, sv);
            log_prefix_from_singular(sv, pre);
            cache.prefix.insert(cache.prefix.end(), pre.begin(), pre.end());
        },
        budget);
    return cache;
}

/// Dyadic estimate of lim (1/n) log phi^s(A^n) for a single map, by repeated
/// squaring with Frobenius rescaling (tracks the log scale exactly).
struct SingleMapCache {
    int dim = 0;
    std::vector<double> log_scales;           // per level j: A^{2^j} = e^{L_j} B_j
    std::vector<std::vector<double>> prefix;  // log-singular prefix sums of B_j

    double value_at(double s) const {
        const SvfExponent e = SvfExponent::make(s, dim);
        std::vector<double> xs;
        for (std::size_t j = 0; j < log_scales.size(); ++j) {
            const double log_phi = s * log_scales[j] + log_svf_from_prefix(prefix[j], e);
            xs.push_back(log_phi / static_cast<double>(1ULL << j));
        }
        return std::min(aitken_limit(xs), *std::min_element(xs.begin(), xs.end()));
    }
};

inline SingleMapCache build_single_map_cache(const SquareMatrix& a, int log2_depth) {
    SingleMapCache cache;
    cache.dim = a.n;
    SquareMatrix b = a;
    double log_scale = 0.0;
    std::vector<double> sv, pre;
    SquareMatrix sq(a.n);
    for (int j = 0; j <= log2_depth; ++j) {
        singular_values_into(b, sv);
        log_prefix_from_singular(sv, pre);
        cache.log_scales.push_back(log_scale);
        cache.prefix.push_back(pre);
        if (j == log2_depth) break;
        multiply_into(sq, b, b);
        const double c = frobenius_norm(sq);
        if (c == 0.0) throw InputError("single-map pressure: product collapsed to zero");
        log_scale = 2.0 * log_scale + std::log(c);
        b = scaled(sq, 1.0 / c);
    }
    return cache;
}

}  // namespace detail

/// Unique zero of s -> P(phi^s), clamped at the ambient dimension. Requires
/// every map to be a strict contraction. The bisection evaluates a_n/n at a
/// fixed depth; the returned diagnostics carry the dyadic estimate at the
/// found dimension so the residual and its uncertainty are explicit.
inline AffinityDimensionResult affinity_dimension(const MatrixTuple& t, double tol,
                                                  const AffinityOptions& opts = {}) {
    if (!(tol > 0.0)) throw InputError("affinity_dimension: tolerance must be positive");
    const double max_norm = max_operator_norm(t);
    if (max_norm >= 1.0)
        throw PreconditionError("affinity_dimension: some map has operator norm >= 1");

    const int d = t.dim;
    AffinityDimensionResult res;

    std::function<double(double)> eval;
    detail::SpectraCache cache;
    detail::SingleMapCache single;
    if (t.count() == 1) {
        single = detail::build_single_map_cache(t.maps[0], opts.single_map_log2_depth);
        res.bisection_depth = 1 << opts.single_map_log2_depth;
        eval = [&single](double s) { return single.value_at(s); };
    } else {
        const std::uint64_t cap =
            std::min<std::uint64_t>({opts.bisect_word_cap, 1'000'000, opts.word_budget});
        int depth = 1;
        std::uint64_t w = static_cast<std::uint64_t>(t.count());
        while (w * static_cast<std::uint64_t>(t.count()) <= cap) {
            w *= static_cast<std::uint64_t>(t.count());
            ++depth;
        }
        cache = detail::build_spectra_cache(t, depth, opts.word_budget);
        res.bisection_depth = depth;
        eval = [&cache, d](double s) {
            return cache.log_pressure_sum(SvfExponent::make(s, d)) / cache.depth;
        };
    }

    const double p0 = eval(0.0);
    if (p0 <= 0.0) {
        // Single-map tuples land here: P(phi^0) = 0 and P is strictly
        // decreasing, so the root is exactly 0.
        res.dimension = 0.0;
        res.bracket_lo = 0.0;
        res.bracket_hi = 0.0;
        res.pressure_at_dimension = p0;
        return res;
    }

    double lo = 0.0;
    double hi = std::max(static_cast<double>(d), std::log(static_cast<double>(t.count())) /
                                                     -std::log(max_norm)) +
                0.5;
    for (int guard = 0; eval(hi) >= 0.0; ++guard) {
        if (guard > 60)
            throw PreconditionError("affinity_dimension: pressure does not become negative");
        hi *= 1.5;
    }
    for (int it = 0; hi - lo > tol && it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        (eval(mid) >= 0.0 ? lo : hi) = mid;
    }
    const double root = 0.5 * (lo + hi);
    res.dimension = std::min(root, static_cast<double>(d));
    res.bracket_lo = lo;
    res.bracket_hi = hi;

    if (t.count() >= 2) {
        PressureOptions popts;
        popts.word_budget = opts.word_budget;
        popts.threads = opts.threads;
        res.diagnostics = pressure_estimate(t, res.dimension, opts.n_max_diagnostics, popts);
        res.pressure_at_dimension = res.diagnostics.value;
    } else {
        res.pressure_at_dimension = eval(res.dimension);
        res.diagnostics.s = res.dimension;
        res.diagnostics.value = res.pressure_at_dimension;
        res.diagnostics.upper_bound = res.pressure_at_dimension;
        res.diagnostics.uncertainty = 0.0;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Rational tensor lift
// ---------------------------------------------------------------------------

/// For reduced s = p/q with k < p/q < k+1, the Kronecker product of
/// (k+1)q - p copies of A^(wedge k) with p - kq copies of A^(wedge k+1).
/// Its operator norm satisfies ||lift||^{1/q} = phi^{p/q}(A).
inline SquareMatrix rational_tensor_lift(const SquareMatrix& a, long long p, long long q,
                                         std::uint64_t dim_cap = 65536) {
    require_finite(a, "rational_tensor_lift");
    if (p <= 0 || q <= 0) throw InputError("rational_tensor_lift: p and q must be positive");
    const long long g = std::gcd(p, q);
    p /= g;
    q /= g;
    if (q == 1) throw InputError("rational_tensor_lift: integral exponent needs no lift");
    const int d = a.n;
    if (p >= q * static_cast<long long>(d))
        throw InputError("rational_tensor_lift: exponent must be below the ambient dimension");
    const long long k = p / q;  // floor, and k < p/q < k+1 strictly after reduction
    const long long copies_low = (k + 1) * q - p;
    const long long copies_high = p - k * q;

    const std::uint64_t dim_low = binomial(d, static_cast<int>(k));
    const std::uint64_t dim_high = binomial(d, static_cast<int>(k) + 1);
    std::uint64_t total = 1;
    for (long long i = 0; i < copies_low; ++i) {
        total *= dim_low;
        if (total > dim_cap) throw ResourceError("rational_tensor_lift: lifted dimension too large");
    }
    for (long long i = 0; i < copies_high; ++i) {
        total *= dim_high;
        if (total > dim_cap) throw ResourceError("rational_tensor_lift: lifted dimension too large");
    }

    const SquareMatrix low = exterior_power(a, static_cast<int>(k));
    const SquareMatrix high = exterior_power(a, static_cast<int>(k) + 1);
    SquareMatrix out = SquareMatrix::identity(1);
    for (long long i = 0; i < copies_low; ++i) out = kronecker(out, low);
    for (long long i = 0; i < copies_high; ++i) out = kronecker(out, high);
    return out;
}

}  // namespace afflab
