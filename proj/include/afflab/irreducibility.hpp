#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "afflab/errors.hpp"
#include "afflab/matrix.hpp"
#include "afflab/multilinear.hpp"
#include "afflab/random.hpp"
#include "afflab/spectrum.hpp"
#include "afflab/symbolic.hpp"
#include "afflab/tolerances.hpp"

namespace afflab {

namespace detail {

/// Orthonormal span with Gram-Schmidt (two projection passes). Rank growth
/// uses a relative residual threshold.
struct VectorSpan {
    std::vector<std::vector<double>> basis;
    double rank_tol = 1e-9;

    static double dot(std::span<const double> x, std::span<const double> y) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
        return s;
    }

    static double norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }

    int dimension() const { return static_cast<int>(basis.size()); }

    /// Residual of v against the span, relative to |v| (the sine of the angle).
    double relative_distance(std::span<const double> v) const {
        const double n0 = norm(v);
        if (n0 == 0.0) return 0.0;
        std::vector<double> u(v.begin(), v.end());
        for (int pass = 0; pass < 2; ++pass) {
            for (const std::vector<double>& b : basis) {
                const double c = dot(u, b);
                for (std::size_t i = 0; i < u.size(); ++i) u[i] -= c * b[i];
            }
        }
        return norm(u) / n0;
    }

    bool add(std::span<const double> v) {
        const double n0 = norm(v);
        if (n0 == 0.0) return false;
        std::vector<double> u(v.begin(), v.end());
        for (int pass = 0; pass < 2; ++pass) {
            for (const std::vector<double>& b : basis) {
                const double c = dot(u, b);
                for (std::size_t i = 0; i < u.size(); ++i) u[i] -= c * b[i];
            }
        }
        const double nu = norm(u);
        if (nu <= rank_tol * n0) return false;
        for (double& x : u) x /= nu;
        basis.push_back(std::move(u));
        return true;
    }
};

inline std::span<const double> as_span(const SquareMatrix& m) {
    return std::span<const double>(m.a.data(), m.a.size());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Orbit spans and irreducibility certificates
// ---------------------------------------------------------------------------

struct OrbitSpanResult {
    int dimension = 0;
    std::vector<std::vector<double>> basis;  // orthonormal
};

/// Dimension and basis of span{A_w v : words w}, grown by breadth-first
/// closure. Stops when a full pass adds nothing or the span is everything;
/// stabilization takes at most d passes.
inline OrbitSpanResult orbit_span(const MatrixTuple& t, std::span<const double> w,
                                  int max_len = 0) {
    if (static_cast<int>(w.size()) != t.dim) throw InputError("orbit_span: dimension mismatch");
    double n0 = 0.0;
    for (double x : w) {
        if (!std::isfinite(x)) throw InputError("orbit_span: non-finite vector");
        n0 += x * x;
    }
    if (n0 == 0.0) throw InputError("orbit_span: zero vector");
    if (max_len <= 0) max_len = t.dim + 1;

    detail::VectorSpan span;
    span.rank_tol = Tolerances::global().rank_relative;
    span.add(w);
    std::vector<std::vector<double>> frontier{std::vector<double>(w.begin(), w.end())};
    for (int len = 1; len <= max_len && span.dimension() < t.dim && !frontier.empty(); ++len) {
        std::vector<std::vector<double>> next;
        for (const std::vector<double>& v : frontier) {
            for (const SquareMatrix& a : t.maps) {
                std::vector<double> u = matvec(a, v);
                if (span.add(u)) next.push_back(std::move(u));
            }
        }
        frontier = std::move(next);
    }
    OrbitSpanResult res;
    res.dimension = span.dimension();
    res.basis = std::move(span.basis);
    return res;
}

enum class IrreducibilityVerdict { IrreducibleCertified, ReducibleCertified, Inconclusive };

inline const char* to_string(IrreducibilityVerdict v) {
    switch (v) {
        case IrreducibilityVerdict::IrreducibleCertified: return "irreducible-certified";
        case IrreducibilityVerdict::ReducibleCertified: return "reducible-certified";
        default: return "inconclusive";
    }
}

struct IrreducibilityReport {
    IrreducibilityVerdict verdict = IrreducibilityVerdict::Inconclusive;
    int space_dim = 0;
    int algebra_dimension = 0;  // dimension of span{A_w} inside matrix space
    std::vector<std::vector<double>> invariant_basis;  // reducible certificate
    double invariance_defect = 0.0;                    // max subspace angle of A_i V against V
    std::vector<int> probe_span_dims;                  // orbit-span diagnostics
};

struct IrreducibilityOptions {
    std::uint64_t seed = 0x1b5a9e4dull;
    int random_elements = 8;  // stage 2 attempts
    int probes = 32;          // stage 3 Gaussian probes (plus the standard basis)
};

namespace detail {

inline double subspace_invariance_defect(const MatrixTuple& t,
                                         const std::vector<std::vector<double>>& basis) {
    VectorSpan span;
    span.basis = basis;
    double worst = 0.0;
    for (const SquareMatrix& a : t.maps)
        for (const std::vector<double>& b : basis)
            worst = std::max(worst, span.relative_distance(matvec(a, b)));
    return worst;
}

inline int algebra_dimension(const MatrixTuple& t) {
    VectorSpan span;
    span.rank_tol = Tolerances::global().rank_relative;
    std::vector<SquareMatrix> queue;
    const SquareMatrix id = SquareMatrix::identity(t.dim);
    span.add(as_span(id));
    queue.push_back(id);
    const int full = t.dim * t.dim;
    std::size_t head = 0;
    while (head < queue.size() && span.dimension() < full) {
        const SquareMatrix m = queue[head++];
        for (const SquareMatrix& a : t.maps) {
            SquareMatrix c = a * m;
            if (span.add(as_span(c))) queue.push_back(std::move(c));
        }
    }
    return span.dimension();
}

}  // namespace detail

/// Three-stage decision. Stage 1 certifies irreducibility when the span of
/// all word products is the full matrix space (then no invariant subspace,
/// real or complex, can exist). Stage 2 hunts for a certified invariant
/// subspace among sums of eigencomponents of random algebra elements.
/// Stage 3 falls back to randomized orbit-span probes; if all of them fill
/// the space the verdict is Inconclusive ("probably irreducible over R" --
/// e.g. a lone rotation has no real invariant line but only a 2-dimensional
/// algebra).
inline IrreducibilityReport check_irreducible(const MatrixTuple& t,
                                              const IrreducibilityOptions& opts = {}) {
    const int d = t.dim;
    IrreducibilityReport rep;
    rep.space_dim = d;
    rep.algebra_dimension = detail::algebra_dimension(t);
    if (rep.algebra_dimension == d * d) {
        rep.verdict = IrreducibilityVerdict::IrreducibleCertified;
        return rep;
    }

    const double defect_tol = Tolerances::global().invariance_defect;
    SeededRng rng(opts.seed);

    // Stage 2: invariant subspaces among eigencomponent sums of random
    // algebra elements. A common invariant subspace is invariant under every
    // algebra element, hence a sum of eigencomponents of a generic one.
    for (int attempt = 0; attempt < opts.random_elements; ++attempt) {
        SeededRng sub = rng.fork(static_cast<std::uint64_t>(attempt));
        SquareMatrix m(d);
        for (const SquareMatrix& a : t.maps) {
            const double c = sub.gaussian();
            for (std::size_t i = 0; i < m.a.size(); ++i) m.a[i] += c * a.a[i];
        }
        EigenDecomposition dec = eigen_decompose(m);
        if (!dec.distinct || !dec.converged) continue;
        RealEigenBasis reb = real_eigen_basis(dec);
        if (!reb.ok) continue;
        const int comps = static_cast<int>(reb.components.size());
        if (comps < 2) continue;

        std::vector<int> masks;
        for (int mask = 1; mask < (1 << comps) - 1; ++mask) masks.push_back(mask);
        std::sort(masks.begin(), masks.end(), [](int x, int y) {
            const int px = std::popcount(static_cast<unsigned>(x));
            const int py = std::popcount(static_cast<unsigned>(y));
            return px != py ? px < py : x < y;
        });
        for (int mask : masks) {
            detail::VectorSpan candidate;
            candidate.rank_tol = Tolerances::global().rank_relative;
            int width = 0;
            for (int c = 0; c < comps; ++c) {
                if (!(mask & (1 << c))) continue;
                const EigenComponent& comp = reb.components[c];
                width += comp.width;
                for (int col = comp.first_column; col < comp.first_column + comp.width; ++col) {
                    std::vector<double> v(d);
                    for (int r = 0; r < d; ++r) v[r] = reb.basis(r, col);
                    candidate.add(v);
                }
            }
            if (width >= d || candidate.dimension() == 0 || candidate.dimension() >= d) continue;
            const double defect = detail::subspace_invariance_defect(t, candidate.basis);
            if (defect <= defect_tol) {
                rep.verdict = IrreducibilityVerdict::ReducibleCertified;
                rep.invariant_basis = std::move(candidate.basis);
                rep.invariance_defect = defect;
                return rep;
            }
        }
    }

    // Stage 3: orbit-span probes (standard basis, then Gaussian vectors).
    std::vector<std::vector<double>> probes;
    for (int i = 0; i < d; ++i) {
        std::vector<double> e(d, 0.0);
        e[i] = 1.0;
        probes.push_back(std::move(e));
    }
    for (int p = 0; p < opts.probes; ++p) {
        SeededRng sub = rng.fork(10'000 + static_cast<std::uint64_t>(p));
        std::vector<double> v(d);
        for (double& x : v) x = sub.gaussian();
        probes.push_back(std::move(v));
    }
    for (const std::vector<double>& w : probes) {
        const OrbitSpanResult orb = orbit_span(t, w);
        rep.probe_span_dims.push_back(orb.dimension);
        if (orb.dimension < d) {
            const double defect = detail::subspace_invariance_defect(t, orb.basis);
            if (defect <= defect_tol) {
                rep.verdict = IrreducibilityVerdict::ReducibleCertified;
                rep.invariant_basis = orb.basis;
                rep.invariance_defect = defect;
                return rep;
            }
        }
    }
    rep.verdict = IrreducibilityVerdict::Inconclusive;
    return rep;
}

namespace detail {

/// Tuple assembly for maps derived from an already-validated tuple (wedge
/// powers, tensor products). Such maps are invertible by construction but
/// their determinants can underflow the user-input invertibility threshold,
/// so only shape and finiteness are revalidated.
inline MatrixTuple derived_tuple(std::vector<SquareMatrix> maps) {
    MatrixTuple t;
    t.dim = maps.front().n;
    t.reduced_single = maps.size() == 1;
    for (const SquareMatrix& m : maps) {
        require_finite(m, "derived tuple");
        if (m.n != t.dim) throw InputError("derived tuple: mixed matrix dimensions");
    }
    t.maps = std::move(maps);
    return t;
}

}  // namespace detail

/// Exterior-power tuple (A_1^(wedge k), ..., A_N^(wedge k)).
inline MatrixTuple exterior_tuple(const MatrixTuple& t, int k) {
    if (k < 0 || k > t.dim) throw InputError("exterior_tuple: grade out of range");
    std::vector<SquareMatrix> maps;
    maps.reserve(t.maps.size());
    for (const SquareMatrix& a : t.maps) maps.push_back(exterior_power(a, k));
    return detail::derived_tuple(std::move(maps));
}

inline IrreducibilityReport check_k_irreducible(const MatrixTuple& t, int k,
                                                const IrreducibilityOptions& opts = {}) {
    return check_irreducible(exterior_tuple(t, k), opts);
}

/// Sufficient test for s-irreducibility on k < s < k+1: irreducibility of
/// the tensor tuple (A_i^(wedge k) (x) A_i^(wedge k+1))_i. A certified
/// irreducible verdict implies s-irreducibility; a reducible verdict is NOT
/// evidence against it (the implication is one-way -- in R^3 with k = 1 the
/// tensor tuple always has an invariant line).
inline IrreducibilityReport check_s_irreducible_sufficient(const MatrixTuple& t, int k,
                                                           const IrreducibilityOptions& opts = {}) {
    if (k < 0 || k >= t.dim) throw InputError("check_s_irreducible_sufficient: grade out of range");
    std::vector<SquareMatrix> maps;
    maps.reserve(t.maps.size());
    for (const SquareMatrix& a : t.maps)
        maps.push_back(kronecker(exterior_power(a, k), exterior_power(a, k + 1)));
    return check_irreducible(detail::derived_tuple(std::move(maps)), opts);
}

// ---------------------------------------------------------------------------
// Condition C(s), sampled
// ---------------------------------------------------------------------------

struct CsQuadruple {
    std::vector<double> v1, w1;  // wedge-k pair
    std::vector<double> v2, w2;  // wedge-(k+1) pair
};

struct CsSearchResult {
    bool counterexample_found = false;
    CsQuadruple counterexample;  // meaningful when found
    int trials_run = 0;
    int max_word_length = 0;          // the L actually searched
    int longest_witness_length = 0;   // worst case over successful quadruples
};

struct CsOptions {
    int max_len = 6;
    std::uint64_t word_budget_per_quadruple = 100'000;
    std::uint64_t seed = 0xc5c5c5c5ull;
    double margin_rel = 1e-8;
};

/// Randomized falsification of the semigroup pairing condition behind
/// s-irreducibility: for sampled (and structured basis) quadruples, search
/// words |w| <= L for one making both wedge pairings nonzero with margin.
/// A "counterexample" only means no witness word up to length L was found.
inline CsSearchResult check_condition_Cs_sampled(const MatrixTuple& t, int k, int trials,
                                                 const CsOptions& opts = {}) {
    if (trials < 1) throw InputError("check_condition_Cs_sampled: trials must be >= 1");
    if (k < 0 || k >= t.dim) throw InputError("check_condition_Cs_sampled: grade out of range");

    const MatrixTuple low = exterior_tuple(t, k);
    const MatrixTuple high = exterior_tuple(t, k + 1);
    const int m1 = low.dim;
    const int m2 = high.dim;
    const int alphabet = t.count();

    // Clamp the search length so the whole prefix tree fits the budget.
    int max_len = std::max(0, opts.max_len);
    {
        std::uint64_t nodes = 1, layer = 1;
        int len = 0;
        while (len < max_len) {
            layer *= static_cast<std::uint64_t>(alphabet);
            if (nodes + layer > opts.word_budget_per_quadruple) break;
            nodes += layer;
            ++len;
        }
        max_len = len;
    }

    SeededRng rng(opts.seed);
    CsSearchResult res;
    res.max_word_length = max_len;

    const std::uint64_t structured =
        static_cast<std::uint64_t>(m1) * m1 * static_cast<std::uint64_t>(m2) * m2;

    auto make_quadruple = [&](int trial) {
        CsQuadruple q;
        q.v1.assign(m1, 0.0);
        q.w1.assign(m1, 0.0);
        q.v2.assign(m2, 0.0);
        q.w2.assign(m2, 0.0);
        if (static_cast<std::uint64_t>(trial) < structured) {
            std::uint64_t idx = static_cast<std::uint64_t>(trial);
            const int a = static_cast<int>(idx % m1);
            idx /= m1;
            const int b = static_cast<int>(idx % m1);
            idx /= m1;
            const int c = static_cast<int>(idx % m2);
            idx /= m2;
            const int e = static_cast<int>(idx % m2);
            q.v1[a] = 1.0;
            q.w1[b] = 1.0;
            q.v2[c] = 1.0;
            q.w2[e] = 1.0;
        } else {
            SeededRng sub = rng.fork(static_cast<std::uint64_t>(trial));
            for (double& x : q.v1) x = sub.gaussian();
            for (double& x : q.w1) x = sub.gaussian();
            for (double& x : q.v2) x = sub.gaussian();
            for (double& x : q.w2) x = sub.gaussian();
        }
        return q;
    };

    auto vec_norm = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    };

    for (int trial = 0; trial < trials; ++trial) {
        const CsQuadruple q = make_quadruple(trial);
        const double nv1 = vec_norm(q.v1), nv2 = vec_norm(q.v2);
        if (nv1 == 0.0 || nv2 == 0.0 || vec_norm(q.w1) == 0.0 || vec_norm(q.w2) == 0.0) continue;

        // Dual DFS over the prefix tree, carrying both wedge products.
        bool found = false;
        int witness_len = 0;
        std::vector<SquareMatrix> stack1(static_cast<std::size_t>(max_len) + 1, SquareMatrix(m1));
        std::vector<SquareMatrix> stack2(static_cast<std::size_t>(max_len) + 1, SquareMatrix(m2));
        stack1[0] = SquareMatrix::identity(m1);
        stack2[0] = SquareMatrix::identity(m2);
        std::vector<int> path(static_cast<std::size_t>(std::max(max_len, 1)), 1);

        auto is_witness = [&](const SquareMatrix& b1, const SquareMatrix& b2) {
            const std::vector<double> bw1 = matvec(b1, q.w1);
            double pair1 = 0.0, nbw1 = 0.0;
            for (int i = 0; i < m1; ++i) {
                pair1 += q.v1[i] * bw1[i];
                nbw1 += bw1[i] * bw1[i];
            }
            if (std::abs(pair1) <= opts.margin_rel * nv1 * std::sqrt(nbw1)) return false;
            const std::vector<double> bw2 = matvec(b2, q.w2);
            double pair2 = 0.0, nbw2 = 0.0;
            for (int i = 0; i < m2; ++i) {
                pair2 += q.v2[i] * bw2[i];
                nbw2 += bw2[i] * bw2[i];
            }
            return std::abs(pair2) > opts.margin_rel * nv2 * std::sqrt(nbw2);
        };

        if (is_witness(stack1[0], stack2[0])) {
            found = true;
        } else if (max_len > 0) {
            int level = 0;
            path[0] = 1;
            while (!found) {
                const int letter = path[level];
                if (letter > alphabet) {
                    if (level == 0) break;
                    --level;
                    ++path[level];
                    continue;
                }
                multiply_into(stack1[level + 1], stack1[level], low.maps[letter - 1]);
                multiply_into(stack2[level + 1], stack2[level], high.maps[letter - 1]);
                if (is_witness(stack1[level + 1], stack2[level + 1])) {
                    found = true;
                    witness_len = level + 1;
                    break;
                }
                if (level + 1 == max_len) {
                    ++path[level];
                } else {
                    ++level;
                    path[level] = 1;
                }
            }
        }

        ++res.trials_run;
        if (!found) {
            res.counterexample_found = true;
            res.counterexample = q;
            return res;
        }
        res.longest_witness_length = std::max(res.longest_witness_length, witness_len);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Eigenvalue condition (E1/E2)
// ---------------------------------------------------------------------------

struct EigPairOptions {
    double distinct_rel = 1e-8;
    double e1_gap_rel = 1e-8;
    double e2_minor_rel = 1e-10;
};

struct EigenvalueConditionReport {
    int i = 1, j = 2;  // 1-based indices of the pair
    bool distinct_i = false, distinct_j = false;
    bool e1 = false;
    double e1_min_gap = 0.0;  // min relative eigenvalue-product gap over all grades
    bool e2 = false;
    double e2_min_minor = 0.0;  // min |minor| relative to its row-norm product
    bool pass = false;
    SquareMatrix basis_change;  // X with X e'_i = e_i
};

struct EigenvalueConditionSummary {
    bool satisfied = false;
    std::vector<EigenvalueConditionReport> pairs;
};

namespace detail {

/// Smallest relative gap among products of eigenvalues over k-subsets,
/// minimized over all grades k = 1..d.
inline double min_product_gap(const std::vector<Complex>& values) {
    const int d = static_cast<int>(values.size());
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= d; ++k) {
        const KSubsetBasis basis = KSubsetBasis::make(d, k);
        if (basis.size() < 2) continue;
        std::vector<Complex> products;
        products.reserve(basis.size());
        for (const std::vector<int>& subset : basis.subsets) {
            Complex p(1.0, 0.0);
            for (int idx : subset) p *= values[idx];
            products.push_back(p);
        }
        double scale = 0.0;
        for (const Complex& p : products) scale = std::max(scale, std::abs(p));
        if (scale == 0.0) return 0.0;
        for (std::size_t a = 0; a < products.size(); ++a)
            for (std::size_t b = a + 1; b < products.size(); ++b)
                worst = std::min(worst, std::abs(products[a] - products[b]) / scale);
    }
    return worst;
}

/// Smallest minor of X relative to the product of the full row norms of the
/// rows entering the minor (a Hadamard-type scale; full rows keep the 1x1
/// minors meaningful).
inline double min_relative_minor(const SquareMatrix& x) {
    const int d = x.n;
    std::vector<double> row_norm(d, 0.0);
    for (int i = 0; i < d; ++i) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) s += x(i, j) * x(i, j);
        row_norm[i] = std::sqrt(s);
    }
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= d; ++k) {
        const KSubsetBasis basis = KSubsetBasis::make(d, k);
        const SquareMatrix ext = exterior_power(x, k);
        for (int r = 0; r < basis.size(); ++r) {
            double scale = 1.0;
            for (int idx : basis.subsets[r]) scale *= row_norm[idx];
            if (scale == 0.0) return 0.0;
            for (int c = 0; c < basis.size(); ++c)
                worst = std::min(worst, std::abs(ext(r, c)) / scale);
        }
    }
    return worst;
}

inline EigenvalueConditionReport eigenvalue_condition_pair(const SquareMatrix& a1,
                                                           const SquareMatrix& a2,
                                                           const EigPairOptions& opts) {
    EigenvalueConditionReport rep;
    EigenOptions eopts;
    eopts.distinct_rel = opts.distinct_rel;
    const EigenDecomposition dec1 = eigen_decompose(a1, eopts);
    const EigenDecomposition dec2 = eigen_decompose(a2, eopts);
    rep.distinct_i = dec1.distinct && dec1.converged;
    rep.distinct_j = dec2.distinct && dec2.converged;

    rep.e1_min_gap = std::min(min_product_gap(dec1.values), min_product_gap(dec2.values));
    rep.e1 = rep.distinct_i && rep.distinct_j && rep.e1_min_gap > opts.e1_gap_rel;

    const RealEigenBasis reb1 = real_eigen_basis(dec1);
    const RealEigenBasis reb2 = real_eigen_basis(dec2);
    if (reb1.ok && reb2.ok) {
        rep.basis_change = reb1.basis * inverse(reb2.basis);
        rep.e2_min_minor = min_relative_minor(rep.basis_change);
        rep.e2 = rep.e2_min_minor > opts.e2_minor_rel;
    } else {
        rep.e2 = false;
        rep.e2_min_minor = 0.0;
    }
    rep.pass = rep.distinct_i && rep.distinct_j && rep.e1 && rep.e2;
    return rep;
}

}  // namespace detail

/// Per-pair E1/E2 verdicts: distinct eigenvalue products within each matrix
/// at every grade, and all minors of the eigenbasis change matrix nonzero.
/// The tuple satisfies the condition when some pair passes. Eigensolver
/// trouble on a pair downgrades that pair (distinct_spectrum false), it never
/// hard-fails the check.
inline EigenvalueConditionSummary check_eigenvalue_condition(const MatrixTuple& t,
                                                             const EigPairOptions& opts = {}) {
    EigenvalueConditionSummary summary;
    for (int i = 1; i <= t.count(); ++i) {
        for (int j = i + 1; j <= t.count(); ++j) {
            EigenvalueConditionReport rep =
                detail::eigenvalue_condition_pair(t.map(i), t.map(j), opts);
            rep.i = i;
            rep.j = j;
            summary.satisfied = summary.satisfied || rep.pass;
            summary.pairs.push_back(std::move(rep));
        }
    }
    return summary;
}

}  // namespace afflab
