#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "afflab/errors.hpp"
#include "afflab/matrix.hpp"

namespace afflab {

inline std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / i;
    return r;
}

/// The C(d,k) strictly increasing index k-tuples of {0,...,d-1} in
/// lexicographic order. This ordering is the basis convention for every
/// wedge-space representation in the library.
struct KSubsetBasis {
    int ambient = 0;
    int grade = 0;
    std::vector<std::vector<int>> subsets;

    static KSubsetBasis make(int d, int k) {
        if (d < 0 || k < 0 || k > d) throw InputError("KSubsetBasis: grade out of range");
        KSubsetBasis b;
        b.ambient = d;
        b.grade = k;
        std::vector<int> cur(k);
        for (int i = 0; i < k; ++i) cur[i] = i;
        if (k == 0) {
            b.subsets.push_back({});
            return b;
        }
        for (;;) {
            b.subsets.push_back(cur);
            int i = k - 1;
            while (i >= 0 && cur[i] == d - k + i) --i;
            if (i < 0) break;
            ++cur[i];
            for (int j = i + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
        }
        return b;
    }

    int size() const { return static_cast<int>(subsets.size()); }

    int index_of(std::span<const int> subset) const {
        const auto it = std::lower_bound(subsets.begin(), subsets.end(), subset,
                                         [](const std::vector<int>& lhs, std::span<const int> rhs) {
                                             return std::lexicographical_compare(lhs.begin(), lhs.end(),
                                                                                 rhs.begin(), rhs.end());
                                         });
        if (it == subsets.end() || !std::equal(it->begin(), it->end(), subset.begin(), subset.end()))
            throw InputError("KSubsetBasis: subset not in basis");
        return static_cast<int>(it - subsets.begin());
    }
};

/// Element of the k-th wedge space over R^d, in KSubsetBasis coordinates.
struct WedgeVector {
    KSubsetBasis basis;
    std::vector<double> coords;
};

namespace detail {

inline double minor_determinant(const SquareMatrix& m, std::span<const int> rows,
                                std::span<const int> cols) {
    const int k = static_cast<int>(rows.size());
    switch (k) {
        case 0:
            return 1.0;
        case 1:
            return m(rows[0], cols[0]);
        case 2:
            return m(rows[0], cols[0]) * m(rows[1], cols[1]) -
                   m(rows[0], cols[1]) * m(rows[1], cols[0]);
        case 3: {
            const double a = m(rows[0], cols[0]), b = m(rows[0], cols[1]), c = m(rows[0], cols[2]);
            const double d = m(rows[1], cols[0]), e = m(rows[1], cols[1]), f = m(rows[1], cols[2]);
            const double g = m(rows[2], cols[0]), h = m(rows[2], cols[1]), i = m(rows[2], cols[2]);
            return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
        }
        default: {
            SquareMatrix sub(k);
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) sub(i, j) = m(rows[i], cols[j]);
            return determinant(sub);
        }
    }
}

}  // namespace detail

/// Matrix of all k x k minors of A on the KSubsetBasis: the map induced by A
/// on the k-th wedge space. Grade 0 is the 1x1 identity, grade d is [det A].
inline SquareMatrix exterior_power(const SquareMatrix& m, int k) {
    require_finite(m, "exterior_power");
    if (k < 0 || k > m.n) throw InputError("exterior_power: grade out of range");
    if (k == 0) return SquareMatrix::identity(1);
    if (k == 1) return m;
    const KSubsetBasis basis = KSubsetBasis::make(m.n, k);
    SquareMatrix out(basis.size());
    for (int r = 0; r < basis.size(); ++r)
        for (int c = 0; c < basis.size(); ++c)
            out(r, c) = detail::minor_determinant(m, basis.subsets[r], basis.subsets[c]);
    return out;
}

/// Wedge product v_1 ^ ... ^ v_k of k vectors in R^d. The coordinate on the
/// subset (i_1 < ... < i_k) is the determinant of the selected components.
inline WedgeVector wedge_vectors(const std::vector<std::vector<double>>& vectors) {
    const int k = static_cast<int>(vectors.size());
    if (k < 1) throw InputError("wedge_vectors: need at least one vector");
    const int d = static_cast<int>(vectors.front().size());
    for (const auto& v : vectors)
        if (static_cast<int>(v.size()) != d)
            throw InputError("wedge_vectors: vectors have mismatched dimensions");
    if (k > d) throw InputError("wedge_vectors: more vectors than ambient dimension");
    for (const auto& v : vectors)
        for (double x : v)
            if (!std::isfinite(x)) throw InputError("wedge_vectors: non-finite component");

    WedgeVector w;
    w.basis = KSubsetBasis::make(d, k);
    w.coords.resize(w.basis.size());
    SquareMatrix sel(k);
    for (int idx = 0; idx < w.basis.size(); ++idx) {
        const auto& subset = w.basis.subsets[idx];
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < k; ++c) sel(r, c) = vectors[r][subset[c]];
        w.coords[idx] = determinant(sel);
    }
    return w;
}

inline double norm(const WedgeVector& w) {
    double s = 0.0;
    for (double x : w.coords) s += x * x;
    return std::sqrt(s);
}

/// Kronecker product on the product basis {e_i (x) e_j'}, i major, j minor.
inline SquareMatrix kronecker(const SquareMatrix& t, const SquareMatrix& u) {
    require_finite(t, "kronecker");
    require_finite(u, "kronecker");
    const int dt = t.n, du = u.n;
    SquareMatrix out(dt * du);
    for (int i = 0; i < dt; ++i)
        for (int j = 0; j < dt; ++j) {
            const double tij = t(i, j);
            if (tij == 0.0) continue;
            for (int p = 0; p < du; ++p)
                for (int q = 0; q < du; ++q) out(i * du + p, j * du + q) = tij * u(p, q);
        }
    return out;
}

}  // namespace afflab
