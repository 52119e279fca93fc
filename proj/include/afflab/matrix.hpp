#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "afflab/errors.hpp"
#include "afflab/tolerances.hpp"

namespace afflab {

/// Dense real square matrix, row-major. Sizes here are small (typically
/// d <= 8; exterior powers and tensor lifts stay below ~100), so everything
/// favors robustness and value semantics over asymptotics.
struct SquareMatrix {
    int n = 0;
    std::vector<double> a;

    SquareMatrix() = default;
    explicit SquareMatrix(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim, 0.0) {}
    SquareMatrix(int dim, std::vector<double> entries) : n(dim), a(std::move(entries)) {
        if (static_cast<std::size_t>(n) * n != a.size())
            throw InputError("SquareMatrix: entry count does not match dimension");
    }

    int dim() const { return n; }

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

    static SquareMatrix identity(int d) {
        SquareMatrix m(d);
        for (int i = 0; i < d; ++i) m(i, i) = 1.0;
        return m;
    }

    static SquareMatrix diagonal(std::span<const double> entries) {
        SquareMatrix m(static_cast<int>(entries.size()));
        for (int i = 0; i < m.n; ++i) m(i, i) = entries[i];
        return m;
    }

    bool operator==(const SquareMatrix& other) const = default;
};

inline bool all_finite(const SquareMatrix& m) {
    for (double x : m.a)
        if (!std::isfinite(x)) return false;
    return true;
}

inline void require_finite(const SquareMatrix& m, const char* what) {
    if (!all_finite(m)) throw InputError(std::string(what) + ": matrix has non-finite entries");
}

inline double max_abs_entry(const SquareMatrix& m) {
    double v = 0.0;
    for (double x : m.a) v = std::max(v, std::abs(x));
    return v;
}

/// out = lhs * rhs; `out` must not alias either operand.
inline void multiply_into(SquareMatrix& out, const SquareMatrix& lhs, const SquareMatrix& rhs) {
    const int d = lhs.n;
    if (out.n != d) out = SquareMatrix(d);
    const double* l = lhs.a.data();
    const double* r = rhs.a.data();
    double* o = out.a.data();
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) o[i * d + j] = 0.0;
        for (int k = 0; k < d; ++k) {
            const double lik = l[i * d + k];
            if (lik == 0.0) continue;
            const double* rrow = r + static_cast<std::size_t>(k) * d;
            double* orow = o + static_cast<std::size_t>(i) * d;
            for (int j = 0; j < d; ++j) orow[j] += lik * rrow[j];
        }
    }
}

inline SquareMatrix operator*(const SquareMatrix& lhs, const SquareMatrix& rhs) {
    if (lhs.n != rhs.n) throw InputError("matrix product: dimension mismatch");
    SquareMatrix out(lhs.n);
    multiply_into(out, lhs, rhs);
    return out;
}

inline SquareMatrix operator+(const SquareMatrix& x, const SquareMatrix& y) {
    if (x.n != y.n) throw InputError("matrix sum: dimension mismatch");
    SquareMatrix out = x;
    for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] += y.a[i];
    return out;
}

inline SquareMatrix operator-(const SquareMatrix& x, const SquareMatrix& y) {
    if (x.n != y.n) throw InputError("matrix difference: dimension mismatch");
    SquareMatrix out = x;
    for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] -= y.a[i];
    return out;
}

inline SquareMatrix scaled(const SquareMatrix& m, double c) {
    SquareMatrix out = m;
    for (double& x : out.a) x *= c;
    return out;
}

inline SquareMatrix transpose(const SquareMatrix& m) {
    SquareMatrix out(m.n);
    for (int i = 0; i < m.n; ++i)
        for (int j = 0; j < m.n; ++j) out(j, i) = m(i, j);
    return out;
}

inline double frobenius_inner(const SquareMatrix& x, const SquareMatrix& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.a.size(); ++i) s += x.a[i] * y.a[i];
    return s;
}

inline double frobenius_norm(const SquareMatrix& m) {
    return std::sqrt(frobenius_inner(m, m));
}

inline std::vector<double> matvec(const SquareMatrix& m, std::span<const double> v) {
    if (static_cast<int>(v.size()) != m.n) throw InputError("matvec: dimension mismatch");
    std::vector<double> out(m.n, 0.0);
    for (int i = 0; i < m.n; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.n; ++j) s += m(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

// ---------------------------------------------------------------------------
// LU with partial pivoting: determinants, inverses, linear solves.
// ---------------------------------------------------------------------------

struct LuFactorization {
    SquareMatrix lu;        // L below diagonal (unit), U on and above
    std::vector<int> piv;   // row permutation
    int sign = 1;
    bool singular = false;  // an exactly-zero pivot was hit
};

inline LuFactorization lu_factor(const SquareMatrix& m) {
    LuFactorization f;
    f.lu = m;
    const int d = m.n;
    f.piv.resize(d);
    for (int i = 0; i < d; ++i) f.piv[i] = i;
    for (int col = 0; col < d; ++col) {
        int pivot = col;
        double best = std::abs(f.lu(col, col));
        for (int r = col + 1; r < d; ++r) {
            const double v = std::abs(f.lu(r, col));
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (pivot != col) {
            for (int j = 0; j < d; ++j) std::swap(f.lu(col, j), f.lu(pivot, j));
            std::swap(f.piv[col], f.piv[pivot]);
            f.sign = -f.sign;
        }
        const double diag = f.lu(col, col);
        if (diag == 0.0) {
            f.singular = true;
            continue;
        }
        for (int r = col + 1; r < d; ++r) {
            const double factor = f.lu(r, col) / diag;
            f.lu(r, col) = factor;
            if (factor == 0.0) continue;
            for (int j = col + 1; j < d; ++j) f.lu(r, j) -= factor * f.lu(col, j);
        }
    }
    return f;
}

inline double determinant(const LuFactorization& f) {
    if (f.singular) return 0.0;
    double det = f.sign;
    for (int i = 0; i < f.lu.n; ++i) det *= f.lu(i, i);
    return det;
}

inline double determinant(const SquareMatrix& m) {
    require_finite(m, "determinant");
    if (m.n == 1) return m.a[0];
    if (m.n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    return determinant(lu_factor(m));
}

/// |det| > invertibility_tol * max|entry|^d.
inline bool numerically_invertible(const SquareMatrix& m) {
    require_finite(m, "numerically_invertible");
    const double scale = max_abs_entry(m);
    if (scale == 0.0) return false;
    return std::abs(determinant(m)) > Tolerances::global().invertibility * std::pow(scale, m.n);
}

inline std::vector<double> lu_solve(const LuFactorization& f, std::span<const double> rhs) {
    const int d = f.lu.n;
    if (f.singular) throw InputError("lu_solve: matrix is singular");
    std::vector<double> x(d);
    for (int i = 0; i < d; ++i) x[i] = rhs[f.piv[i]];
    for (int i = 1; i < d; ++i) {
        double s = x[i];
        for (int j = 0; j < i; ++j) s -= f.lu(i, j) * x[j];
        x[i] = s;
    }
    for (int i = d - 1; i >= 0; --i) {
        double s = x[i];
        for (int j = i + 1; j < d; ++j) s -= f.lu(i, j) * x[j];
        x[i] = s / f.lu(i, i);
    }
    return x;
}

inline SquareMatrix inverse(const SquareMatrix& m) {
    require_finite(m, "inverse");
    const LuFactorization f = lu_factor(m);
    if (f.singular) throw InputError("inverse: matrix is singular");
    const int d = m.n;
    SquareMatrix out(d);
    std::vector<double> e(d, 0.0);
    for (int col = 0; col < d; ++col) {
        e.assign(d, 0.0);
        e[col] = 1.0;
        const std::vector<double> x = lu_solve(f, e);
        for (int i = 0; i < d; ++i) out(i, col) = x[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Singular values by one-sided Jacobi (cyclic sweeps orthogonalizing column
// pairs, i.e. implicit Jacobi on A^T A). Matrices are tiny, so we take the
// high relative accuracy of Jacobi over anything faster.
// ---------------------------------------------------------------------------

namespace detail {

inline void singular_values_2x2(const SquareMatrix& m, std::vector<double>& out) {
    const double a = m.a[0], b = m.a[1], c = m.a[2], d = m.a[3];
    const double t = a * a + b * b + c * c + d * d;
    const double det = a * d - b * c;
    const double disc = std::sqrt(std::max(0.0, t * t - 4.0 * det * det));
    const double alpha1 = std::sqrt(0.5 * (t + disc));
    const double alpha2 = alpha1 > 0.0 ? std::abs(det) / alpha1 : 0.0;
    out.assign({alpha1, alpha2});
}

inline void singular_values_jacobi(const SquareMatrix& m, std::vector<double>& out) {
    const int d = m.n;
    std::vector<double> w = m.a;  // working copy, columns orthogonalized in place
    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < d - 1; ++p) {
            for (int q = p + 1; q < d; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (int i = 0; i < d; ++i) {
                    const double xp = w[static_cast<std::size_t>(i) * d + p];
                    const double xq = w[static_cast<std::size_t>(i) * d + q];
                    app += xp * xp;
                    aqq += xq * xq;
                    apq += xp * xq;
                }
                if (std::abs(apq) <= 1e-15 * std::sqrt(app * aqq) || apq == 0.0) continue;
                rotated = true;
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = t * cs;
                for (int i = 0; i < d; ++i) {
                    double& xp = w[static_cast<std::size_t>(i) * d + p];
                    double& xq = w[static_cast<std::size_t>(i) * d + q];
                    const double op = xp, oq = xq;
                    xp = cs * op - sn * oq;
                    xq = sn * op + cs * oq;
                }
            }
        }
        if (!rotated) break;
    }
    out.assign(d, 0.0);
    for (int j = 0; j < d; ++j) {
        double s = 0.0;
        for (int i = 0; i < d; ++i) {
            const double x = w[static_cast<std::size_t>(i) * d + j];
            s += x * x;
        }
        out[j] = std::sqrt(s);
    }
    std::sort(out.begin(), out.end(), std::greater<>());
}

}  // namespace detail

/// Singular values alpha_1 >= ... >= alpha_d >= 0.
inline void singular_values_into(const SquareMatrix& m, std::vector<double>& out) {
    if (m.n == 1) {
        out.assign(1, std::abs(m.a[0]));
        return;
    }
    if (m.n == 2) {
        detail::singular_values_2x2(m, out);
        return;
    }
    detail::singular_values_jacobi(m, out);
}

inline std::vector<double> singular_values(const SquareMatrix& m) {
    require_finite(m, "singular_values");
    std::vector<double> out;
    singular_values_into(m, out);
    return out;
}

/// Largest singular value.
inline double operator_norm(const SquareMatrix& m) {
    require_finite(m, "operator_norm");
    std::vector<double> sv;
    singular_values_into(m, sv);
    return sv.front();
}

}  // namespace afflab
