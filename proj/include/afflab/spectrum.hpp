#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "afflab/errors.hpp"
#include "afflab/matrix.hpp"
#include "afflab/tolerances.hpp"

namespace afflab {

using Complex = std::complex<double>;

struct EigenOptions {
    double distinct_rel = 1e-8;  // pairwise |lambda_i - lambda_j| > distinct_rel * spectral scale
    int refine_rounds = 4;
};

/// Full spectral data of a real matrix. Eigenvalues are canonically ordered
/// (real part descending, then imaginary part descending, so the +i member of
/// a conjugate pair comes first); eigenvectors are unit vectors with the
/// largest-modulus component made real positive.
struct EigenDecomposition {
    std::vector<Complex> values;
    std::vector<std::vector<Complex>> vectors;
    bool converged = true;   // residuals ||Av - lambda v|| all small
    bool distinct = true;    // pairwise gaps clear the tolerance
    double min_gap = 0.0;    // smallest pairwise |lambda_i - lambda_j|
    double max_residual = 0.0;
    double scale = 0.0;      // spectral scale used for the tolerances
};

namespace detail {

// --- complex dense LU -------------------------------------------------------

struct CLu {
    int d = 0;
    std::vector<Complex> lu;
    std::vector<int> piv;
    bool singular = false;
};

inline CLu clu_factor(const std::vector<Complex>& m, int d) {
    CLu f;
    f.d = d;
    f.lu = m;
    f.piv.resize(d);
    for (int i = 0; i < d; ++i) f.piv[i] = i;
    for (int col = 0; col < d; ++col) {
        int pivot = col;
        double best = std::abs(f.lu[static_cast<std::size_t>(col) * d + col]);
        for (int r = col + 1; r < d; ++r) {
            const double v = std::abs(f.lu[static_cast<std::size_t>(r) * d + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (pivot != col) {
            for (int j = 0; j < d; ++j)
                std::swap(f.lu[static_cast<std::size_t>(col) * d + j],
                          f.lu[static_cast<std::size_t>(pivot) * d + j]);
            std::swap(f.piv[col], f.piv[pivot]);
        }
        const Complex diag = f.lu[static_cast<std::size_t>(col) * d + col];
        if (std::abs(diag) == 0.0) {
            f.singular = true;
            continue;
        }
        for (int r = col + 1; r < d; ++r) {
            const Complex factor = f.lu[static_cast<std::size_t>(r) * d + col] / diag;
            f.lu[static_cast<std::size_t>(r) * d + col] = factor;
            if (factor == Complex(0.0, 0.0)) continue;
            for (int j = col + 1; j < d; ++j)
                f.lu[static_cast<std::size_t>(r) * d + j] -=
                    factor * f.lu[static_cast<std::size_t>(col) * d + j];
        }
    }
    return f;
}

inline std::vector<Complex> clu_solve(const CLu& f, const std::vector<Complex>& rhs) {
    const int d = f.d;
    std::vector<Complex> x(d);
    for (int i = 0; i < d; ++i) x[i] = rhs[f.piv[i]];
    for (int i = 1; i < d; ++i) {
        Complex s = x[i];
        for (int j = 0; j < i; ++j) s -= f.lu[static_cast<std::size_t>(i) * d + j] * x[j];
        x[i] = s;
    }
    for (int i = d - 1; i >= 0; --i) {
        Complex s = x[i];
        for (int j = i + 1; j < d; ++j) s -= f.lu[static_cast<std::size_t>(i) * d + j] * x[j];
        x[i] = s / f.lu[static_cast<std::size_t>(i) * d + i];
    }
    return x;
}

inline double cvec_norm(const std::vector<Complex>& v) {
    double s = 0.0;
    for (const Complex& z : v) s += std::norm(z);
    return std::sqrt(s);
}

// --- closed-form characteristic roots for d <= 3 ----------------------------

inline void quadratic_roots(double b, double c, std::vector<Complex>& out) {
    // lambda^2 + b lambda + c
    const double disc = b * b - 4.0 * c;
    if (disc >= 0.0) {
        const double r = std::sqrt(disc);
        // avoid cancellation: compute the large-magnitude root first
        const double q = -0.5 * (b + (b >= 0.0 ? r : -r));
        const double x1 = q;
        const double x2 = (q != 0.0) ? c / q : -b - q;
        out.push_back(Complex(x1, 0.0));
        out.push_back(Complex(x2, 0.0));
    } else {
        const double re = -0.5 * b;
        const double im = 0.5 * std::sqrt(-disc);
        out.push_back(Complex(re, im));
        out.push_back(Complex(re, -im));
    }
}

inline void cubic_roots(double a2, double a1, double a0, std::vector<Complex>& out) {
    // lambda^3 + a2 lambda^2 + a1 lambda + a0
    const double shift = -a2 / 3.0;
    const double p = a1 - a2 * a2 / 3.0;
    const double q = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
    const double half_q_sq = 0.25 * q * q;
    const double p_cubed_27 = p * p * p / 27.0;
    const double radicand = half_q_sq + p_cubed_27;  // > 0 iff one real + complex pair

    std::vector<Complex> roots;
    if (p == 0.0 && q == 0.0) {
        roots.assign(3, Complex(shift, 0.0));
    } else if (radicand > 0.0) {
        const double sq = std::sqrt(radicand);
        const double big = std::abs(q) / 2.0 + sq;
        const double a = -(q >= 0.0 ? 1.0 : -1.0) * std::cbrt(big);
        const double b = (a != 0.0) ? -p / (3.0 * a) : 0.0;
        roots.push_back(Complex(a + b + shift, 0.0));
        const double re = -(a + b) / 2.0 + shift;
        const double im = std::sqrt(3.0) / 2.0 * std::abs(a - b);
        roots.push_back(Complex(re, im));
        roots.push_back(Complex(re, -im));
    } else {
        const double pn = std::min(p, 0.0);
        const double m = 2.0 * std::sqrt(-pn / 3.0);
        if (m == 0.0) {
            roots.assign(3, Complex(shift, 0.0));
        } else {
            const double arg = std::clamp(3.0 * q / (pn * m), -1.0, 1.0);
            const double theta = std::acos(arg) / 3.0;
            for (int k = 0; k < 3; ++k)
                roots.push_back(
                    Complex(m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0) + shift, 0.0));
        }
    }
    // Newton polish on the monic cubic; fixes closed-form roundoff.
    for (Complex& z : roots) {
        for (int it = 0; it < 3; ++it) {
            const Complex f = ((z + a2) * z + a1) * z + a0;
            const Complex df = (3.0 * z + 2.0 * a2) * z + a1;
            if (std::abs(df) == 0.0) break;
            z -= f / df;
        }
    }
    out.insert(out.end(), roots.begin(), roots.end());
}

// --- Hessenberg + complex shifted QR for d >= 4 -----------------------------

inline SquareMatrix hessenberg(SquareMatrix m) {
    const int d = m.n;
    std::vector<double> v(d);
    for (int k = 0; k + 2 < d; ++k) {
        double norm_x = 0.0;
        for (int i = k + 1; i < d; ++i) norm_x += m(i, k) * m(i, k);
        norm_x = std::sqrt(norm_x);
        if (norm_x == 0.0) continue;
        const double x0 = m(k + 1, k);
        const double alpha = (x0 >= 0.0 ? -norm_x : norm_x);
        double vn = 0.0;
        for (int i = k + 1; i < d; ++i) {
            v[i] = m(i, k);
            if (i == k + 1) v[i] -= alpha;
            vn += v[i] * v[i];
        }
        vn = std::sqrt(vn);
        if (vn == 0.0) continue;
        for (int i = k + 1; i < d; ++i) v[i] /= vn;
        // left: m -= 2 v (v^T m) on rows k+1.., all columns
        for (int j = 0; j < d; ++j) {
            double s = 0.0;
            for (int i = k + 1; i < d; ++i) s += v[i] * m(i, j);
            s *= 2.0;
            for (int i = k + 1; i < d; ++i) m(i, j) -= s * v[i];
        }
        // right: m -= 2 (m v) v^T on columns k+1.., all rows
        for (int i = 0; i < d; ++i) {
            double s = 0.0;
            for (int j = k + 1; j < d; ++j) s += m(i, j) * v[j];
            s *= 2.0;
            for (int j = k + 1; j < d; ++j) m(i, j) -= s * v[j];
        }
        for (int i = k + 2; i < d; ++i) m(i, k) = 0.0;
    }
    return m;
}

struct CGivens {
    double c = 1.0;
    Complex s{0.0, 0.0};
};

inline CGivens cgivens(Complex f, Complex g) {
    CGivens r;
    const double af = std::abs(f), ag = std::abs(g);
    if (ag == 0.0) return r;
    if (af == 0.0) {
        r.c = 0.0;
        r.s = std::conj(g) / ag;
        return r;
    }
    const double denom = std::sqrt(af * af + ag * ag);
    r.c = af / denom;
    r.s = (f / af) * std::conj(g) / denom;
    return r;
}

/// Eigenvalues of a real matrix via explicit single-shift QR on the complex
/// Hessenberg form with Wilkinson shifts. Returns false when the iteration
/// budget runs out (diagonal entries are still reported as approximations).
inline bool qr_eigenvalues(const SquareMatrix& a_in, std::vector<Complex>& out) {
    const int d = a_in.n;
    const SquareMatrix hreal = hessenberg(a_in);
    std::vector<Complex> h(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) h[static_cast<std::size_t>(i) * d + j] = Complex(hreal(i, j), 0.0);

    auto at = [&](int i, int j) -> Complex& { return h[static_cast<std::size_t>(i) * d + j]; };
    out.assign(d, Complex(0.0, 0.0));

    double hscale = 0.0;
    for (const Complex& z : h) hscale = std::max(hscale, std::abs(z));
    if (hscale == 0.0) return true;
    const double eps = 2.0 * std::numeric_limits<double>::epsilon();

    int m = d - 1;
    int stagnation = 0;
    int total = 0;
    const int max_total = 80 * d;
    std::vector<CGivens> rot(d);
    bool healthy = true;

    while (m > 0) {
        if (total++ > max_total) {
            healthy = false;
            break;
        }
        for (int i = 1; i <= m; ++i) {
            if (std::abs(at(i, i - 1)) <=
                eps * (std::abs(at(i - 1, i - 1)) + std::abs(at(i, i))) + 1e-300)
                at(i, i - 1) = Complex(0.0, 0.0);
        }
        if (at(m, m - 1) == Complex(0.0, 0.0)) {
            out[m] = at(m, m);
            --m;
            stagnation = 0;
            continue;
        }
        int l = m - 1;
        while (l > 0 && at(l, l - 1) != Complex(0.0, 0.0)) --l;

        Complex mu;
        ++stagnation;
        if (stagnation % 14 == 0) {
            mu = at(m, m) + std::abs(at(m, m - 1)) * Complex(1.31, 0.71);
        } else {
            const Complex a = at(m - 1, m - 1), b = at(m - 1, m);
            const Complex c = at(m, m - 1), dd = at(m, m);
            const Complex half_tr = 0.5 * (a + dd);
            const Complex disc = std::sqrt(half_tr * half_tr - (a * dd - b * c));
            const Complex mu1 = half_tr + disc, mu2 = half_tr - disc;
            mu = (std::abs(mu1 - dd) < std::abs(mu2 - dd)) ? mu1 : mu2;
        }

        for (int i = l; i <= m; ++i) at(i, i) -= mu;
        for (int i = l; i < m; ++i) {
            rot[i] = cgivens(at(i, i), at(i + 1, i));
            const CGivens& g = rot[i];
            for (int j = i; j <= m; ++j) {
                const Complex h1 = at(i, j), h2 = at(i + 1, j);
                at(i, j) = g.c * h1 + g.s * h2;
                at(i + 1, j) = -std::conj(g.s) * h1 + g.c * h2;
            }
        }
        for (int i = l; i < m; ++i) {
            const CGivens& g = rot[i];
            for (int r = l; r <= m; ++r) {
                const Complex h1 = at(r, i), h2 = at(r, i + 1);
                at(r, i) = g.c * h1 + std::conj(g.s) * h2;
                at(r, i + 1) = -g.s * h1 + g.c * h2;
            }
        }
        for (int i = l; i <= m; ++i) at(i, i) += mu;
    }
    if (m == 0) out[0] = at(0, 0);
    if (!healthy)
        for (int i = 0; i <= m; ++i) out[i] = at(i, i);
    return healthy;
}

inline std::vector<Complex> initial_eigenvalues(const SquareMatrix& m, bool& healthy) {
    const int d = m.n;
    std::vector<Complex> vals;
    healthy = true;
    if (d == 1) {
        vals.push_back(Complex(m.a[0], 0.0));
    } else if (d == 2) {
        quadratic_roots(-(m(0, 0) + m(1, 1)), m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0), vals);
    } else if (d == 3) {
        const double tr = m(0, 0) + m(1, 1) + m(2, 2);
        const double m2 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) + m(0, 0) * m(2, 2) -
                          m(0, 2) * m(2, 0) + m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
        cubic_roots(-tr, m2, -determinant(m), vals);
    } else {
        healthy = qr_eigenvalues(m, vals);
    }
    return vals;
}

struct RefinedPair {
    Complex value;
    std::vector<Complex> vector;
    double residual = 0.0;
};

/// Inverse iteration with Rayleigh-quotient updates, starting from the
/// approximation `lambda0`. Deterministic start vector.
inline RefinedPair refine_eigenpair(const SquareMatrix& a, Complex lambda0, double scale,
                                    int rounds) {
    const int d = a.n;
    RefinedPair out;
    std::vector<Complex> x(d);
    for (int i = 0; i < d; ++i) x[i] = Complex(0.35 + std::cos(0.7 * (i + 1)), 0.0);
    {
        const double nx = cvec_norm(x);
        for (Complex& z : x) z /= nx;
    }
    Complex lambda = lambda0;
    std::vector<Complex> b(static_cast<std::size_t>(d) * d);
    auto apply_a = [&](const std::vector<Complex>& v) {
        std::vector<Complex> r(d, Complex(0.0, 0.0));
        for (int i = 0; i < d; ++i) {
            Complex s(0.0, 0.0);
            for (int j = 0; j < d; ++j) s += a(i, j) * v[j];
            r[i] = s;
        }
        return r;
    };
    for (int it = 0; it < rounds; ++it) {
        Complex shift = lambda;
        for (int attempt = 0; attempt < 3; ++attempt) {
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    b[static_cast<std::size_t>(i) * d + j] =
                        Complex(a(i, j), 0.0) - (i == j ? shift : Complex(0.0, 0.0));
            const CLu f = clu_factor(b, d);
            if (!f.singular) {
                std::vector<Complex> y = clu_solve(f, x);
                const double ny = cvec_norm(y);
                if (std::isfinite(ny) && ny > 0.0) {
                    for (Complex& z : y) z /= ny;
                    x = std::move(y);
                    break;
                }
            }
            shift += Complex(1e-13 * scale + 1e-290, 1e-13 * scale);
        }
        const std::vector<Complex> ax = apply_a(x);
        Complex num(0.0, 0.0);
        for (int i = 0; i < d; ++i) num += std::conj(x[i]) * ax[i];
        if (std::abs(num - lambda) <= 1e-15 * scale && it >= 1) {
            lambda = num;
            break;
        }
        lambda = num;
    }
    const std::vector<Complex> ax = apply_a(x);
    double res = 0.0;
    for (int i = 0; i < d; ++i) res += std::norm(ax[i] - lambda * x[i]);
    out.value = lambda;
    out.vector = std::move(x);
    out.residual = std::sqrt(res);
    return out;
}

inline void phase_normalize(std::vector<Complex>& v) {
    int arg = 0;
    double best = 0.0;
    for (int i = 0; i < static_cast<int>(v.size()); ++i) {
        const double m = std::abs(v[i]);
        if (m > best) {
            best = m;
            arg = i;
        }
    }
    if (best == 0.0) return;
    const Complex phase = v[arg] / best;
    for (Complex& z : v) z /= phase;
}

}  // namespace detail

/// Spectral decomposition of a real square matrix. d <= 3 goes through
/// characteristic-polynomial closed forms, larger sizes through a Hessenberg
/// QR iteration; every eigenpair is then polished by inverse iteration.
/// Defective or ill-conditioned spectra are reported through the `distinct`
/// and `converged` flags rather than as errors.
inline EigenDecomposition eigen_decompose(const SquareMatrix& m, const EigenOptions& opts = {}) {
    require_finite(m, "eigen_decompose");
    const int d = m.n;
    EigenDecomposition dec;
    bool healthy = true;
    std::vector<Complex> initial = detail::initial_eigenvalues(m, healthy);

    double scale = 0.0;
    for (const Complex& z : initial) scale = std::max(scale, std::abs(z));
    scale = std::max(scale, 1e-300);

    dec.values.resize(d);
    dec.vectors.resize(d);
    for (int i = 0; i < d; ++i) {
        detail::RefinedPair p = detail::refine_eigenpair(m, initial[i], scale, opts.refine_rounds);
        dec.values[i] = p.value;
        dec.vectors[i] = std::move(p.vector);
        dec.max_residual = std::max(dec.max_residual, p.residual);
    }

    scale = 0.0;
    for (const Complex& z : dec.values) scale = std::max(scale, std::abs(z));
    scale = std::max(scale, 1e-300);
    dec.scale = scale;

    // Realize eigenvalues with negligible imaginary part, then enforce exact
    // conjugate symmetry on the remaining pairs.
    for (int i = 0; i < d; ++i)
        if (std::abs(dec.values[i].imag()) <= 1e-10 * scale)
            dec.values[i] = Complex(dec.values[i].real(), 0.0);
    std::vector<bool> matched(d, false);
    for (int i = 0; i < d; ++i) {
        if (matched[i] || dec.values[i].imag() <= 0.0) continue;
        int best = -1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (int j = 0; j < d; ++j) {
            if (j == i || matched[j] || dec.values[j].imag() >= 0.0) continue;
            const double dist = std::abs(std::conj(dec.values[i]) - dec.values[j]);
            if (dist < best_dist) {
                best_dist = dist;
                best = j;
            }
        }
        if (best >= 0 && best_dist <= 1e-6 * scale) {
            const Complex z = 0.5 * (dec.values[i] + std::conj(dec.values[best]));
            dec.values[i] = z;
            dec.values[best] = std::conj(z);
            dec.vectors[best] = dec.vectors[i];
            for (Complex& c : dec.vectors[best]) c = std::conj(c);
            matched[i] = matched[best] = true;
        }
    }

    for (auto& v : dec.vectors) detail::phase_normalize(v);

    std::vector<int> order(d);
    for (int i = 0; i < d; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int x, int y) {
        if (dec.values[x].real() != dec.values[y].real())
            return dec.values[x].real() > dec.values[y].real();
        return dec.values[x].imag() > dec.values[y].imag();
    });
    {
        std::vector<Complex> vals(d);
        std::vector<std::vector<Complex>> vecs(d);
        for (int i = 0; i < d; ++i) {
            vals[i] = dec.values[order[i]];
            vecs[i] = std::move(dec.vectors[order[i]]);
        }
        dec.values = std::move(vals);
        dec.vectors = std::move(vecs);
    }

    dec.min_gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            dec.min_gap = std::min(dec.min_gap, std::abs(dec.values[i] - dec.values[j]));
    if (d < 2) dec.min_gap = std::numeric_limits<double>::infinity();
    dec.distinct = dec.min_gap > opts.distinct_rel * scale;
    dec.converged = healthy && dec.max_residual <= 1e-7 * std::max(frobenius_norm(m), 1e-300);
    return dec;
}

/// One block of a real eigenstructure: either a real eigenvector column or
/// the (Re v, Im v) column pair spanning a conjugate pair's invariant plane.
struct EigenComponent {
    bool complex_pair = false;
    Complex value;
    int first_column = 0;
    int width = 1;
};

struct RealEigenBasis {
    bool ok = false;
    SquareMatrix basis;  // columns in canonical eigenvalue order
    std::vector<EigenComponent> components;
    std::string issue;
};

/// Real basis adapted to the eigenstructure: real eigenvectors contribute one
/// column each; a conjugate pair contributes Re(v), Im(v) of its +i member,
/// in that order.
inline RealEigenBasis real_eigen_basis(const EigenDecomposition& dec) {
    const int d = static_cast<int>(dec.values.size());
    RealEigenBasis out;
    out.basis = SquareMatrix(d);
    std::vector<bool> used(d, false);
    int col = 0;
    for (int i = 0; i < d; ++i) {
        if (used[i]) continue;
        const Complex lambda = dec.values[i];
        if (lambda.imag() == 0.0) {
            EigenComponent comp;
            comp.complex_pair = false;
            comp.value = lambda;
            comp.first_column = col;
            comp.width = 1;
            double nrm = 0.0;
            for (int r = 0; r < d; ++r) nrm += dec.vectors[i][r].real() * dec.vectors[i][r].real();
            nrm = std::sqrt(nrm);
            if (nrm == 0.0) {
                out.issue = "degenerate real eigenvector";
                return out;
            }
            for (int r = 0; r < d; ++r) out.basis(r, col) = dec.vectors[i][r].real() / nrm;
            used[i] = true;
            ++col;
            out.components.push_back(comp);
            continue;
        }
        if (lambda.imag() < 0.0) {
            // partner of an already-seen +i member, or an unmatched stray
            int partner = -1;
            for (int j = 0; j < d; ++j)
                if (!used[j] && j != i && dec.values[j] == std::conj(lambda)) partner = j;
            if (partner < 0) {
                out.issue = "unpaired complex eigenvalue";
                return out;
            }
            continue;  // handled when the +i member is processed
        }
        // +i member of a pair
        int partner = -1;
        for (int j = 0; j < d; ++j)
            if (!used[j] && j != i && dec.values[j] == std::conj(lambda)) partner = j;
        if (partner < 0) {
            out.issue = "unpaired complex eigenvalue";
            return out;
        }
        EigenComponent comp;
        comp.complex_pair = true;
        comp.value = lambda;
        comp.first_column = col;
        comp.width = 2;
        // Principal-axes phase: rotate so sum_r v_r^2 is real positive, i.e.
        // Re(v) and Im(v) are the orthogonal semi-axes of the invariant-plane
        // ellipse with the real part on the major axis. Pinning a component
        // phase instead would lock rows of different eigenbases to a common
        // phase and plant exact zeros into the basis-change minors. Isotropic
        // vectors (pure rotations) have no preferred axis; keep them as-is.
        std::vector<Complex> w = dec.vectors[i];
        Complex square_sum(0.0, 0.0);
        double weight = 0.0;
        for (const Complex& z : w) {
            square_sum += z * z;
            weight += std::norm(z);
        }
        if (std::abs(square_sum) > 1e-12 * weight) {
            const Complex phase = std::polar(1.0, -0.5 * std::arg(square_sum));
            for (Complex& z : w) z *= phase;
        }
        int arg_max = 0;
        double best = -1.0;
        for (int r = 0; r < d; ++r)
            if (std::abs(w[r].real()) > best) {
                best = std::abs(w[r].real());
                arg_max = r;
            }
        if (w[arg_max].real() < 0.0)
            for (Complex& z : w) z = -z;
        for (int r = 0; r < d; ++r) {
            out.basis(r, col) = w[r].real();
            out.basis(r, col + 1) = w[r].imag();
        }
        used[i] = used[partner] = true;
        col += 2;
        out.components.push_back(comp);
    }
    if (col != d) {
        out.issue = "eigenbasis has wrong column count";
        return out;
    }
    if (!numerically_invertible(out.basis)) {
        out.issue = "eigenbasis numerically singular";
        return out;
    }
    out.ok = true;
    return out;
}

}  // namespace afflab
