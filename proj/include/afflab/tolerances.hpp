#pragma once

#include <algorithm>
#include <cmath>

namespace afflab {

/// Global tolerance knobs. Matrix-identity checks use the mixed
/// absolute/relative rule max(absolute, relative * scale).
struct Tolerances {
    double absolute = 1e-12;
    double relative = 1e-9;
    double invertibility = 1e-12;      // |det| > invertibility * max|entry|^d
    double rank_relative = 1e-9;       // span-growth decisions in Gram-Schmidt closures
    double invariance_defect = 1e-8;   // subspace-angle bound for invariant-subspace certificates
    double eig_distinct = 1e-8;        // relative pairwise eigenvalue gap
    double e1_gap = 1e-8;              // relative eigenvalue-product gap
    double e2_minor = 1e-10;           // relative minor threshold (row-norm scaled)

    static Tolerances& global() {
        static Tolerances t;
        return t;
    }
};

inline bool nearly_equal(double x, double y, double scale) {
    const Tolerances& tol = Tolerances::global();
    return std::abs(x - y) <= std::max(tol.absolute, tol.relative * std::abs(scale));
}

}  // namespace afflab
