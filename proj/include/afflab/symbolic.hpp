#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "afflab/errors.hpp"
#include "afflab/matrix.hpp"

namespace afflab {

/// Finite word over the alphabet {1,...,N}. The empty word is the
/// concatenation identity and indexes the trivial cylinder.
struct Word {
    std::vector<int> letters;

    Word() = default;
    explicit Word(std::vector<int> ls) : letters(std::move(ls)) {}
    static Word empty() { return Word{}; }

    std::size_t length() const { return letters.size(); }
    bool operator==(const Word&) const = default;

    std::string str() const {
        std::ostringstream os;
        for (std::size_t i = 0; i < letters.size(); ++i) {
            if (i) os << '.';
            os << letters[i];
        }
        return os.str();
    }
};

/// Drops the first letter.
inline Word shift(const Word& w) {
    if (w.letters.empty()) throw InputError("shift: empty word");
    return Word(std::vector<int>(w.letters.begin() + 1, w.letters.end()));
}

/// Ordered tuple (A_1,...,A_N) of invertible d x d matrices. N >= 2 for the
/// standard constructor; drop experiments produce single-map remainders via
/// create_reduced.
struct MatrixTuple {
    int dim = 0;
    std::vector<SquareMatrix> maps;
    std::optional<double> contraction_cap;
    bool reduced_single = false;

    int count() const { return static_cast<int>(maps.size()); }
    const SquareMatrix& map(int letter) const {  // 1-based letter
        if (letter < 1 || letter > count()) throw InputError("MatrixTuple: letter out of range");
        return maps[static_cast<std::size_t>(letter - 1)];
    }

    static MatrixTuple create(std::vector<SquareMatrix> ms, std::optional<double> cap = {}) {
        if (ms.size() < 2) throw InputError("MatrixTuple: need at least two maps");
        return validate(std::move(ms), cap, false);
    }

    /// Same validation but N = 1 is allowed; used for sub-tuples obtained by
    /// removing maps from an N = 2 tuple.
    static MatrixTuple create_reduced(std::vector<SquareMatrix> ms, std::optional<double> cap = {}) {
        if (ms.empty()) throw InputError("MatrixTuple: need at least one map");
        return validate(std::move(ms), cap, true);
    }

    MatrixTuple without(int letter) const {  // 1-based
        if (letter < 1 || letter > count()) throw InputError("MatrixTuple: letter out of range");
        std::vector<SquareMatrix> ms;
        for (int i = 0; i < count(); ++i)
            if (i != letter - 1) ms.push_back(maps[i]);
        return ms.size() >= 2 ? create(std::move(ms), contraction_cap)
                              : create_reduced(std::move(ms), contraction_cap);
    }

private:
    static MatrixTuple validate(std::vector<SquareMatrix> ms, std::optional<double> cap,
                                bool reduced) {
        MatrixTuple t;
        t.dim = ms.front().n;
        t.reduced_single = reduced && ms.size() == 1;
        for (std::size_t i = 0; i < ms.size(); ++i) {
            if (ms[i].n != t.dim) throw InputError("MatrixTuple: mixed matrix dimensions");
            require_finite(ms[i], "MatrixTuple");
            if (!numerically_invertible(ms[i]))
                throw InputError("MatrixTuple: map " + std::to_string(i + 1) +
                                 " is numerically singular");
        }
        if (cap) {
            if (*cap <= 0.0) throw InputError("MatrixTuple: contraction cap must be positive");
            for (std::size_t i = 0; i < ms.size(); ++i)
                if (operator_norm(ms[i]) >= *cap)
                    throw InputError("MatrixTuple: map " + std::to_string(i + 1) +
                                     " violates the declared contraction cap");
        }
        t.maps = std::move(ms);
        t.contraction_cap = cap;
        return t;
    }
};

inline double max_operator_norm(const MatrixTuple& t) {
    double m = 0.0;
    for (const SquareMatrix& a : t.maps) m = std::max(m, operator_norm(a));
    return m;
}

/// A_w = A_{w_1} ... A_{w_n}; the empty word gives the identity.
inline SquareMatrix word_product(const MatrixTuple& t, const Word& w) {
    SquareMatrix prod = SquareMatrix::identity(t.dim);
    SquareMatrix tmp(t.dim);
    for (int letter : w.letters) {
        multiply_into(tmp, prod, t.map(letter));
        std::swap(prod, tmp);
    }
    return prod;
}

inline constexpr std::uint64_t kDefaultWordBudget = 10'000'000;

/// N^n, guarded against the enumeration budget.
inline std::uint64_t words_at_depth(int alphabet, int depth, std::uint64_t budget) {
    std::uint64_t count = 1;
    for (int i = 0; i < depth; ++i) {
        if (count > budget / static_cast<std::uint64_t>(alphabet) + 1) {
            std::ostringstream os;
            os << "word enumeration budget exceeded: " << alphabet << "^" << depth << " > budget "
               << budget;
            throw ResourceError(os.str());
        }
        count *= static_cast<std::uint64_t>(alphabet);
    }
    if (count > budget) {
        std::ostringstream os;
        os << "word enumeration budget exceeded: " << alphabet << "^" << depth << " = " << count
           << " > budget " << budget;
        throw ResourceError(os.str());
    }
    return count;
}

namespace detail {

template <typename Visitor>
bool invoke_visitor(Visitor&& v, std::span<const int> word, const SquareMatrix& product) {
    if constexpr (std::is_convertible_v<std::invoke_result_t<Visitor&, std::span<const int>,
                                                             const SquareMatrix&>,
                                        bool>) {
        return static_cast<bool>(v(word, product));
    } else {
        v(word, product);
        return true;
    }
}

template <typename Visitor>
bool fold_impl(const MatrixTuple& t, int depth, Visitor&& visit, bool leaves_only,
               std::uint64_t budget) {
    if (depth < 0) throw InputError("fold: negative depth");
    words_at_depth(t.count(), depth, budget);

    const int d = t.dim;
    const int alphabet = t.count();
    std::vector<SquareMatrix> stack(static_cast<std::size_t>(depth) + 1, SquareMatrix(d));
    stack[0] = SquareMatrix::identity(d);
    std::vector<int> path(static_cast<std::size_t>(depth), 0);

    // Depth-first with prefix reuse: one multiplication per visited node.
    int level = 0;
    if (!leaves_only || depth == 0) {
        if (!invoke_visitor(visit, std::span<const int>(path.data(), 0), stack[0])) return false;
    }
    if (depth == 0) return true;
    path[0] = 1;
    for (;;) {
        const int letter = path[level];
        if (letter > alphabet) {
            if (level == 0) return true;
            --level;
            ++path[level];
            continue;
        }
        multiply_into(stack[level + 1], stack[level], t.maps[letter - 1]);
        const int node_level = level + 1;
        if (!leaves_only || node_level == depth) {
            if (!invoke_visitor(visit, std::span<const int>(path.data(), node_level),
                                stack[node_level]))
                return false;
        }
        if (node_level == depth) {
            ++path[level];
        } else {
            level = node_level;
            path[level] = 1;
        }
    }
}

}  // namespace detail

/// Visits every word of Sigma_n exactly once in lexicographic order with its
/// matrix product A_w. The visitor may return bool; returning false stops the
/// fold early (the fold then returns false).
template <typename Visitor>
bool fold_words(const MatrixTuple& t, int depth, Visitor&& visit,
                std::uint64_t budget = kDefaultWordBudget) {
    return detail::fold_impl(t, depth, std::forward<Visitor>(visit), true, budget);
}

/// Like fold_words but visits every node of the prefix tree (all words of
/// length <= depth, including the empty word at the root).
template <typename Visitor>
bool fold_word_tree(const MatrixTuple& t, int depth, Visitor&& visit,
                    std::uint64_t budget = kDefaultWordBudget) {
    return detail::fold_impl(t, depth, std::forward<Visitor>(visit), false, budget);
}

}  // namespace afflab
