#include <doctest.h>

#include <cstdint>
#include <span>
#include <vector>

#include "afflab/symbolic.hpp"
#include "afflab/random.hpp"
#include "support/oracles.hpp"

using afflab::MatrixTuple;
using afflab::SquareMatrix;
using afflab::Word;

namespace {

MatrixTuple small_random_tuple(std::uint64_t seed, int d, int n_maps) {
    afflab::SeededRng rng(seed);
    std::vector<SquareMatrix> maps;
    for (int i = 0; i < n_maps; ++i) {
        SquareMatrix m = oracles::random_invertible(rng, d);
        maps.push_back(afflab::scaled(m, 0.4 / afflab::operator_norm(m)));
    }
    return MatrixTuple::create(std::move(maps));
}

std::uint64_t fnv1a(std::span<const int> word, std::uint64_t h) {
    for (int letter : word) {
        h ^= static_cast<std::uint64_t>(letter);
        h *= 1099511628211ULL;
        h ^= 0xff;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

TEST_SUITE("symbolic") {

TEST_CASE("word basics and shift") {
    Word w({1, 2, 3});
    CHECK(w.length() == 3);
    CHECK(afflab::shift(w) == Word({2, 3}));
    CHECK(afflab::shift(Word({1})) == Word::empty());
    CHECK_THROWS_AS(afflab::shift(Word::empty()), afflab::InputError);
    Word iter = w;
    for (int i = 0; i < 3; ++i) iter = afflab::shift(iter);
    CHECK(iter == Word::empty());
    CHECK(w.str() == "1.2.3");
}

TEST_CASE("tuple validation") {
    SquareMatrix ok(2, {0.4, 0.0, 0.0, 0.3});
    SquareMatrix singular(2, {1.0, 2.0, 2.0, 4.0});
    CHECK_THROWS_AS(MatrixTuple::create({ok}), afflab::InputError);  // N < 2
    CHECK_THROWS_AS(MatrixTuple::create({ok, singular}), afflab::InputError);
    CHECK_THROWS_AS(MatrixTuple::create({ok, SquareMatrix::identity(3)}), afflab::InputError);
    // declared cap must dominate all operator norms
    CHECK_THROWS_AS(MatrixTuple::create({ok, ok}, 0.3), afflab::InputError);
    CHECK_NOTHROW(MatrixTuple::create({ok, ok}, 0.5));
    // reduced single-map tuples are allowed explicitly
    const MatrixTuple single = MatrixTuple::create_reduced({ok});
    CHECK(single.count() == 1);
    CHECK(single.reduced_single);
}

TEST_CASE("word_product: empty word, definition, and power words") {
    const MatrixTuple t = small_random_tuple(1, 2, 2);
    CHECK(afflab::word_product(t, Word::empty()) == SquareMatrix::identity(2));
    const SquareMatrix direct = t.map(1) * t.map(2);
    const SquareMatrix viaword = afflab::word_product(t, Word({1, 2}));
    CHECK(afflab::frobenius_norm(direct - viaword) == 0.0);
    // "1111...1" matches the binary-exponentiation oracle
    for (int n : {1, 3, 7, 12}) {
        const SquareMatrix expected = oracles::matrix_power_binary(t.map(1), n);
        const SquareMatrix got = afflab::word_product(t, Word(std::vector<int>(n, 1)));
        CHECK(afflab::frobenius_norm(expected - got) <=
              1e-12 * (afflab::frobenius_norm(expected) + 1e-300));
    }
    CHECK_THROWS_AS(afflab::word_product(t, Word({1, 3})), afflab::InputError);
}

TEST_CASE("fold_words visits N^n leaves in lexicographic order") {
    const MatrixTuple t = small_random_tuple(2, 2, 3);
    int count = 0;
    std::vector<int> previous;
    afflab::fold_words(t, 1, [&](std::span<const int> w, const SquareMatrix&) {
        ++count;
        REQUIRE(w.size() == 1);
    });
    CHECK(count == 3);

    count = 0;
    afflab::fold_words(t, 4, [&](std::span<const int> w, const SquareMatrix&) {
        std::vector<int> cur(w.begin(), w.end());
        if (!previous.empty()) CHECK(std::lexicographical_compare(previous.begin(), previous.end(),
                                                                  cur.begin(), cur.end()));
        previous = cur;
        ++count;
    });
    CHECK(count == 81);
}

TEST_CASE("fold products equal per-word products (n = 3, N = 2 collected)") {
    const MatrixTuple t = small_random_tuple(3, 2, 2);
    std::vector<SquareMatrix> collected;
    afflab::fold_words(t, 3, [&](std::span<const int>, const SquareMatrix& p) {
        collected.push_back(p);
    });
    REQUIRE(collected.size() == 8);
    std::size_t idx = 0;
    for (int a = 1; a <= 2; ++a)
        for (int b = 1; b <= 2; ++b)
            for (int c = 1; c <= 2; ++c) {
                const SquareMatrix direct = t.map(a) * t.map(b) * t.map(c);
                CHECK(afflab::frobenius_norm(direct - collected[idx]) <=
                      1e-14 * afflab::frobenius_norm(direct));
                ++idx;
            }
}

TEST_CASE("prefix-reuse correctness up to n = 6 on random tuples") {
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        const MatrixTuple t = small_random_tuple(seed, 3, 2);
        for (int n = 1; n <= 6; ++n) {
            afflab::fold_words(t, n, [&](std::span<const int> w, const SquareMatrix& p) {
                const SquareMatrix direct =
                    afflab::word_product(t, Word(std::vector<int>(w.begin(), w.end())));
                CHECK(afflab::frobenius_norm(direct - p) <=
                      1e-12 * (afflab::frobenius_norm(direct) + 1e-300));
            });
        }
    }
}

TEST_CASE("summing ||A_w||^0 over Sigma_n counts N^n words") {
    const MatrixTuple t = small_random_tuple(4, 2, 3);
    double total = 0.0;
    afflab::fold_words(t, 5, [&](std::span<const int>, const SquareMatrix&) { total += 1.0; });
    CHECK(total == doctest::Approx(243.0));
}

TEST_CASE("visit order is stable: frozen sequence hash") {
    const MatrixTuple t = small_random_tuple(5, 2, 3);
    std::uint64_t h = 14695981039346656037ULL;
    afflab::fold_words(t, 3, [&](std::span<const int> w, const SquareMatrix&) {
        h = fnv1a(w, h);
    });
    // Lexicographic order over {1,2,3}^3, hashed; regression pin.
    CHECK(h == 16024891119021926916ULL);
}

TEST_CASE("fold_word_tree visits every prefix including the root") {
    const MatrixTuple t = small_random_tuple(6, 2, 2);
    int nodes = 0;
    bool saw_root = false;
    afflab::fold_word_tree(t, 3, [&](std::span<const int> w, const SquareMatrix& p) {
        ++nodes;
        if (w.empty()) {
            saw_root = true;
            CHECK(p == SquareMatrix::identity(2));
        }
    });
    CHECK(saw_root);
    CHECK(nodes == 1 + 2 + 4 + 8);
}

TEST_CASE("fold at depth zero visits exactly the empty word") {
    const MatrixTuple t = small_random_tuple(10, 2, 2);
    int visits = 0;
    afflab::fold_words(t, 0, [&](std::span<const int> w, const SquareMatrix& p) {
        ++visits;
        CHECK(w.empty());
        CHECK(p == SquareMatrix::identity(2));
    });
    CHECK(visits == 1);
}

TEST_CASE("early exit stops the fold") {
    const MatrixTuple t = small_random_tuple(7, 2, 2);
    int seen = 0;
    const bool complete = afflab::fold_words(t, 4, [&](std::span<const int>, const SquareMatrix&) {
        return ++seen < 5;
    });
    CHECK_FALSE(complete);
    CHECK(seen == 5);
}

TEST_CASE("enumeration budget produces a resource error naming N^n") {
    const MatrixTuple t = small_random_tuple(8, 2, 2);
    CHECK_THROWS_AS(afflab::fold_words(t, 30, [](std::span<const int>, const SquareMatrix&) {}),
                    afflab::ResourceError);
    try {
        afflab::fold_words(t, 30, [](std::span<const int>, const SquareMatrix&) {}, 1000);
    } catch (const afflab::ResourceError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("2^30") != std::string::npos);
        CHECK(msg.find("1000") != std::string::npos);
    }
}

TEST_CASE("without() removes one map and keeps validation") {
    const MatrixTuple t = small_random_tuple(9, 2, 3);
    const MatrixTuple r = t.without(2);
    CHECK(r.count() == 2);
    CHECK(afflab::frobenius_norm(r.map(1) - t.map(1)) == 0.0);
    CHECK(afflab::frobenius_norm(r.map(2) - t.map(3)) == 0.0);
    const MatrixTuple pair = r.without(1);
    CHECK(pair.count() == 1);
    CHECK(pair.reduced_single);
}

}  // TEST_SUITE
