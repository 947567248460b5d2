#include <doctest.h>

#include <cmath>
#include <set>

#include "rpglab/rng.hpp"

using namespace rpglab;

TEST_SUITE_BEGIN("rng");

TEST_CASE("same seed and label reproduce the stream exactly") {
    RngStream a(42, "rollout");
    RngStream b(42, "rollout");
    for (int i = 0; i < 256; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different labels and seeds give different streams") {
    RngStream a(42, "rollout");
    RngStream b(42, "eval");
    RngStream c(43, "rollout");
    int same_ab = 0, same_ac = 0;
    for (int i = 0; i < 64; ++i) {
        std::uint64_t x = a.next_u64();
        if (x == b.next_u64()) ++same_ab;
        if (x == c.next_u64()) ++same_ac;
    }
    CHECK(same_ab == 0);
    CHECK(same_ac == 0);
}

TEST_CASE("children are deterministic and distinct per label and index") {
    RngStream root(7, "train");
    auto c1 = root.child("episode", 3);
    auto c2 = root.child("episode", 3);
    auto c3 = root.child("episode", 4);
    auto c4 = root.child("fit");
    CHECK(c1.next_u64() == c2.next_u64());
    CHECK(c1.next_u64() != c3.next_u64());
    CHECK(c2.next_u64() != c4.next_u64());
}

TEST_CASE("uniform01 stays in [0,1) and fills the range") {
    RngStream r(1, "u");
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 10000; ++i) {
        double u = r.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("uniform(lo,hi) respects bounds") {
    RngStream r(1, "u2");
    for (int i = 0; i < 1000; ++i) {
        double u = r.uniform(-3.0, -1.0);
        CHECK(u >= -3.0);
        CHECK(u < -1.0);
    }
}

TEST_CASE("uniform_index covers all values without bias") {
    RngStream r(9, "idx");
    std::vector<int> counts(5, 0);
    for (int i = 0; i < 50000; ++i) counts[r.uniform_index(5)]++;
    for (int c : counts) CHECK(std::abs(c - 10000) < 500);
    CHECK_THROWS_AS(r.uniform_index(0), ContractViolation);
}

TEST_CASE("normal01 has standard moments") {
    RngStream r(5, "n");
    const int n = 200000;
    double mean = 0.0, m2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = r.normal01();
        mean += x;
        m2 += x * x;
    }
    mean /= n;
    m2 /= n;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(m2 - 1.0) < 0.03);
}

TEST_CASE("categorical matches its weights") {
    RngStream r(11, "cat");
    Vector p(3);
    p << 0.2, 0.3, 0.5;
    std::vector<int> counts(3, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) counts[r.categorical(p)]++;
    CHECK(std::abs(counts[0] / double(n) - 0.2) < 0.01);
    CHECK(std::abs(counts[1] / double(n) - 0.3) < 0.01);
    CHECK(std::abs(counts[2] / double(n) - 0.5) < 0.01);
    CHECK_THROWS_AS(r.categorical(Vector()), ContractViolation);
}

TEST_CASE("rng_fork equals direct construction") {
    auto a = rng_fork(3, "x");
    RngStream b(3, "x");
    CHECK(a.next_u64() == b.next_u64());
}

TEST_SUITE_END();
