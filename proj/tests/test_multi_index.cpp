#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "fedglm/multi_index.hpp"

using namespace fedglm;

TEST_CASE("p=1 K=4 lists the four univariate orders") {
    const auto idx = enumerate_multi_indices(1, 4);
    REQUIRE(idx.size() == 4);
    for (int k = 1; k <= 4; ++k) CHECK(idx[k - 1].exponents == std::vector<int>{k});
}

TEST_CASE("counts match C(p+K,K)-1") {
    for (int p = 1; p <= 10; ++p) {
        for (int k = 1; k <= 4; ++k) {
            const auto idx = enumerate_multi_indices(p, k);
            CHECK(static_cast<std::int64_t>(idx.size()) == binomial(p + k, k) - 1);
        }
    }
    CHECK(enumerate_multi_indices(5, 4).size() == 125);  // the SPARCS nu
    CHECK(enumerate_multi_indices(4, 4).size() == 69);
}

TEST_CASE("closed-form K=4 count agrees with enumeration for p >= 4") {
    for (int p = 4; p <= 10; ++p)
        CHECK(moment_count_k4(p) ==
              static_cast<std::int64_t>(enumerate_multi_indices(p, 4).size()));
}

TEST_CASE("indices are unique, in graded order, and complete") {
    const auto idx = enumerate_multi_indices(3, 4);
    std::set<std::vector<int>> seen;
    int prev_order = 1;
    for (const auto& r : idx) {
        CHECK(r.order() >= 1);
        CHECK(r.order() <= 4);
        CHECK(r.order() >= prev_order);  // graded: order never decreases
        prev_order = r.order();
        CHECK(seen.insert(r.exponents).second);
    }
}

TEST_CASE("invalid arguments are rejected") {
    CHECK_THROWS(enumerate_multi_indices(0, 4));
    CHECK_THROWS(enumerate_multi_indices(3, 0));
}
