#include <vector>

#include "doctest.h"
#include "riskshare/oracle.hpp"

using namespace riskshare;

TEST_CASE("candidate counts collapse interchangeable atoms") {
    auto dp2 = DistortionFn::dual_power(2.0);
    auto p3 = DistortionFn::power(3.0);

    // One positive atom, ten levels, two agents: eleven splits. The zero
    // atom contributes a single (forced) candidate.
    OracleProblem two_point{{dp2, p3}, LatticeRV::weighted({0.0, 1.0}, {0.1, 0.9}), 10};
    CHECK(oracle_candidate_count(two_point) == 11);

    OracleProblem two_zeros{
        {dp2, p3}, LatticeRV::weighted({0.0, 0.0, 1.0}, {0.25, 0.25, 0.5}), 10};
    CHECK(oracle_candidate_count(two_zeros) == 11);

    // Three interchangeable positive atoms: multisets of size three over the
    // eleven per-atom splits.
    OracleProblem triple{{dp2, p3}, LatticeRV::uniform({1.0, 1.0, 1.0}), 10};
    CHECK(oracle_candidate_count(triple) == 286); // C(13, 3)

    // Three agents, two distinct positive atoms: 66 compositions each.
    OracleProblem trio{{dp2, dp2, p3}, LatticeRV::weighted({1.0, 2.0}, {0.5, 0.5}), 10};
    CHECK(oracle_candidate_count(trio) == 66ULL * 66ULL);
}

TEST_CASE("identity agents always pay the mean") {
    auto id = DistortionFn::identity();
    OracleProblem p{{id, id}, LatticeRV::uniform({0.0, 0.5, 1.0}), 10};
    auto res = brute_min(p);
    CHECK(res.value == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(res.delta >= 1e-9);
    CHECK_FALSE(res.certificate.empty());
    REQUIRE(res.argmin.has_value());
    res.argmin->validate();
}

TEST_CASE("two-point problem solves at the corner") {
    auto dp2 = DistortionFn::dual_power(2.0);
    auto p3 = DistortionFn::power(3.0);
    OracleProblem p{{dp2, p3}, LatticeRV::weighted({0.0, 1.0}, {0.1, 0.9}), 10};
    auto full = brute_min(p);
    CHECK(full.value == doctest::Approx(0.729).epsilon(1e-12));
    CHECK(full.candidates == 11);

    auto como = enumerate_comonotone(p);
    CHECK(como.value == full.value); // the corner is comonotone

    auto counter = enumerate_counter(p);
    CHECK(full.value <= counter.value + 1e-12);
}

TEST_CASE("restricted enumerations never beat the full one") {
    auto dp2 = DistortionFn::dual_power(2.0);
    auto p3 = DistortionFn::power(3.0);
    OracleProblem p{{dp2, p3}, LatticeRV::uniform({0.0, 0.5, 1.0}), 8};
    auto full = brute_min(p);
    auto como = enumerate_comonotone(p);
    auto counter = enumerate_counter(p);
    CHECK(full.value <= como.value + 1e-12);
    CHECK(full.value <= counter.value + 1e-12);
}

TEST_CASE("budget overruns throw with the required count") {
    auto dp2 = DistortionFn::dual_power(2.0);
    auto p3 = DistortionFn::power(3.0);
    OracleProblem p{{dp2, p3}, LatticeRV::weighted({0.0, 1.0}, {0.1, 0.9}), 10, 3};
    try {
        brute_min(p);
        FAIL("expected BudgetError");
    } catch (const BudgetError& e) {
        CHECK(e.required == 11);
        CHECK(std::string(e.what()).find("budget") != std::string::npos);
    }
}

TEST_CASE("repeated runs are bit-identical") {
    auto dp2 = DistortionFn::dual_power(2.0);
    auto p3 = DistortionFn::power(3.0);
    OracleProblem p{{dp2, p3}, LatticeRV::uniform({0.0, 0.5, 1.0}), 6};
    auto a = brute_min(p);
    auto b = brute_min(p);
    CHECK(a.value == b.value);
    CHECK(a.candidates == b.candidates);
    CHECK(a.certificate == b.certificate);
    REQUIRE(a.argmin.has_value());
    REQUIRE(b.argmin.has_value());
    CHECK(a.argmin->parts == b.argmin->parts);
}

TEST_CASE("minima respond monotonically to the risk") {
    auto dp2 = DistortionFn::dual_power(2.0);
    auto p3 = DistortionFn::power(3.0);
    auto low = LatticeRV::weighted({0.0, 0.4}, {0.5, 0.5});
    auto high = LatticeRV::weighted({0.0, 0.5}, {0.5, 0.5});
    CHECK(monotonicity_probe(dp2, p3, low, high, 10));
}
