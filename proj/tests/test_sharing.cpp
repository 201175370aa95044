#include <cmath>
#include <vector>

#include "doctest.h"
#include "riskshare/oracle.hpp"
#include "riskshare/sharing.hpp"

using namespace riskshare;

namespace {

const double kIdP2Values[9] = {0.010000000000000002,
                               0.040000000000000008,
                               0.089999999999999997,
                               0.16000000000000003,
                               0.25,
                               0.34999999999999998,
                               0.44999999999999996,
                               0.55000000000000004,
                               0.65000000000000002};

} // namespace

TEST_CASE("existence criterion over the standard corpus") {
    auto p2 = DistortionFn::power(2.0);
    auto p3 = DistortionFn::power(3.0);
    auto dp2 = DistortionFn::dual_power(2.0);

    CHECK_FALSE(check_existence(p3, p3));
    CHECK_FALSE(check_existence(DistortionFn::var_indicator(0.6),
                                DistortionFn::var_indicator(0.5)));
    CHECK_FALSE(check_existence(dp2, p3));
    CHECK(check_existence(dp2, dp2));
    CHECK(check_existence(dp2, p2));

    std::vector<DistortionFn> corpus = {
        p2,
        p3,
        dp2,
        DistortionFn::dual_power(3.0),
        DistortionFn::expected_shortfall(0.5),
        DistortionFn::flat_then_linear(0.3),
        DistortionFn::var_indicator(0.4),
        DistortionFn::identity(),
        DistortionFn::piecewise_linear({{0.0, 0.0}, {0.2, 0.5}, {0.8, 0.7}, {1.0, 1.0}}),
    };
    for (const auto& h : corpus) {
        CHECK(check_existence(h, dual(h)));
        auto curve = infconv_fn({h, dual(h)});
        CHECK(std::abs(curve.at_one() - 1.0) <= 2.0 / kDefaultGrid);
    }
}

TEST_CASE("Bernoulli closed form against the identity/power table") {
    auto id = DistortionFn::identity();
    auto p2 = DistortionFn::power(2.0);
    for (int k = 1; k <= 9; ++k) {
        double p = static_cast<double>(k) / 10.0;
        auto sol = solve_lplus(id, p2, DiscreteRV::bernoulli(p));
        CHECK(sol.method == CaseTag::Bernoulli);
        CHECK(sol.value == doctest::Approx(kIdP2Values[k - 1]).epsilon(1e-9));
        CHECK(sol.exact);
    }
}

TEST_CASE("Bernoulli allocation on a lattice with the optimal boundary") {
    // p = 0.7: the identity agent keeps the slice of probability 0.2 between
    // the zero block and the power agent's tail of probability 0.5.
    auto x = LatticeRV::weighted({0.0, 1.0, 1.0}, {0.3, 0.2, 0.5});
    auto sol = solve_lplus(DistortionFn::identity(), DistortionFn::power(2.0), x);
    CHECK(sol.method == CaseTag::Bernoulli);
    CHECK(sol.value == doctest::Approx(0.45).epsilon(1e-9));
    CHECK(sol.exact);
    REQUIRE(sol.allocation.has_value());
    sol.allocation->validate();
    CHECK(sol.allocation->parts[0][1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sol.allocation->parts[0][2] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(sol.allocation->parts[1][2] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("Bernoulli value for the smooth averse/seeking pair") {
    auto dp2 = DistortionFn::dual_power(2.0);
    auto p3 = DistortionFn::power(3.0);
    auto sol = solve_lplus(dp2, p3, DiscreteRV::bernoulli(0.9));
    CHECK(sol.method == CaseTag::Bernoulli);
    CHECK(sol.value == doctest::Approx(0.69934387388831398).epsilon(1e-9));

    // Same value achieved exactly on a lattice whose boundary hits the
    // optimal event probability.
    const double ystar = 0.14502965277083535;
    auto lat = LatticeRV::weighted({0.0, 1.0, 1.0}, {0.1, ystar, 0.9 - ystar});
    auto lsol = solve_lplus(dp2, p3, lat);
    CHECK(lsol.value == doctest::Approx(0.69934387388831398).epsilon(1e-8));
    CHECK(lsol.exact);
    REQUIRE(lsol.allocation.has_value());
    lsol.allocation->validate();
}

TEST_CASE("indicator agent absorbs a quantile layer") {
    auto x = LatticeRV::weighted({0.2, 0.4, 0.6, 0.8, 1.0, 1.0},
                                 {0.3, 0.2, 0.2, 0.2, 0.05, 0.05});
    struct Row {
        double alpha;
        bool averse;
        double expected;
    };
    const Row rows[] = {
        {0.1, false, 0.27400000000000002},
        {0.1, true, 0.56600000000000006},
        {0.3, false, 0.13800000000000001},
        {0.3, true, 0.38200000000000001},
    };
    for (const auto& row : rows) {
        auto h = row.averse ? DistortionFn::dual_power(2.0) : DistortionFn::power(2.0);
        auto var = DistortionFn::var_indicator(row.alpha);
        for (bool var_first : {true, false}) {
            auto sol = var_first ? solve_lplus(var, h, x) : solve_lplus(h, var, x);
            CHECK(sol.method == CaseTag::VarLemma);
            CHECK(sol.value == doctest::Approx(row.expected).epsilon(1e-9));
            CHECK(sol.exact);
            REQUIRE(sol.allocation.has_value());
            sol.allocation->validate();
            // The reported value is what the allocation actually costs.
            double achieved = rho(var_first ? var : h, sol.allocation->component(0)) +
                              rho(var_first ? h : var, sol.allocation->component(1));
            CHECK(achieved == doctest::Approx(sol.value).epsilon(1e-9));
        }
    }
}

TEST_CASE("piecewise linear pair with aligned lattice boundaries") {
    auto flat = DistortionFn::flat_then_linear(0.25);
    auto es = DistortionFn::expected_shortfall(0.875);
    auto x = LatticeRV::weighted({0.0, 1.0, 1.0}, {0.1, 0.65, 0.25});
    auto sol = solve_lplus(flat, es, x);
    CHECK(sol.method == CaseTag::PwlPair);
    CHECK(sol.value == doctest::Approx((0.9 - 0.25) / 0.875).epsilon(1e-12));
    CHECK(sol.exact);
    REQUIRE(sol.allocation.has_value());
    // The flat agent rides the top-0.25 tail for free.
    CHECK(sol.allocation->parts[0][2] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sol.allocation->parts[1][1] == doctest::Approx(1.0).epsilon(1e-9));

    auto swapped = solve_lplus(es, flat, x);
    CHECK(swapped.method == CaseTag::PwlPair);
    CHECK(swapped.value == doctest::Approx(sol.value).epsilon(1e-12));
}

TEST_CASE("two distinct positive values agree with the oracle") {
    auto id = DistortionFn::identity();
    auto p2 = DistortionFn::power(2.0);
    auto x = LatticeRV::weighted({0.0, 1.0, 2.0}, {0.5, 0.24, 0.26});
    auto sol = solve_lplus(id, p2, x);
    CHECK(sol.method == CaseTag::TwoIndicators);
    CHECK(sol.lower_bound <= sol.value + 1e-12);
    CHECK(sol.value <= sol.upper_bound + 1e-12);
    REQUIRE(sol.allocation.has_value());
    sol.allocation->validate();

    auto oracle = brute_min({{id, p2}, x, 10, 100000000ULL});
    CHECK(oracle.value <= sol.value + 1e-9);          // solver is achievable
    CHECK(sol.benchmark <= oracle.value + 1e-6);      // oracle cannot beat the curve
}

TEST_CASE("small positive probability sends everything to the seeker") {
    auto dp2 = DistortionFn::dual_power(2.0);
    auto p3 = DistortionFn::power(3.0);
    auto x = LatticeRV::weighted({0.0, 0.4, 0.8, 1.0}, {0.85, 0.05, 0.05, 0.05});
    auto sol = small_prob_case(dp2, p3, x);
    CHECK(sol.method == CaseTag::SmallProb);
    const double expected =
        0.4 * std::pow(0.15, 3.0) + 0.4 * std::pow(0.10, 3.0) + 0.2 * std::pow(0.05, 3.0);
    CHECK(sol.value == doctest::Approx(expected).epsilon(1e-12));
    CHECK(sol.exact);

    // Same branch through the dispatcher.
    auto dispatched = solve_lplus(dp2, p3, x);
    CHECK(dispatched.method == CaseTag::SmallProb);
    CHECK(dispatched.value == doctest::Approx(expected).epsilon(1e-12));

    // Out of hypothesis: mass too large, or no risk-seeking agent at all.
    auto big = LatticeRV::weighted({0.0, 0.4, 0.8, 1.0}, {0.1, 0.3, 0.3, 0.3});
    CHECK_THROWS_AS(small_prob_case(dp2, p3, big), PreconditionError);
    CHECK_THROWS_AS(
        small_prob_case(dp2, DistortionFn::dual_power(3.0), x), PreconditionError);
}

TEST_CASE("power family split matches the first-order condition") {
    const double p0 = std::sqrt(2.0 / 3.0);
    auto [y_lo, rest_lo] = power_family_split(2.0, 3.0, 0.5);
    CHECK(y_lo == 0.0);
    CHECK(rest_lo == 0.5);

    auto [y, rest] = power_family_split(2.0, 3.0, 0.9);
    const double closed = (3.0 * 0.9 - 1.0 - std::sqrt(7.0 - 6.0 * 0.9)) / 3.0;
    CHECK(y == doctest::Approx(closed).epsilon(1e-12));
    CHECK(y + rest == doctest::Approx(0.9).epsilon(1e-15));
    // At the switch point itself either side may win by one ulp.
    CHECK(power_family_split(2.0, 3.0, p0).first <= 1e-12);

    CHECK_THROWS_AS(power_family_split(3.0, 2.0, 0.5), DomainError);
    CHECK_THROWS_AS(power_family_split(1.0, 2.0, 0.5), DomainError);
    CHECK_THROWS_AS(power_family_split(2.0, 3.0, 1.5), DomainError);
}

TEST_CASE("indicator plus constant bounds") {
    auto [lo, hi] = indicator_plus_constant_bounds(DistortionFn::dual_power(2.0),
                                                   DistortionFn::power(3.0), 0.3, 0.5);
    CHECK(lo == doctest::Approx(0.42592592592592593).epsilon(1e-9));
    CHECK(hi == doctest::Approx(0.45292592592592595).epsilon(1e-9));
    CHECK(lo <= hi + 1e-15);
}

TEST_CASE("layered construction sandwiches the curve value") {
    // Identity/power: both optimal shares grow with the layer probability,
    // so the layered construction applies.
    auto id = DistortionFn::identity();
    auto p2 = DistortionFn::power(2.0);
    auto x = LatticeRV::uniform({0.0, 0.25, 0.5, 0.75, 1.0});
    Allocation a = coin_construct(id, p2, x, 10);
    a.validate();
    double achieved = rho(id, a.component(0)) + rho(p2, a.component(1));
    double bench = 0.25 * (0.55 + 0.35 + 0.16 + 0.04); // sum of layer values
    CHECK(achieved >= bench - 1e-9);
    CHECK(achieved <= bench + 0.05); // 2^-10 layers plus boundary snap

    auto sol = solve_lplus(id, p2, x);
    CHECK(sol.method == CaseTag::CoinSandwich);
    CHECK(sol.benchmark == doctest::Approx(bench).epsilon(1e-9));
    CHECK(sol.value <= achieved + 1e-12); // dispatcher keeps the better of its builds
    CHECK(sol.dyadic_gap == doctest::Approx(std::ldexp(1.0, -10)).epsilon(1e-15));

    // Dual-power/power: the convex agent's share shrinks above the switch
    // point, so the layered construction refuses.
    auto dp2 = DistortionFn::dual_power(2.0);
    auto p3 = DistortionFn::power(3.0);
    CHECK_THROWS_AS(coin_construct(dp2, p3, x, 10), DomainError);
}

TEST_CASE("general lattice falls back to certified bounds") {
    auto dp2 = DistortionFn::dual_power(2.0);
    auto p3 = DistortionFn::power(3.0);
    auto x = LatticeRV::uniform({0.0, 0.3, 0.55, 0.8, 1.0});
    auto sol = solve_lplus(dp2, p3, x);
    CHECK(sol.method == CaseTag::OracleOnly); // selector not monotone here
    CHECK(sol.lower_bound <= sol.value + 1e-12);
    CHECK(sol.value <= sol.upper_bound + 1e-12);
    REQUIRE(sol.allocation.has_value());
    sol.allocation->validate();
    double achieved =
        rho(dp2, sol.allocation->component(0)) + rho(p3, sol.allocation->component(1));
    CHECK(achieved == doctest::Approx(sol.value).epsilon(1e-9));
    CHECK(sol.benchmark <= sol.value + 1e-9);
}

TEST_CASE("zero risk is free") {
    auto sol = solve_lplus(DistortionFn::dual_power(2.0), DistortionFn::power(3.0),
                           LatticeRV::uniform({0.0, 0.0}));
    CHECK(sol.value == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(sol.exact);
}

TEST_CASE("normalization guards") {
    auto bv = DistortionFn::piecewise_linear({{0.0, 0.0}, {1.0, 0.8}});
    auto dp2 = DistortionFn::dual_power(2.0);
    CHECK_THROWS_AS(solve_lplus(bv, dp2, DiscreteRV::bernoulli(0.5)), DomainError);
    // Bounded-variation second agents are allowed (group representatives).
    auto sol = solve_lplus(dp2, bv, LatticeRV::weighted({0.0, 1.0}, {0.5, 0.5}));
    CHECK(sol.value >= 0.0);
    CHECK(sol.lower_bound <= sol.value + 1e-12);
}

TEST_CASE("unbounded pairs over signed positions") {
    auto sol = solve_linf(DistortionFn::var_indicator(0.6),
                          DistortionFn::var_indicator(0.5), DiscreteRV::constant(1.0));
    CHECK(sol.method == CaseTag::Unbounded);
    CHECK(sol.neg_infinity);
    CHECK(std::isinf(sol.value));
    CHECK(sol.witness_prob.has_value());

    auto sol2 = solve_linf(DistortionFn::power(2.0), DistortionFn::power(2.0),
                           DiscreteRV::bernoulli(0.5));
    CHECK(sol2.neg_infinity);
}

TEST_CASE("concave minimum prices signed risks exactly") {
    auto dp2 = DistortionFn::dual_power(2.0);
    auto d = DiscreteRV::from_support({{-1.0, 0.5}, {1.0, 0.5}});
    auto sol = solve_linf(dp2, dp2, d);
    CHECK(sol.method == CaseTag::ConcaveMin);
    CHECK(sol.value == doctest::Approx(0.5).epsilon(1e-12)); // -1 + 2*dp2(0.5)
    CHECK(sol.exact);

    auto pos = solve_linf(dp2, DistortionFn::dual_power(3.0), DiscreteRV::bernoulli(0.9));
    CHECK(pos.method == CaseTag::ConcaveMin);
    CHECK(pos.value == doctest::Approx(0.99).epsilon(1e-12)); // min is dp2
    REQUIRE(pos.allocation.has_value());
}

TEST_CASE("risk seeker absorbs everything when dominated") {
    auto sol = solve_linf(DistortionFn::dual_power(2.0), DistortionFn::power(2.0),
                          DiscreteRV::bernoulli(0.9));
    CHECK(sol.method == CaseTag::ConvexDominated);
    CHECK(sol.value == doctest::Approx(0.81).epsilon(1e-12));
    REQUIRE(sol.allocation.has_value());
    CHECK(sol.allocation->parts[0] == std::vector<double>{0.0, 0.0});
}

TEST_CASE("mirror pairs price the pointwise minimum") {
    auto h = DistortionFn::piecewise_linear({{0.0, 0.0}, {0.2, 0.5}, {0.8, 0.7}, {1.0, 1.0}});
    auto hd = dual(h);
    auto x = DiscreteRV::from_support({{0.0, 0.4}, {1.0, 0.6}});
    auto sol = solve_linf(h, hd, x);
    CHECK(sol.method == CaseTag::Mirror);
    double expected = std::min(h(0.6), hd(0.6));
    CHECK(sol.value == doctest::Approx(expected).epsilon(1e-12));
}
