#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "riskshare/multi.hpp"

using namespace riskshare;

namespace {

bool mentions(const SharingSolution& sol, const std::string& needle) {
    return sol.note.find(needle) != std::string::npos;
}

} // namespace

TEST_CASE("agents classify by shape") {
    CHECK(classify_agent(DistortionFn::dual_power(2.0)) == Attitude::Averse);
    CHECK(classify_agent(DistortionFn::power(3.0)) == Attitude::Seeking);
    // weakly linear counts as averse
    CHECK(classify_agent(DistortionFn::identity()) == Attitude::Averse);
    auto mixed = DistortionFn::piecewise_linear(
        {{0.0, 0.0}, {0.2, 0.5}, {0.8, 0.7}, {1.0, 1.0}});
    CHECK(classify_agent(mixed) == Attitude::Other);

    CHECK(to_string(Attitude::Averse) == "averse");
    CHECK(to_string(Attitude::Seeking) == "seeking");
    CHECK(to_string(Attitude::Other) == "other");
}

TEST_CASE("reduction builds group representatives") {
    auto dp2 = DistortionFn::dual_power(2.0);
    auto p2 = DistortionFn::power(2.0);
    auto x = LatticeRV::uniform({0.0, 0.0, 0.5, 0.5, 1.0, 1.0});
    auto eco = make_economy({dp2, dp2, p2}, x);
    auto red = reduce(eco);
    CHECK(red.averse == std::vector<int>{0, 1});
    CHECK(red.seeking == std::vector<int>{2});
    REQUIRE(red.averse_rep.has_value());
    REQUIRE(red.seeking_rep.has_value());
    for (int i = 0; i <= 10; ++i) {
        double t = static_cast<double>(i) / 10.0;
        CHECK(std::abs((*red.averse_rep)(t)-dp2(t)) <= 1e-15);
        CHECK(std::abs((*red.seeking_rep)(t)-p2(t)) <= 1e-12);
    }
    CHECK(red.seeking_scale == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(red.seeking_exact);
    REQUIRE(red.seeking_rep_hat.has_value());

    // Mixed-shape agents are rejected, as are mis-declared attitudes.
    auto mixed = DistortionFn::piecewise_linear(
        {{0.0, 0.0}, {0.2, 0.5}, {0.8, 0.7}, {1.0, 1.0}});
    CHECK_THROWS_AS(reduce(make_economy({dp2, mixed}, x)), ClassificationError);
    Economy bad{{{"a1", DistortionFn::power(3.0), Attitude::Averse}}, x};
    CHECK_THROWS_AS(reduce(bad), ClassificationError);
}

TEST_CASE("dominated averse group leaves the risk with the seeker") {
    auto x = LatticeRV::uniform({0.0, 0.0, 0.5, 0.5, 1.0, 1.0});
    auto eco = make_economy({DistortionFn::dual_power(2.0),
                             DistortionFn::dual_power(2.0),
                             DistortionFn::power(2.0)},
                            x);
    auto sol = solve_n(eco);
    CHECK(sol.method == CaseTag::ConvexDominated);
    CHECK(sol.value == doctest::Approx(0.27777777777777779).epsilon(1e-12));
    CHECK(sol.exact);
    CHECK(mentions(sol, "dominated via agent 'agent3'"));
    CHECK(mentions(sol, "averse components comonotonic: yes"));
    REQUIRE(sol.allocation.has_value());
    CHECK(sol.allocation->parts[0] == std::vector<double>(6, 0.0));
    CHECK(sol.allocation->parts[1] == std::vector<double>(6, 0.0));
    CHECK(sol.allocation->parts[2] == x.values());
}

TEST_CASE("seeking group splits the event at the pair optimum") {
    const double ystar = 0.39005929062176548;
    const double zstar = 0.50994070937823455;
    auto x = LatticeRV::weighted({1.0, 1.0, 0.0, 0.0, 0.0, 0.0},
                                 {ystar, zstar, 0.025, 0.025, 0.025, 0.025});
    auto eco = make_economy({DistortionFn::dual_power(2.0),
                             DistortionFn::power(2.0), DistortionFn::power(3.0)},
                            x);
    auto sol = solve_n(eco);
    CHECK(sol.method == CaseTag::ConvexDominated);
    CHECK(sol.value == doctest::Approx(0.28475099110651098).epsilon(1e-9));
    CHECK(sol.benchmark == doctest::Approx(0.28475099110651098).epsilon(1e-9));
    CHECK(mentions(sol, "seeking components counter-monotonic: yes"));
    REQUIRE(sol.allocation.has_value());
    // The square agent takes the slab of probability y*, the cube agent z*.
    CHECK(sol.allocation->parts[1][0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sol.allocation->parts[2][1] == doctest::Approx(1.0).epsilon(1e-12));
    auto comps = std::vector<LatticeRV>{
        LatticeRV::weighted(sol.allocation->parts[1], x.probs()),
        LatticeRV::weighted(sol.allocation->parts[2], x.probs())};
    CHECK(is_counter_monotonic(comps));
}

TEST_CASE("all-averse economy layers to the cheapest agent") {
    auto eco = make_economy(
        {DistortionFn::dual_power(2.0), DistortionFn::dual_power(3.0)},
        LatticeRV::uniform({0.0, 1.0}));
    auto sol = solve_n(eco);
    CHECK(sol.method == CaseTag::ConcaveMin);
    CHECK(sol.value == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(sol.exact);
    REQUIRE(sol.allocation.has_value());
    CHECK(sol.allocation->parts[0] == std::vector<double>{0.0, 1.0});
    CHECK(sol.allocation->parts[1] == std::vector<double>{0.0, 0.0});
}

TEST_CASE("composite distortion for shortfall-plus-flat groups") {
    auto c1 = pwl_group_composite({0.8}, {0.2, 0.3});
    auto k1 = c1.as_knots();
    REQUIRE(k1.has_value());
    REQUIRE(k1->size() == 3);
    CHECK((*k1)[1].first == doctest::Approx(0.5).epsilon(1e-15));
    CHECK((*k1)[1].second == doctest::Approx(0.0).epsilon(1e-15));
    CHECK((*k1)[2].second == doctest::Approx(0.625).epsilon(1e-12));

    auto c2 = pwl_group_composite({0.9}, {0.3, 0.25});
    auto k2 = c2.as_knots();
    REQUIRE(k2.has_value());
    CHECK((*k2)[1].first == doctest::Approx(0.55).epsilon(1e-15));
    CHECK((*k2)[2].second == doctest::Approx(0.5).epsilon(1e-12));

    // Widths filling the whole unit interval price everything at zero.
    CHECK(pwl_group_composite({0.5}, {0.5, 0.5}).at_one() == 0.0);

    CHECK_THROWS_AS(pwl_group_composite({}, {0.2}), PreconditionError);
    CHECK_THROWS_AS(pwl_group_composite({0.5}, {}), PreconditionError);
    CHECK_THROWS_AS(pwl_group_composite({1.2}, {0.2}), DomainError);
    CHECK_THROWS_AS(pwl_group_composite({0.5}, {0.6, 0.6}), DomainError);
}

TEST_CASE("flat agents under the shortfall cap") {
    // min(a) + b = 1: the narrow flat agent is never more expensive than the
    // shortfall agent, so it absorbs everything below the stack.
    auto x = LatticeRV::weighted({0.0, 1.0, 1.0, 1.0}, {0.2, 0.3, 0.2, 0.3});
    auto sol = pwl_n_agent({0.8}, {0.2, 0.3}, x);
    CHECK(sol.method == CaseTag::PwlPair);
    CHECK(sol.value == doctest::Approx(0.375).epsilon(1e-12));
    CHECK(sol.benchmark == doctest::Approx(0.37500000000000006).epsilon(1e-12));
    CHECK(sol.exact);
    CHECK(mentions(sol, "case (i)"));
    REQUIRE(sol.allocation.has_value());
    CHECK(sol.allocation->parts[0] == std::vector<double>(4, 0.0)); // shortfall idle
    CHECK(sol.allocation->parts[1] == std::vector<double>{0.0, 1.0, 1.0, 0.0});
    CHECK(sol.allocation->parts[2] == std::vector<double>{0.0, 0.0, 0.0, 1.0});

    auto x2 = LatticeRV::weighted({0.0, 1.0, 1.0, 1.0}, {0.1, 0.2, 0.3, 0.4});
    auto sol2 = pwl_n_agent({0.7}, {0.3, 0.4}, x2);
    CHECK(sol2.value == doctest::Approx(0.28571428571428581).epsilon(1e-12));
    CHECK(sol2.exact);
    CHECK(mentions(sol2, "case (i)"));
}

TEST_CASE("flat agents above the shortfall cap") {
    // min(a) + b > 1: flats keep only their free tail slices and the
    // shortfall representative prices the bottom.
    auto x = LatticeRV::weighted({1.0, 1.0}, {0.52, 0.48});
    auto sol = pwl_n_agent({0.7, 0.6}, {0.48}, x);
    CHECK(sol.method == CaseTag::PwlPair);
    CHECK(sol.value == doctest::Approx(0.74285714285714288).epsilon(1e-12));
    CHECK(sol.exact);
    CHECK(mentions(sol, "case (ii)"));
    REQUIRE(sol.allocation.has_value());
    CHECK(sol.allocation->parts[0] == std::vector<double>{1.0, 0.0}); // cheaper shortfall
    CHECK(sol.allocation->parts[1] == std::vector<double>{0.0, 0.0});
    CHECK(sol.allocation->parts[2] == std::vector<double>{0.0, 1.0});

    auto x2 = LatticeRV::weighted({0.0, 1.0, 1.0, 1.0}, {0.1, 0.35, 0.25, 0.3});
    auto sol2 = pwl_n_agent({0.9}, {0.3, 0.25}, x2);
    CHECK(sol2.value == doctest::Approx(0.38888888888888884).epsilon(1e-12));
    CHECK(sol2.exact);
    CHECK(mentions(sol2, "case (ii)"));
    REQUIRE(sol2.allocation.has_value());
    CHECK(sol2.allocation->parts[0] == std::vector<double>{0.0, 1.0, 0.0, 0.0});
    CHECK(sol2.allocation->parts[1] == std::vector<double>{0.0, 0.0, 0.0, 1.0});
    CHECK(sol2.allocation->parts[2] == std::vector<double>{0.0, 0.0, 1.0, 0.0});
}

TEST_CASE("n-agent dispatcher reaches the shortfall-plus-flats form") {
    // The same economy through solve_n (classification + reduction included).
    auto x = LatticeRV::weighted({0.0, 1.0, 1.0, 1.0}, {0.1, 0.35, 0.25, 0.3});
    auto eco = make_economy({DistortionFn::expected_shortfall(0.9),
                             DistortionFn::flat_then_linear(0.3),
                             DistortionFn::flat_then_linear(0.25)},
                            x);
    auto sol = solve_n(eco);
    CHECK(sol.method == CaseTag::PwlPair);
    CHECK(sol.value == doctest::Approx(0.38888888888888884).epsilon(1e-12));
    CHECK(sol.exact);
    CHECK(mentions(sol, "seeking components counter-monotonic: yes"));
}
