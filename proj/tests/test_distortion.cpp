#include <cmath>
#include <vector>

#include "doctest.h"
#include "riskshare/distortion.hpp"

using namespace riskshare;

TEST_CASE("family evaluation at fixed points") {
    auto p2 = DistortionFn::power(2.0);
    CHECK(p2(0.0) == 0.0);
    CHECK(p2(0.5) == 0.25);
    CHECK(p2(1.0) == 1.0);

    auto dp2 = DistortionFn::dual_power(2.0);
    CHECK(dp2(0.5) == 0.75);
    CHECK(dp2(0.9) == doctest::Approx(0.99));
    CHECK(dp2(1.0) == 1.0);

    auto es = DistortionFn::expected_shortfall(0.5);
    CHECK(es(0.25) == 0.5);
    CHECK(es(0.5) == 1.0);
    CHECK(es(0.75) == 1.0);

    auto flat = DistortionFn::flat_then_linear(0.25);
    CHECK(flat(0.2) == 0.0);
    CHECK(flat(0.25) == 0.0);
    CHECK(flat(0.625) == doctest::Approx(0.5));
    CHECK(flat(1.0) == 1.0);

    auto id = DistortionFn::identity();
    CHECK(id(0.37) == 0.37);

    auto v = DistortionFn::var_indicator(0.6);
    CHECK(v(0.6) == 0.0);  // open: 1{t > 0.6}
    CHECK(v(0.600001) == 1.0);
    auto vc = DistortionFn::var_indicator(0.6, true);
    CHECK(vc(0.6) == 1.0); // closed: 1{t >= 0.6}
    CHECK(vc(0.599999) == 0.0);
}

TEST_CASE("factory validation") {
    CHECK_THROWS_AS(DistortionFn::power(0.0), DomainError);
    CHECK_THROWS_AS(DistortionFn::dual_power(-1.0), DomainError);
    CHECK_THROWS_AS(DistortionFn::expected_shortfall(0.0), DomainError);
    CHECK_THROWS_AS(DistortionFn::expected_shortfall(1.5), DomainError);
    CHECK_THROWS_AS(DistortionFn::flat_then_linear(1.0), DomainError);
    CHECK_THROWS_AS(DistortionFn::piecewise_linear({{0.0, 0.0}}), DomainError);
    CHECK_THROWS_AS(DistortionFn::piecewise_linear({{0.0, 0.1}, {1.0, 1.0}}),
                    DomainError);
    CHECK_THROWS_AS(DistortionFn::piecewise_linear({{0.0, 0.0}, {0.5, 0.8}, {1.0, 0.5}}),
                    DomainError);
    CHECK_THROWS_AS(DistortionFn::tabulated({0.0, 0.5, 0.2}), DomainError);
    CHECK_THROWS_AS(eval(DistortionFn::identity(), 1.5), DomainError);
    CHECK_THROWS_AS(eval(DistortionFn::identity(), -0.1), DomainError);
}

TEST_CASE("piecewise linear evaluation and knot access") {
    auto h = DistortionFn::piecewise_linear({{0.0, 0.0}, {0.3, 0.6}, {1.0, 1.0}});
    CHECK(h(0.15) == doctest::Approx(0.3));
    CHECK(h(0.3) == doctest::Approx(0.6));
    CHECK(h(0.65) == doctest::Approx(0.8));
    auto knots = h.as_knots();
    REQUIRE(knots.has_value());
    CHECK(knots->size() == 3);
    CHECK((*knots)[1].first == 0.3);
    CHECK((*knots)[1].second == 0.6);
    CHECK_FALSE(DistortionFn::power(2.0).as_knots().has_value());
    CHECK(DistortionFn::identity().as_knots().has_value());
}

TEST_CASE("dual pairs up the families") {
    // 1 - (1 - t)^a is the dual of t^a and vice versa.
    CHECK(same_function(dual(DistortionFn::power(2.0)), DistortionFn::dual_power(2.0),
                        1e-15));
    CHECK(same_function(dual(DistortionFn::dual_power(3.0)), DistortionFn::power(3.0),
                        1e-15));
    CHECK(same_function(dual(DistortionFn::identity()), DistortionFn::identity(),
                        1e-15));

    // Dual of the open indicator 1{t > a} is the closed indicator 1{t >= 1-a}.
    auto dv = dual(DistortionFn::var_indicator(0.6));
    CHECK(dv(0.4) == 1.0);
    CHECK(dv(0.39999) == 0.0);

    // ES(b) and flat(1-b) are dual to each other.
    CHECK(same_function(dual(DistortionFn::expected_shortfall(0.5)),
                        DistortionFn::flat_then_linear(0.5), 1e-15));
}

TEST_CASE("duality is an involution") {
    std::vector<DistortionFn> corpus = {
        DistortionFn::power(3.0),
        DistortionFn::dual_power(2.0),
        DistortionFn::expected_shortfall(0.4),
        DistortionFn::flat_then_linear(0.3),
        DistortionFn::var_indicator(0.5),
        DistortionFn::identity(),
        DistortionFn::piecewise_linear({{0.0, 0.0}, {0.2, 0.5}, {0.8, 0.7}, {1.0, 1.0}}),
    };
    for (const auto& h : corpus) CHECK(same_function(dual(dual(h)), h, 1e-12));
}

TEST_CASE("shape predicates") {
    CHECK(is_concave(DistortionFn::dual_power(2.0)));
    CHECK_FALSE(is_convex(DistortionFn::dual_power(2.0)));
    CHECK(is_convex(DistortionFn::power(3.0)));
    CHECK_FALSE(is_concave(DistortionFn::power(3.0)));
    CHECK(is_concave(DistortionFn::identity()));
    CHECK(is_convex(DistortionFn::identity()));
    CHECK(is_concave(DistortionFn::expected_shortfall(0.5)));
    CHECK(is_convex(DistortionFn::flat_then_linear(0.25)));

    auto mixed =
        DistortionFn::piecewise_linear({{0.0, 0.0}, {0.2, 0.5}, {0.8, 0.7}, {1.0, 1.0}});
    CHECK_FALSE(is_concave(mixed));
    CHECK_FALSE(is_convex(mixed));
}

TEST_CASE("existence criterion h1 >= dual(h2)") {
    // Concave pairs dominate their duals; strictly convex pairs do not.
    CHECK(dominates(DistortionFn::dual_power(2.0), DistortionFn::dual_power(2.0)));
    CHECK_FALSE(dominates(DistortionFn::power(3.0), DistortionFn::power(3.0)));
    CHECK(dominates(DistortionFn::dual_power(2.0), DistortionFn::power(2.0)));
    CHECK_FALSE(dominates(DistortionFn::var_indicator(0.6),
                          DistortionFn::var_indicator(0.5)));
    CHECK(dominates(DistortionFn::var_indicator(0.6), DistortionFn::var_indicator(0.3)));
}

TEST_CASE("flat segment width and active part") {
    CHECK(alpha_of(DistortionFn::flat_then_linear(0.3)) == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(alpha_of(DistortionFn::power(2.0)) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(alpha_of(DistortionFn::var_indicator(0.4)) == doctest::Approx(0.4).epsilon(1e-9));

    auto ap = active_part(DistortionFn::flat_then_linear(0.3));
    CHECK(ap(0.0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(ap(0.35) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(ap(0.7) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("shift delays the argument") {
    auto s = shift(DistortionFn::power(2.0), 0.1);
    CHECK(s(0.05) == 0.0);
    CHECK(s(0.1) == 0.0);
    CHECK(s(0.6) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(s(1.0) == doctest::Approx(0.81).epsilon(1e-15));
    CHECK_THROWS_AS(shift(DistortionFn::power(2.0), 1.5), DomainError);

    // Shift of an indicator stays an exact indicator.
    auto sv = shift(DistortionFn::var_indicator(0.3), 0.2);
    CHECK(sv(0.5) == 0.0);
    CHECK(sv(0.50001) == 1.0);
}

TEST_CASE("pointwise minimum stays exact when one input dominates") {
    auto dp2 = DistortionFn::dual_power(2.0);
    auto dp3 = DistortionFn::dual_power(3.0);
    auto mn = min_of({dp2, dp3});
    // dp2 <= dp3 everywhere, so the minimum is dp2 itself, node and all.
    CHECK(same_function(mn, dp2, 1e-15));
    CHECK(is_concave(mn));
}

TEST_CASE("pointwise minimum of crossing piecewise linear functions") {
    auto a = DistortionFn::identity();
    auto b = DistortionFn::piecewise_linear(
        {{0.0, 0.0}, {0.1, 0.45}, {0.9, 0.5}, {1.0, 1.0}});
    auto mn = min_of({a, b});
    CHECK(mn(0.05) == doctest::Approx(0.05).epsilon(1e-12));  // identity wins early
    CHECK(mn(0.5) == doctest::Approx(0.475).epsilon(1e-12));  // b wins in the middle
    CHECK(mn(0.95) == doctest::Approx(0.75).epsilon(1e-12));  // b wins late
    CHECK(mn.as_knots().has_value());
    for (double t : {0.0, 0.2, 0.33, 0.61, 0.88, 1.0})
        CHECK(mn(t) == doctest::Approx(std::min(a(t), b(t))).epsilon(1e-12));
}

TEST_CASE("normalize rescales bounded-variation members") {
    auto bv = DistortionFn::piecewise_linear({{0.0, 0.0}, {1.0, 0.8}});
    auto [unit, scale] = normalize(bv);
    CHECK(scale == 0.8);
    CHECK(same_function(unit, DistortionFn::identity(), 1e-12));
    CHECK_THROWS_AS(normalize(DistortionFn::piecewise_linear({{0.0, 0.0}, {1.0, 0.0}})),
                    DomainError);
}

TEST_CASE("tabulated round trip through grid sampling") {
    auto src = DistortionFn::dual_power(2.0);
    std::vector<double> values(kDefaultGrid);
    for (int i = 0; i < kDefaultGrid; ++i) values[i] = src(grid_point(i, kDefaultGrid));
    auto tab = DistortionFn::tabulated(values);
    CHECK(same_function(tab, src, 1e-12));
    CHECK(is_concave(tab));
}
