#include <cmath>
#include <vector>

#include "doctest.h"
#include "riskshare/infconv.hpp"

using namespace riskshare;

TEST_CASE("single component is the function itself") {
    auto curve = infconv_fn({DistortionFn::dual_power(2.0)});
    CHECK(curve.exact());
    CHECK(curve.value_at(0.3) == doctest::Approx(0.51).epsilon(1e-15));
    CHECK(curve.split_at(0.3) == std::vector<double>{0.3});
    CHECK(curve.lipschitz_estimate() >= 1.9); // slope 2 at the origin
}

TEST_CASE("indicator component shifts the other argument") {
    auto curve = infconv_fn({DistortionFn::var_indicator(0.3), DistortionFn::power(2.0)});
    CHECK(curve.exact());
    CHECK(curve.value_at(0.2) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(curve.value_at(0.9) == doctest::Approx(0.36).epsilon(1e-12));
    auto split = curve.split_at(0.9);
    REQUIRE(split.size() == 2);
    CHECK(split[0] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(split[1] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(curve.at_one() == doctest::Approx(0.49).epsilon(1e-12));

    // Order does not change the value.
    auto swapped =
        infconv_fn({DistortionFn::power(2.0), DistortionFn::var_indicator(0.3)});
    CHECK(swapped.value_at(0.9) == doctest::Approx(0.36).epsilon(1e-12));
    CHECK(swapped.split_at(0.9)[1] == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("piecewise linear pair has an exact closed form") {
    const double a = 0.25, b = 0.875;
    auto curve = infconv_fn(
        {DistortionFn::flat_then_linear(a), DistortionFn::expected_shortfall(b)});
    CHECK(curve.exact());
    for (int i = 0; i <= 20; ++i) {
        double x = static_cast<double>(i) / 20.0;
        CHECK(curve.value_at(x) ==
              doctest::Approx(std::max(0.0, (x - a) / b)).epsilon(1e-14));
        auto split = curve.split_at(x);
        CHECK(split[0] == doctest::Approx(std::min(x, a)).epsilon(1e-14));
        CHECK(split[0] + split[1] == doctest::Approx(x).epsilon(1e-14));
    }
    CHECK(curve.selector_monotone());
    CHECK(curve.cross_check_deviation() <= 2e-3);
}

TEST_CASE("smooth pair through the grid fold") {
    // DualPower(2) against Power(3); reference values root-found offline.
    auto curve = infconv_fn({DistortionFn::dual_power(2.0), DistortionFn::power(3.0)});
    CHECK_FALSE(curve.exact());
    CHECK(curve.refined_value_at(1.0) == doctest::Approx(0.85185185185185186).epsilon(1e-9));
    CHECK(curve.refined_value_at(0.9) == doctest::Approx(0.69934387388831398).epsilon(1e-9));
    CHECK(curve.value_at(0.9) == doctest::Approx(0.69934387388831398).epsilon(2e-3));
    auto split = curve.refined_split_at(0.9);
    CHECK(split[0] == doctest::Approx(0.14502965277083535).epsilon(1e-6));
    CHECK(split[0] + split[1] == doctest::Approx(0.9).epsilon(1e-12));
    // Below p0 = sqrt(2/3) everything goes to the convex component.
    CHECK(curve.refined_value_at(0.5) == doctest::Approx(0.125).epsilon(1e-9));
    CHECK(curve.refined_split_at(0.5)[0] == doctest::Approx(0.0).epsilon(1e-6));
    // The convex component's share shrinks above the switch point, so the
    // selector is not jointly monotone for this pair.
    CHECK_FALSE(curve.selector_monotone());
}

TEST_CASE("symmetric convex pair splits evenly") {
    auto curve = infconv_fn({DistortionFn::power(2.0), DistortionFn::power(2.0)});
    CHECK(curve.refined_value_at(0.8) == doctest::Approx(0.32).epsilon(1e-9));
    auto split = curve.refined_split_at(0.8);
    CHECK(split[0] == doctest::Approx(0.4).epsilon(1e-4));
    CHECK(curve.refined_value_at(1.0) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("strict convex pair benchmark values") {
    auto curve = infconv_fn({DistortionFn::power(2.0), DistortionFn::power(3.0)});
    CHECK(curve.refined_value_at(0.9) == doctest::Approx(0.28475099110651098).epsilon(1e-9));
    CHECK(curve.refined_value_at(1.0) == doctest::Approx(0.36886969055910118).epsilon(1e-9));
    auto split = curve.refined_split_at(0.9);
    CHECK(split[0] == doctest::Approx(0.39005929062176548).epsilon(1e-5));
}

TEST_CASE("three convex piecewise linear components merge by slope") {
    auto curve = infconv_fn({DistortionFn::flat_then_linear(0.3),
                             DistortionFn::flat_then_linear(0.2),
                             DistortionFn::flat_then_linear(0.1)});
    CHECK(curve.exact());
    // Flat head of width 0.6, then the shallowest slope 1/0.9.
    CHECK(curve.value_at(0.6) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(curve.value_at(0.8) == doctest::Approx(0.2 / 0.9).epsilon(1e-12));
    CHECK(curve.at_one() == doctest::Approx(0.4 / 0.9).epsilon(1e-12));

    auto split = curve.split_at(0.55);
    REQUIRE(split.size() == 3);
    CHECK(split[0] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(split[1] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(split[2] == doctest::Approx(0.05).epsilon(1e-12));
    auto split2 = curve.split_at(0.7);
    CHECK(split2[2] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(split2[0] + split2[1] + split2[2] == doctest::Approx(0.7).epsilon(1e-12));

    // The merged curve converts to an exact bounded-variation distortion.
    auto w = curve.as_distortion();
    CHECK(w.as_knots().has_value());
    CHECK(w.at_one() == doctest::Approx(0.4 / 0.9).epsilon(1e-12));
}

TEST_CASE("curve is bounded by the smallest component") {
    auto h1 = DistortionFn::dual_power(2.0);
    auto h2 = DistortionFn::power(3.0);
    auto curve = infconv_fn({h1, h2});
    for (int i = 0; i <= 50; ++i) {
        double x = static_cast<double>(i) / 50.0;
        CHECK(curve.value_at(x) <= std::min(h1(x), h2(x)) + 1e-12);
        CHECK(curve.value_at(x) >= -1e-12);
    }
    // Nondecreasing in x.
    double prev = 0.0;
    for (int i = 0; i <= 100; ++i) {
        double v = curve.value_at(static_cast<double>(i) / 100.0);
        CHECK(v >= prev - 1e-12);
        prev = v;
    }
}

TEST_CASE("three-way grid fold agrees with nested pair folds") {
    std::vector<DistortionFn> fns = {DistortionFn::dual_power(2.0),
                                     DistortionFn::power(2.0),
                                     DistortionFn::power(3.0)};
    auto joint = infconv_fn(fns);
    auto pair = infconv_fn({fns[0], fns[1]});
    auto nested = infconv_fn({pair.as_distortion(), fns[2]});
    for (double x : {0.25, 0.5, 0.75, 1.0}) {
        CHECK(joint.value_at(x) == doctest::Approx(nested.value_at(x)).epsilon(5e-3));
        auto split = joint.split_at(x);
        REQUIRE(split.size() == 3);
        CHECK(split[0] + split[1] + split[2] == doctest::Approx(x).epsilon(1e-9));
    }
}

TEST_CASE("grid fold refinement never exceeds the grid value") {
    auto curve = infconv_fn({DistortionFn::dual_power(2.0), DistortionFn::power(3.0)});
    for (double x : {0.71, 0.835, 0.9, 0.955, 1.0}) {
        CHECK(curve.refined_value_at(x) <= curve.value_at(x) + 1e-15);
        auto rs = curve.refined_split_at(x);
        CHECK(rs[0] + rs[1] == doctest::Approx(x).epsilon(1e-12));
    }
}
