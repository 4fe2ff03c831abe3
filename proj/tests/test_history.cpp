#include <doctest.h>

#include <cmath>
#include <random>

#include "esb/history.hpp"

using esb::SampledHistory;

TEST_CASE("pre-history reads the initial value")
{
    SampledHistory<double> h(0.1, 1.0, 0.7);
    CHECK(h.value_at(-5.0) == 0.7);
    h.push(1.0);
    CHECK(h.value_at(-0.05) == doctest::Approx(0.85));
    CHECK(h.value_at(-0.1) == 0.7);
    CHECK(h.value_at(0.0) == 1.0);
    CHECK(h.value_at(0.05) == 1.0); // beyond newest sample holds
}

TEST_CASE("linear interpolation between samples")
{
    SampledHistory<double> h(0.5, 2.0, 0.0);
    for (int j = 0; j < 5; ++j) h.push(2.0 * j);
    CHECK(h.value_at(0.25) == doctest::Approx(1.0));
    CHECK(h.value_at(1.75) == doctest::Approx(7.0));
}

TEST_CASE("retention window is bounded")
{
    SampledHistory<double> h(1.0, 3.0, 0.0);
    for (int j = 0; j < 100; ++j) h.push(j);
    CHECK(h.sample(99) == 99.0);
    CHECK(h.sample(96) == 96.0);
    CHECK_THROWS_AS((void)h.sample(10), std::out_of_range);
}

TEST_CASE("integral exact for affine signals including fractional bounds")
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    std::uniform_real_distribution<double> frac(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double dt = 0.01 + 0.1 * frac(rng);
        const double window = 2.0 + 3.0 * frac(rng);
        const double c0 = coef(rng), c1 = coef(rng);
        SampledHistory<double> h(dt, window, c0);
        const int n = 400;
        for (int j = 0; j < n; ++j) h.push(c0 + c1 * j * dt);
        const double t1 = h.latest_time() - frac(rng) * dt;
        const double t0 = t1 - window;
        const double exact = c0 * (t1 - t0) + 0.5 * c1 * (t1 * t1 - t0 * t0);
        CHECK(h.integral(t0, t1) == doctest::Approx(exact).epsilon(1e-12));
    }
}

TEST_CASE("integral of a constant and of sin")
{
    SampledHistory<double> ones(0.001, 5.0, 2.0);
    for (int j = 0; j <= 5000; ++j) ones.push(2.0);
    CHECK(ones.integral(0.0, 5.0) == doctest::Approx(10.0).epsilon(1e-12));

    SampledHistory<double> s(0.001, 5.0, 0.0);
    for (int j = 0; j <= 5000; ++j) s.push(std::sin(j * 0.001));
    // 1 - cos 5 = 0.716337814536774
    CHECK(std::abs(s.integral(0.0, 5.0) - (1.0 - std::cos(5.0))) < 1e-6);
}

TEST_CASE("integral spanning pre-history")
{
    SampledHistory<double> h(0.5, 2.0, 1.0);
    h.push(3.0);
    // [-1, 0]: constant 1 until -0.5, then linear 1 -> 3 over [-0.5, 0]
    CHECK(h.integral(-1.0, 0.0) == doctest::Approx(0.5 + 1.0));
    CHECK_THROWS_AS((void)h.integral(1.0, 0.0), std::invalid_argument);
}
