#include <doctest.h>

#include <cmath>

#include "pssmp/chebyshev.hpp"
#include "pssmp/errors.hpp"
#include "pssmp/quadrature.hpp"
#include "pssmp/rng.hpp"

using namespace pssmp;

TEST_CASE("Chebyshev fit reproduces smooth functions to machine precision") {
    auto f = [](double x) { return std::sin(x) + 0.2 * std::exp(-x); };
    ChebSeries s = ChebSeries::fit(0.0, 2.0, 32, f);
    for (int i = 0; i <= 50; ++i) {
        double x = 2.0 * i / 50.0;
        CHECK(s(x) == doctest::Approx(f(x)).epsilon(1e-13));
    }
    CHECK(s.tail_estimate() < 1e-13);
}

TEST_CASE("Chebyshev antiderivative and integral") {
    auto f = [](double x) { return std::cos(3.0 * x); };
    ChebSeries s = ChebSeries::fit(0.5, 2.5, 48, f);
    ChebSeries F = s.antiderivative();
    CHECK(F(0.5) == doctest::Approx(0.0).epsilon(1e-14));
    for (double x : {0.9, 1.7, 2.5}) {
        double exact = (std::sin(3.0 * x) - std::sin(1.5)) / 3.0;
        CHECK(F(x) == doctest::Approx(exact).epsilon(1e-12));
    }
    CHECK(s.integral() ==
          doctest::Approx((std::sin(7.5) - std::sin(1.5)) / 3.0).epsilon(1e-12));
}

TEST_CASE("Gauss-Kronrod handles smooth and kinked integrands") {
    auto poly = [](double x) { return x * x * x - 2.0 * x + 1.0; };
    QuadResult r1 = gauss_kronrod(poly, 0.0, 2.0);
    CHECK(r1.value == doctest::Approx(4.0 - 4.0 + 2.0).epsilon(1e-14));

    auto gauss = [](double x) { return std::exp(-x * x); };
    QuadResult r2 = gauss_kronrod(gauss, -6.0, 6.0, 1e-12);
    CHECK(r2.value == doctest::Approx(std::sqrt(std::acos(-1.0))).epsilon(1e-11));

    auto kink = [](double x) { return std::abs(x - 0.3); };
    QuadResult r3 = gauss_kronrod(kink, 0.0, 1.0, 1e-10);
    double exact = 0.5 * (0.3 * 0.3 + 0.7 * 0.7);
    CHECK(r3.value == doctest::Approx(exact).epsilon(1e-9));
    CHECK(r3.subdivisions > 1);

    // integrable endpoint singularity cannot meet an extreme tolerance with
    // a tiny subdivision budget
    auto sing = [](double x) { return 1.0 / std::sqrt(x); };
    CHECK_THROWS_AS(gauss_kronrod(sing, 1e-30, 1.0, 1e-14, 1e-300, 10),
                    QuadratureFailure);
}

TEST_CASE("generator moments and ranges") {
    Rng rng(314159);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        sum += u;
        sumsq += u * u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.005));
    CHECK(sumsq / n == doctest::Approx(1.0 / 3.0).epsilon(0.01));

    double nsum = 0.0, nsumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double z = rng.normal();
        nsum += z;
        nsumsq += z * z;
    }
    CHECK(std::abs(nsum / n) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(nsumsq / n == doctest::Approx(1.0).epsilon(0.02));

    double esum = 0.0;
    for (int i = 0; i < n; ++i) esum += rng.exponential(2.5);
    CHECK(esum / n == doctest::Approx(1.0 / 2.5).epsilon(0.02));
}

TEST_CASE("identical seeds give identical streams, different seeds diverge") {
    Rng a(99), b(99), c(100);
    bool all_eq = true, any_diff = false;
    for (int i = 0; i < 1000; ++i) {
        double va = a.uniform(), vb = b.uniform(), vc = c.uniform();
        all_eq = all_eq && (va == vb);
        any_diff = any_diff || (va != vc);
    }
    CHECK(all_eq);
    CHECK(any_diff);
}
