#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pbe/dispersion.hpp"

using namespace pbe;

namespace {

double binom(int n, int k)
{
    double b = 1.0;
    for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
    return b;
}

// mean of cos^m over a full period
double cos_moment(int m)
{
    if (m % 2) return 0.0;
    return binom(m, m / 2) / std::pow(2.0, m);
}

} // namespace

TEST_CASE("grid spec validation")
{
    CHECK_THROWS_AS(TorusGrid({2, 7}), ConfigError);
    CHECK_THROWS_AS(TorusGrid({2, 6}), ConfigError);
    CHECK_THROWS_AS(TorusGrid({4, 8}), ConfigError);
    TorusGrid g({2, 8});
    CHECK(g.size() == 64);
    CHECK(g.h() == doctest::Approx(std::numbers::pi / 4));
    CHECK(g.k(0, 0) == doctest::Approx(-std::numbers::pi));
    CHECK(g.k(g.origin(), 0) == 0.0);
}

TEST_CASE("lattice arithmetic")
{
    TorusGrid g({2, 8});
    for (Index a = 0; a < g.size(); a += 5) {
        for (Index b = 0; b < g.size(); b += 3) {
            Index s = g.add(a, b);
            for (int ax = 0; ax < 2; ++ax) {
                double diff = g.k(s, ax) - g.k(a, ax) - g.k(b, ax);
                double wrapped = std::remainder(diff, 2 * std::numbers::pi);
                CHECK(std::abs(wrapped) < 1e-12);
            }
            CHECK(g.sub(s, b) == a);
        }
        CHECK(g.add(a, g.neg(a)) == g.origin());
    }
}

TEST_CASE("integrate")
{
    TorusGrid g({2, 16});
    RealField one = RealField::Ones(g.size());
    CHECK(g.integrate(one) == doctest::Approx(1.0));
    RealField c(g.size());
    for (Index i = 0; i < g.size(); ++i) c[i] = std::cos(g.k(i, 0));
    CHECK(std::abs(g.integrate(c)) < 1e-15);
    CHECK_THROWS_AS(g.integrate(RealField(RealField::Ones(5))), ConfigError);
}

TEST_CASE("integral of omega^2 matches the constant term of its cosine expansion")
{
    // omega^2 = (5 - 2cos k1 - 2cos k2)^4 for r = 1
    double oracle = 0.0;
    for (int i = 0; i <= 4; ++i)
        for (int j = 0; i + j <= 4; ++j) {
            int l = 4 - i - j;
            double multi = 24.0 / (std::tgamma(i + 1) * std::tgamma(j + 1) * std::tgamma(l + 1));
            oracle += multi * std::pow(5.0, i) * std::pow(-2.0, j + l) * cos_moment(j) * cos_moment(l);
        }
    TorusGrid g({2, 32});
    DispersionTable disp(g, {2, 1.0});
    RealField w2 = disp.omega().cwiseAbs2();
    CHECK(g.integrate(w2) == doctest::Approx(oracle).epsilon(1e-14));
}

TEST_CASE("weighted inner product")
{
    TorusGrid g({2, 16});
    DispersionTable disp(g, {2, 1.0});
    auto H = disp.inner_product();
    RealField e1 = disp.omega_pow(-1), e2 = disp.omega_pow(-2);
    CHECK(H.inner(e1, e1) == doctest::Approx(1.0).epsilon(1e-14));
    RealField odd = disp.grad(0);
    CHECK(std::abs(H.inner(e1, odd)) < 1e-13);
    CHECK(H.inner(e1, e2) == doctest::Approx(g.integrate(e1)).epsilon(1e-14));

    // refinement errors against n = 64 shrink faster than second order
    auto value = [](int n) {
        TorusGrid gg({2, n});
        DispersionTable dd(gg, {2, 1.0});
        return dd.inner_product().inner(dd.omega_pow(-1), dd.omega_pow(-2));
    };
    double a16 = value(16), a32 = value(32), a64 = value(64);
    CHECK(a16 == doctest::Approx(H.inner(e1, e2)));
    CHECK(a64 > 0.0);
    CHECK(std::abs(a32 - a64) < 0.25 * std::abs(a16 - a64));
    CHECK(std::abs(a32 - a64) < 1e-6 * a64);

    ComplexField f = e1.cast<cplx>() * cplx(0, 1);
    CHECK(std::abs(H.inner(f, e1.cast<cplx>()) - cplx(0, -1)) < 1e-13);

    RealField z = RealField::Random(g.size());
    CHECK(H.inner(z, z) >= 1.0 * g.integrate(z.cwiseAbs2().eval()));
}

TEST_CASE("sup norm and parity")
{
    TorusGrid g({2, 16});
    DispersionTable disp(g, {2, 1.0});
    CHECK(sup_norm(RealField::Zero(g.size()).eval()) == 0.0);
    RealField c(g.size());
    for (Index i = 0; i < g.size(); ++i) c[i] = std::cos(g.k(i, 0));
    CHECK(sup_norm(c) == doctest::Approx(1.0));
    CHECK(sup_norm(disp.omega()) == 81.0);
    CHECK(disp.omega().maxCoeff() == disp.omega()[0]);
    CHECK(has_parity(g, disp.omega(), Parity::even, 0.0));
    CHECK(has_parity(g, disp.grad(1), Parity::odd, 0.0));
}
