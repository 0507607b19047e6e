#include <doctest.h>

#include <cmath>
#include <random>

#include "pbe/hydrodynamics.hpp"

using namespace pbe;

namespace {

struct Fixture {
    TorusGrid grid;
    DispersionTable disp;
    CollisionModel model;
    Linearization lin;
    SpectralSummary spec;
    SlowBasis basis;
    FastSolver solver;

    Fixture()
        : grid({2, 12}), disp(grid, {2, 1.0}),
          model(grid, disp, DeltaKernel::automatic(grid.spec(), {2, 1.0})),
          lin(assemble_linearization(model)), spec(spectrum_L(lin.L, disp)), basis(disp),
          solver(disp, lin.L, spec)
    {
    }
};

const Fixture& fx()
{
    static Fixture f;
    return f;
}

RealField random_field(Index N, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    RealField f(N);
    for (Index i = 0; i < N; ++i) f[i] = g(rng);
    return f;
}

} // namespace

TEST_CASE("slow basis and projections")
{
    const auto& F = fx();
    const auto& b = F.basis;
    const auto& H = b.H();
    CHECK(b.gram()(0, 1) == doctest::Approx(b.gram()(1, 0)));
    CHECK(b.gram().determinant() > 0.0);
    CHECK(H.inner(b.u(1), b.u(1)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(H.inner(b.u(2), b.u(2)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(H.inner(b.u(1), b.u(2))) < 1e-12);
    CHECK((b.coeff().transpose() * b.gram() * b.coeff() - Mat2::Identity()).norm() < 1e-12);

    RealField e1 = b.e(1);
    CHECK((b.P(e1) - e1).cwiseAbs().maxCoeff() < 1e-12 * e1.maxCoeff());

    RealField f = random_field(F.grid.size(), 1), g = random_field(F.grid.size(), 2);
    RealField Pf = b.P(f);
    CHECK((b.P(Pf) - Pf).norm() < 1e-10 * Pf.norm());
    CHECK(std::abs(H.inner(Pf, b.Q(g))) < 1e-10 * H.norm(f) * H.norm(g));
    CHECK(std::abs(H.inner(b.P(f), g) - H.inner(f, b.P(g))) < 1e-10 * H.norm(f) * H.norm(g));

    RealField odd = 0.5 * (f - reflect_field(F.grid, f));
    CHECK(b.P(odd).cwiseAbs().maxCoeff() < 1e-12 * odd.cwiseAbs().maxCoeff());

    // explicit Gram-Schmidt of a random field against e1, e2
    RealField perp = f;
    for (int pass = 0; pass < 2; ++pass)
        for (int i = 1; i <= 2; ++i) perp -= b.u(i) * H.inner(b.u(i), perp);
    CHECK((b.P(RealField(e1 + perp)) - e1).cwiseAbs().maxCoeff() < 1e-10 * e1.maxCoeff());

    // PAP = 0 for A = grad omega
    for (int ax = 0; ax < 2; ++ax) {
        RealField t = b.P(RealField(F.disp.grad(ax).cwiseProduct(Pf)));
        CHECK(t.cwiseAbs().maxCoeff() < 1e-12 * F.disp.grad(ax).cwiseProduct(Pf).cwiseAbs().maxCoeff());
    }
}

TEST_CASE("observables and coordinates")
{
    const auto& F = fx();
    const auto& b = F.basis;
    const auto& H = b.H();
    Vec2 t1 = b.observables(b.e(1));
    CHECK(t1[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(t1[1] == doctest::Approx(H.inner(b.e(1), b.e(2))));
    Vec2 t2 = b.observables(b.e(2));
    CHECK(t2[0] == doctest::Approx(b.gram()(1, 0)));
    CHECK(t2[1] == doctest::Approx(H.inner(b.e(2), b.e(2))));
    RealField f = random_field(F.grid.size(), 4);
    RealField odd = 0.5 * (f - reflect_field(F.grid, f));
    CHECK(b.observables(odd).cwiseAbs().maxCoeff() < 1e-14 * H.norm(odd));
    Vec2 T{0.3, -1.7};
    CHECK((b.coordinates(b.field(T)) - T).norm() < 1e-12);
    Mat2 k;
    k << 2.0, 0.3, 0.3, 1.0;
    CHECK((b.operator_to_pairing(b.pairing_to_operator(k)) - k).norm() < 1e-12 * k.norm());
}

TEST_CASE("currents")
{
    const auto& F = fx();
    const auto& b = F.basis;
    RealField f = random_field(F.grid.size(), 6);
    RealField even = 0.5 * (f + reflect_field(F.grid, f));
    CHECK(currents(even, b, F.disp).cwiseAbs().maxCoeff() < 1e-14 * even.cwiseAbs().maxCoeff());

    RealField d1 = F.disp.grad(0);
    RealField w = d1.cwiseProduct(F.disp.omega_pow(-3));
    Eigen::MatrixXd j = currents(w, b, F.disp);
    for (int a = 1; a <= 2; ++a) {
        // direct sum with the omega^2 weight
        double s = 0.0;
        for (Index i = 0; i < F.grid.size(); ++i)
            s += std::pow(F.disp.omega()[i], 2 - a) * d1[i] * d1[i] * std::pow(F.disp.omega()[i], -3);
        s /= static_cast<double>(F.grid.size());
        CHECK(j(a - 1, 0) == doctest::Approx(-s / (2 * M_PI)).epsilon(1e-12));
        CHECK(j(a - 1, 0) != 0.0);
        CHECK(std::abs(j(a - 1, 1)) < 1e-14 * std::abs(j(a - 1, 0)));
    }
}

TEST_CASE("fast solver inverts L on the complement")
{
    const auto& F = fx();
    RealField g = F.basis.Q(random_field(F.grid.size(), 9));
    RealField x = F.solver.solve(g);
    CHECK(F.solver.last_residual() < 1e-8);
    CHECK(F.basis.P(x).norm() < 1e-8 * x.norm());
    RealField odd = F.disp.grad(0).cwiseProduct(F.basis.e(1));
    CHECK(F.solver.null_overlap(odd) < 1e-12);
    CHECK(F.solver.null_overlap(F.basis.e(2)) > 0.1);
}

TEST_CASE("conductivity matrix")
{
    const auto& F = fx();
    ConductivityMatrix k1 = compute_kappa(F.solver, F.basis, F.disp, 0);
    ConductivityMatrix k2 = compute_kappa(F.solver, F.basis, F.disp, 1);
    double s = k1.kappa_op.norm();
    CHECK(std::abs(k1.kappa_op(0, 1) - k1.kappa_op(1, 0)) < 1e-8 * s);
    CHECK(std::abs(k1.kappa_ab(0, 1) - k1.kappa_ab(1, 0)) < 1e-8 * k1.kappa_ab.norm());
    CHECK(k1.mu.minCoeff() > 0.0);
    CHECK(k1.kappa_ab(0, 0) > 0.0);
    CHECK(k1.kappa_ab(1, 1) > 0.0);
    CHECK((k1.kappa_op - k2.kappa_op).norm() < 1e-8 * s);
    double scale = k1.kappa_ab.cwiseAbs().maxCoeff() * 4 * M_PI * M_PI;
    CHECK(direction_mixing(F.solver, F.basis, F.disp, 0, 1) < 1e-8 * scale);
    CHECK(direction_mixing(F.solver, F.basis, F.disp, 1, 0) < 1e-8 * scale);
    CHECK(k1.max_residual < 1e-8);
}

TEST_CASE("Fourier law for slaved states")
{
    const auto& F = fx();
    ConductivityMatrix k = compute_kappa(F.solver, F.basis, F.disp, 0);
    for (int ax = 0; ax < 2; ++ax) {
        Eigen::VectorXd p = Eigen::VectorXd::Zero(2);
        p[ax] = 0.05;
        Vec2c T{cplx(1.0, 0.0), cplx(0.0, 0.0)};
        ComplexField v = slaved_state(F.solver, F.basis, F.disp, T, p);
        FourierLawResult r = fourier_law_check(k, F.basis, F.disp, T, p, v);
        CHECK(r.residual < 1e-6 * r.scale);
        CHECK(std::abs(r.predicted(0, ax)) > 0.0);
        Vec2c T2{cplx(0.3, -0.2), cplx(-0.5, 0.1)};
        r = fourier_law_check(k, F.basis, F.disp, T2, p, slaved_state(F.solver, F.basis, F.disp, T2, p));
        CHECK(r.residual < 1e-6 * r.scale);
    }
    Eigen::VectorXd p = Eigen::VectorXd::Constant(2, 0.03);
    Vec2c Z = Vec2c::Zero();
    FourierLawResult r = fourier_law_check(k, F.basis, F.disp, Z, p, slaved_state(F.solver, F.basis, F.disp, Z, p));
    CHECK(r.residual == 0.0);
}

TEST_CASE("nonlinear diffusivity")
{
    const auto& F = fx();
    ConductivityMatrix k = compute_kappa(F.solver, F.basis, F.disp, 0);
    NonlinearDiffusivity K0 = nonlinear_diffusivity(F.model, F.basis, Vec2::Zero());
    CHECK((K0.K_op - k.kappa_op).norm() < 1e-8 * k.kappa_op.norm());
    NonlinearDiffusivity K1 = nonlinear_diffusivity(F.model, F.basis, Vec2{0.01, 0.0});
    NonlinearDiffusivity Kh = nonlinear_diffusivity(F.model, F.basis, Vec2{0.005, 0.0});
    CHECK(K1.asymmetry < 1e-6);
    Eigen::SelfAdjointEigenSolver<Mat2> es(0.5 * (K1.K_op + K1.K_op.transpose()));
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    double d1 = (K1.K_op - K0.K_op).norm(), dh = (Kh.K_op - K0.K_op).norm();
    CHECK(d1 > 0.0);
    CHECK(d1 / dh == doctest::Approx(2.0).epsilon(0.1));
    CHECK_THROWS_AS(nonlinear_diffusivity(F.model, F.basis, Vec2{-2.0, 0.0}), ConfigError);
}
