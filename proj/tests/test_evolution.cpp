#include <doctest.h>

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

#include "pbe/evolution.hpp"

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
    ConductivityMatrix kappa;
    ModeFamily fam;

    Fixture()
        : grid({2, 12}), disp(grid, {2, 1.0}),
          model(grid, disp, DeltaKernel::automatic(grid.spec(), {2, 1.0}), 1e8),
          lin(assemble_linearization(model)), spec(spectrum_L(lin.L, disp)), basis(disp),
          solver(disp, lin.L, spec), kappa(compute_kappa(solver, basis, disp, 0)), fam(disp, lin.L)
    {
    }
};

const Fixture& fx()
{
    static Fixture f;
    return f;
}

RealMatrix gaussian_profile(const Fixture& F, const XBox& box, double amp, double sigma)
{
    RealMatrix w(F.disp.size(), box.nx);
    RealField e2 = F.basis.e(2);
    for (int x = 0; x < box.nx; ++x) {
        double s = x * box.dx() - 0.5 * box.X;
        w.col(x) = amp * std::exp(-s * s / (2.0 * sigma * sigma)) * e2;
    }
    return w;
}

} // namespace

TEST_CASE("D(0) is L and the slow eigenvalues are diffusive")
{
    const auto& F = fx();
    ModeOperator D0 = F.fam.at_axis(0.0);
    CHECK((D0.matrix - F.lin.L.entries.cast<cplx>()).cwiseAbs().maxCoeff() == 0.0);
    SpectrumD s0 = spectrum_D(D0);
    double lmax = F.spec.eigenvalues.maxCoeff();
    CHECK(std::abs(s0.lambda1) < 1e-10 * lmax);
    CHECK(std::abs(s0.lambda2) < 1e-10 * lmax);
    CHECK(s0.gap_rest == doctest::Approx(F.spec.gap).epsilon(1e-8));

    Mat2 ks = 0.5 * (F.kappa.kappa_op + F.kappa.kappa_op.transpose());
    Eigen::SelfAdjointEigenSolver<Mat2> es(ks);
    for (double p : {0.01, 0.02}) {
        SpectrumD s = spectrum_D(F.fam.at_axis(p));
        CHECK(std::abs(s.lambda1.imag()) < 1e-6 * p * p);
        CHECK(std::abs(s.lambda2.imag()) < 1e-6 * p * p);
        CHECK(s.lambda1.real() / (p * p) == doctest::Approx(es.eigenvalues()[0]).epsilon(0.01));
        CHECK(s.lambda2.real() / (p * p) == doctest::Approx(es.eigenvalues()[1]).epsilon(0.01));
        CHECK(s.gap_rest > 0.5 * F.spec.gap);
    }
}

TEST_CASE("p0 bisection brackets the two-eigenvalue region")
{
    const auto& F = fx();
    P0Result r = find_p0(F.fam, F.spec.gap);
    CHECK(r.p0 > 0.0);
    CHECK(r.b > 0.0);
    SpectrumD below = spectrum_D(F.fam.at_axis(0.9 * r.p0));
    CHECK(below.eigenvalues[1].real() < 0.5 * F.spec.gap);
    CHECK(below.eigenvalues[2].real() >= 0.5 * F.spec.gap);
    SpectrumD far = spectrum_D(F.fam.at_axis(2.0 * r.p0));
    CHECK(far.eigenvalues[0].real() >= r.b * (1.0 - 1e-12));
}

TEST_CASE("mode semigroup")
{
    const auto& F = fx();
    const Index N = F.disp.size();
    ModeSemigroup S(F.fam.at_axis(0.1));
    REQUIRE(S.eigen_path());
    CHECK((S.exp(0.0) - ComplexMatrix::Identity(N, N)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(semigroup_property_residual(S, 3.0, 5.0) < 1e-8);
    CHECK(semigroup_property_residual(S, 0.5, 40.0) < 1e-8);

    ModeSemigroup pade(F.fam.at_axis(0.1), 0.0);
    CHECK_FALSE(pade.eigen_path());
    ComplexMatrix a = S.exp(2.0), b = pade.exp(2.0);
    CHECK(norm_B(a - b) < 1e-8 * norm_B(b));
    auto [a1, a2] = S.phi(0.5);
    auto [b1, b2] = pade.phi(0.5);
    CHECK(norm_B(a1 - b1) < 1e-8 * norm_B(b1));
    CHECK(norm_B(a2 - b2) < 1e-8 * norm_B(b2));

    // h phi_1(-hD) = D^{-1}(I - e^{-hD}) on a mode where D is invertible
    ComplexMatrix D = S.op().matrix;
    ComplexMatrix lhs = D * a1, rhs = ComplexMatrix::Identity(N, N) - S.exp(0.5);
    CHECK(norm_B(lhs - rhs) < 1e-8 * norm_B(rhs));

    // H-contraction of the BDCSVD norm and the slow projector is idempotent
    CHECK(norm_H(S.exp(1.0), F.disp) <= 1.0 + 1e-10);
    ComplexMatrix P = S.slow_projector();
    CHECK(norm_B(P * P - P) < 1e-8 * norm_B(P));

    CHECK_THROWS_AS(S.exp(-1.0), ConfigError);
}

TEST_CASE("block decomposition at p = 0 and small p")
{
    const auto& F = fx();
    ModeSemigroup S0(F.fam.at_axis(0.0));
    BlockResiduals r0 = block_decomposition_check(F.fam, S0, F.solver, F.basis, F.kappa, 10.0);
    CHECK(r0.pp < 1e-10 * r0.k_norm);
    CHECK(r0.qp < 1e-10 * r0.k_norm);
    CHECK(r0.pq < 1e-10 * r0.k_norm);

    ComplexMatrix P = projector_P(F.basis);
    CHECK(norm_B(P * P - P) < 1e-12 * norm_B(P));

    BlockResiduals a = block_decomposition_check(F.fam, ModeSemigroup(F.fam.at_axis(0.02)), F.solver,
                                                 F.basis, F.kappa, 10.0);
    BlockResiduals b = block_decomposition_check(F.fam, ModeSemigroup(F.fam.at_axis(0.01)), F.solver,
                                                 F.basis, F.kappa, 10.0);
    CHECK(b.pp < a.pp);
    CHECK(b.qp < a.qp);
    CHECK(b.pp < 0.01 * b.k_norm);
}

TEST_CASE("x transforms")
{
    XBox box{16, 40.0};
    const Index N = 3;
    RealMatrix f(N, box.nx), df(N, box.nx);
    for (int x = 0; x < box.nx; ++x) {
        double s = x * box.dx();
        double q1 = box.p(1), q3 = box.p(3);
        f(0, x) = 1.0 + std::sin(q1 * s);
        f(1, x) = std::cos(q3 * s) - 0.5 * std::sin(q1 * s);
        f(2, x) = 2.0;
        df(0, x) = q1 * std::cos(q1 * s);
        df(1, x) = -q3 * std::sin(q3 * s) - 0.5 * q1 * std::cos(q1 * s);
        df(2, x) = 0.0;
    }
    ModeState m = to_modes(f, box);
    CHECK(m.w.cols() == box.nx / 2 + 1);
    CHECK(std::abs(m.w(2, 0) - cplx(2.0 * box.X, 0.0)) < 1e-12);
    CHECK((to_space(m, box) - f).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((spectral_dx(f, box) - df).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS((XBox{15, 10.0}).validate(), ConfigError);
    CHECK_THROWS_AS((XBox{16, -1.0}).validate(), ConfigError);
    CHECK_THROWS_AS(to_modes(RealMatrix::Zero(N, 8), box), ConfigError);
    CHECK(parse_integrator("rk4") == Integrator::rk4);
    CHECK(to_string(parse_integrator("etd2")) == "etd2");
    CHECK_THROWS_AS(parse_integrator("euler"), ConfigError);
}

TEST_CASE("uniform equilibria stay constant")
{
    const auto& F = fx();
    XBox box{8, 40.0};
    RealField weq = equilibrium(F.disp, 1.02, 0.01) - F.basis.e(1);
    RealMatrix w0 = weq.replicate(1, box.nx);
    for (Integrator it : {Integrator::etd2, Integrator::rk4}) {
        EvolutionOptions o;
        o.integrator = it;
        if (it == Integrator::etd2) o.dt = 0.1;
        Evolver ev(F.model, F.fam, box, o);
        EvolutionTrajectory tr = ev.run(to_modes(w0, box), {0.0, 20 * ev.dt()});
        RealMatrix w1 = to_space(tr.snapshots.back().state, box);
        double tau = F.model.collision(equilibrium(F.disp, 1.02, 0.01)).cwiseAbs().maxCoeff();
        CHECK((w1 - w0).cwiseAbs().maxCoeff() < 1e-10 * weq.cwiseAbs().maxCoeff() + 50 * tr.snapshots.back().t * tau);
        CHECK(tr.min_W > 0.0);
    }
}

TEST_CASE("nonlinear evolution conserves and integrators agree")
{
    const auto& F = fx();
    XBox box{16, 40.0};
    RealMatrix w0 = gaussian_profile(F, box, 0.01, 4.0);
    double dt_rk = Evolver::stability_step(F.lin, F.disp, box, 1.0, 1.0);
    CHECK(dt_rk > 0.0);

    EvolutionOptions ork;
    ork.integrator = Integrator::rk4;
    Evolver rk(F.model, F.fam, box, ork);
    CHECK(rk.dt() > 0.0);
    double t1 = 200 * rk.dt();

    EvolutionOptions oe;
    oe.dt = t1 / 8.0;
    oe.halving_check_steps = 2;
    Evolver et(F.model, F.fam, box, oe);

    EvolutionTrajectory a = rk.run(to_modes(w0, box), {0.0, t1});
    EvolutionTrajectory b = et.run(to_modes(w0, box), {0.0, t1});
    CHECK(a.snapshots.back().t == doctest::Approx(t1));
    CHECK(b.snapshots.back().t == doctest::Approx(t1));
    CHECK(b.halving_difference < 1e-4);
    for (double d : a.conservation_drift) CHECK(d < 1e-10);
    for (double d : b.conservation_drift) CHECK(d < 1e-10);
    const ComplexMatrix& wa = a.snapshots.back().state.w;
    const ComplexMatrix& wb = b.snapshots.back().state.w;
    CHECK((wa - wb).cwiseAbs().maxCoeff() < 1e-4 * wa.cwiseAbs().maxCoeff());

    // the nonlinear remainder is second order in the amplitude
    EvolutionOptions ol = oe;
    ol.linear_only = true;
    ol.halving_check_steps = 0;
    Evolver lin(F.model, F.fam, box, ol);
    auto diff = [&](double amp) {
        RealMatrix w = gaussian_profile(F, box, amp, 4.0);
        const ComplexMatrix n = et.run(to_modes(w, box), {t1}).snapshots.back().state.w;
        const ComplexMatrix l = lin.run(to_modes(w, box), {t1}).snapshots.back().state.w;
        return (n - l).cwiseAbs().maxCoeff();
    };
    double r = diff(0.01) / diff(0.005);
    CHECK(r == doctest::Approx(4.0).epsilon(0.1));

    EvolutionOptions bad;
    bad.collision_scale = 0.0;
    CHECK_THROWS_AS(Evolver(F.model, F.fam, box, bad), ConfigError);
    CHECK_THROWS_AS(et.run(to_modes(w0, box), {2.0, 1.0}), ConfigError);
    RealMatrix neg = gaussian_profile(F, box, -1e3, 4.0);
    CHECK_THROWS_AS(et.run(to_modes(neg, box), {t1}), NumericalError);
}

TEST_CASE("weighted norms and leading terms")
{
    const auto& F = fx();
    XBox box{32, 80.0};
    WeightedNormSpec ws;
    CHECK(ws.weight(0.0, 5.0) == 1.0);
    CHECK(ws.weight(0.5, 3.0) == doctest::Approx(std::pow(1.0 + 4.0 * 0.25, -2)));
    CHECK_NOTHROW(ws.validate(2));
    CHECK_THROWS_AS((WeightedNormSpec{1}).validate(2), ConfigError);

    RealMatrix w0x = gaussian_profile(F, box, 0.01, 6.0);
    ModeState w0 = to_modes(w0x, box);
    SlowFastSplit sp = split(w0, F.basis);
    CHECK((sp.T + sp.v - w0.w).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(sp.v.cwiseAbs().maxCoeff() < 1e-12 * sp.T.cwiseAbs().maxCoeff());

    SlowFastSplit l0 = leading_terms(w0, 0.0, box, F.basis, F.kappa, F.solver, F.disp);
    // only the content above the |p| <= 1 cutoff differs
    CHECK(weighted_norm(sp.T - l0.T, box, 0.0, ws) < 1e-6 * weighted_norm(sp.T, box, 0.0, ws));

    // T0 follows the kappa heat kernel mode by mode
    SlowFastSplit l1 = leading_terms(w0, 7.0, box, F.basis, F.kappa, F.solver, F.disp);
    int m = 3;
    double p = box.p(m);
    Vec2c c0 = F.basis.coordinates(ComplexField(l0.T.col(m)));
    Vec2c c1 = F.basis.coordinates(ComplexField(l1.T.col(m)));
    Mat2 G = F.basis.gram();
    Mat2 op = G.inverse() * F.kappa.kappa_ab;
    Mat2 ek = (-7.0 * p * p * op).exp();
    Vec2c expect = ek.cast<cplx>() * c0;
    CHECK((c1 - expect).norm() < 1e-10 * c0.norm());

    // v0 is slaved: its currents follow Fourier's law
    Eigen::MatrixXcd j = currents(ComplexField(l1.v.col(m)), F.basis, F.disp);
    Vec2c pred = F.kappa.kappa_ab.cast<cplx>() * c1 * cplx(0.0, p);
    CHECK((j.col(0) - pred).norm() < 1e-8 * pred.norm());

    std::vector<double> ts, ys;
    for (double t = 1.0; t < 1e4; t *= 2.0) {
        ts.push_back(t);
        ys.push_back(3.0 * std::log(1.0 + t) / std::sqrt(t));
    }
    int used = 0;
    CHECK(log_slope(ts, ys, 10.0, 5000.0, true, &used) == doctest::Approx(-0.5).epsilon(1e-10));
    CHECK(used == 9);

    CHECK(box_contamination(0.0, box, 6.0, 4.0) < box_contamination(100.0, box, 6.0, 4.0));
    CHECK(box_contamination(0.0, box, 6.0, 4.0) < 1e-30);
}

TEST_CASE("decay diagnostics on a short linear run")
{
    const auto& F = fx();
    XBox box{32, 80.0};
    RealMatrix w0x = gaussian_profile(F, box, 0.01, 6.0);
    EvolutionOptions o;
    o.dt = 0.5;
    o.linear_only = true;
    Evolver ev(F.model, F.fam, box, o);
    EvolutionTrajectory tr = ev.run(to_modes(w0x, box), {0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0});
    DecayReport rep = decay_diagnostics(tr, box, F.basis, F.kappa, F.solver, F.disp, WeightedNormSpec{}, 6.0);
    REQUIRE(rep.rows.size() == 7);
    CHECK(rep.rows[0].T_dev < 1e-6 * rep.rows[0].T_norm);
    CHECK(rep.t_box > 0.0);
    for (const auto& r : rep.rows) CHECK(r.conservation_drift < 1e-10);
    // linear ETD2 steps are exact: w(p,t) = e^{-tD(p)} w(p,0)
    const ModeState w0 = to_modes(w0x, box);
    for (int m : {1, 4}) {
        ModeSemigroup S(F.fam.at_axis(box.p(m)));
        ComplexField expect = S.exp(32.0) * ComplexField(w0.w.col(m));
        ComplexField got = tr.snapshots.back().state.w.col(m);
        CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-10 * w0.w.col(m).cwiseAbs().maxCoeff());
    }

    EvolutionTrajectory empty;
    CHECK_THROWS_AS(decay_diagnostics(empty, box, F.basis, F.kappa, F.solver, F.disp, WeightedNormSpec{}, 6.0),
                    ConfigError);
}

TEST_CASE("hydrodynamic limit plumbing")
{
    const auto& F = fx();
    XBox box{8, 20.0};
    const Index N = F.disp.size();
    HydroInitial zero{RealMatrix::Zero(2, box.nx), RealMatrix::Zero(N, box.nx)};
    HydroReport z = hydro_limit_study(F.model, F.fam, F.basis, box, zero, {0.4, 0.2}, 1.0, WeightedNormSpec{});
    REQUIRE(z.rows.size() == 2);
    for (const auto& r : z.rows) CHECK(r.distance == 0.0);
    CHECK(z.monotone);
    CHECK_THROWS_AS(hydro_limit_study(F.model, F.fam, F.basis, box, zero, {0.2, 0.4}, 1.0, WeightedNormSpec{}),
                    ConfigError);
    CHECK_THROWS_AS(hydro_limit_study(F.model, F.fam, F.basis, box, zero, {}, 1.0, WeightedNormSpec{}),
                    ConfigError);

    // T = 0 table entry is the linear conductivity in coordinate form
    DiffusivityTable K(F.model, F.basis, Vec2(-1e-3, -1e-3), Vec2(1e-3, 1e-3), 3);
    Mat2 k0 = F.basis.gram().inverse() * F.kappa.kappa_ab;
    CHECK((K.coord(Vec2::Zero()) - k0).norm() < 1e-8 * k0.norm());
    CHECK(K.max_table_condition() > 1.0);

    // a constant profile is stationary for the heat reference
    RealMatrix c = RealMatrix::Constant(2, box.nx, 5e-4);
    CHECK((heat_reference(K, c, box, 1.0, 1e-2) - c).cwiseAbs().maxCoeff() < 1e-15);
    RealMatrix v = slaved_reference(F.model, F.basis, c, box);
    CHECK(v.cwiseAbs().maxCoeff() < 1e-12);
}
