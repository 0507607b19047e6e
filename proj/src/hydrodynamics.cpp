#include "pbe/hydrodynamics.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace pbe {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
}

SlowBasis::SlowBasis(const DispersionTable& disp) : H_(disp.inner_product())
{
    e_[0] = disp.omega_pow(-1);
    e_[1] = disp.omega_pow(-2);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) gram_(a, b) = H_.inner(e_[a], e_[b]);
    Eigen::LLT<Mat2> llt(gram_);
    if (llt.info() != Eigen::Success) throw NumericalError("slow-mode Gram matrix not positive");
    Mat2 Lc = llt.matrixL();
    coeff_ = Lc.transpose().inverse();
    for (int j = 0; j < 2; ++j) u_[j] = e_[0] * coeff_(0, j) + e_[1] * coeff_(1, j);
}

RealField SlowBasis::P(const RealField& f) const
{
    return u_[0] * H_.inner(u_[0], f) + u_[1] * H_.inner(u_[1], f);
}

ComplexField SlowBasis::P(const ComplexField& f) const
{
    ComplexField out = ComplexField::Zero(f.size());
    for (int j = 0; j < 2; ++j) {
        ComplexField uj = u_[j].cast<cplx>();
        out += uj * H_.inner(uj, f);
    }
    return out;
}

Vec2 SlowBasis::observables(const RealField& w) const
{
    return {H_.inner(e_[0], w), H_.inner(e_[1], w)};
}

Vec2c SlowBasis::observables(const ComplexField& w) const
{
    return {H_.inner(ComplexField(e_[0].cast<cplx>()), w), H_.inner(ComplexField(e_[1].cast<cplx>()), w)};
}

Vec2c SlowBasis::coordinates(const ComplexField& w) const
{
    return gram_.cast<cplx>().inverse() * observables(w);
}

ComplexField SlowBasis::field(const Vec2c& Tt) const
{
    return e_[0].cast<cplx>() * Tt[0] + e_[1].cast<cplx>() * Tt[1];
}

Mat2 SlowBasis::operator_to_pairing(const Mat2& kop) const
{
    Mat2 Ci = coeff_.inverse();
    return Ci.transpose() * kop * Ci;
}

FastSolver::FastSolver(const DispersionTable& disp, const OperatorMatrix& L, const SpectralSummary& spec)
    : disp_(disp), L_(L)
{
    const Index N = L.size();
    if (spec.eigenvectors.cols() < 3) throw ConfigError("fast solver needs spectral eigenvectors");
    const RealField& w = disp.omega();
    phi_ = w.asDiagonal() * spec.eigenvectors.leftCols(2) / std::sqrt(static_cast<double>(N));
    Eigen::HouseholderQR<RealMatrix> qr(phi_);
    phi_ = qr.householderQ() * RealMatrix::Identity(N, 2);
    RealMatrix S = symmetrized(L.entries, disp);
    S += spec.gap * phi_ * phi_.transpose();
    llt_.compute(S);
    if (llt_.info() != Eigen::Success) throw NumericalError("deflated operator is not positive definite");
}

RealField FastSolver::project(const RealField& y) const
{
    return y - phi_ * (phi_.transpose() * y);
}

double FastSolver::null_overlap(const RealField& g) const
{
    RealField y = disp_.omega().cwiseProduct(g);
    double n = y.norm();
    return n == 0.0 ? 0.0 : (phi_.transpose() * y).norm() / n;
}

RealField FastSolver::solve(const RealField& g) const
{
    const RealField& w = disp_.omega();
    RealField y = project(w.cwiseProduct(g));
    RealField z = project(llt_.solve(y));
    RealField x = z.cwiseQuotient(w);
    double gn = w.cwiseProduct(g).norm();
    RealField r = w.cwiseProduct(L_.apply(x)) - y;
    last_residual_ = gn == 0.0 ? 0.0 : r.norm() / gn;
    return x;
}

ComplexField FastSolver::solve(const ComplexField& g) const
{
    RealField re = solve(RealField(g.real()));
    double r1 = last_residual_;
    RealField im = solve(RealField(g.imag()));
    last_residual_ = std::max(r1, last_residual_);
    ComplexField out(g.size());
    out.real() = re;
    out.imag() = im;
    return out;
}

ConductivityMatrix compute_kappa(const FastSolver& solver, const SlowBasis& basis,
                                 const DispersionTable& disp, int axis)
{
    ConductivityMatrix k;
    k.axis = axis;
    RealField d = disp.grad(axis);
    for (int b = 0; b < 2; ++b) {
        RealField g = d.cwiseProduct(basis.e(b + 1));
        if (solver.null_overlap(g) > 1e-8)
            throw NumericalError("kappa source not orthogonal to the null space");
        RealField x = solver.solve(g);
        k.max_residual = std::max(k.max_residual, solver.last_residual());
        RealField dx = d.cwiseProduct(x);
        for (int a = 0; a < 2; ++a) k.kappa_ab(a, b) = basis.H().inner(basis.e(a + 1), dx) / (two_pi * two_pi);
    }
    if (k.max_residual > 1e-8) throw NumericalError("kappa solve residual above tolerance");
    k.kappa_op = basis.pairing_to_operator(k.kappa_ab);
    Eigen::SelfAdjointEigenSolver<Mat2> es(0.5 * (k.kappa_op + k.kappa_op.transpose()));
    k.mu = es.eigenvalues();
    return k;
}

double direction_mixing(const FastSolver& solver, const SlowBasis& basis,
                        const DispersionTable& disp, int i, int j)
{
    RealField di = disp.grad(i), dj = disp.grad(j);
    double worst = 0.0;
    for (int b = 0; b < 2; ++b) {
        RealField x = solver.solve(RealField(dj.cwiseProduct(basis.e(b + 1))));
        RealField dx = di.cwiseProduct(x);
        for (int a = 0; a < 2; ++a) worst = std::max(worst, std::abs(basis.H().inner(basis.e(a + 1), dx)));
    }
    return worst;
}

Eigen::MatrixXd currents(const RealField& w, const SlowBasis& basis, const DispersionTable& disp)
{
    const int d = disp.params().d;
    Eigen::MatrixXd j(2, d);
    for (int ax = 0; ax < d; ++ax) {
        RealField gw = disp.grad(ax).cwiseProduct(w);
        for (int a = 0; a < 2; ++a) j(a, ax) = -basis.H().inner(basis.e(a + 1), gw) / two_pi;
    }
    return j;
}

Eigen::MatrixXcd currents(const ComplexField& w, const SlowBasis& basis, const DispersionTable& disp)
{
    const int d = disp.params().d;
    Eigen::MatrixXcd j(2, d);
    for (int ax = 0; ax < d; ++ax) {
        ComplexField gw = disp.grad(ax).cast<cplx>().cwiseProduct(w);
        for (int a = 0; a < 2; ++a)
            j(a, ax) = -basis.H().inner(ComplexField(basis.e(a + 1).cast<cplx>()), gw) / two_pi;
    }
    return j;
}

ComplexField slaved_state(const FastSolver& solver, const SlowBasis& basis,
                          const DispersionTable& disp, const Vec2c& Tt, const Eigen::VectorXd& p)
{
    RealField pg = disp.grad() * p;
    ComplexField g = pg.cast<cplx>().cwiseProduct(basis.field(Tt));
    return solver.solve(g) * cplx(0.0, -1.0 / two_pi);
}

FourierLawResult fourier_law_check(const ConductivityMatrix& kappa, const SlowBasis& basis,
                                   const DispersionTable& disp, const Vec2c& Tt,
                                   const Eigen::VectorXd& p, const ComplexField& v)
{
    FourierLawResult r;
    r.measured = currents(v, basis, disp);
    const int d = disp.params().d;
    r.predicted.resize(2, d);
    Vec2c kt = kappa.kappa_ab.cast<cplx>() * Tt;
    for (int ax = 0; ax < d; ++ax)
        for (int a = 0; a < 2; ++a) r.predicted(a, ax) = cplx(0.0, p[ax]) * kt[a];
    r.residual = (r.measured - r.predicted).cwiseAbs().maxCoeff();
    r.scale = p.norm() * basis.H().norm(basis.field(Tt));
    return r;
}

BorderedSolver::BorderedSolver(const RealMatrix& J, const SlowBasis& basis)
{
    const Index N = J.rows();
    RealMatrix A = RealMatrix::Zero(N + 2, N + 2);
    double s = J.cwiseAbs().maxCoeff();
    if (s == 0.0) s = 1.0;
    A.topLeftCorner(N, N) = J;
    const RealField& w2 = basis.H().weight();
    B_.resize(N, 2);
    for (int a = 0; a < 2; ++a) {
        RealField c = basis.e(a + 1).cwiseProduct(w2);
        double ce = c.cwiseAbs().maxCoeff(), ee = basis.e(a + 1).cwiseAbs().maxCoeff();
        A.block(0, N + a, N, 1) = basis.e(a + 1) * (s / ee);
        A.block(N + a, 0, 1, N) = c.transpose() * (s / ce);
        B_.col(a) = c * (s / ce);
    }
    lu_.compute(A);
    cond_ = 1.0 / lu_.rcond();
}

RealField BorderedSolver::solve(const RealField& g) const
{
    const Index N = g.size();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N + 2);
    rhs.head(N) = g;
    Eigen::VectorXd x = lu_.solve(rhs);
    return x.head(N);
}

NonlinearDiffusivity nonlinear_diffusivity(const CollisionModel& model, const SlowBasis& basis,
                                           const Vec2& Tt, int axis, double max_condition)
{
    const DispersionTable& disp = model.dispersion();
    RealField W = basis.e(1) + basis.field(Tt);
    if (W.minCoeff() <= 0.0) throw ConfigError("omega^-1 + T must be positive");
    RealMatrix J = model.jacobian(W);
    BorderedSolver bs(J, basis);
    NonlinearDiffusivity nd;
    nd.condition = bs.condition();
    if (!(nd.condition < max_condition)) throw NumericalError("linearisation about omega^-1 + T is near singular");
    RealField d = disp.grad(axis);
    for (int b = 0; b < 2; ++b) {
        RealField x = bs.solve(RealField(d.cwiseProduct(basis.e(b + 1))));
        RealField dx = d.cwiseProduct(x);
        for (int a = 0; a < 2; ++a) nd.K_ab(a, b) = -basis.H().inner(basis.e(a + 1), dx) / (two_pi * two_pi);
    }
    nd.K_op = basis.pairing_to_operator(nd.K_ab);
    double n = nd.K_op.norm();
    nd.asymmetry = n == 0.0 ? 0.0 : (nd.K_op - nd.K_op.transpose()).norm() / n;
    return nd;
}

} // namespace pbe
