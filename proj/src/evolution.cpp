#include "pbe/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/FFT>
#include <unsupported/Eigen/MatrixFunctions>

namespace pbe {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

std::vector<Index> order_by_real(const Eigen::VectorXcd& ev)
{
    std::vector<Index> idx(ev.size());
    for (Index i = 0; i < ev.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) {
        if (ev[a].real() != ev[b].real()) return ev[a].real() < ev[b].real();
        return ev[a].imag() < ev[b].imag();
    });
    return idx;
}

// phi_1(z) = (e^z - 1) / z and phi_2(z) = (e^z - 1 - z) / z^2
std::pair<cplx, cplx> phi12(cplx z)
{
    if (std::abs(z) < 0.1) {
        cplx p1 = 0.0, p2 = 0.0, term = 1.0;
        double f1 = 1.0, f2 = 2.0; // 1/(j+1)!, 1/(j+2)!
        for (int j = 0; j < 14; ++j) {
            p1 += term / f1;
            p2 += term / f2;
            term *= z;
            f1 *= (j + 2);
            f2 *= (j + 3);
        }
        return {p1, p2};
    }
    cplx e = std::exp(z);
    return {(e - 1.0) / z, (e - 1.0 - z) / (z * z)};
}

} // namespace

// ---- mode operators ----

ModeFamily::ModeFamily(const DispersionTable& disp, const OperatorMatrix& L)
    : disp_(disp), L_(L), S_(symmetrized(L.entries, disp))
{
}

ModeOperator ModeFamily::at(const Eigen::VectorXd& p, double sc, double st) const
{
    const int d = disp_.params().d;
    if (p.size() != d) throw ConfigError("p must have one component per axis");
    ModeOperator D;
    D.p = p;
    D.omega = disp_.omega();
    RealField diag = disp_.grad() * p * (st / two_pi);
    D.matrix = (sc * L_.entries).cast<cplx>();
    D.similar = (sc * S_).cast<cplx>();
    for (Index i = 0; i < diag.size(); ++i) {
        D.matrix(i, i) += cplx(0.0, diag[i]);
        D.similar(i, i) += cplx(0.0, diag[i]);
    }
    return D;
}

ModeOperator ModeFamily::at_axis(double p1, double sc, double st) const
{
    Eigen::VectorXd p = Eigen::VectorXd::Zero(disp_.params().d);
    p[0] = p1;
    return at(p, sc, st);
}

ComplexMatrix ModeFamily::to_node(const ComplexMatrix& S) const
{
    const RealField& w = disp_.omega();
    return w.cwiseInverse().asDiagonal() * S * w.asDiagonal();
}

ComplexMatrix ModeFamily::to_similar(const ComplexMatrix& A) const
{
    const RealField& w = disp_.omega();
    return w.asDiagonal() * A * w.cwiseInverse().asDiagonal();
}

SpectrumD spectrum_D(const ModeOperator& D)
{
    Eigen::ComplexEigenSolver<ComplexMatrix> es(D.similar, false);
    if (es.info() != Eigen::Success) throw NumericalError("complex eigensolver failed");
    auto idx = order_by_real(es.eigenvalues());
    SpectrumD out;
    out.eigenvalues.resize(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) out.eigenvalues[i] = es.eigenvalues()[idx[i]];
    out.lambda1 = out.eigenvalues[0];
    out.lambda2 = out.eigenvalues[1];
    out.gap_rest = out.eigenvalues.size() > 2 ? out.eigenvalues[2].real() : 0.0;
    return out;
}

P0Result find_p0(const ModeFamily& fam, double gap, double p_hi, double tol)
{
    auto count = [&](double p) {
        SpectrumD s = spectrum_D(fam.at_axis(p));
        int c = 0;
        for (Index i = 0; i < s.eigenvalues.size(); ++i)
            if (s.eigenvalues[i].real() < 0.5 * gap) ++c;
        return c;
    };
    P0Result r;
    double lo = 0.0, hi = p_hi;
    while (count(hi) == 2) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e3) throw NumericalError("p0 bisection did not find an upper bracket");
    }
    while (hi - lo > tol * std::max(hi, 1e-12)) {
        double mid = 0.5 * (lo + hi);
        (count(mid) == 2 ? lo : hi) = mid;
        ++r.iterations;
    }
    r.p0 = lo;
    r.b = spectrum_D(fam.at_axis(2.0 * lo)).eigenvalues[0].real();
    return r;
}

// ---- semigroup ----

ModeSemigroup::ModeSemigroup(const ModeOperator& D, double cond_limit) : D_(D)
{
    const Index N = D.similar.rows();
    w_ = D.omega;
    Eigen::ComplexEigenSolver<ComplexMatrix> es(D.similar, true);
    if (es.info() == Eigen::Success) {
        auto idx = order_by_real(es.eigenvalues());
        lam_.resize(N);
        V_.resize(N, N);
        for (Index i = 0; i < N; ++i) {
            lam_[i] = es.eigenvalues()[idx[i]];
            V_.col(i) = es.eigenvectors().col(idx[i]);
        }
        Eigen::PartialPivLU<ComplexMatrix> lu(V_);
        Vinv_ = lu.inverse();
        cond_ = V_.cwiseAbs().colwise().sum().maxCoeff() * Vinv_.cwiseAbs().colwise().sum().maxCoeff();
        eigen_ok_ = std::isfinite(cond_) && cond_ <= cond_limit;
    }
}

ComplexMatrix ModeSemigroup::to_node(const ComplexMatrix& S) const
{
    return w_.cwiseInverse().asDiagonal() * S * w_.asDiagonal();
}

ComplexMatrix ModeSemigroup::exp(double t) const
{
    if (t < 0.0) throw ConfigError("semigroup time must be non-negative");
    if (eigen_ok_) {
        Eigen::VectorXcd e = (-t * lam_).array().exp();
        return to_node(V_ * e.asDiagonal() * Vinv_);
    }
    ComplexMatrix A = -t * D_.similar;
    return to_node(A.exp());
}

std::pair<ComplexMatrix, ComplexMatrix> ModeSemigroup::phi(double h) const
{
    const Index N = D_.similar.rows();
    if (eigen_ok_) {
        Eigen::VectorXcd f1(N), f2(N);
        for (Index i = 0; i < N; ++i) {
            auto [a, b] = phi12(-h * lam_[i]);
            f1[i] = h * a;
            f2[i] = h * b;
        }
        return {to_node(V_ * f1.asDiagonal() * Vinv_), to_node(V_ * f2.asDiagonal() * Vinv_)};
    }
    ComplexMatrix Z = ComplexMatrix::Zero(3 * N, 3 * N);
    Z.topLeftCorner(N, N) = -h * D_.similar;
    Z.block(0, N, N, N) = ComplexMatrix::Identity(N, N);
    Z.block(N, 2 * N, N, N) = ComplexMatrix::Identity(N, N);
    ComplexMatrix E = Z.exp();
    return {to_node(h * E.block(0, N, N, N)), to_node(h * E.block(0, 2 * N, N, N))};
}

ComplexMatrix ModeSemigroup::slow_projector() const
{
    if (V_.size() == 0) throw NumericalError("no eigendecomposition for the spectral projector");
    return to_node(V_.leftCols(2) * Vinv_.topRows(2));
}

double semigroup_property_residual(const ModeSemigroup& S, double t, double s)
{
    ComplexMatrix a = S.exp(t + s), b = S.exp(t) * S.exp(s);
    double n = norm_B(a);
    return norm_B(a - b) / std::max(n, 1e-300);
}

double norm_B(const ComplexMatrix& A) { return A.cwiseAbs().rowwise().sum().maxCoeff(); }

double norm_H(const ComplexMatrix& A, const DispersionTable& disp)
{
    const RealField& w = disp.omega();
    ComplexMatrix S = w.asDiagonal() * A * w.cwiseInverse().asDiagonal();
    Eigen::BDCSVD<ComplexMatrix> svd(S);
    return svd.singularValues()[0];
}

ComplexMatrix projector_P(const SlowBasis& basis)
{
    const RealField& wt = basis.H().weight();
    const Index N = wt.size();
    RealMatrix U(N, 2);
    U.col(0) = basis.u(1);
    U.col(1) = basis.u(2);
    RealMatrix Ut = (wt.asDiagonal() * U).transpose() / static_cast<double>(N);
    return (U * Ut).cast<cplx>();
}

BlockResiduals block_decomposition_check(const ModeFamily& fam, const ModeSemigroup& S,
                                         const FastSolver& solver, const SlowBasis& basis,
                                         const ConductivityMatrix& kappa, double t)
{
    const DispersionTable& disp = fam.dispersion();
    const Index N = disp.size();
    const RealField& wt = basis.H().weight();
    const double p2 = S.op().p.squaredNorm();

    ComplexMatrix etD = S.exp(t);
    ComplexMatrix P = projector_P(basis);
    ComplexMatrix I = ComplexMatrix::Identity(N, N);
    ComplexMatrix Q = I - P;

    ComplexMatrix U(N, 2), AU(N, 2);
    RealField pg = disp.grad() * S.op().p;
    for (int j = 0; j < 2; ++j) {
        U.col(j) = basis.u(j + 1).cast<cplx>();
        ComplexField g = pg.cwiseProduct(basis.u(j + 1)).cast<cplx>();
        AU.col(j) = solver.solve(g) * cplx(0.0, -1.0 / two_pi);
    }
    Mat2 ek = (-t * p2 * kappa.kappa_op).exp();
    Mat2c ekc = ek.cast<cplx>();
    ComplexMatrix Ut = (wt.cast<cplx>().asDiagonal() * U).transpose() / static_cast<double>(N);
    ComplexMatrix AUt = (wt.cast<cplx>().asDiagonal() * AU).transpose() / static_cast<double>(N);

    ComplexMatrix K = U * ekc * Ut;
    ComplexMatrix KB = U * ekc * AUt;
    ComplexMatrix AK = AU * ekc * Ut;
    ComplexMatrix AKB = AU * ekc * AUt;
    ComplexMatrix Qt = I - S.slow_projector();
    ComplexMatrix R = Q * Qt * etD * Qt * Q;

    BlockResiduals r;
    ComplexMatrix PP = P * etD * P, PQ = P * etD * Q, QP = Q * etD * P, QQ = Q * etD * Q;
    r.block_pp = norm_B(PP);
    r.block_pq = norm_B(PQ);
    r.block_qp = norm_B(QP);
    r.block_qq = norm_B(QQ);
    r.k_norm = norm_B(K);
    r.pp = norm_B(PP - K);
    r.pq = norm_B(PQ - KB);
    r.qp = norm_B(QP - AK);
    r.qq = norm_B(QQ - AKB - R);
    return r;
}

// ---- x-space ----

double XBox::p(int m) const { return two_pi * m / X; }

void XBox::validate() const
{
    if (nx < 4 || nx % 2 != 0) throw ConfigError("nx must be even and at least 4");
    if (!(X > 0.0)) throw ConfigError("box length must be positive");
}

Integrator parse_integrator(const std::string& s)
{
    if (s == "etd2") return Integrator::etd2;
    if (s == "rk4") return Integrator::rk4;
    throw ConfigError("unknown integrator '" + s + "'");
}

std::string to_string(Integrator i) { return i == Integrator::etd2 ? "etd2" : "rk4"; }

ModeState to_modes(const RealMatrix& w_x, const XBox& box)
{
    const Index N = w_x.rows();
    const int nx = box.nx, M = nx / 2;
    if (w_x.cols() != nx) throw ConfigError("field has the wrong number of x cells");
    ModeState s;
    s.w.resize(N, M + 1);
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    std::vector<double> in(nx);
    std::vector<cplx> out;
    for (Index k = 0; k < N; ++k) {
        for (int x = 0; x < nx; ++x) in[x] = w_x(k, x);
        fft.fwd(out, in);
        for (int m = 0; m <= M; ++m) s.w(k, m) = out[m] * box.dx();
        s.w(k, M) = 0.0;
    }
    return s;
}

RealMatrix to_space(const ModeState& s, const XBox& box)
{
    const Index N = s.w.rows();
    const int nx = box.nx, M = nx / 2;
    RealMatrix w(N, nx);
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    std::vector<cplx> in(M + 1);
    std::vector<double> out;
    for (Index k = 0; k < N; ++k) {
        for (int m = 0; m <= M; ++m) in[m] = s.w(k, m);
        in[M] = 0.0;
        in[0] = in[0].real();
        fft.inv(out, in, nx);
        for (int x = 0; x < nx; ++x) w(k, x) = out[x] / box.dx();
    }
    return w;
}

RealMatrix spectral_dx(const RealMatrix& f, const XBox& box)
{
    ModeState s = to_modes(f, box);
    for (int m = 0; m <= box.nx / 2; ++m) s.w.col(m) *= cplx(0.0, box.p(m));
    return to_space(s, box);
}

Evolver::Evolver(const CollisionModel& model, const ModeFamily& fam, XBox box, EvolutionOptions opt)
    : model_(model), fam_(fam), box_(box), opt_(opt)
{
    box_.validate();
    if (!(opt_.collision_scale > 0.0) || !(opt_.transport_scale >= 0.0))
        throw ConfigError("evolution scales must be positive");
    dt_ = opt_.dt;
    if (dt_ <= 0.0) {
        double mM = 0.0;
        const RealMatrix& L = fam.L().entries;
        for (Index i = 0; i < L.rows(); ++i) mM = std::max(mM, std::abs(L(i, i)));
        double tr = fam.dispersion().grad(0).cwiseAbs().maxCoeff() / two_pi * std::numbers::pi * box_.nx / box_.X;
        double stab = 0.4 / (opt_.collision_scale * mM + opt_.transport_scale * tr);
        dt_ = opt_.integrator == Integrator::rk4 ? stab : 0.1 / opt_.collision_scale;
    }
}

double Evolver::stability_step(const Linearization& lin, const DispersionTable& disp, const XBox& box,
                               double sc, double st)
{
    double tr = disp.grad(0).cwiseAbs().maxCoeff() / two_pi * std::numbers::pi * box.nx / box.X;
    return 0.4 / (sc * lin.M.maxCoeff() + st * tr);
}

void Evolver::prepare(double dt) const
{
    if (dt == prepared_dt_) return;
    const int M = box_.nx / 2;
    E_.assign(M, {});
    P1_.assign(M, {});
    P2_.assign(M, {});
    D_.assign(M, {});
#pragma omp parallel for schedule(dynamic)
    for (int m = 0; m < M; ++m) {
        ModeOperator D = fam_.at_axis(box_.p(m), opt_.collision_scale, opt_.transport_scale);
        if (opt_.integrator == Integrator::rk4) {
            D_[m] = D.matrix;
            continue;
        }
        ModeSemigroup S(D);
        E_[m] = S.exp(dt);
        auto ph = S.phi(dt);
        P1_[m] = std::move(ph.first);
        P2_[m] = std::move(ph.second);
    }
    prepared_dt_ = dt;
}

ModeState Evolver::nonlinear(const ModeState& s, double* minW) const
{
    const Index N = s.w.rows();
    ModeState out;
    if (opt_.linear_only) {
        out.w = ComplexMatrix::Zero(N, s.w.cols());
        return out;
    }
    RealMatrix w = to_space(s, box_);
    const RealField W0 = fam_.dispersion().omega_pow(-1);
    CellBatch W(N, box_.nx);
    for (int x = 0; x < box_.nx; ++x) W.col(x) = W0 + w.col(x);
    double mn = W.minCoeff();
    if (minW) *minW = std::min(*minW, mn);
    if (!(mn > 0.0)) throw NumericalError("W lost positivity during the evolution");
    CellBatch C = model_.collision_batch(W);
    RealMatrix n = RealMatrix(C) + fam_.L().entries * w;
    out = to_modes(n, box_);
    out.w *= opt_.collision_scale;
    return out;
}

void Evolver::step_etd2(ModeState& s, double* minW) const
{
    const int M = box_.nx / 2;
    ModeState n0 = nonlinear(s, minW);
    ModeState a;
    a.w = ComplexMatrix::Zero(s.w.rows(), s.w.cols());
#pragma omp parallel for schedule(static)
    for (int m = 0; m < M; ++m) a.w.col(m) = E_[m] * s.w.col(m) + P1_[m] * n0.w.col(m);
    ModeState n1 = nonlinear(a, minW);
#pragma omp parallel for schedule(static)
    for (int m = 0; m < M; ++m) s.w.col(m) = a.w.col(m) + P2_[m] * (n1.w.col(m) - n0.w.col(m));
}

void Evolver::step_rk4(ModeState& s, double* minW) const
{
    const int M = box_.nx / 2;
    auto rhs = [&](const ModeState& u) {
        ModeState r = nonlinear(u, minW);
#pragma omp parallel for schedule(static)
        for (int m = 0; m < M; ++m) r.w.col(m) -= D_[m] * u.w.col(m);
        r.w.col(M).setZero();
        return r;
    };
    const double h = prepared_dt_;
    ModeState k1 = rhs(s), u = s;
    u.w = s.w + 0.5 * h * k1.w;
    ModeState k2 = rhs(u);
    u.w = s.w + 0.5 * h * k2.w;
    ModeState k3 = rhs(u);
    u.w = s.w + h * k3.w;
    ModeState k4 = rhs(u);
    s.w += (h / 6.0) * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w);
}

EvolutionTrajectory Evolver::integrate(const ModeState& w0, const std::vector<long>& stops, double dt,
                                       bool) const
{
    prepare(dt);
    const SlowBasis basis(fam_.dispersion());
    auto totals = [&](const ModeState& s) {
        return basis.observables(ComplexField(s.w.col(0)));
    };
    RealMatrix wx0 = to_space(w0, box_);
    Vec2 denom = Vec2::Zero();
    for (int x = 0; x < box_.nx; ++x) denom += basis.observables(RealField(wx0.col(x))).cwiseAbs() * box_.dx();
    Vec2c tot0 = totals(w0);

    EvolutionTrajectory tr;
    tr.dt = dt;
    tr.min_W = std::numeric_limits<double>::infinity();
    ModeState s = w0;
    long step = 0;
    for (long stop : stops) {
        while (step < stop) {
            if (opt_.integrator == Integrator::etd2) step_etd2(s, &tr.min_W);
            else step_rk4(s, &tr.min_W);
            ++step;
        }
        tr.snapshots.push_back({step * dt, s});
        Vec2c d = totals(s) - tot0;
        double drift = 0.0;
        for (int a = 0; a < 2; ++a)
            if (denom[a] > 0.0) drift = std::max(drift, std::abs(d[a]) / denom[a]);
        tr.conservation_drift.push_back(drift);
    }
    tr.steps = step;
    return tr;
}

EvolutionTrajectory Evolver::run(const ModeState& w0, const std::vector<double>& times) const
{
    if (w0.w.cols() != box_.nx / 2 + 1) throw ConfigError("initial state has the wrong mode count");
    std::vector<long> stops;
    long last = 0;
    for (double t : times) {
        if (t < 0.0) throw ConfigError("output times must be non-negative");
        long s = std::lround(t / dt_);
        if (s < last) throw ConfigError("output times must be increasing");
        stops.push_back(s);
        last = s;
    }
    double halving = 0.0;
    if (opt_.halving_check_steps > 0) {
        long k = opt_.halving_check_steps;
        EvolutionTrajectory a = integrate(w0, {k}, dt_, false);
        EvolutionTrajectory b = integrate(w0, {2 * k}, 0.5 * dt_, false);
        const ComplexMatrix& wa = a.snapshots.back().state.w;
        const ComplexMatrix& wb = b.snapshots.back().state.w;
        double scale = std::max(wb.cwiseAbs().maxCoeff(), 1e-300);
        halving = (wa - wb).cwiseAbs().maxCoeff() / scale;
        if (halving > opt_.halving_tol)
            throw NumericalError("step-halving disagreement " + std::to_string(halving) + " above tolerance");
    }
    EvolutionTrajectory tr = integrate(w0, stops, dt_, true);
    tr.halving_difference = halving;
    return tr;
}

// ---- diagnostics ----

double WeightedNormSpec::weight(double p, double t) const
{
    return std::pow(1.0 + (t + 1.0) * p * p, -n_w);
}

void WeightedNormSpec::validate(int d) const
{
    if (2 * n_w <= d) throw ConfigError("weight exponent must exceed d/2");
}

double weighted_norm(const ComplexMatrix& f, const XBox& box, double t, const WeightedNormSpec& spec)
{
    double out = 0.0;
    for (int m = 0; m < box.nx / 2; ++m)
        out = std::max(out, f.col(m).cwiseAbs().maxCoeff() / spec.weight(box.p(m), t));
    return out;
}

SlowFastSplit split(const ModeState& s, const SlowBasis& basis)
{
    SlowFastSplit out;
    out.T.resize(s.w.rows(), s.w.cols());
    for (Index m = 0; m < s.w.cols(); ++m) out.T.col(m) = basis.P(ComplexField(s.w.col(m)));
    out.v = s.w - out.T;
    return out;
}

SlowFastSplit leading_terms(const ModeState& initial, double t, const XBox& box, const SlowBasis& basis,
                            const ConductivityMatrix& kappa, const FastSolver& solver,
                            const DispersionTable& disp)
{
    const Index N = initial.w.rows();
    SlowFastSplit out;
    out.T = ComplexMatrix::Zero(N, initial.w.cols());
    out.v = ComplexMatrix::Zero(N, initial.w.cols());
    const auto& H = basis.H();
    ComplexField u1 = basis.u(1).cast<cplx>(), u2 = basis.u(2).cast<cplx>();
    const RealField& g1 = disp.grad(0);
    for (int m = 0; m < box.nx / 2; ++m) {
        double p = box.p(m);
        if (p > 1.0) continue;
        ComplexField w = initial.w.col(m);
        Vec2c c{H.inner(u1, w), H.inner(u2, w)};
        Mat2 ek = (-t * p * p * kappa.kappa_op).exp();
        Vec2c ct = ek.cast<cplx>() * c;
        ComplexField T0 = u1 * ct[0] + u2 * ct[1];
        out.T.col(m) = T0;
        if (m > 0) out.v.col(m) = solver.solve(ComplexField(g1.cast<cplx>().cwiseProduct(T0) * p)) *
                                  cplx(0.0, -1.0 / two_pi);
    }
    return out;
}

double box_contamination(double t, const XBox& box, double sigma, double mu_max)
{
    double var = sigma * sigma + 2.0 * mu_max * t;
    double s = 0.0;
    for (int m = 1; m < 50; ++m) {
        double term = 2.0 * std::exp(-(m * box.X) * (m * box.X) / (2.0 * var));
        s += term;
        if (term < 1e-300) break;
    }
    return s;
}

double log_slope(const std::vector<double>& t, const std::vector<double>& y, double lo, double hi,
                 bool divide_log, int* used)
{
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (size_t i = 0; i < t.size(); ++i) {
        if (t[i] < lo || t[i] > hi || !(y[i] > 0.0)) continue;
        double X = std::log(t[i]);
        double Y = std::log(divide_log ? y[i] / std::log1p(t[i]) : y[i]);
        sx += X;
        sy += Y;
        sxx += X * X;
        sxy += X * Y;
        ++n;
    }
    if (used) *used = n;
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

DecayReport decay_diagnostics(const EvolutionTrajectory& traj, const XBox& box, const SlowBasis& basis,
                                 const ConductivityMatrix& kappa, const FastSolver& solver,
                                 const DispersionTable& disp, const WeightedNormSpec& wspec, double sigma,
                                 double t_fit_lo)
{
    if (traj.snapshots.empty()) throw ConfigError("empty trajectory");
    DecayReport rep;
    const ModeState& init = traj.snapshots.front().state;
    if (traj.snapshots.front().t != 0.0) throw ConfigError("trajectory must start at t = 0");
    const int d = disp.params().d;
    double mu_max = kappa.mu.maxCoeff();

    std::vector<double> ts, yT, yv, ys;
    for (size_t i = 0; i < traj.snapshots.size(); ++i) {
        const Snapshot& sn = traj.snapshots[i];
        SlowFastSplit sp = split(sn.state, basis);
        SlowFastSplit lead = leading_terms(init, sn.t, box, basis, kappa, solver, disp);
        DecayRow row{};
        row.t = sn.t;
        row.T_dev = weighted_norm(sp.T - lead.T, box, sn.t, wspec);
        row.v_dev = weighted_norm(sp.v - lead.v, box, sn.t, wspec);
        row.T_norm = weighted_norm(sp.T, box, sn.t, wspec);
        row.v_norm = weighted_norm(sp.v, box, sn.t, wspec);
        row.sup_T_x = to_space(ModeState{sp.T}, box).cwiseAbs().maxCoeff();
        row.conservation_drift = traj.conservation_drift[i];

        double num = 0.0, den = 0.0;
        for (int m = 1; m < box.nx / 2; ++m) {
            double p = box.p(m);
            if (p > 1.0) continue;
            ComplexField w = sn.state.w.col(m);
            Eigen::MatrixXcd j = currents(w, basis, disp);
            Vec2c Tt = basis.coordinates(ComplexField(sp.T.col(m)));
            Vec2c pred = kappa.kappa_ab.cast<cplx>() * Tt * cplx(0.0, p);
            for (int a = 0; a < 2; ++a) {
                num += std::norm(j(a, 0) - pred[a]);
                den += std::norm(pred[a]);
                for (int ax = 1; ax < d; ++ax) num += std::norm(j(a, ax));
            }
        }
        row.fourier_residual = den > 0.0 ? std::sqrt(num / den) : 0.0;
        rep.rows.push_back(row);
        ts.push_back(row.t);
        yT.push_back(row.T_dev);
        yv.push_back(row.v_dev);
        ys.push_back(row.sup_T_x);
    }
    // t_box: last time with periodic-image weight below 10%
    double tb = 0.0, tend = traj.snapshots.back().t;
    for (double t = 0.0; t <= tend; t += std::max(tend / 4096.0, 1e-9)) {
        if (box_contamination(t, box, sigma, mu_max) < 0.1) tb = t;
        else break;
    }
    rep.t_box = tb;
    rep.t_fit_lo = t_fit_lo;
    rep.t_fit_hi = tb;
    rep.slope_T = log_slope(ts, yT, t_fit_lo, tb, true, &rep.fit_points);
    rep.slope_v = log_slope(ts, yv, t_fit_lo, tb, true);
    rep.slope_sup = log_slope(ts, ys, t_fit_lo, tb, false);
    return rep;
}

// ---- hydrodynamic limit ----

namespace {

std::vector<double> cheb_nodes(int m)
{
    std::vector<double> x(m);
    for (int j = 0; j < m; ++j) x[j] = m == 1 ? 0.0 : std::cos(std::numbers::pi * j / (m - 1));
    return x;
}

// barycentric weights for Chebyshev points of the second kind
std::vector<double> bary(double s, int m)
{
    std::vector<double> x = cheb_nodes(m), c(m);
    for (int j = 0; j < m; ++j) {
        if (s == x[j]) {
            std::fill(c.begin(), c.end(), 0.0);
            c[j] = 1.0;
            return c;
        }
    }
    double tot = 0.0;
    for (int j = 0; j < m; ++j) {
        double w = (j % 2 ? -1.0 : 1.0) * ((j == 0 || j == m - 1) ? 0.5 : 1.0);
        c[j] = w / (s - x[j]);
        tot += c[j];
    }
    for (double& v : c) v /= tot;
    return c;
}

} // namespace

DiffusivityTable::DiffusivityTable(const CollisionModel& model, const SlowBasis& basis, const Vec2& lo,
                                   const Vec2& hi, int nodes)
    : lo_(lo), hi_(hi), m_(nodes)
{
    if (nodes < 2) throw ConfigError("diffusivity table needs at least two nodes per axis");
    for (int a = 0; a < 2; ++a)
        if (!(hi_[a] > lo_[a])) {
            double c = 0.5 * (hi_[a] + lo_[a]);
            lo_[a] = c - 1e-6;
            hi_[a] = c + 1e-6;
        }
    Ginv_ = basis.gram().inverse();
    std::vector<double> x = cheb_nodes(m_);
    vals_.assign(static_cast<size_t>(m_ * m_), Mat2::Zero());
    std::vector<double> conds(vals_.size());
#pragma omp parallel for schedule(dynamic)
    for (int idx = 0; idx < m_ * m_; ++idx) {
        int i = idx / m_, j = idx % m_;
        Vec2 T{lo_[0] + 0.5 * (x[i] + 1.0) * (hi_[0] - lo_[0]), lo_[1] + 0.5 * (x[j] + 1.0) * (hi_[1] - lo_[1])};
        NonlinearDiffusivity nd = nonlinear_diffusivity(model, basis, T);
        vals_[idx] = Ginv_ * nd.K_ab;
        conds[idx] = nd.condition;
    }
    cond_ = *std::max_element(conds.begin(), conds.end());
}

Mat2 DiffusivityTable::coord(const Vec2& T) const
{
    double s0 = 2.0 * (T[0] - lo_[0]) / (hi_[0] - lo_[0]) - 1.0;
    double s1 = 2.0 * (T[1] - lo_[1]) / (hi_[1] - lo_[1]) - 1.0;
    std::vector<double> c0 = bary(s0, m_), c1 = bary(s1, m_);
    Mat2 out = Mat2::Zero();
    for (int i = 0; i < m_; ++i)
        for (int j = 0; j < m_; ++j) out += c0[i] * c1[j] * vals_[static_cast<size_t>(i * m_ + j)];
    return out;
}

RealMatrix heat_reference(const DiffusivityTable& K, const RealMatrix& Tt0, const XBox& box, double t,
                          double dt)
{
    const int nx = box.nx;
    double kmax = 0.0;
    for (int x = 0; x < nx; ++x) {
        Eigen::EigenSolver<Mat2> es(K.coord(Tt0.col(x)));
        kmax = std::max(kmax, es.eigenvalues().cwiseAbs().maxCoeff());
    }
    double pmax = box.p(nx / 2 - 1);
    double stab = 2.0 / std::max(kmax * pmax * pmax, 1e-300);
    double h = std::min(dt, stab);
    long steps = std::max(1L, static_cast<long>(std::ceil(t / h)));
    h = t / steps;
    auto rhs = [&](const RealMatrix& T) {
        RealMatrix g = spectral_dx(T, box), F(2, nx);
        for (int x = 0; x < nx; ++x) F.col(x) = K.coord(T.col(x)) * g.col(x);
        return RealMatrix(spectral_dx(F, box));
    };
    RealMatrix T = Tt0;
    for (long s = 0; s < steps; ++s) {
        RealMatrix k1 = rhs(T);
        RealMatrix k2 = rhs(T + 0.5 * h * k1);
        RealMatrix k3 = rhs(T + 0.5 * h * k2);
        RealMatrix k4 = rhs(T + h * k3);
        T += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return T;
}

RealMatrix slaved_reference(const CollisionModel& model, const SlowBasis& basis, const RealMatrix& Tt,
                            const XBox& box)
{
    const DispersionTable& disp = model.dispersion();
    const Index N = disp.size();
    RealMatrix g = spectral_dx(Tt, box);
    RealMatrix v(N, box.nx);
    const RealField& d1 = disp.grad(0);
#pragma omp parallel for schedule(dynamic)
    for (int x = 0; x < box.nx; ++x) {
        RealField W = basis.e(1) + basis.field(Vec2(Tt.col(x)));
        RealMatrix J = model.jacobian(W);
        BorderedSolver bs(J, basis);
        RealField rhs = d1.cwiseProduct(basis.field(Vec2(g.col(x)))) / two_pi;
        v.col(x) = bs.solve(rhs);
    }
    return v;
}

HydroReport hydro_limit_study(const CollisionModel& model, const ModeFamily& fam, const SlowBasis& basis,
                              const XBox& box, const HydroInitial& init, const std::vector<double>& eps,
                              double t, const WeightedNormSpec& wspec, double dt_scale,
                              std::function<void(const HydroRow&)> progress)
{
    box.validate();
    if (eps.empty()) throw ConfigError("empty eps list");
    for (size_t i = 1; i < eps.size(); ++i)
        if (!(eps[i] < eps[i - 1])) throw ConfigError("eps list must be decreasing");
    const Index N = fam.dispersion().size();
    if (init.Tt.rows() != 2 || init.Tt.cols() != box.nx || init.v.rows() != N || init.v.cols() != box.nx)
        throw ConfigError("initial data has the wrong shape");

    HydroReport rep;
    rep.t = t;
    bool zero = init.Tt.cwiseAbs().maxCoeff() == 0.0;

    // reference
    RealMatrix Tref = init.Tt, vref = RealMatrix::Zero(N, box.nx);
    if (!zero) {
        Vec2 lo = init.Tt.rowwise().minCoeff(), hi = init.Tt.rowwise().maxCoeff();
        DiffusivityTable K(model, basis, lo, hi, 5);
        Tref = heat_reference(K, init.Tt, box, t, 1e-3);
        vref = slaved_reference(model, basis, Tref, box);
    }
    RealMatrix Tfield(N, box.nx);
    for (int x = 0; x < box.nx; ++x) Tfield.col(x) = basis.field(Vec2(Tref.col(x)));
    ModeState Tr = to_modes(Tfield, box), vr = to_modes(vref, box);

    for (double e : eps) {
        if (!(e > 0.0 && e <= 1.0)) throw ConfigError("eps must lie in (0, 1]");
        EvolutionOptions opt;
        opt.integrator = Integrator::etd2;
        opt.collision_scale = 1.0 / (e * e);
        opt.transport_scale = 1.0 / e;
        opt.dt = dt_scale * 0.05 * e * e;
        Evolver ev(model, fam, box, opt);
        RealMatrix w0(N, box.nx);
        for (int x = 0; x < box.nx; ++x)
            w0.col(x) = basis.field(Vec2(init.Tt.col(x))) + e * init.v.col(x);
        HydroRow row{};
        row.eps = e;
        row.dt = ev.dt();
        if (zero) {
            rep.rows.push_back(row);
            if (progress) progress(row);
            continue;
        }
        EvolutionTrajectory tr = ev.run(to_modes(w0, box), {t});
        SlowFastSplit sp = split(tr.snapshots.back().state, basis);
        row.steps = tr.steps;
        row.T_distance = weighted_norm(sp.T - Tr.w, box, t, wspec);
        row.v_distance = weighted_norm(sp.v / e - vr.w, box, t, wspec);
        row.distance = row.T_distance + row.v_distance;
        rep.rows.push_back(row);
        if (progress) progress(row);
    }
    rep.monotone = true;
    for (size_t i = 1; i < rep.rows.size(); ++i)
        if (!(rep.rows[i].distance < rep.rows[i - 1].distance)) rep.monotone = false;
    if (zero) rep.monotone = true;
    double first = rep.rows.front().distance;
    rep.final_ratio = first > 0.0 ? rep.rows.back().distance / first : 0.0;
    return rep;
}

} // namespace pbe
