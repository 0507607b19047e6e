#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "app.hpp"

namespace pbe::app {

namespace {

constexpr double pi = std::numbers::pi;

class Stage {
public:
    Stage(Context& ctx, std::string name)
        : ctx_(ctx), name_(std::move(name)), t0_(std::chrono::steady_clock::now())
    {
    }
    ~Stage()
    {
        ctx_.timing[name_] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    Context& ctx_;
    std::string name_;
    std::chrono::steady_clock::time_point t0_;
};

json mat(const Mat2& m) { return json{{m(0, 0), m(0, 1)}, {m(1, 0), m(1, 1)}}; }

std::vector<double> linspace(double a, double b, int n)
{
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return v;
}

struct TauEq {
    double tau = 0.0;
    std::vector<std::array<double, 4>> rows; // T, A, sup|C|, entropy production
};

const std::vector<std::pair<double, double>> kEquilibria = {{1.0, 0.0}, {2.0, 0.5}, {0.5, -0.5}};

TauEq equilibrium_floor(const Model& m, bool entropy)
{
    TauEq r;
    for (auto [T, A] : kEquilibria) {
        RealField W = equilibrium(m.disp, T, A);
        double c = sup_norm(m.model.collision(W));
        double ep = entropy ? m.model.entropy_production(W) : 0.0;
        r.rows.push_back({T, A, c, ep});
        r.tau = std::max(r.tau, c);
    }
    return r;
}

unsigned seed_of(const RunConfig& cfg) { return static_cast<unsigned>(cfg.integer("seed", 1)); }

} // namespace

// ---- spectrum ----

json run_spectrum(Context& ctx)
{
    const RunConfig& cfg = ctx.cfg;
    int ndir = cfg.integer("fd_directions", 10);
    double step = cfg.num("fd_step", 1e-5);
    if (ndir < 0 || !(step > 0.0)) throw ConfigError("fd_directions >= 0 and fd_step > 0 required");
    unsigned seed = seed_of(cfg);
    Model M(cfg, 24);

    Linearization lin;
    SpectralSummary spec;
    {
        Stage s(ctx, "assembly");
        lin = assemble_linearization(M.model);
    }
    {
        Stage s(ctx, "eigensolve");
        spec = spectrum_L(lin.L, M.disp);
    }
    TauEq te;
    {
        Stage s(ctx, "equilibria");
        te = equilibrium_floor(M, false);
    }

    RealField rid = row_identity_residual(lin.K, lin.M, M.disp);
    RealField rint = kernel_row_integrals(lin.K);
    double rid_rel = rid.cwiseAbs().maxCoeff() / lin.M.maxCoeff();

    std::vector<std::vector<Cell>> fd_rows;
    double fd_max = 0.0;
    {
        Stage s(ctx, "finite_difference");
        RealField W0 = M.disp.omega_pow(-1);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g;
        for (int k = 0; k < ndir; ++k) {
            RealField f(M.disp.size());
            for (Index i = 0; i < f.size(); ++i) f[i] = g(rng) * W0[i];
            RealField fd = -(M.model.collision(W0 + step * f) - M.model.collision(W0 - step * f)) / (2.0 * step);
            RealField Lf = lin.L.apply(f);
            double e = (Lf - fd).norm() / Lf.norm();
            fd_max = std::max(fd_max, e);
            fd_rows.push_back({static_cast<long long>(k), e});
        }
    }

    std::vector<std::vector<Cell>> ev;
    for (Index i = 0; i < spec.eigenvalues.size(); ++i)
        ev.push_back({static_cast<long long>(i), spec.eigenvalues[i]});
    ctx.out.csv("spectrum.csv", {"index[1]", "eigenvalue[1/time]"}, ev);
    ctx.out.csv("fd_oracle.csv", {"direction[1]", "relative_error[1]"}, fd_rows);
    std::vector<std::vector<Cell>> rows;
    for (Index i = 0; i < M.disp.size(); ++i)
        rows.push_back({M.grid.k(i, 0), M.grid.k(i, 1), lin.M[i], rid[i], rint[i]});
    ctx.out.csv("kernel_rows.csv", {"k1[rad]", "k2[rad]", "M[1/time]", "row_identity_residual[1/time]",
                                   "row_abs_K_integral[1/time]"},
                rows);

    auto [z1, z2] = spec.zero_mode_residuals;
    json res;
    res["model"] = M.describe();
    res["gap"] = spec.gap;
    res["lambda_max"] = spec.eigenvalues.maxCoeff();
    res["zero_mode_residuals"] = {z1, z2};
    res["tau_eq"] = te.tau;
    res["symmetry_residual"] = spec.symmetry_residual;
    res["subspace_angle"] = spec.subspace_angle;
    res["row_identity_relative"] = rid_rel;
    res["row_abs_K_sup"] = rint.maxCoeff();
    res["M_max"] = lin.M.maxCoeff();
    res["fd_max_relative_error"] = fd_max;
    res["checks"] = {{"zero_modes_within_tau_eq", z1 <= te.tau && z2 <= te.tau},
                     {"gap_positive", spec.gap > 0.0},
                     {"row_identity", rid_rel < 1e-8},
                     {"fd_oracle", ndir > 0 && fd_max < 1e-4}};
    return res;
}

// ---- collision-check ----

json run_collision_check(Context& ctx)
{
    const RunConfig& cfg = ctx.cfg;
    int samples = cfg.integer("samples", 20);
    double amp = cfg.num("perturbation", 0.01);
    if (samples < 0) throw ConfigError("samples must be non-negative");
    unsigned seed = seed_of(cfg);
    Model M(cfg, 16);
    const Index N = M.disp.size();

    TauEq te;
    {
        Stage s(ctx, "equilibria");
        te = equilibrium_floor(M, true);
    }
    double ep_eq_max = 0.0;
    std::vector<std::vector<Cell>> eq_rows;
    for (const auto& r : te.rows) {
        eq_rows.push_back({r[0], r[1], r[2], r[3]});
        ep_eq_max = std::max(ep_eq_max, std::abs(r[3]));
    }
    ctx.out.csv("equilibria.csv", {"T[1]", "A[1]", "sup_C[1/time]", "entropy_production[1/time]"}, eq_rows);

    RealField pert = M.disp.omega_pow(-1);
    for (Index i = 0; i < N; ++i) pert[i] += amp * std::cos(M.grid.k(i, 0));
    double pert_sup = 0.0, pert_ep = 0.0;
    {
        Stage s(ctx, "perturbation");
        pert_sup = sup_norm(M.model.collision(pert));
        pert_ep = M.model.entropy_production(pert);
    }

    std::vector<std::vector<Cell>> rows;
    bool cons_ok = true, ep_ok = true;
    double worst = 0.0;
    {
        Stage s(ctx, "samples");
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.2, 1.5);
        for (int k = 0; k < samples; ++k) {
            RealField W(N);
            for (Index i = 0; i < N; ++i) W[i] = u(rng);
            RealField C = M.model.collision(W);
            auto [n0, e0] = M.model.conservation_residuals_of(C);
            double sc = sup_norm(C);
            double rn = std::abs(n0) / sc, re = std::abs(e0) / sc;
            double ep = M.model.entropy_production(W);
            bool ok = rn <= 1e-10 && re <= 1e-10 && ep >= 0.0;
            cons_ok = cons_ok && rn <= 1e-10 && re <= 1e-10;
            ep_ok = ep_ok && ep >= 0.0;
            worst = std::max({worst, rn, re});
            rows.push_back({static_cast<long long>(k), sc, n0, e0, rn, re, ep, std::string(ok ? "pass" : "fail")});
        }
    }
    ctx.out.csv("samples.csv", {"sample[1]", "sup_C[1/time]", "int_C[1/time]", "int_omega_C[1/time]",
                                "number_relative[1]", "energy_relative[1]", "entropy_production[1/time]",
                                "status"},
                rows);

    json res;
    res["model"] = M.describe();
    res["tau_eq"] = te.tau;
    res["entropy_equilibrium_max"] = ep_eq_max;
    res["perturbation"] = {{"amplitude", amp}, {"sup_C", pert_sup}, {"entropy_production", pert_ep}};
    res["samples"] = samples;
    res["conservation_worst_relative"] = worst;
    res["checks"] = {{"conservation", samples > 0 && cons_ok},
                     {"entropy_nonnegative", samples > 0 && ep_ok},
                     {"entropy_equilibrium_within_tau_eq", ep_eq_max <= te.tau},
                     {"entropy_perturbation_above_10_tau_eq", pert_ep > 10.0 * te.tau}};
    return res;
}

// ---- kappa ----

json run_kappa(Context& ctx)
{
    const RunConfig& cfg = ctx.cfg;
    std::vector<double> ps = cfg.list("fourier_p", {0.01, 0.05, 0.1});
    Model M(cfg, 24);
    if (M.grid.d() != 2) throw ConfigError("kappa runs on d = 2 grids");
    std::unique_ptr<Hydro> H;
    {
        Stage s(ctx, "linearization_and_kappa");
        H = std::make_unique<Hydro>(M);
    }
    const ConductivityMatrix& k = H->kappa;
    ConductivityMatrix k2;
    double mixing = 0.0;
    {
        Stage s(ctx, "direction_checks");
        k2 = compute_kappa(H->solver, H->basis, M.disp, 1);
        mixing = direction_mixing(H->solver, H->basis, M.disp, 0, 1);
    }
    double scale = k.kappa_ab.cwiseAbs().maxCoeff();
    double asym = (k.kappa_op - k.kappa_op.transpose()).cwiseAbs().maxCoeff() / k.kappa_op.cwiseAbs().maxCoeff();
    double dir = (k2.kappa_ab - k.kappa_ab).cwiseAbs().maxCoeff() / scale;
    double mix_rel = mixing / (4.0 * pi * pi * scale);
    Eigen::SelfAdjointEigenSolver<Mat2> es(0.5 * (k.kappa_op + k.kappa_op.transpose()));
    bool spd = es.eigenvalues().minCoeff() > 0.0;

    std::vector<std::vector<Cell>> fl;
    double fl_worst = 0.0;
    {
        Stage s(ctx, "fourier_law");
        Vec2c Tt(cplx(1.0, 0.0), cplx(-0.5, 0.2));
        for (double p : ps) {
            for (int ax = 0; ax < 2; ++ax) {
                Eigen::VectorXd pv = Eigen::VectorXd::Zero(2);
                pv[ax] = p;
                ComplexField v = slaved_state(H->solver, H->basis, M.disp, Tt, pv);
                FourierLawResult r = fourier_law_check(k, H->basis, M.disp, Tt, pv, v);
                double ratio = r.residual / r.scale;
                fl_worst = std::max(fl_worst, ratio);
                fl.push_back({p, static_cast<long long>(ax + 1), r.residual, r.scale, ratio});
            }
        }
    }
    ctx.out.csv("fourier_slaved.csv", {"p[1/length]", "axis[1]", "residual[temperature/time]",
                                       "p_times_T[temperature/length]", "relative[1]"},
                fl);
    std::vector<std::vector<Cell>> kr;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            kr.push_back({static_cast<long long>(a + 1), static_cast<long long>(b + 1), k.kappa_op(a, b),
                          k.kappa_ab(a, b), k2.kappa_ab(a, b)});
    ctx.out.csv("kappa.csv", {"alpha[1]", "beta[1]", "kappa_op[length^2/time]", "kappa_ab_axis1[length^2/time]",
                              "kappa_ab_axis2[length^2/time]"},
                kr);

    json res;
    res["model"] = M.describe();
    res["gap"] = H->spec.gap;
    res["kappa_op"] = mat(k.kappa_op);
    res["kappa_ab"] = mat(k.kappa_ab);
    res["mu"] = {es.eigenvalues()[0], es.eigenvalues()[1]};
    res["solve_residual"] = k.max_residual;
    res["asymmetry"] = asym;
    res["direction_difference"] = dir;
    res["cross_direction_relative"] = mix_rel;
    res["fourier_slaved_worst"] = fl_worst;
    res["checks"] = {{"symmetric_positive_definite", spd && asym < 1e-8},
                     {"direction_invariance", dir < 1e-8},
                     {"cross_direction_zero", mix_rel < 1e-8},
                     {"fourier_law_slaved", fl_worst < 1e-6}};
    return res;
}

// ---- dispersion-relation ----

json run_dispersion_relation(Context& ctx)
{
    const RunConfig& cfg = ctx.cfg;
    double pmin = cfg.num("p_min", 0.02), pmax = cfg.num("p_max", 0.1);
    int count = cfg.integer("p_count", 9);
    double p0_hi = cfg.num("p0_hi", 4.0), p0_tol = cfg.num("p0_tol", 1e-3);
    if (!(pmin > 0.0 && pmax > pmin) || count < 3) throw ConfigError("need 0 < p_min < p_max and p_count >= 3");
    Model M(cfg, 24);
    std::unique_ptr<Hydro> H;
    {
        Stage s(ctx, "linearization_and_kappa");
        H = std::make_unique<Hydro>(M);
    }
    Eigen::SelfAdjointEigenSolver<Mat2> es(0.5 * (H->kappa.kappa_op + H->kappa.kappa_op.transpose()));
    Vec2 mu = es.eigenvalues();

    std::vector<double> ps = linspace(pmin, pmax, count);
    std::vector<std::vector<Cell>> rows;
    RealMatrix A(count, 2);
    RealMatrix y(count, 2);
    double imag_worst = 0.0;
    {
        Stage s(ctx, "sweep");
        for (int i = 0; i < count; ++i) {
            double p = ps[i];
            SpectrumD sd = spectrum_D(H->fam.at_axis(p));
            A(i, 0) = 1.0;
            A(i, 1) = p * p;
            y(i, 0) = sd.lambda1.real() / (p * p);
            y(i, 1) = sd.lambda2.real() / (p * p);
            imag_worst = std::max({imag_worst, std::abs(sd.lambda1.imag()) / (p * p),
                                   std::abs(sd.lambda2.imag()) / (p * p)});
            rows.push_back({p, sd.lambda1.real(), sd.lambda1.imag(), sd.lambda2.real(), sd.lambda2.imag(),
                            sd.gap_rest, y(i, 0), y(i, 1)});
        }
    }
    RealMatrix coef = A.colPivHouseholderQr().solve(y);
    Vec2 fit(coef(0, 0), coef(0, 1));
    Vec2 rel((fit[0] - mu[0]) / mu[0], (fit[1] - mu[1]) / mu[1]);
    ctx.out.csv("dispersion.csv", {"p[1/length]", "lambda1_re[1/time]", "lambda1_im[1/time]", "lambda2_re[1/time]",
                                   "lambda2_im[1/time]", "gap_rest[1/time]", "lambda1_over_p2[length^2/time]",
                                   "lambda2_over_p2[length^2/time]"},
                rows);
    P0Result p0;
    {
        Stage s(ctx, "p0");
        p0 = find_p0(H->fam, H->spec.gap, p0_hi, p0_tol);
    }

    json res;
    res["model"] = M.describe();
    res["gap"] = H->spec.gap;
    res["mu_kappa"] = {mu[0], mu[1]};
    res["mu_fit"] = {fit[0], fit[1]};
    res["quartic_fit"] = {coef(1, 0), coef(1, 1)};
    res["relative_difference"] = {rel[0], rel[1]};
    res["imag_over_p2_worst"] = imag_worst;
    res["p0"] = p0.p0;
    res["b"] = p0.b;
    res["p0_iterations"] = p0.iterations;
    res["checks"] = {{"quadratic_coefficients_match_kappa", std::abs(rel[0]) < 0.05 && std::abs(rel[1]) < 0.05},
                     {"slow_eigenvalues_real", imag_worst < 1e-6},
                     {"large_p_gap", p0.b > 0.0}};
    return res;
}

// ---- semigroup-bounds ----

namespace {

struct BlockNorms {
    double p, t, pp, pq, qp, qq;
};

std::vector<BlockNorms> block_norms(const Hydro& H, const std::vector<double>& ps, const std::vector<double>& ts)
{
    const Index N = H.fam.dispersion().size();
    ComplexMatrix P = projector_P(H.basis);
    ComplexMatrix Q = ComplexMatrix::Identity(N, N) - P;
    std::vector<BlockNorms> out;
    for (double p : ps) {
        ModeSemigroup S(H.fam.at_axis(p));
        for (double t : ts) {
            ComplexMatrix E = S.exp(t);
            out.push_back({p, t, norm_B(P * E * P), norm_B(P * E * Q), norm_B(Q * E * P), norm_B(Q * E * Q)});
        }
    }
    return out;
}

double envelope(const BlockNorms& b, double c)
{
    return std::abs(b.p) * (std::exp(-c * b.t * b.p * b.p) + std::exp(-c * b.t));
}

// spread of log(|PQ| / envelope) over the grid
double log_spread(const std::vector<BlockNorms>& g, double c)
{
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& b : g) {
        double r = std::log(b.pq) - std::log(envelope(b, c));
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    return hi - lo;
}

double max_ratio(const std::vector<BlockNorms>& g, double c)
{
    double m = 0.0;
    for (const auto& b : g) m = std::max(m, b.pq / envelope(b, c));
    return m;
}

} // namespace

json run_semigroup_bounds(Context& ctx)
{
    const RunConfig& cfg = ctx.cfg;
    std::vector<double> ps = cfg.list("p_list", {0.0025, 0.005, 0.01, 0.02, 0.04, 0.08, 0.16});
    std::vector<double> ts = cfg.list("t_list", {1, 3, 10, 30, 100, 300, 1000, 3000});
    std::vector<double> pc = cfg.list("p_check", {0.0035, 0.007, 0.014, 0.028, 0.056, 0.113});
    std::vector<double> tc = cfg.list("t_check", {2, 5, 20, 50, 200, 500, 2000});
    std::vector<double> qp = cfg.list("qq_p", {0.01, 0.005, 0.0025});
    std::vector<double> qt = cfg.list("qq_t", {40, 80});
    double vtol = cfg.num("validation_tol", 0.1);
    for (double p : ps)
        if (!(p > 0.0)) throw ConfigError("sweep momenta must be positive");
    for (size_t i = 1; i < qp.size(); ++i)
        if (std::abs(qp[i] - 0.5 * qp[i - 1]) > 1e-12 * qp[i - 1]) throw ConfigError("qq_p must halve successively");
    Model M(cfg, 12);
    std::unique_ptr<Hydro> H;
    {
        Stage s(ctx, "linearization_and_kappa");
        H = std::make_unique<Hydro>(M);
    }
    std::vector<BlockNorms> sweep, check, qq;
    {
        Stage s(ctx, "sweep");
        sweep = block_norms(*H, ps, ts);
        check = block_norms(*H, pc, tc);
        qq = block_norms(*H, qp, qt);
    }
    // tightest envelope: minimise the log-spread over c on a log grid, then refine
    double best = 0.0, bval = INFINITY;
    for (int i = 0; i <= 800; ++i) {
        double c = std::pow(10.0, -5.0 + 6.0 * i / 800.0);
        double v = log_spread(sweep, c);
        if (v < bval) {
            bval = v;
            best = c;
        }
    }
    double lo = best / std::pow(10.0, 6.0 / 800.0), hi = best * std::pow(10.0, 6.0 / 800.0);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 60; ++it) {
        double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
        if (log_spread(sweep, a) < log_spread(sweep, b)) hi = b;
        else lo = a;
    }
    double c_hat = 0.5 * (lo + hi);
    double C_hat = max_ratio(sweep, c_hat);
    double C_check = max_ratio(check, c_hat);

    std::vector<std::vector<Cell>> rows;
    for (const auto* g : {&sweep, &check})
        for (const auto& b : *g)
            rows.push_back({std::string(g == &sweep ? "sweep" : "check"), b.p, b.t, b.pp, b.pq, b.qp, b.qq,
                            b.pq / envelope(b, c_hat)});
    ctx.out.csv("semigroup_sweep.csv", {"grid", "p[1/length]", "t[time]", "PP[1]", "PQ[1]", "QP[1]", "QQ[1]",
                                        "PQ_over_envelope[1]"},
                rows);

    std::vector<std::vector<Cell>> qrows;
    bool qq_ok = qp.size() >= 2;
    double qq_lo = INFINITY, qq_hi = 0.0;
    for (double t : qt) {
        for (size_t i = 0; i < qp.size(); ++i) {
            double v = 0.0, prev = 0.0;
            for (const auto& b : qq) {
                if (b.t == t && b.p == qp[i]) v = b.qq;
                if (i > 0 && b.t == t && b.p == qp[i - 1]) prev = b.qq;
            }
            double ratio = i > 0 ? prev / v : NAN;
            if (i > 0) {
                qq_lo = std::min(qq_lo, ratio);
                qq_hi = std::max(qq_hi, ratio);
                qq_ok = qq_ok && ratio >= 4.0 * 0.7 && ratio <= 4.0 * 1.3;
            }
            qrows.push_back({t, qp[i], v, ratio});
        }
    }
    ctx.out.csv("qq_halving.csv", {"t[time]", "p[1/length]", "QQ[1]", "ratio_to_double_p[1]"}, qrows);

    json res;
    res["model"] = M.describe();
    res["c_hat"] = c_hat;
    res["C_hat"] = C_hat;
    res["log_spread"] = log_spread(sweep, c_hat);
    res["C_check"] = C_check;
    res["qq_ratio_range"] = {qq_lo, qq_hi};
    res["checks"] = {{"pq_bound_validated", c_hat > 0.0 && std::isfinite(C_hat) && C_check <= (1.0 + vtol) * C_hat},
                     {"qq_p2_law", qq_ok}};
    return res;
}

// ---- evolve ----

json run_evolve(Context& ctx)
{
    const RunConfig& cfg = ctx.cfg;
    XBox box{cfg.integer("nx", 64), cfg.num("X", 200.0)};
    box.validate();
    double sigma = cfg.num("sigma", 10.0), amp = cfg.num("amplitude", 0.01);
    EvolutionOptions opt;
    opt.integrator = parse_integrator(cfg.str("integrator", "etd2"));
    opt.dt = cfg.num("dt", opt.integrator == Integrator::etd2 ? 0.5 : 0.0);
    opt.halving_check_steps = cfg.integer("halving_steps", 4);
    opt.linear_only = cfg.integer("linear_only", 0) != 0;
    double t_fit_lo = cfg.num("t_fit_lo", 10.0);
    double late = cfg.num("late_fraction", 0.5);
    std::string tend_s = cfg.str("t_end", "auto");
    WeightedNormSpec ws{cfg.integer("n_w", 2)};
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    if (!(late > 0.0 && late < 1.0)) throw ConfigError("late_fraction must lie in (0, 1)");
    Model M(cfg, 12);
    ws.validate(M.grid.d());
    std::unique_ptr<Hydro> H;
    {
        Stage s(ctx, "linearization_and_kappa");
        H = std::make_unique<Hydro>(M);
    }
    const Index N = M.disp.size();
    double mu_max = H->kappa.mu.maxCoeff();
    Evolver ev(M.model, H->fam, box, opt);
    double dt = ev.dt();
    double t_box = 0.0;
    for (double t = 0.0; box_contamination(t, box, sigma, mu_max) < 0.1 && t < 1e7; t += dt) t_box = t;
    double t_end = tend_s == "auto" ? t_box : std::stod(tend_s);
    if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");

    std::vector<double> times = {0.0};
    for (double t = 1.0; t < t_end; t *= 1.25) {
        double r = std::round(t / dt) * dt;
        if (r > times.back()) times.push_back(r);
    }
    double last = std::round(t_end / dt) * dt;
    if (last > times.back()) times.push_back(last);

    RealMatrix w0(N, box.nx);
    RealField e2 = H->basis.e(2);
    for (int x = 0; x < box.nx; ++x) {
        double s = x * box.dx() - 0.5 * box.X;
        w0.col(x) = amp * std::exp(-s * s / (2.0 * sigma * sigma)) * e2;
    }
    EvolutionTrajectory tr;
    {
        Stage s(ctx, "evolution");
        tr = ev.run(to_modes(w0, box), times);
    }
    DecayReport rep;
    {
        Stage s(ctx, "diagnostics");
        rep = decay_diagnostics(tr, box, H->basis, H->kappa, H->solver, M.disp, ws, sigma, t_fit_lo);
    }
    std::vector<std::vector<Cell>> rows;
    double fourier_late = 0.0, drift = 0.0;
    int late_rows = 0;
    for (const auto& r : rep.rows) {
        rows.push_back({r.t, r.T_dev, r.v_dev, r.T_norm, r.v_norm, r.sup_T_x, r.fourier_residual,
                        r.conservation_drift});
        drift = std::max(drift, r.conservation_drift);
        if (r.t >= late * rep.t_box && r.t <= rep.t_box) {
            fourier_late = std::max(fourier_late, r.fourier_residual);
            ++late_rows;
        }
    }
    ctx.out.csv("decay.csv", {"t[time]", "T_minus_T0[weighted]", "v_minus_v0[weighted]", "T[weighted]",
                              "v[weighted]", "sup_T[1]", "fourier_residual[1]", "conservation_drift[1]"},
                rows);

    json res;
    res["model"] = M.describe();
    res["box"] = {{"nx", box.nx}, {"X", box.X}};
    res["integrator"] = to_string(opt.integrator);
    res["dt"] = dt;
    res["steps"] = tr.steps;
    res["halving_difference"] = tr.halving_difference;
    res["min_W"] = tr.min_W;
    res["mu"] = {H->kappa.mu[0], H->kappa.mu[1]};
    res["gap"] = H->spec.gap;
    res["t_box"] = rep.t_box;
    res["fit_window"] = {rep.t_fit_lo, rep.t_fit_hi};
    res["fit_points"] = rep.fit_points;
    res["slope_T"] = rep.slope_T;
    res["slope_v"] = rep.slope_v;
    res["slope_sup_T"] = rep.slope_sup;
    res["fourier_late_max"] = fourier_late;
    res["fourier_late_rows"] = late_rows;
    res["conservation_drift_max"] = drift;
    res["checks"] = {{"T_slope", rep.fit_points >= 3 && std::abs(rep.slope_T + 0.5) <= 0.15},
                     {"v_slope", rep.fit_points >= 3 && std::abs(rep.slope_v + 1.0) <= 0.2},
                     {"fourier_law_late", late_rows > 0 && fourier_late < 0.1},
                     {"conservation", drift < 1e-8}};
    return res;
}

// ---- hydro-limit ----

json run_hydro_limit(Context& ctx)
{
    const RunConfig& cfg = ctx.cfg;
    XBox box{cfg.integer("nx", 32), cfg.num("X", 20.0)};
    box.validate();
    double sigma = cfg.num("sigma", 2.0), amp = cfg.num("amplitude", 0.01), ratio = cfg.num("ratio", -0.5);
    std::vector<double> eps = cfg.list("eps", {0.4, 0.2, 0.1, 0.05});
    double t = cfg.num("t", 1.0), dts = cfg.num("dt_scale", 4.0);
    WeightedNormSpec ws{cfg.integer("n_w", 2)};
    if (!(sigma > 0.0) || !(t > 0.0) || !(dts > 0.0)) throw ConfigError("sigma, t and dt_scale must be positive");
    Model M(cfg, 12);
    ws.validate(M.grid.d());
    std::unique_ptr<Hydro> H;
    {
        Stage s(ctx, "linearization");
        H = std::make_unique<Hydro>(M);
    }
    const Index N = M.disp.size();
    HydroInitial init{RealMatrix(2, box.nx), RealMatrix::Zero(N, box.nx)};
    for (int x = 0; x < box.nx; ++x) {
        double s = x * box.dx() - 0.5 * box.X;
        double g = amp * std::exp(-s * s / (2.0 * sigma * sigma));
        init.Tt(0, x) = g;
        init.Tt(1, x) = ratio * g;
    }
    HydroReport rep;
    {
        Stage s(ctx, "study");
        rep = hydro_limit_study(M.model, H->fam, H->basis, box, init, eps, t, ws, dts);
    }
    std::vector<std::vector<Cell>> rows;
    json jr = json::array();
    for (const auto& r : rep.rows) {
        rows.push_back({r.eps, r.T_distance, r.v_distance, r.distance, r.dt, static_cast<long long>(r.steps)});
        jr.push_back({{"eps", r.eps}, {"T", r.T_distance}, {"v", r.v_distance}, {"distance", r.distance}});
    }
    ctx.out.csv("hydro_limit.csv", {"eps[1]", "T_distance[weighted]", "v_distance[weighted]",
                                    "distance[weighted]", "dt[time]", "steps[1]"},
                rows);
    json res;
    res["model"] = M.describe();
    res["box"] = {{"nx", box.nx}, {"X", box.X}};
    res["t"] = t;
    res["rows"] = jr;
    res["monotone"] = rep.monotone;
    res["final_ratio"] = rep.final_ratio;
    bool T_mono = true;
    for (size_t i = 1; i < rep.rows.size(); ++i)
        T_mono = T_mono && rep.rows[i].T_distance < rep.rows[i - 1].T_distance;
    res["T_monotone"] = T_mono;
    res["checks"] = {{"distance_monotone", rep.monotone},
                     {"final_below_third", rep.rows.size() > 1 && rep.final_ratio < 1.0 / 3.0}};
    return res;
}

// ---- validate-kernel ----

json run_validate_kernel(Context& ctx)
{
    const RunConfig& cfg = ctx.cfg;
    int samples = cfg.integer("samples", 10);
    std::vector<double> etas = cfg.list("etas", {0.25, 0.125, 0.0625});
    int nq = cfg.integer("nq", 8192);
    double min_sin = cfg.num("min_sin", 0.3), tol = cfg.num("tol", 1e-10);
    if (samples < 1 || nq < 16 || etas.size() < 2) throw ConfigError("need samples >= 1, nq >= 16, two etas");
    if (cfg.integer("d", 2) != 2) throw ConfigError("the kernel reduction is implemented for d = 2");
    DispersionParams dp{2, cfg.num("r", 1.0)};
    dp.validate();
    unsigned seed = seed_of(cfg);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-pi, pi);

    std::vector<std::vector<Cell>> rows;
    json js = json::array();
    bool all_ok = true;
    double worst_reduction = INFINITY;
    {
        Stage s(ctx, "samples");
        for (int sidx = 0; sidx < samples;) {
            Point2 k{u(rng), u(rng)}, kp{u(rng), u(rng)};
            bool ok = true;
            for (int j = 0; j < 2; ++j) ok = ok && std::abs(std::sin(0.5 * (k[j] - kp[j]))) > min_sin;
            if (!ok) continue;
            ExactI1Result ex = kernel_I1_exact(k, kp, dp, tol);
            std::vector<double> err;
            for (double eta : etas) {
                double v = kernel_I1(k, kp, dp, DeltaKernel{DeltaShape::gaussian, eta}, nq);
                err.push_back(std::abs(v - ex.value));
                rows.push_back({static_cast<long long>(sidx), k[0], k[1], kp[0], kp[1], ex.value, ex.error_estimate,
                                eta, v, err.back() / std::abs(ex.value)});
            }
            json jr = json::array();
            for (size_t i = 1; i < err.size(); ++i) {
                double red = err[i - 1] / err[i];
                jr.push_back(red);
                worst_reduction = std::min(worst_reduction, red);
                all_ok = all_ok && red >= 2.0;
            }
            js.push_back({{"k", {k[0], k[1]}}, {"kp", {kp[0], kp[1]}}, {"exact", ex.value}, {"reductions", jr}});
            ++sidx;
        }
    }
    ctx.out.csv("kernel_validation.csv", {"sample[1]", "k1[rad]", "k2[rad]", "kp1[rad]", "kp2[rad]",
                                          "I1_exact[1]", "I1_exact_error[1]", "eta[1]", "I1_mollified[1]",
                                          "relative_error[1]"},
                rows);

    // the shifted representation of I2, evaluated as written, at the first sample point
    Point2 k0{js[0]["k"][0].get<double>(), js[0]["k"][1].get<double>()};
    Point2 kp0{js[0]["kp"][0].get<double>(), js[0]["kp"][1].get<double>()};
    DeltaKernel wide{DeltaShape::gaussian, 2.0};
    double i2 = kernel_I2(k0, kp0, dp, wide, 256);
    double i2s = kernel_I2_shifted_form(k0, Point2{kp0[0] + pi, kp0[1] + pi}, dp, wide, 256);
    json res;
    res["samples"] = js;
    res["worst_reduction"] = worst_reduction;
    res["nq"] = nq;
    res["etas"] = etas;
    res["I2_direct"] = i2;
    res["I2_shifted_form"] = i2s;
    res["I2_shifted_relative_difference"] = std::abs(i2 - i2s) / std::abs(i2);
    res["checks"] = {{"error_halves_per_eta_halving", all_ok}};
    return res;
}

} // namespace pbe::app
