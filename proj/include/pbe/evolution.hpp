#pragma once

#include <functional>
#include <optional>

#include "pbe/hydrodynamics.hpp"

namespace pbe {

// D(p) = s_c L + s_t (i / 2 pi) diag(p . grad omega); s_c = s_t = 1 unless rescaled
struct ModeOperator {
    Eigen::VectorXd p;
    ComplexMatrix matrix; // node basis
    ComplexMatrix similar; // D_w D D_w^{-1}, complex symmetric
    RealField omega;
};

class ModeFamily {
public:
    ModeFamily(const DispersionTable& disp, const OperatorMatrix& L);

    ModeOperator at(const Eigen::VectorXd& p, double collision_scale = 1.0,
                    double transport_scale = 1.0) const;
    ModeOperator at_axis(double p1, double collision_scale = 1.0, double transport_scale = 1.0) const;

    const DispersionTable& dispersion() const { return disp_; }
    const OperatorMatrix& L() const { return L_; }
    // node <-> symmetrised frame
    ComplexMatrix to_node(const ComplexMatrix& S) const;
    ComplexMatrix to_similar(const ComplexMatrix& A) const;

private:
    const DispersionTable& disp_;
    const OperatorMatrix& L_;
    RealMatrix S_;
};

struct SpectrumD {
    Eigen::VectorXcd eigenvalues; // ascending real part
    cplx lambda1, lambda2;
    double gap_rest = 0.0;         // min real part beyond the first two
};

SpectrumD spectrum_D(const ModeOperator& D);

// largest |p| along e_1 with exactly two eigenvalues of real part below a/2
struct P0Result {
    double p0 = 0.0;
    double b = 0.0; // min real part of the spectrum at 2 p0
    int iterations = 0;
};
P0Result find_p0(const ModeFamily& fam, double gap, double p_hi = 4.0, double tol = 1e-3);

// e^{-tD} and the phi functions of -hD through the complex eigendecomposition,
// or the scaled-and-squared Pade exponential when the eigenbasis is ill-conditioned
class ModeSemigroup {
public:
    explicit ModeSemigroup(const ModeOperator& D, double cond_limit = 1e8);

    ComplexMatrix exp(double t) const;
    // phi_1 and phi_2 of -hD, each multiplied by h
    std::pair<ComplexMatrix, ComplexMatrix> phi(double h) const;
    // spectral projector onto the two eigenvalues of smallest real part
    ComplexMatrix slow_projector() const;

    bool eigen_path() const { return eigen_ok_; }
    double condition() const { return cond_; }
    const ModeOperator& op() const { return D_; }

private:
    ComplexMatrix to_node(const ComplexMatrix& S) const;

    ModeOperator D_;
    Eigen::VectorXd w_;
    bool eigen_ok_ = false;
    double cond_ = 0.0;
    Eigen::VectorXcd lam_;
    ComplexMatrix V_, Vinv_;
};

double semigroup_property_residual(const ModeSemigroup& S, double t, double s);

// operator norms: B is the sup-norm induced norm, H the omega^2-weighted one
double norm_B(const ComplexMatrix& A);
double norm_H(const ComplexMatrix& A, const DispersionTable& disp);

// dense P and Q in the node basis
ComplexMatrix projector_P(const SlowBasis& basis);

struct BlockResiduals {
    double pp = 0.0, pq = 0.0, qp = 0.0, qq = 0.0; // B-norm residuals
    double k_norm = 0.0;                            // |K(t)|_B
    double block_pp = 0.0, block_pq = 0.0, block_qp = 0.0, block_qq = 0.0; // B-norms of the blocks
};

// blocks of e^{-tD} in E + E-perp minus K(t), K(t)B, AK(t), AK(t)B + R(t), p along e_1
BlockResiduals block_decomposition_check(const ModeFamily& fam, const ModeSemigroup& S,
                                         const FastSolver& solver, const SlowBasis& basis,
                                         const ConductivityMatrix& kappa, double t);

// ---- x-space evolution on a periodic box along e_1 ----

struct XBox {
    int nx = 64;
    double X = 200.0;
    double dx() const { return X / nx; }
    double p(int m) const; // m in [0, nx/2]
    void validate() const;
};

enum class Integrator { etd2, rk4 };
Integrator parse_integrator(const std::string& s);
std::string to_string(Integrator i);

struct EvolutionOptions {
    Integrator integrator = Integrator::etd2;
    double dt = 0.0;                   // 0 selects the default
    double collision_scale = 1.0;      // 1 / eps^2 in the rescaled equation
    double transport_scale = 1.0;      // 1 / eps
    bool linear_only = false;          // drop n(w)
    int halving_check_steps = 0;       // compare the first steps against dt / 2
    double halving_tol = 1e-4;
};

// per-mode state: column m holds w^(p_m, .) for m = 0..nx/2, transform convention
// w^(p) = dx sum_x e^{-ipx} w(x); Nyquist column kept at zero
struct ModeState {
    ComplexMatrix w; // N x (nx/2 + 1)
};

struct Snapshot {
    double t = 0.0;
    ModeState state;
};

struct EvolutionTrajectory {
    std::vector<Snapshot> snapshots;
    std::vector<double> conservation_drift; // max_alpha |int T_alpha(t) - int T_alpha(0)| / |int T_alpha(0)|
    double dt = 0.0;
    long steps = 0;
    double halving_difference = 0.0;
    double min_W = 0.0;
};

ModeState to_modes(const RealMatrix& w_x, const XBox& box); // w_x is N x nx
RealMatrix to_space(const ModeState& s, const XBox& box);

class Evolver {
public:
    Evolver(const CollisionModel& model, const ModeFamily& fam, XBox box, EvolutionOptions opt);

    // default step for the options: 0.4 / (s_c max M + s_t (2pi)^-1 max|d_1 w| pi nx / X)
    static double stability_step(const Linearization& lin, const DispersionTable& disp, const XBox& box,
                                 double collision_scale, double transport_scale);

    EvolutionTrajectory run(const ModeState& w0, const std::vector<double>& times) const;
    const XBox& box() const { return box_; }
    double dt() const { return dt_; }

private:
    ModeState nonlinear(const ModeState& s, double* minW) const;
    void step_etd2(ModeState& s, double* minW) const;
    void step_rk4(ModeState& s, double* minW) const;
    EvolutionTrajectory integrate(const ModeState& w0, const std::vector<long>& stops, double dt,
                                  bool check) const;
    void prepare(double dt) const;

    const CollisionModel& model_;
    const ModeFamily& fam_;
    XBox box_;
    EvolutionOptions opt_;
    double dt_;
    mutable double prepared_dt_ = -1.0;
    mutable std::vector<ComplexMatrix> E_, P1_, P2_, D_;
};

// ---- diagnostics ----

// e(p,t) = (1 + (t+1) p^2)^{-n_w}
struct WeightedNormSpec {
    int n_w = 2;
    double weight(double p, double t) const;
    void validate(int d) const;
};

// sup over the p-grid of e(p,t)^{-1} sup_k |f(p,k)|
double weighted_norm(const ComplexMatrix& f, const XBox& box, double t, const WeightedNormSpec& spec);

struct SlowFastSplit {
    ComplexMatrix T, v; // per mode
};
SlowFastSplit split(const ModeState& s, const SlowBasis& basis);

// T0(p,t) = e^{-t p^2 kappa} T(p,0) chi(|p| <= 1), v0 = A T0
SlowFastSplit leading_terms(const ModeState& initial, double t, const XBox& box, const SlowBasis& basis,
                            const ConductivityMatrix& kappa, const FastSolver& solver,
                            const DispersionTable& disp);

struct DecayRow {
    double t;
    double T_dev, v_dev;         // |T - T0|_t, |v - v0|_t
    double T_norm, v_norm;       // |T|_t, |v|_t
    double sup_T_x;              // sup over x and k of the slow field
    double fourier_residual;     // |j - kappa (ip) T~| / |kappa (ip) T~|, over the p-grid
    double conservation_drift;
};

struct DecayReport {
    std::vector<DecayRow> rows;
    double t_box = 0.0;
    double t_fit_lo = 10.0, t_fit_hi = 0.0;
    double slope_T = 0.0, slope_v = 0.0, slope_sup = 0.0;
    int fit_points = 0;
};

// images of the diffusive profile at distance X relative to the peak, for the largest mu
double box_contamination(double t, const XBox& box, double sigma, double mu_max);

DecayReport decay_diagnostics(const EvolutionTrajectory& traj, const XBox& box, const SlowBasis& basis,
                                 const ConductivityMatrix& kappa, const FastSolver& solver,
                                 const DispersionTable& disp, const WeightedNormSpec& wspec,
                                 double sigma, double t_fit_lo = 10.0);

// least-squares slope of log(y / log(1 + t)) against log t over [lo, hi]
double log_slope(const std::vector<double>& t, const std::vector<double>& y, double lo, double hi,
                 bool divide_log, int* used = nullptr);

// ---- hydrodynamic limit ----

struct HydroRow {
    double eps;
    double T_distance, v_distance, distance;
    double dt;
    long steps;
};

struct HydroReport {
    std::vector<HydroRow> rows;
    double t = 1.0;
    bool monotone = false;
    double final_ratio = 0.0;
};

// slow coordinates T~(x) in rows 0,1 (2 x nx) and the fast part v(x) (N x nx)
struct HydroInitial {
    RealMatrix Tt;
    RealMatrix v;
};

// Tchebyshev table of K(T) over a box in T~ space
class DiffusivityTable {
public:
    DiffusivityTable(const CollisionModel& model, const SlowBasis& basis, const Vec2& lo, const Vec2& hi,
                     int nodes = 5);
    // coordinate form G^{-1} K_ab
    Mat2 coord(const Vec2& Tt) const;
    double max_table_condition() const { return cond_; }

private:
    Vec2 lo_, hi_;
    int m_;
    std::vector<Mat2> vals_;
    Mat2 Ginv_;
    double cond_ = 0.0;
};

// integrate (T') for the coordinates to time t with RK4
RealMatrix heat_reference(const DiffusivityTable& K, const RealMatrix& Tt0, const XBox& box, double t,
                          double dt);

// v from DC(omega^-1 + T) v = (2 pi)^-1 d_1 omega d_x T, v in E-perp
RealMatrix slaved_reference(const CollisionModel& model, const SlowBasis& basis, const RealMatrix& Tt,
                            const XBox& box);

HydroReport hydro_limit_study(const CollisionModel& model, const ModeFamily& fam, const SlowBasis& basis,
                              const XBox& box, const HydroInitial& init, const std::vector<double>& eps,
                              double t, const WeightedNormSpec& wspec, double dt_scale = 1.0,
                              std::function<void(const HydroRow&)> progress = {});

// d_x of an N x nx real field by spectral differentiation
RealMatrix spectral_dx(const RealMatrix& f, const XBox& box);

} // namespace pbe
