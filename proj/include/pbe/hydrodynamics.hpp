#pragma once

#include <Eigen/Cholesky>

#include "pbe/linearized.hpp"

namespace pbe {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;
using Vec2c = Eigen::Vector2cd;
using Mat2c = Eigen::Matrix2cd;

// E = span{omega^-1, omega^-2} with the H-orthogonal projection onto it
class SlowBasis {
public:
    explicit SlowBasis(const DispersionTable& disp);

    // alpha = 1 -> omega^-1, alpha = 2 -> omega^-2
    const RealField& e(int alpha) const { return e_[alpha - 1]; }
    const RealField& u(int i) const { return u_[i - 1]; }
    const Mat2& gram() const { return gram_; }
    // u_j = sum_alpha e_alpha C(alpha, j)
    const Mat2& coeff() const { return coeff_; }
    const WeightedInnerProduct& H() const { return H_; }

    RealField P(const RealField& f) const;
    ComplexField P(const ComplexField& f) const;
    RealField Q(const RealField& f) const { return f - P(f); }
    ComplexField Q(const ComplexField& f) const { return f - P(f); }

    // T_alpha = <omega^-alpha, w>_H
    Vec2 observables(const RealField& w) const;
    Vec2c observables(const ComplexField& w) const;
    // coordinates T~ with P w = sum_beta omega^-beta T~_beta
    Vec2 coordinates(const RealField& w) const { return gram_.ldlt().solve(observables(w)); }
    Vec2c coordinates(const ComplexField& w) const;
    RealField field(const Vec2& Tt) const { return e_[0] * Tt[0] + e_[1] * Tt[1]; }
    ComplexField field(const Vec2c& Tt) const;

    // kappa_op = C^T kappa_ab C and back
    Mat2 pairing_to_operator(const Mat2& kab) const { return coeff_.transpose() * kab * coeff_; }
    Mat2 operator_to_pairing(const Mat2& kop) const;

private:
    WeightedInnerProduct H_;
    RealField e_[2];
    RealField u_[2];
    Mat2 gram_;
    Mat2 coeff_;
};

// L^{-1} on the complement of the measured null space: the rhs is projected,
// solved with the rank-2 shifted Cholesky factor, and the result re-projected
class FastSolver {
public:
    FastSolver(const DispersionTable& disp, const OperatorMatrix& L, const SpectralSummary& spec);

    RealField solve(const RealField& g) const;
    ComplexField solve(const ComplexField& g) const;
    // |L x - Q g|_H / |g|_H for the last real solve
    double last_residual() const { return last_residual_; }
    double null_overlap(const RealField& g) const;
    const OperatorMatrix& L() const { return L_; }

private:
    RealField project(const RealField& y) const;

    const DispersionTable& disp_;
    const OperatorMatrix& L_;
    RealMatrix phi_; // orthonormal measured null vectors in the symmetrised frame
    Eigen::LLT<RealMatrix> llt_;
    mutable double last_residual_ = 0.0;
};

struct ConductivityMatrix {
    Mat2 kappa_op;
    Mat2 kappa_ab;
    Vec2 mu;
    int axis = 0;
    double max_residual = 0.0;
};

ConductivityMatrix compute_kappa(const FastSolver& solver, const SlowBasis& basis,
                                 const DispersionTable& disp, int axis = 0);

// max over alpha, beta of |<omega^-alpha, d_i omega L^-1 d_j omega omega^-beta>_H|
double direction_mixing(const FastSolver& solver, const SlowBasis& basis,
                        const DispersionTable& disp, int i, int j);

// j_alpha = -(2 pi)^-1 <omega^-alpha, grad omega w>_H, rows alpha, columns axis
Eigen::MatrixXd currents(const RealField& w, const SlowBasis& basis, const DispersionTable& disp);
Eigen::MatrixXcd currents(const ComplexField& w, const SlowBasis& basis, const DispersionTable& disp);

// v0 = -(i / 2 pi) L^{-1} (p . grad omega) T for a slow field with coordinates Tt
ComplexField slaved_state(const FastSolver& solver, const SlowBasis& basis,
                          const DispersionTable& disp, const Vec2c& Tt, const Eigen::VectorXd& p);

struct FourierLawResult {
    Eigen::MatrixXcd measured;  // 2 x d
    Eigen::MatrixXcd predicted; // sum_beta kappa_ab (i p) T~_beta
    double residual = 0.0;      // max abs difference
    double scale = 0.0;         // |p| * |T|
};

// kappa must be isotropic: kappa(e_j) taken equal to kappa(e_1)
FourierLawResult fourier_law_check(const ConductivityMatrix& kappa, const SlowBasis& basis,
                                   const DispersionTable& disp, const Vec2c& Tt,
                                   const Eigen::VectorXd& p, const ComplexField& v);

struct NonlinearDiffusivity {
    Mat2 K_ab;
    Mat2 K_op;
    double condition = 0.0;
    double asymmetry = 0.0; // |K_op - K_op^T| / |K_op|
};

// K(T) = -(2 pi)^-2 P d_1 omega DC(omega^-1 + T)^{-1} d_1 omega P, the inverse
// taken on E-perp through a bordered system
NonlinearDiffusivity nonlinear_diffusivity(const CollisionModel& model, const SlowBasis& basis,
                                           const Vec2& Tt, int axis = 0,
                                           double max_condition = 1e12);

// bordered solve of J x = g with <omega^-alpha, x>_H = 0
class BorderedSolver {
public:
    BorderedSolver(const RealMatrix& J, const SlowBasis& basis);
    RealField solve(const RealField& g) const;
    double condition() const { return cond_; }

private:
    Eigen::PartialPivLU<RealMatrix> lu_;
    RealMatrix B_;
    double cond_ = 0.0;
};

} // namespace pbe
