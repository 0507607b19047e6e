#pragma once

#include <array>
#include <utility>

#include "pbe/collision.hpp"

namespace pbe {

enum class SymmetrySpace { h_self_adjoint, none };

// dense operator on grid fields, f -> entries * f
struct OperatorMatrix {
    RealMatrix entries;
    SymmetrySpace symmetry = SymmetrySpace::none;

    RealField apply(const RealField& f) const { return entries * f; }
    Index size() const { return entries.rows(); }
};

// max |S - S^T| / max |S| for S = D_w A D_w^{-1}
double h_symmetry_residual(const RealMatrix& A, const DispersionTable& disp);
// D_w A D_w^{-1} symmetrised
RealMatrix symmetrized(const RealMatrix& A, const DispersionTable& disp);

struct Linearization {
    OperatorMatrix L;
    RealField M;
    // kernel values K(k,k') such that (Kf)(k) = n^{-d} sum K(k,k') f(k') omega(k')^2
    RealMatrix K;
};

Linearization assemble_linearization(const CollisionModel& model);
RealField assemble_M(const CollisionModel& model);
OperatorMatrix assemble_K(const CollisionModel& model);
OperatorMatrix assemble_L(const CollisionModel& model);
RealMatrix kernel_from(const OperatorMatrix& L, const RealField& M, const DispersionTable& disp);

// n^{-d} sum_{k'} |K(k,k')|, per row
RealField kernel_row_integrals(const RealMatrix& K);
// M(k) + omega(k)^2 n^{-d} sum_{k'} K(k,k'): the row identity implied by L omega^{-2} = 0
RealField row_identity_residual(const RealMatrix& K, const RealField& M, const DispersionTable& disp);

struct SpectralSummary {
    RealField eigenvalues;                      // ascending
    std::pair<double, double> zero_mode_residuals; // |L w^-a|_H / |w^-a|_H
    double gap = 0.0;                           // third eigenvalue
    double symmetry_residual = 0.0;
    double subspace_angle = 0.0;                // largest principal angle to span{w^-1, w^-2}
    RealMatrix eigenvectors;                    // columns H-orthonormal, node basis
};

SpectralSummary spectrum_L(const OperatorMatrix& L, const DispersionTable& disp,
                           bool want_vectors = true, double sym_tol = 1e-8);

// largest principal angle between column spans, both measured in H
double principal_angle(const RealMatrix& A, const RealMatrix& B, const DispersionTable& disp);

// ---- kernel integrals at arbitrary points (d = 2) ----

using Point2 = std::array<double, 2>;

// I1 and I2 with a mollified delta on an nq x nq quadrature grid in k1
double kernel_I1(const Point2& k, const Point2& kp, const DispersionParams& disp,
                 const DeltaKernel& delta, int nq);
double kernel_I2(const Point2& k, const Point2& kp, const DispersionParams& disp,
                 const DeltaKernel& delta, int nq);
// the shifted representation of I2 at k' + (pi, pi), evaluated as written
double kernel_I2_shifted_form(const Point2& k, const Point2& kp, const DispersionParams& disp,
                              const DeltaKernel& delta, int nq);

struct ExactI1Result {
    double value = 0.0;
    double error_estimate = 0.0;
    int folds = 0;
};

// I1 with an exact energy delta: for each k1_2 the roots of the trigonometric
// polynomial in k1_1 are found from a quartic in e^{i k1_1}; the remaining
// line integral is done by tanh-sinh between fold points.
ExactI1Result kernel_I1_exact(const Point2& k, const Point2& kp, const DispersionParams& disp,
                              double tol = 1e-10);

} // namespace pbe
