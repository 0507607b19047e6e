#include "pbe/linearized.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace pbe {

RealMatrix symmetrized(const RealMatrix& A, const DispersionTable& disp)
{
    const RealField& w = disp.omega();
    RealMatrix S = w.asDiagonal() * A * w.cwiseInverse().asDiagonal();
    return 0.5 * (S + S.transpose());
}

double h_symmetry_residual(const RealMatrix& A, const DispersionTable& disp)
{
    const RealField& w = disp.omega();
    RealMatrix S = w.asDiagonal() * A * w.cwiseInverse().asDiagonal();
    double scale = S.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;
    return (S - S.transpose()).cwiseAbs().maxCoeff() / scale;
}

RealMatrix kernel_from(const OperatorMatrix& L, const RealField& M, const DispersionTable& disp)
{
    const Index N = L.size();
    RealMatrix K = L.entries;
    K.diagonal() -= M;
    RealField col = disp.omega().cwiseAbs2() / static_cast<double>(N);
    return K * col.cwiseInverse().asDiagonal();
}

Linearization assemble_linearization(const CollisionModel& model)
{
    Linearization lin;
    lin.L.entries = model.linearization(&lin.M);
    lin.L.symmetry = SymmetrySpace::h_self_adjoint;
    lin.K = kernel_from(lin.L, lin.M, model.dispersion());
    return lin;
}

RealField assemble_M(const CollisionModel& model)
{
    RealField M;
    model.linearization(&M);
    return M;
}

OperatorMatrix assemble_K(const CollisionModel& model)
{
    Linearization lin = assemble_linearization(model);
    return {std::move(lin.K), SymmetrySpace::none};
}

OperatorMatrix assemble_L(const CollisionModel& model)
{
    return {model.linearization(), SymmetrySpace::h_self_adjoint};
}

RealField kernel_row_integrals(const RealMatrix& K)
{
    return K.cwiseAbs().rowwise().sum() / static_cast<double>(K.cols());
}

RealField row_identity_residual(const RealMatrix& K, const RealField& M, const DispersionTable& disp)
{
    RealField rowsum = K.rowwise().sum() / static_cast<double>(K.cols());
    return M + disp.omega().cwiseAbs2().cwiseProduct(rowsum);
}

double principal_angle(const RealMatrix& A, const RealMatrix& B, const DispersionTable& disp)
{
    // orthonormalise D_w A and D_w B in the Euclidean sense
    const RealField& w = disp.omega();
    RealMatrix a = w.asDiagonal() * A, b = w.asDiagonal() * B;
    Eigen::HouseholderQR<RealMatrix> qa(a), qb(b);
    RealMatrix Qa = qa.householderQ() * RealMatrix::Identity(a.rows(), a.cols());
    RealMatrix Qb = qb.householderQ() * RealMatrix::Identity(b.rows(), b.cols());
    Eigen::JacobiSVD<RealMatrix> svd(Qa.transpose() * Qb);
    double smin = svd.singularValues().minCoeff();
    return std::acos(std::clamp(smin, -1.0, 1.0));
}

SpectralSummary spectrum_L(const OperatorMatrix& L, const DispersionTable& disp, bool want_vectors,
                           double sym_tol)
{
    if (L.symmetry != SymmetrySpace::h_self_adjoint)
        throw ConfigError("spectrum_L needs an operator marked H-self-adjoint");
    SpectralSummary out;
    out.symmetry_residual = h_symmetry_residual(L.entries, disp);
    if (out.symmetry_residual > sym_tol)
        throw NumericalError("operator is not H-self-adjoint to tolerance");
    const Index N = L.size();
    RealMatrix S = symmetrized(L.entries, disp);
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(S, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
    out.eigenvalues = es.eigenvalues();
    out.gap = N > 2 ? out.eigenvalues[2] : 0.0;

    auto H = disp.inner_product();
    RealField e1 = disp.omega_pow(-1), e2 = disp.omega_pow(-2);
    out.zero_mode_residuals = {H.norm(L.apply(e1)) / H.norm(e1), H.norm(L.apply(e2)) / H.norm(e2)};

    RealMatrix V = disp.omega().cwiseInverse().asDiagonal() * es.eigenvectors();
    V *= std::sqrt(static_cast<double>(N));
    RealMatrix E(N, 2);
    E.col(0) = e1;
    E.col(1) = e2;
    out.subspace_angle = principal_angle(V.leftCols(2), E, disp);
    if (want_vectors) out.eigenvectors = std::move(V);
    return out;
}

} // namespace pbe
