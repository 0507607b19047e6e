#pragma once

#include "pbe/quadruples.hpp"

// Two implementations of every collision kernel. The reference versions are
// plain serial loops over (k0, k1, k2) with k0 in slot 0; the parallel ones
// walk quadruple orbits tile by tile under OpenMP.
namespace pbe::kernels {

RealField collision_reference(const QuadContext& ctx, const RealField& W);
RealMatrix jacobian_reference(const QuadContext& ctx, const RealField& W);
// L = -DC(1/omega); M receives the multiplication part, the sign-free sum
// of omega_1^-2 omega_2^-2 omega_3^-2 delta over the resonant set
RealMatrix linearization_reference(const QuadContext& ctx, RealField* M = nullptr);
double entropy_reference(const QuadContext& ctx, const RealField& W);

CellBatch collision_parallel(const OrbitSet& orbits, const CellBatch& W);
RealMatrix jacobian_parallel(const OrbitSet& orbits, const RealField& W);
RealMatrix linearization_parallel(const OrbitSet& orbits, RealField* M = nullptr);
double entropy_parallel(const OrbitSet& orbits, const RealField& W);

} // namespace pbe::kernels
