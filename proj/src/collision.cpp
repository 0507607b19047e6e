#include "pbe/collision.hpp"

#include "pbe/kernels.hpp"

namespace pbe {

RealField equilibrium(const DispersionTable& disp, double T, double A)
{
    const double r = disp.params().r;
    if (!(T > 0.0)) throw ConfigError("equilibrium temperature must be positive");
    if (!(A > -r * r)) throw ConfigError("equilibrium shift must exceed -r^2");
    return (T / (disp.omega().array() + A)).matrix();
}

CollisionModel::CollisionModel(const TorusGrid& grid, const DispersionTable& disp,
                               DeltaKernel delta, double rate, Regularization reg, int tiles)
    : grid_(grid), disp_(disp), ctx_{&grid, &disp, delta, rate, reg}, tiles_(tiles)
{
    delta.validate();
    if (!(rate > 0.0)) throw ConfigError("collision rate must be positive");
    if (disp.size() != grid.size()) throw ConfigError("dispersion table does not match grid");
}

const OrbitSet& CollisionModel::orbits() const
{
    if (!orbits_)
        orbits_ = std::make_unique<OrbitSet>(grid_, disp_, ctx_.delta, ctx_.rate, ctx_.reg, tiles_);
    return *orbits_;
}

RealField CollisionModel::collision(const RealField& W, KernelPath path) const
{
    grid_.require_field(W.size(), "W");
    if (path == KernelPath::reference) return kernels::collision_reference(ctx_, W);
    CellBatch b(W.size(), 1);
    b.col(0) = W;
    return kernels::collision_parallel(orbits(), b).col(0);
}

CellBatch CollisionModel::collision_batch(const CellBatch& W) const
{
    return kernels::collision_parallel(orbits(), W);
}

std::pair<double, double> CollisionModel::conservation_residuals_of(const RealField& C) const
{
    grid_.require_field(C.size(), "C");
    RealField wc = disp_.omega().cwiseProduct(C);
    return {grid_.integrate(C), grid_.integrate(wc)};
}

std::pair<double, double> CollisionModel::conservation_residuals(const RealField& W) const
{
    return conservation_residuals_of(collision(W));
}

double CollisionModel::entropy_production(const RealField& W, KernelPath path) const
{
    if (path == KernelPath::reference) return kernels::entropy_reference(ctx_, W);
    return kernels::entropy_parallel(orbits(), W);
}

RealMatrix CollisionModel::jacobian(const RealField& W, KernelPath path) const
{
    if (path == KernelPath::reference) return kernels::jacobian_reference(ctx_, W);
    return kernels::jacobian_parallel(orbits(), W);
}

RealMatrix CollisionModel::linearization(RealField* M, KernelPath path) const
{
    if (path == KernelPath::reference) return kernels::linearization_reference(ctx_, M);
    return kernels::linearization_parallel(orbits(), M);
}

} // namespace pbe
