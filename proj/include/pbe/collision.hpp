#pragma once

#include <memory>
#include <utility>

#include "pbe/quadruples.hpp"

namespace pbe {

struct EquilibriumParams {
    double T = 1.0;
    double A = 0.0;
};

// W_{T,A} = T / (omega + A)
RealField equilibrium(const DispersionTable& disp, double T, double A);
inline RealField equilibrium(const DispersionTable& disp, EquilibriumParams p)
{
    return equilibrium(disp, p.T, p.A);
}

enum class KernelPath { parallel, reference };

class CollisionModel {
public:
    CollisionModel(const TorusGrid& grid, const DispersionTable& disp, DeltaKernel delta,
                   double rate = 1.0, Regularization reg = Regularization::energy_projected,
                   int tiles = 16);

    const TorusGrid& grid() const { return grid_; }
    const DispersionTable& dispersion() const { return disp_; }
    const DeltaKernel& delta() const { return ctx_.delta; }
    double rate() const { return ctx_.rate; }
    Regularization regularization() const { return ctx_.reg; }
    const OrbitSet& orbits() const;

    RealField collision(const RealField& W, KernelPath path = KernelPath::parallel) const;
    // each column of W is an independent field
    CellBatch collision_batch(const CellBatch& W) const;
    // (integral of C, integral of omega C)
    std::pair<double, double> conservation_residuals(const RealField& W) const;
    std::pair<double, double> conservation_residuals_of(const RealField& C) const;
    double entropy_production(const RealField& W, KernelPath path = KernelPath::parallel) const;
    // DC(W), derivative of the collision operator
    RealMatrix jacobian(const RealField& W, KernelPath path = KernelPath::parallel) const;
    // L = -DC(1/omega); M receives the multiplication part if non-null
    RealMatrix linearization(RealField* M = nullptr, KernelPath path = KernelPath::parallel) const;

private:
    const TorusGrid& grid_;
    const DispersionTable& disp_;
    QuadContext ctx_;
    int tiles_;
    mutable std::unique_ptr<OrbitSet> orbits_;
};

} // namespace pbe
