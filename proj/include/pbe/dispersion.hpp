#pragma once

#include <span>
#include <vector>

#include "pbe/torus_grid.hpp"

namespace pbe {

struct DispersionParams {
    int d = 2;
    double r = 1.0;

    void validate() const;
};

// omega0^2 = 2 sum_j (1 - cos k_j) + r,  omega = (omega0^2)^2
double omega0_sq(std::span<const double> k, const DispersionParams& p);
double omega(std::span<const double> k, const DispersionParams& p);
std::vector<double> grad_omega(std::span<const double> k, const DispersionParams& p);

// max over the torus of |d omega / d k_1|, closed form
double max_grad_component(const DispersionParams& p);

// omega, omega0^2 and grad omega tabulated on a grid. Symmetric nodes get
// bit-identical values: per-axis terms are built from |m| and summed in
// sorted order.
class DispersionTable {
public:
    DispersionTable(const TorusGrid& grid, DispersionParams params);

    const DispersionParams& params() const { return params_; }
    const RealField& omega() const { return omega_; }
    const RealField& omega0_sq() const { return omega0_sq_; }
    // column j holds d omega / d k_j
    const RealMatrix& grad() const { return grad_; }
    RealField grad(int axis) const { return grad_.col(axis); }
    // omega^power, power may be negative
    RealField omega_pow(int power) const;
    WeightedInnerProduct inner_product() const;
    Index size() const { return omega_.size(); }

private:
    DispersionParams params_;
    RealField omega_;
    RealField omega0_sq_;
    RealMatrix grad_;
};

} // namespace pbe
