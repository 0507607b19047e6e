#include "pbe/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace pbe {

void DispersionParams::validate() const
{
    if (d != 2 && d != 3) throw ConfigError("dispersion dimension must be 2 or 3");
    if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("pinning r must be positive");
}

double omega0_sq(std::span<const double> k, const DispersionParams& p)
{
    double s = p.r;
    for (int j = 0; j < p.d; ++j) s += 2.0 * (1.0 - std::cos(k[j]));
    return s;
}

double omega(std::span<const double> k, const DispersionParams& p)
{
    double w = omega0_sq(k, p);
    return w * w;
}

std::vector<double> grad_omega(std::span<const double> k, const DispersionParams& p)
{
    double w = omega0_sq(k, p);
    std::vector<double> g(p.d);
    for (int j = 0; j < p.d; ++j) g[j] = 4.0 * std::sin(k[j]) * w;
    return g;
}

double max_grad_component(const DispersionParams& p)
{
    // maximise 4 sin x (2 - 2cos x + 4(d-1) + r) with the other axes at pi
    double c = 2.0 + 4.0 * (p.d - 1) + p.r;
    double cx = (c - std::sqrt(c * c + 32.0)) / 8.0;
    double sx = std::sqrt(std::max(0.0, 1.0 - cx * cx));
    return 4.0 * sx * (c - 2.0 * cx);
}

DispersionTable::DispersionTable(const TorusGrid& grid, DispersionParams params)
    : params_(params)
{
    params_.validate();
    if (params_.d != grid.d()) throw ConfigError("dispersion and grid dimensions differ");
    const Index N = grid.size();
    const int n = grid.n();
    std::vector<double> cos_term(n / 2 + 1), sin_abs(n / 2 + 1);
    for (int m = 0; m <= n / 2; ++m) {
        cos_term[m] = 2.0 * (1.0 - std::cos(grid.h() * m));
        sin_abs[m] = std::sin(grid.h() * m);
    }
    sin_abs[0] = 0.0;
    sin_abs[n / 2] = 0.0;
    omega_.resize(N);
    omega0_sq_.resize(N);
    grad_.resize(N, params_.d);
    std::array<double, 3> terms{};
    for (Index i = 0; i < N; ++i) {
        for (int a = 0; a < params_.d; ++a) terms[a] = cos_term[std::abs(grid.centred(i, a))];
        std::sort(terms.begin(), terms.begin() + params_.d);
        double s = 0.0;
        for (int a = 0; a < params_.d; ++a) s += terms[a];
        s += params_.r;
        omega0_sq_[i] = s;
        omega_[i] = s * s;
        for (int a = 0; a < params_.d; ++a) {
            int m = grid.centred(i, a);
            double sn = m < 0 ? -sin_abs[-m] : sin_abs[m];
            grad_(i, a) = 4.0 * sn * s;
        }
    }
}

RealField DispersionTable::omega_pow(int power) const
{
    RealField out(omega_.size());
    for (Index i = 0; i < omega_.size(); ++i) out[i] = std::pow(omega_[i], power);
    return out;
}

WeightedInnerProduct DispersionTable::inner_product() const
{
    return WeightedInnerProduct(omega_.cwiseAbs2());
}

} // namespace pbe
