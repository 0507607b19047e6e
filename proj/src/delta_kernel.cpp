#include "pbe/delta_kernel.hpp"

#include <cmath>
#include <numbers>

namespace pbe {

DeltaShape parse_delta_shape(const std::string& s)
{
    if (s == "gaussian") return DeltaShape::gaussian;
    if (s == "triangular") return DeltaShape::triangular;
    throw ConfigError("unknown delta shape '" + s + "'");
}

const char* to_string(DeltaShape s)
{
    return s == DeltaShape::gaussian ? "gaussian" : "triangular";
}

double DeltaKernel::operator()(double u) const
{
    double a = std::abs(u);
    if (a > support()) return 0.0;
    if (shape == DeltaShape::triangular) return (1.0 - a / eta) / eta;
    double z = u / eta;
    return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * eta);
}

double DeltaKernel::support() const
{
    return shape == DeltaShape::gaussian ? 8.0 * eta : eta;
}

void DeltaKernel::validate() const
{
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("delta width eta must be positive");
}

double DeltaKernel::discrete_mass(double step) const
{
    validate();
    if (!(step > 0.0)) throw ConfigError("quadrature step must be positive");
    long jmax = static_cast<long>(std::ceil(support() / step));
    double s = (*this)(0.0);
    for (long j = 1; j <= jmax; ++j) s += 2.0 * (*this)(j * step);
    return s * step;
}

DeltaKernel DeltaKernel::automatic(const GridSpec& grid, const DispersionParams& disp,
                                   DeltaShape shape, double factor)
{
    DeltaKernel k;
    k.shape = shape;
    k.eta = factor * grid.h() * max_grad_component(disp);
    k.validate();
    return k;
}

} // namespace pbe
