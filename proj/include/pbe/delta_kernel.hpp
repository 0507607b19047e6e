#pragma once

#include <string>

#include "pbe/dispersion.hpp"

namespace pbe {

enum class DeltaShape { gaussian, triangular };

DeltaShape parse_delta_shape(const std::string& s);
const char* to_string(DeltaShape s);

// unit-mass mollifier for the energy delta
struct DeltaKernel {
    DeltaShape shape = DeltaShape::gaussian;
    double eta = 1.0;

    double operator()(double u) const;
    // values vanish identically outside [-support, support]
    double support() const;
    void validate() const;
    // sum_j delta(j*step) * step over the integer lattice
    double discrete_mass(double step) const;

    // eta = factor * h * max|d omega/dk_1|
    static DeltaKernel automatic(const GridSpec& grid, const DispersionParams& disp,
                                 DeltaShape shape = DeltaShape::gaussian, double factor = 4.0);
};

} // namespace pbe
