#pragma once

#include <array>
#include <vector>

#include "pbe/common.hpp"

namespace pbe {

struct GridSpec {
    int d = 2;
    int n = 24;

    double h() const;
    Index size() const;
    void validate() const;
};

// Uniform lattice on [-pi, pi)^d. Node coordinate i along an axis stands for
// k = -pi + h*i, i.e. the centred integer m = i - n/2 with k = h*m.
class TorusGrid {
public:
    explicit TorusGrid(GridSpec spec);

    const GridSpec& spec() const { return spec_; }
    int d() const { return spec_.d; }
    int n() const { return spec_.n; }
    double h() const { return h_; }
    Index size() const { return size_; }

    int coord(Index node, int axis) const;
    // centred integer m in [-n/2, n/2)
    int centred(Index node, int axis) const { return coord(node, axis) - spec_.n / 2; }
    double k(Index node, int axis) const;
    std::array<double, 3> point(Index node) const;
    Index node(const std::array<int, 3>& coords) const;

    // lattice arithmetic mod 2pi
    Index add(Index a, Index b) const { return add_[a * size_ + b]; }
    Index sub(Index a, Index b) const { return sub_[a * size_ + b]; }
    Index neg(Index a) const { return neg_[a]; }
    Index origin() const { return origin_; }
    Index reflect(Index a, int axis) const;
    Index swap_axes(Index a, int i, int j) const;

    double integrate(const RealField& f) const;
    cplx integrate(const ComplexField& f) const;

    bool same_as(const TorusGrid& other) const;
    void require_field(Index len, const char* what) const;

private:
    GridSpec spec_;
    double h_;
    Index size_;
    Index origin_;
    std::vector<int> add_;
    std::vector<int> sub_;
    std::vector<int> neg_;
};

// fixed-tree pairwise sum, independent of thread count
double pairwise_sum(const double* x, Index len);
cplx pairwise_sum(const cplx* x, Index len);

double sup_norm(const RealField& f);
double sup_norm(const ComplexField& f);

// f(-k) = +-f(k) to within tol * sup|f|
bool has_parity(const TorusGrid& g, const RealField& f, Parity p, double tol = 1e-12);
RealField reflect_field(const TorusGrid& g, const RealField& f);

// <f, g>_H = integral of conj(f) g w with w = omega^2
class WeightedInnerProduct {
public:
    explicit WeightedInnerProduct(RealField weight);
    WeightedInnerProduct(const TorusGrid& grid, RealField weight);

    const RealField& weight() const { return weight_; }

    double inner(const RealField& f, const RealField& g) const;
    cplx inner(const ComplexField& f, const ComplexField& g) const;
    double norm(const RealField& f) const;
    double norm(const ComplexField& f) const;

private:
    void check(Index len) const;
    RealField weight_;
};

} // namespace pbe
