#include "pbe/torus_grid.hpp"

#include <cmath>
#include <numbers>

namespace pbe {

double GridSpec::h() const { return 2.0 * std::numbers::pi / n; }

Index GridSpec::size() const
{
    Index s = 1;
    for (int a = 0; a < d; ++a) s *= n;
    return s;
}

void GridSpec::validate() const
{
    if (d != 2 && d != 3) throw ConfigError("grid dimension must be 2 or 3");
    if (n < 8 || n % 2 != 0) throw ConfigError("grid size n must be even and >= 8");
    if (size() > (Index(1) << 20)) throw ConfigError("grid too large for dense operators");
}

TorusGrid::TorusGrid(GridSpec spec) : spec_(spec)
{
    spec_.validate();
    h_ = spec_.h();
    size_ = spec_.size();
    std::array<int, 3> zero{spec_.n / 2, spec_.n / 2, spec_.n / 2};
    origin_ = node(zero);

    const int n = spec_.n;
    neg_.resize(size_);
    for (Index a = 0; a < size_; ++a) {
        std::array<int, 3> c{};
        for (int ax = 0; ax < spec_.d; ++ax) c[ax] = (n - coord(a, ax)) % n;
        neg_[a] = static_cast<int>(node(c));
    }
    // add/sub tables cost size^2 ints; fine for the dense-operator regime
    add_.resize(size_ * size_);
    sub_.resize(size_ * size_);
    for (Index a = 0; a < size_; ++a) {
        for (Index b = 0; b < size_; ++b) {
            std::array<int, 3> cs{}, cd{};
            for (int ax = 0; ax < spec_.d; ++ax) {
                int ia = coord(a, ax), ib = coord(b, ax);
                cs[ax] = ((ia + ib - n / 2) % n + n) % n;
                cd[ax] = ((ia - ib + n / 2) % n + n) % n;
            }
            add_[a * size_ + b] = static_cast<int>(node(cs));
            sub_[a * size_ + b] = static_cast<int>(node(cd));
        }
    }
}

int TorusGrid::coord(Index node, int axis) const
{
    Index stride = 1;
    for (int a = spec_.d - 1; a > axis; --a) stride *= spec_.n;
    return static_cast<int>((node / stride) % spec_.n);
}

double TorusGrid::k(Index node, int axis) const { return h_ * centred(node, axis); }

std::array<double, 3> TorusGrid::point(Index node) const
{
    std::array<double, 3> p{};
    for (int a = 0; a < spec_.d; ++a) p[a] = k(node, a);
    return p;
}

Index TorusGrid::node(const std::array<int, 3>& coords) const
{
    Index idx = 0;
    for (int a = 0; a < spec_.d; ++a) idx = idx * spec_.n + coords[a];
    return idx;
}

Index TorusGrid::reflect(Index a, int axis) const
{
    std::array<int, 3> c{};
    for (int ax = 0; ax < spec_.d; ++ax) c[ax] = coord(a, ax);
    c[axis] = (spec_.n - c[axis]) % spec_.n;
    return node(c);
}

Index TorusGrid::swap_axes(Index a, int i, int j) const
{
    std::array<int, 3> c{};
    for (int ax = 0; ax < spec_.d; ++ax) c[ax] = coord(a, ax);
    std::swap(c[i], c[j]);
    return node(c);
}

double TorusGrid::integrate(const RealField& f) const
{
    require_field(f.size(), "integrand");
    return pairwise_sum(f.data(), f.size()) / static_cast<double>(size_);
}

cplx TorusGrid::integrate(const ComplexField& f) const
{
    require_field(f.size(), "integrand");
    return pairwise_sum(f.data(), f.size()) / static_cast<double>(size_);
}

bool TorusGrid::same_as(const TorusGrid& other) const
{
    return spec_.d == other.spec_.d && spec_.n == other.spec_.n;
}

void TorusGrid::require_field(Index len, const char* what) const
{
    if (len != size_)
        throw ConfigError(std::string(what) + ": field length does not match grid");
}

namespace {

template <class T>
T pairwise(const T* x, Index len)
{
    if (len <= 16) {
        T s{};
        for (Index i = 0; i < len; ++i) s += x[i];
        return s;
    }
    Index half = len / 2;
    return pairwise(x, half) + pairwise(x + half, len - half);
}

} // namespace

double pairwise_sum(const double* x, Index len) { return pairwise(x, len); }
cplx pairwise_sum(const cplx* x, Index len) { return pairwise(x, len); }

double sup_norm(const RealField& f) { return f.size() ? f.cwiseAbs().maxCoeff() : 0.0; }
double sup_norm(const ComplexField& f) { return f.size() ? f.cwiseAbs().maxCoeff() : 0.0; }

RealField reflect_field(const TorusGrid& g, const RealField& f)
{
    g.require_field(f.size(), "field");
    RealField r(f.size());
    for (Index i = 0; i < f.size(); ++i) r[i] = f[g.neg(i)];
    return r;
}

bool has_parity(const TorusGrid& g, const RealField& f, Parity p, double tol)
{
    if (p == Parity::none) return true;
    RealField r = reflect_field(g, f);
    double s = p == Parity::even ? 1.0 : -1.0;
    return (r - s * f).cwiseAbs().maxCoeff() <= tol * std::max(sup_norm(f), 1e-300);
}

WeightedInnerProduct::WeightedInnerProduct(const TorusGrid& grid, RealField weight)
    : weight_(std::move(weight))
{
    grid.require_field(weight_.size(), "weight");
    if (weight_.minCoeff() <= 0.0) throw ConfigError("inner-product weight must be positive");
}

WeightedInnerProduct::WeightedInnerProduct(RealField weight) : weight_(std::move(weight))
{
    if (weight_.size() == 0 || weight_.minCoeff() <= 0.0)
        throw ConfigError("inner-product weight must be positive");
}

void WeightedInnerProduct::check(Index len) const
{
    if (len != weight_.size()) throw ConfigError("inner product: field length does not match grid");
}

double WeightedInnerProduct::inner(const RealField& f, const RealField& g) const
{
    check(f.size());
    check(g.size());
    RealField t = f.cwiseProduct(g).cwiseProduct(weight_);
    return pairwise_sum(t.data(), t.size()) / static_cast<double>(t.size());
}

cplx WeightedInnerProduct::inner(const ComplexField& f, const ComplexField& g) const
{
    check(f.size());
    check(g.size());
    ComplexField t = f.conjugate().cwiseProduct(g).cwiseProduct(weight_.cast<cplx>());
    return pairwise_sum(t.data(), t.size()) / static_cast<double>(t.size());
}

double WeightedInnerProduct::norm(const RealField& f) const { return std::sqrt(inner(f, f)); }

double WeightedInnerProduct::norm(const ComplexField& f) const
{
    return std::sqrt(std::max(0.0, inner(f, f).real()));
}

} // namespace pbe
