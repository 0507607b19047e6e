#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "pbe/delta_kernel.hpp"

namespace pbe {

enum class Regularization {
    // per-quadruple signs projected so number and energy cancel exactly
    energy_projected,
    // raw (+,+,-,-) signs; energy conservation only up to mollification error
    plain
};

Regularization parse_regularization(const std::string& s);
const char* to_string(Regularization r);

// One orbit of a resonant quadruple k0 + k1 = k2 + k3 (slots 0,1 in, 2,3 out).
// weight already carries the orbit multiplicity; contributions are scattered
// to all four slots.
struct Quad {
    std::array<int, 4> node;
    std::array<double, 4> sigma;
    double weight;
};

// signs for one quadruple given its four frequencies; u = w0 + w1 - w2 - w3
void quad_signs(const double* om, double u, Regularization reg, double* sigma);

// prefactor (9pi/4) R n^{-2d} delta(u) / prod(omega)
struct QuadContext {
    const TorusGrid* grid;
    const DispersionTable* disp;
    DeltaKernel delta;
    double rate;
    Regularization reg;

    double g0(const double* om, double u) const;
};

// Enumerates orbits by grouping unordered pairs {a,b} by total momentum and
// pairing them within a class, inside the support of the energy delta. Classes
// are dealt to a fixed number of tiles so parallel reductions are
// reproducible for any thread count.
class OrbitSet {
public:
    OrbitSet(const TorusGrid& grid, const DispersionTable& disp, DeltaKernel delta,
             double rate = 1.0, Regularization reg = Regularization::energy_projected,
             int tiles = 16, std::size_t cache_bytes = std::size_t(1) << 29);

    int tiles() const { return tiles_; }
    const QuadContext& context() const { return ctx_; }
    bool cached() const { return !cache_.empty(); }
    std::size_t quad_count() const { return count_; }

    template <class F>
    void for_each(int tile, F&& f) const
    {
        if (cached()) {
            for (std::size_t q = offsets_[tile]; q < offsets_[tile + 1]; ++q) f(cache_[q]);
            return;
        }
        for (std::size_t c = tile; c < classes_.size(); c += tiles_) enumerate_class(c, f);
    }

private:
    struct Pair {
        int a, b;
        double energy;
    };

    template <class F>
    void enumerate_class(std::size_t c, F& f) const
    {
        const std::vector<Pair>& P = classes_[c];
        const double cut = ctx_.delta.support();
        const RealField& om = ctx_.disp->omega();
        Quad q;
        for (std::size_t i = 0; i < P.size(); ++i) {
            for (std::size_t j = i + 1; j < P.size(); ++j) {
                double u = P[i].energy - P[j].energy;
                if (-u > cut) break;
                double o[4] = {om[P[i].a], om[P[i].b], om[P[j].a], om[P[j].b]};
                double g = ctx_.g0(o, u);
                if (g == 0.0) continue;
                double mult = 2.0 / ((P[i].a == P[i].b ? 2.0 : 1.0) * (P[j].a == P[j].b ? 2.0 : 1.0));
                q.node = {P[i].a, P[i].b, P[j].a, P[j].b};
                quad_signs(o, u, ctx_.reg, q.sigma.data());
                q.weight = mult * g;
                f(q);
            }
        }
    }

    QuadContext ctx_;
    int tiles_;
    std::vector<std::vector<Pair>> classes_;
    std::vector<Quad> cache_;
    std::vector<std::size_t> offsets_;
    std::size_t count_ = 0;
};

} // namespace pbe
