#include "pbe/quadruples.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pbe {

Regularization parse_regularization(const std::string& s)
{
    if (s == "energy_projected" || s == "projected") return Regularization::energy_projected;
    if (s == "plain") return Regularization::plain;
    throw ConfigError("unknown regularization '" + s + "'");
}

const char* to_string(Regularization r)
{
    return r == Regularization::plain ? "plain" : "energy_projected";
}

void quad_signs(const double* om, double u, Regularization reg, double* sigma)
{
    static constexpr double base[4] = {1.0, 1.0, -1.0, -1.0};
    if (reg == Regularization::plain) {
        for (int s = 0; s < 4; ++s) sigma[s] = base[s];
        return;
    }
    double mean = 0.25 * ((om[0] + om[1]) + (om[2] + om[3]));
    double t[4], nn = 0.0, scale = 0.0;
    for (int s = 0; s < 4; ++s) {
        t[s] = om[s] - mean;
        nn += t[s] * t[s];
        scale += om[s] * om[s];
    }
    // all four frequencies equal: u vanishes too and the raw signs are exact
    if (nn <= 1e-22 * scale) {
        for (int s = 0; s < 4; ++s) sigma[s] = base[s];
        return;
    }
    double c = u / nn;
    for (int s = 0; s < 4; ++s) sigma[s] = base[s] - c * t[s];
}

double QuadContext::g0(const double* om, double u) const
{
    double dl = delta(u);
    if (dl == 0.0) return 0.0;
    double nd = static_cast<double>(grid->size());
    double prod = (om[0] * om[1]) * (om[2] * om[3]);
    return 2.25 * std::numbers::pi * rate * dl / (nd * nd * prod);
}

OrbitSet::OrbitSet(const TorusGrid& grid, const DispersionTable& disp, DeltaKernel delta,
                   double rate, Regularization reg, int tiles, std::size_t cache_bytes)
    : ctx_{&grid, &disp, delta, rate, reg}, tiles_(tiles)
{
    delta.validate();
    if (!(rate > 0.0)) throw ConfigError("collision rate must be positive");
    if (tiles < 1) throw ConfigError("tile count must be positive");
    if (disp.size() != grid.size()) throw ConfigError("dispersion table does not match grid");

    const Index N = grid.size();
    const RealField& om = disp.omega();
    classes_.assign(N, {});
    for (Index K = 0; K < N; ++K) {
        std::vector<Pair>& P = classes_[K];
        for (Index a = 0; a < N; ++a) {
            Index b = grid.sub(K, a);
            if (a > b) continue;
            P.push_back({static_cast<int>(a), static_cast<int>(b), om[a] + om[b]});
        }
        std::sort(P.begin(), P.end(), [](const Pair& x, const Pair& y) {
            if (x.energy != y.energy) return x.energy < y.energy;
            return x.a < y.a;
        });
    }

    // window count needs no kernel evaluations
    const double cut = delta.support();
    std::size_t bound = 0;
    for (const auto& P : classes_) {
        std::size_t j = 0;
        for (std::size_t i = 0; i < P.size(); ++i) {
            if (j < i + 1) j = i + 1;
            while (j < P.size() && P[j].energy - P[i].energy <= cut) ++j;
            bound += j - i - 1;
        }
    }
    count_ = bound;
    if (bound * sizeof(Quad) > cache_bytes) return;

    cache_.reserve(bound);
    offsets_.assign(tiles_ + 1, 0);
    for (int t = 0; t < tiles_; ++t) {
        auto push = [this](const Quad& q) { cache_.push_back(q); };
        for (std::size_t k = t; k < classes_.size(); k += tiles_) enumerate_class(k, push);
        offsets_[t + 1] = cache_.size();
    }
    count_ = cache_.size();
}

} // namespace pbe
