#include "pbe/kernels.hpp"

namespace pbe::kernels {

namespace {

struct Tuple {
    int node[4];
    double om[4];
    double sigma[4];
    double g0;
};

// calls f for every (k0, k1, k2) with nonzero kernel weight
template <class F>
void sweep(const QuadContext& ctx, F&& f)
{
    const TorusGrid& g = *ctx.grid;
    const RealField& om = ctx.disp->omega();
    const Index N = g.size();
    Tuple t;
    for (Index k0 = 0; k0 < N; ++k0) {
        for (Index k1 = 0; k1 < N; ++k1) {
            for (Index k2 = 0; k2 < N; ++k2) {
                Index k3 = g.add(k0, g.sub(k1, k2));
                t.node[0] = int(k0);
                t.node[1] = int(k1);
                t.node[2] = int(k2);
                t.node[3] = int(k3);
                for (int s = 0; s < 4; ++s) t.om[s] = om[t.node[s]];
                double u = (t.om[0] + t.om[1]) - (t.om[2] + t.om[3]);
                t.g0 = ctx.g0(t.om, u);
                if (t.g0 == 0.0) continue;
                quad_signs(t.om, u, ctx.reg, t.sigma);
                f(t);
            }
        }
    }
}

} // namespace

RealField collision_reference(const QuadContext& ctx, const RealField& W)
{
    ctx.grid->require_field(W.size(), "W");
    RealField C = RealField::Zero(W.size());
    sweep(ctx, [&](const Tuple& t) {
        double x[4];
        for (int s = 0; s < 4; ++s) x[s] = W[t.node[s]];
        double B = t.sigma[0] * x[1] * x[2] * x[3] + t.sigma[1] * x[0] * x[2] * x[3]
                 + t.sigma[2] * x[0] * x[1] * x[3] + t.sigma[3] * x[0] * x[1] * x[2];
        C[t.node[0]] += t.g0 * B * t.sigma[0];
    });
    return C;
}

RealMatrix jacobian_reference(const QuadContext& ctx, const RealField& W)
{
    ctx.grid->require_field(W.size(), "W");
    const Index N = W.size();
    RealMatrix J = RealMatrix::Zero(N, N);
    sweep(ctx, [&](const Tuple& t) {
        double x[4];
        for (int s = 0; s < 4; ++s) x[s] = W[t.node[s]];
        for (int m = 0; m < 4; ++m) {
            double dB = 0.0;
            for (int s = 0; s < 4; ++s) {
                if (s == m) continue;
                double p = 1.0;
                for (int j = 0; j < 4; ++j)
                    if (j != s && j != m) p *= x[j];
                dB += t.sigma[s] * p;
            }
            J(t.node[0], t.node[m]) += t.g0 * t.sigma[0] * dB;
        }
    });
    return J;
}

RealMatrix linearization_reference(const QuadContext& ctx, RealField* M)
{
    const Index N = ctx.grid->size();
    RealMatrix L = RealMatrix::Zero(N, N);
    if (M) M->setZero(N);
    sweep(ctx, [&](const Tuple& t) {
        double c = t.g0 * t.sigma[0] / ((t.om[0] * t.om[1]) * (t.om[2] * t.om[3]));
        for (int m = 0; m < 4; ++m) L(t.node[0], t.node[m]) += c * t.sigma[m] * t.om[m] * t.om[m];
        if (M) (*M)[t.node[0]] += t.g0 * t.om[0] * t.om[0] / ((t.om[0] * t.om[1]) * (t.om[2] * t.om[3]));
    });
    return L;
}

double entropy_reference(const QuadContext& ctx, const RealField& W)
{
    ctx.grid->require_field(W.size(), "W");
    if (W.minCoeff() <= 0.0) throw ConfigError("entropy production needs W > 0");
    double ep = 0.0;
    sweep(ctx, [&](const Tuple& t) {
        double x[4], inv = 0.0;
        for (int s = 0; s < 4; ++s) {
            x[s] = W[t.node[s]];
            inv += t.sigma[s] / x[s];
        }
        ep += t.g0 * (x[0] * x[1]) * (x[2] * x[3]) * inv * inv;
    });
    return ep / static_cast<double>(ctx.grid->size());
}

} // namespace pbe::kernels
