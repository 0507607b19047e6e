#include "pbe/kernels.hpp"

#include <array>
#include <vector>

namespace pbe::kernels {

namespace {

// the four partial derivatives of B = sum_s sigma_s prod_{j != s} x_j
inline void dB(const double* s, const double* x, double* out)
{
    double p01 = x[0] * x[1], p23 = x[2] * x[3];
    out[0] = s[1] * p23 + s[2] * x[1] * x[3] + s[3] * x[1] * x[2];
    out[1] = s[0] * p23 + s[2] * x[0] * x[3] + s[3] * x[0] * x[2];
    out[2] = s[0] * x[1] * x[3] + s[1] * x[0] * x[3] + s[3] * p01;
    out[3] = s[0] * x[1] * x[2] + s[1] * x[0] * x[2] + s[2] * p01;
}

template <class Buf, class Init, class Body>
std::vector<Buf> tiled(const OrbitSet& orbits, Init init, Body body)
{
    const int T = orbits.tiles();
    std::vector<Buf> buf(T);
#pragma omp parallel for schedule(dynamic, 1)
    for (int t = 0; t < T; ++t) {
        init(buf[t]);
        orbits.for_each(t, [&](const Quad& q) { body(buf[t], q); });
    }
    return buf;
}

} // namespace

CellBatch collision_parallel(const OrbitSet& orbits, const CellBatch& W)
{
    const Index N = W.rows(), C = W.cols();
    orbits.context().grid->require_field(N, "W batch");
    auto buf = tiled<CellBatch>(
        orbits, [&](CellBatch& b) { b.setZero(N, C); },
        [&](CellBatch& b, const Quad& q) {
            const double* x0 = W.row(q.node[0]).data();
            const double* x1 = W.row(q.node[1]).data();
            const double* x2 = W.row(q.node[2]).data();
            const double* x3 = W.row(q.node[3]).data();
            const double s0 = q.sigma[0], s1 = q.sigma[1], s2 = q.sigma[2], s3 = q.sigma[3];
            constexpr Index chunk = 64;
            double tmp[chunk];
            for (Index c0 = 0; c0 < C; c0 += chunk) {
                const Index len = std::min(chunk, C - c0);
                for (Index c = 0; c < len; ++c) {
                    double a = x0[c0 + c], bb = x1[c0 + c], cc = x2[c0 + c], dd = x3[c0 + c];
                    double p01 = a * bb, p23 = cc * dd;
                    tmp[c] = q.weight * ((s0 * bb + s1 * a) * p23 + (s2 * dd + s3 * cc) * p01);
                }
                for (int s = 0; s < 4; ++s) {
                    double* o = b.row(q.node[s]).data() + c0;
                    const double sg = q.sigma[s];
                    for (Index c = 0; c < len; ++c) o[c] += sg * tmp[c];
                }
            }
        });
    CellBatch out = CellBatch::Zero(N, C);
    for (auto& b : buf) out += b;
    return out;
}

RealMatrix jacobian_parallel(const OrbitSet& orbits, const RealField& W)
{
    const Index N = W.size();
    orbits.context().grid->require_field(N, "W");
    auto buf = tiled<RealMatrix>(
        orbits, [&](RealMatrix& b) { b.setZero(N, N); },
        [&](RealMatrix& b, const Quad& q) {
            double x[4], d[4];
            for (int s = 0; s < 4; ++s) x[s] = W[q.node[s]];
            dB(q.sigma.data(), x, d);
            for (int s = 0; s < 4; ++s) {
                double c = q.weight * q.sigma[s];
                for (int m = 0; m < 4; ++m) b(q.node[s], q.node[m]) += c * d[m];
            }
        });
    RealMatrix J = RealMatrix::Zero(N, N);
    for (auto& b : buf) J += b;
    return J;
}

RealMatrix linearization_parallel(const OrbitSet& orbits, RealField* M)
{
    const QuadContext& ctx = orbits.context();
    const Index N = ctx.grid->size();
    const RealField& om = ctx.disp->omega();
    using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    struct Acc {
        LMat L;
        RealField M;
    };
    auto buf = tiled<Acc>(
        orbits,
        [&](Acc& a) {
            a.L.setZero(N, N);
            a.M.setZero(N);
        },
        [&](Acc& a, const Quad& q) {
            double o[4], w2[4];
            for (int s = 0; s < 4; ++s) {
                o[s] = om[q.node[s]];
                w2[s] = o[s] * o[s];
            }
            double base = q.weight / ((o[0] * o[1]) * (o[2] * o[3]));
            for (int s = 0; s < 4; ++s) {
                double c = base * q.sigma[s];
                for (int m = 0; m < 4; ++m) a.L(q.node[s], q.node[m]) += (long double)(c * q.sigma[m] * w2[m]);
                a.M[q.node[s]] += base * w2[s];
            }
        });
    LMat Ll = LMat::Zero(N, N);
    RealField Md = RealField::Zero(N);
    for (auto& a : buf) {
        Ll += a.L;
        Md += a.M;
    }
    RealMatrix L = Ll.cast<double>();
    // orbits with the same pair in and out never enter the tiles; they
    // cancel in L but feed M and the kernel part with opposite signs
    const double g00 = ctx.g0(std::array<double, 4>{1, 1, 1, 1}.data(), 0.0);
    for (Index a = 0; a < N; ++a) {
        double s = 0.0;
        for (Index b = 0; b < N; ++b) {
            double w2 = om[b] * om[b];
            s += (a == b ? 1.0 : 2.0) / (w2 * w2);
        }
        Md[a] += g00 * s / (om[a] * om[a]);
    }
    if (M) *M = std::move(Md);
    return L;
}

double entropy_parallel(const OrbitSet& orbits, const RealField& W)
{
    const Index N = W.size();
    orbits.context().grid->require_field(N, "W");
    if (W.minCoeff() <= 0.0) throw ConfigError("entropy production needs W > 0");
    auto buf = tiled<double>(
        orbits, [](double& s) { s = 0.0; },
        [&](double& acc, const Quad& q) {
            double x[4], inv = 0.0;
            for (int s = 0; s < 4; ++s) {
                x[s] = W[q.node[s]];
                inv += q.sigma[s] / x[s];
            }
            acc += 4.0 * q.weight * (x[0] * x[1]) * (x[2] * x[3]) * inv * inv;
        });
    double ep = 0.0;
    for (double s : buf) ep += s;
    return ep / static_cast<double>(N);
}

} // namespace pbe::kernels
