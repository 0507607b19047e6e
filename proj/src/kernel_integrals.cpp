#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "pbe/linearized.hpp"

namespace pbe {

namespace {

constexpr double pi = std::numbers::pi;

double om2(double x, double y, double r)
{
    double w = 2.0 * (1.0 - std::cos(x)) + 2.0 * (1.0 - std::cos(y)) + r;
    return w * w;
}

void require_2d(const DispersionParams& p)
{
    if (p.d != 2) throw ConfigError("kernel integrals are implemented for d = 2");
    p.validate();
}

template <class F>
double grid_mean(int nq, F&& f)
{
    if (nq < 8) throw ConfigError("quadrature grid too coarse");
    const double h = 2.0 * pi / nq;
    std::vector<double> rows(nq);
    for (int i = 0; i < nq; ++i) {
        double s = 0.0;
        for (int j = 0; j < nq; ++j) s += f(-pi + h * i, -pi + h * j);
        rows[i] = s;
    }
    return pairwise_sum(rows.data(), nq) / (double(nq) * nq);
}

} // namespace

double kernel_I1(const Point2& k, const Point2& kp, const DispersionParams& disp,
                 const DeltaKernel& delta, int nq)
{
    require_2d(disp);
    delta.validate();
    const double r = disp.r;
    const double c0 = om2(k[0], k[1], r) - om2(kp[0], kp[1], r);
    const double d1 = k[0] - kp[0], d2 = k[1] - kp[1];
    return 2.0 * grid_mean(nq, [&](double x, double y) {
        double a = om2(x, y, r), b = om2(x + d1, y + d2, r);
        double dl = delta(a - b + c0);
        return dl == 0.0 ? 0.0 : dl / (a * a * b * b);
    });
}

double kernel_I2(const Point2& k, const Point2& kp, const DispersionParams& disp,
                 const DeltaKernel& delta, int nq)
{
    require_2d(disp);
    delta.validate();
    const double r = disp.r;
    const double c0 = om2(k[0], k[1], r) + om2(kp[0], kp[1], r);
    const double s1 = k[0] + kp[0], s2 = k[1] + kp[1];
    return -grid_mean(nq, [&](double x, double y) {
        double a = om2(x, y, r), b = om2(s1 - x, s2 - y, r);
        double dl = delta(c0 - a - b);
        return dl == 0.0 ? 0.0 : dl / (a * a * b * b);
    });
}

double kernel_I2_shifted_form(const Point2& k, const Point2& kp, const DispersionParams& disp,
                              const DeltaKernel& delta, int nq)
{
    require_2d(disp);
    delta.validate();
    const double r = disp.r;
    const double c0 = om2(k[0], k[1], r) - om2(kp[0], kp[1], r);
    const double d1 = k[0] - kp[0], d2 = k[1] - kp[1];
    return -grid_mean(nq, [&](double x, double y) {
        double a = om2(x, y, r), b = om2(x + d1, y + d2, r), ap = om2(x - pi, y - pi, r);
        double dl = delta(a - b + c0);
        return dl == 0.0 ? 0.0 : dl / (ap * ap * b * b);
    });
}

namespace {

// F(x) = (A - 2cos x)^2 - (B - 2cos(x + t))^2 + c at fixed k1_2
struct Slice {
    double A, B, t, c, r, y, d2;

    double F(double x) const
    {
        double p = A - 2.0 * std::cos(x), q = B - 2.0 * std::cos(x + t);
        return p * p - q * q + c;
    }
    double dF(double x) const
    {
        double p = A - 2.0 * std::cos(x), q = B - 2.0 * std::cos(x + t);
        return 4.0 * std::sin(x) * p - 4.0 * std::sin(x + t) * q;
    }
    double g(double x) const
    {
        double p = A - 2.0 * std::cos(x), q = B - 2.0 * std::cos(x + t);
        double a = p * p, b = q * q;
        return 1.0 / (a * a * b * b);
    }

    // roots z of z^2 F = 0 with z = e^{ix}, sorted by distance to |z| = 1
    std::vector<cplx> circle_roots() const
    {
        const cplx e = std::polar(1.0, t);
        cplx c4 = 1.0 - e * e, c3 = -2.0 * A + 2.0 * B * e, c2 = A * A - B * B + c;
        cplx c1 = -2.0 * A + 2.0 * B / e, c0 = 1.0 - 1.0 / (e * e);
        std::vector<cplx> co{c0, c1, c2, c3, c4};
        double big = 0.0;
        for (auto v : co) big = std::max(big, std::abs(v));
        int deg = 4;
        while (deg > 0 && std::abs(co[deg]) < 1e-14 * big) --deg;
        int low = 0;
        while (low < deg && std::abs(co[low]) < 1e-14 * big) ++low;
        int m = deg - low;
        std::vector<cplx> roots;
        if (m <= 0) return roots;
        Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(m, m);
        for (int i = 1; i < m; ++i) comp(i, i - 1) = 1.0;
        for (int i = 0; i < m; ++i) comp(i, m - 1) = -co[low + i] / co[deg];
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
        for (int i = 0; i < m; ++i) roots.push_back(es.eigenvalues()[i]);
        std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) {
            return std::abs(std::abs(a) - 1.0) < std::abs(std::abs(b) - 1.0);
        });
        return roots;
    }

    int count(double tol = 1e-7) const
    {
        int n = 0;
        for (auto z : circle_roots())
            if (std::abs(std::abs(z) - 1.0) < tol) ++n;
        return n;
    }

    double phi(int nroots) const
    {
        auto roots = circle_roots();
        double s = 0.0;
        for (int i = 0; i < nroots && i < int(roots.size()); ++i) {
            double x = std::arg(roots[i]);
            for (int it = 0; it < 3; ++it) {
                double fx = F(x), d = dF(x);
                if (d == 0.0) break;
                double step = fx / d;
                if (std::abs(step) > 1e-6) break;
                x -= step;
            }
            double d = std::abs(dF(x));
            if (d > 0.0) s += g(x) / d;
        }
        return s;
    }
};

} // namespace

ExactI1Result kernel_I1_exact(const Point2& k, const Point2& kp, const DispersionParams& disp,
                              double tol)
{
    require_2d(disp);
    const double r = disp.r;
    const double c = om2(k[0], k[1], r) - om2(kp[0], kp[1], r);
    const double t = k[0] - kp[0], d2 = k[1] - kp[1];
    auto slice = [&](double y) {
        Slice s;
        s.A = 2.0 * (1.0 - std::cos(y)) + 2.0 + r;
        s.B = 2.0 * (1.0 - std::cos(y + d2)) + 2.0 + r;
        s.t = t;
        s.c = c;
        s.r = r;
        s.y = y;
        s.d2 = d2;
        return s;
    };

    // bracket the fold points where the real root count changes
    const int scan = 4096;
    std::vector<double> ys(scan + 1);
    std::vector<int> cnt(scan + 1);
    for (int i = 0; i <= scan; ++i) {
        ys[i] = -pi + 2.0 * pi * i / scan;
        cnt[i] = slice(ys[i]).count();
    }
    std::vector<double> breaks{-pi};
    for (int i = 0; i < scan; ++i) {
        if (cnt[i] == cnt[i + 1]) continue;
        double lo = ys[i], hi = ys[i + 1];
        int clo = cnt[i];
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo + hi);
            if (slice(mid).count() == clo) lo = mid;
            else hi = mid;
        }
        breaks.push_back(0.5 * (lo + hi));
    }
    breaks.push_back(pi);

    ExactI1Result res;
    res.folds = int(breaks.size()) - 2;
    boost::math::quadrature::tanh_sinh<double> ts;
    double total = 0.0, err = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        double a = breaks[i], b = breaks[i + 1];
        if (b - a < 1e-14) continue;
        int n = slice(0.5 * (a + b)).count();
        if (n == 0) continue;
        double e = 0.0;
        total += ts.integrate([&](double y) { return slice(y).phi(n); }, a, b, tol, &e);
        err += e * std::max(1.0, std::abs(total));
    }
    // normalised measure (2 pi)^-2 and the factor 2 of I1
    res.value = 2.0 * total / (4.0 * pi * pi);
    res.error_estimate = 2.0 * err / (4.0 * pi * pi);
    return res;
}

} // namespace pbe
