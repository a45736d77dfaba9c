#include "fscm/specfun.hpp"

#include <cmath>
#include <vector>

namespace fscm::specfun {

namespace {

// The hypergeometric series is valid for any real degree; the sign guard
// lives in the public wrapper only.
double legendre_series(double nu, double x, const LegendreParams& params) {
    if (x > 1.0 || x <= -1.0) throw Error("legendre_p: x must lie in (-1, 1]");
    const double t = 0.5 * (1.0 - x);
    if (t == 0.0) return 1.0;  // series collapses at x = 1

    // term recurrence: T_{n+1} = T_n * (n - nu)(n + nu + 1) / (n + 1)^2 * t
    double term = 1.0;
    double sum = 1.0;
    for (int n = 0; n < params.max_terms; ++n) {
        term *= (static_cast<double>(n) - nu) * (static_cast<double>(n) + nu + 1.0) /
                ((n + 1.0) * (n + 1.0)) * t;
        sum += term;
        // tail of the series is bounded by |term| * t / (1 - t) once ratios settle
        const double tail = std::abs(term) * t / (1.0 - t) + std::abs(term);
        if (tail <= params.series_tol * std::max(std::abs(sum), 1e-300)) return sum;
    }
    throw Error("legendre_p: series did not converge (nu=" + std::to_string(nu) +
                ", x=" + std::to_string(x) + ", partial sum=" + std::to_string(sum) + ")");
}

}  // namespace

double legendre_p(double nu, double x, const LegendreParams& params) {
    if (nu < 0.0) throw Error("legendre_p: nu must be >= 0");
    return legendre_series(nu, x, params);
}

double legendre_p_dx(double nu, double x, const LegendreParams& params) {
    if (x >= 1.0 || x <= -1.0) throw Error("legendre_p_dx: x must lie in (-1, 1)");
    if (nu == 0.0) return 0.0;
    const double pnu = legendre_series(nu, x, params);
    const double pnum1 = legendre_series(nu - 1.0, x, params);
    return nu * (pnum1 - x * pnu) / (1.0 - x * x);
}

double find_root_nu(double aperture, double nu_cap) {
    if (!(aperture > 0.0 && aperture < M_PI))
        throw Error("find_root_nu: aperture must lie in (0, pi)");
    const double x = std::cos(aperture);

    auto f = [&](double nu) { return legendre_p(nu, x); };

    // roots of interest are simple; bracket by sign change on a 0.05 grid
    const double step = 0.05;
    double lo = 0.0, flo = 1.0;  // P_0 == 1
    double hi = step;
    bool found = false;
    for (; hi <= nu_cap + 0.5 * step; hi += step) {
        const double fhi = f(hi);
        if (flo > 0.0 && fhi <= 0.0) {
            found = true;
            break;
        }
        lo = hi;
        flo = fhi;
    }
    if (!found) throw Error("find_root_nu: no sign change in (0, " + std::to_string(nu_cap) + "]");

    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Newton iteration from the Chebyshev initial guess
        double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2 * j - 1) * t * p1 - (j - 1) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (t * p1 - p0) / (t * t - 1.0);
            const double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
}

double delta0c_normalizer(double nu, double aperture) {
    if (!(aperture > 0.0 && aperture <= M_PI))
        throw Error("delta0c_normalizer: aperture must lie in (0, pi]");
    std::vector<double> gx, gw;
    gauss_legendre(20, gx, gw);

    auto integrand = [&](double phi) {
        const double c = std::cos(phi);
        const double p = (c <= -1.0) ? legendre_p(nu, -1.0 + 1e-14) : legendre_p(nu, c);
        return p * p * std::sin(phi);
    };
    auto composite = [&](int pieces) {
        double total = 0.0;
        const double hseg = aperture / pieces;
        for (int s = 0; s < pieces; ++s) {
            const double mid = (s + 0.5) * hseg;
            double acc = 0.0;
            for (size_t q = 0; q < gx.size(); ++q)
                acc += gw[q] * integrand(mid + 0.5 * hseg * gx[q]);
            total += 0.5 * hseg * acc;
        }
        return total;
    };

    double prev = composite(1);
    for (int pieces = 2; pieces <= 64; pieces *= 2) {
        const double cur = composite(pieces);
        if (std::abs(cur - prev) <= 1e-11 * std::abs(cur)) return (1.0 + 2.0 * nu) * cur;
        prev = cur;
    }
    throw Error("delta0c_normalizer: quadrature did not converge");
}

}  // namespace fscm::specfun
