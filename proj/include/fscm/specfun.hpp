#pragma once

#include "fscm/types.hpp"

namespace fscm::specfun {

struct LegendreParams {
    double series_tol = 1e-13;  // relative tolerance of the hypergeometric series
    int max_terms = 200000;
};

/// Legendre function of real degree nu >= 0 on x in (-1, 1],
/// P_nu(x) = 2F1(-nu, nu+1; 1; (1-x)/2).
double legendre_p(double nu, double x, const LegendreParams& params = {});

/// dP_nu/dx on x in (-1, 1), via (1-x^2) P_nu'(x) = nu (P_{nu-1}(x) - x P_nu(x)).
double legendre_p_dx(double nu, double x, const LegendreParams& params = {});

/// Smallest nu > 0 with P_nu(cos(aperture)) = 0; aperture in (0, pi).
/// Bracketed on a 0.05 grid and bisected to 1e-10.
double find_root_nu(double aperture, double nu_cap = 20.0);

/// (1 + 2 nu) * integral_0^aperture P_nu(cos phi)^2 sin phi dphi,
/// by composite Gauss-Legendre with interval doubling (rel. error <= 1e-10).
double delta0c_normalizer(double nu, double aperture);

/// Nodes/weights of the n-point Gauss-Legendre rule on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

}  // namespace fscm::specfun
