// Copyright (c) 2026 the sepkit developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace sepkit::specfun {

inline constexpr double pi = 3.14159265358979323846264338327950288;
inline constexpr double two_pi = 2.0 * pi;
inline constexpr double inv_two_pi = 1.0 / two_pi;
inline constexpr double sqrt_pi = 1.77245385090551602729816748334114518;

inline double erf(double x) { return std::erf(x); }
inline double erfc(double x) { return std::erfc(x); }

/// Standard normal CDF.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Inverse error function on (-1, 1).
///
/// Polynomial initial guess (single-precision grade), then Newton steps on
/// std::erf; the derivative 2/sqrt(pi)*exp(-x^2) never vanishes so two steps
/// already reach full double accuracy.
inline double erf_inv(double p) {
    if (!(std::fabs(p) < 1.0))
        throw std::domain_error("erf_inv: argument must satisfy |p| < 1");
    if (p == 0.0) return 0.0;

    double w = -std::log((1.0 - p) * (1.0 + p));
    double x;
    if (w < 5.0) {
        w -= 2.5;
        x = 2.81022636e-08;
        x = 3.43273939e-07 + x * w;
        x = -3.5233877e-06 + x * w;
        x = -4.39150654e-06 + x * w;
        x = 0.00021858087 + x * w;
        x = -0.00125372503 + x * w;
        x = -0.00417768164 + x * w;
        x = 0.246640727 + x * w;
        x = 1.50140941 + x * w;
    } else {
        w = std::sqrt(w) - 3.0;
        x = -0.000200214257;
        x = 0.000100950558 + x * w;
        x = 0.00134934322 + x * w;
        x = -0.00367342844 + x * w;
        x = 0.00573950773 + x * w;
        x = -0.0076224613 + x * w;
        x = 0.00943887047 + x * w;
        x = 1.00167406 + x * w;
        x = 2.83297682 + x * w;
    }
    x *= p;
    for (int it = 0; it < 3; ++it) {
        const double err = std::erf(x) - p;
        x -= err * 0.5 * sqrt_pi * std::exp(x * x);
    }
    return x;
}

inline double log_gamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("log_gamma: argument must be positive");
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

namespace detail {

// 7-point Gauss / 15-point Kronrod pair on [-1, 1].
inline constexpr double gk_nodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double gk_wk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double gk_wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
inline void gk15(const F& f, double a, double b, double& value, double& error) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double resg = fc * gk_wg[3];
    double resk = fc * gk_wk[7];
    for (int j = 0; j < 3; ++j) {
        const double dx = half * gk_nodes[2 * j + 1];
        const double fsum = f(center - dx) + f(center + dx);
        resg += gk_wg[j] * fsum;
        resk += gk_wk[2 * j + 1] * fsum;
    }
    for (int j = 0; j < 4; ++j) {
        const double dx = half * gk_nodes[2 * j];
        resk += gk_wk[2 * j] * (f(center - dx) + f(center + dx));
    }
    value = resk * half;
    error = std::fabs((resk - resg) * half);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integration of f over [a, b] to absolute
/// tolerance abs_tol. Interval bisection, depth-limited.
template <class F>
inline double integrate_gk(const F& f, double a, double b, double abs_tol = 1e-13) {
    if (a == b) return 0.0;
    struct Segment {
        double a, b, tol;
        int depth;
    };
    double total = 0.0;
    Segment stack[2048];
    int top = 0;
    stack[top++] = {a, b, abs_tol, 0};
    while (top > 0) {
        const Segment seg = stack[--top];
        double value, error;
        detail::gk15(f, seg.a, seg.b, value, error);
        if (error <= seg.tol || seg.depth >= 52 || top >= 2044) {
            total += value;
        } else {
            const double mid = 0.5 * (seg.a + seg.b);
            const double child_tol = 0.5 * seg.tol;
            stack[top++] = {seg.a, mid, child_tol, seg.depth + 1};
            stack[top++] = {mid, seg.b, child_tol, seg.depth + 1};
        }
    }
    return total;
}

/// Owen's T function T(h, a) = 1/(2 pi) * int_0^a exp(-h^2(1+t^2)/2)/(1+t^2) dt,
/// evaluated by adaptive quadrature of the defining integrand.
///
/// Negative arguments are mapped through T(-h, a) = T(h, a) and
/// T(h, -a) = -T(h, a).
inline double owen_t(double h, double a) {
    h = std::fabs(h);
    if (a == 0.0) return 0.0;
    const double sign = a < 0.0 ? -1.0 : 1.0;
    a = std::fabs(a);
    if (h == 0.0) return sign * std::atan(a) * inv_two_pi;

    const double hh = 0.5 * h * h;
    const auto integrand = [hh](double t) {
        const double one_plus_t2 = 1.0 + t * t;
        return std::exp(-hh * one_plus_t2) / one_plus_t2;
    };
    // beyond t_cut the integrand underflows; the remainder is below 1e-300
    double upper = a;
    if (hh > 0.0) upper = std::min(upper, std::sqrt(745.0 / hh) + 1.0);
    const double value = integrate_gk(integrand, 0.0, upper, 1e-15) * inv_two_pi;
    return sign * value;
}

/// Regularized lower incomplete gamma P(a, x), series / continued fraction.
inline double reg_lower_gamma(double a, double x) {
    if (!(a > 0.0)) throw std::domain_error("reg_lower_gamma: a must be positive");
    if (!(x >= 0.0)) throw std::domain_error("reg_lower_gamma: x must be nonnegative");
    if (x == 0.0) return 0.0;

    const double log_prefactor = a * std::log(x) - x - log_gamma(a);
    if (x < a + 1.0) {
        // ascending series
        double term = 1.0 / a;
        double sum = term;
        for (int k = 1; k < 500; ++k) {
            term *= x / (a + k);
            sum += term;
            if (std::fabs(term) < std::fabs(sum) * 1e-17) break;
        }
        return std::exp(log_prefactor) * sum;
    }
    // continued fraction for Q(a, x), modified Lentz
    const double fpmin = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / fpmin;
    double d = 1.0 / b;
    double frac = d;
    for (int k = 1; k < 500; ++k) {
        const double an = -static_cast<double>(k) * (k - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = b + an / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        frac *= del;
        if (std::fabs(del - 1.0) < 1e-17) break;
    }
    return 1.0 - std::exp(log_prefactor) * frac;
}

namespace detail {

inline double bessel_series(double nu, double x) {
    const double log_first = nu * std::log(0.5 * x) - log_gamma(nu + 1.0);
    if (log_first < -745.0) return 0.0;
    const double q = 0.25 * x * x;
    double term = std::exp(log_first);
    double sum = term;
    for (int k = 1; k < 400; ++k) {
        term *= -q / (k * (nu + k));
        sum += term;
        if (std::fabs(term) <= 1e-18 * (std::fabs(sum) + 1e-300)) break;
    }
    return sum;
}

// Hankel expansion, valid once x dominates nu^2.
inline double bessel_asymptotic(double nu, double x) {
    const double mu = 4.0 * nu * nu;
    const double inv8x = 1.0 / (8.0 * x);
    double ak = 1.0;
    double p = 1.0, q = 0.0;
    int sp = -1, sq = 1;
    double prev = std::numeric_limits<double>::max();
    for (int k = 1; k < 80; ++k) {
        const double odd = 2.0 * k - 1.0;
        ak *= (mu - odd * odd) * inv8x / k;
        if (std::fabs(ak) >= prev) break;  // optimal truncation reached
        prev = std::fabs(ak);
        if (k & 1) {
            q += sq * ak;
            sq = -sq;
        } else {
            p += sp * ak;
            sp = -sp;
        }
        if (std::fabs(ak) < 1e-18) break;
    }
    const double omega = x - (0.5 * nu + 0.25) * pi;
    return std::sqrt(2.0 / (pi * x)) * (p * std::cos(omega) - q * std::sin(omega));
}

// Steed's continued-fraction method (CF1 + complex CF2 + Wronskian) for the
// region where neither the ascending series nor the Hankel expansion is safe.
// Requires x >= 2.
inline double bessel_steed(double nu, double x) {
    constexpr double eps = 1e-16;
    constexpr double fpmin = 1e-290;
    constexpr int maxit = 60000;

    const int nl = std::max(0, static_cast<int>(nu - x + 1.5));
    const double xmu = nu - nl;
    const double xi = 1.0 / x;
    const double xi2 = 2.0 * xi;
    const double wron = xi2 / pi;

    // CF1: h = J'_nu / J_nu, sign of J_nu tracked in isign
    int isign = 1;
    double h = nu * xi;
    if (h < fpmin) h = fpmin;
    double b = xi2 * nu;
    double c = h;
    double d = 0.0;
    int i = 1;
    for (; i <= maxit; ++i) {
        b += xi2;
        d = b - d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = b - 1.0 / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = c * d;
        h *= del;
        if (d < 0.0) isign = -isign;
        if (std::fabs(del - 1.0) < eps) break;
    }
    if (i > maxit) throw std::runtime_error("bessel_j: CF1 failed to converge");

    double rjl = isign * fpmin;
    double rjpl = h * rjl;
    const double rjl_at_nu = rjl;
    double fact = nu * xi;
    for (int l = nl; l >= 1; --l) {
        const double rjtemp = fact * rjl + rjpl;
        fact -= xi;
        rjpl = fact * rjtemp - rjl;
        rjl = rjtemp;
    }
    if (rjl == 0.0) rjl = eps;
    const double f = rjpl / rjl;

    // CF2 at order xmu
    double a2 = 0.25 - xmu * xmu;
    double p = -0.5 * xi;
    double q = 1.0;
    const double br = 2.0 * x;
    double bi = 2.0;
    fact = a2 * xi / (p * p + q * q);
    double cr = br + q * fact;
    double ci = bi + p * fact;
    double den = br * br + bi * bi;
    double dr = br / den;
    double di = -bi / den;
    double dlr = cr * dr - ci * di;
    double dli = cr * di + ci * dr;
    double temp = p * dlr - q * dli;
    q = p * dli + q * dlr;
    p = temp;
    for (i = 2; i <= maxit; ++i) {
        a2 += 2 * (i - 1);
        bi += 2.0;
        dr = a2 * dr + br;
        di = a2 * di + bi;
        if (std::fabs(dr) + std::fabs(di) < fpmin) dr = fpmin;
        fact = a2 / (cr * cr + ci * ci);
        cr = br + cr * fact;
        ci = bi - ci * fact;
        if (std::fabs(cr) + std::fabs(ci) < fpmin) cr = fpmin;
        den = dr * dr + di * di;
        dr /= den;
        di /= -den;
        dlr = cr * dr - ci * di;
        dli = cr * di + ci * dr;
        temp = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = temp;
        if (std::fabs(dlr - 1.0) + std::fabs(dli) < eps) break;
    }
    if (i > maxit) throw std::runtime_error("bessel_j: CF2 failed to converge");

    const double gam = (p - f) / q;
    double rjmu = std::sqrt(wron / ((p - f) * gam + q));
    rjmu = std::copysign(rjmu, rjl);
    return rjl_at_nu * (rjmu / rjl);
}

}  // namespace detail

/// Bessel function of the first kind J_nu(x) for real order 0 <= nu <= 64
/// and x >= 0. Ascending series for small x, Steed's method in the
/// intermediate regime, Hankel expansion once x >= max(20, nu^2).
inline double bessel_j(double nu, double x) {
    if (!(nu >= 0.0)) throw std::domain_error("bessel_j: order must be nonnegative");
    if (nu > 64.0) throw std::domain_error("bessel_j: unsupported order (cap is 64)");
    if (!(x >= 0.0)) throw std::domain_error("bessel_j: argument must be nonnegative");
    if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
    if (x <= 12.0) return detail::bessel_series(nu, x);
    if (x >= std::max(20.0, nu * nu)) return detail::bessel_asymptotic(nu, x);
    return detail::bessel_steed(nu, x);
}

}  // namespace sepkit::specfun
