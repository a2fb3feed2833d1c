"""Special functions for the J-matrix scattering machinery.

Normalized and associated Laguerre polynomials, cylindrical Bessel
functions, the real part of the upper incomplete gamma function at
negative argument, terminating and convergent Gauss hypergeometric
series, and Gegenbauer plus associated Gegenbauer polynomials.

All polynomial evaluation goes through upward three-term recursions;
factorial ratios, where unavoidable, go through log-gamma. Closed forms
built from raw factorials overflow long before the basis sizes used
here and are deliberately avoided.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp

__all__ = [
    "laguerre_normalized",
    "laguerre_associated_normalized",
    "bessel_j",
    "bessel_y",
    "re_upper_gamma_neg",
    "exp_integral_ei",
    "hyp2f1_terminating",
    "hyp2f1_series",
    "gegenbauer",
    "gegenbauer_associated",
]

# Hard cap on series length; exceeding it raises instead of silently truncating.
_SERIES_CAP = 100_000
_SERIES_RTOL = 1e-16


def laguerre_normalized(k: int, ell: int, x):
    """Normalized Laguerre polynomial L~_k^ell(x).

    L~_k^ell(x) = sqrt(k! ell! / (k+ell)!) L_k^ell(x), so that the family
    is orthonormal under the weight x^ell e^{-x} / ell!. Evaluated by the
    upward three-term recursion

        x L~_k = (2k+ell+1) L~_k - sqrt(k(k+ell)) L~_{k-1}
                                 - sqrt((k+1)(k+ell+1)) L~_{k+1},

    which is stable for increasing degree.

    Parameters
    ----------
    k : int
        Degree, >= 0.
    ell : int
        Order, >= 0.
    x : float or ndarray
        Argument, >= 0.

    Returns
    -------
    float or ndarray
        Value with the shape of `x`.
    """
    if k < 0 or ell < 0:
        raise ValueError("degree and order must be nonnegative")
    x = np.asarray(x, dtype=float)
    pm1 = np.zeros_like(x)
    p = np.ones_like(x)
    for m in range(k):
        pnew = ((2 * m + ell + 1 - x) * p - math.sqrt(m * (m + ell)) * pm1) / math.sqrt(
            (m + 1) * (m + ell + 1)
        )
        pm1, p = p, pnew
    return p if p.ndim else float(p)


def laguerre_associated_normalized(k: int, ell: int, x, j: int = 1):
    """Associated (abbreviated) normalized Laguerre polynomial L~_k^ell(x; j).

    Solves the same three-term recursion as the normalized family but with
    the coefficient index shifted by the association order j:

        sigma_{k+j} p_{k+1} = (x - eta_{k+j}) p_k - sigma_{k+j-1} p_{k-1},

    eta_k = 2k+ell+1, sigma_k = sqrt((k+1)(k+ell+1)), p_{-1} := 0, p_0 = 1.
    For j = 0 this reproduces (-1)^k L~_k^ell(x).

    Parameters
    ----------
    k : int
        Degree, >= -1 (k = -1 returns 0 by convention).
    ell : int
        Order, >= 0.
    x : float or ndarray
        Argument.
    j : int
        Association order, >= 0 (default 1, the case used by the
        cosine-like closed form).
    """
    if k < -1:
        raise ValueError("degree must be >= -1")
    if ell < 0 or j < 0:
        raise ValueError("order and association order must be nonnegative")
    x = np.asarray(x, dtype=float)
    if k == -1:
        z = np.zeros_like(x)
        return z if z.ndim else 0.0

    def eta(m):
        return 2 * m + ell + 1

    def sigma(m):
        return math.sqrt((m + 1) * (m + ell + 1))

    pm1 = np.zeros_like(x)
    p = np.ones_like(x)
    for m in range(k):
        pnew = ((x - eta(m + j)) * p - sigma(m + j - 1) * pm1) / sigma(m + j)
        pm1, p = p, pnew
    return p if p.ndim else float(p)


def bessel_j(ell: int, x):
    """Cylindrical Bessel function of the first kind, J_ell(x), x >= 0."""
    if ell < 0:
        raise ValueError("order must be nonnegative")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("bessel_j requires x >= 0")
    out = _sp.jv(ell, x)
    return out if out.ndim else float(out)


def bessel_y(ell: int, x):
    """Cylindrical Bessel function of the second kind, Y_ell(x), x > 0."""
    if ell < 0:
        raise ValueError("order must be nonnegative")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("bessel_y requires x > 0")
    out = _sp.yv(ell, x)
    return out if out.ndim else float(out)


def exp_integral_ei(u: float) -> float:
    """Exponential integral Ei(u) for u > 0 by its everywhere-convergent series.

    Ei(u) = gamma + ln(u) + sum_{m>=1} u^m / (m m!). All terms are positive,
    so there is no cancellation; truncation below 1e-16 relative.
    """
    if u <= 0:
        raise ValueError("exp_integral_ei requires u > 0")
    total = np.euler_gamma + math.log(u)
    term = 1.0
    for m in range(1, _SERIES_CAP + 1):
        term *= u / m
        contrib = term / m
        total += contrib
        if contrib < _SERIES_RTOL * abs(total):
            return total
    raise ArithmeticError("Ei series exceeded the term cap")


def re_upper_gamma_neg(ell: int, u: float) -> float:
    """Real part of the upper incomplete gamma Gamma(-ell, -u), u > 0.

    Uses the finite reduction of Gamma(-ell, x) to Gamma(0, x) evaluated at
    x = -u, keeping only the real part: the ln(-u) branch of Gamma(0, -u)
    contributes i*pi to the imaginary part only, and Re Gamma(0, -u) = -Ei(u).

    Re Gamma(-ell, -u) = ((-1)^ell / ell!) [e^u u^{-ell}
                          sum_{m=0}^{ell-1} (ell-1-m)! u^m  -  Ei(u)].
    """
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    if u <= 0:
        raise ValueError("re_upper_gamma_neg requires u > 0")
    acc = 0.0
    for m in range(ell):
        acc += math.factorial(ell - 1 - m) * u**m
    finite = math.exp(u) * u ** (-ell) * acc if ell > 0 else 0.0
    sign = -1.0 if ell % 2 else 1.0
    return sign / math.factorial(ell) * (finite - exp_integral_ei(u))


def hyp2f1_terminating(a: int, b: float, c: float, x: float) -> float:
    """Gauss hypergeometric 2F1(a, b; c; x) for nonpositive integer a.

    The series terminates after |a|+1 terms and is summed exactly. Raises
    if c hits a nonpositive integer before the series terminates.
    """
    if a > 0 or a != int(a):
        raise ValueError("terminating 2F1 requires a nonpositive integer a")
    k = int(-a)
    if c <= 0 and c == int(c) and -int(c) < k:
        raise ValueError("c reaches a nonpositive integer inside the sum")
    total = 1.0
    term = 1.0
    for m in range(k):
        term *= (a + m) * (b + m) / ((c + m) * (m + 1)) * x
        total += term
    return total


def hyp2f1_series(a: float, b: float, c: float, x: float) -> float:
    """Gauss series for 2F1(a, b; c; x), 0 <= x < 1.

    Convergence slows as x -> 1; arguments within 1e-8 of the boundary are
    rejected so the caller can treat near-threshold kinematics explicitly.
    """
    if not 0 <= x:
        raise ValueError("hyp2f1_series requires x >= 0")
    if x >= 1 - 1e-8:
        raise ValueError("hyp2f1_series argument too close to 1; series converges too slowly")
    total = 1.0
    term = 1.0
    for m in range(_SERIES_CAP):
        term *= (a + m) * (b + m) / ((c + m) * (m + 1)) * x
        total += term
        if abs(term) < _SERIES_RTOL * abs(total):
            return total
    raise ArithmeticError("2F1 series exceeded the term cap")


def gegenbauer(k: int, nu: float, x: float) -> float:
    """Gegenbauer polynomial C_k^nu(x) by its standard recursion (k = -1 gives 0)."""
    if k == -1:
        return 0.0
    if k < -1:
        raise ValueError("degree must be >= -1")
    pm1 = 0.0
    p = 1.0
    for m in range(k):
        pnew = (2 * (m + nu) * x * p - (m + 2 * nu - 1) * pm1) / (m + 1)
        pm1, p = p, pnew
    return p


def gegenbauer_associated(k: int, nu: float, x: float) -> float:
    """Associated Gegenbauer polynomial by the shifted recursion.

    2(k+nu+1) x C_k = (k+2) C_{k+1} + (k+2nu) C_{k-1}, with C_{-1} = 0,
    C_0 = 1 (hence C_1 = (nu+1)x).
    """
    if k == -1:
        return 0.0
    if k < -1:
        raise ValueError("degree must be >= -1")
    pm1 = 0.0
    p = 1.0
    for m in range(k):
        pnew = (2 * (m + nu + 1) * x * p - (m + 2 * nu) * pm1) / (m + 2)
        pm1, p = p, pnew
    return p
