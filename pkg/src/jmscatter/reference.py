"""Reference (free-particle) expansion coefficients and reconstructions.

The free radial equation has a regular solution sqrt(kappa r) J_ell(kappa r)
and an irregular one built on Y_ell. Expanded over the oscillator basis
their coefficients s_k, c_k solve the free three-term recursion; s_k
homogeneously, c_k with an inhomogeneous seed relation whose source term
tau comes from the basis cutoff at the origin. Closed forms fix s_k for
all k and (c_0, tau); the rest of c_k follows by upward recursion, which
is stable here because both solutions decay at the same slow rate.

The Laguerre-basis analogues trade Laguerre polynomials of mu^2 for
Gegenbauer polynomials of cos(theta) with mu mapped onto the unit
circle. Reconstruction sums coefficient-weighted basis functions with a
scaled recursion that never forms the exponentially large bare
polynomial values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import lgamma

import numpy as np

from .hamiltonian import free_matrix_coeffs
from .specfun import gegenbauer_associated, hyp2f1_series, re_upper_gamma_neg


@dataclass(frozen=True)
class EnergyPoint:
    """Scattering energy with its derived kinematic scales.

    kappa = sqrt(2E) is the wavenumber; mu = kappa / lam is the
    dimensionless wavenumber seen by a basis of scale lam.
    """

    energy: float
    lam: float
    kappa: float
    mu: float


def energy_point(energy: float, lam: float) -> EnergyPoint:
    if energy <= 0:
        raise ValueError("scattering energy must be positive")
    if lam <= 0:
        raise ValueError("basis scale lam must be positive")
    kappa = math.sqrt(2.0 * energy)
    return EnergyPoint(energy=energy, lam=lam, kappa=kappa, mu=kappa / lam)


@dataclass(frozen=True)
class ReferenceCoefficients:
    """Sine-like and cosine-like coefficient arrays, indices 0..kmax."""

    basis: str
    ell: int
    lam: float
    energy: float
    s: np.ndarray
    c: np.ndarray

    @property
    def h_plus(self) -> np.ndarray:
        """Outgoing combination c + i s."""
        return self.c + 1j * self.s

    @property
    def h_minus(self) -> np.ndarray:
        """Incoming combination c - i s."""
        return self.c - 1j * self.s


def sine_like(point: EnergyPoint, ell: int, kmax: int) -> np.ndarray:
    """Oscillator-basis coefficients of the regular free solution.

    s_k = alpha (-1)^k L~_k^ell(mu^2) with
    alpha = sqrt(2/(lam ell!)) mu^{ell+1/2} e^{-mu^2/2}. The sign flip
    absorbs the positive off-diagonal of the free matrix relative to the
    Jacobi convention.
    """
    if ell < 0 or kmax < 0:
        raise ValueError("ell and kmax must be nonnegative")
    mu2 = point.mu**2
    alpha = math.exp(
        0.5 * (math.log(2.0) - math.log(point.lam) - lgamma(ell + 1))
        + (ell + 0.5) * math.log(point.mu)
        - 0.5 * mu2
    )
    out = np.empty(kmax + 1)
    pm1 = 0.0
    p = 1.0
    out[0] = alpha
    for k in range(kmax):
        pnew = ((2 * k + ell + 1 - mu2) * p - math.sqrt(k * (k + ell)) * pm1) / math.sqrt(
            (k + 1) * (k + ell + 1)
        )
        pm1, p = p, pnew
        out[k + 1] = alpha * (-1) ** (k + 1) * p
    return out


def tau_inhomogeneity(point: EnergyPoint, ell: int) -> float:
    """Source term of the cosine-like seed relation, (E - a_0) c_0 + tau = b_0 c_1."""
    return -(point.lam / math.pi) * math.exp(
        0.5 * (math.log(point.lam) + lgamma(ell + 1) - math.log(2.0))
        + (0.5 - ell) * math.log(point.mu)
        + 0.5 * point.mu**2
    )


def cosine_like_seed(point: EnergyPoint, ell: int) -> tuple[float, float]:
    """First two oscillator-basis coefficients (c_0, c_1) of the irregular solution.

    c_0 carries the real part of the incomplete gamma at negative
    argument; c_1 then follows from the inhomogeneous k = 0 relation.
    """
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    mu2 = point.mu**2
    sign = 1.0 if ell % 2 else -1.0
    c0 = (
        sign
        / math.pi
        * math.exp(
            0.5 * (math.log(2.0) + lgamma(ell + 1) - math.log(point.lam))
            + (ell + 0.5) * math.log(point.mu)
            - 0.5 * mu2
        )
        * re_upper_gamma_neg(ell, mu2)
    )
    coeffs = free_matrix_coeffs(1, ell, point.lam)
    c1 = ((point.energy - coeffs.a[0]) * c0 + tau_inhomogeneity(point, ell)) / coeffs.b[0]
    return c0, c1


def cosine_like_all(point: EnergyPoint, ell: int, kmax: int) -> np.ndarray:
    """Oscillator-basis cosine-like coefficients c_0..c_kmax by upward recursion."""
    if kmax < 0:
        raise ValueError("kmax must be nonnegative")
    c0, c1 = cosine_like_seed(point, ell)
    out = np.empty(kmax + 1)
    out[0] = c0
    if kmax >= 1:
        out[1] = c1
    if kmax >= 2:
        coeffs = free_matrix_coeffs(kmax, ell, point.lam)
        for k in range(1, kmax):
            out[k + 1] = (
                (point.energy - coeffs.a[k]) * out[k] - coeffs.b[k - 1] * out[k - 1]
            ) / coeffs.b[k]
    return out


def _laguerre_angles(point: EnergyPoint) -> tuple[float, float]:
    mu2 = point.mu**2
    den = mu2 + 0.25
    return (mu2 - 0.25) / den, point.mu / den


def laguerre_basis_reference(point: EnergyPoint, ell: int, kmax: int) -> ReferenceCoefficients:
    """Sine-like and cosine-like coefficients in the Laguerre basis.

    Both families satisfy the same Gegenbauer-type recursion in k; the
    seeds differ. The k-dependent normalization sqrt(k!/(k+2 ell)!) is
    part of the coefficients at every k, including k = 0 where it
    contributes 1/sqrt((2 ell)!); dropping it there desynchronizes the
    seeds from the recursion.
    """
    if ell < 0 or kmax < 0:
        raise ValueError("ell and kmax must be nonnegative")
    ct, st = _laguerre_angles(point)
    nu = ell + 0.5
    pref_s = (
        2.0**ell / math.sqrt(math.pi * point.lam) * math.exp(lgamma(nu)) * st**nu
    )
    pref_c = 2.0 ** (ell + 1) * math.exp(lgamma(ell + 1)) / (math.pi * math.sqrt(point.lam)) * st**nu
    hyp = hyp2f1_series(0.5, ell + 1.0, 1.5, ct * ct)

    s = np.empty(kmax + 1)
    c = np.empty(kmax + 1)
    norm0 = math.exp(-0.5 * lgamma(2 * ell + 1))
    s[0] = pref_s * norm0
    c[0] = pref_c * ct * hyp * norm0
    if kmax >= 1:
        norm1 = math.exp(-0.5 * lgamma(2 * ell + 2))
        s[1] = pref_s * (2.0 * nu * ct) * norm1
        c[1] = pref_c * (ct * hyp * (2.0 * nu * ct) - st ** (-2.0 * ell)) * norm1
    for k in range(1, kmax):
        den = math.sqrt((k + 1.0) * (k + 2 * ell + 1.0))
        low = math.sqrt(k * (k + 2.0 * ell))
        s[k + 1] = (2.0 * (k + nu) * ct * s[k] - low * s[k - 1]) / den
        c[k + 1] = (2.0 * (k + nu) * ct * c[k] - low * c[k - 1]) / den
    return ReferenceCoefficients(basis="laguerre", ell=ell, lam=point.lam, energy=point.energy, s=s, c=c)


def reference_coefficients(
    point: EnergyPoint, ell: int, kmax: int, basis: str = "oscillator"
) -> ReferenceCoefficients:
    """Reference coefficient pair for the requested basis."""
    if basis == "oscillator":
        return ReferenceCoefficients(
            basis=basis,
            ell=ell,
            lam=point.lam,
            energy=point.energy,
            s=sine_like(point, ell, kmax),
            c=cosine_like_all(point, ell, kmax),
        )
    if basis == "laguerre":
        return laguerre_basis_reference(point, ell, kmax)
    raise ValueError(f"unknown basis {basis!r}")


def chi_reconstruct(coefficients, ell: int, lam: float, r, basis: str = "oscillator"):
    """Radial function sum_k coeff_k phi_k(r) on a grid.

    The basis functions are generated by the scaled upward recursion
    acting on phi_0 directly, so the Gaussian (or exponential) envelope
    is inside every iterate and bare polynomial values never appear.
    phi_0 must be representable at the largest radius requested; for the
    oscillator basis that bounds lam*r by about 37.
    """
    coefficients = np.asarray(coefficients, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radii must be nonnegative")
    if basis == "oscillator":
        x = (lam * r) ** 2
        order = ell
        phi0 = np.where(
            r > 0,
            np.exp(
                0.5 * (math.log(2.0 * lam) - lgamma(ell + 1))
                + (ell + 0.5) * np.log(np.maximum(lam * r, 1e-300))
                - 0.5 * x
            ),
            0.0,
        )
    elif basis == "laguerre":
        x = lam * r
        order = 2 * ell
        phi0 = np.where(
            r > 0,
            np.exp(
                0.5 * (math.log(lam) - lgamma(2 * ell + 1))
                + (ell + 0.5) * np.log(np.maximum(lam * r, 1e-300))
                - 0.5 * x
            ),
            0.0,
        )
    else:
        raise ValueError(f"unknown basis {basis!r}")

    total = coefficients[0] * phi0
    pm1 = np.zeros_like(phi0)
    p = phi0
    for k in range(len(coefficients) - 1):
        pnew = (
            (2 * k + order + 1 - x) * p - math.sqrt(k * (k + order)) * pm1
        ) / math.sqrt((k + 1) * (k + order + 1))
        pm1, p = p, pnew
        total += coefficients[k + 1] * p
    return total


def irregular_target(point: EnergyPoint, ell: int, r):
    """Asymptotic target of the cosine-like reconstruction, sqrt(kappa r) Y_ell(kappa r).

    The sign convention follows the coefficients themselves: the
    reconstructed cosine-like function approaches +sqrt(kappa r) Y_ell,
    as direct comparison confirms. Diverges at r = 0; entries there are
    NaN and callers restrict to r > 0.
    """
    from .specfun import bessel_y

    r = np.asarray(r, dtype=float)
    out = np.full_like(r, np.nan)
    pos = r > 0
    out[pos] = np.sqrt(point.kappa * r[pos]) * bessel_y(ell, point.kappa * r[pos])
    return out


def regular_target(point: EnergyPoint, ell: int, r):
    """Target of the sine-like reconstruction, sqrt(kappa r) J_ell(kappa r)."""
    from .specfun import bessel_j

    r = np.asarray(r, dtype=float)
    return np.sqrt(point.kappa * r) * bessel_j(ell, point.kappa * r)
