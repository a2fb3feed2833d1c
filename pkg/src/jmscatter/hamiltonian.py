"""Interior Hamiltonian assembly in the oscillator basis.

The kinetic-plus-centrifugal operator is tridiagonal in the basis
phi_k(r) = sqrt(2 lam / ell!) (lam r)^{ell+1/2} e^{-lam^2 r^2 / 2}
L~_k^ell(lam^2 r^2); the short-range potential is projected with the
Gauss rule of the basis weight, V_ij = (Lambda W Lambda^T)_ij with
W_ll = V(sqrt(xi_l)/lam). The module also carries the two-sided
nonlinear weight integrals

    F^(n,ell)_ij = (1/ell!) int_0^inf x^{(n+1) ell} e^{-(n+1) x}
                   L~_i^ell(x) L~_j^ell(x) dx,

computed either from a terminating-hypergeometric closed form or
exactly by a Gauss rule in the rescaled variable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import lgamma
from typing import Union

import numpy as np

from .quadrature import QuadratureRule, build_rule
from .specfun import hyp2f1_terminating, laguerre_normalized


@dataclass(frozen=True)
class PowerExponentialPotential:
    """V(r) = strength * r^power * exp(-decay * r)."""

    strength: float
    power: float
    decay: float

    def __post_init__(self):
        if self.decay < 0:
            raise ValueError("decay must be nonnegative for a short-range potential")
        if self.power < 0:
            raise ValueError("power must be nonnegative; the potential has to stay regular at the origin")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = self.strength * r**self.power * np.exp(-self.decay * r)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class PiecewiseLinearPotential:
    """Continuous piecewise-linear V(r) through (breakpoints, values), zero beyond the last breakpoint.

    Breakpoints must be strictly increasing and start at r = 0.
    """

    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        va = np.asarray(self.values, dtype=float)
        if bp.ndim != 1 or bp.size < 2 or bp.size != va.size:
            raise ValueError("need matching 1-d breakpoints and values, at least two points")
        if bp[0] != 0.0:
            raise ValueError("breakpoints must start at r = 0")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.interp(r, self.breakpoints, self.values, right=0.0)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class TabulatedPotential:
    """Linear interpolation of sampled (r, v), zero beyond the table end."""

    r: tuple
    v: tuple

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if r.ndim != 1 or r.size < 2 or r.size != v.size:
            raise ValueError("need matching 1-d r and v samples, at least two points")
        if r[0] != 0.0:
            raise ValueError("tabulated potential must start at r = 0")
        if np.any(np.diff(r) <= 0):
            raise ValueError("r samples must be strictly increasing")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.interp(r, self.r, self.v, right=0.0)
        return out if out.ndim else float(out)


Potential = Union[PowerExponentialPotential, PiecewiseLinearPotential, TabulatedPotential]


@dataclass(frozen=True)
class FreeMatrixCoeffs:
    """Tridiagonal coefficients of the free operator in the oscillator basis.

    a[k] = (lam^2/2)(2k+ell+1) on the diagonal and b[k] =
    (lam^2/2) sqrt((k+1)(k+ell+1)) on the k <-> k+1 off-diagonal. Both
    arrays run over k = 0..kmax so the tail relations at the basis edge
    have their coefficients available.
    """

    ell: int
    lam: float
    a: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class LinearHamiltonian:
    """Truncated interior Hamiltonian H = K + Lambda W Lambda^T plus its context."""

    matrix: np.ndarray
    coeffs: FreeMatrixCoeffs
    ell: int
    lam: float
    n_basis: int
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)


def free_matrix_coeffs(kmax: int, ell: int, lam: float) -> FreeMatrixCoeffs:
    """Free-operator recursion coefficients for k = 0..kmax."""
    if kmax < 0:
        raise ValueError("kmax must be nonnegative")
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    if lam <= 0:
        raise ValueError("basis scale lam must be positive")
    k = np.arange(kmax + 1)
    a = 0.5 * lam**2 * (2 * k + ell + 1)
    b = 0.5 * lam**2 * np.sqrt((k + 1.0) * (k + ell + 1.0))
    return FreeMatrixCoeffs(ell=ell, lam=lam, a=a, b=b)


def basis_scale_matrix(rule: QuadratureRule, size: int) -> np.ndarray:
    """Lambda[k, l] = sqrt(w_l) L~_k(xi_l) for k < size, the projection stencil."""
    if size > rule.order:
        raise ValueError("basis size exceeds the quadrature order")
    return rule.vectors[:size, :]


def potential_matrix(rule: QuadratureRule, potential: Potential, lam: float, size: int) -> np.ndarray:
    """Basis matrix of the radial potential by Gauss projection.

    The rule lives in the dimensionless variable x = (lam r)^2, so the
    potential is sampled at r_l = sqrt(xi_l)/lam. Exact only for
    potentials polynomial in x; for everything else accuracy is set by
    the quadrature order.
    """
    if lam <= 0:
        raise ValueError("basis scale lam must be positive")
    lam_mat = basis_scale_matrix(rule, size)
    w_diag = potential(np.sqrt(rule.nodes) / lam)
    return (lam_mat * w_diag[np.newaxis, :]) @ lam_mat.T


def assemble_linear(
    potential: Potential,
    *,
    n_basis: int,
    ell: int,
    lam: float,
    rule: QuadratureRule,
) -> LinearHamiltonian:
    """Build the N x N interior Hamiltonian and its eigendecomposition.

    The eigendecomposition is kept because linear problems resolve many
    energies from one diagonalization; the nonlinear iteration ignores it.
    """
    if n_basis < 2:
        raise ValueError("need at least two basis states for the edge relations")
    if rule.ell != ell:
        raise ValueError("quadrature rule was built for a different ell")
    coeffs = free_matrix_coeffs(n_basis, ell, lam)
    h = np.diag(coeffs.a[:n_basis].copy())
    off = coeffs.b[: n_basis - 1]
    idx = np.arange(n_basis - 1)
    h[idx, idx + 1] = off
    h[idx + 1, idx] = off
    h += potential_matrix(rule, potential, lam, n_basis)
    evals, evecs = np.linalg.eigh(h)
    return LinearHamiltonian(
        matrix=h,
        coeffs=coeffs,
        ell=ell,
        lam=lam,
        n_basis=n_basis,
        eigenvalues=evals,
        eigenvectors=evecs,
    )


def f_weight_analytic(n: int, ell: int, rows: int, cols: int) -> np.ndarray:
    """Closed-form F^(n,ell) block of shape (rows, cols).

    With sigma = n+1,

        F_ij = sqrt(i! j! (i+ell)! (j+ell)!) / sigma^{sigma ell + 1}
               * sum_{k=0}^{min(i,j)} sigma^{-2k} / ((ell+k)!)^2
                 * (k + sigma ell)! / (k! (i-k)! (j-k)!)
                 * 2F1(k-i, k+sigma ell+1; k+ell+1; 1/sigma)
                 * 2F1(k-j, k+sigma ell+1; k+ell+1; 1/sigma),

    with all factorial ratios taken through log-gamma. The terminating
    hypergeometric factors alternate in sign, so for very large indices
    the quadrature route is the better-conditioned reference.
    """
    if n < 1:
        raise ValueError("nonlinearity exponent n must be >= 1")
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    sigma = n + 1
    out = np.empty((rows, cols))
    x = 1.0 / sigma
    for i in range(rows):
        for j in range(cols):
            logpref = 0.5 * (
                lgamma(i + 1) + lgamma(j + 1) + lgamma(i + ell + 1) + lgamma(j + ell + 1)
            ) - (sigma * ell + 1) * math.log(sigma)
            total = 0.0
            for k in range(min(i, j) + 1):
                logterm = (
                    -2 * k * math.log(sigma)
                    - 2 * lgamma(ell + k + 1)
                    + lgamma(k + sigma * ell + 1)
                    - lgamma(k + 1)
                    - lgamma(i - k + 1)
                    - lgamma(j - k + 1)
                )
                hyp = hyp2f1_terminating(k - i, k + sigma * ell + 1, k + ell + 1, x)
                hyp *= hyp2f1_terminating(k - j, k + sigma * ell + 1, k + ell + 1, x)
                total += math.exp(logpref + logterm) * hyp
            out[i, j] = total
    return out


def f_weight_quadrature(n: int, ell: int, rows: int, cols: int, order: int | None = None) -> np.ndarray:
    """F^(n,ell) block by exact Gauss quadrature in the rescaled variable.

    Substituting y = sigma x turns the integrand into a polynomial times
    the weight y^{sigma ell} e^{-y}, so a rule of that weight with order
    >= (rows+cols)/2 integrates it exactly:

        F_ij = sigma^{-(sigma ell + 1)} ((sigma ell)! / ell!)
               * sum_l w_l L~_i(y_l/sigma) L~_j(y_l/sigma).
    """
    if n < 1:
        raise ValueError("nonlinearity exponent n must be >= 1")
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    sigma = n + 1
    if order is None:
        order = (rows + cols) // 2 + 2
    rule = build_rule(order, sigma * ell)
    xs = rule.nodes / sigma
    li = np.vstack([laguerre_normalized(i, ell, xs) for i in range(rows)])
    lj = np.vstack([laguerre_normalized(j, ell, xs) for j in range(cols)])
    pref = math.exp(
        lgamma(sigma * ell + 1) - lgamma(ell + 1) - (sigma * ell + 1) * math.log(sigma)
    )
    return pref * (li * rule.weights[np.newaxis, :]) @ lj.T
