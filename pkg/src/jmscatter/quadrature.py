"""Gauss quadrature generated from the basis Jacobi matrix.

The free Hamiltonian in the oscillator basis is tridiagonal; the same
coefficients, stripped of scale factors, form the Jacobi matrix of the
normalized Laguerre family. Its eigenvalues are the Gauss nodes of the
weight x^ell e^{-x} / ell! and the squared first components of its
eigenvectors are the Gauss weights (the weight function integrates to
one, so the weights sum to one). Eigenvector rows evaluate the basis
polynomials at the nodes without any explicit recursion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal


@dataclass(frozen=True)
class JacobiMatrix:
    """Symmetric tridiagonal recursion matrix of the normalized Laguerre family."""

    ell: int
    diagonal: np.ndarray
    off_diagonal: np.ndarray


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss rule of order Q for the weight x^ell e^{-x} / ell! on [0, inf).

    Attributes
    ----------
    nodes : (Q,) ndarray
        Gauss abscissas, strictly positive and increasing.
    weights : (Q,) ndarray
        Gauss weights; they sum to one.
    vectors : (Q, Q) ndarray
        Sign-fixed orthonormal eigenvectors of the Jacobi matrix;
        vectors[k, l] = sqrt(weights[l]) L~_k^ell(nodes[l]) is the
        projection stencil, finite even where the weight underflows.
    values : (Q, Q) ndarray
        values[k, l] = L~_k^ell(nodes[l]) for degrees k = 0..Q-1, zeroed
        on dead columns (see `live`).
    live : (Q,) ndarray of bool
        False where the weight underflowed to zero in the eigensolve.
        Such nodes sit so deep in the exponential tail that their true
        contribution to any weighted sum here is below double precision,
        so consumers simply skip them.
    """

    ell: int
    order: int
    nodes: np.ndarray
    weights: np.ndarray
    vectors: np.ndarray
    values: np.ndarray
    live: np.ndarray


def build_jacobi(order: int, ell: int) -> JacobiMatrix:
    """Assemble the order x order Jacobi matrix for angular momentum ell.

    Diagonal 2k+ell+1, off-diagonal -sqrt((k+1)(k+ell+1)). The sign of the
    off-diagonal is a similarity convention; nodes and weights do not depend
    on it, polynomial values at the nodes do (see `eigendecompose`).
    """
    if order < 1:
        raise ValueError("quadrature order must be >= 1")
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    k = np.arange(order)
    diag = 2.0 * k + ell + 1.0
    off = -np.sqrt((k[:-1] + 1.0) * (k[:-1] + ell + 1.0))
    return JacobiMatrix(ell=ell, diagonal=diag, off_diagonal=off)


def eigendecompose(jac: JacobiMatrix) -> QuadratureRule:
    """Diagonalize the Jacobi matrix into a Gauss quadrature rule.

    The eigenvector matrix Lambda (columns = eigenvectors) gives
    weights[l] = Lambda[0, l]**2 and values[k, l] = Lambda[k, l] / Lambda[0, l].
    Eigenvector signs are fixed so Lambda[0, l] > 0; with the negative
    off-diagonal convention of `build_jacobi` the ratio then reproduces the
    normalized Laguerre values themselves, not an alternating-sign variant.
    """
    nodes, vecs = eigh_tridiagonal(jac.diagonal, jac.off_diagonal)
    first = vecs[0, :].copy()
    vecs[:, first < 0] *= -1.0
    first = vecs[0, :]
    live = first > 0
    if not live.any():
        raise ArithmeticError("all first eigenvector components vanished in Jacobi diagonalization")
    weights = first**2
    values = np.zeros_like(vecs)
    values[:, live] = vecs[:, live] / first[live]
    return QuadratureRule(
        ell=jac.ell,
        order=jac.diagonal.size,
        nodes=nodes,
        weights=weights,
        vectors=vecs,
        values=values,
        live=live,
    )


def build_rule(order: int, ell: int) -> QuadratureRule:
    """Convenience composition of `build_jacobi` and `eigendecompose`."""
    return eigendecompose(build_jacobi(order, ell))


def integrate_weighted(rule: QuadratureRule, fvals: np.ndarray):
    """Integrate f against the weight: sum_l weights[l] * fvals[..., l].

    `fvals` holds samples of f at `rule.nodes` along the last axis. Exact
    for polynomials of degree <= 2*order - 1.
    """
    fvals = np.asarray(fvals)
    if fvals.shape[-1] != rule.order:
        raise ValueError("sample axis does not match the quadrature order")
    return fvals @ rule.weights


def quadrature_values(rule: QuadratureRule, kmax: int) -> np.ndarray:
    """Rows 0..kmax of the node-value table L~_k^ell(nodes).

    Degrees up to order-1 come straight from the eigenvectors; the table
    cannot be extended past that without a fresh recursion, so asking for
    more is an error.
    """
    if not 0 <= kmax < rule.order:
        raise ValueError("kmax must lie in [0, order)")
    return rule.values[: kmax + 1, :]
