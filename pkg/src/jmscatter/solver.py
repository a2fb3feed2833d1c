"""Scattering solve: effective interior problem, tail matching, iteration.

One energy point runs as a fixed-point iteration in the perturbation
order m. Order zero is the linear problem. Each later order contracts
the previous order's interior coefficients into the effective
interaction R, resolves the interior Green's function, reads the
scattering matrix off the basis-edge matching relation, and refreshes
the coefficients. Termination is convergence of S, a certified cycle of
period 2 or 3 (checked in that order, after convergence), or the
iteration cap.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import factorial
from typing import Sequence

import numpy as np

from .hamiltonian import LinearHamiltonian
from .linearize import DTensor
from .reference import ReferenceCoefficients, energy_point, reference_coefficients

# A matrix this ill-conditioned is treated as an on-grid singularity,
# not as data; the energy is nudged once and re-solved.
_COND_LIMIT = 1e12
_ENERGY_NUDGE = 1e-6
# Cycle certification: this many consecutive orders must look periodic.
_CYCLE_STREAK = 4


class SingularMatrixError(ArithmeticError):
    """Interior resolvent is numerically singular at this energy."""


@dataclass(frozen=True)
class RMatrix:
    """Effective nonlinear interaction with its pre-symmetrization defect."""

    matrix: np.ndarray
    hermiticity_defect: float


@dataclass(frozen=True)
class CoefficientState:
    """Interior + edge coefficients and scattering matrix at one order."""

    iteration: int
    coefficients: np.ndarray
    s_matrix: complex


@dataclass(frozen=True)
class ScatteringResult:
    """Outcome of one energy point.

    status is one of "converged", "bifurcated", "max-iterations".
    history holds S at every computed order, m = 0 first. For cycles,
    `bifurcation` carries the distinct |1 - S| cycle values in
    descending order and `period` their count.
    """

    energy: float
    status: str
    iterations: int
    s_matrix: complex
    history: tuple
    unimodularity_defect: float
    bifurcation: tuple | None = None
    period: int | None = None

    @property
    def abs_one_minus_s(self) -> float:
        return abs(1.0 - self.s_matrix)


def r_matrix(dten: DTensor, coefficients: np.ndarray, lam: float) -> RMatrix:
    """Contract interior coefficients into the effective interaction.

    Per canonical tuple the coefficient weight sums every distinct
    multiset split into n unconjugated and n conjugated factors with
    multinomial multiplicities; position-wise combinations would count
    repeated indices more than once. The weight is real up to roundoff
    (conjugate splits pair up), and the final matrix is symmetrized with
    the defect recorded.
    """
    a = np.asarray(coefficients, dtype=complex)
    if a.size < dten.n_basis:
        raise ValueError("coefficient vector shorter than the basis")
    a = a[: dten.n_basis]
    pu = a[dten.split_u].prod(axis=1)
    pv = np.conj(a)[dten.split_v].prod(axis=1)
    contrib = dten.split_coeff * pu * pv
    weights = np.zeros(dten.tuples.shape[0], dtype=complex)
    np.add.at(weights, dten.split_tuple, contrib)
    pref = (2.0 * lam**2 / factorial(dten.ell)) ** dten.n
    raw = pref * np.tensordot(weights, dten.stack, axes=(0, 0))
    defect = float(np.abs(raw - raw.conj().T).max())
    sym = 0.5 * (raw + raw.conj().T)
    return RMatrix(matrix=sym.real, hermiticity_defect=defect)


def greens_matrix(h_eff: np.ndarray, energy: float) -> np.ndarray:
    """Interior resolvent (H_eff - E)^{-1} by direct inversion."""
    shifted = h_eff - energy * np.eye(h_eff.shape[0])
    cond = np.linalg.cond(shifted)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise SingularMatrixError(f"resolvent condition number {cond:.3e} at E={energy!r}")
    return np.linalg.inv(shifted)


def greens_spectral(eigenvalues: np.ndarray, eigenvectors: np.ndarray, energy: float) -> np.ndarray:
    """Interior resolvent from a precomputed eigendecomposition.

    One diagonalization serves a whole energy scan of a fixed operator;
    this is the cheap path for linear problems.
    """
    gaps = eigenvalues - energy
    scale = np.abs(eigenvalues).max() + abs(energy)
    if np.abs(gaps).min() < scale / _COND_LIMIT:
        raise SingularMatrixError(f"eigenvalue within resolvent limit of E={energy!r}")
    return (eigenvectors / gaps[np.newaxis, :]) @ eigenvectors.T


# Eigenvalue spacing below which the minor-ratio resolvent formulas lose
# their partial-fraction denominators and direct inversion takes over.
_DEGENERACY_GAP = 1e-12


def _too_degenerate(eigenvalues: np.ndarray) -> bool:
    gaps = np.diff(np.sort(eigenvalues))
    return bool(gaps.size) and float(gaps.min()) < _DEGENERACY_GAP


def greens_diagonal_minor(h_eff: np.ndarray, index: int, energy: float) -> float:
    """Diagonal resolvent entry as a ratio of characteristic polynomials.

    G_ii(E) = prod_k (e'_k - E) / prod_k (e_k - E), where e' are the
    eigenvalues of the operator with row and column i deleted. They
    interlace the full spectrum, so pairing the factors in sorted order
    keeps every partial ratio moderate. Near-degenerate spectra fall back
    to direct inversion.
    """
    full = np.sort(np.linalg.eigvalsh(h_eff))
    if _too_degenerate(full):
        return float(greens_matrix(h_eff, energy)[index, index])
    deleted = np.delete(np.delete(h_eff, index, axis=0), index, axis=1)
    part = np.sort(np.linalg.eigvalsh(deleted))
    value = 1.0 / (full[-1] - energy)
    for k in range(part.size):
        value *= (part[k] - energy) / (full[k] - energy)
    return float(value)


def greens_offdiag_minor(h_eff: np.ndarray, row: int, col: int, energy: float) -> float:
    """Off-diagonal resolvent entry from cofactor minors at the poles.

    Partial fractions over the simple poles of the resolvent give

        G_ij(E) = (-1)^{i+j} sum_k M_ij(e_k) / [(e_k - E) prod_{m != k} (e_m - e_k)]

    with M_ij(z) the determinant of (H - z I) with row i and column j
    deleted. No eigenvectors are needed. Near-degenerate spectra fall
    back to direct inversion, where the pole expansion degrades.
    """
    eigenvalues = np.linalg.eigvalsh(h_eff)
    if _too_degenerate(eigenvalues):
        return float(greens_matrix(h_eff, energy)[row, col])
    size = h_eff.shape[0]
    total = 0.0
    for k in range(size):
        shifted = h_eff - eigenvalues[k] * np.eye(size)
        minor = np.delete(np.delete(shifted, row, axis=0), col, axis=1)
        gaps = np.delete(eigenvalues, k) - eigenvalues[k]
        total += np.linalg.det(minor) / ((eigenvalues[k] - energy) * np.prod(gaps))
    return float((-1) ** (row + col) * total)


def phase_shift(ref: ReferenceCoefficients, g_corner: float, b_edge: float, n_basis: int) -> complex:
    """Scattering matrix from the basis-edge matching relation.

    S = T_{N-1} (1 + b G_corner Rm) / (1 + b G_corner Rp), with
    T = h^-/h^+ at the edge and Rpm the h^{+-} ratios across it. With a
    real symmetric interior operator the numerator is the conjugate of
    the denominator, so |S| = 1 up to roundoff.
    """
    hp = ref.h_plus
    hm = ref.h_minus
    t_edge = hm[n_basis - 1] / hp[n_basis - 1]
    r_plus = hp[n_basis] / hp[n_basis - 1]
    r_minus = hm[n_basis] / hm[n_basis - 1]
    return t_edge * (1.0 + b_edge * g_corner * r_minus) / (1.0 + b_edge * g_corner * r_plus)


def interior_coefficients(
    s_matrix: complex,
    ref: ReferenceCoefficients,
    greens_edge_column: np.ndarray,
    b_edge: float,
    n_basis: int,
) -> np.ndarray:
    """Expansion coefficients A_0..A_N at one order.

    The two edge entries come from the tail solution
    A_k = h^-_k - S h^+_k (k = N-1, N); the interior follows from the
    Green's function acting on the edge coupling.
    """
    a = np.empty(n_basis + 1, dtype=complex)
    a[n_basis - 1] = ref.h_minus[n_basis - 1] - s_matrix * ref.h_plus[n_basis - 1]
    a[n_basis] = ref.h_minus[n_basis] - s_matrix * ref.h_plus[n_basis]
    a[: n_basis - 1] = -b_edge * greens_edge_column[: n_basis - 1] * a[n_basis]
    return a


def _distinct_cycle(history: list[complex], period: int) -> tuple:
    tail = history[-period:]
    return tuple(sorted((abs(1.0 - s) for s in tail), reverse=True))


def solve_energy(
    energy: float,
    hamiltonian: LinearHamiltonian,
    dten: DTensor | None = None,
    *,
    coupling: float = 0.0,
    tolerance: float = 1e-8,
    bifurcation_tolerance: float = 1e-3,
    max_iterations: int = 50,
    _allow_nudge: bool = True,
) -> ScatteringResult:
    """Run the perturbative iteration at one energy.

    Order 0 solves the linear problem. Orders m >= 1 rebuild the
    effective interaction from order m-1 and re-solve. After a cycle of
    period 2 or 3 is certified, iteration continues to the cap or until
    the cycle values themselves settle, so the reported pair is the
    converged cycle rather than its transient.
    """
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    n = hamiltonian.n_basis
    lam = hamiltonian.lam
    b_edge = hamiltonian.coeffs.b[n - 1]
    try:
        ref = reference_coefficients(energy_point(energy, lam), hamiltonian.ell, n)

        history: list[complex] = []
        defect = 0.0

        g0 = greens_matrix(hamiltonian.matrix, energy)
        s = phase_shift(ref, g0[n - 1, n - 1], b_edge, n)
        coeffs = interior_coefficients(s, ref, g0[:, n - 1], b_edge, n)
        history.append(s)
        defect = max(defect, abs(abs(s) - 1.0))

        if coupling == 0.0 or dten is None:
            return ScatteringResult(
                energy=energy, status="converged", iterations=0, s_matrix=s,
                history=tuple(history), unimodularity_defect=defect,
            )

        streak2 = streak3 = 0
        certified_period = 0
        for m in range(1, max_iterations + 1):
            eff = hamiltonian.matrix + coupling * r_matrix(dten, coeffs, lam).matrix
            g = greens_matrix(eff, energy)
            s = phase_shift(ref, g[n - 1, n - 1], b_edge, n)
            coeffs = interior_coefficients(s, ref, g[:, n - 1], b_edge, n)
            history.append(s)
            defect = max(defect, abs(abs(s) - 1.0))

            step1 = abs(history[-1] - history[-2])
            if step1 < tolerance:
                return ScatteringResult(
                    energy=energy, status="converged", iterations=m, s_matrix=s,
                    history=tuple(history), unimodularity_defect=defect,
                )

            if certified_period:
                # Ride the certified cycle until its values settle.
                back = abs(history[-1] - history[-1 - certified_period])
                if back < tolerance or m == max_iterations:
                    return ScatteringResult(
                        energy=energy, status="bifurcated", iterations=m, s_matrix=s,
                        history=tuple(history), unimodularity_defect=defect,
                        bifurcation=_distinct_cycle(history, certified_period),
                        period=certified_period,
                    )
                continue

            if m >= 2 and abs(history[-1] - history[-3]) < bifurcation_tolerance and step1 >= bifurcation_tolerance:
                streak2 += 1
            else:
                streak2 = 0
            if (
                m >= 3
                and abs(history[-1] - history[-4]) < bifurcation_tolerance
                and step1 >= bifurcation_tolerance
                and abs(history[-1] - history[-3]) >= bifurcation_tolerance
            ):
                streak3 += 1
            else:
                streak3 = 0
            if streak2 >= _CYCLE_STREAK:
                certified_period = 2
            elif streak3 >= _CYCLE_STREAK:
                certified_period = 3

        return ScatteringResult(
            energy=energy, status="max-iterations", iterations=max_iterations, s_matrix=s,
            history=tuple(history), unimodularity_defect=defect,
        )
    except SingularMatrixError:
        if not _allow_nudge:
            raise
        return solve_energy(
            energy * (1.0 + _ENERGY_NUDGE), hamiltonian, dten,
            coupling=coupling, tolerance=tolerance,
            bifurcation_tolerance=bifurcation_tolerance,
            max_iterations=max_iterations, _allow_nudge=False,
        )


def _solve_linear_spectral(energy: float, hamiltonian: LinearHamiltonian) -> ScatteringResult:
    n = hamiltonian.n_basis
    b_edge = hamiltonian.coeffs.b[n - 1]

    def attempt(e):
        ref = reference_coefficients(energy_point(e, hamiltonian.lam), hamiltonian.ell, n)
        g = greens_spectral(hamiltonian.eigenvalues, hamiltonian.eigenvectors, e)
        s = phase_shift(ref, g[n - 1, n - 1], b_edge, n)
        return ScatteringResult(
            energy=e, status="converged", iterations=0, s_matrix=s,
            history=(s,), unimodularity_defect=abs(abs(s) - 1.0),
        )

    try:
        return attempt(energy)
    except SingularMatrixError:
        return attempt(energy * (1.0 + _ENERGY_NUDGE))


def scan(
    energies: Sequence[float],
    hamiltonian: LinearHamiltonian,
    dten: DTensor | None = None,
    *,
    coupling: float = 0.0,
    tolerance: float = 1e-8,
    bifurcation_tolerance: float = 1e-3,
    max_iterations: int = 50,
    threads: int = 1,
) -> list[ScatteringResult]:
    """Solve a whole energy grid, in input order.

    Linear problems reuse the Hamiltonian eigendecomposition across the
    grid. Nonlinear grids iterate independently per energy and may be
    spread over worker threads; ordering of the results is by input
    position either way.
    """
    if coupling == 0.0 or dten is None:
        return [_solve_linear_spectral(e, hamiltonian) for e in energies]

    def run(e):
        return solve_energy(
            e, hamiltonian, dten, coupling=coupling, tolerance=tolerance,
            bifurcation_tolerance=bifurcation_tolerance, max_iterations=max_iterations,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, energies))
    return [run(e) for e in energies]


def resonance_energy(
    energies: Sequence[float], results: Sequence[ScatteringResult]
) -> float:
    """Energy of strongest resonance activity on a solved grid.

    |1 - S| alone cannot locate a resonance: any slow background phase
    sweeping through pi/2 pushes it to its ceiling of 2. The resonance is
    where the phase moves fastest, so this picks the grid point where the
    unwrapped phase-shift derivative d(delta)/dE peaks in magnitude.
    Interior points only; the grid must be fine enough to sample the jump.
    """
    if len(energies) != len(results):
        raise ValueError("energies and results must align")
    if len(energies) < 3:
        raise ValueError("need at least three grid points")
    e = np.asarray(energies, dtype=float)
    s = np.array([res.s_matrix for res in results])
    delta = 0.5 * np.unwrap(np.angle(s))
    slope = np.abs(np.gradient(delta, e))
    return float(e[1 + int(np.argmax(slope[1:-1]))])
