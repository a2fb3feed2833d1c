"""Resolvent routes, effective interaction, and the scattering iteration."""

import math

import numpy as np
import pytest

from jmscatter.hamiltonian import (
    PiecewiseLinearPotential,
    PowerExponentialPotential,
    assemble_linear,
    f_weight_quadrature,
)
from jmscatter.linearize import c_tensor_quadrature, d_tensor, quadrature_bound
from jmscatter.quadrature import build_rule
from jmscatter.solver import (
    ScatteringResult,
    SingularMatrixError,
    greens_diagonal_minor,
    greens_matrix,
    greens_offdiag_minor,
    greens_spectral,
    r_matrix,
    resonance_energy,
    scan,
    solve_energy,
)


def random_symmetric(size, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(size, size))
    return 0.5 * (m + m.T)


@pytest.fixture(scope="module")
def gauss_setup(rule100_l0):
    potential = PowerExponentialPotential(strength=7.5, power=2.0, decay=1.0)
    ham = assemble_linear(potential, n_basis=20, ell=0, lam=1.0, rule=rule100_l0)
    dten = d_tensor(1, 0, 20, rule100_l0)
    return ham, dten


@pytest.fixture(scope="module")
def trapezoid_setup():
    rule = build_rule(30, 1)
    potential = PiecewiseLinearPotential(
        breakpoints=(0.0, 1.2, 3.0, 7.0), values=(0.0, 2.4, 2.4, 0.0)
    )
    ham = assemble_linear(potential, n_basis=20, ell=1, lam=1.0, rule=rule)
    dten = d_tensor(2, 1, 20, rule, override=True)
    return ham, dten


class TestGreens:
    def test_scalar_case(self):
        out = greens_matrix(np.array([[2.0]]), 1.0)
        assert out.shape == (1, 1)
        assert out[0, 0] == pytest.approx(1.0, rel=1e-14)

    def test_inverse_residual(self):
        h = random_symmetric(6, seed=11)
        g = greens_matrix(h, 0.37)
        residual = (h - 0.37 * np.eye(6)) @ g - np.eye(6)
        assert np.abs(residual).max() < 1e-9

    def test_direct_matches_spectral(self):
        h = random_symmetric(6, seed=12)
        evals, evecs = np.linalg.eigh(h)
        for energy in (-1.3, 0.2, 0.9, 2.7):
            direct = greens_matrix(h, energy)
            spectral = greens_spectral(evals, evecs, energy)
            assert np.abs(direct - spectral).max() < 1e-10

    def test_minor_ratio_routes_match_direct(self):
        # two determinant-based constructions of individual entries,
        # sharing nothing with the inversion route
        h = random_symmetric(6, seed=13)
        for energy in (-2.0, -0.5, 0.31, 1.11, 3.4):
            direct = greens_matrix(h, energy)
            for i in range(6):
                assert greens_diagonal_minor(h, i, energy) == pytest.approx(
                    direct[i, i], rel=1e-9, abs=1e-12
                )
            for i in range(6):
                for j in range(i + 1, 6):
                    assert greens_offdiag_minor(h, i, j, energy) == pytest.approx(
                        direct[i, j], rel=1e-9, abs=1e-12
                    )

    def test_deleted_spectrum_interlaces(self):
        h = random_symmetric(8, seed=14)
        full = np.linalg.eigvalsh(h)
        minor = np.linalg.eigvalsh(np.delete(np.delete(h, 3, axis=0), 3, axis=1))
        for k in range(7):
            assert full[k] <= minor[k] + 1e-12
            assert minor[k] <= full[k + 1] + 1e-12

    def test_degenerate_spectrum_falls_back(self):
        h = 2.0 * np.eye(3)
        assert greens_diagonal_minor(h, 1, 1.0) == pytest.approx(1.0, rel=1e-12)
        assert greens_offdiag_minor(h, 0, 2, 1.0) == pytest.approx(0.0, abs=1e-12)

    def test_singular_energy_refused(self):
        h = random_symmetric(5, seed=15)
        evals, evecs = np.linalg.eigh(h)
        with pytest.raises(SingularMatrixError):
            greens_matrix(h, float(evals[2]))
        with pytest.raises(SingularMatrixError):
            greens_spectral(evals, evecs, float(evals[2]))


@pytest.fixture(scope="module")
def contraction():
    # the rule order is well above the polynomial exactness bound because
    # the node-space route also samples a non-polynomial e^{-n xi} factor
    n, ell, n_basis = 1, 1, 6
    assert quadrature_bound(n, n_basis) <= 40
    rule = build_rule(40, ell)
    dten = d_tensor(n, ell, n_basis, rule)
    rng = np.random.default_rng(21)
    coeffs = rng.normal(size=n_basis) + 1j * rng.normal(size=n_basis)
    return dten, rule, coeffs


class TestRMatrix:

    def test_output_symmetric_real(self, contraction):
        dten, _, coeffs = contraction
        rm = r_matrix(dten, coeffs, 1.3)
        assert rm.matrix.dtype == np.float64
        assert np.array_equal(rm.matrix, rm.matrix.T)

    def test_hermiticity_defect_is_roundoff(self, contraction):
        dten, _, coeffs = contraction
        rm = r_matrix(dten, coeffs, 1.3)
        assert rm.hermiticity_defect < 1e-10 * np.abs(rm.matrix).max()

    def test_dual_route_against_product_expansion(self, contraction):
        # reroute the contraction through the product-expansion tensor and
        # the weighted polynomial integrals; no array is shared with the
        # node-space route
        dten, rule, coeffs = contraction
        n, ell, n_basis = dten.n, dten.ell, dten.n_basis
        lam = 1.3
        ct = c_tensor_quadrature(n, ell, n_basis, rule)
        q_dim = ct.coeff.shape[1]
        fblock = f_weight_quadrature(n, ell, q_dim, q_dim)
        g = np.zeros((n_basis, q_dim), dtype=complex)
        for i in range(n_basis):
            for k in range(n_basis):
                g[i] += coeffs[k] * ct.lookup(tuple(sorted((k, i))))
        hc = np.zeros((n_basis, q_dim), dtype=complex)
        for j in range(n_basis):
            for k in range(n_basis):
                hc[j] += np.conj(coeffs[k]) * ct.lookup(tuple(sorted((k, j))))
        pref = (2.0 * lam**2 / math.factorial(ell)) ** n
        raw = pref * g @ fblock @ hc.T
        expected = (0.5 * (raw + raw.conj().T)).real
        rm = r_matrix(dten, coeffs, lam)
        scale = np.abs(expected).max()
        assert np.abs(rm.matrix - expected).max() < 1e-8 * scale

    def test_short_coefficients_rejected(self, contraction):
        dten, _, _ = contraction
        with pytest.raises(ValueError):
            r_matrix(dten, np.ones(3), 1.0)


class TestSolveEnergy:
    def test_free_particle_unit_s(self, rule100_l0):
        potential = PowerExponentialPotential(strength=0.0, power=2.0, decay=1.0)
        ham = assemble_linear(potential, n_basis=20, ell=0, lam=1.0, rule=rule100_l0)
        for res in scan((0.5, 1.7, 3.0), ham):
            assert abs(res.s_matrix - 1.0) < 1e-8

    def test_linear_path_status(self, gauss_setup):
        ham, _ = gauss_setup
        res = solve_energy(2.5, ham)
        assert res.status == "converged"
        assert res.iterations == 0
        assert len(res.history) == 1

    def test_scan_fast_path_matches_direct(self, gauss_setup):
        ham, _ = gauss_setup
        energies = (0.9, 2.2, 3.6)
        fast = scan(energies, ham)
        for e, res in zip(energies, fast):
            assert abs(res.s_matrix - solve_energy(e, ham).s_matrix) < 1e-10

    def test_unimodular_along_whole_history(self, gauss_setup):
        ham, dten = gauss_setup
        res = solve_energy(2.50, ham, dten, coupling=0.001)
        assert res.status == "converged"
        for s in res.history:
            assert abs(abs(s) - 1.0) < 1e-8
        assert res.unimodularity_defect < 1e-8

    def test_small_coupling_continuity(self, gauss_setup):
        ham, dten = gauss_setup
        s0 = solve_energy(2.45, ham).s_matrix
        s1 = solve_energy(2.45, ham, dten, coupling=1e-6).s_matrix
        assert abs(s1 - s0) < 1e-4

    def test_eigenvalue_energy_is_nudged(self, gauss_setup):
        # on the localized level the resolvent is singular; the solve must
        # sidestep instead of raising, whatever the iteration then does
        ham, dten = gauss_setup
        trapped = float(ham.eigenvalues[np.argmin(np.abs(ham.eigenvalues - 2.5))])
        res = solve_energy(trapped, ham, dten, coupling=0.001)
        assert res.status in ("converged", "bifurcated")
        assert res.energy == pytest.approx(trapped, rel=1e-5)
        assert res.energy != trapped
        assert abs(abs(res.s_matrix) - 1.0) < 1e-8

    def test_threaded_scan_matches_serial(self, gauss_setup):
        ham, dten = gauss_setup
        energies = (2.40, 2.50, 2.60)
        serial = scan(energies, ham, dten, coupling=0.001)
        threaded = scan(energies, ham, dten, coupling=0.001, threads=2)
        for a, b in zip(serial, threaded):
            assert a.s_matrix == b.s_matrix
            assert a.iterations == b.iterations

    def test_period_two_cycle_detected(self, trapezoid_setup):
        ham, dten = trapezoid_setup
        res = solve_energy(3.0, ham, dten, coupling=0.02, max_iterations=50)
        assert res.status == "bifurcated"
        assert res.period == 2
        assert res.bifurcation is not None
        assert res.bifurcation[0] == pytest.approx(1.730, abs=1e-2)
        assert res.bifurcation[1] == pytest.approx(0.075, abs=1e-2)

    def test_iteration_cap_requires_work(self, gauss_setup):
        ham, dten = gauss_setup
        with pytest.raises(ValueError):
            solve_energy(2.5, ham, dten, coupling=0.001, max_iterations=0)


class TestResonanceEnergy:
    @staticmethod
    def synthetic_results(energies, center, width, background=0.3):
        out = []
        for e in energies:
            delta = background * e + np.arctan2(0.5 * width, center - e)
            s = complex(np.exp(2j * delta))
            out.append(
                ScatteringResult(
                    energy=e, status="converged", iterations=0, s_matrix=s,
                    history=(s,), unimodularity_defect=0.0,
                )
            )
        return out

    def test_recovers_narrow_peak(self):
        energies = np.arange(2.0, 3.0, 0.002)
        results = self.synthetic_results(energies, center=2.5, width=0.01)
        found = resonance_energy(energies, results)
        assert found == pytest.approx(2.5, abs=0.004)

    def test_background_crossing_does_not_win(self):
        # a slow background drags |1 - S| to its ceiling away from the
        # peak; the phase-derivative criterion must stay on the peak
        energies = np.arange(1.0, 4.0, 0.005)
        results = self.synthetic_results(energies, center=3.2, width=0.02, background=0.8)
        s = np.array([r.s_matrix for r in results])
        assert abs(energies[np.argmax(np.abs(1 - s))] - 3.2) > 0.3
        assert resonance_energy(energies, results) == pytest.approx(3.2, abs=0.01)

    def test_validation(self):
        energies = [1.0, 2.0, 3.0]
        results = self.synthetic_results(energies, center=2.0, width=0.1)
        with pytest.raises(ValueError):
            resonance_energy(energies[:2], results)
        with pytest.raises(ValueError):
            resonance_energy(energies[:2], results[:2])
