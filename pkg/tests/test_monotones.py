import warnings

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from mpemba import lindblad as lb
from mpemba import monotones as mo
from mpemba import numkit as nk
from mpemba import symmetry as sym


def logm_qre(rho, sigma):
    return np.trace(rho @ (scipy.linalg.logm(rho) - scipy.linalg.logm(sigma))).real


def fractional_power(a, x):
    return scipy.linalg.fractional_matrix_power(a, x)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_relative_entropy_matches_logm(seed):
    rng = np.random.default_rng(seed)
    rho = nk.random_density_matrix(4, rng)
    sigma = nk.random_density_matrix(4, rng)
    assert abs(mo.quantum_relative_entropy(rho, sigma) - logm_qre(rho, sigma)) < 1e-9
    assert mo.quantum_relative_entropy(rho, sigma) >= 0
    assert mo.quantum_relative_entropy(rho, rho) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([a for a in mo.ALPHA_GRID if a != 1.0]))
def test_petz_renyi_matches_matrix_powers(seed, alpha):
    rng = np.random.default_rng(seed)
    rho = nk.random_density_matrix(3, rng)
    sigma = nk.random_density_matrix(3, rng)
    tr = np.trace(fractional_power(rho, alpha) @ fractional_power(sigma, 1 - alpha)).real
    assert abs(mo.petz_renyi(rho, sigma, alpha) - np.log(tr) / (alpha - 1)) < 1e-8


def test_renyi_alpha_limits_and_order():
    rng = np.random.default_rng(0)
    rho = nk.random_density_matrix(3, rng)
    sigma = nk.random_density_matrix(3, rng)
    s1 = mo.quantum_relative_entropy(rho, sigma)
    assert abs(mo.petz_renyi(rho, sigma, 1 + 1e-6) - s1) < 1e-5
    assert abs(mo.petz_renyi(rho, sigma, 1 - 1e-6) - s1) < 1e-5
    vals = [mo.divergence(rho, sigma, a) for a in mo.ALPHA_GRID]
    assert np.all(np.diff(vals) >= -1e-12)
    with pytest.raises(ValueError):
        mo.petz_renyi(rho, sigma, 1.0)
    with pytest.raises(ValueError):
        mo.petz_renyi(rho, sigma, 2.5)


def test_support_violation():
    pure = nk.pure_state(np.array([1.0, 0.0]))
    other = nk.pure_state(np.array([0.0, 1.0]))
    assert mo.quantum_relative_entropy(np.eye(2) / 2, pure) == float("inf")
    assert mo.petz_renyi(np.eye(2) / 2, pure, 2.0) == float("inf")
    assert mo.petz_renyi(pure, other, 0.5) == float("inf")
    assert abs(mo.quantum_relative_entropy(pure, np.eye(2) / 2) - np.log(2)) < 1e-12


def test_entropy_examples():
    assert mo.von_neumann_entropy(np.eye(4) / 4) == pytest.approx(np.log(4), abs=1e-12)
    assert mo.von_neumann_entropy(nk.pure_state(np.array([1, 1j]) / np.sqrt(2))) < 1e-12


def test_gibbs_and_free_energy():
    h = np.diag([0.0, 1.0, 3.0])
    beta = 0.7
    pi = mo.gibbs_state(h, beta)
    z = np.exp(-beta * np.diag(h)).sum()
    assert abs(mo.free_energy(pi, h, beta) + np.log(z) / beta) < 1e-12
    rng = np.random.default_rng(1)
    rho = nk.random_density_matrix(3, rng)
    # Delta F = S(rho || pi) / beta
    assert abs(mo.free_energy_excess(rho, h, beta) - mo.athermality(rho, h, beta) / beta) < 1e-12
    with pytest.raises(ValueError):
        mo.free_energy(rho, h, 0.0)
    assert abs(mo.gibbs_state(h, 0.0) - np.eye(3) / 3).max() < 1e-15
    # large beta does not overflow
    assert abs(mo.gibbs_state(h, 1e4)[0, 0] - 1) < 1e-12


def test_entropy_splitting_sums():
    rng = np.random.default_rng(2)
    n = 3
    action = sym.U1Action(nk.collective_spin(n)[2])
    pi = mo.gibbs_state(nk.collective_spin(n)[2], 0.4)
    for _ in range(5):
        rho = nk.random_density_matrix(8, rng)
        asym, symm = mo.entropy_splitting(rho, pi, action)
        assert abs(asym + symm - mo.quantum_relative_entropy(rho, pi)) < 1e-10
    with pytest.raises(mo.PreconditionError):
        mo.entropy_splitting(rho, nk.random_density_matrix(8, rng), action)


def qfi_bruteforce(rho_of_t, t, eps=1e-5):
    """SLD QFI as 2 * (1 - fidelity) / dt^2 curvature via the Bures metric."""
    a = scipy.linalg.sqrtm(rho_of_t(t))
    b = rho_of_t(t + eps)
    fid = np.trace(scipy.linalg.sqrtm(a @ b @ a)).real
    return 8 * (1 - fid) / eps**2


def test_qfi_sld_matches_bures_metric():
    spec = lb.model_spectrum(lb.qubit_davies(2.0, 0.5))
    rho0 = nk.pure_state(np.array([np.cos(0.4), np.sin(0.4)]))
    t = 0.7
    rho_t = lb.evolve_density(spec, rho0, t)
    val = mo.qfi(rho_t, lb.time_derivative(spec, rho_t), "SLD")
    assert abs(val / qfi_bruteforce(lambda s: lb.evolve_density(spec, rho0, s), t) - 1) < 1e-3


def test_qfi_commuting_case_is_classical_fisher():
    p = np.array([0.2, 0.3, 0.5])
    dp = np.array([0.1, -0.3, 0.2])
    fisher = np.sum(dp**2 / p)
    for f in mo.QFI_FUNCTIONS:
        assert abs(mo.qfi(np.diag(p), np.diag(dp), f) - fisher) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_qfi_ordering(seed):
    rng = np.random.default_rng(seed)
    rho = nk.random_density_matrix(3, rng)
    x = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    drho = x + x.conj().T
    drho -= np.trace(drho) * np.eye(3) / 3
    sld, wy, hm = (mo.qfi(rho, drho, f) for f in ("SLD", "WY", "HM"))
    assert sld <= wy * (1 + 1e-10) and wy <= hm * (1 + 1e-10)


def test_qfi_floor_warns():
    rho = np.diag([1.0, 0.0])
    drho = np.array([[0, 1], [1, 0]]) * 0.1
    with pytest.warns(mo.ApproximationWarning):
        val = mo.qfi(rho, drho)
    assert np.isfinite(val)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        mo.qfi(np.diag([0.6, 0.4]), drho)


def test_trajectory_validation():
    with pytest.raises(ValueError):
        mo.MonotoneTrajectory([0, 0], [1, 2])
    with pytest.raises(ValueError):
        mo.MonotoneTrajectory([0, 1], [1, np.inf])
    tr = mo.MonotoneTrajectory([0, 1, 2], [3, 2, 2.5])
    assert tr.max_increase() == 0.5


def test_crossing_times():
    t = np.linspace(0, 2, 21)
    a = mo.MonotoneTrajectory(t, np.exp(-t), "a")
    b = mo.MonotoneTrajectory(t, 0.5 * np.exp(-0.2 * t) + 0 * t, "b")
    rep = mo.crossing_times(a, b)
    exact = np.log(2) / 0.8
    assert len(rep.crossing_times) == 1
    assert abs(rep.crossing_times[0] - exact) < rep.uncertainty
    assert rep.to_dict()["pair"] == ["a", "b"]
    # touching without a sign change is not a crossing
    c = mo.MonotoneTrajectory(t, (t - 1) ** 2, "c")
    zero = mo.MonotoneTrajectory(t, 0 * t, "z")
    assert mo.crossing_times(c, zero).crossing_times == []
    with pytest.raises(ValueError):
        mo.crossing_times(a, mo.MonotoneTrajectory(t + 1, t))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 1.95))
def test_crossing_of_lines(x0):
    t = np.linspace(0, 2, 11)
    rep = mo.crossing_times(mo.MonotoneTrajectory(t, t - x0), mo.MonotoneTrajectory(t, 0 * t))
    assert len(rep.crossing_times) <= 1
    if rep.crossing_times:
        assert abs(rep.crossing_times[0] - x0) < 1e-9


def test_data_processing_under_davies():
    spec = lb.model_spectrum(lb.davies_generator(lb.tfim_hamiltonian(3), 0.3))
    rng = np.random.default_rng(3)
    rho0 = nk.random_density_matrix(8, rng)
    t = np.linspace(0, 10, 60)
    states = lb.evolve_density_grid(spec, rho0, t)
    for alpha in mo.ALPHA_GRID:
        tr = mo.trajectory(t, states, lambda r: mo.divergence(r, spec.steady_state, alpha), monotone=f"D{alpha}")
        assert tr.max_increase() < 1e-9
