import numpy as np
import pytest
import scipy.linalg
import scipy.sparse.linalg

from mpemba import circuits as cc
from mpemba import numkit as nk
from mpemba import symmetry as sym
from mpemba.monotones import von_neumann_entropy


def two_qubit_total(op):
    return np.kron(op, np.eye(2)) + np.kron(np.eye(2), op)


def dense_brickwork(circuit):
    """Dense 2^N product of embedded gates, independent of the tensor applier."""
    n = circuit.n_qubits
    u = np.eye(2**n, dtype=complex)
    for a, b, g in circuit.gates:
        # embed via permutation of basis indices
        full = np.zeros((2**n, 2**n), dtype=complex)
        for col in range(2**n):
            bits = [(col >> (n - 1 - k)) & 1 for k in range(n)]
            sub = 2 * bits[a] + bits[b]
            for out_sub in range(4):
                nb = list(bits)
                nb[a], nb[b] = out_sub >> 1, out_sub & 1
                row = sum(bit << (n - 1 - k) for k, bit in enumerate(nb))
                full[row, col] += g[out_sub, sub]
        u = full @ u
    return u


def test_gate_examples():
    assert np.abs(cc.u1_gate(cc.GateParams()) - np.eye(4)).max() < 1e-15
    g = cc.u1_gate(cc.GateParams(h=np.pi))
    expected = np.diag(np.exp([-1j * np.pi / 2] * 2 + [1j * np.pi / 2] * 2))
    assert np.abs(g - expected).max() < 1e-12
    assert np.abs(cc.su2_gate(0.0) - np.eye(4)).max() < 1e-15
    with pytest.raises(ValueError):
        cc.GateParams(J=np.nan)


def test_u1_gate_commutes_with_charge():
    rng = np.random.default_rng(0)
    spec = cc.CircuitSpec()
    sz = two_qubit_total(nk.SZ)
    for _ in range(100):
        g = cc.u1_gate(cc.sample_gate_params(spec, rng))
        assert np.abs(g.conj().T @ g - np.eye(4)).max() < 1e-12
        assert np.linalg.norm(g @ sz - sz @ g, 2) < 1e-12


def test_xxz_closed_form():
    # phi = 0, h = h' = 0: exp(-i (J (sx sx + sy sy) + Jz sz sz))
    j, jz = 0.37, -0.21
    h = j * (np.kron(nk.SX, nk.SX) + np.kron(nk.SY, nk.SY)) + jz * np.kron(nk.SZ, nk.SZ)
    assert np.abs(cc.u1_gate(cc.GateParams(J=j, J_z=jz)) - scipy.linalg.expm(-1j * h)).max() < 1e-12


def test_su2_gate_symmetry():
    rng = np.random.default_rng(1)
    for j in rng.uniform(-np.pi / 5, np.pi / 5, size=20):
        g = cc.su2_gate(j)
        for s in (nk.SX, nk.SY, nk.SZ):
            tot = two_qubit_total(s)
            assert np.abs(g @ tot - tot @ g).max() < 1e-12
        out = g @ cc.SINGLET
        assert abs(abs(np.vdot(cc.SINGLET, out)) - 1) < 1e-12


def test_su2_sampling_forces_isotropy():
    rng = np.random.default_rng(2)
    spec = cc.CircuitSpec(symmetry="SU2")
    for _ in range(10):
        p = cc.sample_gate_params(spec, rng)
        assert p.J == p.J_z and p.h == p.h_prime == p.phi == 0
        assert -np.pi / 5 <= p.J <= np.pi / 5


def test_spec_validation():
    with pytest.raises(ValueError):
        cc.CircuitSpec(symmetry="Z2")
    with pytest.raises(nk.DimensionError):
        cc.CircuitSpec(n_s=12, n_e=12)
    with pytest.raises(ValueError):
        cc.brickwork_step(cc.CircuitSpec(n_s=3, n_e=0), np.random.default_rng(0))


def test_brickwork_bonds_periodic():
    assert cc.brickwork_bonds(6) == [(0, 1), (2, 3), (4, 5), (1, 2), (3, 4), (5, 0)]


@pytest.mark.parametrize("symmetry", ["U1", "SU2"])
def test_brickwork_dense_oracle(symmetry):
    rng = np.random.default_rng(3)
    circ = cc.brickwork_step(cc.CircuitSpec(n_s=4, n_e=2, symmetry=symmetry), rng)
    u = dense_brickwork(circ)
    assert np.abs(circ.dense() - u).max() < 1e-10
    psi = nk.random_unitary(64, rng)[:, 0]
    out = circ.apply(psi)
    assert abs(np.linalg.norm(out) - 1) < 1e-10
    assert np.abs(out - u @ psi).max() < 1e-10
    s = nk.collective_spin(6)
    for k, op in enumerate(s):
        if symmetry == "U1" and k < 2:
            continue
        assert np.abs(u @ op - op @ u).max() < 1e-10


def test_identity_circuit():
    circ = cc.identity_circuit(6, 4)
    assert np.abs(circ.dense() - np.eye(64)).max() < 1e-15
    ch = cc.channel_from_circuit(circ, 4)
    assert np.abs(ch - np.eye(256)).max() < 1e-12


def test_magnetization_conserved():
    rng = np.random.default_rng(4)
    circ = cc.brickwork_step(cc.CircuitSpec(n_s=4, n_e=4), rng)
    psi = cc.tilted_product_state(0.9, 8)
    sz = np.diag(nk.collective_spin(8)[2]).real
    m0 = np.sum(sz * np.abs(psi) ** 2)
    for _ in range(50):
        psi = circ.apply(psi)
    assert abs(np.sum(sz * np.abs(psi) ** 2) - m0) < 1e-9


def test_tilted_states():
    assert np.abs(cc.tilted_product_state(0.0, 3) - cc.zero_state(3)).max() < 1e-15
    assert np.abs(cc.tilted_product_state(np.pi / 2, 1) - np.array([1, 1]) / np.sqrt(2)).max() < 1e-15
    q = scipy.linalg.expm(-1j * 0.7 * nk.SY) @ np.array([1, 0])
    assert np.abs(cc.tilted_product_state(0.7, 2) - np.kron(q, q)).max() < 1e-14
    assert np.abs(cc.block_tilted_state(0.7, 1, 3) - cc.tilted_product_state(0.7, 3)).max() < 1e-14


@pytest.mark.parametrize("b,n", [(1, 4), (2, 4), (3, 4), (4, 4), (3, 6)])
def test_block_tilted_mode_support(b, n):
    psi = cc.block_tilted_state(np.pi / 3 * 2**b, b, n)
    assert abs(np.linalg.norm(psi) - 1) < 1e-12
    action = sym.U1Action(nk.collective_spin(n)[2])
    norms = action.modes(nk.pure_state(psi)).trace_norms()
    for mu, v in norms.items():
        if mu % b:
            assert v < 1e-10
        elif abs(mu) <= b * (n // b):
            assert v > 1e-6


def test_block_tilted_closed_form():
    theta = 1.3
    b = 2
    p = np.kron(nk.SY, nk.SY)
    block = scipy.linalg.expm(-1j * theta * p) @ np.array([1, 0, 0, 0])
    assert np.abs(cc.block_tilted_state(theta, b, 4) - np.kron(block, block)).max() < 1e-14


def test_su2_tilted_state():
    s = nk.collective_spin(4)
    action = sym.SU2Action(*s)
    psi0 = cc.su2_tilted_state(0.0, 4)
    assert sym.relative_entropy_asymmetry(nk.pure_state(psi0), action) < 1e-10
    assert np.abs(cc.su2_tilted_state(np.pi, 4) - cc.zero_state(4)).max() < 1e-15
    for th in np.random.default_rng(5).uniform(0, 2 * np.pi, 10):
        assert abs(np.linalg.norm(cc.su2_tilted_state(th, 4)) - 1) < 1e-12
    with pytest.raises(ValueError):
        cc.su2_tilted_state(0.3, 3)


def test_markov_channel():
    rng = np.random.default_rng(6)
    spec = cc.CircuitSpec(n_s=3, n_e=1)
    ch = cc.markov_channel(spec, rng)
    assert np.abs(nk.vec(np.eye(8)).conj() @ ch - nk.vec(np.eye(8)).conj()).max() < 1e-12
    w = np.linalg.eigvals(ch)
    assert abs(np.abs(w).max() - 1) < 1e-10 and np.min(np.abs(w - 1)) < 1e-10
    assert sym.covariance_check(ch, sym.U1Action(nk.collective_spin(3)[2])) < 1e-9
    # oracle: apply to a density matrix directly
    circ = cc.brickwork_step(spec, np.random.default_rng(7))
    ch = cc.channel_from_circuit(circ, 3)
    u = circ.dense()
    rho = nk.random_density_matrix(8, rng)
    direct = nk.partial_trace(u @ np.kron(rho, np.eye(2) / 2) @ u.conj().T, [8, 2], [0])
    assert np.abs(nk.apply_superop(ch, rho) - direct).max() < 1e-12
    with pytest.raises(nk.DimensionError):
        cc.markov_channel(cc.CircuitSpec(n_s=5, n_e=1), rng)


def test_su2_markov_channel_covariant():
    rng = np.random.default_rng(8)
    ch = cc.markov_channel(cc.CircuitSpec(n_s=2, n_e=2, symmetry="SU2"), rng)
    assert sym.covariance_check(ch, sym.SU2Action(*nk.collective_spin(2))) < 1e-9


def test_nonmarkov_evolve():
    rng = np.random.default_rng(9)
    spec = cc.CircuitSpec(n_s=2, n_e=4)
    circ = cc.brickwork_step(spec, rng)
    action = sym.U1Action(nk.collective_spin(2)[2])
    env = cc.zero_state(4)
    rhos = cc.nonmarkov_evolve(circ, cc.tilted_product_state(0.0, 2), env, 10)
    assert all(sym.relative_entropy_asymmetry(r, action) < 1e-12 for r in rhos)
    psi = cc.tilted_product_state(0.8, 2)
    rhos = cc.nonmarkov_evolve(circ, psi, env, 10)
    u = circ.dense()
    joint = np.kron(psi, env)
    for t in range(11):
        assert np.abs(rhos[t] - cc.reduced_state(joint, 2, 6)).max() < 1e-10
        assert abs(np.trace(rhos[t]) - 1) < 1e-10
        joint = u @ joint
    m = [sym.relative_entropy_asymmetry(r, action) for r in rhos]
    assert max(m) <= m[0] + 1e-10
    # mixed input equals the ensemble of its eigenbranches
    mixed = 0.3 * nk.pure_state(psi) + 0.7 * nk.pure_state(cc.tilted_product_state(2.0, 2))
    out = cc.nonmarkov_evolve(circ, mixed, env, 3)
    ref = 0.3 * np.array(rhos[:4]) + 0.7 * np.array(cc.nonmarkov_evolve(circ, cc.tilted_product_state(2.0, 2), env, 3))
    assert np.abs(np.array(out) - ref).max() < 1e-10


def test_per_step_channel_covariant():
    """Reduced dynamics with a symmetric environment state is covariant."""
    rng = np.random.default_rng(10)
    circ = cc.brickwork_step(cc.CircuitSpec(n_s=2, n_e=2), rng)
    env = nk.pure_state(cc.zero_state(2))
    ch = cc.channel_from_circuit(circ, 2, env)
    assert sym.covariance_check(ch, sym.U1Action(nk.collective_spin(2)[2])) < 1e-9
    circ = cc.brickwork_step(cc.CircuitSpec(n_s=2, n_e=2, symmetry="SU2"), rng)
    ch = cc.channel_from_circuit(circ, 2, nk.pure_state(cc.SINGLET))
    assert sym.covariance_check(ch, sym.SU2Action(*nk.collective_spin(2))) < 1e-9


def test_eth_model():
    p = cc.ETHParams.from_tuple((1, 0.3, 1.1, 0.25, -0.25, 0.15, 1.525), n_env=5)
    h = cc.eth_model(p).toarray()
    assert h.shape == (64, 64)
    assert np.abs(h - h.conj().T).max() < 1e-12
    p0 = cc.ETHParams(n_env=5, kappa=0.0)
    h0 = cc.eth_model(p0).toarray()
    he = cc.environment_hamiltonian(p0).toarray()
    assert np.abs(h0 - (np.kron(p0.h_0 * nk.SZ, np.eye(32)) + np.kron(np.eye(2), he))).max() < 1e-12
    # explicit chain for the environment
    ops = lambda o, k: nk.site_operator(o, k, 5)
    ref = sum(p0.J * ops(nk.SZ, k) @ ops(nk.SZ, k + 1) for k in range(4))
    ref = ref + p0.h_1 * ops(nk.SZ, 0) + p0.h_N * ops(nk.SZ, 4)
    ref = ref + sum(p0.h_z * ops(nk.SZ, k) + p0.h_x * ops(nk.SX, k) for k in range(5))
    assert np.abs(he - ref).max() < 1e-12


def test_lanczos_matches_expm():
    p = cc.ETHParams(n_env=7)
    h = cc.eth_model(p)
    rng = np.random.default_rng(11)
    psi = rng.normal(size=256) + 1j * rng.normal(size=256)
    psi /= np.linalg.norm(psi)
    exact = scipy.sparse.linalg.expm_multiply(-1j * 3.0 * h, psi)
    out = cc.krylov_propagate(h, psi, 3.0)
    assert np.abs(out - exact).max() < 1e-8
    # a small Krylov space forces substep halving
    out = cc.krylov_propagate(h, psi, 3.0, m_max=8)
    assert np.abs(out - exact).max() < 1e-7
    with pytest.raises(cc.KrylovBreakdown):
        cc.lanczos_expm(h, psi, 50.0, m_max=4)


def test_eth_evolve_conserves_energy():
    p = cc.ETHParams(n_env=7)
    h = cc.eth_model(p)
    psi0 = np.kron(np.array([1, 1]) / np.sqrt(2), cc.zero_state(7))
    times = np.linspace(0, 20, 11)
    rhos, psi = cc.eth_evolve(h, psi0, times)
    e0 = np.vdot(psi0, h @ psi0).real
    assert abs(np.vdot(psi, h @ psi).real - e0) < 1e-8
    for r in rhos:
        assert abs(np.trace(r) - 1) < 1e-10 and np.linalg.eigvalsh(r).min() > -1e-10
    assert von_neumann_entropy(rhos[0]) < 1e-10


def test_canonical_beta_inversion():
    rng = np.random.default_rng(12)
    e = np.sort(rng.normal(size=50))
    for beta in (-0.7, 0.0, 0.4):
        assert abs(cc.canonical_beta(e, cc.canonical_energy(e, beta)) - beta) < 1e-9
    energies = np.linspace(e.min() + 0.3, e.max() - 0.3, 9)
    betas = [cc.canonical_beta(e, x) for x in energies]
    assert np.all(np.diff(betas) < 0)


def test_env_eigenstate_select():
    p = cc.ETHParams(n_env=7)
    he = cc.environment_hamiltonian(p).toarray()
    w, v = np.linalg.eigh(he)
    spectrum = w
    k = len(w) // 2
    beta = cc.canonical_beta(spectrum, w[k])
    sel = cc.env_eigenstate_select(he, beta, lambda x: np.vdot(x, he @ x).real, spectrum)
    assert sel.index == k
    with pytest.raises(cc.SelectionError) as err:
        cc.env_eigenstate_select(he, 40.0, lambda x: np.vdot(x, he @ x).real, spectrum, tol=1e-3)
    assert err.value.nearest.index == 0


def test_eth_initial_state_energy_report():
    p = cc.ETHParams(n_env=7)
    h = cc.eth_model(p)
    spectrum = np.linalg.eigvalsh(h.toarray())
    for q in (np.array([1, 1]) / np.sqrt(2), np.array([1, 0])):
        psi, sel = cc.eth_initial_state(p, q, -0.46, total_spectrum=spectrum, tol=0.2)
        assert abs(np.vdot(psi, h @ psi).real - sel.total_energy) < 1e-6
        assert abs(cc.canonical_beta(spectrum, sel.total_energy) - sel.beta) < 1e-9
