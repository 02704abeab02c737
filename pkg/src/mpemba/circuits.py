"""Symmetric brickwork circuits, tilted states and closed-system dynamics.

Qubit 0 is the most significant tensor factor. Spin operators are
``s = sigma / 2`` with ``s^z |0> = |0> / 2``. System qubits come first,
environment qubits after them.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse as sp

from . import numkit as nk

STATEVECTOR_CAP = 22
DENSE_SYSTEM_CAP = 4
DENSE_ORACLE_CAP = 12
GATE_RANGE = (-np.pi / 5, np.pi / 5)
PHASE_RANGE = (0.0, 2 * np.pi)

SX, SY, SZ = nk.SX, nk.SY, nk.SZ
S_PLUS = SX + 1j * SY
S_MINUS = SX - 1j * SY
SINGLET = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)


class KrylovBreakdown(RuntimeError):
    """Raised when a Krylov step misses its error target."""


class SelectionError(ValueError):
    """Raised when no environment eigenstate meets the temperature target."""

    def __init__(self, message, nearest):
        super().__init__(message)
        self.nearest = nearest


@dataclass
class GateParams:
    J: float = 0.0
    J_z: float = 0.0
    h: float = 0.0
    h_prime: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        vals = (self.J, self.J_z, self.h, self.h_prime, self.phi)
        if not np.all(np.isfinite(vals)):
            raise ValueError("gate parameters must be finite")


@dataclass
class CircuitSpec:
    """Brickwork circuit settings.

    SU2 circuits sample only ``J = J_z`` from ``j_range``; the field and phase
    ranges are ignored for them.
    """

    n_s: int = 4
    n_e: int = 2
    symmetry: str = "U1"
    j_range: Tuple[float, float] = GATE_RANGE
    jz_range: Tuple[float, float] = GATE_RANGE
    h_range: Tuple[float, float] = PHASE_RANGE
    phi_range: Tuple[float, float] = PHASE_RANGE
    boundary: str = "periodic"
    seed: int = 0
    cap: int = STATEVECTOR_CAP

    def __post_init__(self):
        if self.symmetry not in ("U1", "SU2"):
            raise ValueError(f"unknown symmetry {self.symmetry!r}")
        if self.boundary != "periodic":
            raise ValueError("only periodic boundaries are supported")
        if self.n_s < 1 or self.n_e < 0:
            raise ValueError("need at least one system qubit")
        if self.n_qubits > self.cap:
            raise nk.DimensionError(f"{self.n_qubits} qubits exceed the statevector cap {self.cap}")

    @property
    def n_qubits(self):
        return self.n_s + self.n_e


def _pair(a, b):
    return np.kron(a, b)


def u1_gate(params: GateParams):
    """exp(-i h_xxz) exp(-i h s^z x I) exp(-i h' I x s^z)."""
    hxxz = 0.5 * params.J * (
        np.exp(1j * params.phi) * _pair(S_PLUS, S_MINUS) + np.exp(-1j * params.phi) * _pair(S_MINUS, S_PLUS)
    ) + params.J_z * _pair(SZ, SZ)
    za = np.exp(-1j * params.h * np.array([0.5, 0.5, -0.5, -0.5]))
    zb = np.exp(-1j * params.h_prime * np.array([0.5, -0.5, 0.5, -0.5]))
    return scipy.linalg.expm(-1j * hxxz) * (za * zb)[None, :]


def su2_gate(j):
    return u1_gate(GateParams(J=j, J_z=j))


def sample_gate_params(spec: CircuitSpec, rng):
    if spec.symmetry == "SU2":
        j = rng.uniform(*spec.j_range)
        return GateParams(J=j, J_z=j)
    return GateParams(
        J=rng.uniform(*spec.j_range),
        J_z=rng.uniform(*spec.jz_range),
        h=rng.uniform(*spec.h_range),
        h_prime=rng.uniform(*spec.h_range),
        phi=rng.uniform(*spec.phi_range),
    )


def apply_two_qubit(psi, gate, a, b, n):
    """Apply a 4x4 gate to qubits (a, b) of an n-qubit state (vector or matrix of columns)."""
    psi = np.asarray(psi)
    extra = psi.shape[1:]
    t = psi.reshape((2,) * n + extra)
    t = np.moveaxis(t, (a, b), (0, 1))
    shape = t.shape
    t = (gate @ t.reshape(4, -1)).reshape(shape)
    return np.moveaxis(t, (0, 1), (a, b)).reshape(psi.shape)


@dataclass
class BrickworkCircuit:
    """One Floquet period: the odd-bond layer followed by the even-bond layer.

    Bonds are numbered from 1 with bond n acting on qubits (n, n + 1); bond N
    wraps around to (N, 1). ``gates`` lists ``(a, b, u)`` in application order
    with zero-based qubit indices.
    """

    n_qubits: int
    gates: List[tuple]
    n_system: int = 0

    def apply(self, psi):
        for a, b, u in self.gates:
            psi = apply_two_qubit(psi, u, a, b, self.n_qubits)
        return psi

    def dense(self):
        if self.n_qubits > DENSE_ORACLE_CAP:
            raise nk.DimensionError("dense circuit matrix too large")
        return self.apply(np.eye(2**self.n_qubits, dtype=complex))


def brickwork_bonds(n):
    if n % 2:
        raise ValueError("brickwork needs an even number of qubits")
    odd = [(k, (k + 1) % n) for k in range(0, n, 2)]
    even = [(k, (k + 1) % n) for k in range(1, n, 2)]
    return odd + even


def brickwork_step(spec: CircuitSpec, rng):
    """Sample one Floquet period with fresh gates on every bond."""
    n = spec.n_qubits
    gates = []
    for a, b in brickwork_bonds(n):
        gates.append((a, b, u1_gate(sample_gate_params(spec, rng))))
    return BrickworkCircuit(n, gates, spec.n_s)


def identity_circuit(n, n_system=0):
    return BrickworkCircuit(n, [(a, b, np.eye(4, dtype=complex)) for a, b in brickwork_bonds(n)], n_system)


def product_state(qubits: Sequence[np.ndarray]):
    out = np.ones(1, dtype=complex)
    for q in qubits:
        out = np.kron(out, q)
    return out


def tilted_product_state(theta, n):
    """Tensor product of exp(-i theta s^y)|0> = cos(theta/2)|0> + sin(theta/2)|1>."""
    q = np.array([np.cos(theta / 2), np.sin(theta / 2)], dtype=complex)
    return product_state([q] * n)


def _y_string_rotation(theta, b):
    """exp(-i theta P) with P the b-fold product of s^y, P^2 = 4^-b."""
    p = product_state_operator([SY] * b)
    scale = 2.0**b
    return np.cos(theta / scale) * np.eye(2**b) - 1j * scale * np.sin(theta / scale) * p


def product_state_operator(ops):
    out = np.ones((1, 1), dtype=complex)
    for o in ops:
        out = np.kron(out, o)
    return out


def block_tilted_state(theta, b, n):
    """Blocks of b qubits rotated by exp(-i theta prod_j s^y_j) from |0...0>.

    A ragged final block with fewer than b qubits is left in |0>, so the state
    only carries charge differences that are multiples of b.
    """
    if b < 1:
        raise ValueError("block size must be positive")
    parts = []
    full, rest = divmod(n, b)
    zero = np.zeros(2**b, dtype=complex)
    zero[0] = 1
    for _ in range(full):
        parts.append(_y_string_rotation(theta, b) @ zero)
    if rest:
        tail = np.zeros(2**rest, dtype=complex)
        tail[0] = 1
        parts.append(tail)
    return product_state(parts)


def singlet_product(n):
    if n % 2:
        raise ValueError("singlet product needs an even number of qubits")
    return product_state([SINGLET] * (n // 2)) if n else np.ones(1, dtype=complex)


def su2_tilted_state(theta, n):
    """cos(theta/2) |singlet>^(n/2) + sin(theta/2) |0...0>."""
    if n % 2:
        raise ValueError("SU2 tilted state needs an even number of qubits")
    zero = np.zeros(2**n, dtype=complex)
    zero[0] = 1
    return np.cos(theta / 2) * singlet_product(n) + np.sin(theta / 2) * zero


def zero_state(n):
    out = np.zeros(2**n, dtype=complex)
    out[0] = 1
    return out


def channel_from_circuit(circuit: BrickworkCircuit, n_s, env_state=None):
    """Superoperator of rho -> Tr_e[U (rho x env) U^dag].

    ``env_state`` defaults to the maximally mixed environment.
    """
    n_e = circuit.n_qubits - n_s
    if n_s > DENSE_SYSTEM_CAP:
        raise nk.DimensionError(f"dense channel limited to {DENSE_SYSTEM_CAP} system qubits")
    ds, de = 2**n_s, 2**n_e
    env = np.eye(de) / de if env_state is None else np.asarray(env_state)
    w, v = np.linalg.eigh(nk.hermitian_part(env))
    u = circuit.dense().reshape(ds, de, ds, de)
    out = np.zeros((ds * ds, ds * ds), dtype=complex)
    for p, vec in zip(w, v.T):
        if p < 1e-15:
            continue
        # Kraus operators K_{e'} = sqrt(p) <e'| U |vec>
        kraus = np.einsum("aebf,f->eab", u, vec) * np.sqrt(p)
        for k in kraus:
            out += nk.vectorize_superop(k, k)
    return out


def markov_channel(spec: CircuitSpec, rng):
    """Channel of one period with the environment reset to its invariant mixed state."""
    if spec.n_s > DENSE_SYSTEM_CAP:
        raise nk.DimensionError(f"dense channel limited to {DENSE_SYSTEM_CAP} system qubits")
    return channel_from_circuit(brickwork_step(spec, rng), spec.n_s)


def reduced_state(psi, n_s, n):
    m = np.asarray(psi).reshape(2**n_s, 2 ** (n - n_s))
    return m @ m.conj().T


def nonmarkov_evolve(circuit: BrickworkCircuit, system_state, env_state, steps, n_s=None):
    """Repeat one Floquet period on the joint state and trace out the environment.

    ``system_state`` may be a state vector or a density matrix; a density
    matrix is split into its eigen-ensemble and each branch is evolved
    separately. Returns the reduced states for steps 0..steps.
    """
    n = circuit.n_qubits
    n_s = circuit.n_system if n_s is None else n_s
    env_state = np.asarray(env_state, dtype=complex)
    if abs(np.linalg.norm(env_state) - 1) > 1e-10:
        raise ValueError("environment state must be normalized")
    sys = np.asarray(system_state, dtype=complex)
    if sys.ndim == 1:
        branches = [(1.0, sys)]
    else:
        w, v = np.linalg.eigh(nk.hermitian_part(sys))
        branches = [(p, v[:, k]) for k, p in enumerate(w) if p > 1e-14]
    ds = 2**n_s
    out = [np.zeros((ds, ds), dtype=complex) for _ in range(steps + 1)]
    for p, phi in branches:
        psi = np.kron(phi / np.linalg.norm(phi), env_state)
        for t in range(steps + 1):
            if t:
                psi = circuit.apply(psi)
            out[t] += p * reduced_state(psi, n_s, n)
    return [nk.hermitian_part(r) for r in out]


@dataclass
class ETHParams:
    n_env: int = 11
    J: float = 1.0
    h_z: float = 0.3
    h_x: float = 1.1
    h_1: float = 0.25
    h_N: float = -0.25
    kappa: float = 0.15
    h_0: float = 1.525

    @classmethod
    def from_tuple(cls, values, n_env=11):
        """Build from (J, h_z, h_x, h_1, h_N, kappa, h_0)."""
        return cls(n_env, *values)


def _site(op, k, n):
    left = sp.identity(2**k, format="csr")
    right = sp.identity(2 ** (n - k - 1), format="csr")
    return sp.kron(sp.kron(left, sp.csr_matrix(op)), right, format="csr")


def environment_hamiltonian(p: ETHParams, offset=0, n_total=None):
    """Tilted-field chain on qubits offset..offset + n_env - 1."""
    n = p.n_env + offset if n_total is None else n_total
    z = [_site(SZ, offset + k, n) for k in range(p.n_env)]
    x = [_site(SX, offset + k, n) for k in range(p.n_env)]
    h = sp.csr_matrix((2**n, 2**n), dtype=complex)
    for k in range(p.n_env - 1):
        h = h + p.J * z[k] @ z[k + 1]
    h = h + p.h_1 * z[0] + p.h_N * z[-1]
    for k in range(p.n_env):
        h = h + p.h_z * z[k] + p.h_x * x[k]
    return h.real.tocsr() if np.abs(h.imag).max() == 0 else h


def eth_model(p: ETHParams):
    """h_0 s^z_0 + kappa s^x_0 s^x_1 + H_e on 1 + n_env qubits (sparse)."""
    n = p.n_env + 1
    if n > STATEVECTOR_CAP:
        raise nk.DimensionError("ETH model exceeds the statevector cap")
    h = environment_hamiltonian(p, offset=1, n_total=n)
    h = h + p.h_0 * _site(SZ, 0, n).real + p.kappa * (_site(SX, 0, n) @ _site(SX, 1, n)).real
    return h.tocsr()


def lanczos_expm(h, psi, dt, m_max=60, tol=1e-9):
    """exp(-i h dt) psi in a Krylov space grown until the error estimate meets tol."""
    norm = np.linalg.norm(psi)
    v = [psi / norm]
    alpha, beta = [], []
    for j in range(m_max):
        w = h @ v[j]
        alpha.append(np.vdot(v[j], w).real)
        w = w - alpha[j] * v[j] - (beta[j - 1] * v[j - 1] if j else 0)
        for q in v:
            w = w - np.vdot(q, w) * q
        b = np.linalg.norm(w)
        t = np.diag(alpha) + np.diag(beta, 1) + np.diag(beta, -1)
        y = scipy.linalg.expm(-1j * dt * t)[:, 0]
        err = b * abs(y[-1])
        if b < 1e-14 or err < tol:
            return norm * (np.array(v).T @ y), j + 1
        beta.append(b)
        v.append(w / b)
    raise KrylovBreakdown(f"Krylov error {err:.2e} above {tol:.0e} after {m_max} vectors")


def krylov_propagate(h, psi, dt, tol=1e-9, m_max=60, max_halvings=30):
    """Propagate over dt, halving the substep whenever the Krylov step fails."""
    done = 0.0
    step = dt
    halvings = 0
    while done < dt - 1e-15:
        step = min(step, dt - done)
        try:
            psi, _ = lanczos_expm(h, psi, step, m_max, tol)
        except KrylovBreakdown:
            halvings += 1
            if halvings > max_halvings:
                raise
            step /= 2
            continue
        done += step
    return psi


def eth_evolve(h, psi0, times, tol=1e-9, m_max=60, n_keep=1):
    """Reduced states of the first ``n_keep`` qubits along ``times`` (ascending, >= 0)."""
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or times[0] < 0:
        raise ValueError("times must be ascending and nonnegative")
    n = int(round(np.log2(h.shape[0])))
    psi = np.asarray(psi0, dtype=complex)
    out = []
    t_prev = 0.0
    for t in times:
        if t > t_prev:
            psi = krylov_propagate(h, psi, t - t_prev, tol, m_max)
            t_prev = t
        out.append(nk.hermitian_part(reduced_state(psi, n_keep, n)))
    return out, psi


def canonical_energy(energies, beta):
    x = -beta * energies
    w = np.exp(x - x.max())
    return float(np.sum(w * energies) / w.sum())


def canonical_beta(energies, e, bracket=(-50.0, 50.0)):
    """Invert E(beta) = Tr[H e^{-beta H}] / Z for beta."""
    energies = np.asarray(energies, dtype=float)
    f = lambda b: canonical_energy(energies, b) - e
    lo, hi = bracket
    if f(lo) * f(hi) > 0:
        raise ValueError("energy outside the canonical range")
    return float(scipy.optimize.brentq(f, lo, hi, xtol=1e-13))


@dataclass
class Selection:
    state: np.ndarray
    index: int
    env_energy: float
    total_energy: float
    beta: float


def env_eigenstate_select(h_e, beta_target, total_energy_of, total_spectrum, tol=0.05):
    """Environment eigenstate whose joint energy best matches ``beta_target``.

    Parameters
    ----------
    h_e : (d, d) array
        Environment Hamiltonian.
    beta_target : float
        Target inverse temperature.
    total_energy_of : callable
        Maps an environment eigenvector to the joint energy <psi|H|psi>.
    total_spectrum : array
        Eigenvalues of the joint Hamiltonian used for the canonical inversion.
    tol : float
        Allowed deviation of the inverse temperature.
    """
    dense = h_e.toarray() if sp.issparse(h_e) else np.asarray(h_e)
    w, v = np.linalg.eigh(dense)
    target = canonical_energy(np.asarray(total_spectrum), beta_target)
    energies = np.array([total_energy_of(v[:, k]) for k in range(len(w))])
    k = int(np.argmin(np.abs(energies - target)))
    try:
        beta = canonical_beta(total_spectrum, energies[k])
    except ValueError:
        # outside the finite-temperature range: nearest spectral edge
        beta = np.inf if energies[k] < np.mean(total_spectrum) else -np.inf
    sel = Selection(v[:, k], k, float(w[k]), float(energies[k]), beta)
    if abs(beta - beta_target) > tol:
        raise SelectionError(f"nearest eigenstate has beta={beta:.4f}, target {beta_target:.4f}", sel)
    return sel


def eth_initial_state(p: ETHParams, system_qubit, beta_target, h_e=None, total_spectrum=None, tol=0.05):
    """|phi>_s x |E>_e with the environment eigenstate matched to ``beta_target``."""
    h = eth_model(p)
    if h_e is None:
        h_e = environment_hamiltonian(p)
    if total_spectrum is None:
        total_spectrum = np.linalg.eigvalsh(h.toarray())
    phi = np.asarray(system_qubit, dtype=complex)
    phi = phi / np.linalg.norm(phi)
    es = (phi.conj() @ (p.h_0 * SZ) @ phi).real
    sx0 = (phi.conj() @ SX @ phi).real
    sx1 = _site(SX, 0, p.n_env)

    def total_energy_of(env):
        return es + (env.conj() @ (h_e @ env)).real + p.kappa * sx0 * (env.conj() @ (sx1 @ env)).real

    sel = env_eigenstate_select(h_e, beta_target, total_energy_of, total_spectrum, tol)
    return np.kron(phi, sel.state), sel
