"""Group actions on operators: twirls, modes of asymmetry and covariance.

Mode labels follow one convention for every abelian action. For the block
``Pi_a X Pi_b`` between generator eigenspaces with charges ``q_a`` and ``q_b``
the label is ``mu = q_a - q_b``, so that ``U_g X^(mu) U_g^dag = chi X^(mu)``
with ``chi = exp(i s mu)`` for ``U_g = exp(i s Q)`` (U1), ``exp(i t mu)`` for
``U_t = exp(i t H)`` (time translation) and ``exp(2 pi i k mu / N)`` for
``U^k`` (Z_N).
"""

import warnings
from dataclasses import dataclass, field
from typing import Dict

import numpy as np
import scipy.linalg
from scipy.stats import qmc

from . import numkit as nk
from .monotones import quantum_relative_entropy, von_neumann_entropy

CLUSTER_TOL = 1e-9


class CovarianceError(ValueError):
    """Raised when a channel is not covariant under the requested action."""

    def __init__(self, residual, tol):
        super().__init__(f"covariance residual {residual:.3e} exceeds {tol:.0e}")
        self.residual = residual


class NumericalError(ArithmeticError):
    pass


@dataclass
class ModeDecomposition:
    components: Dict[object, np.ndarray]

    @property
    def labels(self):
        return list(self.components)

    def __getitem__(self, label):
        return self.components[label]

    def total(self):
        return sum(self.components.values())

    def trace_norms(self):
        return {mu: nk.trace_norm(x) for mu, x in self.components.items()}


def _cluster(values, tol=CLUSTER_TOL):
    """Replace each value by the mean of its tolerance cluster."""
    order = np.argsort(values)
    out = np.array(values, dtype=float)
    start = 0
    for i in range(1, len(order) + 1):
        if i == len(order) or values[order[i]] - values[order[i - 1]] > tol:
            idx = order[start:i]
            out[idx] = np.mean(values[idx])
            start = i
    return out


class GroupAction:
    kind = ""

    def __init__(self, dim):
        self.dim = dim

    def twirl(self, x):
        raise NotImplementedError

    def modes(self, x) -> ModeDecomposition:
        raise NotImplementedError

    def sample_unitaries(self):
        raise NotImplementedError

    def twirl_superop(self):
        d = self.dim
        cols = [nk.vec(self.twirl(nk.unvec(e, d))) for e in np.eye(d * d)]
        return np.array(cols).T


class _AbelianAction(GroupAction):
    """Actions diagonal in a fixed orthonormal eigenbasis with scalar charges."""

    def __init__(self, basis, charges):
        super().__init__(len(charges))
        self.basis = basis
        self.charges = charges
        self._labels = self._pair_labels(charges[:, None] - charges[None, :])

    def _pair_labels(self, diff):
        raise NotImplementedError

    def character(self, label, param):
        raise NotImplementedError

    def unitary(self, param):
        raise NotImplementedError

    def label_set(self):
        return sorted(set(self._labels.ravel().tolist()))

    def label_masks(self):
        return {mu: self._labels == mu for mu in self.label_set()}

    def to_eigenbasis(self, x):
        return self.basis.conj().T @ np.asarray(x) @ self.basis

    def from_eigenbasis(self, x):
        return self.basis @ x @ self.basis.conj().T

    def modes(self, x):
        xe = self.to_eigenbasis(x)
        comps = {}
        for mu, mask in self.label_masks().items():
            if np.any(mask):
                comps[mu] = self.from_eigenbasis(np.where(mask, xe, 0))
        return ModeDecomposition(comps)

    def twirl(self, x):
        xe = self.to_eigenbasis(x)
        return self.from_eigenbasis(np.where(self._labels == self.zero_label, xe, 0))

    zero_label = 0

    def sample_parameters(self):
        raise NotImplementedError

    def sample_unitaries(self):
        return [self.unitary(s) for s in self.sample_parameters()]


class U1Action(_AbelianAction):
    """U(1) generated by a Hermitian charge with integer-spaced spectrum."""

    kind = "U1"

    def __init__(self, generator):
        self.generator = np.asarray(generator)
        if np.abs(self.generator - self.generator.conj().T).max() > 1e-10:
            raise ValueError("U1 generator must be Hermitian")
        w, v = np.linalg.eigh(self.generator)
        super().__init__(v, _cluster(w))

    def _pair_labels(self, diff):
        lab = np.rint(diff)
        if np.abs(diff - lab).max() > 1e-8:
            raise ValueError("U1 generator charges must differ by integers")
        return lab.astype(int)

    def character(self, label, param):
        return np.exp(1j * param * label)

    def unitary(self, param):
        return (self.basis * np.exp(1j * param * self.charges)[None, :]) @ self.basis.conj().T

    def sample_parameters(self):
        return 2 * np.pi * (np.arange(16) + 0.5) / 16


class TimeTranslationAction(_AbelianAction):
    """Time translations exp(i t H); modes are labelled by Bohr frequencies."""

    kind = "TimeTranslation"
    zero_label = 0.0

    def __init__(self, hamiltonian):
        self.hamiltonian = np.asarray(hamiltonian)
        if np.abs(self.hamiltonian - self.hamiltonian.conj().T).max() > 1e-10:
            raise ValueError("Hamiltonian must be Hermitian")
        w, v = np.linalg.eigh(self.hamiltonian)
        super().__init__(v, _cluster(w))

    def _pair_labels(self, diff):
        binned = _cluster(diff.ravel()).reshape(diff.shape)
        binned[np.abs(binned) < CLUSTER_TOL] = 0.0
        return binned + 0.0

    def character(self, label, param):
        return np.exp(1j * param * label)

    def unitary(self, param):
        return (self.basis * np.exp(1j * param * self.charges)[None, :]) @ self.basis.conj().T

    def sample_parameters(self):
        gaps = np.abs(np.array(self.label_set()))
        gaps = gaps[gaps > CLUSTER_TOL]
        period = 2 * np.pi / gaps.min() if len(gaps) else 1.0
        return period * (np.arange(16) + 0.5) / 16


class ZNAction(_AbelianAction):
    """Cyclic group generated by a unitary U with U^N proportional to I."""

    kind = "ZN"

    def __init__(self, unitary, order):
        self.generator_unitary = np.asarray(unitary, dtype=complex)
        self.order = int(order)
        un = np.linalg.matrix_power(self.generator_unitary, self.order)
        phase = un[0, 0]
        if abs(abs(phase) - 1) > 1e-10 or np.abs(un - phase * np.eye(len(un))).max() > 1e-10:
            raise ValueError("U^N must be a phase times the identity")
        t, z = scipy.linalg.schur(self.generator_unitary, output="complex")
        charges = np.angle(np.diag(t)) * self.order / (2 * np.pi)
        super().__init__(z, charges)

    def _pair_labels(self, diff):
        lab = np.rint(diff)
        if np.abs(diff - lab).max() > 1e-8:
            raise ValueError("eigenphases inconsistent with the group order")
        return np.mod(lab.astype(int), self.order)

    def character(self, label, param):
        return np.exp(2j * np.pi * param * label / self.order)

    def unitary(self, param):
        return np.linalg.matrix_power(self.generator_unitary, int(param))

    def sample_parameters(self):
        return np.arange(self.order)

    def twirl(self, x):
        x = np.asarray(x)
        out = np.zeros_like(x, dtype=complex)
        u = np.eye(self.dim, dtype=complex)
        for _ in range(self.order):
            out += u @ x @ u.conj().T
            u = self.generator_unitary @ u
        return out / self.order


class SU2Action(GroupAction):
    """SU(2) generated by a spin triple; twirl projects onto the commutant."""

    kind = "SU2"

    def __init__(self, sx, sy, sz):
        self.s = [np.asarray(a, dtype=complex) for a in (sx, sy, sz)]
        super().__init__(len(self.s[0]))
        for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
            comm = self.s[a] @ self.s[b] - self.s[b] @ self.s[a]
            if np.abs(comm - 1j * self.s[c]).max() > 1e-10:
                raise ValueError("generators violate the su(2) commutation relations")
        self._blocks = self._irrep_blocks()

    def _irrep_blocks(self):
        sx, sy, sz = self.s
        casimir = sx @ sx + sy @ sy + sz @ sz
        w, v = np.linalg.eigh(casimir)
        jvals = (-1 + np.sqrt(1 + 4 * np.clip(w, 0, None))) / 2
        jvals = np.round(2 * jvals) / 2
        sm = sx - 1j * sy
        blocks = []
        for j in sorted(set(jvals.tolist())):
            sub = v[:, jvals == j]
            wz, vz = np.linalg.eigh(sub.conj().T @ sz @ sub)
            top = sub @ vz[:, np.abs(wz - j) < 1e-6]
            ladder = [top]
            m = j
            for _ in range(int(round(2 * j))):
                nxt = sm @ ladder[-1] / np.sqrt(j * (j + 1) - m * (m - 1))
                ladder.append(nxt)
                m -= 1
            w_j = np.stack(ladder, axis=1).reshape(self.dim, -1)
            blocks.append((j, top.shape[1], w_j))
        total = sum(b[2] @ b[2].conj().T for b in blocks)
        if np.abs(total - np.eye(self.dim)).max() > 1e-8:
            raise NumericalError("failed to resolve the representation into irreps")
        return blocks

    def twirl(self, x):
        x = np.asarray(x)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for j, mult, w_j in self._blocks:
            dj = int(round(2 * j + 1))
            blk = (w_j.conj().T @ x @ w_j).reshape(dj, mult, dj, mult)
            red = np.einsum("iaib->ab", blk) / dj
            out += w_j @ np.kron(np.eye(dj), red) @ w_j.conj().T
        return out

    def modes(self, x):
        inv = self.twirl(x)
        return ModeDecomposition({0: inv, 1: np.asarray(x) - inv})

    def unitary(self, angle, axis):
        n = np.asarray(axis, dtype=float)
        n = n / np.linalg.norm(n)
        gen = n[0] * self.s[0] + n[1] * self.s[1] + n[2] * self.s[2]
        w, v = np.linalg.eigh(gen)
        return (v * np.exp(-1j * angle * w)[None, :]) @ v.conj().T

    def sample_unitaries(self, count=32):
        pts = qmc.Halton(d=3, scramble=False).random(count + 1)[1:]
        out = []
        for u1, u2, u3 in pts:
            cz = 2 * u2 - 1
            az = 2 * np.pi * u3
            axis = (np.sqrt(1 - cz**2) * np.cos(az), np.sqrt(1 - cz**2) * np.sin(az), cz)
            out.append(self.unitary(4 * np.pi * u1, axis))
        return out


def twirl(rho, action: GroupAction):
    return action.twirl(rho)


def mode_decompose(x, action: GroupAction) -> ModeDecomposition:
    return action.modes(x)


def mode_occupancy(rho, action: GroupAction, reference, tol=1e-12):
    """Trace norm of each mode relative to the same mode of ``reference``."""
    num = action.modes(rho).trace_norms()
    den = action.modes(reference).trace_norms()
    out = {}
    for mu in sorted(set(num) | set(den), key=lambda m: (abs(m), m)):
        ref = den.get(mu, 0.0)
        if ref < tol:
            warnings.warn(f"mode {mu} dropped: reference norm vanishes")
            continue
        out[mu] = num.get(mu, 0.0) / ref
    return out


def adjoint_superop(u):
    return nk.vectorize_superop(u, u)


def covariance_check(channel, action: GroupAction):
    """Largest operator-norm commutator between the channel and sampled U_g."""
    channel = np.asarray(channel)
    if channel.shape != (action.dim**2, action.dim**2):
        raise nk.DimensionError("channel dimension does not match the action")
    res = 0.0
    for u in action.sample_unitaries():
        ug = adjoint_superop(u)
        res = max(res, float(np.linalg.norm(channel @ ug - ug @ channel, 2)))
    return res


def _sector_bases(action: GroupAction):
    d = action.dim
    if isinstance(action, _AbelianAction):
        w = nk.vectorize_superop(action.basis, action.basis)
        labels = nk.vec(action._labels)
        return {mu: w[:, labels == mu] for mu in action.label_set()}
    proj = action.twirl_superop()
    proj = nk.hermitian_part(proj)
    ev, vecs = np.linalg.eigh(proj)
    return {0: vecs[:, ev > 0.5], 1: vecs[:, ev <= 0.5]} if d > 0 else {}


def sector_spectrum(channel, action: GroupAction, tol=1e-8):
    """Eigenvalues of a covariant channel restricted to each mode subspace."""
    res = covariance_check(channel, action)
    if res > tol:
        raise CovarianceError(res, tol)
    out = {}
    for mu, b in _sector_bases(action).items():
        if b.shape[1] == 0:
            continue
        block = b.conj().T @ channel @ b
        w = np.linalg.eigvals(block)
        out[mu] = w[nk.sort_order(w)]
    return out


def sector_modes(channel, action: GroupAction, tol=1e-8):
    """Right eigenmodes of a covariant channel computed sector by sector.

    Returns ``{mu: (eigenvalues, modes)}`` with ``modes[:, k]`` the vectorized
    mode of ``eigenvalues[k]``; every mode lies in a single sector, even when
    eigenvalues are degenerate across sectors.
    """
    res = covariance_check(channel, action)
    if res > tol:
        raise CovarianceError(res, tol)
    out = {}
    for mu, b in _sector_bases(action).items():
        if b.shape[1] == 0:
            continue
        w, v = np.linalg.eig(b.conj().T @ channel @ b)
        order = nk.sort_order(w)
        out[mu] = (w[order], b @ v[:, order])
    return out


def relative_entropy_asymmetry(rho, action: GroupAction, check=True, tol=1e-9):
    """S(rho || G[rho]), cross-checked against S(G[rho]) - S(rho)."""
    g = action.twirl(rho)
    val = quantum_relative_entropy(rho, g)
    if check:
        alt = von_neumann_entropy(g) - von_neumann_entropy(rho)
        if abs(val - alt) > tol:
            raise NumericalError(f"asymmetry formulas disagree: {val:.12g} vs {alt:.12g}")
    return val


def shift_operator(n):
    """Cyclic translation |k> -> |k+1 mod n>."""
    return np.roll(np.eye(n, dtype=complex), 1, axis=0)
