"""Lindblad generators, Davies maps and spectral time evolution."""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg

from . import numkit as nk
from .classical import AlreadyStationaryError, leading_decay
from .monotones import gibbs_state

DEGENERATE_GAP = 1e-12


@dataclass
class LindbladModel:
    hamiltonian: np.ndarray
    jumps: List[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        h = np.asarray(self.hamiltonian, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise nk.DimensionError("Hamiltonian must be square")
        if np.abs(h - h.conj().T).max() > 1e-10:
            raise ValueError("Hamiltonian must be Hermitian")
        jumps = [np.asarray(l, dtype=complex) for l in self.jumps]
        for l in jumps:
            if l.shape != h.shape:
                raise nk.DimensionError(f"jump operator shape {l.shape} differs from {h.shape}")
        self.hamiltonian = h
        self.jumps = jumps

    @property
    def dim(self):
        return self.hamiltonian.shape[0]


def hamiltonian_superop(h):
    eye = np.eye(len(h))
    return -1j * (nk.vectorize_superop(h, eye) - nk.vectorize_superop(eye, h))


def dissipator_superop(jumps, d):
    eye = np.eye(d)
    out = np.zeros((d * d, d * d), dtype=complex)
    for l in jumps:
        ll = l.conj().T @ l
        out += nk.vectorize_superop(l, l) - 0.5 * (
            nk.vectorize_superop(ll, eye) + nk.vectorize_superop(eye, ll)
        )
    return out


def build_lindbladian(model: LindbladModel):
    """Vectorized -i[H, .] + sum_l (L . L^dag - {L^dag L, .} / 2)."""
    return hamiltonian_superop(model.hamiltonian) + dissipator_superop(model.jumps, model.dim)


def occupation(beta, omega, stats="bosonic"):
    """f = 1 / (exp(beta omega) -+ 1) for bosons (-) and fermions (+)."""
    sign = {"bosonic": -1.0, "fermionic": 1.0}[stats]
    return 1.0 / (np.exp(beta * omega) + sign)


def davies_generator(h_s, beta, stats="bosonic", rate=1.0):
    """Davies model with one jump pair per ordered pair of energy eigenstates.

    For eigenstates k < k' (ascending energy) with gap omega > 0 the lowering
    jump |k><k'| has rate (1 + f) for bosons or (1 - f) for fermions and the
    raising jump |k'><k| has rate f. Exactly degenerate pairs use the
    symmetric rate 1/2 both ways.
    """
    if stats not in ("bosonic", "fermionic"):
        raise ValueError(f"unknown statistics {stats!r}")
    if stats == "bosonic" and beta < 0:
        raise ValueError("bosonic bath needs nonnegative beta")
    h_s = np.asarray(h_s, dtype=complex)
    if np.abs(h_s - h_s.conj().T).max() > 1e-10:
        raise ValueError("Hamiltonian must be Hermitian")
    w, v = np.linalg.eigh(h_s)
    jumps = []
    sign = 1.0 if stats == "bosonic" else -1.0
    for k in range(len(w)):
        for kp in range(k + 1, len(w)):
            omega = w[kp] - w[k]
            if abs(omega) < DEGENERATE_GAP:
                down = up = 0.5
            else:
                f = occupation(beta, omega, stats)
                down, up = 1.0 + sign * f, f
            down_op = np.outer(v[:, k], v[:, kp].conj())
            jumps.append(np.sqrt(rate * down) * down_op)
            jumps.append(np.sqrt(rate * up) * down_op.conj().T)
    return LindbladModel(h_s, jumps)


def davies_rate_pairs(model: LindbladModel):
    """(down, up) rates of consecutive jump pairs built by :func:`davies_generator`."""
    out = []
    for a, b in zip(model.jumps[::2], model.jumps[1::2]):
        out.append((np.linalg.norm(a) ** 2, np.linalg.norm(b) ** 2))
    return out


def qubit_davies(h, beta, rate=1.0):
    """Qubit with H = (h / 2) sigma_z coupled to a bosonic bath."""
    return davies_generator(h * np.diag([0.5, -0.5]), beta, rate=rate)


def tfim_hamiltonian(n, j=1.0, h=1.0):
    """Open chain -J sum sz sz + h sum sx with Pauli matrices."""
    sz = 2 * nk.SZ
    sx = 2 * nk.SX
    out = np.zeros((2**n, 2**n), dtype=complex)
    for k in range(n - 1):
        out -= j * nk.site_operator(sz, k, n) @ nk.site_operator(sz, k + 1, n)
    for k in range(n):
        out += h * nk.site_operator(sx, k, n)
    return out


def z4_quantum_model(j=1.0, eps=0.25):
    """Four-site ring with coherent hopping and chirally biased incoherent hopping."""
    if abs(eps) > 1:
        raise ValueError("|eps| must not exceed 1")
    shift = np.roll(np.eye(4, dtype=complex), 1, axis=0)  # |n> -> |n+1>
    h = j * (shift + shift.conj().T)
    jumps = []
    for n in range(4):
        ket = np.zeros(4)
        ket[n] = 1
        jumps.append(np.sqrt(1 + eps) * np.outer(np.roll(ket, 1), ket))
        jumps.append(np.sqrt(1 - eps) * np.outer(np.roll(ket, -1), ket))
    return LindbladModel(h, jumps)


def all_to_all_model(n_s=5, omega=1.0, delta=-1.0, v=3.0, kappa=0.01):
    """Collective spin j = n_s / 2 with decay sqrt(kappa) S^-."""
    if n_s < 1:
        raise ValueError("need at least one spin")
    sx, sy, sz = nk.spin_operators(n_s / 2)
    h = omega * sx - delta * sz + (v / n_s) * sz @ sz
    return LindbladModel(h, [np.sqrt(kappa) * (sx - 1j * sy)])


@dataclass
class SuperopSpectrum:
    """Spectrum of a Lindbladian with its steady state.

    ``spectrum`` is ``None`` when the generator could not be diagonalized; in
    that case evolution falls back to the matrix exponential.
    """

    generator: np.ndarray
    spectrum: Optional[nk.GeneratorSpectrum]
    steady_state: np.ndarray

    @property
    def dim(self):
        return self.steady_state.shape[0]

    @property
    def eigenvalues(self):
        return self.spectrum.eigenvalues

    def overlaps(self, rho):
        return self.spectrum.overlaps(rho)


def _hermitian_gauge(spec: nk.GeneratorSpectrum):
    """Fix mode phases so that every real-eigenvalue mode is Hermitian.

    The stationary mode is further scaled to unit trace.
    """
    scales = np.ones(len(spec), dtype=complex)
    for k in range(len(spec)):
        if abs(spec.eigenvalues[k].imag) < 1e-10:
            r = spec.right_mode(k)
            tr = np.trace(r)
            if abs(spec.eigenvalues[k]) < 1e-8 and abs(tr) > 1e-8:
                scales[k] = 1.0 / tr
                continue
            # r = exp(i phi) H with H Hermitian gives Tr[r r] = exp(2 i phi) |H|^2
            z = np.trace(r @ r)
            if abs(z) > 1e-12:
                scales[k] = np.sqrt(np.conj(z) / abs(z))
    return spec.rescale(scales)


def superop_spectrum(generator, d=None):
    generator = np.asarray(generator)
    d = d or int(round(np.sqrt(generator.shape[0])))
    try:
        spec = _hermitian_gauge(nk.eig_general(generator, op_dim=d))
    except nk.NonDiagonalizableError:
        spec = None
    steady = None
    if spec is not None:
        zero = [k for k in range(len(spec)) if abs(spec.eigenvalues[k]) < 1e-8]
        if zero:
            k0 = max(zero, key=lambda k: abs(np.trace(spec.right_mode(k))))
            steady = spec.right_mode(k0)
    if steady is None or abs(np.trace(steady)) < 1e-8:
        null = scipy.linalg.null_space(generator, rcond=1e-10)
        steady = nk.unvec(null[:, 0], d)
    steady = nk.hermitian_part(steady / np.trace(steady))
    return SuperopSpectrum(generator, spec, steady / np.trace(steady).real)


def model_spectrum(model: LindbladModel):
    return superop_spectrum(build_lindbladian(model), model.dim)


def evolve_density(spec: SuperopSpectrum, rho0, t):
    """rho(t) through the spectral expansion, or expm when unavailable."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    rho0 = np.asarray(rho0)
    if spec.spectrum is not None:
        out = spec.spectrum.propagate(rho0, t)
    else:
        out = nk.unvec(scipy.linalg.expm(t * spec.generator) @ nk.vec(rho0), spec.dim)
    return nk.hermitian_part(out)


def evolve_density_grid(spec: SuperopSpectrum, rho0, times):
    rho0 = np.asarray(rho0)
    d = spec.dim
    if spec.spectrum is None:
        return [evolve_density(spec, rho0, t) for t in times]
    s = spec.spectrum
    a = s.overlaps(rho0)
    vecs = s.right @ (a[:, None] * np.exp(np.outer(s.eigenvalues, times)))
    return [nk.hermitian_part(nk.unvec(vecs[:, i], d)) for i in range(len(times))]


def time_derivative(spec: SuperopSpectrum, rho):
    return nk.unvec(spec.generator @ nk.vec(rho), spec.dim)


def asymptotic_qre_predictor(spec: SuperopSpectrum, rho0, reference=None):
    """Late-time law S(rho(t) || reference) ~ prefactor * exp(rate * t).

    The prefactor uses the quadratic form Tr[r_k^dag reference^-1 r_l] / 2
    summed over the slowest modes present; a complex-conjugate pair therefore
    contributes |c|^2 Re Tr[r^dag reference^-1 r].
    """
    if spec.spectrum is None:
        raise nk.NonDiagonalizableError("asymptotics need a spectral decomposition")
    ref = spec.steady_state if reference is None else np.asarray(reference)
    inv = nk.herm_matrix_function(ref, lambda w: 1.0 / w, singular=True)
    a = spec.overlaps(rho0)
    d = spec.dim

    def weight(u, v):
        return np.trace(nk.unvec(u, d).conj().T @ inv @ nk.unvec(v, d))

    return leading_decay(spec.spectrum, a, weight)


__all__ = [
    "AlreadyStationaryError",
    "LindbladModel",
    "SuperopSpectrum",
    "all_to_all_model",
    "asymptotic_qre_predictor",
    "build_lindbladian",
    "davies_generator",
    "evolve_density",
    "gibbs_state",
    "model_spectrum",
    "qubit_davies",
    "superop_spectrum",
    "tfim_hamiltonian",
    "z4_quantum_model",
]
