"""Classical continuous-time Markov chains on discrete state spaces.

Generators follow the column convention: ``L[i, j]`` is the rate j -> i and
every column sums to zero, so ``dp/dt = L @ p``.
"""

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import connected_components

from . import numkit as nk


class DegeneracyError(ValueError):
    """Raised when a generator has no unique stationary state."""


class WeightingError(ValueError):
    """Raised when the stationary vector is too small to weight by."""


class AlreadyStationaryError(ValueError):
    """Raised when a state has no overlap with any decaying mode."""


class ClosureError(ValueError):
    """Raised when a permutation set is not closed under composition."""


def as_probability(p, tol=1e-12):
    """Validate a probability vector, clamping tiny negative entries to 0."""
    p = np.asarray(p, dtype=float).copy()
    if p.ndim != 1:
        raise ValueError("probability vector must be one-dimensional")
    if p.min() < -tol:
        raise ValueError(f"negative probability {p.min():.3e}")
    p[p < 0] = 0.0
    if abs(p.sum() - 1) > tol:
        raise ValueError(f"probabilities sum to {p.sum():.15f}")
    return p


@dataclass
class IsingChainParams:
    J: float = -0.4
    h: float = 0.2
    n_spins: int = 7
    beta_e: float = 1.0
    beta_i: float = 0.5

    def __post_init__(self):
        if self.n_spins < 2:
            raise ValueError("spin chain needs at least two spins")
        if 2**self.n_spins > nk.DIM_CAP:
            raise nk.DimensionError("state space exceeds dimension cap")


@dataclass
class ClassicalGenerator:
    matrix: np.ndarray
    stationary: np.ndarray
    _spectrum: Optional[nk.GeneratorSpectrum] = field(default=None, repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        off = m - np.diag(np.diag(m))
        if off.min() < -1e-14:
            raise ValueError("negative off-diagonal rate")
        if np.abs(m.sum(axis=0)).max() > 1e-12 * max(1.0, np.abs(m).max()):
            raise ValueError("generator columns must sum to zero")
        self.matrix = m
        self.stationary = as_probability(self.stationary)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def spectrum(self):
        """Spectrum with right modes of unit pi-weighted norm and r_1 = pi."""
        if self._spectrum is None:
            self._spectrum = _weighted_spectrum(self.matrix, self.stationary)
        return self._spectrum


def _weighted_spectrum(m, pi):
    if pi.min() < 1e-14:
        raise WeightingError("stationary entry below 1e-14")
    flux = m * pi[None, :]
    if np.abs(flux - flux.T).max() < 1e-12 * max(1.0, np.abs(m).max()):
        # detailed balance: symmetrize so degenerate modes come out pi-orthonormal
        sq = np.sqrt(pi)
        w, v = np.linalg.eigh((m * sq[None, :]) / sq[:, None])
        order = nk.sort_order(w)
        w, v = w[order], v[:, order]
        v = v * np.sign(v[np.argmax(np.abs(v), axis=0), np.arange(len(w))])[None, :]
        right = (sq[:, None] * v).astype(complex)
        left = (v / sq[:, None]).astype(complex)
        spec = nk.GeneratorSpectrum(w.astype(complex), right, left)
        residual = np.linalg.norm(spec.matrix() - m) / max(1.0, np.linalg.norm(m))
        return nk.GeneratorSpectrum(spec.eigenvalues, right, left, None, float(residual))
    spec = nk.eig_general(m)
    scales = (1.0 / np.sqrt(np.sum(np.abs(spec.right) ** 2 / pi[:, None], axis=0))).astype(complex)
    # fix the stationary mode to pi itself, so a_1 = 1 for every probability vector
    scales[0] = 1.0 / spec.right[:, 0].sum()
    # real eigenvalues get real modes
    r = spec.right
    peak = r[np.argmax(np.abs(r), axis=0), np.arange(r.shape[1])]
    phases = np.where(np.abs(spec.eigenvalues.imag) < 1e-12, np.abs(peak) / peak, 1.0)
    phases[0] = 1.0
    return spec.rescale(scales * phases)


def spin_configurations(n):
    """All 2^n configurations; index bit (n-1-k) set means spin k is -1."""
    idx = np.arange(2**n)
    bits = (idx[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    return 1 - 2 * bits


def ising_energy(config, params: IsingChainParams):
    """Chain energy with one fixed virtual spin +1 after the last site."""
    s = np.asarray(config)
    if not np.all(np.isin(s, (-1, 1))):
        raise ValueError("spins must be +1 or -1")
    ext = np.append(s, 1)
    return float(-params.J * np.sum(ext[:-1] * ext[1:]) - params.h * np.sum(s))


def ising_energies(params: IsingChainParams):
    s = spin_configurations(params.n_spins)
    ext = np.hstack([s, np.ones((len(s), 1), dtype=int)])
    return -params.J * np.sum(ext[:, :-1] * ext[:, 1:], axis=1) - params.h * s.sum(axis=1)


def single_flip_adjacency(n):
    pairs = []
    for i in range(2**n):
        for k in range(n):
            j = i ^ (1 << k)
            if i < j:
                pairs.append((i, j))
    return pairs


def gibbs_distribution(energies, beta):
    e = np.asarray(energies, dtype=float)
    w = np.exp(-beta * (e - e.min()) if beta >= 0 else -beta * (e - e.max()))
    return w / w.sum()


def build_detailed_balance_generator(energies, beta, adjacency, rates="arrhenius"):
    """Rate matrix obeying detailed balance with respect to exp(-beta E).

    Parameters
    ----------
    rates : {"arrhenius", "heat_bath"}
        ``arrhenius`` uses W = exp(-beta (E_i - E_j) / 2), ``heat_bath`` uses
        W = 1 / (1 + exp(beta (E_i - E_j))).
    """
    e = np.asarray(energies, dtype=float)
    n = len(e)
    m = np.zeros((n, n))
    adj = np.zeros((n, n), dtype=bool)
    for i, j in adjacency:
        if i == j:
            continue
        adj[i, j] = adj[j, i] = True
    ncomp, _ = connected_components(adj, directed=False)
    if ncomp != 1:
        raise DegeneracyError(f"adjacency has {ncomp} components; stationary state not unique")
    ii, jj = np.nonzero(adj)
    de = e[ii] - e[jj]
    if rates == "arrhenius":
        w = np.exp(-beta * de / 2)
    elif rates == "heat_bath":
        w = 1.0 / (1.0 + np.exp(beta * de))
    else:
        raise ValueError(f"unknown rate rule {rates!r}")
    m[ii, jj] = w
    m -= np.diag(m.sum(axis=0))
    return ClassicalGenerator(m, gibbs_distribution(e, beta))


def ising_generator(params: IsingChainParams, rates="arrhenius"):
    return build_detailed_balance_generator(
        ising_energies(params), params.beta_e, single_flip_adjacency(params.n_spins), rates
    )


def build_z4_generator(eps):
    """Biased nearest-neighbour hopping on a 4-site ring."""
    if abs(eps) >= 1:
        raise ValueError("chirality must satisfy |eps| < 1")
    m = -2.0 * np.eye(4)
    for n in range(4):
        m[n, (n + 1) % 4] = 1 + eps
        m[n, (n - 1) % 4] = 1 - eps
    return ClassicalGenerator(m, np.full(4, 0.25))


def z4_fourier_modes():
    """Columns T^(mu) = (1, i^mu, i^2mu, i^3mu) / 2 for mu = 0..3."""
    n = np.arange(4)
    return 0.5 * (1j ** np.outer(n, n))


def z4_mode_components(p):
    """Components p^(mu) = <T^(mu), p> T^(mu); they sum to p."""
    t = z4_fourier_modes()
    p = np.asarray(p)
    return {mu: (t[:, mu].conj() @ p) * t[:, mu] for mu in range(4)}


def evolve_classical(gen: ClassicalGenerator, p0, t):
    """p(t) = exp(t L) p0, spectrally when possible."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    p0 = as_probability(p0)
    try:
        p = gen.spectrum.propagate(p0, t).real
    except (nk.NonDiagonalizableError, WeightingError):
        p = scipy.linalg.expm(t * gen.matrix) @ p0
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def evolve_classical_grid(gen: ClassicalGenerator, p0, times):
    p0 = as_probability(p0)
    spec = gen.spectrum
    a = spec.overlaps(p0)
    out = (spec.right @ (a[:, None] * np.exp(np.outer(spec.eigenvalues, times)))).real.T
    out = np.clip(out, 0.0, None)
    return out / out.sum(axis=1, keepdims=True)


def spectral_overlaps(gen: ClassicalGenerator, p):
    """Coefficients a_k with p = sum_k a_k r_k.

    With the pi-normalized modes of :attr:`ClassicalGenerator.spectrum` this is
    the pi-weighted inner product <r_k, p>_pi whenever the generator obeys
    detailed balance; in general the biorthogonal left modes are used.
    """
    return gen.spectrum.overlaps(np.asarray(p, dtype=float))


def pi_inner(u, v, pi):
    return np.sum(np.conj(u) * v / pi)


def kl_divergence(p, q):
    """Sum p ln(p/q) with 0 ln 0 = 0; inf when supp p is not inside supp q."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mask = p > 0
    if np.any(q[mask] <= 0):
        return float("inf")
    return max(float(np.sum(p[mask] * np.log(p[mask] / q[mask]))), 0.0)


def renyi_divergence(p, q, alpha):
    """Classical Renyi divergence of order alpha in (0, 1) or (1, 2]."""
    if alpha == 1:
        raise ValueError("alpha = 1 is the KL divergence; use kl_divergence")
    if not (0 < alpha < 1 or 1 < alpha <= 2):
        raise ValueError(f"alpha={alpha} outside (0,1) U (1,2]")
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mask = p > 0
    if alpha > 1 and np.any(q[mask] <= 0):
        return float("inf")
    both = mask & (q > 0)
    s = np.sum(p[both] ** alpha * q[both] ** (1 - alpha))
    if s <= 0:
        return float("inf")
    return max(float(np.log(s) / (alpha - 1)), 0.0)


def leading_decay(spec: nk.GeneratorSpectrum, a, weight, tol=1e-10, degeneracy_tol=1e-9):
    """Rate and prefactor of the slowest mode present in an expansion.

    ``weight(r_k, r_l)`` is the quadratic form of the divergence expansion. All
    modes within ``degeneracy_tol`` of the leading real part contribute; cross
    terms survive only between modes with equal eigenvalues, which keeps the
    time-averaged prefactor of a complex-conjugate pair at twice the
    single-mode value.
    """
    active = [k for k in range(1, len(spec)) if abs(a[k]) > tol]
    if not active:
        raise AlreadyStationaryError("no overlap with decaying modes")
    lead = max(spec.eigenvalues[k].real for k in active)
    group = [k for k in active if abs(spec.eigenvalues[k].real - lead) < degeneracy_tol]
    pref = 0.0
    for k in group:
        for l in group:
            if abs(spec.eigenvalues[k] - spec.eigenvalues[l]) < degeneracy_tol:
                pref += (np.conj(a[k]) * a[l] * weight(spec.right[:, k], spec.right[:, l])).real
    return 2 * lead, 0.5 * pref


def asymptotic_kl_predictor(gen: ClassicalGenerator, p0):
    """Late-time law D(p(t) || pi) ~ prefactor * exp(rate * t)."""
    pi = gen.stationary
    a = spectral_overlaps(gen, p0)
    return leading_decay(gen.spectrum, a, lambda u, v: pi_inner(u, v, pi))


def _check_group(perms):
    perms = [tuple(int(x) for x in g) for g in perms]
    n = len(perms[0])
    sset = set(perms)
    for g in perms:
        if sorted(g) != list(range(n)):
            raise ClosureError(f"{g} is not a permutation")
    for g, h in itertools.product(perms, repeat=2):
        if tuple(g[i] for i in h) not in sset:
            raise ClosureError("permutation set is not closed under composition")
    return [np.array(g) for g in sset]


def twirl_discrete_classical(p, perms: Sequence[Sequence[int]]):
    """Uniform average of p over a permutation group, (g.p)_i = p_{g(i)}."""
    group = _check_group(perms)
    p = np.asarray(p, dtype=float)
    return sum(p[g] for g in group) / len(group)


def cyclic_group(n):
    return [np.roll(np.arange(n), k) for k in range(n)]


def classical_asymmetry(p, perms):
    return kl_divergence(p, twirl_discrete_classical(p, perms))
