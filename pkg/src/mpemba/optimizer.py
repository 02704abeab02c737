"""Metropolis annealing for initial states with small slow-mode overlap."""

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import numkit as nk
from .classical import ClassicalGenerator, as_probability, spectral_overlaps
from .lindblad import SuperopSpectrum

DEGENERACY_TOL = 1e-9
ZERO_COST = 1e-12


@dataclass
class MetropolisConfig:
    """Annealing settings.

    ``slope`` is the change of the inverse temperature per accepted move; by
    default it is chosen so that the final value is 100 times the initial one.
    ``direction="decrease"`` lowers the inverse temperature instead.
    """

    slow_mode_count: int = 1
    iterations: int = 2000
    initial_inverse_temperature: float = 100.0
    slope: Optional[float] = None
    direction: str = "increase"
    seed: int = 0
    restarts: int = 1
    angle_scale: float = 0.1
    threads: int = 1

    def __post_init__(self):
        if self.slow_mode_count < 1:
            raise ValueError("slow_mode_count must be at least 1")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.direction not in ("increase", "decrease"):
            raise ValueError(f"unknown schedule direction {self.direction!r}")
        if self.initial_inverse_temperature < 0:
            raise ValueError("inverse temperature must be nonnegative")

    def validate_dim(self, n_modes):
        if self.slow_mode_count >= n_modes - 1:
            raise ValueError(f"slow_mode_count must be below {n_modes - 1}")

    @property
    def step(self):
        if self.slope is not None:
            return float(self.slope)
        return 99.0 * self.initial_inverse_temperature / self.iterations


def slow_mode_indices(eigenvalues, k, tol=DEGENERACY_TOL):
    """Indices 1..k of the sorted spectrum, extended to close a degenerate group."""
    idx = list(range(1, k + 1))
    last = eigenvalues[k]
    j = k + 1
    while j < len(eigenvalues) and abs(eigenvalues[j] - last) < tol:
        idx.append(j)
        j += 1
    return idx


def overlap_cost_classical(p, gen: ClassicalGenerator, k):
    """Sum of |<p, r_j>_pi| over the k slowest decaying modes."""
    a = spectral_overlaps(gen, p)
    return float(np.sum(np.abs(a[slow_mode_indices(gen.spectrum.eigenvalues, k)])))


def overlap_cost_quantum(rho, spec: SuperopSpectrum, k):
    """Sum of |Tr[l_j^dag rho]| over the k slowest decaying modes."""
    a = spec.overlaps(np.asarray(rho))
    return float(np.sum(np.abs(a[slow_mode_indices(spec.eigenvalues, k)])))


def _accept(rng, delta, t_eff):
    return delta <= 0 or rng.random() < np.exp(-t_eff * delta)


def _anneal(state, cost_fn, propose, cfg, rng):
    """Generic Metropolis loop returning (best, best cost history)."""
    cost = cost_fn(state)
    best, best_cost = state, cost
    history = [best_cost]
    t_eff = cfg.initial_inverse_temperature
    sign = 1.0 if cfg.direction == "increase" else -1.0
    for _ in range(cfg.iterations):
        if best_cost < ZERO_COST:
            break
        cand = propose(state, rng)
        c = cost_fn(cand)
        if _accept(rng, c - cost, t_eff):
            state, cost = cand, c
            t_eff = max(t_eff + sign * cfg.step, 0.0)
            if cost < best_cost:
                best, best_cost = state, cost
        history.append(best_cost)
    return best, best_cost, history


def _restarts(run, cfg):
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    rngs = [np.random.default_rng(s) for s in seeds]
    if cfg.threads > 1 and cfg.restarts > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            results = list(pool.map(run, rngs))
    else:
        results = [run(r) for r in rngs]
    # first restart wins ties, independent of scheduling
    return min(results, key=lambda res: res[1])


def metropolis_permute(gen: ClassicalGenerator, p0, cfg: MetropolisConfig):
    """Anneal over permutations of the entries of ``p0``.

    Each move draws four distinct entries and permutes them uniformly at
    random. Returns the best permutation found and its best-so-far cost
    history.
    """
    p0 = as_probability(p0)
    cfg.validate_dim(gen.dim)
    k = cfg.slow_mode_count
    n_pick = min(4, len(p0))

    def propose(p, rng):
        idx = rng.choice(len(p), size=n_pick, replace=False)
        out = p.copy()
        out[idx] = p[rng.permutation(idx)]
        return out

    def run(rng):
        return _anneal(p0, lambda p: overlap_cost_classical(p, gen, k), propose, cfg, rng)

    best, _, history = _restarts(run, cfg)
    return best, history


def givens_rotation(d, i, j, angle, phase):
    g = np.eye(d, dtype=complex)
    c, s = np.cos(angle), np.sin(angle)
    g[i, i] = g[j, j] = c
    g[i, j] = -np.exp(-1j * phase) * s
    g[j, i] = np.exp(1j * phase) * s
    return g


def metropolis_rotate(spec: SuperopSpectrum, rho0, cfg: MetropolisConfig):
    """Anneal over the unitary orbit of ``rho0`` with random two-level rotations.

    Returns ``(rho_opt, r, history)`` with ``rho_opt = r rho0 r^dag``.
    """
    rho0 = nk.hermitian_part(np.asarray(rho0, dtype=complex))
    d = rho0.shape[0]
    cfg.validate_dim(d * d)
    k = cfg.slow_mode_count

    def cost(r):
        return overlap_cost_quantum(r @ rho0 @ r.conj().T, spec, k)

    def propose(r, rng):
        i, j = rng.choice(d, size=2, replace=False)
        g = givens_rotation(d, i, j, rng.normal(0.0, cfg.angle_scale), rng.uniform(0, 2 * np.pi))
        q, tri = np.linalg.qr(g @ r)
        # keep the accumulated product exactly unitary
        return q * (np.diag(tri) / np.abs(np.diag(tri)))[None, :]

    def run(rng):
        return _anneal(np.eye(d, dtype=complex), cost, propose, cfg, rng)

    r, _, history = _restarts(run, cfg)
    return nk.hermitian_part(r @ rho0 @ r.conj().T), r, history


def exhaustive_permutation_minimum(gen: ClassicalGenerator, p0, k):
    """Brute-force minimum cost over all permutations (small state spaces only)."""
    p0 = as_probability(p0)
    if len(p0) > 8:
        raise nk.DimensionError("exhaustive search limited to 8 entries")
    return min(overlap_cost_classical(p0[list(g)], gen, k) for g in itertools.permutations(range(len(p0))))
