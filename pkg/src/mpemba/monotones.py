"""Resource monotones, trajectory containers and crossing detection."""

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence, Tuple

import numpy as np

from . import numkit as nk

ALPHA_GRID = (0.4, 0.6, 0.8, 1.0, 1.2, 1.5, 2.0)
SUPPORT_TOL = 1e-12


class ApproximationWarning(UserWarning):
    """Emitted when a result relies on regularized input."""


class PreconditionError(ValueError):
    pass


def _eig(rho):
    w, v = np.linalg.eigh(nk.hermitian_part(np.asarray(rho)))
    w = np.clip(w, 0.0, None)
    return w, v


def von_neumann_entropy(rho):
    w, _ = _eig(rho)
    w = w[w > nk.EIG_FLOOR * max(w.max(), 1e-300)]
    return float(-np.sum(w * np.log(w)))


def quantum_relative_entropy(rho, sigma):
    """S(rho || sigma) = Tr[rho (ln rho - ln sigma)], inf on support violation."""
    p, a = _eig(rho)
    q, b = _eig(sigma)
    overlap = np.abs(a.conj().T @ b) ** 2
    weight = p[:, None] * overlap
    q_ok = q > nk.EIG_FLOOR * q.max()
    if weight[:, ~q_ok].sum() > SUPPORT_TOL:
        return float("inf")
    p_ok = p > nk.EIG_FLOOR * p.max()
    s = np.sum(p[p_ok] * np.log(p[p_ok])) - np.sum(weight[:, q_ok] * np.log(q[q_ok])[None, :])
    return max(float(s), 0.0)


def petz_renyi(rho, sigma, alpha):
    """Petz-Renyi divergence (alpha - 1)^-1 ln Tr[rho^alpha sigma^(1 - alpha)]."""
    if alpha == 1:
        raise ValueError("alpha = 1 is the relative entropy; use quantum_relative_entropy")
    if not (0 < alpha < 1 or 1 < alpha <= 2):
        raise ValueError(f"alpha={alpha} outside (0,1) U (1,2]")
    p, a = _eig(rho)
    q, b = _eig(sigma)
    overlap = np.abs(a.conj().T @ b) ** 2
    q_ok = q > nk.EIG_FLOOR * q.max()
    pa = p**alpha
    if alpha > 1 and (pa[:, None] * overlap)[:, ~q_ok].sum() > SUPPORT_TOL:
        return float("inf")
    tr = np.sum(pa[:, None] * overlap[:, q_ok] * (q[q_ok] ** (1 - alpha))[None, :])
    if tr <= 0:
        return float("inf")
    return max(float(np.log(tr) / (alpha - 1)), 0.0)


def divergence(rho, sigma, alpha=1.0):
    """Relative entropy at alpha = 1, Petz-Renyi divergence otherwise."""
    if alpha == 1:
        return quantum_relative_entropy(rho, sigma)
    return petz_renyi(rho, sigma, alpha)


def gibbs_state(h, beta):
    w, v = np.linalg.eigh(nk.hermitian_part(np.asarray(h)))
    x = -beta * w
    x -= x.max()
    p = np.exp(x)
    p /= p.sum()
    return (v * p[None, :]) @ v.conj().T


def athermality(rho, h_s, beta):
    return quantum_relative_entropy(rho, gibbs_state(h_s, beta))


def free_energy(rho, h_s, beta):
    """F = Tr[rho H] - S(rho) / beta."""
    if beta == 0:
        raise ValueError("free energy undefined at beta = 0")
    return float(np.trace(np.asarray(rho) @ h_s).real - von_neumann_entropy(rho) / beta)


def free_energy_excess(rho, h_s, beta):
    """Delta F = F(rho) - F(pi_beta)."""
    return free_energy(rho, h_s, beta) - free_energy(gibbs_state(h_s, beta), h_s, beta)


def nonstationarity(rho, pi):
    return quantum_relative_entropy(rho, pi)


def entropy_splitting(rho, pi, action, tol=1e-9):
    """Split S(rho || pi) into asymmetric and symmetric parts.

    Returns ``(S(rho || G[rho]), S(G[rho] || pi))`` where G is the twirl of
    ``action``; their sum is S(rho || pi) for invariant ``pi``.
    """
    if np.abs(action.twirl(pi) - pi).max() > tol:
        raise PreconditionError("reference state is not invariant under the action")
    g = action.twirl(rho)
    return quantum_relative_entropy(rho, g), quantum_relative_entropy(g, pi)


QFI_FUNCTIONS = {
    "SLD": lambda x: (x + 1) / 2,
    "WY": lambda x: 0.25 * (np.sqrt(x) + 1) ** 2,
    "HM": lambda x: 2 * x / (x + 1),
}


def qfi(rho_t, drho, f="SLD", floor=1e-12):
    """Quantum Fisher information of the time parameter.

    Parameters
    ----------
    rho_t : (d, d) array
        State at time t.
    drho : (d, d) array
        Its time derivative L[rho_t].
    f : {"SLD", "WY", "HM"} or callable
        Standard monotone function.

    Eigenvalues of ``rho_t`` below ``floor`` are lifted to it (with
    renormalization) and an :class:`ApproximationWarning` is emitted.
    """
    fn = QFI_FUNCTIONS[f] if isinstance(f, str) else f
    p, v = _eig(rho_t)
    if p.min() < floor:
        warnings.warn("rank-deficient state lifted to eigenvalue floor", ApproximationWarning)
        p = np.maximum(p, floor)
        p /= p.sum()
    m = v.conj().T @ np.asarray(drho) @ v
    px, py = np.meshgrid(p, p, indexing="ij")
    denom = px * fn(py / px)
    return float(np.sum(np.abs(m) ** 2 / denom))


@dataclass
class MonotoneTrajectory:
    times: np.ndarray
    values: np.ndarray
    label: str = ""
    monotone: str = ""
    tag: str = ""

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValueError("times and values must be equal-length 1D arrays")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly ascending")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("trajectory values must be finite")

    def max_increase(self):
        return float(np.max(np.diff(self.values), initial=0.0))


@dataclass
class CrossingReport:
    pair: Tuple[str, str]
    crossing_times: list = field(default_factory=list)
    method: str = "linear-interpolation"
    uncertainty: float = 0.0
    tag: str = ""

    def to_dict(self):
        return {
            "pair": list(self.pair),
            "crossing_times": [float(t) for t in self.crossing_times],
            "method": self.method,
            "uncertainty": float(self.uncertainty),
            "tag": self.tag,
        }


def crossing_times(a: MonotoneTrajectory, b: MonotoneTrajectory, atol=1e-12):
    """Locate sign changes of a - b by linear interpolation.

    Differences with magnitude below ``atol`` count as zero and never start or
    end a crossing on their own.
    """
    if a.times.shape != b.times.shape or np.abs(a.times - b.times).max() > 1e-12:
        raise ValueError("trajectories must share a time grid")
    t = a.times
    d = a.values - b.values
    sign = np.where(np.abs(d) <= atol, 0, np.sign(d))
    idx = np.nonzero(sign)[0]
    taus = []
    steps = []
    for i, j in zip(idx[:-1], idx[1:]):
        if sign[i] != sign[j]:
            taus.append(float(t[i] + (t[j] - t[i]) * d[i] / (d[i] - d[j])))
            steps.append(float(t[j] - t[i]))
    return CrossingReport(
        (a.label, b.label), taus, uncertainty=max(steps, default=float(np.diff(t).max(initial=0.0))),
        tag=a.tag,
    )


def trajectory(times, states: Sequence, fn: Callable, label="", monotone="", tag=""):
    return MonotoneTrajectory(times, [fn(s) for s in states], label, monotone, tag)
