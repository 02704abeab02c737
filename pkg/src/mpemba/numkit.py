"""Dense complex linear-algebra helpers shared by every other module.

Operators are plain ``numpy`` arrays. Superoperators act on column-stacked
operators, i.e. ``vec(X) = X.reshape(-1, order="F")``.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

DIM_CAP = 2**22
EIG_FLOOR = 1e-14


class DimensionError(ValueError):
    """Raised when operator dimensions are incompatible or exceed the cap."""


class NonDiagonalizableError(np.linalg.LinAlgError):
    """Raised when an eigendecomposition does not reproduce its matrix."""


class DomainError(ValueError):
    """Raised when a scalar function is applied outside its domain."""


def kron(a, b, cap=DIM_CAP):
    """Tensor product of two matrices with a guard on the resulting size."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if max(rows, cols) > cap:
        raise DimensionError(f"tensor product dimension {max(rows, cols)} exceeds cap {cap}")
    return np.kron(a, b)


def kron_all(ops, cap=DIM_CAP):
    out = np.eye(1)
    for op in ops:
        out = kron(out, op, cap=cap)
    return out


def partial_trace(m, dims: Sequence[int], keep: Sequence[int]):
    """Trace out every tensor factor not listed in ``keep``.

    Parameters
    ----------
    m : (D, D) array
        Operator on the product space with factor dimensions ``dims``.
    dims : sequence of int
        Local dimensions, first factor most significant.
    keep : sequence of int
        Indices of the factors that survive, in any order (output keeps the
        original factor order).
    """
    m = np.asarray(m)
    dims = [int(d) for d in dims]
    n = len(dims)
    total = int(np.prod(dims))
    if m.shape != (total, total):
        raise DimensionError(f"matrix shape {m.shape} does not match dims {dims}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {n} factors")
    t = m.reshape(dims + dims)
    row = list(range(n))
    col = [n + i for i in range(n)]
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out_idx = [row[k] for k in keep] + [col[k] for k in keep]
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return np.einsum(t, row + col, out_idx).reshape(dk, dk)


def vec(x):
    """Column-stacking vectorization."""
    return np.asarray(x).reshape(-1, order="F")


def unvec(v, d=None):
    v = np.asarray(v)
    if d is None:
        d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise DimensionError(f"vector of length {v.size} is not a square operator")
    return v.reshape(d, d, order="F")


def vectorize_superop(left, right):
    """Matrix of the map ``X -> left @ X @ right^dagger`` on column-stacked X."""
    left = np.atleast_2d(left)
    right = np.atleast_2d(right)
    if left.shape[0] != left.shape[1] or right.shape[0] != right.shape[1]:
        raise DimensionError("superoperator factors must be square")
    if left.shape != right.shape:
        raise DimensionError(f"incompatible shapes {left.shape} and {right.shape}")
    return kron(right.conj(), left)


def apply_superop(s, x):
    x = np.asarray(x)
    return unvec(s @ vec(x), x.shape[0])


def trace_norm(m):
    """Sum of singular values."""
    return float(np.sum(np.linalg.svd(np.asarray(m), compute_uv=False)))


def hermitian_part(m):
    return 0.5 * (m + m.conj().T)


@dataclass(frozen=True)
class GeneratorSpectrum:
    """Eigenvalues with biorthonormal right and left eigenvectors.

    Column ``k`` of ``right`` is the right eigenvector of ``eigenvalues[k]`` and
    ``left[:, k].conj() @ right[:, l] == delta_kl``. When ``op_dim`` is set the
    vectors are column-stacked ``op_dim x op_dim`` operators.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    op_dim: Optional[int] = None
    residual: float = 0.0

    def __len__(self):
        return len(self.eigenvalues)

    def right_mode(self, k):
        v = self.right[:, k]
        return unvec(v, self.op_dim) if self.op_dim else v

    def left_mode(self, k):
        v = self.left[:, k]
        return unvec(v, self.op_dim) if self.op_dim else v

    @property
    def right_modes(self):
        return [self.right_mode(k) for k in range(len(self))]

    @property
    def left_modes(self):
        return [self.left_mode(k) for k in range(len(self))]

    def overlaps(self, x):
        """Coefficients a_k = <l_k, x> so that x = sum_k a_k r_k."""
        return self.left.conj().T @ (vec(x) if self.op_dim else np.asarray(x))

    def rescale(self, scales):
        """Multiply right modes by ``scales`` and adjust left modes to stay dual."""
        scales = np.asarray(scales, dtype=complex)
        return GeneratorSpectrum(
            self.eigenvalues,
            self.right * scales[None, :],
            self.left / scales.conj()[None, :],
            self.op_dim,
            self.residual,
        )

    def reorder(self, order):
        order = np.asarray(order)
        return GeneratorSpectrum(
            self.eigenvalues[order], self.right[:, order], self.left[:, order], self.op_dim, self.residual
        )

    def matrix(self):
        return (self.right * self.eigenvalues[None, :]) @ self.left.conj().T

    def propagate(self, x, t):
        """exp(t M) x through the spectral expansion."""
        a = self.overlaps(x)
        out = self.right @ (a * np.exp(self.eigenvalues * t))
        return unvec(out, self.op_dim) if self.op_dim else out


def sort_order(eigenvalues, decimals=9):
    """Descending real part, then descending imaginary part, then index."""
    w = np.asarray(eigenvalues)
    re = np.round(w.real, decimals)
    im = np.round(w.imag, decimals)
    return np.lexsort((np.arange(len(w)), -im, -re))


def eig_general(m, op_dim=None, tol=1e-6):
    """Sorted eigendecomposition of a diagonalizable matrix.

    Raises
    ------
    NonDiagonalizableError
        If the relative reconstruction residual exceeds ``tol``.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError("eig_general needs a square matrix")
    w, r = scipy.linalg.eig(m)
    order = sort_order(w)
    w = w[order]
    r = r[:, order]
    try:
        left = np.linalg.inv(r).conj().T
    except np.linalg.LinAlgError as exc:
        raise NonDiagonalizableError("eigenvector matrix is singular") from exc
    recon = (r * w[None, :]) @ left.conj().T
    scale = max(1.0, np.linalg.norm(m))
    residual = float(np.linalg.norm(recon - m) / scale)
    if not np.isfinite(residual) or residual > tol:
        raise NonDiagonalizableError(f"reconstruction residual {residual:.3e} exceeds {tol:.0e}")
    return GeneratorSpectrum(w, r, left, op_dim, residual)


def herm_matrix_function(h, f: Callable, singular=False, floor=EIG_FLOOR):
    """Apply ``f`` to the eigenvalues of a Hermitian matrix.

    For ``singular=True`` (logarithms, negative powers) eigenvalues at or below
    ``floor`` times the largest one raise :class:`DomainError`.
    """
    h = np.asarray(h)
    w, v = np.linalg.eigh(hermitian_part(h))
    if singular:
        cut = floor * max(np.max(np.abs(w)), np.finfo(float).tiny)
        if np.any(w <= cut):
            raise DomainError(f"eigenvalue {w.min():.3e} below floor for singular function")
    fw = np.asarray(f(w))
    return (v * fw[None, :]) @ v.conj().T


def is_density_matrix(rho, tol=1e-10):
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    if np.abs(rho - rho.conj().T).max() > tol:
        return False
    if abs(np.trace(rho) - 1) > tol:
        return False
    return np.linalg.eigvalsh(hermitian_part(rho)).min() >= -tol


def check_density_matrix(rho, tol=1e-10):
    if not is_density_matrix(rho, tol):
        raise ValueError("input is not a density matrix")
    return np.asarray(rho)


def pure_state(psi):
    psi = np.asarray(psi).reshape(-1)
    return np.outer(psi, psi.conj())


def random_density_matrix(d, rng, rank=None):
    """Induced-measure random state from a Ginibre matrix."""
    rank = d if rank is None else rank
    x = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


def random_unitary(d, rng):
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph[None, :]


def spin_operators(j):
    """Spin-j matrices (S_x, S_y, S_z) in the basis m = j, j-1, ..., -j."""
    d = int(round(2 * j + 1))
    m = j - np.arange(d)
    sp = np.zeros((d, d), dtype=complex)
    for k in range(1, d):
        sp[k - 1, k] = np.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    sx = 0.5 * (sp + sp.conj().T)
    sy = -0.5j * (sp - sp.conj().T)
    sz = np.diag(m).astype(complex)
    return sx, sy, sz


SX, SY, SZ = (0.5 * np.array([[0, 1], [1, 0]], dtype=complex),
              0.5 * np.array([[0, -1j], [1j, 0]], dtype=complex),
              0.5 * np.array([[1, 0], [0, -1]], dtype=complex))


def site_operator(op, site, n):
    """Embed a single-qubit operator on ``site`` (0 = most significant) of n qubits."""
    return kron_all([op if k == site else np.eye(2) for k in range(n)])


def collective_spin(n):
    """Total spin components summed over n qubits (s = sigma / 2)."""
    return tuple(sum(site_operator(s, k, n) for k in range(n)) for s in (SX, SY, SZ))
