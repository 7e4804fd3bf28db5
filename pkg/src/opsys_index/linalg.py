"""Dense complex-Hermitian linear algebra.

Conventions shared by every module in the package:

* Hermitian matrices are plain ``numpy`` complex arrays.
* The pairing between Hermitian matrices is the real inner product
  ``<A, B> = tr(AB)``.
* Kronecker products are lexicographic with the first factor outermost,
  so ``kron(A, B)[(i, k), (j, l)] = A[i, j] * B[k, l]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-12
DEFLATION_TOL = 1e-10


class DimensionError(ValueError):
    """Raised when matrix dimensions do not fit together."""


class NotHermitianError(ValueError):
    """Raised when an input matrix is not Hermitian within tolerance."""


def as_hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``a`` as a complex square array, checking Hermitian symmetry.

    The tolerance is relative to ``max(1, max|a_ij|)``.  The returned
    array is exactly Hermitian (the anti-Hermitian round-off is removed).
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionError(f"expected a non-empty square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max()))
    if np.abs(a - a.conj().T).max() > tol * scale:
        raise NotHermitianError("matrix is not Hermitian within tolerance")
    return (a + a.conj().T) / 2


def hs_inner(a: np.ndarray, b: np.ndarray) -> float:
    """Real Hilbert-Schmidt pairing ``tr(AB)`` of two Hermitian matrices."""
    return float(np.real(np.vdot(a, b)))


def matrix_unit(n: int, i: int, j: int) -> np.ndarray:
    e = np.zeros((n, n), dtype=complex)
    e[i, j] = 1.0
    return e


def hermitian_units(n: int) -> np.ndarray:
    """Orthonormal Hermitian basis of ``M_n`` built from matrix units.

    Ordered as ``E_ii`` first, then for every pair ``i < j`` the pair
    ``(E_ij + E_ji)/sqrt2`` and ``i(E_ij - E_ji)/sqrt2``.  Returns an array
    of shape ``(n*n, n, n)``.
    """
    out = np.zeros((n * n, n, n), dtype=complex)
    k = 0
    for i in range(n):
        out[k, i, i] = 1.0
        k += 1
    s = 1 / np.sqrt(2)
    for i in range(n):
        for j in range(i + 1, n):
            out[k, i, j] = out[k, j, i] = s
            out[k + 1, i, j] = 1j * s
            out[k + 1, j, i] = -1j * s
            k += 2
    return out


def max_entangled(n: int) -> np.ndarray:
    """``Delta_n = sum_ij E_ij (x) E_ij``, the Choi matrix of the identity."""
    omega = np.eye(n, dtype=complex).reshape(n * n)
    return np.outer(omega, omega)


def all_ones(n: int) -> np.ndarray:
    return np.ones((n, n), dtype=complex)


@dataclass(frozen=True)
class HermitianBasis:
    """Hilbert-Schmidt orthonormal family of Hermitian ``n x n`` matrices.

    ``elements`` has shape ``(k, n, n)``; ``k`` may be zero.
    """

    ambient_dim: int
    elements: np.ndarray

    def __post_init__(self):
        els = np.asarray(self.elements, dtype=complex).reshape(-1, self.ambient_dim, self.ambient_dim)
        els.setflags(write=False)
        object.__setattr__(self, "elements", els)

    def __len__(self) -> int:
        return self.elements.shape[0]

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, k):
        return self.elements[k]

    def gram(self) -> np.ndarray:
        flat = self.elements.reshape(len(self), self.ambient_dim ** 2)
        return np.real(flat.conj() @ flat.T)

    def coordinates(self, x: np.ndarray) -> np.ndarray:
        """Real coordinates ``tr(G_i x)`` of ``x`` against the basis."""
        flat = self.elements.reshape(len(self), self.ambient_dim ** 2)
        return np.real(flat.conj() @ np.asarray(x, dtype=complex).reshape(-1))

    def project(self, x: np.ndarray) -> np.ndarray:
        """Orthogonal projection of a Hermitian ``x`` onto the real span."""
        c = self.coordinates(x)
        return np.tensordot(c, self.elements, axes=1) if len(self) else np.zeros_like(x, dtype=complex)


def _clean(a: np.ndarray, tol: float = 1e-15) -> np.ndarray:
    """Zero entries that are round-off, keeping structured bases sparse."""
    a = a.copy()
    a.real[np.abs(a.real) < tol] = 0.0
    a.imag[np.abs(a.imag) < tol] = 0.0
    return a


def orthonormalize(spanning_set, tol: float = DEFLATION_TOL) -> HermitianBasis:
    """Orthonormal Hermitian basis for the real span of ``spanning_set``.

    Modified Gram-Schmidt with one re-orthogonalisation pass; vectors whose
    residual norm falls below ``tol`` are dropped.  Input order is kept, so
    an already orthonormal input comes back unchanged (and stays sparse).
    """
    mats = [as_hermitian(m, tol=1e-9) for m in spanning_set]
    if not mats:
        raise DimensionError("orthonormalize needs at least one matrix to fix the dimension")
    n = mats[0].shape[0]
    if any(m.shape != (n, n) for m in mats):
        raise DimensionError("all spanning matrices must share one dimension")
    basis: list[np.ndarray] = []
    for m in mats:
        v = m.copy()
        for _ in range(2):
            for g in basis:
                v = v - hs_inner(g, v) * g
        norm = np.sqrt(hs_inner(v, v))
        if norm < tol:
            continue
        basis.append(_clean(v / norm))
    return HermitianBasis(n, np.array(basis) if basis else np.zeros((0, n, n), dtype=complex))


def eig_hermitian(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition ``A = V diag(w) V*`` with ``w`` ascending."""
    return np.linalg.eigh(as_hermitian(a, tol=1e-9))


def lambda_min(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((a + a.conj().T) / 2)[0])


def lambda_max(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((a + a.conj().T) / 2)[-1])


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_trace(x: np.ndarray, side: str, n: int, m: int) -> np.ndarray:
    """Partial trace on ``M_n (x) M_m``.

    ``side="first"`` returns ``(tr (x) id)(X)`` in ``M_m``;
    ``side="second"`` returns ``(id (x) tr)(X)`` in ``M_n``.
    """
    x = np.asarray(x, dtype=complex)
    if x.shape != (n * m, n * m):
        raise DimensionError(f"shape {x.shape} does not factor as ({n}*{m})^2")
    t = x.reshape(n, m, n, m)
    if side == "first":
        return np.einsum("iaib->ab", t)
    if side == "second":
        return np.einsum("aibi->ab", t)
    raise ValueError(f"side must be 'first' or 'second', not {side!r}")


def shuffle(z: np.ndarray, n: int, k: int) -> np.ndarray:
    """Shuffle isomorphism ``M_n(x)M_n(x)M_k(x)M_k -> M_nk (x) M_nk``.

    On elementary tensors ``A(x)B(x)C(x)D -> A(x)C(x)B(x)D``.
    """
    z = np.asarray(z, dtype=complex)
    d = n * n * k * k
    if z.shape != (d, d):
        raise DimensionError(f"expected shape ({d}, {d}), got {z.shape}")
    t = z.reshape(n, n, k, k, n, n, k, k)
    return t.transpose(0, 2, 1, 3, 4, 6, 5, 7).reshape(d, d)


def swap_factors(x: np.ndarray, n: int, m: int) -> np.ndarray:
    """Conjugate ``X`` on ``M_n (x) M_m`` by the tensor flip, landing in ``M_m (x) M_n``."""
    return np.asarray(x).reshape(n, m, n, m).transpose(1, 0, 3, 2).reshape(n * m, n * m)


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (g + g.conj().T) / 2


def random_psd(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    r = n if rank is None else rank
    g = rng.normal(size=(n, r)) + 1j * rng.normal(size=(n, r))
    return g @ g.conj().T
