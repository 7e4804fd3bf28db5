"""Linear maps on matrices, stored by their Choi matrices.

A map ``Phi: M_n -> M_m`` is kept as ``Ch(Phi) = sum_ij E_ij (x) Phi(E_ij)``,
a matrix on ``M_n (x) M_m``.  Every index program in the package is affine
in this matrix, which is why no Kraus representation is carried around.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linalg import DimensionError, lambda_min, matrix_unit, max_entangled

CP_TOL = 1e-9


class NotCompletelyPositiveError(ValueError):
    pass


@dataclass(frozen=True)
class LinearMapOnMatrices:
    in_dim: int
    out_dim: int
    choi: np.ndarray

    def __post_init__(self):
        d = self.in_dim * self.out_dim
        c = np.asarray(self.choi, dtype=complex)
        if c.shape != (d, d):
            raise DimensionError(f"Choi matrix of a map M_{self.in_dim} -> M_{self.out_dim} must be {d}x{d}")
        object.__setattr__(self, "choi", c)

    def __call__(self, x):
        return apply(self, x)

    def __add__(self, other: "LinearMapOnMatrices") -> "LinearMapOnMatrices":
        return LinearMapOnMatrices(self.in_dim, self.out_dim, self.choi + other.choi)

    def __sub__(self, other: "LinearMapOnMatrices") -> "LinearMapOnMatrices":
        return LinearMapOnMatrices(self.in_dim, self.out_dim, self.choi - other.choi)

    def __mul__(self, s: float) -> "LinearMapOnMatrices":
        return LinearMapOnMatrices(self.in_dim, self.out_dim, s * self.choi)

    __rmul__ = __mul__


def choi_of_map(action: Callable[[np.ndarray], np.ndarray], n: int, m: int) -> LinearMapOnMatrices:
    """Build ``sum_ij E_ij (x) action(E_ij)``."""
    choi = np.zeros((n * m, n * m), dtype=complex)
    for i in range(n):
        for j in range(n):
            img = np.asarray(action(matrix_unit(n, i, j)), dtype=complex)
            if img.shape != (m, m):
                raise DimensionError(f"image of E_{i}{j} has shape {img.shape}, expected ({m}, {m})")
            choi[i * m:(i + 1) * m, j * m:(j + 1) * m] = img
    return LinearMapOnMatrices(n, m, choi)


def apply(phi: LinearMapOnMatrices, x) -> np.ndarray:
    """``Phi(X) = (tr (x) id)((X^T (x) I) Ch(Phi))``."""
    x = np.asarray(x, dtype=complex)
    n, m = phi.in_dim, phi.out_dim
    if x.shape != (n, n):
        raise DimensionError(f"map acts on M_{n}, got shape {x.shape}")
    return np.einsum("ij,iajb->ab", x, phi.choi.reshape(n, m, n, m))


def is_cp(phi: LinearMapOnMatrices, tol: float = CP_TOL) -> bool:
    c = phi.choi
    return lambda_min(c) >= -tol * (1 + np.linalg.norm(c, 2))


def identity_map(n: int) -> LinearMapOnMatrices:
    return LinearMapOnMatrices(n, n, max_entangled(n))


def trace_map(n: int) -> LinearMapOnMatrices:
    """``X -> tr(X) I_n``."""
    return LinearMapOnMatrices(n, n, np.eye(n * n, dtype=complex))


def transpose_map(n: int) -> LinearMapOnMatrices:
    return choi_of_map(lambda e: e.T, n, n)


def depolarizing_gap_map(n: int, c: float) -> LinearMapOnMatrices:
    """``T_n: x -> c * tau_n(x) 1 - x`` with ``tau_n`` the normalised trace."""
    return trace_map(n) * (c / n) - identity_map(n)


def schur_multiplier(a) -> LinearMapOnMatrices:
    """Entrywise multiplier ``X -> A o X``; Choi matrix ``sum A_ij E_ij (x) E_ij``."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    choi = np.zeros((n * n, n * n), dtype=complex)
    idx = np.arange(n) * (n + 1)
    choi[np.ix_(idx, idx)] = a
    return LinearMapOnMatrices(n, n, choi)


def dual_map(phi: LinearMapOnMatrices) -> LinearMapOnMatrices:
    """Trace dual ``Phi^dagger`` with ``tr(Phi(X) Y) = tr(X Phi^dagger(Y))``."""
    n, m = phi.in_dim, phi.out_dim
    c = phi.choi.reshape(n, m, n, m)
    # D[k, p, l, q] = C[q, l, p, k]
    d = c.transpose(3, 2, 1, 0).reshape(m * n, m * n)
    return LinearMapOnMatrices(m, n, d)


def choi_expectation_matrix(phi: LinearMapOnMatrices, tol: float = 1e-8) -> np.ndarray:
    """Matrix ``A_ij = Phi(E_ij)_ij`` of a CP map ``Phi: M_n -> M_n``.

    For CP ``Phi`` this matrix is positive semidefinite with diagonal
    bounded by ``||Phi(I)||``.
    """
    if phi.in_dim != phi.out_dim:
        raise DimensionError("diagonal compression needs a map M_n -> M_n")
    if not is_cp(phi, tol):
        raise NotCompletelyPositiveError("map is not completely positive")
    n = phi.in_dim
    return phi.choi.reshape(n, n, n, n)[np.arange(n)[:, None], np.arange(n)[:, None],
                                        np.arange(n)[None, :], np.arange(n)[None, :]]


def map_pairing_matrix(a: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Matrix ``K`` with ``tr(Phi(A) H) = <Ch(Phi), K>`` for every map ``Phi``.

    ``K = A^T (x) H``; Hermitian whenever ``A`` and ``H`` are.
    """
    return np.kron(np.asarray(a, dtype=complex).T, np.asarray(h, dtype=complex))
