"""Matricial operator systems, kernels and graphs.

A matricial system is a unital, *-closed subspace ``S`` of ``M_n``.  It is
stored through an orthonormal Hermitian basis of its Hermitian part; since
the subspace is *-closed that real span determines it completely.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    DimensionError,
    HermitianBasis,
    hermitian_units,
    hs_inner,
    orthonormalize,
    random_hermitian,
)

MEMBERSHIP_TOL = 1e-9


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0 .. vertex_count-1``."""

    vertex_count: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        n = self.vertex_count
        if n < 1:
            raise ValueError("a graph needs at least one vertex")
        norm = set()
        for e in self.edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) out of range for {n} vertices")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(norm))

    def adjacent(self, i: int, j: int) -> bool:
        """Adjacency in the reflexive sense: every vertex is adjacent to itself."""
        return i == j or (min(i, j), max(i, j)) in self.edges

    def complement(self) -> "Graph":
        n = self.vertex_count
        return Graph(n, frozenset(p for p in itertools.combinations(range(n), 2) if p not in self.edges))

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.vertex_count,) * 2)
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1.0
        return a

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def induced(self, vertices) -> "Graph":
        vs = list(vertices)
        pos = {v: k for k, v in enumerate(vs)}
        return Graph(len(vs), frozenset((pos[i], pos[j]) for i, j in self.edges if i in pos and j in pos))

    def is_subgraph_of(self, other: "Graph") -> bool:
        return self.vertex_count == other.vertex_count and self.edges <= other.edges

    # small named graphs

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls(n, frozenset(itertools.combinations(range(n), 2)))

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n, frozenset())

    @classmethod
    def path(cls, n: int) -> "Graph":
        return cls(n, frozenset((i, i + 1) for i in range(n - 1)))

    @classmethod
    def cycle(cls, n: int) -> "Graph":
        return cls(n, frozenset((i, (i + 1) % n) for i in range(n)))

    @classmethod
    def petersen(cls) -> "Graph":
        outer = [(i, (i + 1) % 5) for i in range(5)]
        spokes = [(i, i + 5) for i in range(5)]
        inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
        return cls(10, frozenset(outer + spokes + inner))


class _Subspace:
    """Common behaviour of systems and kernels: a real span of Hermitian matrices."""

    def __init__(self, basis: HermitianBasis):
        self.basis = basis

    @property
    def ambient_dim(self) -> int:
        return self.basis.ambient_dim

    @property
    def dim(self) -> int:
        return len(self.basis)

    def project(self, x) -> np.ndarray:
        return self.basis.project(np.asarray(x, dtype=complex))

    def residual(self, x) -> float:
        x = np.asarray(x, dtype=complex)
        return float(np.linalg.norm(x - self.project(x)))

    def contains_unit(self) -> bool:
        eye = np.eye(self.ambient_dim)
        return self.residual(eye) <= MEMBERSHIP_TOL * np.sqrt(self.ambient_dim)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(ambient_dim={self.ambient_dim}, dim={self.dim})"


class MatricialSystem(_Subspace):
    """Unital *-closed subspace of ``M_n``."""

    def __init__(self, basis: HermitianBasis, check: bool = True):
        super().__init__(basis)
        if check and not self.contains_unit():
            raise ValueError("a matricial system must contain the identity")

    @classmethod
    def from_spanning_set(cls, mats, include_unit: bool = True, n: int | None = None) -> "MatricialSystem":
        mats = [np.asarray(m, dtype=complex) for m in mats]
        if include_unit:
            n = mats[0].shape[0] if mats else n
            if n is None:
                raise ValueError("ambient dimension needed for an empty spanning set")
            mats = [np.eye(n, dtype=complex)] + mats
        return cls(orthonormalize(mats))


class KernelSpace(_Subspace):
    """*-closed subspace of ``M_n`` that does not contain the identity."""

    def __init__(self, basis: HermitianBasis):
        super().__init__(basis)
        n = self.ambient_dim
        eye = np.eye(n)
        if self.dim and np.linalg.norm(self.project(eye)) ** 2 > n - 1e-6:
            raise ValueError("a kernel must not contain the identity")

    @property
    def unit_free(self) -> bool:
        return True


def scalar_system(n: int) -> MatricialSystem:
    """``C I_n``."""
    return MatricialSystem(HermitianBasis(n, [np.eye(n, dtype=complex) / np.sqrt(n)]))


def full_system(n: int) -> MatricialSystem:
    """``M_n`` itself."""
    return MatricialSystem(HermitianBasis(n, hermitian_units(n)))


def diagonal_system(n: int) -> MatricialSystem:
    """``D_n``, the diagonal matrices."""
    return MatricialSystem(HermitianBasis(n, hermitian_units(n)[:n]))


def _graph_units(g: Graph, pairs) -> list[np.ndarray]:
    n = g.vertex_count
    s = 1 / np.sqrt(2)
    out = []
    for i, j in pairs:
        a = np.zeros((n, n), dtype=complex)
        a[i, j] = a[j, i] = s
        b = np.zeros((n, n), dtype=complex)
        b[i, j], b[j, i] = 1j * s, -1j * s
        out += [a, b]
    return out


def system_from_graph(g: Graph, kind: str = "S_gamma") -> MatricialSystem:
    """Matricial systems attached to a graph.

    ``S_gamma``: matrices supported on the reflexive adjacency relation.
    ``E_n``: matrices with constant diagonal.  ``E_gamma``: ``E_n`` meet
    ``S_gamma``.  ``D_n``: diagonal matrices (``S_gamma`` of the edgeless
    graph).
    """
    n = g.vertex_count
    eye = [np.eye(n, dtype=complex) / np.sqrt(n)]
    diag = list(hermitian_units(n)[:n])
    all_pairs = list(itertools.combinations(range(n), 2))
    if kind == "S_gamma":
        mats = diag + _graph_units(g, g.sorted_edges())
    elif kind == "E_n":
        mats = eye + _graph_units(g, all_pairs)
    elif kind == "E_gamma":
        mats = eye + _graph_units(g, g.sorted_edges())
    elif kind == "D_n":
        mats = diag
    else:
        raise ValueError(f"unknown graph system kind {kind!r}")
    return MatricialSystem(HermitianBasis(n, np.array(mats)))


def perp(space: _Subspace):
    """Orthogonal complement under ``tr(AB)`` inside the Hermitian part of ``M_n``.

    The complement of a system is a kernel (orthogonal to ``I`` means
    trace zero).  The complement of a kernel is returned as a system when
    it contains the identity and as a kernel otherwise.
    """
    n = space.ambient_dim
    cands = [u - space.project(u) for u in hermitian_units(n)]
    cands = [c for c in cands if np.linalg.norm(c) > 1e-10]
    basis = orthonormalize(cands) if cands else HermitianBasis(n, np.zeros((0, n, n)))
    if len(basis) + space.dim != n * n:
        raise ArithmeticError("complement dimension mismatch; basis is not orthonormal")
    probe = _Subspace(basis)
    if probe.contains_unit():
        return MatricialSystem(basis)
    return KernelSpace(basis)


def contains(space: _Subspace, x, tol: float = MEMBERSHIP_TOL) -> bool:
    """Membership of a Hermitian matrix by projection residual."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (space.ambient_dim,) * 2:
        raise DimensionError("matrix and system live in different M_n")
    if np.abs(x - x.conj().T).max() > 1e-12 * (1 + np.abs(x).max()):
        # *-closed span: check Hermitian and anti-Hermitian parts separately
        h, k = (x + x.conj().T) / 2, (x - x.conj().T) / 2j
        return contains(space, h, tol) and contains(space, k, tol)
    return space.residual(x) <= tol * (1 + np.linalg.norm(x))


def is_subspace_of(small: _Subspace, big: _Subspace, tol: float = MEMBERSHIP_TOL) -> bool:
    return small.ambient_dim == big.ambient_dim and all(big.residual(g) <= tol for g in small.basis)


def same_span(a: _Subspace, b: _Subspace, tol: float = MEMBERSHIP_TOL) -> bool:
    return a.dim == b.dim and is_subspace_of(a, b, tol) and is_subspace_of(b, a, tol)


def tensor_min(s: MatricialSystem, t: MatricialSystem) -> MatricialSystem:
    """Minimal tensor product, realised as ``span{s (x) t}`` inside ``M_nk``.

    Kronecker products of orthonormal Hermitian bases are again orthonormal
    and Hermitian, so no re-orthogonalisation is needed.
    """
    els = np.array([np.kron(a, b) for a in s.basis for b in t.basis])
    return MatricialSystem(HermitianBasis(s.ambient_dim * t.ambient_dim, els))


def direct_sum(s: MatricialSystem, t: MatricialSystem) -> MatricialSystem:
    """Block-diagonal ``S (+) T`` inside ``M_{n+k}``."""
    n, k = s.ambient_dim, t.ambient_dim
    els = []
    for a in s.basis:
        z = np.zeros((n + k, n + k), dtype=complex)
        z[:n, :n] = a
        els.append(z)
    for b in t.basis:
        z = np.zeros((n + k, n + k), dtype=complex)
        z[n:, n:] = b
        els.append(z)
    return MatricialSystem(HermitianBasis(n + k, np.array(els)))


def span_of(mats, n: int | None = None):
    """Subspace spanned by Hermitian matrices: a system if it holds ``I``, else a kernel."""
    mats = list(mats)
    if not mats:
        return KernelSpace(HermitianBasis(n, np.zeros((0, n, n))))
    basis = orthonormalize(mats)
    probe = _Subspace(basis)
    return MatricialSystem(basis) if probe.contains_unit() else KernelSpace(basis)


def random_system(n: int, extra: int, rng: np.random.Generator) -> MatricialSystem:
    """``span{I, H_1, ..., H_extra}`` with Gaussian Hermitian ``H_i``."""
    return MatricialSystem.from_spanning_set([random_hermitian(n, rng) for _ in range(extra)], n=n)


def inner_products(a: _Subspace, b: _Subspace) -> np.ndarray:
    return np.array([[hs_inner(x, y) for y in b.basis] for x in a.basis])
