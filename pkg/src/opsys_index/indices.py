"""CP-index programs for matricial systems.

Every program here is an SDP over a Choi matrix on ``M_n (x) M_n``.
Subspace memberships are imposed as ``<output, g> = 0`` against an
orthonormal basis ``g`` of the relevant orthogonal complement, so the
presolve step only ever sees well-scaled rows.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import sdp
from .choi import LinearMapOnMatrices, apply, is_cp
from .linalg import hermitian_units, lambda_min, max_entangled
from .systems import (
    MEMBERSHIP_TOL,
    KernelSpace,
    MatricialSystem,
    contains,
    is_subspace_of,
    perp,
    scalar_system,
    tensor_min,
)

logger = logging.getLogger(__name__)

MAX_BLOCK_DIM = 100


class SizeGuardError(ValueError):
    """The SDP block for a request would exceed the configured cap."""


@dataclass
class IndexResult:
    """Outcome of an index program.

    Attributes
    ----------
    value : float
        The index itself.
    reciprocal : float
        ``1 / value``; for the primal-style programs this is the optimal
        ``lambda``, for the dual-style programs the optimal ``tr X``.
    primal_certificate, dual_certificate : dict
        Optimal matrices of the program and the solver's dual data.
    gap : float
        Absolute primal-dual gap reported by the solver.
    """

    value: float
    reciprocal: float
    primal_certificate: dict
    dual_certificate: dict
    gap: float
    status: str = sdp.OPTIMAL
    solution: sdp.SdpSolution | None = field(default=None, repr=False)


def _guard(dim: int, cap: int) -> None:
    if dim > cap:
        raise SizeGuardError(f"SDP block dimension {dim} exceeds the cap {cap}")


def _delta_pairing(a: np.ndarray, b: np.ndarray) -> float:
    """``<Delta_n, A (x) B> = tr(A^T B)``."""
    return float(np.real(np.sum(a * b)))


def _solve(problem: sdp.SdpProblem, tol: float, max_iter: int, what: str) -> sdp.SdpSolution:
    sol = sdp.solve(problem, tol=tol, max_iter=max_iter)
    if sol.status != sdp.OPTIMAL:
        r = sol.residuals
        raise sdp.SdpError(
            f"{what}: solver returned {sol.status} (primal {r.primal_feas:.2e}, dual {r.dual_feas:.2e}, "
            f"gap {r.gap:.2e})", sol)
    return sol


def _dual_cert(sol: sdp.SdpSolution) -> dict:
    return {"y": sol.dual_vector, "Z": sol.dual_blocks}


def index_primal_problem(s: MatricialSystem, trace_side: str = "first") -> sdp.SdpProblem:
    """Compile ``max lambda`` over ``X >= 0`` with ``pt(X) = (1 - lambda) I``
    and ``X + lambda Delta in M_n (x) S``.

    ``trace_side="first"`` traces out the first tensor factor (the index
    program); ``"second"`` traces out the second one (the quantum theta
    program).  The free variable ``lambda`` is minimised with sign -1.
    """
    n = s.ambient_dim
    units = hermitian_units(n)
    eye = np.eye(n)
    bld = sdp.SdpBuilder([n * n], n_free=1)
    bld.set_free_objective(0, -1.0)
    for h in units:
        lhs = np.kron(eye, h) if trace_side == "first" else np.kron(h, eye)
        tr_h = float(np.real(np.trace(h)))
        bld.add_constraint({0: lhs}, tr_h, {0: tr_h})
    comp = perp(s)
    for h in units:
        for g in comp.basis:
            k = np.kron(h, g)
            bld.add_constraint({0: k}, 0.0, {0: _delta_pairing(h, g)})
    return bld.build()


def cp_index_primal(s: MatricialSystem, tol: float = 1e-8, max_iter: int = 500,
                    max_block: int = MAX_BLOCK_DIM) -> IndexResult:
    """``Ind_CP(M_n : S)`` from the primal program.

    Maximises ``lambda`` subject to ``(tr (x) id)(X) = (1 - lambda) I_n``,
    ``X + lambda Delta_n in M_n (x) S`` and ``X >= 0``; here
    ``X = Ch(Phi - lambda id)`` for a unital CP ``Phi`` with range in ``S``.

    Returns
    -------
    IndexResult
        ``value = 1 / lambda*``; the primal certificate holds ``X`` and
        the Choi matrix of ``Phi / lambda``.
    """
    n = s.ambient_dim
    _guard(n * n, max_block)
    sol = _solve(index_primal_problem(s, "first"), tol, max_iter, "cp_index_primal")
    lam = float(sol.free_values[0])
    x = sol.primal_blocks[0]
    phi = LinearMapOnMatrices(n, n, (x + lam * max_entangled(n)) / lam)
    return IndexResult(1.0 / lam, lam, {"X": x, "lambda": lam, "map": phi}, _dual_cert(sol),
                       sol.residuals.gap, sol.status, sol)


def index_dual_problem(s: MatricialSystem, side: str = "first") -> sdp.SdpProblem:
    """Compile ``min tr X`` over ``W = I (x) X + Y >= 0`` with ``<W, Delta> = 1``.

    ``side="first"`` takes ``Y in M_n (x) S^perp`` (dual of the index
    program); ``"second"`` takes ``Y in S^perp (x) M_n`` (the quantum
    theta program).  ``W`` is the PSD block; ``X`` is carried as ``n^2``
    free real coordinates in the Hermitian unit basis.
    """
    n = s.ambient_dim
    units = hermitian_units(n)
    traces = np.real(np.einsum("kii->k", units))
    bld = sdp.SdpBuilder([n * n], n_free=n * n)
    for c, t in enumerate(traces):
        if t:
            bld.set_free_objective(c, t)
    for a, h in enumerate(units):
        tr_h = traces[a]
        for g in s.basis:
            # <W - I (x) X, h (x) g> = 0, with <I (x) X, h (x) g> = tr(h) tr(X g)
            if side == "first":
                k = np.kron(h, g)
                coef = tr_h * np.real(np.einsum("kij,ji->k", units, g)) if tr_h else None
            else:
                k = np.kron(g, h)
                tr_g = float(np.real(np.trace(g)))
                coef = tr_g * np.real(np.einsum("kij,ji->k", units, h)) if tr_g else None
            free = {} if coef is None else {c: -v for c, v in enumerate(coef) if abs(v) > 1e-15}
            bld.add_constraint({0: k}, 0.0, free)
    bld.add_constraint({0: max_entangled(n)}, 1.0)
    return bld.build()


def cp_index_dual(s: MatricialSystem, tol: float = 1e-8, max_iter: int = 500,
                  max_block: int = MAX_BLOCK_DIM) -> IndexResult:
    """``Ind_CP(M_n : S)`` from the dual program.

    Minimises ``tr X`` subject to ``Y in M_n (x) S^perp``,
    ``<I_n (x) X + Y, Delta_n> = 1`` and ``I_n (x) X + Y >= 0``.

    Returns
    -------
    IndexResult
        ``value = 1 / tr(X*)``.
    """
    n = s.ambient_dim
    _guard(n * n, max_block)
    sol = _solve(index_dual_problem(s, "first"), tol, max_iter, "cp_index_dual")
    units = hermitian_units(n)
    x = np.tensordot(sol.free_values, units, axes=1)
    w = sol.primal_blocks[0]
    trx = float(np.real(np.trace(x)))
    return IndexResult(1.0 / trx, trx, {"X": x, "W": w, "Y": w - np.kron(np.eye(n), x)}, _dual_cert(sol),
                       sol.residuals.gap, sol.status, sol)


def relative_problem(s: MatricialSystem, s0: MatricialSystem) -> sdp.SdpProblem:
    """Compile ``min mu`` over ``Ch(Psi) >= 0`` with ``Psi(x) + x in S_0`` for
    ``x`` in a basis of ``S`` and ``Psi(I) = (mu - 1) I``."""
    n = s.ambient_dim
    units = hermitian_units(n)
    bld = sdp.SdpBuilder([n * n], n_free=1)
    bld.set_free_objective(0, 1.0)
    comp0 = perp(s0)
    for x in s.basis:
        xt = x.T
        for g in comp0.basis:
            # tr(Psi(x) g) = <Ch(Psi), x^T (x) g>
            bld.add_constraint({0: np.kron(xt, g)}, -float(np.real(np.vdot(x, g))))
    eye = np.eye(n)
    for h in units:
        tr_h = float(np.real(np.trace(h)))
        bld.add_constraint({0: np.kron(eye, h)}, -tr_h, {0: -tr_h})
    return bld.build()


def cp_index_relative(s: MatricialSystem, s0: MatricialSystem, tol: float = 1e-8, max_iter: int = 500,
                      max_block: int = MAX_BLOCK_DIM) -> IndexResult:
    """``Ind_CP(S : S_0)`` through a CP extension to ``M_n``.

    A map ``phi`` on ``S`` with ``phi - id`` CP extends (Arveson) to
    ``id + Psi`` with ``Psi`` CP on all of ``M_n``.  The program minimises
    ``mu`` over ``Ch(Psi) >= 0`` with ``Psi(x) + x in S_0`` for every basis
    element ``x`` of ``S`` and ``Psi(I_n) = (mu - 1) I_n``.

    Parameters
    ----------
    s, s0 : MatricialSystem
        The inclusion ``S_0 <= S`` inside a common ``M_n``.

    Returns
    -------
    IndexResult
        ``value = mu*``; ``primal_certificate["psi"]`` is the extension.

    Raises
    ------
    ValueError
        If ``S_0`` is not contained in ``S``.
    """
    if s.ambient_dim != s0.ambient_dim or not is_subspace_of(s0, s):
        raise ValueError("S_0 must be a subsystem of S")
    n = s.ambient_dim
    _guard(n * n, max_block)
    sol = _solve(relative_problem(s, s0), tol, max_iter, "cp_index_relative")
    mu = float(sol.free_values[0])
    psi = LinearMapOnMatrices(n, n, sol.primal_blocks[0])
    return IndexResult(mu, 1.0 / mu, {"psi": psi, "mu": mu}, _dual_cert(sol), sol.residuals.gap, sol.status, sol)


def check_relative_certificate(s: MatricialSystem, s0: MatricialSystem, result: IndexResult,
                               tol: float = 1e-7) -> dict:
    """Re-verify an extension certificate from :func:`cp_index_relative`.

    Returns the three residuals: negativity of ``Ch(Psi)``, distance of
    ``Psi(x) + x`` from ``S_0`` over the basis of ``S``, and the deviation
    of ``I + Psi(I)`` from ``value * I``; plus an ``ok`` flag.
    """
    psi = result.primal_certificate["psi"]
    n = s.ambient_dim
    psd = max(0.0, -lambda_min(psi.choi))
    sub = max((s0.residual(apply(psi, x) + x) for x in s.basis), default=0.0)
    unit = float(np.abs(np.eye(n) + apply(psi, np.eye(n)) - result.value * np.eye(n)).max())
    return {"psd": psd, "subspace": sub, "unit": unit, "ok": max(psd, sub, unit) <= tol}


def lambda_tilde(s: MatricialSystem, **kw) -> IndexResult:
    """``lambda~(S) = Ind_CP(S : C 1)``."""
    return cp_index_relative(s, scalar_system(s.ambient_dim), **kw)


def coindex_problem(n: int, j: KernelSpace) -> sdp.SdpProblem:
    """Compile ``min mu`` with ``Ch(phi) - Delta >= 0``, ``phi(J) = 0`` and
    ``mu I - phi(I) >= 0``.

    Blocks: ``C' = Ch(phi) - Delta_n`` and the slack ``mu I - phi(I)``.
    ``Ch(phi) >= 0`` follows from ``C' >= 0``.
    """
    units = hermitian_units(n)
    eye = np.eye(n)
    bld = sdp.SdpBuilder([n * n, n], n_free=1)
    bld.set_free_objective(0, 1.0)
    for g in j.basis:
        gt = g.T
        for h in units:
            # tr(phi(g) h) = <C', g^T (x) h> + tr(g h) = 0
            bld.add_constraint({0: np.kron(gt, h)}, -float(np.real(np.vdot(g, h))))
    for h in units:
        tr_h = float(np.real(np.trace(h)))
        # tr(S h) + tr(phi(I) h) - mu tr(h) = 0, tr(phi(I) h) = <C', I (x) h> + tr(h)
        bld.add_constraint({0: np.kron(eye, h), 1: h}, -tr_h, {0: -tr_h})
    return bld.build()


def coindex(n: int, j: KernelSpace, tol: float = 1e-8, max_iter: int = 500,
            max_block: int = MAX_BLOCK_DIM) -> IndexResult:
    """Co-index of the kernel ``J`` in ``M_n``.

    Minimises ``||phi||_cb = ||phi(I)||`` over CP ``phi`` with ``phi - id``
    CP and ``J <= ker(phi)``.

    Returns
    -------
    IndexResult
        ``value = mu*``; ``primal_certificate["phi"]`` is the optimal map.
    """
    if j.ambient_dim != n:
        raise ValueError("kernel does not live in M_n")
    if j.dim and j.contains_unit():
        raise ValueError("a kernel must not contain the identity")
    _guard(n * n, max_block)
    sol = _solve(coindex_problem(n, j), tol, max_iter, "coindex")
    mu = float(sol.free_values[0])
    phi = LinearMapOnMatrices(n, n, sol.primal_blocks[0] + max_entangled(n))
    return IndexResult(mu, 1.0 / mu, {"phi": phi, "mu": mu}, _dual_cert(sol), sol.residuals.gap, sol.status, sol)


@dataclass
class MultiplicativityReport:
    product_index: float
    left_index: float
    right_index: float
    expected: float
    relative_deviation: float
    result: IndexResult = field(repr=False)


def multiplicativity_check(s: MatricialSystem, s0: MatricialSystem, t: MatricialSystem, t0: MatricialSystem,
                           max_dim: int = 9, **kw) -> MultiplicativityReport:
    """Compare ``Ind_CP(S (x) T : S_0 (x) T_0)`` with the product of the factors.

    Parameters
    ----------
    max_dim : int
        Cap on ``nk``; the tensor program has a block of size ``(nk)^2``.
    """
    nk = s.ambient_dim * t.ambient_dim
    if nk > max_dim:
        raise SizeGuardError(f"nk = {nk} exceeds the multiplicativity size guard {max_dim}")
    left = cp_index_relative(s, s0, **kw)
    right = cp_index_relative(t, t0, **kw)
    prod = cp_index_relative(tensor_min(s, t), tensor_min(s0, t0), **kw)
    expected = left.value * right.value
    return MultiplicativityReport(prod.value, left.value, right.value, expected,
                                  abs(prod.value - expected) / expected, prod)


def is_proper_subsystem(s0: MatricialSystem, s: MatricialSystem) -> bool:
    return is_subspace_of(s0, s) and s0.dim < s.dim


__all__ = [
    "IndexResult",
    "MultiplicativityReport",
    "SizeGuardError",
    "check_relative_certificate",
    "coindex",
    "cp_index_dual",
    "cp_index_primal",
    "cp_index_relative",
    "lambda_tilde",
    "multiplicativity_check",
]

# keep the membership helpers importable from here for callers compiling their own programs
_ = (contains, is_cp, MEMBERSHIP_TOL)
