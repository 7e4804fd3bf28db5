"""Lovasz theta, its quantum extension and a Hoffman-type heuristic."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import sdp
from .indices import (
    MAX_BLOCK_DIM,
    _guard,
    _solve,
    cp_index_relative,
    index_dual_problem,
    index_primal_problem,
)
from .linalg import all_ones, hermitian_units, max_entangled
from .systems import Graph, MatricialSystem, perp, system_from_graph

FORMS = ("E_gamma_form", "S_gamma_form")
QUANTUM_FORMS = ("dsw_dual", "dsw_primal")


@dataclass
class ThetaResult:
    value: float
    form_used: str
    certificate: dict
    gap: float
    status: str = sdp.OPTIMAL
    solution: sdp.SdpSolution | None = field(default=None, repr=False)


def _theta_e_gamma(g: Graph) -> sdp.SdpProblem:
    # P = A - J >= 0 with A in E_gamma; objective A_11 = P_11 + 1
    n = g.vertex_count
    e = system_from_graph(g, "E_gamma")
    ones = all_ones(n)
    bld = sdp.SdpBuilder([n])
    c = np.zeros((n, n), dtype=complex)
    c[0, 0] = 1.0
    bld.set_objective(0, c)
    for q in perp(e).basis:
        bld.add_constraint({0: q}, -float(np.real(np.vdot(ones, q))))
    return bld.build()


def _theta_s_gamma(g: Graph) -> sdp.SdpProblem:
    # P = B - J >= 0 with B in S_gamma; t - B_ii = s_i >= 0; minimise t
    n = g.vertex_count
    s = system_from_graph(g, "S_gamma")
    ones = all_ones(n)
    bld = sdp.SdpBuilder([n] + [1] * n, n_free=1)
    bld.set_free_objective(0, 1.0)
    comp = perp(s)
    for q in comp.basis:
        bld.add_constraint({0: q}, -float(np.real(np.vdot(ones, q))))
    for i in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[i, i] = 1.0
        bld.add_constraint({0: e, 1 + i: np.eye(1)}, -1.0, {0: -1.0})
    return bld.build()


def lovasz_theta(g: Graph, form: str = "E_gamma_form", tol: float = 1e-8, max_iter: int = 500) -> ThetaResult:
    """Lovasz theta number of ``g``.

    ``E_gamma_form`` computes ``min{A_11 : A in E_gamma, A >= J_n}`` and
    ``S_gamma_form`` computes ``min{max_i B_ii : B in S_gamma, B >= J_n}``.
    Both equal ``theta(g)``; with the reflexive adjacency convention the
    complete graph has theta 1 and the edgeless graph on ``n`` vertices has
    theta ``n``.
    """
    if form == "E_gamma_form":
        sol = _solve(_theta_e_gamma(g), tol, max_iter, "lovasz_theta")
        a = sol.primal_blocks[0] + all_ones(g.vertex_count)
        return ThetaResult(sol.primal_value + 1.0, form, {"A": a}, sol.residuals.gap, sol.status, sol)
    if form == "S_gamma_form":
        sol = _solve(_theta_s_gamma(g), tol, max_iter, "lovasz_theta")
        b = sol.primal_blocks[0] + all_ones(g.vertex_count)
        return ThetaResult(float(sol.free_values[0]), form, {"B": b}, sol.residuals.gap, sol.status, sol)
    raise ValueError(f"unknown theta form {form!r}; expected one of {FORMS}")


def quantum_theta(s: MatricialSystem, form: str = "dsw_dual", tol: float = 1e-8, max_iter: int = 500,
                  max_block: int = MAX_BLOCK_DIM) -> ThetaResult:
    """Quantum theta of a matricial system.

    ``dsw_dual`` maximises ``<I (x) X + Y, Delta_n>`` subject to
    ``tr X = 1``, ``Y in S^perp (x) M_n`` and ``I (x) X + Y >= 0``; it is
    solved in the equivalent normalisation ``min tr X`` with
    ``<I (x) X + Y, Delta_n> = 1``, whose value is the reciprocal.
    ``dsw_primal`` maximises ``lambda`` subject to
    ``(id (x) tr)(X) = (1 - lambda) I_n``, ``X + lambda Delta_n in M_n (x) S``
    and ``X >= 0``, and returns ``1 / lambda``.  The partial trace here is
    over the second factor, the only difference from the index program.
    """
    n = s.ambient_dim
    _guard(n * n, max_block)
    if form == "dsw_dual":
        sol = _solve(index_dual_problem(s, "second"), tol, max_iter, "quantum_theta")
        x = np.tensordot(sol.free_values, hermitian_units(n), axes=1)
        trx = float(np.real(np.trace(x)))
        w = sol.primal_blocks[0]
        cert = {"X": x / trx, "Y": (w - np.kron(np.eye(n), x)) / trx}
        return ThetaResult(1.0 / trx, form, cert, sol.residuals.gap, sol.status, sol)
    if form == "dsw_primal":
        sol = _solve(index_primal_problem(s, "second"), tol, max_iter, "quantum_theta")
        lam = float(sol.free_values[0])
        x = sol.primal_blocks[0]
        return ThetaResult(1.0 / lam, form, {"X": x, "lambda": lam, "choi": x + lam * max_entangled(n)},
                           sol.residuals.gap, sol.status, sol)
    raise ValueError(f"unknown quantum theta form {form!r}; expected one of {QUANTUM_FORMS}")


def relative_theta(g: Graph, sub: Graph, **kw) -> ThetaResult:
    """``theta(g : sub) = Ind_CP(S_g : S_sub)`` for a spanning subgraph ``sub``."""
    if not sub.is_subgraph_of(g):
        raise ValueError("the second graph must be a spanning subgraph of the first")
    r = cp_index_relative(system_from_graph(g), system_from_graph(sub), **kw)
    return ThetaResult(r.value, "relative", r.primal_certificate, r.gap, r.status, r.solution)


@dataclass
class HoffmanReport:
    """Best witness of the heuristic and its independently re-evaluated bound."""

    value: float
    witness: np.ndarray
    lambda_max: float
    lambda_min: float
    restarts: int
    seed: int | None


def hoffman_ratio(x: np.ndarray) -> float:
    """``1 + lambda_max(x) / |lambda_min(x)|``; infinite if ``x`` has no negative eigenvalue."""
    w = np.linalg.eigvalsh((x + x.conj().T) / 2)
    if w[0] >= 0:
        return np.inf
    return 1.0 + w[-1] / abs(w[0])


def _ratio_and_grad(c: np.ndarray, basis: np.ndarray):
    x = np.tensordot(c, basis, axes=1)
    w, v = np.linalg.eigh(x)
    lo, hi = w[0], w[-1]
    vlo, vhi = v[:, 0], v[:, -1]
    # d lambda / d c_k = v^* G_k v for simple eigenvalues
    ghi = np.real(np.einsum("i,kij,j->k", vhi.conj(), basis, vhi))
    glo = np.real(np.einsum("i,kij,j->k", vlo.conj(), basis, vlo))
    r = hi / -lo
    grad = (ghi * -lo + hi * glo) / lo ** 2
    return r, grad


def hoffman_heuristic(s: MatricialSystem, restarts: int = 20, seed: int | None = 0, steps: int = 300,
                      step_size: float = 0.1) -> HoffmanReport:
    """Search ``x`` in ``S^perp`` for a large ``1 + lambda_max(x)/|lambda_min(x)|``.

    Projected gradient ascent on the unit sphere of ``S^perp`` (real
    coordinates in an orthonormal Hermitian basis), restarted from Gaussian
    points drawn from ``numpy.random.default_rng(seed)``.  Since ``I in S``
    every nonzero ``x in S^perp`` has trace zero and hence a negative
    eigenvalue, so the ratio is finite.  The returned value is the ratio
    of the best witness recomputed from scratch, and therefore a certified
    evaluation at that witness.

    Raises
    ------
    ValueError
        If ``S^perp`` is zero (``S = M_n``).
    """
    comp = perp(s)
    if comp.dim == 0:
        raise ValueError("S^perp is zero; the heuristic needs a proper system")
    basis = np.asarray(comp.basis.elements)
    rng = np.random.default_rng(seed)
    best_c, best_r = None, -np.inf
    for _ in range(max(1, restarts)):
        c = rng.normal(size=comp.dim)
        c /= np.linalg.norm(c)
        r, grad = _ratio_and_grad(c, basis)
        eta = step_size
        for _ in range(steps):
            # tangent step, then retraction to the sphere
            grad = grad - (grad @ c) * c
            cand = c + eta * grad
            cand /= np.linalg.norm(cand)
            r_new, g_new = _ratio_and_grad(cand, basis)
            if r_new >= r:
                c, r, grad = cand, r_new, g_new
                eta = min(eta * 1.5, 10.0)
            else:
                eta *= 0.5
                if eta < 1e-10:
                    break
        if r > best_r:
            best_c, best_r = c, r
    x = np.tensordot(best_c, basis, axes=1)
    w = np.linalg.eigvalsh(x)
    return HoffmanReport(hoffman_ratio(x), x, float(w[-1]), float(w[0]), restarts, seed)
