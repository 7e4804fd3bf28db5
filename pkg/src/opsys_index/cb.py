"""Completely bounded norms, the CB-index heuristic and the bounded index of l_inf(n).

The cb-norm of ``u: E -> M_m`` with ``E <= M_n`` is computed through the
Paulsen system ``E~ = {[[a I, x], [y^*, b I]]} <= M_2n``: the map
``u~_R`` (``R`` on the diagonal corners, ``u`` off the diagonal) is CP
exactly when ``R >= ||u||_cb``, and CP maps on a subsystem of ``M_2n``
extend to all of ``M_2n``.  So ``||u||_cb`` is the least ``R`` for which
some PSD Choi matrix on ``M_2n (x) M_2m`` agrees with ``u~_R`` on ``E~``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import sdp
from .linalg import DimensionError, hermitian_units

INDEPENDENCE_TOL = 1e-10


@dataclass(frozen=True)
class OperatorSubspace:
    """Linear span of (not necessarily Hermitian) ``n x n`` matrices."""

    ambient_in: int
    basis: tuple

    def __post_init__(self):
        n = self.ambient_in
        mats = tuple(np.asarray(b, dtype=complex) for b in self.basis)
        if any(m.shape != (n, n) for m in mats):
            raise DimensionError(f"basis matrices must be {n}x{n}")
        if mats:
            flat = np.array([m.ravel() for m in mats])
            sv = np.linalg.svd(flat, compute_uv=False)
            if sv[-1] <= INDEPENDENCE_TOL * max(1.0, sv[0]):
                raise ValueError("basis matrices are linearly dependent")
        object.__setattr__(self, "basis", mats)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def coordinates(self, x) -> np.ndarray:
        """Complex coordinates of ``x`` (least squares; exact for members)."""
        flat = np.array([m.ravel() for m in self.basis]).T
        return np.linalg.lstsq(flat, np.asarray(x, dtype=complex).ravel(), rcond=None)[0]

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=complex)
        c = self.coordinates(x)
        return float(np.linalg.norm(np.tensordot(c, np.array(self.basis), axes=1) - x)) <= tol * (1 + np.linalg.norm(x))

    @classmethod
    def full(cls, n: int) -> "OperatorSubspace":
        units = []
        for i in range(n):
            for j in range(n):
                e = np.zeros((n, n), dtype=complex)
                e[i, j] = 1.0
                units.append(e)
        return cls(n, tuple(units))

    @classmethod
    def scalars(cls, n: int) -> "OperatorSubspace":
        return cls(n, (np.eye(n, dtype=complex),))


@dataclass(frozen=True)
class SubspaceMap:
    """Linear map ``E -> M_m`` fixed by its values on the basis of ``E``."""

    domain: OperatorSubspace
    out_dim: int
    images: tuple

    def __post_init__(self):
        m = self.out_dim
        imgs = tuple(np.asarray(b, dtype=complex) for b in self.images)
        if len(imgs) != self.domain.dim or any(a.shape != (m, m) for a in imgs):
            raise DimensionError("need one m x m image per basis element")
        object.__setattr__(self, "images", imgs)

    def __call__(self, x) -> np.ndarray:
        c = self.domain.coordinates(x)
        return np.tensordot(c, np.array(self.images), axes=1)

    def __sub__(self, other: "SubspaceMap") -> "SubspaceMap":
        return SubspaceMap(self.domain, self.out_dim, tuple(a - b for a, b in zip(self.images, other.images)))

    def __add__(self, other: "SubspaceMap") -> "SubspaceMap":
        return SubspaceMap(self.domain, self.out_dim, tuple(a + b for a, b in zip(self.images, other.images)))

    def __mul__(self, s: complex) -> "SubspaceMap":
        return SubspaceMap(self.domain, self.out_dim, tuple(s * a for a in self.images))

    __rmul__ = __mul__

    @classmethod
    def identity(cls, domain: OperatorSubspace) -> "SubspaceMap":
        return cls(domain, domain.ambient_in, domain.basis)

    @classmethod
    def from_function(cls, domain: OperatorSubspace, out_dim: int, fn) -> "SubspaceMap":
        return cls(domain, out_dim, tuple(fn(b) for b in domain.basis))


# ---------------------------------------------------------------- Paulsen encoding


def _corner(n: int, a: np.ndarray, hermitian_part: int) -> np.ndarray:
    """Hermitian elements of the Paulsen system built from an off-diagonal entry.

    ``hermitian_part=0`` gives ``[[0, a], [a^*, 0]]``; ``1`` gives
    ``[[0, i a], [-i a^*, 0]]``.  Together they span ``{[[0, a], [0, 0]]}``
    and its adjoint.
    """
    z = np.zeros((2 * n, 2 * n), dtype=complex)
    s = 1.0 if hermitian_part == 0 else 1j
    z[:n, n:] = s * a
    z[n:, :n] = np.conj(s) * a.conj().T
    return z


def _projections(n: int):
    p1 = np.zeros((2 * n, 2 * n), dtype=complex)
    p1[:n, :n] = np.eye(n)
    p2 = np.zeros((2 * n, 2 * n), dtype=complex)
    p2[n:, n:] = np.eye(n)
    return p1, p2


@dataclass
class _PaulsenRows:
    """Row bookkeeping for one Paulsen-extension block inside a builder."""

    block: int
    # (row index, basis index k, hermitian part, output unit h)
    off_rows: list = field(default_factory=list)


def _add_paulsen_block(bld: sdp.SdpBuilder, block: int, domain: OperatorSubspace, m: int,
                       r_free: int | None, r_value: float | None, offdiag_rhs, offdiag_free=None) -> _PaulsenRows:
    """Constrain a Choi block on ``M_2n (x) M_2m`` to agree with ``u~_R`` on the Paulsen system.

    ``offdiag_rhs(k, part, h)`` returns the constant right-hand side of the
    row for basis element ``k``; ``offdiag_free(k, part, h)`` returns a
    ``{free index: coefficient}`` dict that is moved to the left-hand side.
    """
    n = domain.ambient_in
    units = hermitian_units(2 * m)
    p_in = _projections(n)
    p_out = _projections(m)
    rows = _PaulsenRows(block)
    for pi, po in zip(p_in, p_out):
        pit = pi.T
        for h in units:
            t = float(np.real(np.vdot(po, h)))
            if r_free is not None:
                bld.add_constraint({block: np.kron(pit, h)}, 0.0, {r_free: -t} if t else {})
            else:
                bld.add_constraint({block: np.kron(pit, h)}, r_value * t)
    for k, a in enumerate(domain.basis):
        for part in (0, 1):
            kt = _corner(n, a, part).T
            for h in units:
                free = offdiag_free(k, part, h) if offdiag_free else {}
                i = bld.add_constraint({block: np.kron(kt, h)}, offdiag_rhs(k, part, h), free)
                rows.off_rows.append((i, k, part, h))
    return rows


def _pair_offdiag(b: np.ndarray, part: int, h: np.ndarray, m: int) -> float:
    """``tr(L h)`` for the Hermitian corner element ``L`` built from output ``b``."""
    return float(np.real(np.vdot(_corner(m, b, part), h)))


@dataclass
class CbNormResult:
    """cb-norm with its optimal extension and a norming functional.

    ``functional[k]`` is a matrix ``W_k`` with
    ``Re sum_k tr(v(a_k) W_k) <= ||v||_cb`` for every map ``v`` on the
    same domain, with equality at the map that was measured.
    """

    value: float
    choi: np.ndarray
    functional: list
    solution: sdp.SdpSolution = field(repr=False)


def cb_norm_certified(u: SubspaceMap, tol: float = 1e-8, max_iter: int = 500) -> CbNormResult:
    """cb-norm of ``u`` together with the dual norming functional.

    Minimises ``R`` subject to a PSD Choi matrix on ``M_2n (x) M_2m`` that
    sends the corner projections to ``R`` times the corner projections and
    acts as ``u`` on the off-diagonal corner.  Dual multipliers of the
    off-diagonal rows define a linear functional that minorises the norm
    (the norm is homogeneous, so the minorant has no constant term).
    """
    n, m = u.domain.ambient_in, u.out_dim
    bld = sdp.SdpBuilder([4 * n * m], n_free=1)
    bld.set_free_objective(0, 1.0)
    rows = _add_paulsen_block(bld, 0, u.domain, m, 0, None,
                              lambda k, part, h: _pair_offdiag(u.images[k], part, h, m))
    sol = sdp.solve(bld.build(), tol=tol, max_iter=max_iter)
    if sol.status != sdp.OPTIMAL:
        raise sdp.SdpError(f"cb_norm: solver returned {sol.status}", sol)
    y = sol.dual_vector
    w = [np.zeros((m, m), dtype=complex) for _ in range(u.domain.dim)]
    for i, k, part, h in rows.off_rows:
        if y[i]:
            # tr(L(b) h) = 2 Re tr(b h21) for part 0 and -2 Im tr(b h21) for part 1
            h21 = h[m:, :m]
            w[k] += y[i] * (2 * h21 if part == 0 else 2j * h21)
    return CbNormResult(float(sol.free_values[0]), sol.primal_blocks[0], w, sol)


def cb_norm(u: SubspaceMap, tol: float = 1e-8, max_iter: int = 500) -> float:
    """``||u||_cb`` for ``u: E -> M_m`` with ``E <= M_n``.

    Examples
    --------
    >>> e = OperatorSubspace.full(2)
    >>> round(cb_norm(SubspaceMap.identity(e)), 6)
    1.0
    """
    return cb_norm_certified(u, tol, max_iter).value


def functional_value(functional, v: SubspaceMap) -> float:
    return float(sum(np.real(np.trace(img @ w)) for img, w in zip(v.images, functional)))


def paulsen_map_extends_cp(domain: OperatorSubspace, m: int, diag_value: float, offdiag: SubspaceMap,
                           tol: float = 1e-8, max_iter: int = 500) -> bool:
    """Feasibility of a CP extension of the Paulsen-system map
    ``[[a I, x], [y^*, b I]] -> [[r a I, v(x)], [v(y)^*, r b I]]`` with
    ``r = diag_value`` and ``v = offdiag``.
    """
    bld = sdp.SdpBuilder([4 * domain.ambient_in * m])
    _add_paulsen_block(bld, 0, domain, m, None, diag_value,
                       lambda k, part, h: _pair_offdiag(offdiag.images[k], part, h, m))
    sol = sdp.solve(bld.build(), tol=tol, max_iter=max_iter)
    if sol.status == sdp.OPTIMAL:
        return True
    if sol.status == sdp.PRIMAL_INFEASIBLE:
        return False
    raise sdp.SdpError(f"Paulsen feasibility: solver returned {sol.status}", sol)


def paulsen_shifted_map_is_cp(u: SubspaceMap, lam: float, **kw) -> bool:
    """Is ``u~_1 - lam id`` CP on the Paulsen system of the domain of ``u``?

    The map is assembled directly on the Paulsen system: corners go to
    ``1 - lam`` times themselves and the off-diagonal entry ``x`` goes to
    ``u(x) - lam x``.
    """
    shifted = SubspaceMap(u.domain, u.out_dim, tuple(b - lam * a for a, b in zip(u.domain.basis, u.images)))
    return paulsen_map_extends_cp(u.domain, u.out_dim, 1.0 - lam, shifted, **kw)


# ---------------------------------------------------------------- CB-index heuristic


@dataclass
class CbIndexReport:
    """Best certified-feasible witness of the CB-index heuristic.

    ``value`` is an upper bound on the CB-index (``inf`` when no feasible
    witness was found).  ``norm_u`` and ``norm_u_minus_id`` are recomputed
    by :func:`cb_norm` for the witness.
    """

    value: float
    witness: SubspaceMap | None
    norm_u: float
    norm_u_minus_id: float
    feasible: bool
    restarts: int
    seed: int | None
    candidates: list = field(default_factory=list, repr=False)


FEASIBILITY_SLACK = 1e-6


def cb_index_feasibility(u: SubspaceMap, slack: float = FEASIBILITY_SLACK, **kw):
    """Return ``(feasible, ||u||_cb, ||u - id||_cb)`` for a candidate witness."""
    nu = cb_norm(u, **kw)
    nd = cb_norm(u - SubspaceMap.identity(u.domain), **kw)
    return nd <= nu - 1 + slack, nu, nd


def _map_from_params(domain: OperatorSubspace, target: OperatorSubspace, theta: np.ndarray) -> SubspaceMap:
    d, d0 = domain.dim, target.dim
    c = theta[: d * d0].reshape(d, d0) + 1j * theta[d * d0:].reshape(d, d0)
    tb = np.array(target.basis)
    return SubspaceMap(domain, domain.ambient_in, tuple(np.tensordot(c[k], tb, axes=1) for k in range(d)))


def _ccp_step(domain, target, functional, tau, tol, max_iter):
    """One convex subproblem: minimise ``||u|| + tau s`` with
    ``||u - id|| <= l(u) - 1 + s`` where ``l`` minorises ``||u||``."""
    n = domain.ambient_in
    d, d0 = domain.dim, target.dim
    npar = 2 * d * d0
    f_r1, f_r2 = npar, npar + 1
    dim = 4 * n * n
    bld = sdp.SdpBuilder([dim, dim, 1, 1], n_free=npar + 2)
    bld.set_free_objective(f_r1, 1.0)
    tb = target.basis

    def param_terms(k, part, h, sign):
        # L(u(a_k)) = sum_l p_kl L_part(b_l) + q_kl L_part'(b_l), with i-rotation for q
        out = {}
        for l, b in enumerate(tb):
            p_idx, q_idx = k * d0 + l, d * d0 + k * d0 + l
            if part == 0:
                cp, cq = _pair_offdiag(b, 0, h, n), _pair_offdiag(b, 1, h, n)
            else:
                cp, cq = _pair_offdiag(b, 1, h, n), -_pair_offdiag(b, 0, h, n)
            if cp:
                out[p_idx] = sign * cp
            if cq:
                out[q_idx] = sign * cq
        return out

    _add_paulsen_block(bld, 0, domain, n, f_r1, None, lambda k, part, h: 0.0,
                       lambda k, part, h: param_terms(k, part, h, -1.0))
    _add_paulsen_block(bld, 1, domain, n, f_r2, None,
                       lambda k, part, h: -_pair_offdiag(domain.basis[k], part, h, n),
                       lambda k, part, h: param_terms(k, part, h, -1.0))
    # R2 - l(theta) - s + t = -1 with s = block 2 (penalised), t = block 3 (slack)
    lin = {f_r2: 1.0}
    for k, w in enumerate(functional):
        for l, b in enumerate(tb):
            z = np.trace(b @ w)
            p_idx, q_idx = k * d0 + l, d * d0 + k * d0 + l
            lin[p_idx] = lin.get(p_idx, 0.0) - float(np.real(z))
            lin[q_idx] = lin.get(q_idx, 0.0) - float(np.real(1j * z))
    bld.add_constraint({2: -np.eye(1), 3: np.eye(1)}, -1.0, lin)
    bld.set_objective(2, tau * np.eye(1))
    sol = sdp.solve(bld.build(), tol=tol, max_iter=max_iter)
    if sol.status != sdp.OPTIMAL:
        return None, None
    return sol.free_values[:npar], float(np.real(sol.primal_blocks[2][0, 0]))


def cb_index_dc(x: OperatorSubspace, x0: OperatorSubspace, restarts: int = 5, seed: int | None = 0,
                max_rounds: int = 30, tol: float = 1e-8, max_iter: int = 500) -> CbIndexReport:
    """Upper bound on ``Ind_CB(X : X_0)`` by a penalty convex-concave procedure.

    The feasible set ``{u : ||u - id||_cb <= ||u||_cb - 1}`` is
    reverse-convex.  At each round ``||u||_cb`` on the right is replaced by
    the linear norming functional at the current iterate, which minorises
    the norm; the resulting SDP in ``(u, R_1, R_2, s)`` is solved with a
    growing penalty on the slack ``s``.  Every candidate is re-verified by
    two independent :func:`cb_norm` solves, so only certified-feasible
    witnesses can lower the reported bound.

    The first start is the Hilbert-Schmidt projection onto ``X_0`` scaled
    by ``dim X``; the remaining ``restarts - 1`` starts are Gaussian
    coefficient draws from ``numpy.random.default_rng(seed)``.
    """
    if x.ambient_in != x0.ambient_in or not all(x.contains(b) for b in x0.basis):
        raise ValueError("X_0 must be a subspace of X")
    rng = np.random.default_rng(seed)
    d, d0 = x.dim, x0.dim
    flat0 = np.array([b.ravel() for b in x0.basis]).T
    q, _ = np.linalg.qr(flat0)
    proj = []
    for a in x.basis:
        p = q @ (q.conj().T @ a.ravel())
        proj.append(np.linalg.lstsq(flat0, p, rcond=None)[0])
    proj = np.array(proj) * d
    starts = [np.concatenate([proj.real.ravel(), proj.imag.ravel()])]
    for _ in range(max(0, restarts - 1)):
        starts.append(rng.normal(size=2 * d * d0))

    best = CbIndexReport(math.inf, None, math.nan, math.nan, False, restarts, seed)
    for theta in starts:
        u = _map_from_params(x, x0, theta)
        tau = 1.0
        prev = math.inf
        for _ in range(max_rounds):
            cert = cb_norm_certified(u, tol, max_iter)
            new_theta, s = _ccp_step(x, x0, cert.functional, tau, tol, max_iter)
            if new_theta is None:
                break
            u = _map_from_params(x, x0, new_theta)
            ok, nu, nd = cb_index_feasibility(u, tol=tol, max_iter=max_iter)
            obj = nu
            best.candidates.append((nu, nd, ok))
            if ok and nu < best.value:
                best = CbIndexReport(nu, u, nu, nd, True, restarts, seed, best.candidates)
            if s < 1e-9 and abs(prev - obj) <= 1e-7 * (1 + obj):
                break
            prev = obj
            tau = min(tau * 2.0, 1e4)
    return best


# ---------------------------------------------------------------- bounded index of l_inf(n)


def linf_operator_norm(mat) -> float:
    """Operator norm of a matrix acting on ``l_inf(n)``: the largest absolute row sum."""
    return float(np.abs(np.asarray(mat)).sum(axis=1).max())


def _constant_range_norms(n: int, t: Fraction):
    """``(||T||, ||T - id||)`` for ``T x = t (sum x_i) 1`` on ``l_inf(n)``, exactly."""
    norm_t = n * abs(t)
    norm_d = (n - 1) * abs(t) + abs(t - 1)
    return norm_t, norm_d


def bounded_index_linf(n: int) -> float:
    """``Ind_B(l_inf(n) : C 1)`` over the constant-range family ``T = t 1 1^T``.

    ``||T|| = n|t|`` and ``||T - id|| = (n - 1)|t| + |t - 1|`` are piecewise
    linear in ``t`` with sign patterns changing only at ``t = 0`` and
    ``t = 1``.  On each piece the constraint ``||T - id|| <= ||T|| - 1`` is
    one linear inequality, so the least feasible ``||T||`` is found
    exactly in rational arithmetic.

    The family is exhaustive: for ``T x = <c, x> 1`` the constraint at
    coordinate ``i`` reads ``sum_{j != i}|c_j| + |c_i - 1| <= ||c||_1 - 1``,
    i.e. ``|c_i - 1| <= |c_i| - 1``, which forces every ``c_i`` real and at
    least 1; the symmetric choice ``c = 1`` attains ``||c||_1 = n``.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    pieces = [(None, Fraction(0)), (Fraction(0), Fraction(1)), (Fraction(1), None)]
    best = None
    for lo, hi in pieces:
        # evaluate the two linear pieces at two interior points to get slope/intercept exactly
        a = lo if lo is not None else hi - 1
        b = hi if hi is not None else lo + 1
        fa = _constant_range_norms(n, a)
        fb = _constant_range_norms(n, b)
        # g(t) = ||T - id|| - ||T|| + 1 is linear on the piece; feasible where g <= 0
        ga = fa[1] - fa[0] + 1
        gb = fb[1] - fb[0] + 1
        slope = (gb - ga) / (b - a)
        cands = [t for t in (lo, hi) if t is not None]
        if slope != 0:
            root = a - ga / slope
            if (lo is None or root >= lo) and (hi is None or root <= hi):
                cands.append(root)
        for t in cands:
            nt, nd = _constant_range_norms(n, t)
            if nd <= nt - 1 and (best is None or nt < best):
                best = nt
    return float(best)


def averaging_map(n: int) -> np.ndarray:
    """Matrix of the conditional expectation onto the constants of ``l_inf(n)``."""
    return np.full((n, n), 1.0 / n)
