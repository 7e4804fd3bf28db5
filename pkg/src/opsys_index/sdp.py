"""Self-contained solver for complex Hermitian semidefinite programs.

Standard form (all ``C_b``, ``A_ib`` Hermitian, inner product ``tr(AB)``)::

    primal:  minimize   sum_b <C_b, X_b> + c_f . x_f
             subject to sum_b <A_ib, X_b> + (B x_f)_i = b_i,   X_b >= 0
    dual:    maximize   b . y
             subject to Z_b = C_b - sum_i y_i A_ib >= 0,   B^T y = c_f

``x_f`` are unconstrained real scalars.  The algorithm is an infeasible
primal-dual path-following method using the HKM search direction with a
Mehrotra predictor-corrector, run directly on complex blocks.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
PRIMAL_INFEASIBLE = "primal_infeasible"
DUAL_INFEASIBLE = "dual_infeasible"
MAX_ITERATIONS = "max_iterations"
NUMERICAL_ERROR = "numerical_error"

PRESOLVE_TOL = 1e-10
CERTIFICATE_TOL = 1e-8
POLISH_FACTOR = 1e-3
POLISH_STEPS = 4
REFINE_STEPS = 2


class SdpError(RuntimeError):
    """A solve that did not reach an optimal status where one was required."""

    def __init__(self, message: str, solution: "SdpSolution | None" = None):
        super().__init__(message)
        self.solution = solution


@dataclass
class SdpProblem:
    block_dims: tuple
    objective: list
    constraints: list
    rhs: np.ndarray
    free_matrix: np.ndarray
    free_objective: np.ndarray

    @property
    def n_constraints(self) -> int:
        return self.rhs.shape[0]

    @property
    def n_free(self) -> int:
        return self.free_objective.shape[0]

    def constraint_matrix(self, i: int, block: int) -> np.ndarray:
        n = self.block_dims[block]
        return self.constraints[block].getrow(i).toarray().reshape(n, n)

    def apply(self, blocks, free=None) -> np.ndarray:
        """Left-hand sides ``sum_b <A_ib, X_b> + B x_f``."""
        out = np.zeros(self.n_constraints)
        for a, x in zip(self.constraints, blocks):
            out += np.real(a.conj() @ np.asarray(x, dtype=complex).ravel())
        if self.n_free:
            out += self.free_matrix @ (np.zeros(self.n_free) if free is None else free)
        return out

    def adjoint(self, y) -> list:
        """``sum_i y_i A_ib`` for every block."""
        return [(a.T @ y).reshape(n, n) for a, n in zip(self.constraints, self.block_dims)]

    def primal_objective(self, blocks, free=None) -> float:
        val = sum(float(np.real(np.vdot(c, x))) for c, x in zip(self.objective, blocks))
        if self.n_free:
            val += float(self.free_objective @ free)
        return val


class SdpBuilder:
    """Incremental construction of an :class:`SdpProblem`.

    >>> bld = SdpBuilder([2])
    >>> bld.set_objective(0, np.eye(2))
    >>> _ = bld.add_constraint({0: np.diag([1.0, 0.0])}, 1.0)
    >>> prob = bld.build()
    """

    def __init__(self, block_dims, n_free: int = 0, drop_tol: float = 1e-15):
        self.block_dims = tuple(int(n) for n in block_dims)
        self.n_free = n_free
        self.drop_tol = drop_tol
        self._objective = [np.zeros((n, n), dtype=complex) for n in self.block_dims]
        self._free_objective = np.zeros(n_free)
        self._entries = [([], [], []) for _ in self.block_dims]
        self._free_entries = ([], [], [])
        self._rhs: list[float] = []

    @property
    def n_constraints(self) -> int:
        return len(self._rhs)

    def set_objective(self, block: int, c) -> None:
        self._objective[block] = np.asarray(c, dtype=complex).copy()

    def set_free_objective(self, idx: int, c: float) -> None:
        self._free_objective[idx] = c

    def add_constraint(self, terms: dict, rhs: float, free: dict | None = None) -> int:
        row = len(self._rhs)
        for blk, mat in terms.items():
            flat = np.asarray(mat, dtype=complex).ravel()
            nz = np.flatnonzero(np.abs(flat) > self.drop_tol)
            rows, cols, vals = self._entries[blk]
            rows.append(np.full(nz.size, row))
            cols.append(nz)
            vals.append(flat[nz])
        for k, v in (free or {}).items():
            if v != 0:
                self._free_entries[0].append(row)
                self._free_entries[1].append(k)
                self._free_entries[2].append(float(v))
        self._rhs.append(float(rhs))
        return row

    def build(self) -> SdpProblem:
        m = len(self._rhs)
        mats = []
        for (rows, cols, vals), n in zip(self._entries, self.block_dims):
            if rows:
                r, c, v = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
            else:
                r = c = np.zeros(0, dtype=int)
                v = np.zeros(0, dtype=complex)
            mats.append(sp.csr_matrix((v, (r, c)), shape=(m, n * n), dtype=complex))
        fm = np.zeros((m, self.n_free))
        for r, k, v in zip(*self._free_entries):
            fm[r, k] += v
        return SdpProblem(self.block_dims, self._objective, mats, np.array(self._rhs, dtype=float),
                          fm, self._free_objective.copy())


@dataclass
class Residuals:
    primal_feas: float
    dual_feas: float
    gap: float

    def max(self) -> float:
        return max(self.primal_feas, self.dual_feas, self.gap)


@dataclass
class SdpSolution:
    status: str
    primal_value: float
    dual_value: float
    primal_blocks: list
    free_values: np.ndarray
    dual_vector: np.ndarray
    dual_blocks: list
    residuals: Residuals
    iterations: int
    tol: float
    certificate: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


# ---------------------------------------------------------------- presolve


@dataclass
class _Presolved:
    keep: np.ndarray
    infeasible_certificate: np.ndarray | None = None


def _real_rows(problem: SdpProblem) -> np.ndarray:
    parts = []
    for a in problem.constraints:
        d = a.toarray()
        parts += [d.real, d.imag]
    parts.append(problem.free_matrix)
    return np.hstack(parts)


def presolve(problem: SdpProblem, tol: float = PRESOLVE_TOL) -> _Presolved:
    """Drop linearly dependent equality rows (pivoted QR on the row space)."""
    m = problem.n_constraints
    if m == 0:
        return _Presolved(np.arange(0))
    rows = _real_rows(problem)
    norms = np.linalg.norm(rows, axis=1)
    if np.any(norms == 0):
        zero = np.flatnonzero(norms == 0)
        bad = zero[np.abs(problem.rhs[zero]) > CERTIFICATE_TOL]
        if bad.size:
            y = np.zeros(m)
            y[bad[0]] = np.sign(problem.rhs[bad[0]])
            return _Presolved(np.flatnonzero(norms > 0), y)
    scaled = rows / np.where(norms > 0, norms, 1.0)[:, None]
    _, r, piv = sla.qr(scaled.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > tol * max(diag[0], 1e-300))) if diag.size else 0
    keep = np.sort(piv[:rank])
    dropped = np.setdiff1d(np.arange(m), keep)
    if dropped.size:
        logger.warning("presolve dropped %d dependent constraint rows of %d", dropped.size, m)
        # express dropped rows through kept rows and check the right-hand side
        w, *_ = np.linalg.lstsq(rows[keep].T, rows[dropped].T, rcond=None)
        mismatch = problem.rhs[dropped] - w.T @ problem.rhs[keep]
        k = int(np.argmax(np.abs(mismatch)))
        if abs(mismatch[k]) > CERTIFICATE_TOL * (1 + np.abs(problem.rhs).max()):
            y = np.zeros(m)
            y[dropped[k]] = 1.0
            y[keep] = -w[:, k]
            return _Presolved(keep, y * np.sign(mismatch[k]) / abs(mismatch[k]))
    return _Presolved(keep)


# ---------------------------------------------------------------- block kernels


class _Block:
    """Constraint data of one PSD block, prepared for Schur-complement assembly."""

    def __init__(self, a: sp.csr_matrix, n: int):
        self.n = n
        self.a = a
        self.ah = a.conj().tocsr()
        self.at = a.T.tocsr()
        m = a.shape[0]
        counts = np.diff(a.indptr)
        w = int(counts.max()) if m and counts.size else 0
        self.active = a.nnz > 0
        self.padded = 0 < w <= 2 * n
        if self.padded:
            idx = np.zeros((m, w), dtype=int)
            val = np.zeros((m, w), dtype=complex)
            for i in range(m):
                s, e = a.indptr[i], a.indptr[i + 1]
                idx[i, : e - s] = a.indices[s:e]
                val[i, : e - s] = a.data[s:e]
            self.p, self.q = np.divmod(idx, n)
            self.val = val
        elif self.active:
            self.dense = a.toarray().reshape(m, n, n)

    def op(self, x: np.ndarray) -> np.ndarray:
        return np.real(self.ah @ x.ravel())

    def adj(self, y: np.ndarray) -> np.ndarray:
        return (self.at @ y).reshape(self.n, self.n)

    def schur(self, x: np.ndarray, zinv: np.ndarray) -> np.ndarray:
        """``M_ij = Re tr(A_i X A_j Z^{-1})``."""
        m = self.a.shape[0]
        if not self.active:
            return np.zeros((m, m))
        if self.padded:
            xc = np.moveaxis(x[:, self.p], 0, 1) * self.val[:, None, :]
            g = xc @ zinv[self.q, :]
        else:
            g = x @ self.dense @ zinv
        return np.real(self.ah @ g.reshape(m, -1).T)


def _chol(a: np.ndarray):
    try:
        return sla.cholesky(a, lower=True, check_finite=False)
    except sla.LinAlgError:
        return None


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest ``alpha`` keeping ``X + alpha dX`` positive semidefinite."""
    lo = _chol(x)
    if lo is None:
        w, v = np.linalg.eigh(x)
        w = np.maximum(w, 1e-300)
        s = v / np.sqrt(w)
        t = s.conj().T @ dx @ s
    else:
        t = sla.solve_triangular(lo, dx, lower=True, check_finite=False)
        t = sla.solve_triangular(lo, t.conj().T, lower=True, check_finite=False)
    lam = np.linalg.eigvalsh((t + t.conj().T) / 2)[0]
    return math.inf if lam >= 0 else -1.0 / lam


def _inner(a, b) -> float:
    return float(np.real(np.vdot(a, b)))


# ---------------------------------------------------------------- solver


class _Ipm:
    def __init__(self, problem: SdpProblem, keep: np.ndarray):
        self.problem = problem
        self.b = problem.rhs[keep]
        self.B = problem.free_matrix[keep]
        self.cf = problem.free_objective
        self.C = [np.asarray(c, dtype=complex) for c in problem.objective]
        self.blocks = [_Block(a[keep], n) for a, n in zip(problem.constraints, problem.block_dims)]
        self.nu = sum(problem.block_dims)
        self.m = keep.size
        self.f = problem.n_free

    def A(self, xs) -> np.ndarray:
        out = np.zeros(self.m)
        for blk, x in zip(self.blocks, xs):
            if blk.active:
                out += blk.op(x)
        return out

    def At(self, y) -> list:
        return [blk.adj(y) for blk in self.blocks]

    def starting_point(self):
        xs, zs = [], []
        bmax = np.abs(self.b)
        for blk, c in zip(self.blocks, self.C):
            n = blk.n
            norms = np.sqrt(np.asarray(abs(blk.a).power(2).sum(axis=1)).ravel()) if self.m else np.zeros(0)
            xi = max(10.0, math.sqrt(n), n * float(np.max((1 + bmax) / (1 + norms))) if self.m else 0.0)
            eta = max(10.0, math.sqrt(n), float(norms.max()) if norms.size else 0.0, float(np.linalg.norm(c)))
            xs.append(xi * np.eye(n, dtype=complex))
            zs.append(eta * np.eye(n, dtype=complex))
        return xs, np.zeros(self.m), zs, np.zeros(self.f)

    def solve_kkt(self, factor, h, rf):
        """Solve ``M dy + B dxf = h``, ``B^T dy = rf`` with iterative refinement.

        ``factor`` holds the Cholesky factor of ``M + rho B B^T``.  Adding
        ``rho B (B^T dy - rf) = 0`` to the first equation leaves the
        solution unchanged, and the shifted matrix stays positive definite
        when ``M`` alone is singular (more constraints than PSD directions).
        """
        mat, chol, rho = factor
        if self.f == 0:
            dy = sla.cho_solve(chol, h, check_finite=False)
            for _ in range(REFINE_STEPS):
                dy = dy + sla.cho_solve(chol, h - mat @ dy, check_finite=False)
            return dy, np.zeros(0)
        mib = sla.cho_solve(chol, self.B, check_finite=False)
        k = self.B.T @ mib
        k = (k + k.T) / 2

        def elim(r1, r2):
            mih = sla.cho_solve(chol, r1 + rho * (self.B @ r2), check_finite=False)
            # free columns may be dependent (gauge directions); least squares picks the minimal step
            dxf = np.linalg.lstsq(k, self.B.T @ mih - r2, rcond=1e-13)[0]
            return mih - mib @ dxf, dxf

        dy, dxf = elim(h, rf)
        for _ in range(REFINE_STEPS):
            e1 = h - mat @ dy - self.B @ dxf
            e2 = rf - self.B.T @ dy
            cy, cf = elim(e1, e2)
            dy, dxf = dy + cy, dxf + cf
        return dy, dxf

    def direction(self, factor, xs, zs, zinvs, rds, rf, xf, sigma_mu, corr):
        # h = b - B xf - A(sigma mu Z^-1 - corr Z^-1 - X Rd Z^-1)
        terms = []
        for x, zi, rd, cr in zip(xs, zinvs, rds, corr):
            t = sigma_mu * zi - x @ rd @ zi
            if cr is not None:
                t = t - cr @ zi
            terms.append(t)
        h = self.b - (self.B @ xf if self.f else 0.0) - self.A(terms)
        dy, dxf = self.solve_kkt(factor, h, rf)
        aty = self.At(dy)
        dzs, dxs = [], []
        for x, zi, rd, cr, a in zip(xs, zinvs, rds, corr, aty):
            dz = rd - a
            dx = sigma_mu * zi - x - x @ dz @ zi
            if cr is not None:
                dx = dx - cr @ zi
            dxs.append((dx + dx.conj().T) / 2)
            dzs.append((dz + dz.conj().T) / 2)
        return dxs, dy, dzs, dxf


def solve(problem: SdpProblem, tol: float = 1e-8, max_iter: int = 500) -> SdpSolution:
    """Solve ``problem``; see the module docstring for the standard form.

    Returns an :class:`SdpSolution` whose status is one of ``optimal``,
    ``primal_infeasible``, ``dual_infeasible``, ``max_iterations`` or
    ``numerical_error``.  Non-optimal solutions still carry the best
    iterate found and its residuals.
    """
    pre = presolve(problem)
    m_full = problem.n_constraints
    if pre.infeasible_certificate is not None:
        y = pre.infeasible_certificate
        return _finish(problem, PRIMAL_INFEASIBLE, None, y, None, 0, tol,
                       certificate={"y": y})

    ipm = _Ipm(problem, pre.keep)
    xs, y, zs, xf = ipm.starting_point()
    b_scale = 1 + float(np.abs(ipm.b).max(initial=0.0))
    c_scale = 1 + max([float(np.abs(c).max()) for c in ipm.C] + [float(np.abs(ipm.cf).max(initial=0.0))])
    best = None
    best_opt = None
    extra = 0
    stall = 0
    status = MAX_ITERATIONS
    cert = {}
    it = 0
    for it in range(max_iter + 1):
        aty = ipm.At(y)
        rds = [c - a - z for c, a, z in zip(ipm.C, aty, zs)]
        rp = ipm.b - ipm.A(xs) - (ipm.B @ xf if ipm.f else 0.0)
        rf = ipm.cf - ipm.B.T @ y if ipm.f else np.zeros(0)
        pobj = sum(_inner(c, x) for c, x in zip(ipm.C, xs)) + float(ipm.cf @ xf)
        dobj = float(ipm.b @ y)
        mu = sum(_inner(x, z) for x, z in zip(xs, zs)) / ipm.nu
        pinf = float(np.abs(rp).max(initial=0.0))
        dinf = max([float(np.abs(r).max()) for r in rds] + [float(np.abs(rf).max(initial=0.0))])
        gap = abs(pobj - dobj)
        score = max(pinf / b_scale, dinf / c_scale, gap / (1 + abs(pobj)))
        logger.debug("it %3d pobj %+.10e dobj %+.10e pinf %.1e dinf %.1e mu %.1e", it, pobj, dobj, pinf, dinf, mu)
        if best is None or score < best[0]:
            best = (score, [x.copy() for x in xs], y.copy(), [z.copy() for z in zs], xf.copy(), it)
        if pinf <= tol and dinf <= tol and gap <= tol * (1 + abs(pobj)):
            # keep polishing while cheap; the best converged iterate is returned
            err = max(pinf, dinf, gap / (1 + abs(pobj)))
            if best_opt is None or err < best_opt[0]:
                best_opt = (err, [x.copy() for x in xs], y.copy(), [z.copy() for z in zs], xf.copy(), it)
            if err <= POLISH_FACTOR * tol:
                break
        if best_opt is not None:
            extra += 1
            if extra > POLISH_STEPS:
                break
        # Farkas-type certificates along diverging iterates
        if dobj > 0 and pinf > math.sqrt(tol) * b_scale:
            yh = y / dobj
            lmax = max(np.linalg.eigvalsh(a)[-1] for a in aty) / dobj
            if lmax <= CERTIFICATE_TOL and (ipm.f == 0 or np.abs(ipm.B.T @ yh).max() <= CERTIFICATE_TOL):
                status = PRIMAL_INFEASIBLE
                yfull = np.zeros(m_full)
                yfull[pre.keep] = yh
                cert = {"y": yfull}
                break
        if pobj < 0 and dinf > math.sqrt(tol) * c_scale:
            xh = [x / -pobj for x in xs]
            fh = xf / -pobj
            ax = ipm.A(xh) + (ipm.B @ fh if ipm.f else 0.0)
            if np.abs(ax).max(initial=0.0) <= CERTIFICATE_TOL:
                status = DUAL_INFEASIBLE
                cert = {"x": xh, "x_free": fh}
                break
        if it == max_iter:
            break

        zinvs = []
        for z in zs:
            lo = _chol(z)
            if lo is None:
                zinvs = None
                break
            zinvs.append(sla.cho_solve((lo, True), np.eye(z.shape[0]), check_finite=False))
        if zinvs is None:
            status = NUMERICAL_ERROR
            break
        mat = np.zeros((ipm.m, ipm.m))
        for blk, x, zi in zip(ipm.blocks, xs, zinvs):
            if blk.active:
                mat += blk.schur(x, zi)
        mat = (mat + mat.T) / 2
        factor = None
        reg = 0.0
        dmax = float(np.abs(np.diag(mat)).max(initial=1.0))
        shifted, rho = mat, 0.0
        if ipm.f:
            bb = ipm.B @ ipm.B.T
            rho = dmax / max(float(np.abs(np.diag(bb)).max(initial=0.0)), 1e-300)
            shifted = mat + rho * bb
        for _ in range(8):
            lo = _chol(shifted + reg * np.eye(ipm.m)) if ipm.m else np.zeros((0, 0))
            if lo is not None:
                factor = (mat, (lo, True), rho)
                break
            reg = max(reg * 100, 1e-14 * dmax)
        if factor is None:
            status = NUMERICAL_ERROR
            break

        nb = len(xs)
        dxp, dyp, dzp, dfp = ipm.direction(factor, xs, zs, zinvs, rds, rf, xf, 0.0, [None] * nb)
        ap = min(1.0, min(_max_step(x, d) for x, d in zip(xs, dxp)))
        ad = min(1.0, min(_max_step(z, d) for z, d in zip(zs, dzp)))
        mu_aff = sum(_inner(x + ap * dx, z + ad * dz) for x, dx, z, dz in zip(xs, dxp, zs, dzp)) / ipm.nu
        sigma = min(1.0, max(0.0, mu_aff / mu) ** 3) if mu > 0 else 0.0
        corr = [dx @ dz for dx, dz in zip(dxp, dzp)]
        dx, dy, dz, df = ipm.direction(factor, xs, zs, zinvs, rds, rf, xf, sigma * mu, corr)
        amax_p = min(_max_step(x, d) for x, d in zip(xs, dx))
        amax_d = min(_max_step(z, d) for z, d in zip(zs, dz))
        gamma = 0.9 + 0.09 * min(ap, ad)
        ap = min(1.0, gamma * amax_p)
        ad = min(1.0, gamma * amax_d)
        xs = [x + ap * d for x, d in zip(xs, dx)]
        xf = xf + ap * df
        y = y + ad * dy
        zs = [z + ad * d for z, d in zip(zs, dz)]
        stall = stall + 1 if max(ap, ad) < 1e-9 else 0
        if stall >= 5:
            status = NUMERICAL_ERROR
            break

    if best_opt is not None:
        status = OPTIMAL
        _, xs, y, zs, xf, _ = best_opt
    elif status in (MAX_ITERATIONS, NUMERICAL_ERROR):
        _, xs, y, zs, xf, _ = best
    yfull = np.zeros(m_full)
    yfull[pre.keep] = y
    return _finish(problem, status, xs, yfull, xf, it, tol, zs=zs, certificate=cert)


def _finish(problem, status, xs, y, xf, iterations, tol, zs=None, certificate=None) -> SdpSolution:
    if xs is None:
        xs = [np.zeros((n, n), dtype=complex) for n in problem.block_dims]
        xf = np.zeros(problem.n_free)
    if zs is None:
        zs = [c - a for c, a in zip(problem.objective, problem.adjoint(y))]
    pv = problem.primal_objective(xs, xf)
    dv = float(problem.rhs @ y)
    sol = SdpSolution(status, pv, dv, xs, xf, y, zs, Residuals(math.nan, math.nan, math.nan),
                      iterations, tol, certificate or {})
    sol.residuals = verify(problem, sol, tol).residuals
    return sol


# ---------------------------------------------------------------- verification


@dataclass
class VerifyReport:
    residuals: Residuals
    equality_residual: float
    primal_psd_violation: float
    dual_psd_violation: float
    free_dual_residual: float
    certificate_ok: bool | None
    ok: bool


def verify(problem: SdpProblem, solution: SdpSolution, tol: float = 1e-8) -> VerifyReport:
    """Recompute every residual of ``solution`` from the problem data alone."""
    xs, xf, y = solution.primal_blocks, solution.free_values, solution.dual_vector
    eq = float(np.abs(problem.apply(xs, xf) - problem.rhs).max(initial=0.0))
    ppsd = max([max(0.0, -np.linalg.eigvalsh((x + x.conj().T) / 2)[0]) for x in xs] + [0.0])
    zs = [c - a for c, a in zip(problem.objective, problem.adjoint(y))]
    dpsd = max([max(0.0, -np.linalg.eigvalsh((z + z.conj().T) / 2)[0]) for z in zs] + [0.0])
    fres = float(np.abs(problem.free_matrix.T @ y - problem.free_objective).max(initial=0.0))
    pv = problem.primal_objective(xs, xf)
    dv = float(problem.rhs @ y)
    res = Residuals(max(eq, ppsd), max(dpsd, fres), abs(pv - dv))
    cert_ok = None
    if solution.status == PRIMAL_INFEASIBLE:
        cert_ok = check_primal_infeasibility(problem, solution.certificate["y"])
    elif solution.status == DUAL_INFEASIBLE:
        cert_ok = check_dual_infeasibility(problem, solution.certificate["x"], solution.certificate["x_free"])
    ok = res.primal_feas <= tol and res.dual_feas <= tol and res.gap <= tol * (1 + abs(pv))
    return VerifyReport(res, eq, ppsd, dpsd, fres, cert_ok, ok)


def check_primal_infeasibility(problem: SdpProblem, y, tol: float = 1e-6) -> bool:
    """``y`` proves infeasibility if ``b.y > 0``, ``sum y_i A_i <= 0`` and ``B^T y = 0``."""
    y = np.asarray(y, dtype=float)
    by = float(problem.rhs @ y)
    if by <= 0:
        return False
    lmax = max([np.linalg.eigvalsh(a)[-1] for a in problem.adjoint(y / by)] + [-math.inf])
    fres = float(np.abs(problem.free_matrix.T @ (y / by)).max(initial=0.0))
    return lmax <= tol and fres <= tol


def check_dual_infeasibility(problem: SdpProblem, xs, xf, tol: float = 1e-6) -> bool:
    """An improving ray: ``X >= 0``, ``A(X) + B x_f = 0`` and objective ``< 0``."""
    obj = problem.primal_objective(xs, xf)
    if obj >= 0:
        return False
    s = -obj
    xs = [x / s for x in xs]
    xf = np.asarray(xf) / s
    psd = all(np.linalg.eigvalsh(x)[0] >= -tol for x in xs)
    return psd and float(np.abs(problem.apply(xs, xf)).max(initial=0.0)) <= tol


# ---------------------------------------------------------------- utilities


def realify(problem: SdpProblem) -> SdpProblem:
    """Equivalent real symmetric problem via ``X -> [[Re X, -Im X], [Im X, Re X]]``.

    ``tr(phi(A) phi(X)) = 2 tr(AX)``, so data matrices are halved.  The
    embedding doubles eigenvalue multiplicities and keeps optimal values.
    """

    def emb(a):
        return np.block([[a.real, -a.imag], [a.imag, a.real]]).astype(complex)

    bld = SdpBuilder([2 * n for n in problem.block_dims], problem.n_free)
    for b, c in enumerate(problem.objective):
        bld.set_objective(b, emb(np.asarray(c, dtype=complex)) / 2)
    for k, c in enumerate(problem.free_objective):
        bld.set_free_objective(k, c)
    for i in range(problem.n_constraints):
        terms = {b: emb(problem.constraint_matrix(i, b)) / 2 for b in range(len(problem.block_dims))}
        free = {k: problem.free_matrix[i, k] for k in range(problem.n_free)}
        bld.add_constraint(terms, problem.rhs[i], free)
    return bld.build()


def dump_problem(problem: SdpProblem, path) -> None:
    """Write a sparse text dump of ``problem`` for debugging.

    One line per nonzero::

        C <block> <row> <col> <re> <im>          objective entry
        A <constraint> <block> <row> <col> <re> <im>
        B <constraint> <free index> <value>      free-variable coefficient
        c <free index> <value>                   free-variable objective
        b <constraint> <value>                   right-hand side
    """
    lines = [f"# blocks {' '.join(map(str, problem.block_dims))} constraints {problem.n_constraints} "
             f"free {problem.n_free}"]
    for blk, c in enumerate(problem.objective):
        for r, col in zip(*np.nonzero(c)):
            lines.append(f"C {blk} {r} {col} {float(c[r, col].real)!r} {float(c[r, col].imag)!r}")
    for blk, (a, n) in enumerate(zip(problem.constraints, problem.block_dims)):
        coo = a.tocoo()
        for i, j, v in zip(coo.row, coo.col, coo.data):
            lines.append(f"A {i} {blk} {j // n} {j % n} {float(v.real)!r} {float(v.imag)!r}")
    for i, k in zip(*np.nonzero(problem.free_matrix)):
        lines.append(f"B {i} {k} {float(problem.free_matrix[i, k])!r}")
    for k, v in enumerate(problem.free_objective):
        if v:
            lines.append(f"c {k} {float(v)!r}")
    for i, v in enumerate(problem.rhs):
        lines.append(f"b {i} {float(v)!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
