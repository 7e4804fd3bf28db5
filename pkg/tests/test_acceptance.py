"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL`` line (also collected in
the pytest terminal summary).  Run directly with ``python3
tests/test_acceptance.py`` for the bare report.
"""
from __future__ import annotations

import math
import time

import numpy as np
import pytest
from scipy.optimize import brentq

from conftest import ACCEPTANCE_LINES, CORPUS
from opsys_index.cb import (
    OperatorSubspace,
    SubspaceMap,
    bounded_index_linf,
    cb_norm,
)
from opsys_index.choi import LinearMapOnMatrices, choi_expectation_matrix, depolarizing_gap_map, is_cp
from opsys_index.indices import (
    coindex,
    cp_index_dual,
    cp_index_primal,
    cp_index_relative,
    is_proper_subsystem,
    lambda_tilde,
)
from opsys_index.linalg import lambda_min, random_psd
from opsys_index.systems import (
    diagonal_system,
    full_system,
    perp,
    random_system,
    scalar_system,
    system_from_graph,
    tensor_min,
)
from opsys_index.theta import lovasz_theta, quantum_theta


def report(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def criterion_1():
    rows, ok = [], True
    for n in (2, 3, 4, 5):
        t0 = time.perf_counter()
        v = cp_index_relative(full_system(n), scalar_system(n)).value
        dt = time.perf_counter() - t0
        good = abs(v - n) <= 1e-5 and dt <= 10
        ok &= good
        rows.append(f"n={n}: {v:.9g} (target {n}, {dt:.2f}s)")
    return ok, "lambda~(M_n) = n; " + "; ".join(rows)


def criterion_2():
    rows, ok = [], True
    for n in (2, 3, 4, 5):
        v = lambda_tilde(diagonal_system(n)).value
        ok &= abs(v - n) <= 1e-5
        rows.append(f"n={n}: {v:.9g}")
    return ok, "lambda~(D_n) = n; " + "; ".join(rows)


def criterion_3():
    rows, ok = [], True
    for name, g in CORPUS.items():
        idx = cp_index_primal(system_from_graph(g)).value
        te = lovasz_theta(g, "E_gamma_form").value
        ts = lovasz_theta(g, "S_gamma_form").value
        dev = max(abs(idx - te), abs(idx - ts), abs(te - ts))
        ok &= dev <= 1e-5
        if name == "C5":
            ok &= abs(te - math.sqrt(5)) <= 1e-5
        rows.append(f"{name}: {idx:.9g} (dev {dev:.1e})")
    return ok, "Ind_CP(M_n:S_G) = theta(G); " + "; ".join(rows)


def criterion_4():
    rows, ok = [], True
    for name, g in CORPUS.items():
        lt = lambda_tilde(system_from_graph(g, "E_gamma")).value
        tb = lovasz_theta(g.complement()).value
        ok &= abs(lt - tb) <= 1e-5
        rows.append(f"{name}: {lt:.9g} vs {tb:.9g}")
    return ok, "lambda~(E_G) = theta(complement G); " + "; ".join(rows)


def criterion_5():
    rng = np.random.default_rng(2024)
    systems = [random_system(3, int(rng.integers(1, 8)), rng) for _ in range(10)]
    systems += [system_from_graph(g) for g in CORPUS.values()]
    worst = 0.0
    for s in systems:
        worst = max(worst, abs(cp_index_primal(s).value - cp_index_dual(s).value))
    return worst <= 1e-6, f"primal/dual agreement on {len(systems)} systems, worst |diff| = {worst:.1e}"


def criterion_6():
    opts = {"CI2": scalar_system(2), "D2": diagonal_system(2), "M2": full_system(2)}
    single = {k: cp_index_primal(s).value for k, s in opts.items()}
    worst = 0.0
    for a, s in opts.items():
        for b, t in opts.items():
            v = cp_index_primal(tensor_min(s, t)).value
            worst = max(worst, abs(v - single[a] * single[b]) / (single[a] * single[b]))
    part_a = worst <= 1e-4
    v = cp_index_relative(full_system(6), tensor_min(scalar_system(2), scalar_system(3))).value
    part_b = abs(v - 6) <= 1e-4
    detail = (f"Ind_CP(M_4:S(x)T) vs product, worst rel. error {worst:.1e} ({'ok' if part_a else 'bad'}); "
              f"(M_2:CI_2)(x)(M_3:CI_3) = {v:.9g}, target 6 ({'ok' if part_b else 'bad'}; "
              f"factors {single['CI2']:.6g} and {cp_index_primal(scalar_system(3)).value:.6g})")
    return part_a and part_b, detail


def criterion_7():
    rows, ok = [], True
    for name, g in CORPUS.items():
        s = system_from_graph(g)
        co = coindex(g.vertex_count, perp(s)).value
        th = lovasz_theta(g).value
        ok &= co <= th + 1e-6
        rows.append(f"{name}: coindex {co:.9g} theta {th:.9g}")
    return ok, "coindex <= theta; " + "; ".join(rows)


def criterion_8():
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(10):
        s = random_system(3, int(rng.integers(1, 8)), rng)
        worst = max(worst, abs(quantum_theta(s, "dsw_dual").value - quantum_theta(s, "dsw_primal").value))
    rows = []
    for name, g in CORPUS.items():
        s = system_from_graph(g)
        rows.append(f"{name}: qtheta {quantum_theta(s).value:.9g} theta {lovasz_theta(g).value:.9g} "
                    f"Ind_CP {cp_index_primal(s).value:.9g}")
    return worst <= 1e-6, f"qtheta forms worst |diff| = {worst:.1e}; table: " + "; ".join(rows)


def criterion_9():
    rows, part_a = [], True
    for n in (2, 3):
        at = is_cp(depolarizing_gap_map(n, n))
        below = is_cp(depolarizing_gap_map(n, n - 1e-6))
        # locate the actual threshold: root of the smallest Choi eigenvalue in c
        sharp = brentq(lambda c: lambda_min(depolarizing_gap_map(n, c).choi), 0.0, 100.0, xtol=1e-12)
        good = at and not below
        part_a &= good
        rows.append(f"n={n}: CP at c=n {at}, CP at c=n-1e-6 {below}, actual threshold c={sharp:.9g}")
    rng = np.random.default_rng(99)
    worst = math.inf
    for _ in range(50):
        phi = LinearMapOnMatrices(3, 3, random_psd(9, rng, rank=int(rng.integers(1, 10))))
        worst = min(worst, float(np.linalg.eigvalsh(choi_expectation_matrix(phi))[0]))
    part_b = worst >= -1e-8
    return part_a and part_b, ("T_n CP iff c >= n: " + "; ".join(rows)
                               + f"; expectation matrix on 50 CP maps, min eigenvalue {worst:.2e}")


def criterion_10():
    e2 = OperatorSubspace.full(2)
    t = cb_norm(SubspaceMap.from_function(e2, 2, lambda x: x.T))
    ok = abs(t - 2) <= 1e-5
    rng = np.random.default_rng(10)
    e3 = OperatorSubspace.full(3)
    worst = 0.0
    for _ in range(5):
        a = random_psd(3, rng)
        v = cb_norm(SubspaceMap.from_function(e3, 3, lambda x, a=a: a * x))
        worst = max(worst, abs(v - float(np.real(np.diag(a)).max())))
    ok &= worst <= 1e-6
    return ok, f"cb-norm of transpose on M_2 = {t:.9g}; Schur multipliers worst |diff| = {worst:.1e}"


def criterion_11():
    rows, ok = [], True
    for n in range(2, 7):
        t0 = time.perf_counter()
        v = bounded_index_linf(n)
        dt = time.perf_counter() - t0
        ok &= abs(v - n) <= 1e-9 and dt <= 1.0
        rows.append(f"n={n}: {v!r} ({dt * 1e3:.1f} ms)")
    return ok, "Ind_B(l_inf(n):C1) = n; " + "; ".join(rows)


def criterion_12():
    rng = np.random.default_rng(12)
    vals = []
    ok = True
    for k in range(10):
        s = random_system(3, 1 + k % 7, rng)
        assert is_proper_subsystem(s, full_system(3))
        v = cp_index_primal(s).value
        vals.append(v)
        ok &= v > 1 + 1e-6
    return ok, f"Ind_CP(M_3:S) > 1 on 10 proper subsystems; min {min(vals):.9g}"


def criterion_13():
    # scope statement: the excluded infinite-dimensional results are represented by the
    # finite-dimensional checks of criteria 3 and 4 on a non-empty corpus
    ok = len(CORPUS) >= 4 and all(g.vertex_count <= 6 for g in CORPUS.values())
    return ok, (f"infinite-dimensional statements excluded; shadows covered by criteria 3 and 4 "
                f"on {len(CORPUS)} corpus graphs")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9, criterion_10, criterion_11, criterion_12, criterion_13]


@pytest.mark.parametrize("number", range(1, len(CRITERIA) + 1))
def test_criterion(number):
    ok, detail = CRITERIA[number - 1]()
    report(number, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    for i, fn in enumerate(CRITERIA, 1):
        report(i, *fn())
