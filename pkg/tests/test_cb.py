import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opsys_index.cb import (
    OperatorSubspace,
    SubspaceMap,
    averaging_map,
    bounded_index_linf,
    cb_index_dc,
    cb_index_feasibility,
    cb_norm,
    cb_norm_certified,
    functional_value,
    linf_operator_norm,
    paulsen_shifted_map_is_cp,
)
from opsys_index.linalg import DimensionError, random_psd
from oracles import linf_norm_brute

E2 = OperatorSubspace.full(2)


def tau_map(n, scale):
    e = OperatorSubspace.full(n)
    return SubspaceMap.from_function(e, n, lambda x: scale * np.trace(x) / n * np.eye(n))


def test_operator_subspace_checks():
    with pytest.raises(ValueError):
        OperatorSubspace(2, (np.eye(2), 2 * np.eye(2)))
    with pytest.raises(DimensionError):
        OperatorSubspace(2, (np.eye(3),))
    assert E2.contains(np.array([[1, 2j], [3, 4]]))
    assert not OperatorSubspace.scalars(2).contains(np.diag([1.0, 2.0]))


def test_cb_norm_identity_and_transpose():
    for n in (1, 2, 3):
        e = OperatorSubspace.full(n)
        assert abs(cb_norm(SubspaceMap.identity(e)) - 1) <= 1e-7
    t = SubspaceMap.from_function(E2, 2, lambda x: x.T)
    assert abs(cb_norm(t) - 2) <= 1e-5


def test_cb_norm_identity_on_subspaces(rng):
    for dim in (1, 2, 3):
        mats = tuple(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(dim))
        e = OperatorSubspace(2, mats)
        assert abs(cb_norm(SubspaceMap.identity(e)) - 1) <= 1e-7


def test_cb_norm_of_schur_multiplier(rng):
    e = OperatorSubspace.full(3)
    for _ in range(3):
        a = random_psd(3, rng)
        u = SubspaceMap.from_function(e, 3, lambda x: a * x)
        assert abs(cb_norm(u) - np.real(np.diag(a)).max()) <= 1e-6


def test_cb_norm_homogeneous_and_triangle(rng):
    t = SubspaceMap.from_function(E2, 2, lambda x: x.T)
    i = SubspaceMap.identity(E2)
    assert abs(cb_norm(t * 3.0) - 3 * cb_norm(t)) <= 1e-6
    assert cb_norm(t + i) <= cb_norm(t) + cb_norm(i) + 1e-6


def test_norming_functional_minorises(rng):
    t = SubspaceMap.from_function(E2, 2, lambda x: x.T)
    cert = cb_norm_certified(t)
    assert abs(functional_value(cert.functional, t) - cert.value) <= 1e-6
    for _ in range(5):
        imgs = tuple(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(4))
        v = SubspaceMap(E2, 2, imgs)
        assert functional_value(cert.functional, v) <= cb_norm(v) + 1e-6


def test_paulsen_shift_criterion():
    # u~_1 - lam id CP  iff  ||u - lam id||_cb <= 1 - lam
    i = SubspaceMap.identity(E2)
    tr = tau_map(2, 1.0)
    for u in ((i + tr) * 0.5, SubspaceMap.from_function(E2, 2, lambda x: x.T) * 0.5):
        for lam in (0.1, 0.5, 0.9):
            lhs = paulsen_shifted_map_is_cp(u, lam)
            rhs = cb_norm(u - i * lam) <= 1 - lam + 1e-7
            assert lhs == rhs


def test_witness_feasibility_arithmetic():
    # 2 tau fails: ||2 tau - id||_cb = 2 > 1; 4 tau works: ||4 tau - id||_cb = 3 = 4 - 1
    ok, nu, nd = cb_index_feasibility(tau_map(2, 2.0))
    assert not ok and abs(nu - 2) <= 1e-6 and abs(nd - 2) <= 1e-6
    ok, nu, nd = cb_index_feasibility(tau_map(2, 4.0))
    assert ok and abs(nu - 4) <= 1e-6 and abs(nd - 3) <= 1e-6
    zero = SubspaceMap(E2, 2, tuple(np.zeros((2, 2)) for _ in range(4)))
    ok, nu, nd = cb_index_feasibility(zero)
    assert not ok and abs(nd - 1) <= 1e-7


def test_cb_index_trivial_inclusion():
    rep = cb_index_dc(OperatorSubspace.scalars(2), OperatorSubspace.scalars(2), restarts=1)
    assert rep.feasible
    assert abs(rep.value - 1) <= 1e-6


def test_cb_index_scalars_in_m2():
    rep = cb_index_dc(E2, OperatorSubspace.scalars(2), restarts=2, seed=0)
    assert rep.feasible
    assert rep.value <= 4 + 1e-6
    # certified: re-verify the witness from scratch
    ok, nu, nd = cb_index_feasibility(rep.witness)
    assert ok and abs(nu - rep.value) <= 1e-7
    # the witness maps into X_0
    for img in rep.witness.images:
        assert OperatorSubspace.scalars(2).contains(img, tol=1e-7)


def test_cb_index_deterministic():
    a = cb_index_dc(E2, OperatorSubspace.scalars(2), restarts=2, seed=3, max_rounds=5)
    b = cb_index_dc(E2, OperatorSubspace.scalars(2), restarts=2, seed=3, max_rounds=5)
    assert a.value == b.value


def test_cb_index_rejects_non_subspace():
    with pytest.raises(ValueError):
        cb_index_dc(OperatorSubspace.scalars(2), E2)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_bounded_index_linf(n):
    t0 = time.perf_counter()
    assert abs(bounded_index_linf(n) - n) <= 1e-9
    assert time.perf_counter() - t0 <= 1.0


def test_averaging_map_witness():
    for n in (2, 3, 5):
        e = averaging_map(n)
        assert abs(linf_operator_norm(n * e) - n) <= 1e-12
        assert abs(linf_operator_norm(n * e - np.eye(n)) - (n - 1)) <= 1e-12
        assert abs(linf_operator_norm(e - 0.5 * np.eye(n)) - linf_norm_brute(e - 0.5 * np.eye(n))) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5), st.floats(-3, 3, allow_nan=False))
def test_constant_range_family_is_never_better(n, t):
    # every T = t 1 1^T obeying ||T - id|| <= ||T|| - 1 has ||T|| >= n
    mat = np.full((n, n), t)
    if linf_operator_norm(mat - np.eye(n)) <= linf_operator_norm(mat) - 1 - 1e-12:
        assert linf_operator_norm(mat) >= n - 1e-9
    assert abs(linf_operator_norm(mat) - linf_norm_brute(mat)) <= 1e-9


def test_bounded_index_rejects_small_n():
    with pytest.raises(ValueError):
        bounded_index_linf(1)
    assert math.isfinite(bounded_index_linf(2))
