"""File formats: DIMACS and edge-list graphs, JSON matrix spaces and maps.

Matrices are serialised as nested lists of ``[re, im]`` pairs, row-major::

    {"ambient_dim": 2, "basis": [[[[1, 0], [0, 0]], [[0, 0], [1, 0]]], ...]}
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .cb import OperatorSubspace, SubspaceMap
from .linalg import orthonormalize
from .systems import (
    Graph,
    MatricialSystem,
    diagonal_system,
    full_system,
    scalar_system,
    span_of,
    system_from_graph,
)


class InputFormatError(ValueError):
    """Malformed graph, system or map input."""


# ---------------------------------------------------------------- graphs


def _parse_dimacs(lines) -> Graph:
    n = None
    edges = []
    for lineno, raw in enumerate(lines, 1):
        tok = raw.split()
        if not tok or tok[0] == "c":
            continue
        if tok[0] == "p":
            if n is not None:
                raise InputFormatError(f"line {lineno}: second problem line")
            if len(tok) != 4 or tok[1] not in ("edge", "col"):
                raise InputFormatError(f"line {lineno}: malformed header {raw.strip()!r}; expected 'p edge n m'")
            try:
                n = int(tok[2])
                int(tok[3])
            except ValueError as exc:
                raise InputFormatError(f"line {lineno}: non-integer counts in header") from exc
        elif tok[0] == "e":
            if n is None:
                raise InputFormatError(f"line {lineno}: edge before the 'p edge' header")
            if len(tok) != 3:
                raise InputFormatError(f"line {lineno}: malformed edge line {raw.strip()!r}")
            i, j = _vertex(tok[1], lineno) - 1, _vertex(tok[2], lineno) - 1
            edges.append(_checked_edge(i, j, n, lineno, one_indexed=True))
        else:
            raise InputFormatError(f"line {lineno}: unknown line type {tok[0]!r}")
    if n is None:
        raise InputFormatError("missing 'p edge n m' header")
    return Graph(n, frozenset(edges))


def _parse_edgelist(lines) -> Graph:
    n = None
    edges = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if n is None:
            if len(tok) != 1:
                raise InputFormatError(f"line {lineno}: first line must hold the vertex count")
            n = _vertex(tok[0], lineno)
            if n < 1:
                raise InputFormatError("vertex count must be positive")
            continue
        if len(tok) != 2:
            raise InputFormatError(f"line {lineno}: expected 'i j', got {line!r}")
        edges.append(_checked_edge(_vertex(tok[0], lineno), _vertex(tok[1], lineno), n, lineno, one_indexed=False))
    if n is None:
        raise InputFormatError("empty edge list")
    return Graph(n, frozenset(edges))


def _vertex(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError as exc:
        raise InputFormatError(f"line {lineno}: {tok!r} is not an integer") from exc


def _checked_edge(i: int, j: int, n: int, lineno: int, one_indexed: bool):
    shown = (i + 1, j + 1) if one_indexed else (i, j)
    if i == j:
        raise InputFormatError(f"line {lineno}: self-loop at vertex {shown[0]}")
    if not (0 <= i < n and 0 <= j < n):
        raise InputFormatError(f"line {lineno}: edge {shown} out of range for {n} vertices")
    return (min(i, j), max(i, j))


def parse_graph_text(text: str, fmt: str) -> Graph:
    lines = text.splitlines()
    if fmt == "auto":
        first = next((ln.split()[0] for ln in lines if ln.strip()), "")
        fmt = "dimacs" if first in ("c", "p", "e") else "edgelist"
    if fmt == "dimacs":
        return _parse_dimacs(lines)
    if fmt == "edgelist":
        return _parse_edgelist(lines)
    raise InputFormatError(f"unknown graph format {fmt!r}")


def parse_graph(path, fmt: str = "auto") -> Graph:
    """Read a graph from a DIMACS (``p edge n m`` / ``e i j``, 1-indexed) or
    edge-list (first line ``n``, then ``i j`` pairs, 0-indexed) file.

    Duplicate and reversed edges are merged; self-loops are rejected.
    ``fmt="auto"`` picks DIMACS when the first token is ``c``, ``p`` or ``e``.
    """
    return parse_graph_text(Path(path).read_text(), fmt)


def graph_to_dimacs(g: Graph) -> str:
    lines = [f"p edge {g.vertex_count} {len(g.edges)}"]
    lines += [f"e {i + 1} {j + 1}" for i, j in g.sorted_edges()]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- matrices and systems


def matrix_to_json(a) -> list:
    a = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def matrix_from_json(obj, n: int | None = None) -> np.ndarray:
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputFormatError("matrix must be a nested list of [re, im] pairs") from exc
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise InputFormatError(f"matrix must have shape (n, n, 2), got {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise InputFormatError(f"matrix dimension {arr.shape[0]} does not match ambient_dim {n}")
    return arr[..., 0] + 1j * arr[..., 1]


def _load_json(path) -> dict:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(obj, dict):
        raise InputFormatError(f"{path}: expected a JSON object")
    return obj


def _basis_from_obj(obj: dict) -> tuple[int, list]:
    try:
        n = int(obj["ambient_dim"])
        mats = [matrix_from_json(m, n) for m in obj["basis"]]
    except KeyError as exc:
        raise InputFormatError(f"missing field {exc.args[0]!r}") from exc
    if n < 1 or not mats:
        raise InputFormatError("need ambient_dim >= 1 and a non-empty basis")
    return n, mats


BUILTIN_SYSTEMS = {"full": full_system, "scalar": scalar_system, "diagonal": diagonal_system}


def _builtin(source: str):
    name, _, dim = source.partition(":")
    if name in BUILTIN_SYSTEMS and dim.isdigit() and int(dim) >= 1:
        return name, int(dim)
    return None


def load_system(source: str) -> MatricialSystem:
    """Load a matricial system from a JSON file.

    The basis is re-orthonormalised and must span a unital, *-closed
    subspace: every basis matrix has to be Hermitian.  ``full:n``,
    ``scalar:n`` and ``diagonal:n`` name ``M_n``, ``C I_n`` and ``D_n``.
    """
    b = _builtin(source)
    if b:
        return BUILTIN_SYSTEMS[b[0]](b[1])
    n, mats = _basis_from_obj(_load_json(source))
    try:
        sp = span_of(mats, n)
    except ValueError as exc:
        raise InputFormatError(f"{source}: {exc}") from exc
    if not isinstance(sp, MatricialSystem):
        raise InputFormatError(f"{source}: span does not contain the identity")
    return sp


def system_to_json(s) -> dict:
    return {"ambient_dim": s.ambient_dim, "basis": [matrix_to_json(g) for g in s.basis]}


def write_system(s, path) -> None:
    Path(path).write_text(json.dumps(system_to_json(s)) + "\n")


def load_operator_space(source: str) -> OperatorSubspace:
    """Operator subspace from JSON (arbitrary complex basis) or ``full:n`` / ``scalar:n``."""
    b = _builtin(source)
    if b:
        if b[0] == "full":
            return OperatorSubspace.full(b[1])
        if b[0] == "scalar":
            return OperatorSubspace.scalars(b[1])
        raise InputFormatError(f"no operator-space builtin {b[0]!r}")
    n, mats = _basis_from_obj(_load_json(source))
    try:
        return OperatorSubspace(n, tuple(mats))
    except ValueError as exc:
        raise InputFormatError(f"{source}: {exc}") from exc


def load_map(source: str) -> SubspaceMap:
    """Linear map from JSON or a builtin.

    JSON: ``{"domain": {"ambient_dim": n, "basis": [...]}, "out_dim": m,
    "images": [...]}``.  Builtins on ``M_n``: ``identity:n``,
    ``transpose:n``.
    """
    name, _, dim = source.partition(":")
    if name in ("identity", "transpose") and dim.isdigit():
        e = OperatorSubspace.full(int(dim))
        fn = (lambda x: x) if name == "identity" else (lambda x: x.T)
        return SubspaceMap.from_function(e, int(dim), fn)
    obj = _load_json(source)
    try:
        dom = _basis_from_obj(obj["domain"])
        m = int(obj["out_dim"])
        imgs = [matrix_from_json(a, m) for a in obj["images"]]
        return SubspaceMap(OperatorSubspace(dom[0], tuple(dom[1])), m, tuple(imgs))
    except KeyError as exc:
        raise InputFormatError(f"{source}: missing field {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise InputFormatError(f"{source}: {exc}") from exc


def graph_system(g: Graph, kind: str) -> MatricialSystem:
    return system_from_graph(g, kind)


# ---------------------------------------------------------------- canonical digests

DIGEST_DECIMALS = 9


def _canon_array(a: np.ndarray) -> list:
    r = np.round(np.asarray(a, dtype=float), DIGEST_DECIMALS) + 0.0
    return r.ravel().tolist()


def canonical_graph(g: Graph) -> dict:
    return {"n": g.vertex_count, "edges": [list(e) for e in g.sorted_edges()]}


def canonical_space(basis, n: int) -> dict:
    """Basis-independent fingerprint: the orthogonal projector onto the real span."""
    herm = all(np.allclose(m, np.conj(m).T) for m in basis)
    if herm:
        ob = orthonormalize(basis)
        flat = np.array([np.concatenate([g.real.ravel(), g.imag.ravel()]) for g in ob])
    else:
        # complex span: projector in the realified coordinates of span{b, i b}
        vecs = []
        for m in basis:
            m = np.asarray(m, dtype=complex)
            vecs += [np.concatenate([m.real.ravel(), m.imag.ravel()]),
                     np.concatenate([-m.imag.ravel(), m.real.ravel()])]
        q, r = np.linalg.qr(np.array(vecs).T)
        flat = q[:, np.abs(np.diag(r)) > 1e-10].T
    proj = flat.T @ flat
    return {"n": n, "projector": _canon_array(proj)}


def digest(obj) -> str:
    payload = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()
