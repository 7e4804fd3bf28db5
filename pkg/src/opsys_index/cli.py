"""Command-line front end.

Every subcommand prints one JSON record::

    {"command", "inputs", "digest", "parameters", "value", "dual_value",
     "gap", "status", "solver": {"iterations", "tol", ...}, "details", ...}

Exit codes: 0 optimal (or a finished heuristic), 1 bad input or size
guard, 2 infeasible, 3 iteration limit, 4 numerical breakdown.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import math
import sys

import numpy as np

from . import __version__, sdp
from .cache import ResultCache, cache_dir
from .cb import cb_index_dc, cb_norm_certified, bounded_index_linf
from .indices import (
    MAX_BLOCK_DIM,
    SizeGuardError,
    coindex,
    cp_index_dual,
    cp_index_primal,
    cp_index_relative,
    lambda_tilde,
    multiplicativity_check,
)
from .io import (
    InputFormatError,
    canonical_graph,
    canonical_space,
    digest,
    load_map,
    load_operator_space,
    load_system,
    parse_graph,
)
from .systems import Graph, perp, system_from_graph
from .theta import hoffman_heuristic, lovasz_theta, quantum_theta, relative_theta

logger = logging.getLogger("opsys_index.cli")

SIG_DIGITS = 12
EXIT = {sdp.OPTIMAL: 0, "ok": 0, "no_feasible_witness": 0, sdp.PRIMAL_INFEASIBLE: 2,
        sdp.DUAL_INFEASIBLE: 2, sdp.MAX_ITERATIONS: 3, sdp.NUMERICAL_ERROR: 4}
EXIT_INPUT = 1
SEVERITY = [sdp.OPTIMAL, sdp.MAX_ITERATIONS, sdp.NUMERICAL_ERROR, sdp.DUAL_INFEASIBLE, sdp.PRIMAL_INFEASIBLE]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which is reserved for infeasibility here
    def error(self, message):
        raise UsageError(message)


def _num(v):
    """Round to 12 significant digits; non-finite values become ``None``."""
    if v is None:
        return None
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    if not math.isfinite(v):
        return None
    return float(f"{v:.{SIG_DIGITS}g}")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, str) or obj is None:
        return obj
    return _num(obj)


def dumps(record: dict) -> str:
    """Canonical serialisation: sorted keys, fixed indentation, rounded numbers."""
    return json.dumps(_clean(record), sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------- inputs


def _graphs(args) -> list[Graph]:
    return [parse_graph(p, args.graph_format) for p in (args.graph or [])]


def _system_from_args(args, idx: int = 0):
    """System from ``--system`` (file or builtin) or from ``--graph`` with ``--kind``."""
    if args.system and len(args.system) > idx:
        s = load_system(args.system[idx])
        return s, canonical_space(list(s.basis), s.ambient_dim)
    graphs = _graphs(args)
    if len(graphs) > idx:
        g = graphs[idx]
        return system_from_graph(g, args.kind), {"graph": canonical_graph(g), "kind": args.kind}
    raise UsageError("this command needs --system or --graph")


def _system0(args, idx: int = 0):
    if not args.system0 or len(args.system0) <= idx:
        raise UsageError("this command needs --system0")
    s = load_system(args.system0[idx])
    return s, canonical_space(list(s.basis), s.ambient_dim)


def _guard(dim: int, cap: int):
    if dim > cap:
        raise SizeGuardError(f"SDP block dimension {dim} exceeds the cap {cap} (see --max-block)")


# ---------------------------------------------------------------- commands
# each returns (canonical inputs, outcome dict)


def _outcome(sol: sdp.SdpSolution | None, value, dual_value, details=None, status=None):
    if sol is None:
        return {"value": value, "dual_value": dual_value, "gap": None, "status": status or "ok",
                "iterations": 0, "residuals": None, "details": details or {}}
    gap = abs(value - dual_value) if value is not None and dual_value is not None else None
    r = sol.residuals
    return {"value": value, "dual_value": dual_value, "gap": gap, "status": status or sol.status,
            "iterations": sol.iterations,
            "residuals": {"primal_feas": r.primal_feas, "dual_feas": r.dual_feas, "gap": r.gap},
            "details": details or {}}


def _inv(v):
    return 1.0 / v if v else math.inf


def _solve_guarded(fn, transform):
    """Run ``fn``; on solver failure report the best iterate instead of raising."""
    try:
        res = fn()
        sol = res.solution
        return res, sol, transform(sol)
    except sdp.SdpError as exc:
        sol = exc.solution
        if sol is None:
            raise
        return None, sol, transform(sol)


def cmd_theta(args):
    graphs = _graphs(args)
    if not graphs:
        raise UsageError("theta needs --graph")
    g = graphs[0]
    form = args.form or "E_gamma_form"
    _guard(g.vertex_count, args.max_block)
    shift = 1.0 if form == "E_gamma_form" else 0.0
    _, sol, (v, d) = _solve_guarded(lambda: lovasz_theta(g, form, args.tol, args.max_iter),
                                    lambda s: (s.primal_value + shift, s.dual_value + shift))
    return {"graph": canonical_graph(g), "form": form}, _outcome(sol, v, d, {"form": form})


def cmd_qtheta(args):
    s, canon = _system_from_args(args)
    form = args.form or "dsw_dual"
    sign = 1.0 if form == "dsw_dual" else -1.0
    _, sol, (v, d) = _solve_guarded(
        lambda: quantum_theta(s, form, args.tol, args.max_iter, args.max_block),
        lambda x: (_inv(sign * x.primal_value), _inv(sign * x.dual_value)))
    return {"system": canon, "form": form}, _outcome(sol, v, d, {"form": form})


def cmd_cp_index(args):
    s, canon = _system_from_args(args)
    form = args.form or "primal"
    if form not in ("primal", "dual"):
        raise UsageError("cp-index --form must be 'primal' or 'dual'")
    fn = cp_index_primal if form == "primal" else cp_index_dual
    sign = -1.0 if form == "primal" else 1.0
    _, sol, (v, d) = _solve_guarded(lambda: fn(s, args.tol, args.max_iter, args.max_block),
                                    lambda x: (_inv(sign * x.primal_value), _inv(sign * x.dual_value)))
    return {"system": canon, "form": form}, _outcome(sol, v, d, {"form": form})


def cmd_cp_index_relative(args):
    s, canon = _system_from_args(args)
    s0, canon0 = _system0(args)
    _, sol, (v, d) = _solve_guarded(lambda: cp_index_relative(s, s0, args.tol, args.max_iter, args.max_block),
                                    lambda x: (x.primal_value, x.dual_value))
    return {"system": canon, "system0": canon0}, _outcome(sol, v, d)


def cmd_lambda_tilde(args):
    s, canon = _system_from_args(args)
    _, sol, (v, d) = _solve_guarded(
        lambda: lambda_tilde(s, tol=args.tol, max_iter=args.max_iter, max_block=args.max_block),
        lambda x: (x.primal_value, x.dual_value))
    return {"system": canon}, _outcome(sol, v, d)


def cmd_coindex(args):
    s, canon = _system_from_args(args)
    _, sol, (v, d) = _solve_guarded(
        lambda: coindex(s.ambient_dim, perp(s), args.tol, args.max_iter, args.max_block),
        lambda x: (x.primal_value, x.dual_value))
    return {"system": canon, "kernel": "perp"}, _outcome(sol, v, d)


def cmd_relative_theta(args):
    graphs = _graphs(args)
    if len(graphs) != 2:
        raise UsageError("relative-theta needs --graph twice: the graph and its spanning subgraph")
    g, sub = graphs
    _guard(g.vertex_count ** 2, args.max_block)
    try:
        call = lambda: relative_theta(g, sub, tol=args.tol, max_iter=args.max_iter, max_block=args.max_block)
        _, sol, (v, d) = _solve_guarded(call, lambda x: (x.primal_value, x.dual_value))
    except ValueError as exc:
        raise InputFormatError(str(exc)) from exc
    return {"graph": canonical_graph(g), "subgraph": canonical_graph(sub)}, _outcome(sol, v, d)


def cmd_cb_norm(args):
    if not args.map:
        raise UsageError("cb-norm needs --map")
    u = load_map(args.map)
    _guard(4 * u.domain.ambient_in * u.out_dim, args.max_block)
    canon = {"domain": canonical_space(list(u.domain.basis), u.domain.ambient_in),
             "images": [np.concatenate([a.real.ravel(), a.imag.ravel()]).round(9).tolist() for a in u.images]}
    _, sol, (v, d) = _solve_guarded(lambda: cb_norm_certified(u, args.tol, args.max_iter),
                                    lambda x: (x.primal_value, x.dual_value))
    return {"map": canon}, _outcome(sol, v, d)


def cmd_cb_index(args):
    if not args.system or not args.system0:
        raise UsageError("cb-index needs --system (X) and --system0 (X_0) operator spaces")
    x = load_operator_space(args.system[0])
    x0 = load_operator_space(args.system0[0])
    _guard(4 * x.ambient_in ** 2, args.max_block)
    try:
        rep = cb_index_dc(x, x0, restarts=args.restarts, seed=args.seed, tol=args.tol, max_iter=args.max_iter)
    except ValueError as exc:
        raise InputFormatError(str(exc)) from exc
    canon = {"space": canonical_space(list(x.basis), x.ambient_in),
             "space0": canonical_space(list(x0.basis), x0.ambient_in)}
    details = {"norm_u": rep.norm_u, "norm_u_minus_id": rep.norm_u_minus_id, "bound": "upper",
               "candidates_checked": len(rep.candidates)}
    status = "ok" if rep.feasible else "no_feasible_witness"
    return canon, _outcome(None, rep.value if rep.feasible else None, None, details, status)


def cmd_bounded_index_linf(args):
    if args.dim is None:
        raise UsageError("bounded-index-linf needs --dim")
    if args.dim < 2:
        raise InputFormatError("--dim must be at least 2")
    return {"n": args.dim}, _outcome(None, bounded_index_linf(args.dim), None, {"family": "constant-range"})


def cmd_mult_check(args):
    ss = args.system or []
    s0s = args.system0 or []
    if not ss or len(ss) != len(s0s) or len(ss) > 2:
        raise UsageError("mult-check needs one or two --system/--system0 pairs")
    s, s0 = load_system(ss[0]), load_system(s0s[0])
    t, t0 = (load_system(ss[1]), load_system(s0s[1])) if len(ss) == 2 else (s, s0)
    _guard((s.ambient_dim * t.ambient_dim) ** 2, args.max_block)
    canon = {"factors": [[canonical_space(list(a.basis), a.ambient_dim), canonical_space(list(b.basis), b.ambient_dim)]
                         for a, b in ((s, s0), (t, t0))]}
    try:
        rep = multiplicativity_check(s, s0, t, t0, tol=args.tol, max_iter=args.max_iter, max_block=args.max_block)
    except sdp.SdpError as exc:
        sol = exc.solution
        return canon, _outcome(sol, sol.primal_value, sol.dual_value)
    sol = rep.result.solution
    details = {"left": rep.left_index, "right": rep.right_index, "product_of_factors": rep.expected,
               "relative_deviation": rep.relative_deviation}
    return canon, _outcome(sol, rep.product_index, sol.dual_value, details)


def cmd_hoffman(args):
    s, canon = _system_from_args(args)
    try:
        rep = hoffman_heuristic(s, restarts=args.restarts, seed=args.seed)
    except ValueError as exc:
        raise InputFormatError(str(exc)) from exc
    details = {"lambda_max": rep.lambda_max, "lambda_min": rep.lambda_min, "bound": "evaluated at witness"}
    return {"system": canon}, _outcome(None, rep.value, None, details)


def cmd_compare(args):
    s, canon = _system_from_args(args)
    n = s.ambient_dim
    vals = {}
    statuses = []
    main_sol = None
    for key, fn, tr in [
        ("cp_index", lambda: cp_index_primal(s, args.tol, args.max_iter, args.max_block),
         lambda x: (_inv(-x.primal_value), _inv(-x.dual_value))),
        ("quantum_theta", lambda: quantum_theta(s, "dsw_dual", args.tol, args.max_iter, args.max_block),
         lambda x: (_inv(x.primal_value), _inv(x.dual_value))),
        ("coindex", lambda: coindex(n, perp(s), args.tol, args.max_iter, args.max_block),
         lambda x: (x.primal_value, x.dual_value)),
    ]:
        _, sol, (v, d) = _solve_guarded(fn, tr)
        vals[key] = v
        statuses.append(sol.status)
        if key == "cp_index":
            main_sol, main = sol, (v, d)
    graphs = _graphs(args)
    if graphs:
        vals["lovasz_theta"] = lovasz_theta(graphs[0], "E_gamma_form", args.tol, args.max_iter).value
    vals["cp_index_minus_quantum_theta"] = vals["cp_index"] - vals["quantum_theta"]
    vals["cp_index_minus_coindex"] = vals["cp_index"] - vals["coindex"]
    worst = max(statuses, key=SEVERITY.index)
    out = _outcome(main_sol, main[0], main[1], vals, worst)
    return {"system": canon}, out


COMMANDS = {
    "theta": cmd_theta,
    "qtheta": cmd_qtheta,
    "cp-index": cmd_cp_index,
    "cp-index-relative": cmd_cp_index_relative,
    "lambda-tilde": cmd_lambda_tilde,
    "coindex": cmd_coindex,
    "relative-theta": cmd_relative_theta,
    "cb-norm": cmd_cb_norm,
    "cb-index": cmd_cb_index,
    "bounded-index-linf": cmd_bounded_index_linf,
    "mult-check": cmd_mult_check,
    "hoffman": cmd_hoffman,
    "compare": cmd_compare,
}

HELP = {
    "theta": "Lovasz theta of a graph (--form E_gamma_form | S_gamma_form)",
    "qtheta": "quantum theta of a system (--form dsw_dual | dsw_primal)",
    "cp-index": "Ind_CP(M_n : S) (--form primal | dual)",
    "cp-index-relative": "Ind_CP(S : S_0) via CP extension",
    "lambda-tilde": "Ind_CP(S : C 1)",
    "coindex": "co-index of the kernel S^perp in M_n",
    "relative-theta": "theta(G : H) for a spanning subgraph H (--graph G --graph H)",
    "cb-norm": "completely bounded norm of a map (--map file | identity:n | transpose:n)",
    "cb-index": "upper bound on the CB-index of X_0 in X (--system X --system0 X_0)",
    "bounded-index-linf": "bounded index of C 1 in l_inf(n) (--dim n)",
    "mult-check": "compare Ind_CP of a tensor inclusion with the product of the factors",
    "hoffman": "Hoffman-type eigenvalue ratio heuristic over S^perp",
    "compare": "Ind_CP, quantum theta and co-index side by side",
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="opsys-index", description="Index invariants of matricial operator systems.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        c = sub.add_parser(name, help=HELP[name], description=HELP[name])
        c.add_argument("--graph", action="append", help="graph file (DIMACS or edge list); repeatable")
        c.add_argument("--graph-format", default="auto", choices=["auto", "dimacs", "edgelist"])
        c.add_argument("--kind", default="S_gamma", choices=["S_gamma", "E_gamma", "E_n", "D_n"],
                       help="system attached to --graph")
        c.add_argument("--system", action="append",
                       help="JSON system file or full:n, scalar:n, diagonal:n; repeatable")
        c.add_argument("--system0", action="append", help="subsystem, same formats; repeatable")
        c.add_argument("--map", help="JSON map file or identity:n, transpose:n")
        c.add_argument("--dim", type=int, help="dimension for bounded-index-linf")
        c.add_argument("--form", help="program form")
        c.add_argument("--tol", type=float, default=1e-8)
        c.add_argument("--max-iter", type=int, default=500)
        c.add_argument("--seed", type=int, default=0)
        c.add_argument("--restarts", type=int, default=5)
        c.add_argument("--max-block", type=int, default=MAX_BLOCK_DIM, help="size guard on SDP block dimension")
        c.add_argument("--out", help="write the JSON record here instead of stdout")
        c.add_argument("--cache-dir", help="result cache directory (default: $OPSYS_INDEX_CACHE)")
        c.add_argument("-v", "--verbose", action="count", default=0)
    return p


def _parameters(args) -> dict:
    return {"tol": args.tol, "max_iter": args.max_iter, "seed": args.seed, "restarts": args.restarts,
            "form": args.form, "kind": args.kind if args.graph else None, "max_block": args.max_block}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"opsys-index: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if not args.command:
        parser.print_help(sys.stderr)
        return EXIT_INPUT
    level = logging.WARNING if args.verbose == 0 else (logging.INFO if args.verbose == 1 else logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.verbose == 0:
        # presolve notes are routine for the index programs
        logging.getLogger("opsys_index.sdp").setLevel(logging.ERROR)

    params = _parameters(args)
    try:
        canon, out = _execute(args, params)
    except (UsageError, InputFormatError, SizeGuardError, OSError) as exc:
        print(f"opsys-index {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if isinstance(out, str):
        text = out
        status = json.loads(text)["status"]
    else:
        text, status = out
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT.get(status, 4)


def _execute(args, params):
    fn = COMMANDS[args.command]
    # the digest covers parsed, canonicalised inputs, so equivalent files share records
    canon = _canonical_only(args)
    input_digest = digest(canon)
    key = digest({"command": args.command, "inputs": canon, "parameters": _clean(params)})
    store = None
    root = cache_dir(args.cache_dir)
    if root is not None:
        store = ResultCache(root)
        hit = store.lookup(key, _clean(params))
        if hit is not None:
            logger.info("served from cache %s", key)
            return canon, dumps(hit)
    _, res = fn(args)
    record = {
        "command": args.command,
        "inputs": input_digest,
        "digest": key,
        "parameters": params,
        "value": res["value"],
        "dual_value": res["dual_value"],
        "gap": res["gap"],
        "status": res["status"],
        "solver": {"iterations": res["iterations"], "tol": args.tol, "max_iter": args.max_iter,
                   "residuals": res["residuals"]},
        "details": res["details"],
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    text = dumps(record)
    if store is not None:
        store.store(key, text)
    return canon, (text, res["status"])


def _canonical_only(args) -> dict:
    """Canonical description of the inputs, computed without solving anything."""
    canon = {}
    if args.graph:
        canon["graphs"] = [canonical_graph(g) for g in _graphs(args)]
        canon["kind"] = args.kind
    if args.system:
        canon["systems"] = []
        for source in args.system:
            if args.command == "cb-index":
                x = load_operator_space(source)
                canon["systems"].append(canonical_space(list(x.basis), x.ambient_in))
            else:
                s = load_system(source)
                canon["systems"].append(canonical_space(list(s.basis), s.ambient_dim))
    if args.system0:
        canon["systems0"] = []
        for source in args.system0:
            if args.command == "cb-index":
                x = load_operator_space(source)
                canon["systems0"].append(canonical_space(list(x.basis), x.ambient_in))
            else:
                s = load_system(source)
                canon["systems0"].append(canonical_space(list(s.basis), s.ambient_dim))
    if args.map:
        u = load_map(args.map)
        canon["map"] = {"domain": canonical_space(list(u.domain.basis), u.domain.ambient_in),
                        "images": [np.round(np.concatenate([a.real.ravel(), a.imag.ravel()]), 9).tolist()
                                   for a in u.images]}
    if args.dim is not None:
        canon["dim"] = args.dim
    return canon


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
