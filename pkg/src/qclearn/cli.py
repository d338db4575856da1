"""Command-line harness: ``gen``, ``learn``, ``hier``, ``fig1``, ``table1``, ``evolve``.

Exit codes: 0 on success, 2 when a solve does not converge, 1 on usage
or I/O errors. All randomness flows from ``--seed``; identical flags give
byte-identical outputs. CSV floats are written with 17 significant digits.
"""

import argparse
import csv
import io
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import dynamics, hierarchy, states, superop
from .errors import NotConvergedError, QCLearnError
from .qcqp import SolverConfig, solve

# CLI proxy name -> superoperator kind (prop is evaluation-only)
PROXY_KIND = {
    "rho_sigma": "plain",
    "sqrt": "sqrt",
    "vec": "vec_normalized",
    "nrho2": "nrho2_normalized",
    "log": "log_entropy",
}
PROXIES = tuple(PROXY_KIND) + ("prop",)
FIG1_PROXIES = ("rho_sigma", "sqrt", "vec", "prop")
TABLE1_PROXIES = ("rho_sigma", "vec", "nrho2", "sqrt")
CHANNELS = ("auto", "unitary", "mixed", "kraus")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _write_text(path, text: str):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _write_json(path, doc):
    _write_text(path, json.dumps(doc, indent=1) + "\n")


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) if isinstance(x, (float, np.floating)) else x for x in r])
    _write_text(path, buf.getvalue())


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc


# ---------------------------------------------------------------- generation


def _dims(args):
    n = 10 if args.n is None else args.n
    d = n if args.d is None else args.d
    if n < 1 or d < 1 or d > n:
        raise UsageError(f"need 1 <= D <= n, got n={n}, D={d}")
    if args.m is not None and args.m < 1:
        raise UsageError("--m must be at least 1")
    if not 1 <= args.nr <= n:
        raise UsageError(f"--nr must lie in [1, {n}]")
    if args.ns < 1:
        raise UsageError("--ns must be at least 1")
    return n, d


def make_channel(kind: str, d: int, n: int, n_s: int, rng) -> np.ndarray:
    """Kraus stack of the requested family.

    ``auto`` picks a partial unitary for ``n_s = 1`` and a mixed unitary
    channel otherwise. ``kraus`` gives a general trace-preserving stack; it
    is not unital, so quadratic proxies on it can exceed the record count.
    """
    if kind == "auto":
        kind = "unitary" if n_s == 1 else "mixed"
    if kind == "unitary":
        if n_s != 1:
            raise UsageError("--channel unitary needs --ns 1")
        return states.random_partial_unitary(d, n, rng)
    if kind == "mixed":
        return states.random_mixed_unitary(d, n, n_s, rng).kraus()
    return states.random_kraus_channel(d, n, n_s, rng)


def make_inputs(n: int, n_r: int, m: int, rng) -> np.ndarray:
    return np.array([states.random_density(n, n_r, rng) for _ in range(m)])


def cmd_gen(args) -> int:
    n, d = _dims(args)
    rng = np.random.default_rng(args.seed)
    b = make_channel(args.channel, d, n, args.ns, rng)
    ds = states.MappingDataset.from_channel(b, make_inputs(n, args.nr, args.m or 200, rng))
    _write_json(args.out, ds.to_dict())
    if args.truth:
        _write_json(args.truth, {"D": d, "n": n, "kraus": b.tolist()})
    return 0


# ---------------------------------------------------------------- learning


def _load_dataset(args) -> states.MappingDataset:
    ds = states.MappingDataset.from_dict(_read_json(args.data))
    if args.n is not None and args.n != ds.n:
        raise UsageError(f"--n {args.n} does not match dataset n={ds.n}")
    if args.d is not None and args.d != ds.D:
        raise UsageError(f"--d {args.d} does not match dataset D={ds.D}")
    if args.weights:
        text = Path(args.weights).read_text()
        try:
            w = np.asarray(json.loads(text), dtype=float).reshape(-1)
        except ValueError:
            w = np.array([float(x) for x in text.split()])
        if w.size != len(ds):
            raise UsageError(f"{w.size} weights for {len(ds)} records")
        ds = states.MappingDataset(ds.rho, ds.varrho, w, validate=False, unit_trace_out=ds.unit_trace_out)
    return ds


def _kind(proxy: str) -> str:
    if proxy == "prop":
        raise UsageError("proxy 'prop' is not quadratic; it is available for evaluation only (fig1)")
    return PROXY_KIND[proxy]


def _solver_config(args, hier: bool = False) -> SolverConfig:
    if hier:
        base = hierarchy.default_level_config()
        return SolverConfig(
            max_iterations=args.max_iter or base.max_iterations,
            convergence_rel_tol=args.tol or base.convergence_rel_tol,
            adjust_inner_iterations=base.adjust_inner_iterations,
        )
    return SolverConfig(max_iterations=args.max_iter or 200, convergence_rel_tol=args.tol or 1e-9)


def _overlap(ds, u) -> float:
    return states.total_fidelity_dataset("prop_overlap", ds, u)


def cmd_learn(args) -> int:
    ds = _load_dataset(args)
    kind = _kind(args.proxy)
    s = superop.build(ds, kind)
    sol = solve(s, _solver_config(args))
    report = {
        "proxy": args.proxy,
        "kind": kind,
        "n": ds.n,
        "D": ds.D,
        "M": len(ds),
        "converged": sol.converged,
        "iterations": sol.iterations,
        "fidelity": sol.fidelity,
        "fidelity_per_record": sol.fidelity / len(ds),
        "trace_lambda": float(np.trace(sol.multipliers.lam)),
        "mu_selected": sol.mu_selected,
        "residual": sol.residual,
        "constraint_violation": sol.constraint_violation,
        "fidelity_prop_overlap": _overlap(ds, sol.u),
        "message": sol.message,
        "u": sol.u.tolist(),
        "lambda": sol.multipliers.lam.tolist(),
    }
    _write_json(args.out, report)
    return 0 if sol.converged else 2


def cmd_hier(args) -> int:
    ds = _load_dataset(args)
    kind = _kind(args.proxy)
    s = superop.build(ds, kind)
    code = 0
    try:
        h = hierarchy.build_hierarchy(s, args.levels, _solver_config(args, hier=True))
    except NotConvergedError as exc:
        warnings.warn(str(exc), stacklevel=1)
        h, code = exc.partial, 2
    doc = h.to_dict()
    doc.update(
        {
            "proxy": args.proxy,
            "kind": kind,
            "n": ds.n,
            "D": ds.D,
            "M": len(ds),
            "complete": code == 0,
            "fidelity_prop_overlap": [_overlap(ds, u) for u in h.operators],
            "gram": h.gram().tolist() if h.levels else [],
            "plain_gram": h.plain_gram().tolist() if h.levels else [],
        }
    )
    _write_json(args.out, doc)
    return code


# ---------------------------------------------------------------- experiments


def fig1_rows(n, d, n_s, m, seed, channel="auto"):
    """Total fidelity of the generating channel for each input rank and proxy."""
    b = make_channel(channel, d, n, n_s, np.random.default_rng(seed))
    rows = []
    for n_r in range(1, n + 1):
        # each rank gets its own stream so the sweep entries are independent
        rng = np.random.default_rng([seed, n_r])
        ds = states.MappingDataset.from_channel(b, make_inputs(n, n_r, m, rng))
        for proxy in FIG1_PROXIES:
            rows.append((n_r, proxy, states.total_fidelity_dataset(proxy, ds, b)))
    return rows


def cmd_fig1(args) -> int:
    n, d = _dims(args)
    rows = fig1_rows(n, d, args.ns, args.m or 200, args.seed, args.channel)
    _write_csv(args.out, ["N_r", "proxy", "F_total_on_exact_channel"], rows)
    return 0


def table1_rows(n, d, n_s, m, levels, seed, channel="auto", config=None):
    """Per proxy and level: exact-channel fidelity, level fidelity, and proper-overlap fidelity.

    Returns ``(rows, complete)``; a level that fails to converge truncates
    that proxy's hierarchy.
    """
    rng = np.random.default_rng(seed)
    b = make_channel(channel, d, n, n_s, rng)
    ds = states.MappingDataset.from_channel(b, make_inputs(n, 1, m, rng))
    rows, complete = [], True
    for proxy in TABLE1_PROXIES:
        s = superop.build(ds, PROXY_KIND[proxy])
        f_exact = s.total_fidelity(b)
        try:
            h = hierarchy.build_hierarchy(s, levels, config)
        except NotConvergedError as exc:
            warnings.warn(f"{proxy}: {exc}", stacklevel=1)
            h, complete = exc.partial, False
        for i, lv in enumerate(h.levels):
            rows.append((proxy, f_exact, i, lv.fidelity, _overlap(ds, lv.u)))
    return rows, complete


def cmd_table1(args) -> int:
    n, d = _dims(args)
    rows, complete = table1_rows(
        n, d, args.ns, args.m or 200, args.levels, args.seed, args.channel, _solver_config(args, hier=True)
    )
    _write_csv(args.out, ["proxy", "F_exact", "level", "F_level", "F_prop_level"], rows)
    return 0 if complete else 2


def cmd_evolve(args) -> int:
    doc = _read_json(args.solution)
    if not doc.get("converged", False):
        print("solution did not converge; refusing to evolve", file=sys.stderr)
        return 2
    u = np.asarray(doc["u"], dtype=float)
    if u.shape[0] != u.shape[1]:
        raise UsageError("evolution requires D = n")
    g = dynamics.from_operator(u, np.asarray(doc["lambda"], dtype=float), args.hbar)
    if args.dt <= 0 or args.t_max < 0:
        raise UsageError("need --dt > 0 and --t-max >= 0")
    times = np.linspace(0.0, args.t_max, int(round(args.t_max / args.dt)) + 1)
    worst = dynamics.write_trajectory_csv(g, times, args.out, original_basis=not args.rotated)
    print(f"max unitarity violation {worst:.3e}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qclearn", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, data=False):
        sp.add_argument("--n", type=int, default=None, help="input dimension (default 10)")
        sp.add_argument("--d", type=int, default=None, help="output dimension (default n)")
        sp.add_argument("--ns", type=int, default=1, help="Kraus rank of the generating channel")
        sp.add_argument("--nr", type=int, default=1, help="rank of input density matrices")
        sp.add_argument("--m", type=int, default=None, help="number of observations (default 200)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--proxy", choices=PROXIES, default="sqrt")
        sp.add_argument("--levels", type=int, default=3)
        sp.add_argument("--max-iter", type=int, default=None)
        sp.add_argument("--tol", type=float, default=None, help="relative fidelity change for convergence")
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        sp.add_argument("--weights", default=None, help="file with one weight per record")
        sp.add_argument("--channel", choices=CHANNELS, default="auto")
        if data:
            sp.add_argument("--data", required=True, help="dataset JSON")

    sp = sub.add_parser("gen", help="generate a dataset from a random channel")
    common(sp)
    sp.add_argument("--truth", default=None, help="also write the generating Kraus stack")
    sp.set_defaults(func=cmd_gen)
    sp = sub.add_parser("learn", help="learn a single partially unitary operator")
    common(sp, data=True)
    sp.set_defaults(func=cmd_learn)
    sp = sub.add_parser("hier", help="build a hierarchy of operators")
    common(sp, data=True)
    sp.set_defaults(func=cmd_hier)
    sp = sub.add_parser("fig1", help="exact-channel fidelity vs input rank")
    common(sp)
    sp.set_defaults(func=cmd_fig1)
    sp = sub.add_parser("table1", help="hierarchy fidelities per proxy")
    common(sp)
    sp.set_defaults(func=cmd_table1)
    sp = sub.add_parser("evolve", help="evolve a learned solution in time")
    sp.add_argument("--solution", required=True, help="report JSON written by learn")
    sp.add_argument("--t-max", type=float, default=10.0)
    sp.add_argument("--dt", type=float, default=0.1)
    sp.add_argument("--hbar", type=float, default=1.0)
    sp.add_argument("--rotated", action="store_true", help="write the lambda eigenbasis instead")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_evolve)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NotConvergedError as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return 2
    except QCLearnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
