"""Command-line entry point: ``lambdaloc <subcommand> ...``.

Exit codes: 0 success, 1 usage or input error, 2 negative result (outside,
infeasible, failed reproduction), 3 resource guard tripped.
"""

import argparse
import json
import sys
import time

from . import __version__
from .catalogs import NAMES, build_phase_space, catalog_from_json, catalog_to_json
from .errors import (
    DenseLimitError,
    InfeasibleLP,
    IterationLimit,
    LambdaLocError,
    OutsidePolytope,
    ResourceGuardExceeded,
    SignalingTable,
)
from .locally_closed import class_tags, classify, is_maximal, pair_from_json, validate_assignment
from .lp import robustness
from .pauli import expectation_from_json, expectation_to_json, format_number
from .polytope import (
    enumerate_vertices,
    facets_from_json,
    facets_to_json,
    from_ns_table,
    is_vertex,
    lambda_facets,
    local_lambda_facets,
    membership,
    ns_table_from_json,
    ns_table_to_json,
    to_ns_table,
)
from .simulator import Graph, MagicClusterSpec, MeasurementSchedule, born_oracle, magic_cluster, simulate

TABLE1 = {
    "L3": {"LC2": 1.043, "LC1": 1.040, "DET": 1.207, "CNC": 1.283, "STAB": 2.219},
    "K3": {"LC2": 1.000, "LC1": 1.052, "DET": 1.244, "CNC": 1.283, "STAB": 2.219},
}
TABLE1_TOL = 2e-3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _dump(obj):
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _read(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def _write(path, obj):
    text = _dump(obj)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _emit(args, payload, human):
    if args.json:
        sys.stdout.write(_dump(payload))
    else:
        print(human)


# ---------------------------------------------------------------------------
# subcommands


def _facet_system(n, full):
    return lambda_facets(n) if full else local_lambda_facets(n)


def cmd_facets(args):
    F = _facet_system(args.n, args.full_stab)
    _write(args.out, facets_to_json(F))
    _emit(args, {"n": args.n, "facets": len(F)}, f"{len(F)} facets written to {args.out}")
    return 0


def cmd_vertices(args):
    F = _facet_system(args.n, args.full_stab)
    t0 = time.monotonic()
    V = enumerate_vertices(F, rule=args.rule, time_limit=args.time_limit)
    _write(args.out, {
        "n": args.n,
        "polytope": F.name,
        "count": len(V),
        "vertices": [expectation_to_json(A) for A in V],
    })
    _emit(args, {"n": args.n, "polytope": F.name, "count": len(V)},
          f"{len(V)} vertices ({F.name}, n={args.n}) in {time.monotonic() - t0:.1f} s")
    return 0


def _load_facets(path, n):
    return facets_from_json(_read(path)) if path else local_lambda_facets(n)


def cmd_member(args):
    A = expectation_from_json(_read(args.op))
    F = _load_facets(args.facets, A.n)
    rep = membership(A, F)
    payload = {
        "status": rep.status,
        "min_slack": format_number(rep.min_slack),
        "violated": [P.label() for P in rep.violated],
        "tight": [P.label() for P in rep.tight],
    }
    lines = [rep.status, f"min slack {payload['min_slack']}"]
    if rep.violated:
        lines.append("violated: " + " ".join(payload["violated"]))
    _emit(args, payload, "\n".join(lines))
    return 2 if rep.status == "outside" else 0


def cmd_vertex_check(args):
    A = expectation_from_json(_read(args.op))
    F = _load_facets(args.facets, A.n)
    ok = is_vertex(A, F)
    _emit(args, {"vertex": ok}, "vertex" if ok else "not a vertex")
    return 0 if ok else 2


def cmd_classify(args):
    pair = pair_from_json(_read(args.pair))
    witness = validate_assignment(pair)
    if witness is not None:
        raise UsageError(f"invalid pair, witness {witness[0]}, {witness[1]}")
    payload = {"class": classify(pair), "tags": class_tags(pair), "maximal": is_maximal(pair)}
    _emit(args, payload, f"{payload['class']} (tags: {', '.join(payload['tags'])}; maximal: {payload['maximal']})")
    return 0


def cmd_ns(args):
    if args.ns_command == "to-table":
        table = to_ns_table(expectation_from_json(_read(args.op)))
        _write(args.out, ns_table_to_json(table))
        _emit(args, {"n": table.n, "valid": table.is_valid()}, f"non-signaling table written to {args.out}")
    else:
        A = from_ns_table(ns_table_from_json(_read(args.table)))
        _write(args.out, expectation_to_json(A))
        _emit(args, {"n": A.n, "mode": A.mode}, f"operator written to {args.out}")
    return 0


def cmd_phase_space(args):
    cat = build_phase_space(args.name, args.n)
    _write(args.out, catalog_to_json(cat))
    _emit(args, {"name": cat.name, "n": cat.n, "members": len(cat)}, f"{cat.name} (n={cat.n}): {len(cat)} members")
    return 0


def _load_catalog(path):
    d = _read(path)
    if isinstance(d, dict) and set(d) == {"name", "n"}:
        return build_phase_space(d["name"], int(d["n"]))
    return catalog_from_json(d)


def cmd_robustness(args):
    rho = expectation_from_json(_read(args.state))
    cat = _load_catalog(args.phase_space)
    value, q = robustness(rho, cat, backend=args.backend)
    if args.out:
        _write(args.out, q.to_json(tol=args.tol))
    _emit(args, {"catalog": cat.name, "value": format_number(value), "residual": format_number(q.residual)},
          f"robustness {value:.6f} over {cat.name} ({len(q.support())} members used)")
    return 0


def _parse_magic(text, n):
    if not text:
        return frozenset()
    if text.strip().lower() == "all":
        return frozenset(range(1, n + 1))
    try:
        return frozenset(int(t) for t in text.split(","))
    except ValueError as exc:
        raise UsageError(f"bad magic set {text!r}") from exc


def cmd_state(args):
    G = Graph.from_json(_read(args.graph))
    A = magic_cluster(MagicClusterSpec(G, _parse_magic(args.magic, G.n)))
    _write(args.out, expectation_to_json(A))
    _emit(args, {"n": A.n}, f"magic cluster state on {G.n} qubits written to {args.out}")
    return 0


def _load_schedule(path, n):
    return MeasurementSchedule.from_json(_read(path), n=n)


def cmd_simulate(args):
    if args.mode in ("sample", "quasi") and args.seed is None:
        raise UsageError(f"--seed is required in {args.mode} mode")
    rho = expectation_from_json(_read(args.state))
    schedule = _load_schedule(args.schedule, rho.n)
    cat = _load_catalog(args.phase_space)
    rep = simulate(rho, schedule, cat, mode=args.mode, shots=args.shots, seed=args.seed)
    payload = rep.to_json()
    if args.out:
        _write(args.out, payload)
    lines = [f"{'outcome':8} {'estimate':>10} {'oracle':>10}"]
    for s, p in rep.distribution.items():
        o = rep.oracle.get(s) if rep.oracle else None
        lines.append(f"{s:8} {p:10.6f} {'' if o is None else f'{o:10.6f}'}")
    if rep.tv is not None:
        lines.append(f"TV distance {rep.tv:.6f}")
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_oracle(args):
    rho = expectation_from_json(_read(args.state))
    dist = born_oracle(rho, _load_schedule(args.schedule, rho.n))
    payload = {s: format_number(p) for s, p in dist.items()}
    if args.out:
        _write(args.out, payload)
    _emit(args, payload, "\n".join(f"{s} {p:.9f}" for s, p in dist.items()))
    return 0


def table1_values(backend="simplex"):
    """{state: {catalog: robustness}} for the two three-qubit magic cluster states."""
    states = {
        "L3": magic_cluster(MagicClusterSpec(Graph.line(3), frozenset({1, 2, 3}))),
        "K3": magic_cluster(MagicClusterSpec(Graph.complete(3), frozenset({1, 2, 3}))),
    }
    out = {}
    for name in ("LC2", "LC1", "DET", "CNC", "STAB"):
        cat = build_phase_space(name, 3)
        for s, rho in states.items():
            out.setdefault(s, {})[name] = robustness(rho, cat, backend=backend)[0]
    return out


def cmd_repro(args):
    vals = table1_values(backend=args.backend)
    cols = ("LC2", "LC1", "DET", "CNC", "STAB")
    ok = True
    lines = [f"{'state':6}" + "".join(f"{c:>18}" for c in cols)]
    payload = {}
    for s in ("L3", "K3"):
        row = f"{s:6}"
        for c in cols:
            v, ref = vals[s][c], TABLE1[s][c]
            good = abs(v - ref) <= TABLE1_TOL
            ok &= good
            row += f"{v:9.4f} ({ref:.3f}){' ' if good else '*'}"
            payload.setdefault(s, {})[c] = {"value": format_number(v), "reference": ref, "match": good}
        lines.append(row)
    lines.append("all cells within 0.002" if ok else "* differs from the reference by more than 0.002")
    _emit(args, payload, "\n".join(lines))
    return 0 if ok else 2


# ---------------------------------------------------------------------------
# parser


def build_parser():
    p = _Parser(prog="lambdaloc", description="Local Lambda polytope toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("--json", action="store_true", help="machine-readable output on stdout")
        sp.set_defaults(func=func)
        return sp

    sp = add("facets", cmd_facets, "write the facet system")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--full-stab", action="store_true", help="all stabilizer states instead of local ones")
    sp.add_argument("--out", required=True)

    sp = add("vertices", cmd_vertices, "enumerate vertices exactly")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--full-stab", action="store_true")
    sp.add_argument("--rule", choices=("sparse", "index", "lex"), default="sparse")
    sp.add_argument("--time-limit", type=float, default=None)
    sp.add_argument("--out", required=True)

    sp = add("member", cmd_member, "membership test (exit 2 when outside)")
    sp.add_argument("--op", required=True)
    sp.add_argument("--facets")

    sp = add("vertex-check", cmd_vertex_check, "exact vertex test (exit 2 when not a vertex)")
    sp.add_argument("--op", required=True)
    sp.add_argument("--facets")

    sp = add("classify", cmd_classify, "class of a local pair")
    sp.add_argument("--pair", required=True)

    sp = add("ns", cmd_ns, "non-signaling table conversions")
    nsub = sp.add_subparsers(dest="ns_command", required=True, parser_class=_Parser)
    t = nsub.add_parser("to-table")
    t.add_argument("--op", required=True)
    t.add_argument("--out", required=True)
    t = nsub.add_parser("to-op")
    t.add_argument("--table", required=True)
    t.add_argument("--out", required=True)

    sp = add("phase-space", cmd_phase_space, "build a catalog")
    sp.add_argument("--name", required=True, type=str.upper, choices=NAMES)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--out", required=True)

    sp = add("robustness", cmd_robustness, "minimal one-norm decomposition")
    sp.add_argument("--state", required=True)
    sp.add_argument("--phase-space", required=True)
    sp.add_argument("--tol", type=float, default=1e-7, help="drop coefficients below this in the output")
    sp.add_argument("--backend", choices=("simplex", "highs"), default="simplex")
    sp.add_argument("--out")

    sp = add("state", cmd_state, "prepare states")
    ssub = sp.add_subparsers(dest="state_command", required=True, parser_class=_Parser)
    t = ssub.add_parser("magic-cluster")
    t.add_argument("--graph", required=True)
    t.add_argument("--magic", default="", help='comma-separated vertices, or "all"')
    t.add_argument("--out", required=True)

    sp = add("simulate", cmd_simulate, "run the measurement simulation")
    sp.add_argument("--state", required=True)
    sp.add_argument("--schedule", required=True)
    sp.add_argument("--phase-space", required=True)
    sp.add_argument("--mode", choices=("sample", "exact", "quasi"), default="sample")
    sp.add_argument("--shots", type=int, default=10_000)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")

    sp = add("oracle", cmd_oracle, "Born-rule distribution from dense simulation")
    sp.add_argument("--state", required=True)
    sp.add_argument("--schedule", required=True)
    sp.add_argument("--out")

    sp = add("repro", cmd_repro, "reproduce published numbers")
    rsub = sp.add_subparsers(dest="repro_command", required=True, parser_class=_Parser)
    t = rsub.add_parser("table1")
    t.add_argument("--backend", choices=("simplex", "highs"), default="simplex")

    # nested parsers need the shared flags too
    for sp_name in ("ns", "state", "repro"):
        for child in sub.choices[sp_name]._subparsers._group_actions[0].choices.values():
            child.add_argument("--json", action="store_true", help="machine-readable output on stdout")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OutsidePolytope, InfeasibleLP, SignalingTable) as exc:
        print(f"negative result: {exc}", file=sys.stderr)
        return 2
    except (ResourceGuardExceeded, DenseLimitError, IterationLimit) as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return 3
    except (LambdaLocError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
