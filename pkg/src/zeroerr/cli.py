"""Command-line entry point: ``zeroerr <command> problem.json``.

Exit codes: 0 ok, 2 invalid input, 3 solver failure, 4 cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import jsonschema
import numpy as np

from .config import DEFAULT_CAPS, CapExceededError, SolverError
from .exponents import exponent_sweep, format_value, sweep_csv
from .graphs import Graph, channel_graph, characteristic_graph, independence_number
from .kappa import kappa, witsenhausen_bound, zero_error_lb_graph
from .probability import DistributionError, as_channel, as_distribution, joint_from_json
from .scheme import simulate, witsenhausen_finite_n

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_CAP = 0, 2, 3, 4

_MATRIX = {"type": "array", "minItems": 1,
           "items": {"type": "array", "minItems": 1, "items": {"type": "number"}}}
_VECTOR = {"type": "array", "minItems": 1, "items": {"type": "number"}}
_SOURCE = {
    "type": "object",
    "properties": {"x_alphabet": {"type": "integer", "minimum": 1},
                   "y_alphabet": {"type": "integer", "minimum": 1},
                   "pxy": _MATRIX},
    "required": ["pxy"],
    "additionalProperties": False,
}
_GRAPH = {
    "type": "object",
    "properties": {"vertices": {"type": "integer", "minimum": 1},
                   "edges": {"type": "array",
                             "items": {"type": "array", "minItems": 2, "maxItems": 2,
                                       "items": {"type": "integer", "minimum": 0}}},
                   "adjacency": _MATRIX},
    "oneOf": [{"required": ["vertices"]}, {"required": ["adjacency"]}],
    "additionalProperties": False,
}
_CAPS = {
    "type": "object",
    "properties": {k: {"type": "integer", "minimum": 1} for k in DEFAULT_CAPS.__dataclass_fields__},
    "additionalProperties": False,
}


def _schema(props: dict, required: list, one_of: list | None = None) -> dict:
    out = {"type": "object", "properties": {**props, "caps": _CAPS},
           "required": required, "additionalProperties": False}
    if one_of:
        out["oneOf"] = [{"required": [k]} for k in one_of]
    return out


SCHEMAS = {
    "kappa": _schema({"graph": _GRAPH, "source": _SOURCE, "q": _VECTOR}, ["q"],
                     ["graph", "source"]),
    "exponents": _schema({"source": _SOURCE,
                          "rates": {"type": "array", "minItems": 1,
                                    "items": {"type": "number", "minimum": 0}},
                          "grid": {"type": "integer", "minimum": 1},
                          "include_ck": {"type": "boolean"}},
                         ["source", "rates"]),
    "simulate": _schema({"source": _SOURCE,
                         "n": {"type": "integer", "minimum": 1},
                         "rate": {"type": "number", "minimum": 0},
                         "trials": {"type": "integer", "minimum": 1},
                         "seed": {"type": "integer", "minimum": 0,
                                  "maximum": 18446744073709551615}},
                        ["source", "n", "rate", "trials"]),
    "wr-bound": _schema({"graph": _GRAPH, "source": _SOURCE,
                         "n_values": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                         "resolution": {"type": "integer", "minimum": 1},
                         "restarts": {"type": "integer", "minimum": 1}},
                        [], ["graph", "source"]),
    "zec": _schema({"graph": _GRAPH, "channel": _MATRIX,
                    "resolution": {"type": "integer", "minimum": 1},
                    "restarts": {"type": "integer", "minimum": 1}},
                   [], ["graph", "channel"]),
}


class InputError(ValueError):
    pass


def _num(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return float(f"{v:.12g}")
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.ndarray):
        return _num(v.tolist())
    if isinstance(v, dict):
        return {k: _num(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_num(x) for x in v]
    return v


def _graph_of(problem: dict) -> Graph:
    if "graph" in problem:
        return Graph.from_json(problem["graph"])
    return characteristic_graph(joint_from_json(problem["source"]))


def cmd_kappa(problem: dict, args) -> dict:
    g = _graph_of(problem)
    q = as_distribution(problem["q"])
    if q.size != g.n:
        raise InputError(f"q has {q.size} entries for a graph on {g.n} vertices")
    return kappa(g, q).to_json()


def cmd_exponents(problem: dict, args):
    p = joint_from_json(problem["source"])
    grid = args.grid or problem.get("grid")
    rows = exponent_sweep(p, problem["rates"], grid, problem.get("include_ck", True))
    if args.format == "csv":
        return sweep_csv(rows)
    return {"rows": [{
        "rate": row.rate,
        "e_new": row.e_new.to_json(),
        "e_oh": row.e_oh.to_json(),
        "e_ck": None if row.e_ck is None else row.e_ck.to_json(),
        "e_sp": row.e_sp.to_json(),
        "gamma_gx_log2": row.log2_gamma,
    } for row in rows]}


def cmd_simulate(problem: dict, args) -> dict:
    p = joint_from_json(problem["source"])
    seed = args.seed if args.seed is not None else problem.get("seed", 0)
    rep = simulate(p, problem["n"], problem["rate"], problem["trials"], seed,
                   threads=args.threads, caps=args.caps)
    return rep.to_json()


def cmd_wr_bound(problem: dict, args) -> dict:
    g = _graph_of(problem)
    res = args.grid or problem.get("resolution", 16)
    wb = witsenhausen_bound(g, res, problem.get("restarts", 32), args.caps)
    table = []
    for n in problem.get("n_values", []):
        fr = witsenhausen_finite_n(g, n, args.caps)
        table.append({"n": n, "value": fr.value, "argmax_type": list(fr.argmax_type)})
    return {"kappa_max": wb.kappa_max, "argmax_q": wb.argmax_q, "log2_gamma": wb.log2_gamma,
            "bound": wb.best, "binding": wb.smaller, "finite_n_table": table}


def cmd_zec(problem: dict, args) -> dict:
    g = Graph.from_json(problem["graph"]) if "graph" in problem \
        else channel_graph(as_channel(problem["channel"]))
    res = args.grid or problem.get("resolution", 16)
    zb = zero_error_lb_graph(g, res, problem.get("restarts", 32))
    out = {"lb_bits": zb.lb_bits, "argmax_prior": zb.argmax_prior}
    try:
        alpha = independence_number(g, args.caps)
        out["alpha_check"] = alpha
        out["identity_residual"] = abs(zb.lb_bits - math.log2(alpha))
    except CapExceededError as exc:
        out["alpha_check"] = None
        out["warning"] = f"alpha check skipped: {exc}"
    return out


COMMANDS = {"kappa": cmd_kappa, "exponents": cmd_exponents, "simulate": cmd_simulate,
            "wr-bound": cmd_wr_bound, "zec": cmd_zec}


def _to_csv(result: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in _num(result).items():
        if not isinstance(v, (dict, list)):
            w.writerow([k, format_value(v) if isinstance(v, float) else v])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="zeroerr", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("problem", help="JSON problem file ('-' for stdin)")
        sp.add_argument("--out", help="write the result here instead of stdout")
        sp.add_argument("--format", choices=["json", "csv"], default="json")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--grid", type=int, help="grid resolution override")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--cap-vertices", type=int, help="exact colouring / alpha vertex cap")
        sp.add_argument("--cap-typeclass", type=int, help="type class enumeration cap")
    return ap


def load_problem(command: str, path: str) -> dict:
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
        problem = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read problem file: {exc}") from exc
    jsonschema.validate(problem, SCHEMAS[command])
    return problem


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        problem = load_problem(args.command, args.problem)
        caps = DEFAULT_CAPS.with_(**problem.get("caps", {}))
        if args.cap_vertices:
            caps = caps.with_(exact_vertices=args.cap_vertices)
        if args.cap_typeclass:
            caps = caps.with_(typeclass=args.cap_typeclass)
        args.caps = caps
        result = COMMANDS[args.command](problem, args)
    except jsonschema.ValidationError as exc:
        print(f"error: invalid problem file: {exc.message}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, DistributionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except SolverError as exc:
        print(f"error: solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if isinstance(result, str):
        text = result
    elif args.format == "csv":
        text = _to_csv(result)
    else:
        text = json.dumps(_num(result), indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
