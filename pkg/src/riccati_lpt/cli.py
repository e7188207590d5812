"""Command-line front end.

    riccati-lpt energy --m2 1 --g 2 --family full --case1 --order 3
    riccati-lpt table one --format csv
    riccati-lpt figures --out figs/
    riccati-lpt critical --m2 -1
    riccati-lpt scan --g 1 --m2-values -1 -5 -10

Exit status: 0 on success, 1 for invalid input, 2 for a numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis, lpt, oracle, varopt
from . import trial as tr
from .model import PotentialSpec
from .quadgrid import QuadratureError

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2

# LPT quadrature tolerance reported alongside every energy
QUAD_TOL = 1e-13

TABLE_SPECS = ((1.0, 2.0), (0.0, 1.0), (-1.0, 2.0))

# published cells, keyed by (m2, g, column)
REFERENCE_ONE = {
    (1.0, 2.0, "b=1"): {"E1": 1.6076526, "E2": -0.0001113, "E(2)": 1.6075413},
    (1.0, 2.0, "b_min"): {"b": 1.09320, "E1": 1.6076150, "E2": -0.0000735, "E(2)": 1.6075415},
    (0.0, 1.0, "b=1"): {"E1": 1.0605130, "E2": -0.0001513, "E(2)": 1.0603617},
    (0.0, 1.0, "b_min"): {"b": 1.13049, "E1": 1.0604314, "E2": -0.0000692, "E(2)": 1.0603622},
    (-1.0, 2.0, "b=1"): {"E1": 1.0299142, "E2": -0.0003560, "E(2)": 1.0295581},
    (-1.0, 2.0, "b_min"): {"b": 1.19610, "E1": 1.0296682, "E2": -0.0001070, "E(2)": 1.0295612},
}
REFERENCE_TWO = {
    (1.0, 2.0, "case1"): {"b": 4 / 3, "a": 1.79502293, "A": 0.7796, "E1": 1.607541303542, "y1_max": 0.0026,
                          "E_exp": 1.607362918, "E2": -0.107e-8, "E(2)": 1.607541302469, "E3": -0.12e-12,
                          "E(3)": 1.607541302469},
    (1.0, 2.0, "case2"): {"b": 1.33813399, "A": 0.0, "E1": 1.607541302751, "E2": -0.28e-9,
                          "E(2)": 1.607541302469, "E3": -0.2e-13, "E(3)": 1.607541302469},
    (0.0, 1.0, "case1"): {"b": 4 / 3, "a": 0.37849775, "A": 0.2535, "E1": 1.060362094762, "y1_max": 0.0029,
                          "E_exp": 1.059963236, "E2": -0.428e-8, "E(2)": 1.060362090485, "E3": -0.64e-12,
                          "E(3)": 1.060362090484},
    (0.0, 1.0, "case2"): {"b": 1.33361251, "A": 0.0, "E1": 1.060362090514, "E2": -0.30e-10,
                          "E(2)": 1.060362090484, "E3": 0.1e-14, "E(3)": 1.060362090484},
    (-1.0, 2.0, "case1"): {"b": 4 / 3, "a": 1.10179879, "A": -1.8484, "E1": 1.029560850845, "y1_max": 0.0064,
                           "E_exp": 1.030192509, "E2": -0.198e-7, "E(2)": 1.029560831059, "E3": -0.47e-11,
                           "E(3)": 1.029560831054},
    (-1.0, 2.0, "case2"): {"b": 1.33190626, "A": -2.00747, "E1": 1.029560831475, "E2": -0.42e-9,
                           "E(2)": 1.029560831054, "E3": 0.4e-13, "E(3)": 1.029560831054},
}
REFERENCE_ORACLE = {(1.0, 2.0): 1.60754130, (0.0, 1.0): 1.06036209, (-1.0, 2.0): 1.02956085}


class InputError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# computations behind the sub-commands

def fit_trial(spec: PotentialSpec, family: str, case1: bool = False, b: str | float | None = None,
              state=(0, 0), tol: float = 1e-11, seed: int = 0):
    """Optimised trial object and its variational energy for the chosen family."""
    opts = {"tol_energy": tol, "seed": seed}
    if family == "full":
        if not spec.g > 0:
            raise InputError("the full family needs g > 0")
        k, p = state
        if case1 or state != (0, 0):
            lower = ()
            if k == 1:
                lower = (varopt.case1_optimize(spec, state=(0, p), **opts).best_params,)
            res = varopt.case1_optimize(spec, state=state, lower_states=lower, **opts)
        else:
            res = varopt.case2_optimize(spec, **opts)
        return res
    if state != (0, 0):
        raise InputError("excited states use the full family")
    if case1:
        raise InputError("--case1 applies to the full family")
    free = ["a"] + (["c"] if family == "modified" else [])
    pinned = {}
    if b == "free":
        if spec.g == 0:
            raise InputError("b has no effect at g = 0 and cannot be optimised")
        free.append("b")
    else:
        pinned["b"] = 1.0 if b is None else float(b)
    problem = varopt.OptimizationProblem(spec, family, tuple(free), pinned, **opts)
    return varopt.minimize(problem)


def energy_report(spec: PotentialSpec, family: str = "full", case1: bool = False, order: int = 2,
                  state=(0, 0), tol: float = 1e-11, seed: int = 0, b=None, with_oracle: bool = True):
    res = fit_trial(spec, family, case1, b, state, tol, seed)
    trial = res.best_params
    k, p = state
    n = 2 * k + p
    if k == 0:
        series = lpt.run_series(spec, trial, order)
        E_terms = [float(e) for e in series.E_terms]
        partial = [float(e) for e in series.partial_sums]
        diag = {"y1_max": series.diagnostics.y1_max, "y1_argmax": series.diagnostics.y1_argmax,
                "domination_radius": series.diagnostics.domination_radius,
                "riccati_residual": series.diagnostics.riccati_residual}
    else:
        # nodes off the origin: only the variational energy is defined
        e1 = lpt.compute_E1(spec, trial)
        E_terms, partial = [0.0, float(e1)], [float(e1)]
        diag = {"y1_max": None, "domination_radius": None}
    out = {"spec": {"m2": spec.m2, "g": spec.g}, "family": "excited" if n else family,
           "state": [k, p], "params": varopt.params_dict(trial), "E_terms": E_terms,
           "partial_sums": partial, "diagnostics": diag,
           "optimizer": {"best_E1": res.best_E1, "evals": res.evals_used, "converged": res.converged,
                         "restarts": res.restarts_used}}
    if isinstance(trial, tr.FullTrialParams):
        out["E_exp"] = tr.extract_E_exp(trial, spec.g)
    ref = None
    if with_oracle:
        sol = oracle.solve_shoot(spec, n)
        ref = sol.energy
        out["oracle"] = {"energy": sol.energy, "err": sol.err_estimate, "method": sol.method}
    out["rows"] = [{"order": i + 1, "value": v, "quad_tol": QUAD_TOL, "oracle": ref,
                    "abs_delta": None if ref is None else abs(v - ref)} for i, v in enumerate(partial)]
    return out


def _cells(table, m2, g, column, computed, reference):
    rows = []
    for name, value in computed.items():
        ref = reference.get(name)
        rows.append({"table": table, "m2": m2, "g": g, "column": column, "quantity": name,
                     "computed": value, "reference": ref,
                     "abs_diff": None if ref is None or value is None else abs(value - ref)})
    return rows


def _failed(table, m2, g, column, exc):
    return [{"table": table, "m2": m2, "g": g, "column": column, "quantity": "error",
             "computed": None, "reference": None, "abs_diff": None, "error": f"{type(exc).__name__}: {exc}"}]


def table_one_rows(seed: int = 0, tol: float = 1e-11):
    """Modified family with b = 1 (a, c free) and with b free."""
    rows = []
    for m2, g in TABLE_SPECS:
        spec = PotentialSpec(m2, g)
        for column, b in (("b=1", 1.0), ("b_min", "free")):
            try:
                res = fit_trial(spec, "modified", b=b, tol=tol, seed=seed)
                series = lpt.run_series(spec, res.best_params, 2)
                cells = {"E1": series.partial_sums[0], "E2": series.E_terms[2], "E(2)": series.partial_sums[1]}
                if column == "b_min":
                    cells = {"b": res.best_params.b, **cells}
                cells.update({"a": res.best_params.a, "c": res.best_params.c})
                rows += _cells("one", m2, g, column, cells, REFERENCE_ONE[(m2, g, column)])
            except (ValueError, RuntimeError, ArithmeticError) as exc:
                rows += _failed("one", m2, g, column, exc)
        rows += _oracle_row("one", spec)
    return rows


def _oracle_row(table, spec):
    try:
        e = oracle.solve_shoot(spec, 0).energy
    except (ValueError, RuntimeError) as exc:
        return _failed(table, spec.m2, spec.g, "oracle", exc)
    return _cells(table, spec.m2, spec.g, "oracle", {"E": e}, {"E": REFERENCE_ORACLE[(spec.m2, spec.g)]})


def e_exp_at_reference(spec: PotentialSpec, a_ref: float, tol: float = 1e-15):
    """``E_exp`` of the case-1 trial whose ``a`` (hence ``d``) is the tabulated
    value, with ``A`` and ``c`` re-optimised."""
    d = math.sqrt(tr.case1_d_from_a(spec.m2, a_ref))
    ref = REFERENCE_TWO.get((spec.m2, spec.g, "case1"), {})
    init = {"A": ref.get("A", 0.0), "c": 1.0}
    res = varopt.case1_optimize(spec, d=d, init=init, tol_energy=tol, seed_scan=False)
    return tr.extract_E_exp(res.best_params, spec.g), res


def table_two_rows(seed: int = 0, tol: float = 1e-11):
    """Full family: case 1 (A, c, d free) and case 2 (all free), orders 1-3."""
    rows = []
    for m2, g in TABLE_SPECS:
        spec = PotentialSpec(m2, g)
        case1_params = None
        for column in ("case1", "case2"):
            try:
                if column == "case1":
                    res = varopt.case1_optimize(spec, tol_energy=tol, seed=seed)
                    case1_params = varopt.params_dict(res.best_params)
                else:
                    res = varopt.case2_optimize(spec, init=case1_params, tol_energy=tol, seed=seed)
                t = res.best_params
                series = lpt.run_series(spec, t, 3)
                cells = {"b": t.b, "a": t.a, "A": t.A, "c": t.c, "d": t.d, "E1": series.partial_sums[0]}
                if column == "case1":
                    ref_a = REFERENCE_TWO[(m2, g, "case1")]["a"]
                    cells["y1_max"] = series.diagnostics.y1_max
                    cells["E_exp"] = tr.extract_E_exp(t, g)
                    cells["E_exp(tabulated a)"] = e_exp_at_reference(spec, ref_a)[0]
                cells.update({"E2": series.E_terms[2], "E(2)": series.partial_sums[1],
                              "E3": series.E_terms[3], "E(3)": series.partial_sums[2]})
                ref = dict(REFERENCE_TWO[(m2, g, column)])
                if column == "case1":
                    ref["E_exp(tabulated a)"] = ref.pop("E_exp")
                rows += _cells("two", m2, g, column, cells, ref)
            except (ValueError, RuntimeError, ArithmeticError) as exc:
                rows += _failed("two", m2, g, column, exc)
        rows += _oracle_row("two", spec)
    return rows


def figure_data(m2: float = -1.0, g: float = 2.0, x_max: float = 10.0, n: int = 401, tol: float = 1e-11,
                seed: int = 0):
    """Samples of ``y0``, ``y1`` and ``y1/y0`` for the case-1 optimum on ``|x| <= x_max``."""
    spec = PotentialSpec(m2, g)
    res = varopt.case1_optimize(spec, tol_energy=tol, seed=seed)
    series = lpt.run_series(spec, res.best_params, 1, x_report=x_max)
    x = np.linspace(-x_max, x_max, n)
    y0 = tr.y0(res.best_params, g, x)
    y1 = series.y_terms[0](x)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(y0 != 0, y1 / y0, 0.0)
    return {"x": x, "y0": y0, "y1": y1, "y1_over_y0": ratio, "params": varopt.params_dict(res.best_params)}


def critical_report(m2: float | None = None, g: float | None = None, tol: float = 1e-10):
    if (m2 is None) == (g is None):
        raise InputError("give exactly one of --m2 (for g_crit) or --g (for m2_crit)")
    if m2 is not None:
        if not m2 < 0:
            raise InputError("critical coupling needs --m2 < 0")
        gc = analysis.critical_g(m2, tol=tol)
        m2c, gg = m2, gc
        out = {"m2": m2, "g_crit": gc}
    else:
        if not g > 0:
            raise InputError("critical m2 needs --g > 0")
        m2c = analysis.critical_m2(g, tol=tol)
        gg = g
        out = {"g": g, "m2_crit": m2c}
    inv = analysis.scaling_invariant(m2c, gg)
    e_at_root = oracle.solve_shoot(PotentialSpec(m2c, gg), 0).energy
    # the same invariant predicts the root for unit coupling and for m2 = -1
    out["scaling"] = {"m2_over_g23": inv, "m2_crit_at_g1": inv, "g_crit_at_m2_minus1": (-1.0 / inv) ** 1.5,
                      "E_oracle_at_root": e_at_root}
    return out


# ---------------------------------------------------------------------------
# output

def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _rows_to_csv(rows):
    buf = io.StringIO()
    keys = []
    for r in rows:
        keys += [k for k in r if k not in keys]
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in keys})
    return buf.getvalue()


def _flatten(obj, prefix=""):
    out = {}
    for k, v in obj.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, list):
            out[key] = " ".join(repr(x) for x in v)
        else:
            out[key] = v
    return out


def render(payload, fmt):
    if fmt == "json":
        return json.dumps(payload, indent=2, default=_json_default) + "\n"
    rows = payload if isinstance(payload, list) else [_flatten(payload)]
    if fmt == "csv":
        return _rows_to_csv(rows)
    lines = []
    for r in rows:
        lines.append("  ".join(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}" for k, v in r.items()))
    return "\n".join(lines) + "\n"


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# argument handling

def _state(s):
    try:
        k, p = (int(v) for v in s.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("state must look like k,p (e.g. 0,1)") from None
    return k, p


def _b_value(s):
    if s == "free":
        return s
    try:
        return float(s)
    except ValueError:
        raise argparse.ArgumentTypeError("--b takes a number or 'free'") from None


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-11, help="optimizer energy tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")
    common.add_argument("--out", default=None, help="output file (directory for figures)")
    common.add_argument("--config", default=None, help="JSON file of default flag values")

    p = _Parser(prog="riccati-lpt", description="Logarithmic perturbation theory for m2 x^2 + g x^4.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("energy", parents=[common], help="optimise a trial function and run the series")
    e.add_argument("--m2", type=float, default=None)
    e.add_argument("--g", type=float, default=None)
    e.add_argument("--family", choices=("simple", "modified", "full"), default="full")
    e.add_argument("--case1", action="store_true", help="pin a, b by large-x matching (full family)")
    e.add_argument("--order", type=int, default=2)
    e.add_argument("--state", type=_state, default=(0, 0), help="excited state k,p")
    e.add_argument("--b", type=_b_value, default=None, help="simple/modified families: value or 'free'")
    e.add_argument("--no-oracle", action="store_true")

    t = sub.add_parser("table", parents=[common], help="regenerate a results table")
    t.add_argument("which", choices=("one", "two"))

    f = sub.add_parser("figures", parents=[common], help="write y0, y1, y1/y0 samples")
    f.add_argument("--m2", type=float, default=None)
    f.add_argument("--g", type=float, default=None)
    f.add_argument("--x-max", type=float, default=10.0)
    f.add_argument("--points", type=int, default=401)

    c = sub.add_parser("critical", parents=[common], help="zero-energy critical point")
    c.add_argument("--m2", type=float, default=None)
    c.add_argument("--g", type=float, default=None)

    s = sub.add_parser("scan", parents=[common], help="case-1 scan towards deep double wells")
    s.add_argument("--g", type=float, default=None)
    s.add_argument("--m2-values", type=float, nargs="+", default=None)
    return p


def _apply_config(args, parser_defaults):
    """Config values fill flags still at their parser defaults (flags win)."""
    if not args.config:
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise InputError("config must be a JSON object")
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise InputError(f"unknown config key {key!r}")
        if getattr(args, attr) == parser_defaults.get(attr):
            if attr == "state" and isinstance(value, (str, list)):
                value = _state(value if isinstance(value, str) else ",".join(map(str, value)))
            setattr(args, attr, value)
    return args


def _run(args):
    if args.command == "energy":
        if args.m2 is None or args.g is None:
            raise InputError("energy needs --m2 and --g")
        if args.order < 1:
            raise InputError("--order must be >= 1")
        if args.state not in tr.SUPPORTED_STATES:
            raise InputError(f"state {args.state} not supported; choose from {sorted(tr.SUPPORTED_STATES)}")
        spec = PotentialSpec(args.m2, args.g)
        rep = energy_report(spec, args.family, args.case1, args.order, args.state, args.tol, args.seed, args.b,
                            with_oracle=not args.no_oracle)
        _emit(render(rep, args.format), args.out)
    elif args.command == "table":
        rows = table_one_rows(args.seed, args.tol) if args.which == "one" else table_two_rows(args.seed, args.tol)
        _emit(render(rows, args.format), args.out)
    elif args.command == "figures":
        m2 = -1.0 if args.m2 is None else args.m2
        g = 2.0 if args.g is None else args.g
        data = figure_data(m2, g, args.x_max, args.points, args.tol, args.seed)
        outdir = Path(args.out or ".")
        outdir.mkdir(parents=True, exist_ok=True)
        written = []
        for name, col in (("y0", "y0"), ("y1", "y1"), ("y1_over_y0", "y1_over_y0")):
            path = outdir / f"figure_{name}.csv"
            rows = [{"x": float(x), col: float(v)} for x, v in zip(data["x"], data[col])]
            path.write_text(_rows_to_csv(rows))
            written.append(str(path))
        sys.stdout.write(render({"files": written, "params": data["params"]}, args.format))
    elif args.command == "critical":
        _emit(render(critical_report(args.m2, args.g), args.format), args.out)
    elif args.command == "scan":
        g = 1.0 if args.g is None else args.g
        values = args.m2_values or [-1.0, -5.0, -10.0, -20.0, -30.0]
        rows = analysis.semiclassical_scan(g, values, tol_energy=args.tol, seed=args.seed)
        out = [{"m2": r.m2, "g": g, "E1": r.E1, "E2": r.E2, "E(2)": r.E1 + r.E2, "E_oracle": r.E_oracle,
                "abs_delta": abs(r.oracle_deviation), "error": r.error} for r in rows]
        _emit(render(out, args.format), args.out)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub_defaults = {}
    for action in parser._subparsers._group_actions[0].choices[args.command]._actions:
        sub_defaults[action.dest] = action.default
    try:
        _run(_apply_config(args, sub_defaults))
    except (InputError, ValueError, TypeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (QuadratureError, oracle.OracleError, RuntimeError, ArithmeticError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
