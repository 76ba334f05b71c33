"""Command line front-end.

    warpcheck run CONFIG.json [--out DIR] [--threads N] [--verbose]
    warpcheck plot REPORT.json --series q_vs_t|deficit_vs_eps|substatic [--out FILE]

``run`` writes ``report.json`` and ``summary.csv`` (plus ``geometry.csv`` or
``trace.csv``/``trace.json`` for the geometry and flow tasks) and exits with
0 when every verdict holds, 2 when something is violated, 3 when something is
inconclusive and nothing is violated, and 1 on errors.
"""
import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import flow as flowmod
from . import functionals as fn
from .embedded import compute_geometry_embedded
from .errors import ConfigInvalid, WarpcheckError
from .hypersurface import (
    compute_geometry, geometry_csv, graph_from_descriptor,
    kappa_spread, lemma23_residuals, static_convex_margin,
)
from .report import (
    IDENTITY_OK, INCONCLUSIVE, INEQUALITY_OK, VIOLATED, FunctionalReport,
    abs_tol_override, reports_to_csv,
)
from .warped import from_descriptor, substatic_scan

log = logging.getLogger("warpcheck")

EXIT_OK, EXIT_ERROR, EXIT_VIOLATED, EXIT_INCONCLUSIVE = 0, 1, 2, 3
TASKS = ("geometry", "identities", "hk-sweep", "theoremB", "curvature-eq", "flow", "substatic-scan")
SERIES = ("q_vs_t", "deficit_vs_eps", "substatic")
BACKEND_TOL = {1: 1e-6, 2: 1e-4}


class RunResult:
    def __init__(self):
        self.reports = []
        self.errors = []
        self.files = {}

    def add(self, report):
        self.reports.append(report)

    def fail(self, name, exc, **inputs):
        """Record a module error as a report row; any such row makes the run exit 1."""
        self.errors.append({"name": name, "code": exc.code, "message": str(exc)})
        self.reports.append(FunctionalReport(
            name=name, value=math.nan, quadrature_error=0.0, inputs=inputs, verdict=VIOLATED,
            details={"error": exc.code, "message": str(exc),
                     **{k: v for k, v in exc.details.items() if k in ("nodes", "eps")}},
        ))

    @property
    def exit_code(self):
        if self.errors:
            return EXIT_ERROR
        verdicts = {r.verdict for r in self.reports}
        if VIOLATED in verdicts:
            return EXIT_VIOLATED
        if INCONCLUSIVE in verdicts:
            return EXIT_INCONCLUSIVE
        return EXIT_OK


# ----------------------------------------------------------------------------
# config helpers

def _require(cfg, key, where="config"):
    if key not in cfg:
        raise ConfigInvalid(f"{where}.{key} is required")
    return cfg[key]


def _eps_list(cfg, default=None):
    eps = cfg.get("eps_list", default)
    if eps is None:
        raise ConfigInvalid("config.eps_list is required")
    if not isinstance(eps, list) or not eps:
        raise ConfigInvalid("config.eps_list must be a non-empty list")
    try:
        return [float(e) for e in eps]
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid("config.eps_list must contain numbers") from exc


def _map(threads, func, items):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(func, items))
    return [func(x) for x in items]


def _surface(cfg, M):
    return graph_from_descriptor(M, _require(cfg, "surface"))


# ----------------------------------------------------------------------------
# tasks

def task_geometry(cfg, M, result, threads):
    geom = compute_geometry(_surface(cfg, M))
    result.files["geometry.csv"] = geometry_csv(geom)
    result.add(lemma23_residuals(geom))
    result.add(fn.divergence_residual(geom))
    if M.is_space_form:
        other = compute_geometry_embedded(geom.graph)
        diffs = {f: float(np.max(np.abs(getattr(geom, f) - getattr(other, f))))
                 for f in ("g", "h", "kappa", "u")}
        value = max(diffs.values())
        tol = BACKEND_TOL[M.n]
        result.add(FunctionalReport(
            name="backend_agreement", value=value, quadrature_error=0.0,
            inputs={"manifold": M.tag, "tolerance": tol},
            verdict=IDENTITY_OK if value <= tol else VIOLATED, details=diffs,
        ))
    margin = None
    try:
        margin = static_convex_margin(geom)
    except WarpcheckError:
        pass
    log.info("kappa spread %.3e, static-convex margin %s", kappa_spread(geom), margin)


def task_identities(cfg, M, result, threads):
    geom = compute_geometry(_surface(cfg, M))
    eps_list = _eps_list(cfg, [-1.0, 0.0, 1.0])
    result.add(fn.divergence_residual(geom))
    result.add(lemma23_residuals(geom))

    def per_eps(eps):
        out = [fn.minkowski_residual(geom, eps)]
        if M.is_space_form:
            out += [fn.shifted_minkowski_residual(geom, eps, m) for m in range(1, M.n + 1)]
            out += [fn.integration_by_parts_residual(geom, eps, k) for k in range(1, M.n + 1)]
        return out

    for reports in _map(threads, per_eps, eps_list):
        result.reports.extend(reports)


def _guarded(func, eps):
    try:
        return func(eps), None
    except WarpcheckError as exc:
        return None, exc


def task_hk_sweep(cfg, M, result, threads):
    geom = compute_geometry(_surface(cfg, M))
    eps_list = _eps_list(cfg)
    outcomes = _map(threads, lambda e: _guarded(lambda x: fn.hk_deficit(geom, x), e), eps_list)
    for eps, (report, exc) in zip(eps_list, outcomes):
        if exc is None:
            result.add(report)
        else:
            result.fail("hk_deficit", exc, manifold=M.tag, eps=eps)


def task_theorem_b(cfg, M, result, threads):
    geom = compute_geometry(_surface(cfg, M))
    result.add(fn.minkowski_second_deficit(geom))
    eps_list = _eps_list(cfg, [0.5])

    def per_eps(eps):
        out = [fn.equiv_ineq_residual(geom, eps)]
        try:
            out.append(fn.cauchy_schwarz_chain(geom, eps))
        except WarpcheckError as exc:
            return out, exc
        return out, None

    for eps, (reports, exc) in zip(eps_list, _map(threads, per_eps, eps_list)):
        result.reports.extend(reports)
        if exc is not None:
            result.fail("cauchy_schwarz_chain", exc, manifold=M.tag, eps=eps)


def task_curvature_eq(cfg, M, result, threads):
    spec = _require(cfg, "curvature")
    chi = fn.chi_from_descriptor(_require(spec, "chi", "curvature"))
    k = int(_require(spec, "k", "curvature"))
    variant = spec.get("variant", "thm14")
    eps = float(spec.get("eps", -1.0 if variant == "thm12" else 0.0))
    surface = dict(_require(cfg, "surface"))
    if spec.get("radius_from_equation", False):
        radius = fn.solve_sphere_equation(M, eps, k, chi)
        surface.update(type="sphere", radius=radius)
        log.info("sphere radius solving the equation: %.15g", radius)
    geom = compute_geometry(graph_from_descriptor(M, surface))
    report = fn.curvature_equation_residual(geom, eps, k, chi, variant)
    report.details["radius"] = surface.get("radius")
    result.add(report)


def task_flow(cfg, M, result, threads):
    spec = dict(cfg.get("flow", {}))
    speed_cfg = dict(spec.get("speed", {"kind": "unit_inward"}))
    speed = flowmod.FlowSpeed(
        kind=speed_cfg.get("kind", "unit_inward"), eps=float(speed_cfg.get("eps", 0.0)),
        xi=speed_cfg.get("xi", "constant"),
        xi_params=tuple(float(x) for x in speed_cfg.get("xi_params", (1.0, 0.0))),
    )
    graph = _surface(cfg, M)
    t_end = float(_require(spec, "t_end", "flow"))
    dt = float(spec.get("dt", flowmod.DEFAULT_DT))
    eps = float(spec.get("eps", -1.0))
    state = flowmod.FlowState.initial(graph)
    if M.is_space_form:
        result.add(flowmod.verify_evolution(state, speed, float(spec.get("dt_probe", 1e-3)),
                                            eps=float(spec.get("probe_eps", 0.0))))
    trace = flowmod.evolve(state, speed, t_end, dt=dt, eps=eps,
                           record_every=int(spec.get("record_every", 10)),
                           snapshot_every=int(spec.get("snapshot_every", 0)))
    result.files["trace.csv"] = trace.to_csv()
    result.files["trace.json"] = trace.to_json()
    flags = trace.flags
    inputs = {"manifold": M.tag, "speed": speed.kind, "t_end": t_end, "dt": dt, "eps": eps}
    series = {k: list(v) for k, v in trace.series.items()}
    for name in ("p1_bound_ok", "area_bound_ok", "divergence_identity_ok"):
        ok = flags[name]
        result.add(FunctionalReport(
            name=f"flow_{name[:-3]}", value=float(ok), inputs=inputs,
            verdict=INEQUALITY_OK if ok else VIOLATED, details={"stop_reason": trace.stop_reason},
        ))
    if "q_monotone_ok" in flags:
        Q = np.asarray(series["Q"])
        rise = float(np.nanmax(Q - Q[0]))
        result.add(FunctionalReport(
            name="flow_q_monotone", value=rise, quadrature_error=flags["q_tolerance"],
            inputs=inputs, verdict=INEQUALITY_OK if flags["q_monotone_ok"] else VIOLATED,
            details={"series": series, "stop_reason": trace.stop_reason},
        ))
    else:
        result.add(FunctionalReport(
            name="flow_trace", value=float(series["t"][-1]), inputs=inputs,
            verdict=INEQUALITY_OK, details={"series": series, "stop_reason": trace.stop_reason},
        ))


def task_substatic(cfg, M, result, threads):
    spec = dict(cfg.get("substatic", {}))
    r_hi_default = min(3.0, M.r_max - 1e-2)
    report = substatic_scan(M, float(spec.get("r_lo", 0.0)), float(spec.get("r_hi", r_hi_default)),
                            int(spec.get("samples", 1000)))
    result.add(report)


_TASKS = {
    "geometry": task_geometry, "identities": task_identities, "hk-sweep": task_hk_sweep,
    "theoremB": task_theorem_b, "curvature-eq": task_curvature_eq, "flow": task_flow,
    "substatic-scan": task_substatic,
}


def run_config(cfg, threads=1):
    """Execute a parsed config. Config errors propagate; module errors become report rows."""
    if not isinstance(cfg, dict):
        raise ConfigInvalid("config must be a JSON object")
    task = _require(cfg, "task")
    if not isinstance(task, str) or task not in _TASKS:
        raise ConfigInvalid(f"config.task must be one of {list(TASKS)}, got {task!r}")
    M = from_descriptor(_require(cfg, "manifold"))
    tol = cfg.get("tolerance", {}).get("abs") if isinstance(cfg.get("tolerance"), dict) else None
    result = RunResult()
    with abs_tol_override(tol):
        try:
            _TASKS[task](cfg, M, result, max(1, int(threads)))
        except ConfigInvalid:
            raise
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from exc
        except WarpcheckError as exc:
            result.fail(task, exc, manifold=M.tag)
    return result


def report_document(cfg, result):
    return {
        "config": cfg,
        "task": cfg.get("task"),
        "exit_code": result.exit_code,
        "errors": result.errors,
        "reports": [r.to_dict() for r in result.reports],
    }


def _finite(obj):
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _dumps(obj):
    """Strict JSON: non-finite floats become null."""
    return json.dumps(_finite(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def cmd_run(args):
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"CONFIG_INVALID: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        result = run_config(cfg, threads=args.threads)
    except WarpcheckError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_ERROR
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(_dumps(report_document(cfg, result)))
        (out / "summary.csv").write_text(reports_to_csv(result.reports))
        for name, text in result.files.items():
            (out / name).write_text(text)
    except OSError as exc:
        print(f"cannot write to {out}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for r in result.reports:
        log.info("%-32s %-14s value=%.6e err=%.2e", r.name, r.verdict, r.value, r.quadrature_error)
    for e in result.errors:
        print(f"{e['name']}: {e['message']}", file=sys.stderr)
    return result.exit_code


# ----------------------------------------------------------------------------
# plot data

def plot_rows(document, series):
    """Long-format ``(series, x, y)`` rows extracted from a report document."""
    reports = document.get("reports", [])
    rows = []
    if series == "q_vs_t":
        for r in reports:
            s = r.get("details", {}).get("series")
            if s:
                rows += [("Q", t, q) for t, q in zip(s["t"], s["Q"])]
    elif series == "deficit_vs_eps":
        for r in reports:
            if r["name"] == "hk_deficit" and r["value"] is not None:
                rows.append(("deficit", r["inputs"]["eps"], r["value"]))
        rows.sort(key=lambda row: row[1])
    elif series == "substatic":
        for r in reports:
            if r["name"] == "substatic_scan":
                d = r["details"]
                rows += [("substatic", x, y) for x, y in zip(d["r"], d["scalar"])]
    else:
        raise ConfigInvalid(f"unknown series {series!r}")
    return rows


def plot_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["series", "x", "y"])
    for name, x, y in rows:
        writer.writerow([name, repr(float(x)), repr(float(y))])
    return buf.getvalue()


def cmd_plot(args):
    try:
        document = json.loads(Path(args.report).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read {args.report}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    text = plot_csv(plot_rows(document, args.series))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    """Usage errors exit 1; exit code 2 is reserved for violated verdicts."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="warpcheck", description="Numerical checks of curvature identities "
                                                   "and inequalities on warped-product hypersurfaces.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="run a verification config")
    run.add_argument("config")
    run.add_argument("--out", default=".")
    run.add_argument("--threads", type=int, default=1)
    run.add_argument("--verbose", action="store_true")
    run.set_defaults(func=cmd_run)
    plot = sub.add_parser("plot", help="emit long-format CSV series from a report")
    plot.add_argument("report")
    plot.add_argument("--series", choices=SERIES, required=True)
    plot.add_argument("--out", default=None)
    plot.set_defaults(func=cmd_plot)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
