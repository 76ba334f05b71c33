"""Acceptance criteria 1-9. Each test prints one PASS/FAIL line (also collected in the summary)."""
import csv
import io
import json
import math
import tempfile
from importlib import resources
from pathlib import Path

import numpy as np

from conftest import brute_pm
from corpus import CORPUS, IDENTITY_TOL, corpus_geometry, corpus_graph, reference_grid
from warpcheck import flow
from warpcheck import functionals as fn
from warpcheck.cli import main as cli_main
from warpcheck.embedded import compute_geometry_embedded
from warpcheck.errors import AssumptionViolated
from warpcheck.grid import make_grid
from warpcheck.hypersurface import (
    build_perturbed_graph, build_sphere_graph, compute_geometry, integrate_surface,
    kappa_spread, lemma23_residuals, static_convex_margin, weighted_volume,
)
from warpcheck.report import IDENTITY_OK, INEQUALITY_OK
from warpcheck.symfunc import all_pm_batch, eval_pm, grad_pm_batch, newton_maclaurin_gap
from warpcheck.warped import make_horizon_example, make_space_form, substatic_scalar

EPS = (-1.0, -0.5, 0.0, 0.5, 1.0)


def _check(failures, ok, message):
    if not ok:
        failures.append(message)


# ---------------------------------------------------------------------------- 1

def test_criterion_1_symmetric_functions(acceptance):
    rng = np.random.default_rng(1)
    fails = []
    for trial in range(1000):
        n = int(rng.integers(1, 7))
        x = rng.uniform(-3, 3, size=n)
        p = all_pm_batch(x[None, :])[0]
        for m in range(1, n + 1):
            grad = grad_pm_batch(x[None, :], m)[0]
            scale = 1.0 + np.max(np.abs(x)) ** m
            _check(fails, abs(x @ grad - m * p[m]) <= 1e-10 * scale, f"Euler trial {trial} m={m}")
            _check(fails, abs(grad.sum() - m * p[m - 1]) <= 1e-10 * scale, f"trace trial {trial} m={m}")
            _check(fails, abs(eval_pm(x, m) - brute_pm(list(x), m)) <= 1e-12 * scale,
                   f"enumeration trial {trial} m={m}")
    cone_samples = equal_cases = 0
    while cone_samples < 1000:
        n = int(rng.integers(2, 7))
        m = int(rng.integers(2, n + 1))
        x = rng.uniform(-0.5, 3, size=n)
        if rng.random() < 0.1:
            x = np.full(n, rng.uniform(0.1, 3))
        p = all_pm_batch(x[None, :])[0]
        if not np.all(p[1:m + 1] > 0):
            continue
        cone_samples += 1
        gap = newton_maclaurin_gap(x, m)
        _check(fails, gap >= -1e-12, f"Newton-MacLaurin gap {gap:.2e}")
        if gap < 1e-12:
            equal_cases += 1
            _check(fails, np.ptp(x) < 1e-5, f"gap ~0 with spread {np.ptp(x):.2e}")
    _check(fails, equal_cases > 0, "no equality samples drawn")
    acceptance(1, "symmetric-function identities, enumeration and Newton-MacLaurin", fails)


# ---------------------------------------------------------------------------- 2

def test_criterion_2_substatic(acceptance):
    fails = []
    for n in (1, 2):
        for c in (-1, 0, 1):
            M = make_space_form(c, n, rho=1.0)
            r = np.linspace(0.0, min(3.0, M.r_max - 1e-9), 2001)
            worst = float(np.max(np.abs(substatic_scalar(M, r))))
            _check(fails, worst <= 1e-10, f"c={c} n={n}: |scalar| = {worst:.2e}")
        r = np.linspace(0.0, 3.0, 2001)
        err = np.max(np.abs(substatic_scalar(make_horizon_example(n), r) - 2 * (n - 1) * np.sinh(r)))
        _check(fails, err <= 1e-10, f"cosh warp n={n}: error {err:.2e}")
    acceptance(2, "sub-static scalar vanishes on space forms and equals 2(n-1) sinh r for cosh", fails)


# ---------------------------------------------------------------------------- 3

def test_criterion_3_geometry_oracles(acceptance):
    fails = []
    H3 = make_space_form(-1, 2)
    g = compute_geometry(build_sphere_graph(H3, 1.0, 0.0, make_grid(2, n_mu=32, n_phi=64)))
    kerr = float(np.max(np.abs(g.kappa - 1 / math.tanh(1.0))))
    _check(fails, kerr <= 1e-7, f"kappa error {kerr:.2e}")
    area = integrate_surface(g, 1.0).value
    rel = abs(area / (4 * math.pi * math.sinh(1) ** 2) - 1)
    _check(fails, rel <= 1e-8, f"area rel error {rel:.2e}")
    wv = weighted_volume(g).value
    rel = abs(wv / (4 * math.pi / 3 * math.sinh(1) ** 3) - 1)
    _check(fails, rel <= 1e-8, f"weighted volume rel error {rel:.2e}")
    for n in (1, 2):
        for c in (-1, 0, 1):
            off = compute_geometry(build_sphere_graph(make_space_form(c, n), 0.8, 0.3, reference_grid(n)))
            _check(fails, kappa_spread(off) <= 1e-6, f"off-centre spread c={c} n={n}")
        for name in ("centered_sphere", "offcenter_sphere", "perturbed_a", "perturbed_b"):
            S = corpus_graph(name, n)
            a, b = compute_geometry(S), compute_geometry_embedded(S)
            diff = max(float(np.max(np.abs(getattr(a, f) - getattr(b, f)))) for f in ("kappa", "u", "g", "h"))
            _check(fails, diff <= 1e-4, f"backends differ by {diff:.2e} on {name} n={n}")
    acceptance(3, "sphere oracles in H^3, umbilic off-centre spheres, backend agreement", fails)


# ---------------------------------------------------------------------------- 4

def _identity_values(g):
    """All identity residuals on one geometry: name -> absolute residual."""
    out = {"divergence": abs(fn.divergence_residual(g).value),
           "lemma23": lemma23_residuals(g).value}
    for eps in EPS:
        out[f"minkowski[{eps}]"] = abs(fn.minkowski_residual(g, eps).value)
        if g.manifold.is_space_form:
            for m in range(1, g.n + 1):
                out[f"shifted[{eps},{m}]"] = abs(fn.shifted_minkowski_residual(g, eps, m).value)
                out[f"ibp[{eps},{m}]"] = abs(fn.integration_by_parts_residual(g, eps, m).value)
    return out


LADDER = {1: [make_grid(1, n_theta=N) for N in (16, 32, 64)],
          2: [make_grid(2, n_mu=m, n_phi=2 * m) for m in (8, 12, 16)]}
CONVERGENCE_FLOOR = 1e-11


def test_criterion_4_identity_residuals(acceptance):
    fails = []
    for n in (1, 2):
        tol = IDENTITY_TOL[n]
        for name in CORPUS:
            for key, value in _identity_values(corpus_geometry(name, n)).items():
                _check(fails, value <= tol, f"{name} n={n} {key} = {value:.2e}")
    # observed order: h halves (n=1) or shrinks by 3/2 (n=2); pre-floor steps must be order >= 2
    observed = 0
    for n in (1, 2):
        for name in ("perturbed_b", "horizon_graph"):
            seq = [_identity_values(compute_geometry(corpus_graph(name, n, grid))) for grid in LADDER[n]]
            sizes = [g.size ** (1.0 / n) for g in LADDER[n]]
            for key in seq[0]:
                for (a, b), (ha, hb) in zip(zip(seq, seq[1:]), zip(sizes, sizes[1:])):
                    if b[key] <= CONVERGENCE_FLOOR:
                        continue
                    order = math.log(a[key] / b[key]) / math.log(hb / ha)
                    observed += 1
                    _check(fails, order >= 2.0, f"{name} n={n} {key}: order {order:.2f}")
    _check(fails, observed > 0, "no resolution step above the roundoff floor")
    acceptance(4, "identity residuals on the six-surface corpus with order >= 2 convergence", fails)


# ---------------------------------------------------------------------------- 5

def test_criterion_5_heintze_karcher(acceptance):
    fails = []
    for n in (1, 2):
        for name, (_, umbilic, static_convex) in CORPUS.items():
            g = corpus_geometry(name, n)
            for eps in EPS:
                if fn.hk_assumption_check(g, eps).verdict != INEQUALITY_OK:
                    continue
                r = fn.hk_deficit(g, eps)
                if umbilic:
                    _check(fails, abs(r.value) <= r.quadrature_error and r.verdict == IDENTITY_OK,
                           f"{name} n={n} eps={eps}: {r.value:.2e} +- {r.quadrature_error:.1e}")
                elif static_convex:
                    _check(fails, static_convex_margin(g) >= 0, f"{name} n={n} not static-convex")
                    _check(fails, r.value > 3 * r.quadrature_error,
                           f"{name} n={n} eps={eps}: {r.value:.2e} vs 3x{r.quadrature_error:.1e}")
        slice_geom = corpus_geometry("horizon_slice", n)
        for eps in EPS:
            v = fn.hk_deficit(slice_geom, eps).value
            _check(fails, abs(v) <= 1e-8, f"horizon slice n={n} eps={eps}: {v:.2e}")
    acceptance(5, "HK deficit zero on umbilic members, positive beyond 3x error otherwise", fails)


# ---------------------------------------------------------------------------- 6

def test_criterion_6_second_deficit_algebra(acceptance):
    fails = []
    for n in (1, 2):
        for name in CORPUS:
            g = corpus_geometry(name, n)
            for eps in EPS:
                d = fn.equiv_ineq_residual(g, eps).details["difference_from_second_deficit"]
                _check(fails, abs(d) <= 1e-9, f"{name} n={n} eps={eps}: difference {d:.2e}")
                try:
                    cs = fn.cauchy_schwarz_chain(g, eps)
                except AssumptionViolated:
                    continue
                constant = cs.details["p1_spread"] <= fn.P1_SPREAD
                equal = cs.verdict == IDENTITY_OK
                _check(fails, constant == equal,
                       f"{name} n={n} eps={eps}: CS equality {equal} but p1 spread {cs.details['p1_spread']:.1e}")
                if not constant:
                    _check(fails, cs.value > 0, f"{name} n={n} eps={eps}: CS gap {cs.value:.2e}")
    acceptance(6, "second deficit expansion exact and Cauchy-Schwarz equality iff constant p1", fails)


# ---------------------------------------------------------------------------- 7

def test_criterion_7_flow(acceptance):
    fails = []
    unit = flow.FlowSpeed("unit_inward")
    for n, grid in ((1, make_grid(1, n_theta=64)), (2, make_grid(2, n_mu=12, n_phi=24))):
        M = make_space_form(-1, n)
        trace = flow.evolve(build_sphere_graph(M, 1.2, 0.0, grid), unit, t_end=0.5, dt=0.01, record_every=10)
        for s in trace.states:
            err = float(np.max(np.abs(s.graph.rho - (1.2 - s.t))))
            _check(fails, err <= 1e-10, f"sphere n={n} t={s.t}: error {err:.2e}")

    speeds = [unit, flow.FlowSpeed("minus_potential"),
              flow.FlowSpeed("custom_shifted", eps=0.5, xi="exp", xi_params=(1.0, 0.3))]
    for n in (1, 2):
        grid = make_grid(1, n_theta=128) if n == 1 else make_grid(2, n_mu=16, n_phi=32)
        state = flow.FlowState.initial(build_perturbed_graph(make_space_form(-1, n), 1.5, [(2, 0.1), (3, 0.03)], grid))
        for speed in speeds:
            rep = flow.verify_evolution(state, speed, dt_probe=1e-3, eps=0.5)
            _check(fails, rep.value <= 1e-6, f"evolution n={n} {speed.kind}: {rep.value:.2e}")
        coarse = flow.verify_evolution(state, unit, dt_probe=4e-2, eps=0.5)
        for key, ratio in coarse.details["ratios"].items():
            if coarse.details["half_step_parts"][key] > 1e-10:
                _check(fails, ratio >= 4.0, f"evolution n={n} {key}: halving ratio {ratio:.2f}")

    cases = [(1, [(2, 0.1)]), (1, [(2, 0.08), (3, 0.04)]), (2, [(2, 0.1)]), (2, [(2, 0.06), (3, 0.03)])]
    for n, modes in cases:
        grid = make_grid(1, n_theta=128) if n == 1 else make_grid(2, n_mu=16, n_phi=32)
        S = build_perturbed_graph(make_space_form(-1, n), 1.5, modes, grid)
        g0 = compute_geometry(S)
        _check(fails, np.all(g0.kappa > 0) and kappa_spread(g0) > 1e-3, f"initial data n={n} {modes}")
        trace = flow.evolve(S, unit, t_end=0.5, dt=0.01, record_every=5)
        f = trace.flags
        _check(fails, trace.stop_reason == "t_end", f"trace n={n} {modes} stopped: {trace.stop_reason}")
        for flag in ("p1_bound_ok", "area_bound_ok", "q_monotone_ok"):
            _check(fails, f[flag], f"trace n={n} {modes}: {flag} false")
    acceptance(7, "flow exactness, evolution equations at O(dt^2) or better, bounds and Q monotone", fails)


# ---------------------------------------------------------------------------- 8

CHIS = [fn.Chi("constant", {"a": 0.3}), fn.Chi("affine", {"a": 0.8, "b1": -0.2, "b2": 0.1}),
        fn.Chi("power", {"a": 1.0, "p": -1.0, "q": 0.5})]
FIRST_VARIANT_CHIS = [fn.Chi("constant", {"a": 5.0}), fn.Chi("affine", {"a": 6.0, "b1": -0.5, "b2": 0.0})]


def test_criterion_8_rigidity(acceptance):
    fails = []
    for n in (1, 2):
        M = make_space_form(-1, n)
        grid = reference_grid(n)
        for variant, eps, chis in (("thm14", 1.0, CHIS), ("thm12", -1.0, FIRST_VARIANT_CHIS)):
            for chi in chis:
                R = fn.solve_sphere_equation(M, eps, n, chi)
                centred = fn.curvature_equation_residual(
                    compute_geometry(build_sphere_graph(M, R, 0.0, grid)), eps, n, chi, variant)
                _check(fails, centred.value <= 1e-8,
                       f"{variant} {chi.family} n={n}: residual {centred.value:.2e}")
                off = compute_geometry(build_sphere_graph(M, R, 0.3 * R, grid))
                moved = fn.curvature_equation_residual(off, eps, n, chi, variant)
                if np.all(chi.partial_first(*fn.equation_arguments(off, eps)) < 0):
                    _check(fails, moved.value >= 10 * moved.quadrature_error,
                           f"{variant} {chi.family} n={n}: off-centre {moved.value:.2e} "
                           f"vs {moved.quadrature_error:.1e}")
    acceptance(8, "curvature equation solved by the centred sphere only when d1 chi < 0", fails)


# ---------------------------------------------------------------------------- 9

def _summary(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_criterion_9_cli_contract(acceptance):
    fails = []
    golden = Path(__file__).parent / "golden"
    codes = json.loads((golden / "exit_codes.json").read_text())
    examples = resources.files("warpcheck") / "examples"
    names = sorted(p.name[:-5] for p in examples.iterdir() if p.name.endswith(".json"))
    _check(fails, sorted(codes) == names, "golden set differs from the shipped examples")
    _check(fails, set(codes.values()) == {0, 1, 2, 3}, "exit codes 0-3 not all exercised")
    with tempfile.TemporaryDirectory() as tmp:
        for name in names:
            outs = []
            for i in range(2):
                out = Path(tmp) / f"{name}-{i}"
                code = cli_main(["run", str(examples / f"{name}.json"), "--out", str(out)])
                _check(fails, code == codes.get(name), f"{name}: exit {code}, golden {codes.get(name)}")
                outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
            _check(fails, outs[0] == outs[1], f"{name}: repeated runs differ")
            got = _summary(Path(tmp) / f"{name}-0" / "summary.csv")
            want = _summary(golden / name / "summary.csv")
            _check(fails, [(r["name"], r["verdict"]) for r in got] == [(r["name"], r["verdict"]) for r in want],
                   f"{name}: rows differ from golden")
            for g, w in zip(got, want):
                for col in ("value", "error"):
                    a, b = g[col], w[col]
                    same = a == b if "nan" in (a, b) else abs(float(a) - float(b)) <= 1e-9 + 1e-7 * abs(float(b))
                    _check(fails, same, f"{name}: {g['name']} {col} {a} vs {b}")
    acceptance(9, "CLI golden files, byte-identical reruns and exit codes 0/1/2/3", fails)
