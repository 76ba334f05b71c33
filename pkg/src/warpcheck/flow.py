"""Normal-speed flows ``dX/dt = F nu`` of radial graphs.

The state is kept as a radial graph at fixed fiber coordinates, so the radial
function obeys ``d rho/dt = F v``. The parametrization then drifts tangentially
with velocity ``T = F v grad(rho)``; the evolution checks add the advective
terms this produces.
"""
import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionViolated, ConfigInvalid, GeometryInvalid, StepRejected, UnsupportedManifold
from .hypersurface import (
    Integral, RadialGraph, SurfaceGeometry, compute_geometry, covariant_hessian,
    surface_integral, weighted_volume,
)
from .report import IDENTITY_OK, VIOLATED, FunctionalReport

BLOWUP_GUARD = 1e3
EVOLUTION_TOL = 1e-6
DEFAULT_DT = 1e-3
AREA_SLACK = 1e-8

_XI_FAMILIES = ("constant", "linear", "exp")


@dataclass(frozen=True)
class FlowSpeed:
    """Normal speed ``F`` as a function of the local geometry.

    ``unit_inward``: F = -1. ``minus_potential``: F = -lam'.
    ``custom_shifted``: F = -(lam' - eps u) xi(u - eps lam') where xi is
    ``a`` (constant), ``a + b s`` (linear) or ``a exp(b s)`` (exp).
    """

    kind: str = "unit_inward"
    eps: float = 0.0
    xi: str = "constant"
    xi_params: tuple = (1.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("unit_inward", "minus_potential", "custom_shifted"):
            raise ConfigInvalid(f"flow.speed must be unit_inward, minus_potential or custom_shifted, "
                                f"got {self.kind!r}")
        if self.xi not in _XI_FAMILIES:
            raise ConfigInvalid(f"flow.xi must be one of {_XI_FAMILIES}, got {self.xi!r}")

    def _xi(self, s):
        a, b = (tuple(self.xi_params) + (0.0, 0.0))[:2]
        if self.xi == "constant":
            return np.full_like(s, a)
        if self.xi == "linear":
            return a + b * s
        return a * np.exp(b * s)

    def __call__(self, geom):
        lam1 = geom.warp.lam1
        if self.kind == "unit_inward":
            return -np.ones_like(lam1)
        if self.kind == "minus_potential":
            return -lam1
        return -(lam1 - self.eps * geom.u) * self._xi(geom.u - self.eps * lam1)

    def to_descriptor(self):
        return {"kind": self.kind, "eps": self.eps, "xi": self.xi, "xi_params": list(self.xi_params)}


@dataclass(frozen=True, eq=False)
class FlowState:
    t: float
    graph: RadialGraph
    geom: SurfaceGeometry

    @classmethod
    def initial(cls, graph, t=0.0):
        return cls(float(t), graph, compute_geometry(graph))


@dataclass
class FlowTrace:
    states: list
    series: dict
    stop_reason: str = "t_end"
    flags: dict = field(default_factory=dict)
    snapshots: list = field(default_factory=list)

    @property
    def times(self):
        return np.asarray(self.series["t"])

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SERIES_COLUMNS)
        for row in zip(*(self.series[c] for c in SERIES_COLUMNS)):
            writer.writerow([repr(float(x)) for x in row])
        return buf.getvalue()

    def to_json(self):
        data = {"series": {k: [float(x) for x in v] for k, v in self.series.items()},
                "stop_reason": self.stop_reason, "flags": self.flags,
                "snapshots": self.snapshots}
        return json.dumps(data, indent=2, sort_keys=True)


SERIES_COLUMNS = ("t", "Q", "area", "weighted_volume", "int_u", "min_p1", "max_abs_kappa", "min_rho")


def radial_velocity(state, speed):
    return speed(state.geom) * state.geom.v


def _stage(graph, rho):
    try:
        new = graph.with_rho(rho)
        geom = compute_geometry(new)
    except GeometryInvalid as exc:
        raise StepRejected(f"stage left the admissible graphs: {exc}") from exc
    kmax = float(np.max(np.abs(geom.kappa)))
    if not kmax <= BLOWUP_GUARD:
        raise StepRejected(f"curvature {kmax:.3g} exceeds the blowup guard", max_abs_kappa=kmax)
    return new, geom


def _rk4(state, speed, dt):
    rho0 = state.graph.rho
    k1 = radial_velocity(state, speed)
    _, g2 = _stage(state.graph, rho0 + 0.5 * dt * k1)
    k2 = speed(g2) * g2.v
    _, g3 = _stage(state.graph, rho0 + 0.5 * dt * k2)
    k3 = speed(g3) * g3.v
    _, g4 = _stage(state.graph, rho0 + dt * k3)
    k4 = speed(g4) * g4.v
    return rho0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def flow_step(state, speed, dt):
    if not dt > 0:
        raise ValueError("dt must be positive")
    rho = _rk4(state, speed, dt)
    graph, geom = _stage(state.graph, rho)
    return FlowState(state.t + dt, graph, geom)


# ----------------------------------------------------------------------------
# evolution equations

def _laplacian(geom, f, d1=None, d2=None):
    hess, grad = covariant_hessian(geom, f, d1, d2)
    return np.einsum("nij,nij->n", geom.ginv, hess), grad, hess


def _drift(geom, F):
    """Components ``T^i = F v g^ij rho_j`` of the tangential drift."""
    return (F * geom.v)[:, None] * np.einsum("nij,nj->ni", geom.ginv, geom.drho)


def evolution_predictions(geom, F, eps):
    """Fixed-coordinate time derivatives predicted by the evolution equations."""
    c = geom.manifold.c
    n = geom.n
    lam1, u = geom.warp.lam1, geom.u
    kappa = geom.kappa
    T = _drift(geom, F)

    lapF, dF, hessF = _laplacian(geom, F)
    V_e = geom.warp.lam[:, None] * geom.drho
    gradF_V = np.einsum("ni,nij,nj->n", dF, geom.ginv, V_e)

    def advect(f):
        d1, _ = geom.sphere.diff(f)
        return np.einsum("ni,ni->n", T, d1)

    potential = lam1 - eps * u
    p1 = geom.p1
    h_up = np.einsum("nia,nab,njb->nij", geom.ginv, geom.h, geom.ginv)
    sq = np.sum(kappa ** 2, axis=1)
    cube = np.sum(kappa ** 3, axis=1)

    lap_rho, _, _ = _laplacian(geom, geom.r, geom.drho, geom.ddrho)
    d_Fv, _ = geom.sphere.diff(F * geom.v)
    grad_rho_up = np.einsum("nij,nj->ni", geom.ginv, geom.drho)
    div_T = np.einsum("ni,ni->n", d_Fv, grad_rho_up) + F * geom.v * lap_rho

    return {
        "potential": (potential, -c * u * F - eps * lam1 * F + eps * gradF_V + advect(potential)),
        "p1": (p1, -lapF / n - sq * F / n - c * F + advect(p1)),
        "h_squared": (sq, -2 * np.einsum("nij,nij->n", h_up, hessF) - 2 * F * cube
                      - 2 * c * F * np.sum(kappa, axis=1) + advect(sq)),
        "area_density": (geom.area_weight, (n * p1 * F + div_T) * geom.area_weight),
    }


_STENCIL = ((2, -1.0 / 12), (1, 8.0 / 12), (-1, -8.0 / 12), (-2, 1.0 / 12))


def _probe(state, speed, dt):
    """Geometries at ``t + j dt`` for the stencil offsets (RK4 runs backwards for j < 0)."""
    return [(w, _stage(state.graph, _rk4(state, speed, j * dt))[1]) for j, w in _STENCIL]


def evolution_residuals(state, speed, dt_probe, eps):
    """Max residual per equation using a fourth-order central difference in time."""
    geom = state.geom
    F = speed(geom)
    predicted = evolution_predictions(geom, F, eps)
    probes = _probe(state, speed, dt_probe)
    values = [(w, evolution_predictions(g, speed(g), eps), weighted_volume(g).value)
              for w, g in probes]
    out = {}
    for key, (_, rhs) in predicted.items():
        fd = sum(w * vals[key][0] for w, vals, _ in values) / dt_probe
        out[key] = float(np.max(np.abs(fd - rhs)))
    vol_fd = sum(w * vol for w, _, vol in values) / dt_probe
    vol_rhs = float(np.sum(geom.warp.lam1 * F * geom.area_weight))
    out["weighted_volume"] = abs(vol_fd - vol_rhs)
    return out


def verify_evolution(state, speed, dt_probe=1e-3, eps=0.0):
    """Finite-difference check of the evolution equations at ``state``.

    Parts: ``potential`` (lam' - eps u), ``h_squared`` (trace of the squared
    shape operator, which exercises the full second fundamental form
    equation), ``p1``, ``area_density`` and ``weighted_volume``. The same
    check at half the probe step gives the observed order.
    """
    M = state.graph.manifold
    if not M.is_space_form:
        raise UnsupportedManifold("the evolution equations are stated for space forms")
    full = evolution_residuals(state, speed, dt_probe, eps)
    half = evolution_residuals(state, speed, 0.5 * dt_probe, eps)
    value = max(full.values())
    ratios = {k: (full[k] / half[k] if half[k] > 0 else math.inf) for k in full}
    return FunctionalReport(
        name="verify_evolution", value=value, quadrature_error=max(half.values()),
        inputs={"manifold": M.tag, "speed": speed.kind, "eps": eps, "dt_probe": dt_probe},
        verdict=IDENTITY_OK if value <= EVOLUTION_TOL else VIOLATED,
        details={"parts": full, "half_step_parts": half, "ratios": ratios},
    )


# ----------------------------------------------------------------------------
# monotone quantity

def q_integral(state, eps=-1.0):
    """``e^{-(n+1)t} (int (lam' - eps u)/(p_1 - eps) - (n+1) int lam' dv)`` with its error."""
    geom = state.geom
    M = geom.manifold
    if not (M.is_space_form and M.c == -1):
        raise UnsupportedManifold("Q is defined in hyperbolic space")
    if np.any(geom.p1 <= eps):
        raise AssumptionViolated("p_1 must exceed eps at every node",
                                 nodes=np.flatnonzero(geom.p1 <= eps).tolist())
    n = geom.n
    main = surface_integral(geom, lambda g: (g.warp.lam1 - eps * g.u) / (g.p1 - eps))
    wv = weighted_volume(geom)
    scale = math.exp(-(n + 1) * state.t)
    value = scale * (main.value - (n + 1) * wv.value)
    return Integral(value, scale * (main.error + (n + 1) * wv.error))


def q_of_state(state, eps=-1.0):
    return q_integral(state, eps).value


def _record(state, eps, q_defined):
    geom = state.geom
    q = q_integral(state, eps) if q_defined else Integral(math.nan, 0.0)
    area = surface_integral(geom, lambda g: np.ones_like(g.r))
    int_u = surface_integral(geom, lambda g: g.u)
    wv = weighted_volume(geom)
    row = {
        "t": state.t, "Q": q.value, "area": area.value, "weighted_volume": wv.value,
        "int_u": int_u.value, "min_p1": float(geom.p1.min()),
        "max_abs_kappa": float(np.max(np.abs(geom.kappa))), "min_rho": float(geom.r.min()),
    }
    errors = {"Q": q.error, "divergence": int_u.error + (geom.n + 1) * wv.error}
    return row, errors


def evolve(initial, speed, t_end, dt=DEFAULT_DT, eps=-1.0, record_every=10, snapshot_every=0):
    """Integrate the flow to ``t_end`` and monitor the invariants along the way.

    A rejected step truncates the trace (``stop_reason`` says why) instead of
    failing. Q uses the shift ``eps``; its monotonicity is only claimed, and
    flagged, for the unit inward flow with ``eps = -1``.
    """
    if not dt > 0 or not t_end > 0:
        raise ValueError("dt and t_end must be positive")
    state = initial if isinstance(initial, FlowState) else FlowState.initial(initial)
    M = state.graph.manifold
    n = state.graph.n
    q_defined = M.is_space_form and M.c == -1
    steps = int(round(t_end / dt))
    states, rows, errs = [state], [], []
    snapshots = []
    stop = "t_end"
    row, err = _record(state, eps, q_defined and np.all(state.geom.p1 > eps))
    rows.append(row)
    errs.append(err)
    for i in range(1, steps + 1):
        try:
            state = flow_step(state, speed, dt)
        except StepRejected as exc:
            stop = f"step_rejected: {exc}"
            break
        state = FlowState(round(i * dt, 12), state.graph, state.geom)
        if i % record_every == 0 or i == steps:
            p1_ok = bool(np.all(state.geom.p1 > -1.0))
            try:
                row, err = _record(state, eps, q_defined and np.all(state.geom.p1 > eps))
            except AssumptionViolated:
                row, err = _record(state, eps, False)
            states.append(state)
            rows.append(row)
            errs.append(err)
            if snapshot_every and len(rows) % snapshot_every == 0:
                snapshots.append({"t": state.t, "rho": state.graph.rho.tolist()})
            if not p1_ok:
                stop = "p1_bound_violated"
                break
    series = {c: [r[c] for r in rows] for c in SERIES_COLUMNS}
    flags = _flags(series, errs, n, speed, eps, q_defined)
    return FlowTrace(states=states, series=series, stop_reason=stop, flags=flags, snapshots=snapshots)


def _flags(series, errs, n, speed, eps, q_defined):
    t = np.asarray(series["t"])
    area = np.asarray(series["area"])
    min_p1 = np.asarray(series["min_p1"])
    flags = {
        "p1_bound_ok": bool(np.all(min_p1 > -1.0)),
        "area_bound_ok": bool(np.all(area[1:] < np.exp(n * t[1:]) * area[0] + AREA_SLACK)),
    }
    div = np.asarray(series["int_u"]) - (n + 1) * np.asarray(series["weighted_volume"])
    div_err = np.asarray([e["divergence"] for e in errs])
    flags["divergence_identity_ok"] = bool(np.all(np.abs(div) <= np.maximum(div_err, 1e-9)))
    if q_defined and speed.kind == "unit_inward" and eps == -1.0:
        Q = np.asarray(series["Q"])
        tol = 10.0 * max(e["Q"] for e in errs)
        flags["q_tolerance"] = tol
        flags["q_monotone_ok"] = bool(np.all(Q[np.isfinite(Q)] <= Q[0] + tol))
    return flags
