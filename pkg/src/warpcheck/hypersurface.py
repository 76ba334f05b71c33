"""Star-shaped hypersurfaces as radial graphs ``r = rho(theta)`` over S^n.

The extrinsic geometry is computed in warped-product coordinates. With
``sigma`` the round metric, ``D`` its connection and ``v = sqrt(1 + |D rho|^2 / lam^2)``:

    g_ij = rho_i rho_j + lam^2 sigma_ij
    h_ij = (lam lam' sigma_ij + 2 (lam'/lam) rho_i rho_j - D_i D_j rho) / v
    u    = lam / v

with the outward normal ``nu = (d_r - lam^-2 sigma^ab rho_b d_a) / v``.
"""
import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, NamedTuple

import numpy as np

from . import _kernels
from .errors import ConfigInvalid, GeometryInvalid, PotentialSign
from .grid import GridSpec, grid_from_descriptor, sphere_grid
from .quadrature import integrate_from
from .report import IDENTITY_OK, VIOLATED, FunctionalReport, default_abs_tol
from .symfunc import all_pm_batch
from .warped import WarpSample, eval_warp, primitive

ROUNDOFF_FACTOR = 64.0
NEWTON_TOL = 1e-13


class Integral(NamedTuple):
    value: float
    error: float


def roundoff_floor(scale):
    return ROUNDOFF_FACTOR * np.finfo(float).eps * float(scale)


def error_estimate(full, coarse, scale):
    """|full - half resolution| plus a floating-point floor proportional to ``scale``."""
    return abs(float(full) - float(coarse)) + roundoff_floor(scale)


@dataclass(frozen=True, eq=False)
class RadialGraph:
    """Nodal radial function over a grid. ``source`` rebuilds rho on any grid."""

    grid: GridSpec
    rho: np.ndarray
    manifold: object
    source: Callable | None = field(default=None, repr=False)
    descriptor: dict = field(default_factory=dict)

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=np.float64)
        if rho.shape != (self.grid.size,):
            raise GeometryInvalid(f"expected {self.grid.size} nodal values, got {rho.shape}")
        if not np.all(np.isfinite(rho)) or rho.min() <= 0.0:
            raise GeometryInvalid("radial function must be finite and positive",
                                  min_rho=float(np.min(rho)))
        if not self.manifold.contains(rho):
            raise GeometryInvalid(f"graph leaves the r-domain [0, {self.manifold.r_max})",
                                  max_rho=float(rho.max()))
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def n(self):
        return self.grid.n

    @property
    def sphere(self):
        return sphere_grid(self.grid)

    def on_grid(self, spec):
        if spec == self.grid:
            return self
        if self.source is not None:
            rho = self.source(sphere_grid(spec))
        else:
            rho = self.sphere.resample(self.rho, spec)
        return RadialGraph(spec, rho, self.manifold, self.source, self.descriptor)

    def coarsened(self):
        return self.on_grid(self.grid.half())

    def with_rho(self, rho):
        """Same grid and manifold, new nodal values (no analytic source)."""
        return RadialGraph(self.grid, rho, self.manifold, None, self.descriptor)


# ----------------------------------------------------------------------------
# constructors

def _sphere_equation(c, R, d):
    if c == -1:
        cR, cd, sd = math.cosh(R), math.cosh(d), math.sinh(d)
        return (lambda r, z: cd * np.cosh(r) - sd * np.sinh(r) * z - cR,
                lambda r, z: cd * np.sinh(r) - sd * np.cosh(r) * z)
    if c == 0:
        return (lambda r, z: r * r - 2 * d * r * z + d * d - R * R,
                lambda r, z: 2 * r - 2 * d * z)
    cR, cd, sd = math.cos(R), math.cos(d), math.sin(d)
    # sign flipped so that f increases with r, like the other two models
    return (lambda r, z: -(cd * np.cos(r) + sd * np.sin(r) * z - cR),
            lambda r, z: cd * np.sin(r) - sd * np.cos(r) * z)


def solve_sphere_radius(c, radius, offset, cos_polar, tol=NEWTON_TOL, max_iter=200):
    """Distance from the pole to the sphere of ``radius`` centred at ``offset`` along the axis.

    Safeguarded Newton on the bracket ``[radius - offset, radius + offset]``.
    """
    z = np.asarray(cos_polar, dtype=np.float64)
    lo = np.full_like(z, radius - offset)
    hi = np.full_like(z, radius + offset)
    if offset == 0.0:
        return lo
    f, df = _sphere_equation(c, radius, offset)
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        fx = f(x, z)
        lo = np.where(fx < 0, x, lo)
        hi = np.where(fx > 0, x, hi)
        d = df(x, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(d != 0, fx / d, np.inf)
        nxt = x - step
        outside = ~((nxt > lo) & (nxt < hi))
        nxt = np.where(outside, 0.5 * (lo + hi), nxt)
        done = np.abs(nxt - x) <= tol * np.maximum(1.0, np.abs(x))
        x = nxt
        if np.all(done):
            break
    return x


def build_sphere_graph(M, radius, center_offset, grid):
    """Geodesic sphere of ``radius`` centred at distance ``center_offset`` along the polar axis.

    With zero offset any manifold is accepted and the result is the slice ``{radius} x S^n``.
    """
    radius, offset = float(radius), float(center_offset)
    if radius <= 0 or offset < 0:
        raise GeometryInvalid("radius must be positive and offset non-negative")
    if offset >= radius:
        raise GeometryInvalid("the pole is not enclosed: offset must be below the radius",
                              radius=radius, offset=offset)
    if offset > 0 and not M.is_space_form:
        raise GeometryInvalid("off-centre spheres need a space form")
    if not radius + offset < M.r_max:
        raise GeometryInvalid("sphere leaves the r-domain", r_max=M.r_max)

    def source(sg):
        return solve_sphere_radius(M.c if M.is_space_form else 0, radius, offset, sg.cos_polar)

    desc = {"type": "sphere", "radius": radius, "offset": offset, "grid": grid.to_descriptor()}
    return RadialGraph(grid, source(sphere_grid(grid)), M, source, desc)


def _mode_values(n, degree, cos_polar, polar):
    if n == 1:
        return np.cos(degree * polar)
    coeffs = np.zeros(degree + 1)
    coeffs[degree] = 1.0
    return np.polynomial.legendre.legval(cos_polar, coeffs)


def build_perturbed_graph(M, base_radius, modes, grid):
    """``rho = base + sum a cos(k theta)`` on S^1, or zonal Legendre modes ``a P_k(cos theta)`` on S^2."""
    modes = [(int(k), float(a)) for k, a in (modes or [])]
    if any(k < 0 for k, _ in modes):
        raise GeometryInvalid("mode degrees must be non-negative")

    def source(sg):
        rho = np.full(sg.size, float(base_radius))
        for k, a in modes:
            rho = rho + a * _mode_values(sg.n, k, sg.cos_polar, sg.polar)
        return rho

    desc = {"type": "perturbed", "radius": float(base_radius), "modes": [list(m) for m in modes],
            "grid": grid.to_descriptor()}
    return RadialGraph(grid, source(sphere_grid(grid)), M, source, desc)


def graph_from_descriptor(M, desc):
    """Surface descriptor JSON to a RadialGraph (see the CLI config schema)."""
    if not isinstance(desc, dict) or "type" not in desc:
        raise ConfigInvalid("surface.type is required")
    try:
        grid = grid_from_descriptor(desc.get("grid"), M.n)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"surface.grid: {exc}") from exc
    if "radius" not in desc:
        raise ConfigInvalid("surface.radius is required")
    kind = desc["type"]
    if kind == "sphere":
        return build_sphere_graph(M, float(desc["radius"]), float(desc.get("offset", 0.0)), grid)
    if kind == "perturbed":
        modes = desc.get("modes", [])
        if not all(isinstance(m, (list, tuple)) and len(m) == 2 for m in modes):
            raise ConfigInvalid("surface.modes must be a list of [degree, amplitude] pairs")
        return build_perturbed_graph(M, float(desc["radius"]), modes, grid)
    raise ConfigInvalid(f"surface.type must be 'sphere' or 'perturbed', got {kind!r}")


# ----------------------------------------------------------------------------
# geometry

@dataclass(frozen=True)
class GeometrySample:
    r: float
    angles: tuple
    g: np.ndarray
    h: np.ndarray
    kappa: np.ndarray
    u: float
    warp: WarpSample
    v: float
    area_weight: float
    normal_radial: float


@dataclass(eq=False)
class SurfaceGeometry:
    """Struct-of-arrays geometry for every node of a graph.

    Shapes: scalars (N,), ``g``/``h``/``frame`` (N, n, n), ``kappa`` (N, n),
    ``drho`` (N, n), ``ddrho`` (N, n, n).
    """

    graph: RadialGraph
    backend: Callable
    r: np.ndarray
    drho: np.ndarray
    ddrho: np.ndarray
    g: np.ndarray
    h: np.ndarray
    kappa: np.ndarray
    frame: np.ndarray
    u: np.ndarray
    v: np.ndarray
    warp: WarpSample
    area_weight: np.ndarray

    @property
    def manifold(self):
        return self.graph.manifold

    @property
    def n(self):
        return self.graph.n

    @property
    def sphere(self):
        return self.graph.sphere

    @property
    def normal_radial(self):
        return 1.0 / self.v

    @cached_property
    def ginv(self):
        return np.linalg.inv(self.g)

    @cached_property
    def p(self):
        """Columns p_0..p_n of the principal curvatures."""
        return all_pm_batch(self.kappa)

    @property
    def p1(self):
        return self.p[:, 1]

    def shifted_p(self, eps):
        return all_pm_batch(self.kappa - eps)

    @cached_property
    def coarse(self):
        return self.backend(self.graph.coarsened())

    def refined(self, spec):
        return self.backend(self.graph.on_grid(spec))

    def samples(self):
        sg = self.sphere
        angles = np.stack([sg.theta] if self.n == 1 else [sg.theta, sg.phi], axis=-1)
        out = []
        for i in range(self.r.size):
            w = WarpSample(*(float(np.asarray(getattr(self.warp, f))[i])
                             for f in ("r", "lam", "lam1", "lam2", "lam3", "phi")))
            out.append(GeometrySample(
                r=float(self.r[i]), angles=tuple(float(a) for a in angles[i]),
                g=self.g[i], h=self.h[i], kappa=self.kappa[i], u=float(self.u[i]),
                warp=w, v=float(self.v[i]), area_weight=float(self.area_weight[i]),
                normal_radial=float(1.0 / self.v[i]),
            ))
        return out


def _spectrum(h, g):
    try:
        return _kernels.pencil_eig(h, g)
    except np.linalg.LinAlgError as exc:
        raise GeometryInvalid("induced metric is not positive definite") from exc


def compute_geometry(S):
    M = S.manifold
    sg = S.sphere
    rho = S.rho
    d1, d2 = sg.diff(rho)
    w = eval_warp(M, rho)
    lam, lam1 = w.lam, w.lam1

    sigma = sg.sigma
    sigma_inv = np.linalg.inv(sigma)
    grad2 = np.einsum("ni,nij,nj->n", d1, sigma_inv, d1)
    v = np.sqrt(1.0 + grad2 / lam ** 2)
    outer = d1[:, :, None] * d1[:, None, :]
    g = outer + lam[:, None, None] ** 2 * sigma
    hess = d2 - np.einsum("nkij,nk->nij", sg.christoffel, d1)
    h = (lam[:, None, None] * lam1[:, None, None] * sigma
         + 2.0 * (lam1 / lam)[:, None, None] * outer - hess) / v[:, None, None]
    h = 0.5 * (h + np.swapaxes(h, 1, 2))
    kappa, frame = _spectrum(h, g)
    return SurfaceGeometry(
        graph=S, backend=compute_geometry, r=rho, drho=d1, ddrho=d2, g=g, h=h,
        kappa=kappa, frame=frame, u=lam / v, v=v, warp=w,
        area_weight=lam ** S.n * v * sg.weights,
    )


# ----------------------------------------------------------------------------
# quadrature

def surface_integral(geom, integrand):
    """Integrate ``integrand(geom)`` against dmu, with a half-resolution error estimate.

    ``integrand`` may also be a nodal array; it is then resampled spectrally
    (as a density against the round measure) onto the half grid.
    """
    if callable(integrand):
        f = np.asarray(integrand(geom), dtype=np.float64)
        fc = np.asarray(integrand(geom.coarse), dtype=np.float64)
        coarse = float(np.sum(fc * geom.coarse.area_weight))
    else:
        f = np.asarray(integrand, dtype=np.float64)
        density = f * geom.area_weight / geom.sphere.weights
        half = geom.graph.grid.half()
        coarse = sphere_grid(half).integrate(geom.sphere.resample(density, half))
    terms = f * geom.area_weight
    value = float(np.sum(terms))
    return Integral(value, error_estimate(value, coarse, np.sum(np.abs(terms))))


def integrate_surface(S, f):
    """``sum f * area_weight`` over the nodes of ``S`` (a graph or its geometry)."""
    geom = S if isinstance(S, SurfaceGeometry) else compute_geometry(S)
    return surface_integral(geom, f)


def _radial_column(M, rho):
    n = M.n
    return integrate_from(lambda r: M.lam1(r) * M.lam(r) ** n, 0.0, rho)


def weighted_volume(S):
    """Integral of lam' over the region between r = 0 and the graph."""
    graph = S.graph if isinstance(S, SurfaceGeometry) else S
    M = graph.manifold
    cols = _radial_column(M, graph.rho)
    value = graph.sphere.integrate(cols)
    coarse_graph = graph.coarsened()
    coarse = coarse_graph.sphere.integrate(_radial_column(M, coarse_graph.rho))
    return Integral(value, error_estimate(value, coarse, np.sum(np.abs(cols) * graph.sphere.weights)))


def horizon_term(M):
    """``lam(0)^{n+1} |S^n|``, the flux through the horizon; zero without one."""
    if not M.has_horizon:
        return 0.0
    return float(M.lam(0.0)) ** (M.n + 1) * M.fiber_volume


# ----------------------------------------------------------------------------
# pointwise identities

def _gnorm_vec(ginv, x):
    return np.sqrt(np.abs(np.einsum("ni,nij,nj->n", x, ginv, x)))


def _gnorm_tensor(ginv, T):
    return np.sqrt(np.abs(np.einsum("nia,njb,nij,nab->n", ginv, ginv, T, T)))


def metric_christoffel(geom):
    """Gamma^k_ij of the induced metric from the analytic chain rule for dg."""
    sg = geom.sphere
    d1, d2 = geom.drho, geom.ddrho
    lam, lam1 = geom.warp.lam, geom.warp.lam1
    # dg[n, k, i, j] = d_k g_ij
    dg = (np.einsum("nik,nj->nkij", d2, d1) + np.einsum("ni,njk->nkij", d1, d2)
          + 2 * (lam * lam1)[:, None, None, None] * d1[:, :, None, None] * sg.sigma[:, None, :, :]
          + lam[:, None, None, None] ** 2 * sg.dsigma)
    lower = 0.5 * (np.einsum("nijl->nlij", dg) + np.einsum("njil->nlij", dg) - dg)
    # lower[n, l, i, j] = Gamma_{l ij}
    return np.einsum("nkl,nlij->nkij", geom.ginv, lower)


def covariant_hessian(geom, f, d1=None, d2=None):
    if d1 is None:
        d1, d2 = geom.sphere.diff(f)
    gamma = metric_christoffel(geom)
    return d2 - np.einsum("nkij,nk->nij", gamma, d1), d1


def lemma23_parts(geom):
    """Pointwise residuals of the gradient, Hessian and support-gradient identities."""
    M = geom.manifold
    lam, lam1 = geom.warp.lam, geom.warp.lam1
    phi = primitive(M, geom.r)
    hess_phi, dphi = covariant_hessian(geom, phi)
    V_e = lam[:, None] * geom.drho
    grad_res = _gnorm_vec(geom.ginv, dphi - V_e)
    hess_res = _gnorm_tensor(geom.ginv, hess_phi - (lam1[:, None, None] * geom.g
                                                    - geom.u[:, None, None] * geom.h))
    du, _ = geom.sphere.diff(geom.u)
    pred = np.einsum("nij,njk,nk->ni", geom.h, geom.ginv, V_e)
    u_res = _gnorm_vec(geom.ginv, du - pred)
    return {"gradient": float(grad_res.max()), "hessian": float(hess_res.max()),
            "support_gradient": float(u_res.max())}


def pointwise_identity_report(name, full, coarse, scale, inputs, extra=None):
    """Verdict for a max-norm residual that should vanish.

    The half-resolution residual is the error bar. A residual counts as zero
    when it is below the absolute tolerance or the roundoff floor, or when it
    lies inside the error bar and shrank by 4x or more under refinement.
    """
    floor = max(default_abs_tol(), 1e3 * roundoff_floor(scale))
    ratio = coarse / full if full > 0 else math.inf
    ok = full <= floor or (ratio >= 4.0 and full <= coarse)
    details = {"coarse_value": coarse, "refinement_ratio": ratio, "floor": floor}
    details.update(extra or {})
    return FunctionalReport(name=name, value=full, quadrature_error=coarse, inputs=inputs,
                            verdict=IDENTITY_OK if ok else VIOLATED, details=details)


def lemma23_residuals(S):
    geom = S if isinstance(S, SurfaceGeometry) else compute_geometry(S)
    full = lemma23_parts(geom)
    coarse = lemma23_parts(geom.coarse)
    scale = float(np.max(np.abs(geom.warp.lam1)) + np.max(np.abs(geom.u[:, None, None] * geom.h)))
    value = max(full.values())
    return pointwise_identity_report(
        "lemma23_residuals", value, max(coarse.values()), scale,
        {"manifold": geom.manifold.tag},
        {"parts": full, "coarse_parts": coarse},
    )


def static_convex_threshold(geom):
    """``nabla_nu lam' / lam' = lam'' u / (lam lam')`` at each node."""
    w = geom.warp
    if np.any(w.lam1 <= 0.0):
        bad = np.flatnonzero(w.lam1 <= 0.0)
        raise PotentialSign("lam' must be positive on the surface", nodes=bad.tolist())
    return w.lam2 * geom.u / (w.lam * w.lam1)


def static_convex_margin(S):
    geom = S if isinstance(S, SurfaceGeometry) else compute_geometry(S)
    return float(np.min(geom.kappa[:, 0] - static_convex_threshold(geom)))


def kappa_spread(geom):
    return float(geom.kappa.max() - geom.kappa.min())


# ----------------------------------------------------------------------------
# serialisation

def geometry_csv(geom):
    sg = geom.sphere
    n = geom.n
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    angle_cols = ["theta"] if n == 1 else ["theta", "phi"]
    writer.writerow(angle_cols + ["r"] + [f"kappa_{i + 1}" for i in range(n)]
                    + ["u", "lam1", "weight"])
    angles = [sg.theta] if n == 1 else [sg.theta, sg.phi]
    for i in range(geom.r.size):
        row = [a[i] for a in angles] + [geom.r[i]] + list(geom.kappa[i])
        row += [geom.u[i], geom.warp.lam1[i], geom.area_weight[i]]
        writer.writerow([repr(float(x)) for x in row])
    return buf.getvalue()
