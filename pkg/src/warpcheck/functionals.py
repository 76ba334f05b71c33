"""Integral identities, inequality deficits and rigidity residuals on a surface geometry.

Every function takes a :class:`~warpcheck.hypersurface.SurfaceGeometry` and
returns a :class:`~warpcheck.report.FunctionalReport`. Integrals carry the
difference against the half-resolution grid as their error bar, and errors
of products and sums are propagated to first order.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import AssumptionViolated, ConfigInvalid, PotentialSign, UnsupportedManifold
from .hypersurface import (
    Integral, covariant_hessian, horizon_term, kappa_spread, roundoff_floor,
    static_convex_margin, surface_integral, weighted_volume,
)
from .report import (
    IDENTITY_OK, INEQUALITY_OK, VIOLATED, FunctionalReport, default_abs_tol,
    identity_verdict, inequality_verdict,
)
from .symfunc import all_pm_batch, grad_pm_batch
from .warped import primitive

UMBILIC_SPREAD = 1e-5
P1_SPREAD = 1e-6


# ----------------------------------------------------------------------------
# error arithmetic on Integral pairs

def _add(*terms):
    return Integral(sum(t.value for t in terms), sum(t.error for t in terms))


def _scale(a, s):
    return Integral(s * a.value, abs(s) * a.error)


def _mul(a, b):
    return Integral(a.value * b.value,
                    abs(a.value) * b.error + abs(b.value) * a.error + a.error * b.error)


def _const(x):
    return Integral(float(x), 0.0)


def _inputs(geom, **extra):
    out = {"manifold": geom.manifold.tag}
    out.update({k: v for k, v in extra.items() if v is not None})
    return out


def _require_space_form(geom, what):
    if not geom.manifold.is_space_form:
        raise UnsupportedManifold(f"{what} is only available in space forms")


def _margin_or_none(geom):
    try:
        return static_convex_margin(geom)
    except PotentialSign:
        return None


def _equality_aware_verdict(value, error, equality_case):
    """Strict inequality verdict, except that a certified equality case counts as identity."""
    if equality_case and abs(value) <= max(error, default_abs_tol()):
        return IDENTITY_OK
    return inequality_verdict(value, error)


def _potential_term(g, eps):
    return g.warp.lam1 - eps * g.u


def _shifted(g, eps):
    return all_pm_batch(g.kappa - eps)


def enclosed_term(geom):
    """(n+1) times the weighted volume, plus the horizon flux when there is one."""
    wv = weighted_volume(geom)
    n = geom.n
    return _add(_scale(wv, n + 1), _const(horizon_term(geom.manifold)))


# ----------------------------------------------------------------------------
# Minkowski formulas

def minkowski_residual(geom, eps):
    res = surface_integral(
        geom, lambda g: _potential_term(g, eps) - g.u * (g.p1 - eps))
    return FunctionalReport(
        name="minkowski_residual", value=res.value, quadrature_error=res.error,
        inputs=_inputs(geom, eps=eps), verdict=identity_verdict(res.value, res.error),
    )


def shifted_minkowski_residual(geom, eps, m):
    _require_space_form(geom, "the shifted higher order Minkowski formula")
    if not 1 <= m <= geom.n:
        raise ValueError(f"need 1 <= m <= n, got m={m}")

    def integrand(g):
        p = _shifted(g, eps)
        return _potential_term(g, eps) * p[:, m - 1] - g.u * p[:, m]

    res = surface_integral(geom, integrand)
    return FunctionalReport(
        name="shifted_minkowski_residual", value=res.value, quadrature_error=res.error,
        inputs=_inputs(geom, eps=eps, m=m), verdict=identity_verdict(res.value, res.error),
    )


def divergence_residual(geom):
    """``int u dmu - (n+1) int lam' dv`` minus the horizon flux; zero on closed graphs."""
    lhs = surface_integral(geom, lambda g: g.u)
    total = _add(lhs, _scale(enclosed_term(geom), -1.0))
    return FunctionalReport(
        name="divergence_residual", value=total.value, quadrature_error=total.error,
        inputs=_inputs(geom), verdict=identity_verdict(total.value, total.error),
        details={"int_u": lhs.value, "horizon_term": horizon_term(geom.manifold)},
    )


# ----------------------------------------------------------------------------
# Heintze-Karcher type deficits

def hk_assumption_check(geom, eps):
    pot = _potential_term(geom, eps)
    shift = geom.p1 - eps
    prod = pot * shift
    bad = np.flatnonzero(~(prod > 0.0))
    details = {
        "min_potential_term": float(pot.min()),
        "min_p1_shift": float(shift.min()),
        "failing_nodes": bad.tolist(),
    }
    M = geom.manifold
    if M.is_space_form and M.c == -1 and abs(eps) <= 1.0:
        gap = float(np.min(pot - np.exp(-geom.r)))
        details["exp_bound_gap"] = gap
        details["exp_bound_holds"] = gap >= -1e-10
    value = float(prod.min())
    return FunctionalReport(
        name="hk_assumption_check", value=value, quadrature_error=0.0,
        inputs=_inputs(geom, eps=eps),
        verdict=INEQUALITY_OK if bad.size == 0 else VIOLATED, details=details,
    )


def _gate(geom, eps):
    check = hk_assumption_check(geom, eps)
    if check.verdict != INEQUALITY_OK:
        raise AssumptionViolated(
            f"(lam' - eps u)(p_1 - eps) > 0 fails at {len(check.details['failing_nodes'])} nodes",
            nodes=check.details["failing_nodes"], eps=eps)
    return check


def hk_integral(geom, eps):
    return surface_integral(geom, lambda g: _potential_term(g, eps) / (g.p1 - eps))


def hk_deficit(geom, eps):
    """``int (lam' - eps u)/(p_1 - eps) dmu`` minus the enclosed term; non-negative."""
    check = _gate(geom, eps)
    main = hk_integral(geom, eps)
    enclosed = enclosed_term(geom)
    total = _add(main, _scale(enclosed, -1.0))
    spread = kappa_spread(geom)
    return FunctionalReport(
        name="hk_deficit", value=total.value, quadrature_error=total.error,
        inputs=_inputs(geom, eps=eps),
        verdict=_equality_aware_verdict(total.value, total.error, spread <= UMBILIC_SPREAD),
        details={
            "integral": main.value, "enclosed_term": enclosed.value,
            "horizon_term": horizon_term(geom.manifold), "kappa_spread": spread,
            "static_convex_margin": _margin_or_none(geom),
            "min_assumption_product": check.value,
        },
    )


def _require_positive_potential(geom):
    lam1 = geom.warp.lam1
    if np.any(lam1 <= 0.0):
        raise PotentialSign("lam' must be positive on the surface",
                            nodes=np.flatnonzero(lam1 <= 0.0).tolist())


def _second_deficit_parts(geom):
    a = surface_integral(geom, lambda g: g.warp.lam1)
    b = surface_integral(geom, lambda g: g.warp.lam1 * g.p1)
    return a, b, enclosed_term(geom)


def minkowski_second_deficit(geom):
    """``(int lam')^2`` minus enclosed term times ``int lam' p_1``."""
    _require_positive_potential(geom)
    a, b, enclosed = _second_deficit_parts(geom)
    total = _add(_mul(a, a), _scale(_mul(enclosed, b), -1.0))
    margin = _margin_or_none(geom)
    umbilic = kappa_spread(geom) <= UMBILIC_SPREAD
    return FunctionalReport(
        name="minkowski_second_deficit", value=total.value, quadrature_error=total.error,
        inputs=_inputs(geom), verdict=_equality_aware_verdict(total.value, total.error, umbilic),
        details={"int_lam1": a.value, "int_lam1_p1": b.value, "enclosed_term": enclosed.value,
                 "static_convex_margin": margin, "static_convex": margin is not None and margin >= 0},
    )


def equiv_ineq_residual(geom, eps):
    """``(int (lam' - eps u))^2 - int u * int (lam' - eps u) p_1(kappa - eps)``.

    After the Minkowski and divergence identities this equals
    :func:`minkowski_second_deficit`; the difference is reported in ``details``.
    """
    _require_positive_potential(geom)
    lhs = surface_integral(geom, lambda g: _potential_term(g, eps))
    iu = surface_integral(geom, lambda g: g.u)
    rhs = surface_integral(geom, lambda g: _potential_term(g, eps) * (g.p1 - eps))
    total = _add(_mul(lhs, lhs), _scale(_mul(iu, rhs), -1.0))
    second = minkowski_second_deficit(geom)
    umbilic = kappa_spread(geom) <= UMBILIC_SPREAD
    return FunctionalReport(
        name="equiv_ineq_residual", value=total.value, quadrature_error=total.error,
        inputs=_inputs(geom, eps=eps),
        verdict=_equality_aware_verdict(total.value, total.error, umbilic),
        details={"second_deficit": second.value,
                 "difference_from_second_deficit": total.value - second.value},
    )


def cauchy_schwarz_chain(geom, eps):
    """Gap in ``(int w)^2 <= int w p_1(kappa - eps) * int w / (p_1 - eps)`` with ``w = lam' - eps u``."""
    _gate(geom, eps)
    w = surface_integral(geom, lambda g: _potential_term(g, eps))
    up = surface_integral(geom, lambda g: _potential_term(g, eps) * (g.p1 - eps))
    down = hk_integral(geom, eps)
    lhs = _mul(w, w)
    rhs = _mul(up, down)
    total = _add(rhs, _scale(lhs, -1.0))
    spread = float(geom.p1.max() - geom.p1.min())
    return FunctionalReport(
        name="cauchy_schwarz_chain", value=total.value, quadrature_error=total.error,
        inputs=_inputs(geom, eps=eps),
        verdict=_equality_aware_verdict(total.value, total.error, spread <= P1_SPREAD),
        details={"lhs": lhs.value, "rhs": rhs.value, "p1_spread": spread},
    )


# ----------------------------------------------------------------------------
# curvature equations

@dataclass(frozen=True)
class Chi:
    """Built-in right-hand sides ``chi(x, y)`` of the curvature equation.

    ``constant``: a. ``affine``: a + b1 x + b2 y. ``power``: a x^p y^q (x, y > 0).
    """

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        required = {"constant": ("a",), "affine": ("a", "b1", "b2"), "power": ("a", "p", "q")}
        if self.family not in required:
            raise ConfigInvalid(f"chi.family must be one of {sorted(required)}, got {self.family!r}")
        missing = [k for k in required[self.family] if k not in self.params]
        if missing:
            raise ConfigInvalid(f"chi.params is missing {missing}")

    def __call__(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        P = self.params
        if self.family == "constant":
            return np.full(np.broadcast(x, y).shape, float(P["a"]))
        if self.family == "affine":
            return P["a"] + P["b1"] * x + P["b2"] * y
        if np.any(x <= 0) or np.any(y <= 0):
            raise ValueError("the power family needs positive arguments")
        return P["a"] * x ** P["p"] * y ** P["q"]

    def partial_first(self, x, y):
        P = self.params
        if self.family == "constant":
            return np.zeros_like(np.asarray(x, dtype=float))
        if self.family == "affine":
            return np.full_like(np.asarray(x, dtype=float), P["b1"])
        return P["p"] * self(x, y) / np.asarray(x, dtype=float)

    def scaled(self, s):
        P = dict(self.params)
        if self.family == "affine":
            P.update(b1=s * P["b1"], b2=s * P["b2"])
        P["a"] = s * P["a"]
        return Chi(self.family, P)

    def to_descriptor(self):
        return {"family": self.family, "params": dict(self.params)}


def chi_from_descriptor(desc):
    if not isinstance(desc, dict) or "family" not in desc:
        raise ConfigInvalid("chi.family is required")
    return Chi(desc["family"], {k: float(v) for k, v in dict(desc.get("params", {})).items()})


def _equation_eps(geom, eps, variant):
    _require_space_form(geom, "the curvature equation")
    if variant == "thm12":
        if geom.manifold.c != -1:
            raise UnsupportedManifold("variant thm12 lives in hyperbolic space")
        if eps != -1:
            raise ValueError("variant thm12 fixes eps = -1")
        return -1.0
    if variant != "thm14":
        raise ValueError(f"variant must be 'thm12' or 'thm14', got {variant!r}")
    return float(eps)


def equation_arguments(geom, eps):
    """``(Phi(r), eps Phi(r) - u)``; with eps = -1 in hyperbolic space this is ``(lam', -lam' - u)``."""
    phi = primitive(geom.manifold, geom.r)
    return phi, eps * phi - geom.u


def _equation_residual(geom, eps, k, chi):
    first, second = equation_arguments(geom, eps)
    lhs = _shifted(geom, eps)[:, k]
    rhs = chi(first, second)
    return np.abs(lhs - rhs), float(np.max(np.abs(lhs)) + np.max(np.abs(rhs)))


def curvature_equation_residual(geom, eps, k, chi, variant="thm14"):
    eps = _equation_eps(geom, eps, variant)
    if not 1 <= k <= geom.n:
        raise ValueError(f"need 1 <= k <= n, got k={k}")
    full, scale = _equation_residual(geom, eps, k, chi)
    coarse, _ = _equation_residual(geom.coarse, eps, k, chi)
    value = float(full.max())
    error = abs(value - float(coarse.max())) + roundoff_floor(scale * geom.r.size)
    return FunctionalReport(
        name="curvature_equation_residual", value=value, quadrature_error=error,
        inputs=_inputs(geom, eps=eps, k=k, variant=variant, chi=chi.to_descriptor()),
        verdict=identity_verdict(value, error),
        details={"argmax_node": int(np.argmax(full)), "kappa_spread": kappa_spread(geom)},
    )


def sphere_equation_gap(M, eps, k, chi, r):
    """Curvature equation residual of the centred sphere of radius ``r`` (signed)."""
    lam, lam1 = float(M.lam(r)), float(M.lam1(r))
    phi = float(primitive(M, r))
    return (lam1 / lam - eps) ** k - float(chi(phi, eps * phi - lam))


def solve_sphere_equation(M, eps, k, chi, r_lo=1e-2, r_hi=None, samples=400):
    """Radius of a centred sphere solving the curvature equation (scipy brentq)."""
    r_hi = min(M.r_max - 1e-6, 6.0) if r_hi is None else r_hi
    grid = np.linspace(r_lo, r_hi, samples)
    vals = []
    for r in grid:
        try:
            vals.append(sphere_equation_gap(M, eps, k, chi, r))
        except ValueError:
            vals.append(math.nan)
    vals = np.array(vals)
    for i in range(samples - 1):
        a, b = vals[i], vals[i + 1]
        if np.isfinite(a) and np.isfinite(b) and a * b <= 0:
            return brentq(lambda r: sphere_equation_gap(M, eps, k, chi, r),
                          grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
    raise ValueError("no sphere radius solves the equation in the scanned window")


# ----------------------------------------------------------------------------
# integration by parts

def _pdot_contracted(g, eps, k, hess):
    """``pdot_k^{ij} hess_ij`` assembled in the principal frame."""
    x = g.kappa - eps
    grad = grad_pm_batch(x, k)
    W = g.frame
    # W is g-orthonormal, so W diag(grad) W^T is the contravariant derivative tensor
    return np.einsum("nia,na,nja,nij->n", W, grad, W, hess)


def integration_by_parts_residual(geom, eps, k):
    """Both sides of ``k int[(lam' - eps u) p_{k-1} - u p_k] = int pdot^{ij} nabla_ij Phi``.

    ``value`` is their difference. The right side vanishes for a Codazzi
    tensor on a closed surface; its size is reported and gated separately.
    """
    _require_space_form(geom, "the integration by parts identity")
    if not 1 <= k <= geom.n:
        raise ValueError(f"need 1 <= k <= n, got k={k}")

    def lhs_integrand(g):
        p = _shifted(g, eps)
        return k * (_potential_term(g, eps) * p[:, k - 1] - g.u * p[:, k])

    def rhs_integrand(g):
        hess, _ = covariant_hessian(g, primitive(g.manifold, g.r))
        return _pdot_contracted(g, eps, k, hess)

    lhs = surface_integral(geom, lhs_integrand)
    rhs = surface_integral(geom, rhs_integrand)
    diff = _add(lhs, _scale(rhs, -1.0))
    ok = (identity_verdict(diff.value, diff.error) == IDENTITY_OK
          and identity_verdict(rhs.value, rhs.error) == IDENTITY_OK)
    return FunctionalReport(
        name="integration_by_parts_residual", value=diff.value, quadrature_error=diff.error,
        inputs=_inputs(geom, eps=eps, k=k), verdict=IDENTITY_OK if ok else VIOLATED,
        details={"lhs": lhs.value, "rhs_integral": rhs.value, "rhs_error": rhs.error},
    )
