"""Warped product ambients ``dr^2 + lam(r)^2 g_N`` over a round sphere fiber."""
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import BadCurvature, ConfigInvalid, OutOfDomain
from .quadrature import integrate_from
from .report import INEQUALITY_OK, VIOLATED, FunctionalReport

SUBSTATIC_TOL = 1e-10

_KIND_BY_C = {-1: "hyperbolic", 0: "euclidean", 1: "hemisphere"}

# lam, lam', lam'', lam'''
NAMED_WARPS = {
    "sinh": (np.sinh, np.cosh, np.sinh, np.cosh),
    "cosh": (np.cosh, np.sinh, np.cosh, np.sinh),
    "linear": (lambda r: np.asarray(r, dtype=float) * 1.0,
               lambda r: np.ones_like(np.asarray(r, dtype=float)),
               lambda r: np.zeros_like(np.asarray(r, dtype=float)),
               lambda r: np.zeros_like(np.asarray(r, dtype=float))),
    "sin": (np.sin, np.cos, lambda r: -np.sin(r), lambda r: -np.cos(r)),
}
_NAMED_DOMAIN = {"sinh": math.inf, "cosh": math.inf, "linear": math.inf, "sin": math.pi / 2}
_SPACE_FORM_WARP = {-1: "sinh", 0: "linear", 1: "sin"}
_SPACE_FORM_PHI = {
    -1: np.cosh,
    0: lambda r: 0.5 * np.asarray(r, dtype=float) ** 2,
    1: lambda r: -np.cos(r),
}


@dataclass(frozen=True)
class WarpSample:
    r: np.ndarray
    lam: np.ndarray
    lam1: np.ndarray
    lam2: np.ndarray
    lam3: np.ndarray
    phi: np.ndarray


@dataclass(frozen=True)
class WarpedProduct:
    n: int
    kind: str
    lam: Callable
    lam1: Callable
    lam2: Callable
    lam3: Callable
    r_max: float = math.inf
    rho_const: float = 1.0
    fiber_ricci_const: float = 0.0
    has_horizon: bool = False
    c: int | None = None
    warp_name: str = "custom"
    phi_closed: Callable | None = field(default=None, compare=False, repr=False)

    @property
    def is_space_form(self):
        return self.c is not None

    @property
    def tag(self):
        if self.is_space_form:
            return f"{self.kind}(c={self.c}),n={self.n}"
        return f"custom({self.warp_name}),n={self.n}"

    @property
    def fiber_volume(self):
        return 2 * math.pi if self.n == 1 else 4 * math.pi

    def contains(self, r):
        r = np.asarray(r, dtype=float)
        return bool(np.all(r >= 0.0) and np.all(r < self.r_max))

    def to_descriptor(self):
        if self.is_space_form:
            return {"kind": "space_form", "c": self.c, "n": self.n, "rho": self.rho_const}
        return {"kind": "custom", "n": self.n, "rho": self.rho_const, "warp": self.warp_name}


def make_space_form(c, n, rho=1.0):
    if c not in _KIND_BY_C:
        raise BadCurvature(f"space form curvature must be -1, 0 or 1, got {c!r}")
    if n not in (1, 2):
        raise ValueError("fiber dimension must be 1 or 2")
    name = _SPACE_FORM_WARP[c]
    lam = NAMED_WARPS[name]
    return WarpedProduct(
        n=n, kind=_KIND_BY_C[c], lam=lam[0], lam1=lam[1], lam2=lam[2], lam3=lam[3],
        r_max=_NAMED_DOMAIN[name], rho_const=rho, fiber_ricci_const=n - 1,
        has_horizon=False, c=c, warp_name=name, phi_closed=_SPACE_FORM_PHI[c],
    )


def make_custom(warp, n, rho=1.0, r_max=None, has_horizon=None):
    """Custom warp from a built-in name or a 4-tuple ``(lam, lam', lam'', lam''')``."""
    if n not in (1, 2):
        raise ValueError("fiber dimension must be 1 or 2")
    if isinstance(warp, str):
        if warp not in NAMED_WARPS:
            raise ConfigInvalid(f"unknown warp {warp!r}; expected one of {sorted(NAMED_WARPS)}")
        funcs = NAMED_WARPS[warp]
        name = warp
        if r_max is None:
            r_max = _NAMED_DOMAIN[warp]
    else:
        funcs = tuple(warp)
        name = "custom"
        if len(funcs) != 4:
            raise ValueError("custom warp needs lam and its first three derivatives")
    M = WarpedProduct(
        n=n, kind="custom", lam=funcs[0], lam1=funcs[1], lam2=funcs[2], lam3=funcs[3],
        r_max=math.inf if r_max is None else r_max, rho_const=rho,
        fiber_ricci_const=n - 1, has_horizon=False, warp_name=name,
    )
    if has_horizon is None:
        has_horizon = bool(float(M.lam(0.0)) > 0.0 and check_condition_H(M))
    return replace(M, has_horizon=has_horizon)


def make_horizon_example(n, rho=1.0):
    """The manifold with ``lam = cosh r`` on ``[0, inf)``; ``{0} x S^n`` is a horizon."""
    return make_custom("cosh", n, rho=rho, has_horizon=True)


def from_descriptor(desc):
    try:
        kind = desc["kind"]
        n = int(desc["n"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(f"manifold descriptor is missing field {exc}") from exc
    if n not in (1, 2):
        raise ConfigInvalid(f"manifold.n must be 1 or 2, got {n}")
    rho = float(desc.get("rho", 1.0))
    if kind == "space_form":
        if "c" not in desc:
            raise ConfigInvalid("manifold.c is required for a space form")
        return make_space_form(int(desc["c"]), n, rho=rho)
    if kind == "custom":
        if "warp" not in desc:
            raise ConfigInvalid("manifold.warp is required for a custom warp")
        return make_custom(desc["warp"], n, rho=rho)
    raise ConfigInvalid(f"manifold.kind must be 'space_form' or 'custom', got {kind!r}")


def _check_domain(M, r):
    r = np.asarray(r, dtype=float)
    if not M.contains(r):
        raise OutOfDomain(f"r outside [0, {M.r_max})", r=r)
    return r


def primitive(M, r):
    """Phi with Phi' = lam; closed form for space forms, Phi(0) = 0 otherwise."""
    r = np.asarray(r, dtype=float)
    if M.phi_closed is not None:
        return np.asarray(M.phi_closed(r), dtype=float)
    return integrate_from(M.lam, 0.0, r)


def eval_warp(M, r):
    r = _check_domain(M, r)
    return WarpSample(
        r=r,
        lam=np.asarray(M.lam(r), dtype=float),
        lam1=np.asarray(M.lam1(r), dtype=float),
        lam2=np.asarray(M.lam2(r), dtype=float),
        lam3=np.asarray(M.lam3(r), dtype=float),
        phi=primitive(M, r),
    )


def check_condition_H(M, r_scan=20.0, samples=10**4):
    """lam'(0) = 0, lam''(0) > 0 and lam' > 0 on a sample grid of (0, r_bar)."""
    if abs(float(M.lam1(0.0))) > 1e-14:
        return False
    if not float(M.lam2(0.0)) > 0.0:
        return False
    upper = min(M.r_max, r_scan)
    grid = np.linspace(0.0, upper, samples + 2)[1:-1]
    return bool(np.all(M.lam1(grid) > 0.0))


def substatic_scalar(M, r):
    """Coefficient of g_N in the sub-static criterion for a constant-Ricci fiber.

    For n = 1 the Ricci term vanishes identically and only the bracket remains.
    """
    w = eval_warp(M, r)
    n = M.n
    rho = M.rho_const
    ricci_term = w.lam1 * (M.fiber_ricci_const - (n - 1) * rho) if n >= 2 else 0.0
    bracket = (w.lam ** 2 * w.lam3
               + (n - 2) * w.lam * w.lam1 * w.lam2
               + (n - 1) * w.lam1 * (rho - w.lam1 ** 2))
    out = ricci_term + bracket
    return float(out) if np.ndim(out) == 0 else out


def substatic_scan(M, r_lo, r_hi, samples=1000):
    if samples < 2:
        raise ValueError("need at least two samples")
    if r_lo > r_hi:
        raise ValueError("empty window")
    _check_domain(M, [r_lo, r_hi])
    grid = np.linspace(r_lo, r_hi, samples)
    vals = substatic_scalar(M, grid)
    idx = int(np.argmin(vals))
    value = float(vals[idx])
    return FunctionalReport(
        name="substatic_scan",
        value=value,
        quadrature_error=0.0,
        inputs={"manifold": M.tag, "rho": M.rho_const, "r_lo": r_lo, "r_hi": r_hi,
                "samples": samples},
        verdict=INEQUALITY_OK if value >= -SUBSTATIC_TOL else VIOLATED,
        details={"argmin_r": float(grid[idx]), "n1_bracket_only": M.n == 1,
                 "r": grid, "scalar": vals},
    )
