"""Gauss-Legendre helpers shared by the radial and surface integrators."""
from functools import lru_cache

import numpy as np

_ORDER = 20


@lru_cache(maxsize=None)
def gauss_legendre(order):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _composite(f, lo, hi, panels):
    x, w = gauss_legendre(_ORDER)
    width = (hi - lo) / panels
    total = np.zeros_like(hi)
    for p in range(panels):
        a = lo + p * width
        mid = a + 0.5 * width
        pts = mid[..., None] + 0.5 * width[..., None] * x
        total = total + 0.5 * width * np.sum(w * f(pts), axis=-1)
    return total


def integrate_from(f, lo, hi, rtol=1e-14, max_panels=1024):
    """Integrate a vectorised ``f`` over ``[lo, hi]`` for an array of upper limits.

    Composite Gauss-Legendre with panel doubling until successive estimates
    agree to ``rtol`` (relative, with an absolute floor at the same level).
    """
    hi = np.asarray(hi, dtype=np.float64)
    lo = np.broadcast_to(np.asarray(lo, dtype=np.float64), hi.shape)
    prev = _composite(f, lo, hi, 1)
    panels = 2
    while True:
        cur = _composite(f, lo, hi, panels)
        scale = np.maximum(np.abs(cur), 1.0)
        if np.all(np.abs(cur - prev) <= rtol * scale) or panels >= max_panels:
            return cur
        prev = cur
        panels *= 2
