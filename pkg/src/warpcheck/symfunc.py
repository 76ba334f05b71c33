"""Normalized elementary symmetric polynomials of a spectrum.

``p_m(x) = e_m(x) / C(n, m)`` with ``p_0 = 1`` and ``p_m = 0`` for ``m > n``.
All functions accept any finite real sequence; the ``*_batch`` variants take
an ``(N, n)`` array with one spectrum per row.
"""
import logging
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import _kernels
from .errors import ConeViolation, EmptyInput

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConeReport:
    k: int
    member: bool
    first_failing_order: int | None
    p_values: list = field(default_factory=list)


def as_spectrum(x):
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("a spectrum is a non-empty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError("spectrum entries must be finite")
    return arr


def _as_batch(x):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise ValueError("expected an (N, n) array of spectra")
    return arr


def eval_pm_batch(x, m):
    x = _as_batch(x)
    n = x.shape[1]
    if m < 0:
        raise ValueError("order must be non-negative")
    if m == 0:
        return np.ones(x.shape[0])
    if m > n:
        return np.zeros(x.shape[0])
    return _kernels.esym(x)[:, m] / comb(n, m)


def all_pm_batch(x):
    """Columns p_0..p_n for each row."""
    x = _as_batch(x)
    n = x.shape[1]
    norms = np.array([comb(n, m) for m in range(n + 1)], dtype=np.float64)
    return _kernels.esym(x) / norms


def grad_pm_batch(x, m):
    x = _as_batch(x)
    n = x.shape[1]
    if not 1 <= m <= n:
        raise ValueError(f"gradient needs 1 <= m <= n, got m={m}, n={n}")
    return _kernels.esym_grad(x, m) / comb(n, m)


def eval_pm(x, m):
    return float(eval_pm_batch(as_spectrum(x)[None, :], m)[0])


def grad_pm(x, m):
    return grad_pm_batch(as_spectrum(x)[None, :], m)[0]


def shift_spectrum(x, eps):
    return as_spectrum(x) - eps


def cone_membership(x, k):
    """Membership of ``x`` in the open Garding cone of order ``k``.

    Signs are tested exactly (strict ``> 0``, no tolerance).
    """
    x = as_spectrum(x)
    if not 1 <= k <= x.size:
        raise ValueError(f"cone order must satisfy 1 <= k <= n, got {k}")
    p = all_pm_batch(x[None, :])[0, 1:k + 1]
    failing = [i + 1 for i, val in enumerate(p) if not val > 0.0]
    return ConeReport(
        k=k,
        member=not failing,
        first_failing_order=failing[0] if failing else None,
        p_values=[float(v) for v in p],
    )


def newton_maclaurin_gap(x, m):
    """``p_1 p_{m-1} - p_m``, which is non-negative on the cone of order m."""
    x = as_spectrum(x)
    report = cone_membership(x, m)
    if not report.member:
        raise ConeViolation(f"spectrum not in cone of order {m}", report=report)
    p = all_pm_batch(x[None, :])[0]
    return float(p[1] * p[m - 1] - p[m])


def strict_shifted_k_convex(x_samples, k, eps):
    """Sufficient test for strict shifted k-convexity of a connected surface.

    True when ``p_k(x - eps) > 0`` at every sample and ``x - eps`` is entrywise
    positive at one sample at least. The direct cone test is evaluated too;
    a disagreement means the samples do not come from one connected surface.
    """
    if x_samples is None or len(x_samples) == 0:
        raise EmptyInput("no spectra supplied")
    shifted = _as_batch(np.asarray(x_samples, dtype=np.float64)) - eps
    n = shifted.shape[1]
    if not 1 <= k <= n:
        raise ValueError(f"cone order must satisfy 1 <= k <= n, got {k}")
    p = all_pm_batch(shifted)
    sufficient = bool(np.all(p[:, k] > 0.0) and np.any(np.all(shifted > 0.0, axis=1)))
    direct = bool(np.all(p[:, 1:k + 1] > 0.0))
    if sufficient and not direct:
        log.warning("sufficient condition holds but some samples leave the cone; "
                    "samples are not from a connected surface")
    return sufficient


def in_cone_direct(x_samples, k, eps):
    """Direct definition: every shifted spectrum lies in the cone of order k."""
    if x_samples is None or len(x_samples) == 0:
        raise EmptyInput("no spectra supplied")
    shifted = _as_batch(np.asarray(x_samples, dtype=np.float64)) - eps
    return bool(np.all(all_pm_batch(shifted)[:, 1:k + 1] > 0.0))
