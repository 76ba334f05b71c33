"""Scalar results with an attached error estimate and a verdict."""
import csv
import io
import json
import os
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field

import numpy as np

IDENTITY_OK = "identity_ok"
INEQUALITY_OK = "inequality_ok"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"

DEFAULT_ABS_TOL = 1e-9

_override = None


def default_abs_tol():
    """Absolute tolerance for identity claims.

    Precedence: an active :func:`abs_tol_override`, then ``WARPCHECK_TOL``,
    then ``DEFAULT_ABS_TOL``.
    """
    if _override is not None:
        return _override
    raw = os.environ.get("WARPCHECK_TOL")
    return float(raw) if raw else DEFAULT_ABS_TOL


@contextmanager
def abs_tol_override(value):
    global _override
    previous = _override
    _override = None if value is None else float(value)
    try:
        yield
    finally:
        _override = previous


def identity_verdict(value, error, abs_tol=None):
    tol = default_abs_tol() if abs_tol is None else abs_tol
    return IDENTITY_OK if abs(value) <= max(error, tol) else VIOLATED


def inequality_verdict(value, error):
    """Three-way verdict for a claim ``value >= 0`` with dead-band ``error``."""
    if abs(value) <= error:
        return INCONCLUSIVE
    return INEQUALITY_OK if value > 0 else VIOLATED


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


@dataclass
class FunctionalReport:
    name: str
    value: float
    quadrature_error: float = 0.0
    inputs: dict = field(default_factory=dict)
    verdict: str = IDENTITY_OK
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return _plain(asdict(self))

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def reports_to_json(reports):
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True)


def reports_to_csv(reports):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["name", "value", "error", "verdict"])
    for r in reports:
        writer.writerow([r.name, repr(float(r.value)), repr(float(r.quadrature_error)), r.verdict])
    return buf.getvalue()
