"""Compare the compiled and pure-Python per-node kernels.

    python benchmarks/bench_kernels.py [--nodes 2048] [--repeat 5]

Reports the best wall time per call for each kernel and backend, the
speedup, and the largest disagreement between the two results. A full
geometry evaluation on a 32 x 64 sphere grid is timed as well, with each
backend patched in turn.
"""
import argparse
import timeit

import numpy as np

from warpcheck import _kernels
from warpcheck.grid import make_grid
from warpcheck.hypersurface import build_perturbed_graph, compute_geometry
from warpcheck.warped import make_space_form


def _spd_batch(rng, nodes, n):
    a = rng.normal(size=(nodes, n, n))
    g = a @ np.swapaxes(a, 1, 2) + n * np.eye(n)
    h = rng.normal(size=(nodes, n, n))
    return 0.5 * (h + np.swapaxes(h, 1, 2)), g


def _best(func, repeat):
    number = max(1, int(0.2 / max(timeit.timeit(func, number=1), 1e-6)))
    return min(timeit.repeat(func, number=number, repeat=repeat)) / number


def _cases(rng, nodes):
    x2 = rng.normal(size=(nodes, 2))
    x6 = rng.normal(size=(nodes, 6))
    h, g = _spd_batch(rng, nodes, 2)
    return [
        ("esym n=2", "esym", (x2,)),
        ("esym n=6", "esym", (x6,)),
        ("esym_grad n=6 m=3", "esym_grad", (x6, 3)),
        ("pencil_eig n=2", "pencil_eig", (h, g)),
    ]


def _disagreement(a, b):
    # eigenvector columns are only defined up to sign, so compare magnitudes
    if isinstance(a, tuple):
        return max(_disagreement(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(np.abs(a) - np.abs(b))))


def _geometry_time(impl, repeat):
    graph = build_perturbed_graph(make_space_form(-1, 2), 1.5, [(2, 0.1), (3, 0.04)],
                                  make_grid(2, n_mu=32, n_phi=64))
    saved = {name: getattr(_kernels, name) for name in ("esym", "esym_grad", "pencil_eig")}
    try:
        for name in saved:
            setattr(_kernels, name, getattr(impl, name))
        return _best(lambda: compute_geometry(graph).p, repeat)
    finally:
        for name, func in saved.items():
            setattr(_kernels, name, func)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--nodes", type=int, default=2048)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    if _kernels.compiled is None:
        print("compiled kernels are not built; run `pip install --no-build-isolation -e .` first")
        return 1
    rng = np.random.default_rng(0)
    header = f"{'kernel':<22}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}{'max diff':>12}"
    print(f"nodes per batch: {args.nodes}")
    print(header)
    print("-" * len(header))
    for label, name, call_args in _cases(rng, args.nodes):
        py, cy = getattr(_kernels.pure, name), getattr(_kernels.compiled, name)
        t_py = _best(lambda: py(*call_args), args.repeat)
        t_cy = _best(lambda: cy(*call_args), args.repeat)
        diff = _disagreement(py(*call_args), cy(*call_args))
        print(f"{label:<22}{1e3 * t_py:>14.3f}{1e3 * t_cy:>14.3f}{t_py / t_cy:>10.2f}{diff:>12.1e}")
    t_py = _geometry_time(_kernels.pure, args.repeat)
    t_cy = _geometry_time(_kernels.compiled, args.repeat)
    print(f"{'geometry 32x64':<22}{1e3 * t_py:>14.3f}{1e3 * t_cy:>14.3f}{t_py / t_cy:>10.2f}{'':>12}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
