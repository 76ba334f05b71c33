"""Pure numpy implementations of the per-node kernels.

Shapes follow the compiled module exactly so the two are interchangeable.
"""
import numpy as np


def esym(x):
    """Elementary symmetric sums e_0..e_n for each row of ``x`` (shape (N, n))."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    rows, n = x.shape
    e = np.zeros((rows, n + 1))
    e[:, 0] = 1.0
    for i in range(n):
        xi = x[:, i]
        # descending m so e[m-1] is still the pre-update value
        for m in range(i + 1, 0, -1):
            e[:, m] += xi * e[:, m - 1]
    return e


def esym_grad(x, m):
    """d e_m / d x_i, i.e. e_{m-1} of the row with x_i deleted."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    rows, n = x.shape
    out = np.zeros((rows, n))
    if m < 1 or m > n:
        return out
    for i in range(n):
        rest = np.delete(x, i, axis=1)
        out[:, i] = esym(rest)[:, m - 1]
    return out


def pencil_eig(h, g):
    """Solve h w = k g w per node for symmetric h and SPD g (shape (N, n, n)).

    Returns eigenvalues ascending (N, n) and eigenvectors as columns (N, n, n),
    normalised so that W^T g W = I.
    """
    h = np.asarray(h, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    chol = np.linalg.cholesky(g)
    linv = np.linalg.inv(chol)
    a = linv @ h @ np.swapaxes(linv, -1, -2)
    a = 0.5 * (a + np.swapaxes(a, -1, -2))
    kappa, q = np.linalg.eigh(a)
    w = np.swapaxes(linv, -1, -2) @ q
    return kappa, w
