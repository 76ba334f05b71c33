"""Independent geometry backend for space forms via an explicit embedding.

Models: the hyperboloid in Minkowski space (c = -1), Euclidean space (c = 0)
and the unit sphere in Euclidean space (c = 1). Tangents and the derivative of
the normal come from spectral differentiation of embedded components, and the
normal from a null space in the ambient metric, so nothing is shared with the
warped-coordinate formulas except the grid.
"""
import numpy as np

from .errors import UnsupportedManifold
from .hypersurface import SurfaceGeometry, _spectrum
from .warped import eval_warp


def _model(c, rho, omega):
    """Position, radial direction and ambient metric diagonal for each model."""
    r = rho[:, None]
    if c == -1:
        X = np.concatenate([np.cosh(r), np.sinh(r) * omega], axis=1)
        dr = np.concatenate([np.sinh(r), np.cosh(r) * omega], axis=1)
        eta = np.ones(X.shape[1])
        eta[0] = -1.0
    elif c == 0:
        X = r * omega
        dr = omega.copy()
        eta = np.ones(X.shape[1])
    else:
        X = np.concatenate([np.cos(r), np.sin(r) * omega], axis=1)
        dr = np.concatenate([-np.sin(r), np.cos(r) * omega], axis=1)
        eta = np.ones(X.shape[1])
    return X, dr, eta


def _diff_components(sg, F):
    """Derivatives of vector-valued nodal data F (N, D): returns (N, n, D)."""
    d1, _ = sg.diff(F.T)  # (D, N, n)
    return np.transpose(d1, (1, 2, 0))


def compute_geometry_embedded(S):
    M = S.manifold
    if not M.is_space_form:
        raise UnsupportedManifold("the embedded backend covers space forms only")
    sg = S.sphere
    c = M.c
    X, radial, eta = _model(c, S.rho, sg.omega)
    E = _diff_components(sg, X)  # tangents e_i, (N, n, D)
    g = np.einsum("nid,d,njd->nij", E, eta, E)

    constraints = E * eta
    if c != 0:
        constraints = np.concatenate([constraints, (X * eta)[:, None, :]], axis=1)
    _, _, vt = np.linalg.svd(constraints)
    N = vt[:, -1, :]
    norm2 = np.einsum("nd,d,nd->n", N, eta, N)
    N = N / np.sqrt(norm2)[:, None]
    orient = np.sign(np.einsum("nd,d,nd->n", N, eta, radial))
    N = N * orient[:, None]

    dN = _diff_components(sg, N)
    h = np.einsum("nid,d,njd->nij", dN, eta, E)
    h = 0.5 * (h + np.swapaxes(h, 1, 2))
    kappa, frame = _spectrum(h, g)

    w = eval_warp(M, S.rho)
    normal_radial = np.einsum("nd,d,nd->n", N, eta, radial)
    det = np.linalg.det(g)
    round_density = np.ones_like(S.rho) if S.n == 1 else sg.sin_theta
    d1, d2 = sg.diff(S.rho)
    return SurfaceGeometry(
        graph=S, backend=compute_geometry_embedded, r=S.rho, drho=d1, ddrho=d2, g=g, h=h,
        kappa=kappa, frame=frame, u=w.lam * normal_radial, v=1.0 / normal_radial, warp=w,
        area_weight=np.sqrt(det) / round_density * sg.weights,
    )
