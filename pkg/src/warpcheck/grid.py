"""Quadrature grids on S^1 and S^2 with spectral differentiation.

S^1: ``n_theta`` equispaced angles, FFT derivatives.
S^2: ``n_mu`` Gauss-Legendre nodes in cos(polar angle) times ``n_phi``
equispaced azimuths. Derivatives go through a spherical harmonic transform
(normalized associated Legendre functions up to degree ``n_mu - 1``), so no
node sits on a pole and no pole special-casing is needed.

Nodes are flattened in (mu, phi) row-major order. Coordinates on S^2 are
(theta, phi) with theta the polar angle.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .quadrature import gauss_legendre

MIN_THETA = 16
MIN_MU = 8
MIN_PHI = 16


@dataclass(frozen=True)
class GridSpec:
    n: int
    n_theta: int = 0
    n_mu: int = 0
    n_phi: int = 0

    @property
    def size(self):
        return self.n_theta if self.n == 1 else self.n_mu * self.n_phi

    def half(self):
        if self.n == 1:
            return GridSpec(1, n_theta=self.n_theta // 2)
        return GridSpec(2, n_mu=self.n_mu // 2, n_phi=self.n_phi // 2)

    def doubled(self):
        if self.n == 1:
            return GridSpec(1, n_theta=2 * self.n_theta)
        return GridSpec(2, n_mu=2 * self.n_mu, n_phi=2 * self.n_phi)

    def to_descriptor(self):
        if self.n == 1:
            return {"n": 1, "n_theta": self.n_theta}
        return {"n": 2, "n_mu": self.n_mu, "n_phi": self.n_phi}


def make_grid(n, *, n_theta=256, n_mu=32, n_phi=64):
    """Validated grid constructor for user-facing resolutions."""
    if n == 1:
        if n_theta < MIN_THETA:
            raise ValueError(f"n_theta must be >= {MIN_THETA}")
        return GridSpec(1, n_theta=int(n_theta))
    if n == 2:
        if n_mu < MIN_MU or n_phi < MIN_PHI:
            raise ValueError(f"need n_mu >= {MIN_MU} and n_phi >= {MIN_PHI}")
        return GridSpec(2, n_mu=int(n_mu), n_phi=int(n_phi))
    raise ValueError("grids exist for n = 1 and n = 2 only")


def grid_from_descriptor(desc, n):
    desc = dict(desc or {})
    if n == 1:
        return make_grid(1, n_theta=int(desc.get("n_theta", 256)))
    return make_grid(2, n_mu=int(desc.get("n_mu", 32)), n_phi=int(desc.get("n_phi", 64)))


def _legendre_p(mmax, lmax, mu):
    """Normalized P_l^m(mu) for 0 <= m <= mmax, 0 <= l <= lmax; zero where l < m.

    Unit L2 norm on [-1, 1], no Condon-Shortley phase. Shape (mmax+1, lmax+1, len(mu)).
    """
    mu = np.asarray(mu, dtype=np.float64)
    s = np.sqrt(1.0 - mu * mu)
    out = np.zeros((mmax + 1, lmax + 1, mu.size))
    pmm = np.full_like(mu, np.sqrt(0.5))
    for m in range(mmax + 1):
        if m > 0:
            pmm = np.sqrt((2 * m + 1) / (2 * m)) * s * pmm
        if m > lmax:
            continue
        out[m, m] = pmm
        if m + 1 <= lmax:
            out[m, m + 1] = np.sqrt(2 * m + 3) * mu * pmm
        for l in range(m + 2, lmax + 1):
            a = np.sqrt((4 * l * l - 1) / (l * l - m * m))
            b = np.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
            out[m, l] = a * (mu * out[m, l - 1] - b * out[m, l - 2])
    return out


def _ladder(table, m, lmax):
    """d/dtheta of the order-m row using orders m-1 and m+1 (no 1/sin factor)."""
    l = np.arange(lmax + 1, dtype=np.float64)[:, None]
    up = np.sqrt(np.maximum((l - m) * (l + m + 1), 0.0))
    down = np.sqrt(np.maximum((l + m) * (l - m + 1), 0.0))
    below = table[m - 1] if m >= 1 else -table[1]
    return 0.5 * (down * below - up * table[m + 1])


def legendre_table(m, lmax, mu):
    """Normalized P_l^m(mu), l = m..lmax, and two theta derivatives.

    Returns (P, dP/dtheta, d2P/dtheta2), each of shape (len(mu), lmax - m + 1).
    """
    P = _legendre_p(m + 2, lmax, mu)
    dP = {k: _ladder(P, k, lmax) for k in range(max(m - 1, 0), m + 2)}
    if m == 0:
        dP[-1] = -dP[1]
    l = np.arange(lmax + 1, dtype=np.float64)[:, None]
    up = np.sqrt(np.maximum((l - m) * (l + m + 1), 0.0))
    down = np.sqrt(np.maximum((l + m) * (l - m + 1), 0.0))
    d2P = 0.5 * (down * dP[m - 1] - up * dP[m + 1])
    sl = slice(m, lmax + 1)
    return P[m, sl].T.copy(), dP[m][sl].T.copy(), d2P[sl].T.copy()


class SphereGrid:
    """Nodes, weights, fiber geometry and differentiation for one GridSpec."""

    def __init__(self, spec):
        self.spec = spec
        self.n = spec.n
        self.size = spec.size
        if self.n == 1:
            self._init_circle()
        else:
            self._init_sphere()

    # S^1 ---------------------------------------------------------------
    def _init_circle(self):
        N = self.spec.n_theta
        theta = 2 * np.pi * np.arange(N) / N
        self.theta = theta
        self.polar = theta
        self.cos_polar = np.cos(theta)
        self.weights = np.full(N, 2 * np.pi / N)
        self.omega = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        self.domega = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)[:, None, :]
        self.sigma = np.ones((N, 1, 1))
        self.dsigma = np.zeros((N, 1, 1, 1))
        self.christoffel = np.zeros((N, 1, 1, 1))
        k = np.arange(N // 2 + 1, dtype=np.float64)
        if N % 2 == 0:
            k[-1] = 0.0
        self._k = k

    def _diff_circle(self, f):
        F = np.fft.rfft(f, axis=-1)
        N = self.spec.n_theta
        d1 = np.fft.irfft(1j * self._k * F, n=N, axis=-1)
        d2 = np.fft.irfft(-(self._k ** 2) * F, n=N, axis=-1)
        return d1[..., None], d2[..., None, None]

    # S^2 ---------------------------------------------------------------
    def _init_sphere(self):
        nm, nphi = self.spec.n_mu, self.spec.n_phi
        mu, wmu = gauss_legendre(nm)
        phi = 2 * np.pi * np.arange(nphi) / nphi
        MU, PHI = np.meshgrid(mu, phi, indexing="ij")
        self.mu_nodes = mu
        self.phi_nodes = phi
        mu_f = MU.ravel()
        self.phi = PHI.ravel()
        self.theta = np.arccos(mu_f)
        self.polar = self.theta
        self.cos_polar = mu_f
        st = np.sqrt(1.0 - mu_f ** 2)
        self.sin_theta = st
        self.weights = (wmu[:, None] * np.full(nphi, 2 * np.pi / nphi)[None, :]).ravel()
        cp, sp = np.cos(self.phi), np.sin(self.phi)
        self.omega = np.stack([st * cp, st * sp, mu_f], axis=-1)
        self.domega = np.stack([
            np.stack([mu_f * cp, mu_f * sp, -st], axis=-1),
            np.stack([-st * sp, st * cp, np.zeros_like(st)], axis=-1),
        ], axis=1)
        N = self.size
        self.sigma = np.zeros((N, 2, 2))
        self.sigma[:, 0, 0] = 1.0
        self.sigma[:, 1, 1] = st ** 2
        self.dsigma = np.zeros((N, 2, 2, 2))
        self.dsigma[:, 0, 1, 1] = 2 * st * mu_f
        self.christoffel = np.zeros((N, 2, 2, 2))
        self.christoffel[:, 0, 1, 1] = -st * mu_f
        self.christoffel[:, 1, 0, 1] = mu_f / st
        self.christoffel[:, 1, 1, 0] = mu_f / st

        lmax = nm - 1
        self.m_max = min(lmax, (nphi - 1) // 2)
        self._tables = [legendre_table(m, lmax, mu) for m in range(self.m_max + 1)]
        L = lmax + 1
        A = np.zeros((self.m_max + 1, L, nm))
        S0 = np.zeros((self.m_max + 1, nm, L))
        S1 = np.zeros_like(S0)
        S2 = np.zeros_like(S0)
        for m, (P, dP, d2P) in enumerate(self._tables):
            A[m, m:] = P.T * wmu
            S0[m, :, m:] = P
            S1[m, :, m:] = dP
            S2[m, :, m:] = d2P
        self._A = A
        self._S = (S0, S1, S2)
        self._m = np.arange(self.m_max + 1, dtype=np.float64)

    def _modes(self, f):
        nm, nphi = self.spec.n_mu, self.spec.n_phi
        F = np.fft.rfft(f.reshape(f.shape[:-1] + (nm, nphi)), axis=-1)
        return F[..., : self.m_max + 1]

    def _synth(self, G):
        nm, nphi = self.spec.n_mu, self.spec.n_phi
        full = np.zeros(G.shape[:-1] + (nphi // 2 + 1,), dtype=complex)
        full[..., : self.m_max + 1] = G
        out = np.fft.irfft(full, n=nphi, axis=-1)
        return out.reshape(out.shape[:-2] + (nm * nphi,))

    def _diff_sphere(self, f):
        coef = np.einsum("mlj,...jm->...lm", self._A, self._modes(f))
        S0, S1, S2 = self._S
        F0 = np.einsum("mil,...lm->...im", S0, coef)
        F1 = np.einsum("mil,...lm->...im", S1, coef)
        F2 = np.einsum("mil,...lm->...im", S2, coef)
        im = 1j * self._m
        f_t = self._synth(F1)
        f_p = self._synth(im * F0)
        f_tt = self._synth(F2)
        f_tp = self._synth(im * F1)
        f_pp = self._synth(-(self._m ** 2) * F0)
        d1 = np.stack([f_t, f_p], axis=-1)
        d2 = np.stack([np.stack([f_tt, f_tp], axis=-1), np.stack([f_tp, f_pp], axis=-1)], axis=-2)
        return d1, d2

    def _coefficients(self, f):
        _, wmu = gauss_legendre(self.spec.n_mu)
        F = self._modes(f)
        return [np.einsum("jl,...j->...l", P * wmu[:, None], F[..., :, m])
                for m, (P, _, _) in enumerate(self._tables)]

    # shared --------------------------------------------------------------
    def diff(self, f):
        """First and second coordinate derivatives of nodal values ``f``.

        ``f`` has shape (..., N); returns d1 (..., N, n) and d2 (..., N, n, n).
        """
        f = np.asarray(f, dtype=np.float64)
        if self.n == 1:
            return self._diff_circle(f)
        return self._diff_sphere(f)

    def resample(self, f, target):
        """Spectral interpolation of nodal values onto another grid of the same n."""
        f = np.asarray(f, dtype=np.float64)
        other = target if isinstance(target, SphereGrid) else sphere_grid(target)
        if self.n == 1:
            N, Nt = self.spec.n_theta, other.spec.n_theta
            F = np.fft.rfft(f, axis=-1)
            keep = min(N, Nt) // 2
            out = np.zeros(f.shape[:-1] + (Nt // 2 + 1,), dtype=complex)
            out[..., :keep] = F[..., :keep] * (Nt / N)
            return np.fft.irfft(out, n=Nt, axis=-1)
        coeffs = self._coefficients(f)
        nphi_t = other.spec.n_phi
        m_keep = min(self.m_max, (nphi_t - 1) // 2)
        lmax_t = other.spec.n_mu - 1
        G = np.zeros(f.shape[:-1] + (other.spec.n_mu, nphi_t // 2 + 1), dtype=complex)
        scale = nphi_t / self.spec.n_phi
        for m in range(m_keep + 1):
            lmax = min(self.spec.n_mu - 1, lmax_t)
            if lmax < m:
                continue
            P, _, _ = legendre_table(m, lmax, other.mu_nodes)
            G[..., :, m] = np.einsum("jl,...l->...j", P, coeffs[m][..., : lmax - m + 1]) * scale
        out = np.fft.irfft(G, n=nphi_t, axis=-1)
        return out.reshape(out.shape[:-2] + (other.size,))

    def integrate(self, f):
        return float(np.sum(np.asarray(f) * self.weights, axis=-1))


@lru_cache(maxsize=32)
def sphere_grid(spec):
    return SphereGrid(spec)
