"""Sound-soft exterior scattering by the combined-field integral equation.

The scattered field is sought as ``u = (K + i eta S)[phi]`` with a piecewise
constant density collocated at panel centres, which leads to

    (I/2 + K + i eta S) phi = -u_in     on the boundary.

Quadrature per source panel: Gauss on well-separated panels, a subdivided
Gauss rule on panels near the target, and a Duffy rule on the panel that
contains the target (removes the 1/r singularity of both kernels).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .geometry import _kappa, fundamental_solution
from .mesh import SurfaceMesh, duffy_square

FAR_Q = 2
NEAR_Q = 2
NEAR_SUB = 4
SELF_Q = 8
NEAR_FACTOR = 1.5  # target-to-centroid distance, in panel diameters
_CHUNK = 6_000_000


def default_eta(kappa) -> float:
    return max(_kappa(kappa), 1.0)


def _kernel(kappa, eta, x, y, ny):
    """``dPhi(x, y)/dnu(y) + i eta Phi(x, y)``."""
    d = y - x
    r = np.sqrt(np.sum(d * d, axis=-1))
    g = np.exp(1j * kappa * r) / (4 * np.pi * r)
    dn = np.sum(d * ny, axis=-1) / r
    return g * ((1j * kappa - 1.0 / r) * dn + 1j * eta)


def _potential_matrix(mesh, kappa, eta, x, self_panels=None, self_st=None):
    """Matrix mapping panel densities to ``(K + i eta S)[phi]`` at ``x``.

    ``self_panels[i]`` (or -1) names the panel that carries target ``i``;
    ``self_st`` are the target's parameters on that panel.
    """
    x = np.atleast_2d(np.asarray(x, float))
    n_t, n_p = x.shape[0], len(mesh)
    y, ny, w = mesh.quadrature(FAR_Q)
    out = np.empty((n_t, n_p), dtype=complex)
    step = max(1, _CHUNK // (n_p * y.shape[1]))
    for a in range(0, n_t, step):
        xb = x[a : a + step, None, None, :]
        out[a : a + step] = np.einsum("tpq,pq->tp", _kernel(kappa, eta, xb, y, ny), w)

    if self_panels is None:
        self_panels = np.full(n_t, -1)
    dist = np.linalg.norm(x[:, None, :] - mesh.centroids[None, :, :], axis=-1)
    near = dist < NEAR_FACTOR * mesh.diameters[None, :]
    near[np.arange(n_t), self_panels] &= self_panels < 0
    ti, pj = np.nonzero(near)
    if ti.size:
        yr, nyr, wr = mesh.quadrature(NEAR_Q, NEAR_SUB)
        for a in range(0, ti.size, 20_000):
            t_, p_ = ti[a : a + 20_000], pj[a : a + 20_000]
            k = _kernel(kappa, eta, x[t_, None, :], yr[p_], nyr[p_])
            out[t_, p_] = np.sum(k * wr[p_], axis=1)

    own = np.nonzero(self_panels >= 0)[0]
    if own.size:
        s, t, w_d = duffy_square(np.asarray(self_st, float)[own], SELF_Q)
        ys, nys, jac = mesh.map(s, t, panels=self_panels[own])
        k = _kernel(kappa, eta, x[own, None, :], ys, nys)
        out[own, self_panels[own]] = np.sum(k * jac * w_d, axis=1)
    return out


def boundary_operator(mesh: SurfaceMesh, kappa, eta, panels, st) -> np.ndarray:
    """Rows of ``(I/2 + K + i eta S)`` at boundary points given by panel + (s, t)."""
    k = _kappa(kappa)
    panels = np.asarray(panels, int)
    st = np.atleast_2d(np.asarray(st, float))
    x = mesh.map(st[:, :1], st[:, 1:], panels=panels)[0][:, 0, :]
    rows = _potential_matrix(mesh, k, eta, x, panels, st)
    rows[np.arange(panels.size), panels] += 0.5
    return rows


@dataclass(frozen=True, eq=False)
class CfieSystem:
    mesh: SurfaceMesh
    kappa: float
    eta: float
    matrix: np.ndarray

    @cached_property
    def lu(self):
        return scipy.linalg.lu_factor(self.matrix, check_finite=True)

    def solve(self, rhs) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=complex)
        try:
            phi = scipy.linalg.lu_solve(self.lu, rhs)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise np.linalg.LinAlgError(f"CFIE solve failed: {exc}") from exc
        if not np.all(np.isfinite(phi)):
            raise np.linalg.LinAlgError("CFIE system is singular")
        return phi

    def residual(self, phi, rhs) -> float:
        rhs = np.asarray(rhs, dtype=complex)
        return float(np.linalg.norm(self.matrix @ phi - rhs) / np.linalg.norm(rhs))


def assemble_cfie(mesh: SurfaceMesh, kappa, eta=None) -> CfieSystem:
    k = _kappa(kappa)
    eta = default_eta(k) if eta is None else float(eta)
    if eta == 0:
        raise ValueError("coupling parameter eta must be nonzero")
    n = len(mesh)
    centre = np.full((n, 2), 0.5)
    matrix = boundary_operator(mesh, k, eta, np.arange(n), centre)
    return CfieSystem(mesh, k, eta, matrix)


@dataclass(frozen=True, eq=False)
class BoundaryDensity:
    """Solved density; ``values`` is (N,) or (N, K) for K incident fields."""

    mesh: SurfaceMesh
    values: np.ndarray
    kappa: float
    eta: float
    translation: np.ndarray = np.zeros(3)

    def __post_init__(self):
        if self.values.shape[0] != len(self.mesh):
            raise ValueError("density length does not match panel count")
        if self.eta == 0:
            raise ValueError("eta must be nonzero")

    def near(self, points):
        return evaluate_near(self, points)

    def far(self, directions):
        return far_field(self, directions)


def _system(mesh, kappa, eta, system):
    if system is None:
        return assemble_cfie(mesh, kappa, eta)
    if eta is not None and system.eta != eta:
        raise ValueError("eta does not match the supplied system")
    return system


def solve_soft_plane(mesh, kappa, d, eta=None, *, system=None, translation=None):
    """Density for plane-wave incidence ``exp(i k d.x)``; ``d`` may be (K, 3)."""
    sys_ = _system(mesh, kappa, eta, system)
    d = np.asarray(d, float)
    dd = np.atleast_2d(d)
    if np.any(np.abs(np.linalg.norm(dd, axis=1) - 1) > 1e-12):
        raise ValueError("incident directions must be unit vectors")
    z = np.zeros(3) if translation is None else np.asarray(translation, float)
    x = sys_.mesh.centroids + z
    rhs = -np.exp(1j * sys_.kappa * (x @ dd.T))
    if d.ndim == 1:
        rhs = rhs[:, 0]
    return BoundaryDensity(sys_.mesh, sys_.solve(rhs), sys_.kappa, sys_.eta, z)


def solve_soft_point(mesh, kappa, translation, eta=None, *, system=None, amplitude=1.0):
    """Density for the point source ``amplitude * Phi(x, 0)`` hitting ``D + z``."""
    sys_ = _system(mesh, kappa, eta, system)
    z = np.asarray(translation, float)
    if sys_.mesh.solid is not None and sys_.mesh.contains(-z[None, :])[0]:
        raise ValueError("point source at the origin lies inside the scatterer")
    rhs = -amplitude * fundamental_solution(sys_.kappa, sys_.mesh.centroids + z, np.zeros(3))
    return BoundaryDensity(sys_.mesh, sys_.solve(rhs), sys_.kappa, sys_.eta, z)


def evaluate_near(density: BoundaryDensity, points) -> np.ndarray:
    """Scattered field at exterior points (physical frame)."""
    pts = np.atleast_2d(np.asarray(points, float))
    local = pts - density.translation
    mesh = density.mesh
    if mesh.solid is not None and np.any(mesh.contains(local, tol=1e-9)):
        raise ValueError("evaluation point on or inside the scatterer")
    mat = _potential_matrix(mesh, density.kappa, density.eta, local)
    out = mat @ density.values
    return out[0] if np.ndim(points) == 1 else out


def far_field_matrix(mesh, kappa, eta, directions, translation=None) -> np.ndarray:
    """``F[m, p]`` with ``w_inf(xhat_m) = sum_p F[m, p] phi_p``."""
    k = _kappa(kappa)
    xh = np.atleast_2d(np.asarray(directions, float))
    if np.any(np.abs(np.linalg.norm(xh, axis=1) - 1) > 1e-12):
        raise ValueError("observation directions must be unit vectors")
    y, ny, w = mesh.quadrature(3)
    if translation is not None:
        y = y + np.asarray(translation, float)
    out = np.empty((xh.shape[0], len(mesh)), dtype=complex)
    step = max(1, _CHUNK // (y.shape[0] * y.shape[1]))
    for a in range(0, xh.shape[0], step):
        xb = xh[a : a + step]
        phase = np.exp(-1j * k * np.einsum("md,pqd->mpq", xb, y))
        factor = -1j * k * np.einsum("md,pqd->mpq", xb, ny) + 1j * eta
        out[a : a + step] = np.einsum("mpq,pq->mp", phase * factor, w)
    return out / (4 * np.pi)


def far_field(density: BoundaryDensity, directions) -> np.ndarray:
    mat = far_field_matrix(
        density.mesh, density.kappa, density.eta, directions, density.translation
    )
    out = mat @ density.values
    return out[0] if np.ndim(directions) == 1 else out
