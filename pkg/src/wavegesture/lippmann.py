"""Penetrable-medium scattering by the Lippmann-Schwinger volume equation.

Cells of side ``h`` carry a constant contrast ``m = n - 1``; the discrete
equation collocated at cell centres is

    u_p - k^2 sum_q G_pq m_q u_q = u_in(x_p)

with ``G_pq = Phi(x_p, x_q) h^3`` off the diagonal and, on the diagonal, the
integral of ``Phi`` over the ball of volume ``h^3``.  Small systems are
factorised densely; large ones use GMRES with an FFT convolution on the
bounding box.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .geometry import _kappa, fundamental_solution

DENSE_LIMIT = 4096
GMRES_RTOL = 1e-10
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class VoxelGrid:
    """Cells of a box lattice that carry nonzero contrast.

    ``index`` are integer positions in the lattice whose cell 0 is centred at
    ``origin``; ``contrast`` may be scaled by the cell's volume fraction.
    """

    h: float
    index: np.ndarray
    origin: np.ndarray
    contrast: np.ndarray
    solid: object = None

    def __post_init__(self):
        if self.index.shape[0] != self.contrast.shape[0]:
            raise ValueError("one contrast value per cell")
        if np.any(self.contrast == 0):
            raise ValueError("cells with zero contrast must be excluded")

    def __len__(self) -> int:
        return self.index.shape[0]

    @property
    def centers(self) -> np.ndarray:
        return self.origin + self.h * self.index

    @property
    def box_shape(self) -> tuple:
        return tuple(int(v) for v in self.index.max(axis=0) + 1)

    @property
    def cell_volume(self) -> float:
        return self.h**3

    def integrated_contrast(self) -> float:
        return float(self.contrast.sum() * self.h**3)

    def contains(self, points, tol: float = 1e-12):
        if self.solid is None:
            raise ValueError("grid has no solid attached")
        return self.solid.contains(points, tol)


def _cells_per_unit(h) -> int:
    n = 1.0 / float(h)
    k = int(round(n))
    if k < 1 or abs(n - k) > 1e-9:
        raise ValueError(f"1/h must be a positive integer, got h={h}")
    return k


def voxelize(shape, n_medium: float, h: float) -> VoxelGrid:
    """Tile every unit cube of a polycube with ``(1/h)^3`` cells."""
    k = _cells_per_unit(h)
    if n_medium == 1.0:
        raise ValueError("refractive index 1 gives no contrast")
    lat = shape.lattice - shape.lattice.min(axis=0)
    sub = np.stack(np.meshgrid(*[np.arange(k)] * 3, indexing="ij"), axis=-1).reshape(-1, 3)
    index = (lat[:, None, :] * k + sub[None, :, :]).reshape(-1, 3)
    origin = shape.lower_corners.min(axis=0) + 0.5 / k
    contrast = np.full(index.shape[0], float(n_medium) - 1.0)
    return VoxelGrid(1.0 / k, index, origin, contrast, solid=shape)


def voxelize_ball(radius: float, n_medium: float, h: float, subsamples: int = 4) -> VoxelGrid:
    """Ball on a centred lattice; boundary cells weighted by volume fraction."""
    from .mesh import Ball

    n = int(np.ceil(radius / h))
    ax = (np.arange(-n, n) + 0.5) * h
    c = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1).reshape(-1, 3)
    o = ((np.arange(subsamples) + 0.5) / subsamples - 0.5) * h
    sub = np.stack(np.meshgrid(o, o, o, indexing="ij"), axis=-1).reshape(-1, 3)
    frac = (np.linalg.norm(c[:, None, :] + sub[None], axis=-1) <= radius).mean(axis=1)
    keep = frac > 0
    index = np.stack(np.meshgrid(*[np.arange(2 * n)] * 3, indexing="ij"), axis=-1).reshape(-1, 3)
    return VoxelGrid(
        h, index[keep], np.full(3, ax[0]), (float(n_medium) - 1.0) * frac[keep],
        solid=Ball((0.0, 0.0, 0.0), radius),
    )


def self_term(kappa, h) -> complex:
    """Integral of ``Phi(0, y)`` over the ball of volume ``h^3``."""
    k = _kappa(kappa)
    a = h * (3 / (4 * np.pi)) ** (1 / 3)
    return ((1 - 1j * k * a) * np.exp(1j * k * a) - 1) / k**2


@dataclass(frozen=True, eq=False)
class LsSystem:
    grid: VoxelGrid
    kappa: float
    dense_limit: int = DENSE_LIMIT

    @property
    def dense(self) -> bool:
        return len(self.grid) <= self.dense_limit

    @cached_property
    def kernel_matrix(self) -> np.ndarray:
        """``G`` including cell volume, shape (M, M)."""
        x = self.grid.centers
        diff = x[:, None, :] - x[None, :, :]
        r = np.sqrt(np.sum(diff * diff, axis=-1))
        np.fill_diagonal(r, 1.0)
        g = np.exp(1j * self.kappa * r) / (4 * np.pi * r) * self.grid.cell_volume
        np.fill_diagonal(g, self_term(self.kappa, self.grid.h))
        return g

    @cached_property
    def matrix(self) -> np.ndarray:
        a = -self.kappa**2 * self.kernel_matrix * self.grid.contrast[None, :]
        a[np.diag_indices_from(a)] += 1.0
        return a

    @cached_property
    def lu(self):
        return scipy.linalg.lu_factor(self.matrix)

    @cached_property
    def _fft_kernel(self):
        shape = self.grid.box_shape
        full = tuple(2 * s for s in shape)
        axes = [np.fft.fftfreq(f, 1.0 / f) for f in full]  # signed integer offsets
        off = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1) * self.grid.h
        r = np.linalg.norm(off, axis=-1)
        r[0, 0, 0] = 1.0
        g = np.exp(1j * self.kappa * r) / (4 * np.pi * r) * self.grid.cell_volume
        g[0, 0, 0] = self_term(self.kappa, self.grid.h)
        return np.fft.fftn(g), full

    def convolve(self, v) -> np.ndarray:
        """``G @ v`` via FFT on the zero-padded bounding box."""
        ghat, full = self._fft_kernel
        idx = tuple(self.grid.index.T)
        box = np.zeros(full, dtype=complex)
        box[idx] = v
        return np.fft.ifftn(np.fft.fftn(box) * ghat)[idx]

    def apply(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=complex)
        if self.dense:
            return self.matrix @ u
        return u - self.kappa**2 * self.convolve(self.grid.contrast * u)

    def solve(self, rhs) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=complex)
        if self.dense:
            u = scipy.linalg.lu_solve(self.lu, rhs)
        else:
            cols = rhs.reshape(rhs.shape[0], -1)
            u = np.column_stack([self._gmres(c) for c in cols.T]).reshape(rhs.shape)
        return u

    def _gmres(self, b):
        m = len(self.grid)
        op = scipy.sparse.linalg.LinearOperator((m, m), matvec=self.apply, dtype=complex)
        u, info = scipy.sparse.linalg.gmres(
            op, b, rtol=GMRES_RTOL, atol=0.0, restart=100, maxiter=50
        )
        res = self.residual(u, b)
        if info != 0 or res > RESIDUAL_TOL:
            raise RuntimeError(
                f"Lippmann-Schwinger GMRES did not converge (info={info}, residual={res:.2e})"
            )
        return u

    def residual(self, u, rhs) -> float:
        return float(np.linalg.norm(self.apply(u) - rhs) / np.linalg.norm(rhs))


def assemble_ls(grid: VoxelGrid, kappa, dense_limit: int = DENSE_LIMIT) -> LsSystem:
    return LsSystem(grid, _kappa(kappa), dense_limit)


@dataclass(frozen=True, eq=False)
class TotalFieldSolution:
    grid: VoxelGrid
    kappa: float
    values: np.ndarray
    translation: np.ndarray = np.zeros(3)

    def near(self, points):
        return ls_scattered_near(self, points)

    def far(self, directions):
        return ls_far_field(self, directions)


def incident_values(grid: VoxelGrid, kappa, incident: str = "plane", d=None, translation=None):
    """Incident field at the (translated) cell centres.

    ``incident`` is ``"plane"`` (direction(s) ``d``) or ``"point"`` (source at
    the origin).
    """
    k = _kappa(kappa)
    z = np.zeros(3) if translation is None else np.asarray(translation, float)
    x = grid.centers + z
    if incident == "plane":
        dd = np.atleast_2d(np.asarray(d, float))
        if np.any(np.abs(np.linalg.norm(dd, axis=1) - 1) > 1e-12):
            raise ValueError("incident directions must be unit vectors")
        u = np.exp(1j * k * (x @ dd.T))
        return u[:, 0] if np.ndim(d) == 1 else u
    if incident == "point":
        if grid.solid is not None and grid.contains(-z[None, :])[0]:
            raise ValueError("point source at the origin lies inside the scatterer")
        return fundamental_solution(k, x, np.zeros(3))
    raise ValueError(f"unknown incident field {incident!r}")


def solve_ls(grid: VoxelGrid, kappa, incident: str = "plane", d=None, translation=None,
             *, system: LsSystem | None = None) -> TotalFieldSolution:
    sys_ = system or assemble_ls(grid, kappa)
    z = np.zeros(3) if translation is None else np.asarray(translation, float)
    rhs = incident_values(sys_.grid, sys_.kappa, incident, d, z)
    return TotalFieldSolution(sys_.grid, sys_.kappa, sys_.solve(rhs), z)


def ls_scattered_near(solution: TotalFieldSolution, points) -> np.ndarray:
    """``k^2 sum_q Phi(x, y_q) m_q u_q h^3`` at exterior points."""
    pts = np.atleast_2d(np.asarray(points, float))
    grid = solution.grid
    if grid.solid is not None and np.any(grid.contains(pts - solution.translation, tol=1e-9)):
        raise ValueError("evaluation point inside the scatterer")
    y = grid.centers + solution.translation
    src = (solution.kappa**2 * grid.cell_volume) * grid.contrast[:, None] * (
        solution.values.reshape(len(grid), -1)
    )
    out = np.empty((pts.shape[0], src.shape[1]), dtype=complex)
    step = max(1, 4_000_000 // len(grid))
    for a in range(0, pts.shape[0], step):
        g = fundamental_solution(solution.kappa, pts[a : a + step, None, :], y[None, :, :])
        out[a : a + step] = g @ src
    out = out.reshape((pts.shape[0],) + solution.values.shape[1:])
    return out[0] if np.ndim(points) == 1 else out


def ls_far_field_matrix(grid: VoxelGrid, kappa, directions, translation=None) -> np.ndarray:
    """``F[m, q]`` with ``w_inf(xhat_m) = sum_q F[m, q] u_q``."""
    k = _kappa(kappa)
    xh = np.atleast_2d(np.asarray(directions, float))
    if np.any(np.abs(np.linalg.norm(xh, axis=1) - 1) > 1e-12):
        raise ValueError("observation directions must be unit vectors")
    y = grid.centers if translation is None else grid.centers + np.asarray(translation, float)
    weight = k**2 * grid.cell_volume * grid.contrast / (4 * np.pi)
    return np.exp(-1j * k * (xh @ y.T)) * weight[None, :]


def ls_far_field(solution: TotalFieldSolution, directions) -> np.ndarray:
    mat = ls_far_field_matrix(solution.grid, solution.kappa, directions, solution.translation)
    out = mat @ solution.values
    return out[0] if np.ndim(directions) == 1 else out
