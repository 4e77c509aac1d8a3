"""Quadrilateral surface meshes and the quadrature rules used on them.

Every panel is the image of the unit parameter square under a bilinear map
through its four corners, optionally followed by radial projection onto a
sphere (used only for the validation sphere).  Corners are ordered so that
``(c1 - c0) x (c3 - c0)`` points out of the solid.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


def gauss_square(q: int):
    """Tensor Gauss-Legendre rule on [0, 1]^2: (s, t, w)."""
    x, w = np.polynomial.legendre.leggauss(q)
    x = 0.5 * (x + 1)
    w = 0.5 * w
    s, t = np.meshgrid(x, x, indexing="ij")
    return s.ravel(), t.ravel(), np.outer(w, w).ravel()


def subdivided_square(q: int, sub: int):
    """``sub x sub`` copies of the q-point Gauss rule tiling [0, 1]^2."""
    s0, t0, w0 = gauss_square(q)
    i, j = np.meshgrid(np.arange(sub), np.arange(sub), indexing="ij")
    i, j = i.ravel()[:, None], j.ravel()[:, None]
    s = ((i + s0) / sub).ravel()
    t = ((j + t0) / sub).ravel()
    w = np.tile(w0 / sub**2, sub * sub)
    return s, t, w


def duffy_square(apex, q: int):
    """Rule on [0, 1]^2 that integrates ``1/r`` singularities at ``apex``.

    The square is split into four triangles sharing the apex and each is
    collapsed onto it by the Duffy map, whose Jacobian cancels the
    singularity.  ``apex`` may be an array of shape (P, 2) for a per-target
    apex; the result then has shape (P, 4 q^2).
    """
    apex = np.atleast_2d(np.asarray(apex, float))
    u, v, w = gauss_square(q)
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    s_all, t_all, w_all = [], [], []
    for a, b in zip(verts, np.roll(verts, -1, axis=0)):
        ea = a[None, :] - apex
        eb = b[None, :] - apex
        area2 = np.abs(ea[:, 0] * eb[:, 1] - ea[:, 1] * eb[:, 0])
        # point = apex + u * (ea + v * (eb - ea)); Jacobian u * |ea x eb|
        pts = apex[:, None, :] + u[None, :, None] * (
            ea[:, None, :] + v[None, :, None] * (eb - ea)[:, None, :]
        )
        s_all.append(pts[..., 0])
        t_all.append(pts[..., 1])
        w_all.append(area2[:, None] * (u * w)[None, :])
    return (
        np.concatenate(s_all, axis=1),
        np.concatenate(t_all, axis=1),
        np.concatenate(w_all, axis=1),
    )


def _bilinear(corners, s, t):
    """Points and tangents of the bilinear map.  corners (P,4,3), s,t (P,Q)."""
    c0, c1, c2, c3 = (corners[:, i, None, :] for i in range(4))
    s = s[..., None]
    t = t[..., None]
    x = (1 - s) * (1 - t) * c0 + s * (1 - t) * c1 + s * t * c2 + (1 - s) * t * c3
    xs = (1 - t) * (c1 - c0) + t * (c2 - c3)
    xt = (1 - s) * (c3 - c0) + s * (c2 - c1)
    return x, xs, xt


@dataclass(frozen=True, eq=False)
class Ball:
    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 1.0

    def contains(self, points, tol: float = 1e-12) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, float))
        return np.linalg.norm(p - np.asarray(self.center), axis=1) <= self.radius + tol


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Quadrilateral panels bounding ``solid``.

    ``sphere`` = (center, radius) switches on exact radial projection of
    every quadrature node onto that sphere.
    """

    corners: np.ndarray
    solid: object = None
    sphere: tuple | None = None

    def __post_init__(self):
        c = np.asarray(self.corners, float)
        if c.ndim != 3 or c.shape[1:] != (4, 3) or c.shape[0] == 0:
            raise ValueError("corners must have shape (N, 4, 3) with N >= 1")
        c.setflags(write=False)
        object.__setattr__(self, "corners", c)
        if np.any(self.areas <= 1e-14):
            raise ValueError("degenerate panel in mesh")

    def __len__(self) -> int:
        return self.corners.shape[0]

    def map(self, s, t, panels=None):
        """Nodes, unit normals and surface Jacobians at parameters (s, t).

        ``s``/``t`` are 1-D (same rule on every panel) or (P, Q) arrays, one
        row per entry of ``panels``.
        """
        corners = self.corners if panels is None else self.corners[panels]
        s = np.asarray(s, float)
        t = np.asarray(t, float)
        if s.ndim == 1:
            s = np.broadcast_to(s, (corners.shape[0], s.size))
            t = np.broadcast_to(t, (corners.shape[0], t.size))
        x, xs, xt = _bilinear(corners, s, t)
        if self.sphere is not None:
            center, radius = np.asarray(self.sphere[0], float), float(self.sphere[1])
            d = x - center
            rho = np.linalg.norm(d, axis=-1, keepdims=True)
            yhat = d / rho

            def proj(v):
                return radius / rho * (v - np.sum(v * yhat, axis=-1, keepdims=True) * yhat)

            x, xs, xt = center + radius * yhat, proj(xs), proj(xt)
        cross = np.cross(xs, xt)
        jac = np.linalg.norm(cross, axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):  # degenerate panels are rejected later
            normal = cross / jac[..., None]
        return x, normal, jac

    @cached_property
    def _centre_geometry(self):
        return self.map(np.array([0.5]), np.array([0.5]))

    @property
    def centroids(self) -> np.ndarray:
        """Collocation points: image of the parameter-square centre."""
        return self._centre_geometry[0][:, 0, :]

    @property
    def normals(self) -> np.ndarray:
        return self._centre_geometry[1][:, 0, :]

    @cached_property
    def areas(self) -> np.ndarray:
        s, t, w = gauss_square(6)
        _, _, jac = self.map(s, t)
        return jac @ w

    @cached_property
    def diameters(self) -> np.ndarray:
        c = self.map(np.array([0.0, 1.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0, 1.0]))[0]
        return np.maximum(
            np.linalg.norm(c[:, 2] - c[:, 0], axis=1), np.linalg.norm(c[:, 3] - c[:, 1], axis=1)
        )

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    def quadrature(self, q: int = 2, sub: int = 1):
        """Nodes, normals and weights (incl. Jacobian) of a panel rule."""
        s, t, w = subdivided_square(q, sub)
        x, n, jac = self.map(s, t)
        return x, n, jac * w

    def permuted(self, order) -> "SurfaceMesh":
        return SurfaceMesh(self.corners[np.asarray(order)], self.solid, self.sphere)

    def contains(self, points, tol: float = 1e-12) -> np.ndarray:
        if self.solid is None:
            raise ValueError("mesh has no solid attached")
        return self.solid.contains(points, tol)


_AXES = np.eye(3)


def polycube_mesh(shape, panels_per_edge: int) -> SurfaceMesh:
    """Exterior faces of a polycube, each split into m x m flat squares."""
    m = int(panels_per_edge)
    if m < 1:
        raise ValueError("panels_per_edge must be >= 1")
    lookup = set(shape.cubes)
    quads = []
    step = np.arange(m) / m
    for lattice, lower in zip(shape.lattice, shape.lower_corners):
        for a in range(3):
            b, c = (a + 1) % 3, (a + 2) % 3
            for sign in (1, -1):
                nb = tuple(lattice + sign * _AXES[a].astype(int))
                if nb in lookup:
                    continue
                base = lower + (_AXES[a] if sign > 0 else 0.0)
                eb, ec = (_AXES[b], _AXES[c]) if sign > 0 else (_AXES[c], _AXES[b])
                for i in step:
                    for j in step:
                        p0 = base + i * eb + j * ec
                        quads.append(
                            [p0, p0 + eb / m, p0 + (eb + ec) / m, p0 + ec / m]
                        )
    return SurfaceMesh(np.array(quads), solid=shape)


def sphere_mesh(radius: float = 1.0, panels_per_face_edge: int = 12, center=(0.0, 0.0, 0.0)):
    """Cube-sphere: the six faces of a cube radially projected to the sphere."""
    m = int(panels_per_face_edge)
    if m < 1:
        raise ValueError("panels_per_face_edge must be >= 1")
    center = np.asarray(center, float)
    quads = []
    step = -1 + 2 * np.arange(m) / m
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        for sign in (1, -1):
            eb, ec = (_AXES[b], _AXES[c]) if sign > 0 else (_AXES[c], _AXES[b])
            base = sign * _AXES[a]
            for i in step:
                for j in step:
                    p0 = base + i * eb + j * ec
                    h = 2 / m
                    quads.append([p0, p0 + h * eb, p0 + h * (eb + ec), p0 + h * ec])
    # Corner points on the cube; the map projects every node onto the sphere.
    corners = center + np.array(quads)
    return SurfaceMesh(corners, solid=Ball(tuple(center), radius), sphere=(tuple(center), radius))
