"""Uniform front end over the two forward solvers.

A model is bound to one shape, one physics and one wavenumber.  It keeps
the factorised system, so every incident field and every translation of the
shape reuses a single factorisation.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np

from . import bem, lippmann
from .geometry import Medium, PolycubeShape, SoundSoft, _kappa

DEFAULT_PANELS_PER_EDGE = 8
DEFAULT_CELL_SIZE = 1 / 8


class SoftModel:
    def __init__(self, shape: PolycubeShape, kappa, panels_per_edge: int = DEFAULT_PANELS_PER_EDGE,
                 eta=None):
        self.shape = shape
        self.kappa = _kappa(kappa)
        self.panels_per_edge = int(panels_per_edge)
        self.eta = bem.default_eta(self.kappa) if eta is None else float(eta)

    @cached_property
    def mesh(self):
        return self.shape.exterior_surface(self.panels_per_edge)

    @cached_property
    def system(self) -> bem.CfieSystem:
        return bem.assemble_cfie(self.mesh, self.kappa, self.eta)

    def plane_far_field(self, d, xhat) -> np.ndarray:
        """Far field (M,) or (M, K) for incident direction(s) ``d``."""
        dens = bem.solve_soft_plane(self.mesh, self.kappa, d, system=self.system)
        return bem.far_field(dens, xhat)

    def far_field(self, zhat, xhat) -> np.ndarray:
        return self.plane_far_field(zhat, xhat)

    def point_density(self, z) -> bem.BoundaryDensity:
        return bem.solve_soft_point(self.mesh, self.kappa, z, system=self.system)

    def point_field(self, z, points) -> np.ndarray:
        """Scattered field on ``points`` for the point source at 0 and ``D + z``."""
        return bem.evaluate_near(self.point_density(z), points)

    def far_field_matrix(self, xhat) -> np.ndarray:
        return bem.far_field_matrix(self.mesh, self.kappa, self.eta, xhat)

    def plane_densities(self, d) -> np.ndarray:
        return bem.solve_soft_plane(self.mesh, self.kappa, d, system=self.system).values


class MediumModel:
    def __init__(self, shape: PolycubeShape, n: float, kappa, h: float = DEFAULT_CELL_SIZE):
        self.shape = shape
        self.n = float(n)
        self.kappa = _kappa(kappa)
        self.h = float(h)

    @cached_property
    def grid(self):
        return lippmann.voxelize(self.shape, self.n, self.h)

    @cached_property
    def system(self) -> lippmann.LsSystem:
        return lippmann.assemble_ls(self.grid, self.kappa)

    def plane_far_field(self, d, xhat) -> np.ndarray:
        sol = lippmann.solve_ls(self.grid, self.kappa, "plane", d, system=self.system)
        return lippmann.ls_far_field(sol, xhat)

    def far_field(self, zhat, xhat) -> np.ndarray:
        return self.plane_far_field(zhat, xhat)

    def point_solution(self, z) -> lippmann.TotalFieldSolution:
        return lippmann.solve_ls(self.grid, self.kappa, "point", translation=z, system=self.system)

    def point_field(self, z, points) -> np.ndarray:
        return lippmann.ls_scattered_near(self.point_solution(z), points)

    def far_field_matrix(self, xhat) -> np.ndarray:
        return lippmann.ls_far_field_matrix(self.grid, self.kappa, xhat)

    def plane_densities(self, d) -> np.ndarray:
        return lippmann.solve_ls(self.grid, self.kappa, "plane", d, system=self.system).values


def make_model(shape, physics, kappa, panels_per_edge: int = DEFAULT_PANELS_PER_EDGE,
               cell_size: float = DEFAULT_CELL_SIZE, eta=None):
    if isinstance(physics, SoundSoft):
        return SoftModel(shape, kappa, panels_per_edge, eta)
    if isinstance(physics, Medium):
        return MediumModel(shape, physics.n, kappa, cell_size)
    raise TypeError(f"unknown physics {physics!r}")
