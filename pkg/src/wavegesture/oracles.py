"""Independent references for the forward solvers and the asymptotic claims.

* ``MieSeries``: separation-of-variables far field of a sphere (sound-soft or
  homogeneous penetrable, equal density), same far-field normalisation as the
  solvers: ``u_s(x) ~ exp(i k |x|) / |x| * w_inf(xhat)``.
* ``verify_point_plane``: decay of the mismatch between point-source data and
  the plane-wave based reconstruction as the scatterer moves away.
* ``low_frequency_constant``: direction average and spread of the far field at
  small wavenumber.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import eval_legendre, spherical_jn, spherical_yn

from .geometry import MeasurementGrid, Medium, SoundSoft, _kappa


def _h1(l, x, derivative=False):
    return spherical_jn(l, x, derivative) + 1j * spherical_yn(l, x, derivative)


@dataclass(frozen=True)
class MieSeries:
    kappa: float
    radius: float = 1.0
    physics: SoundSoft | Medium = field(default_factory=SoundSoft)
    order: int | None = None

    def __post_init__(self):
        _kappa(self.kappa)
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.order is not None and self.order < self.min_order:
            raise ValueError(
                f"truncation order {self.order} below kappa*a + 10 = {self.min_order}"
            )

    @property
    def size_parameter(self) -> float:
        k = self.kappa * np.sqrt(self.physics.n) if isinstance(self.physics, Medium) else self.kappa
        return k * self.radius

    @property
    def min_order(self) -> int:
        return int(np.ceil(max(self.kappa * self.radius, self.size_parameter) + 10))

    @property
    def truncation(self) -> int:
        return self.order if self.order is not None else self.min_order + 5

    def coefficients(self) -> np.ndarray:
        """Scattering coefficients ``a_l`` of ``sum (2l+1) i^l a_l h_l P_l``."""
        l = np.arange(self.truncation + 1)
        x = self.kappa * self.radius
        if isinstance(self.physics, SoundSoft):
            return -spherical_jn(l, x) / _h1(l, x)
        k1 = self.kappa * np.sqrt(self.physics.n)
        x1 = k1 * self.radius
        j, jp = spherical_jn(l, x), spherical_jn(l, x, True)
        h, hp = _h1(l, x), _h1(l, x, True)
        j1, j1p = spherical_jn(l, x1), spherical_jn(l, x1, True)
        num = k1 * j * j1p - self.kappa * jp * j1
        den = self.kappa * hp * j1 - k1 * h * j1p
        return num / den

    def far_field_cos(self, cos_angle) -> np.ndarray:
        c = np.clip(np.asarray(cos_angle, float), -1.0, 1.0)
        a = self.coefficients()
        l = np.arange(a.size)
        terms = (2 * l + 1) * a
        legendre = eval_legendre(l[:, None], c.ravel()[None, :])
        return (-1j / self.kappa * (terms @ legendre)).reshape(c.shape)


def mie_far_field(series: MieSeries, d, xhat) -> np.ndarray:
    """Sphere far field for incidence ``d`` observed along ``xhat`` (M, 3)."""
    d = np.asarray(d, float)
    xhat = np.asarray(xhat, float)
    return series.far_field_cos(xhat @ d)


def fibonacci_sphere(n: int) -> np.ndarray:
    """Near-uniform unit vectors; equal weights approximate surface measure."""
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    phi = np.pi * (1 + 5**0.5) * i
    rho = np.sqrt(1 - z * z)
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)


def relative_l2(a, b, weights=None) -> float:
    """``||a - b|| / ||b||`` with optional quadrature weights."""
    a, b = np.asarray(a), np.asarray(b)
    w = np.ones(b.shape) if weights is None else np.asarray(weights)
    return float(np.sqrt(np.sum(w * np.abs(a - b) ** 2) / np.sum(w * np.abs(b) ** 2)))


def _unit(v):
    v = np.asarray(v, float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def point_plane_reconstruction(kappa, z, points, far_field_fn) -> np.ndarray:
    """Right-hand side of the point-to-plane asymptotic expansion on ``points``.

    ``far_field_fn(zhat, xhat_array)`` returns the plane-wave far field of the
    untranslated shape.
    """
    k = _kappa(kappa)
    z = np.asarray(z, float)
    rz = np.linalg.norm(z)
    diff = points - z
    rd = np.linalg.norm(diff, axis=1)
    w = far_field_fn(z / rz, diff / rd[:, None])
    return np.exp(1j * k * rz) / (4 * np.pi * rz) * np.exp(1j * k * rd) / rd * w


@dataclass
class DecayReport:
    radii: list
    errors: list
    exponent: float
    physics: str
    kappa: float

    def to_text(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def verify_point_plane(scatterer_solver, kappa, z_list, grid: MeasurementGrid | None = None,
                       physics: str = "soft") -> DecayReport:
    """Fit ``E(|z|) ~ |z|^p`` for the point/plane mismatch on the aperture.

    ``scatterer_solver`` exposes ``point_field(z, points)`` (scattered field on
    ``points`` for the point source hitting ``D + z``) and
    ``far_field(zhat, xhat)`` (plane-wave far field of D).
    """
    grid = grid or MeasurementGrid()
    pts = grid.flat_points
    wts = grid.weights.ravel()
    radii, errors = [], []
    for z in z_list:
        z = np.asarray(z, float)
        u = scatterer_solver.point_field(z, pts)
        approx = point_plane_reconstruction(kappa, z, pts, scatterer_solver.far_field)
        radii.append(float(np.linalg.norm(z)))
        errors.append(relative_l2(approx, u, wts))
    slope = float(np.polyfit(np.log(radii), np.log(errors), 1)[0])
    return DecayReport(radii, errors, slope, physics, float(kappa))


@dataclass
class LowFrequencyEstimate:
    mean: complex
    spread: float
    incidence_spread: float

    @property
    def relative_spread(self) -> float:
        return self.spread / abs(self.mean)


def low_frequency_constant(far_field_fn, n_incident: int = 6, n_observation: int = 64,
                           ) -> LowFrequencyEstimate:
    """Average far field over incidence/observation samples.

    ``far_field_fn(zhat, xhat)`` with ``zhat`` a unit vector and ``xhat``
    (M, 3).  ``spread`` is the largest pairwise distance between sampled
    values over all (incidence, observation) pairs; ``incidence_spread`` the
    largest deviation of a per-incidence mean from the overall mean.
    """
    zhats = fibonacci_sphere(n_incident)
    xhats = fibonacci_sphere(n_observation)
    vals = np.array([far_field_fn(zh, xhats) for zh in zhats])
    mean = complex(vals.mean())
    flat = vals.ravel()
    spread = float(np.abs(flat[:, None] - flat[None, :]).max())
    per_inc = vals.mean(axis=1)
    inc_spread = float(np.abs(per_inc - mean).max())
    return LowFrequencyEstimate(mean, spread, inc_spread)
