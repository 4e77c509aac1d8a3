"""Two-stage recognition: locate with a low wavenumber, then match shapes.

All L2(Gamma) products use the composite trapezoid rule of the measurement
grid.  Both indicators are normalised correlations, so they lie in [0, 1]
and ignore any global complex scale of the data.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .geometry import FieldSamples, MeasurementGrid, SamplingRegion, _kappa
from .tables import FarFieldTable, test_function_u_hat

SIMPLEX_SCALE = 5.0
XATOL = 1e-3
MAX_EVALUATIONS = 500
DEFAULT_INITIAL = (10.0, 0.0, 0.0)


def _values(a):
    return a.values if isinstance(a, FieldSamples) else np.asarray(a)


def trapezoid_inner(a, b, grid: MeasurementGrid | None = None) -> complex:
    """``sum w_pq a_pq conj(b_pq)``; if either side is phaseless both are reduced
    to magnitudes first."""
    if isinstance(a, FieldSamples) and isinstance(b, FieldSamples):
        if a.grid != b.grid:
            raise ValueError("samples live on different grids")
        grid = a.grid
        if a.phaseless or b.phaseless:
            a, b = a.magnitude(), b.magnitude()
    grid = grid or next(s.grid for s in (a, b) if isinstance(s, FieldSamples))
    va, vb = _values(a).reshape(grid.n, grid.n), _values(b).reshape(grid.n, grid.n)
    return complex(np.sum(grid.weights * va * np.conj(vb)))


def _norm(v, w) -> float:
    return float(np.sqrt(np.sum(w * np.abs(v) ** 2)))


def correlation(measured, test, weights, phaseless: bool) -> float:
    """Normalised trapezoid correlation of two sample arrays."""
    nu, nt = _norm(measured, weights), _norm(test, weights)
    if nu == 0:
        raise ValueError("measured data has zero norm")
    if nt == 0:
        raise ValueError("test function has zero norm")
    if phaseless:
        num = abs(np.sum(weights * np.abs(measured) * np.abs(test)))
    else:
        num = abs(np.sum(weights * measured * np.conj(test)))
    return float(num / (nu * nt))


def test_function_u_ring(kappa, z_tilde, x) -> np.ndarray:
    """``exp(i k |z|) / (4 pi |z|) * exp(i k |x - z|) / |x - z|``."""
    k = _kappa(kappa)
    z = np.asarray(z_tilde, float)
    pts = np.atleast_2d(np.asarray(x, float))
    rz = np.linalg.norm(z)
    rd = np.linalg.norm(pts - z, axis=1)
    if rz == 0 or np.any(rd == 0):
        raise ValueError("test function is singular at z = 0 or x = z")
    out = np.exp(1j * k * (rz + rd)) / (4 * np.pi * rz * rd)
    return out[0] if np.ndim(x) == 1 else out


test_function_u_ring.__test__ = False


def indicator_location(measured: FieldSamples, kappa1, z_tilde, phaseless: bool | None = None
                       ) -> float:
    """Location indicator at sampling point ``z_tilde``.

    ``phaseless`` defaults to the flag carried by ``measured``.
    """
    grid = measured.grid
    pl = measured.phaseless if phaseless is None else phaseless
    test = test_function_u_ring(kappa1, z_tilde, grid.flat_points).reshape(grid.n, grid.n)
    return correlation(measured.values, test, grid.weights, pl)


@dataclass(frozen=True)
class LocationResult:
    z: np.ndarray
    value: float
    evaluations: int
    converged: bool
    message: str = ""

    def error(self, z_true) -> float:
        return float(np.linalg.norm(self.z - np.asarray(z_true, float)))


def locate(measured: FieldSamples, kappa1, region: SamplingRegion | None = None,
           initial=DEFAULT_INITIAL, phaseless: bool | None = None,
           simplex_scale: float = SIMPLEX_SCALE, xatol: float = XATOL,
           max_evaluations: int = MAX_EVALUATIONS) -> LocationResult:
    """Maximise the location indicator with bounded Nelder-Mead."""
    region = region or SamplingRegion()
    x0 = np.asarray(initial, float)
    if not region.contains(x0):
        raise ValueError(f"initial guess {x0.tolist()} lies outside the sampling region")
    grid = measured.grid
    pts, w = grid.flat_points, grid.weights.ravel()
    vals = measured.values.ravel()
    pl = measured.phaseless if phaseless is None else phaseless
    lo, hi = np.asarray(region.lo), np.asarray(region.hi)

    def objective(p):
        p = np.clip(p, lo, hi)
        if np.any(np.linalg.norm(pts - p, axis=1) == 0) or not np.any(p):
            return 1.0
        return -correlation(vals, test_function_u_ring(kappa1, p, pts), w, pl)

    # keep the starting simplex inside the box
    step = np.where(x0 + simplex_scale <= hi, simplex_scale, -simplex_scale)
    simplex = np.vstack([x0, x0 + np.diag(step)])
    res = minimize(
        objective, x0, method="Nelder-Mead", bounds=list(zip(lo, hi)),
        options={"initial_simplex": simplex, "xatol": xatol, "fatol": np.inf,
                 "maxfev": max_evaluations},
    )
    z = np.clip(res.x, lo, hi)
    return LocationResult(z, float(-res.fun), int(res.nfev), bool(res.success), str(res.message))


def indicator_shape(measured: FieldSamples, table: FarFieldTable, kappa2, z_ring,
                    phaseless: bool | None = None) -> float:
    """Shape indicator of one dictionary table at the estimated location."""
    k = _kappa(kappa2)
    if not np.isclose(table.kappa, k, rtol=1e-12):
        raise ValueError(f"table built at kappa={table.kappa}, data at kappa={k}")
    grid = measured.grid
    pl = measured.phaseless if phaseless is None else phaseless
    test = test_function_u_hat(table, k, z_ring, grid.flat_points).reshape(grid.n, grid.n)
    return correlation(measured.values, test, grid.weights, pl)


@dataclass(frozen=True)
class ShapeScores:
    values: np.ndarray
    best: int
    margin: float

    @property
    def ranking(self) -> np.ndarray:
        return np.argsort(-self.values, kind="stable")


def classify(measured: FieldSamples, tables, kappa2, z_ring, phaseless: bool | None = None
             ) -> ShapeScores:
    """Score every table; ties go to the lowest index."""
    if len(tables) == 0:
        raise ValueError("need at least one table")
    vals = np.array([indicator_shape(measured, t, kappa2, z_ring, phaseless) for t in tables])
    best = int(np.argmax(vals))  # first maximum
    rest = np.delete(vals, best)
    margin = float(vals[best] - rest.max()) if rest.size else float("inf")
    return ShapeScores(vals, best, margin)
