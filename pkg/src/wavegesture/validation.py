"""Oracle checks shared by the ``validate`` command and the acceptance tests.

Each check returns a ``CheckResult``; ``quick=True`` swaps the expensive
resolutions for cheaper ones that still exercise the same code paths.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import bem, lippmann
from .forward import MediumModel, SoftModel
from .geometry import FieldSamples, MeasurementGrid, Medium, PolycubeShape, build_dictionary
from .mesh import sphere_mesh
from .oracles import (
    MieSeries, fibonacci_sphere, low_frequency_constant, mie_far_field, relative_l2,
    verify_point_plane,
)
from .recognition import indicator_location, test_function_u_ring, trapezoid_inner

UNIT_CUBE = PolycubeShape(((0, 0, 0),), id=0, name="cube")
KAPPA_LOW = 2 * np.pi / 100
KAPPA_HIGH = 2 * np.pi


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.1f} s)"


def _timed(fn):
    def wrapper(*args, **kwargs):
        t = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def check_mie_soft(panels_per_face_edge: int = 16, n_dirs: int = 300) -> CheckResult:
    """Cube-sphere BEM vs Mie, radius 1, kappa 2 pi; threshold 5%."""
    mesh = sphere_mesh(1.0, panels_per_face_edge)
    d = np.array([0.0, 0.0, 1.0])
    xh = fibonacci_sphere(n_dirs)
    dens = bem.solve_soft_plane(mesh, KAPPA_HIGH, d)
    err = relative_l2(bem.far_field(dens, xh), mie_far_field(MieSeries(KAPPA_HIGH), d, xh))
    return CheckResult("mie_soft", err < 0.05, f"relative L2 error {err:.4f} < 0.05, {len(mesh)} panels")


@_timed
def check_mie_medium(h: float = 1 / 40, kappa: float = KAPPA_HIGH, n: float = 4.0,
                     tol: float = 0.08, n_dirs: int = 300) -> CheckResult:
    """Voxelised ball LS vs Mie, radius 1."""
    grid = lippmann.voxelize_ball(1.0, n, h)
    d = np.array([0.0, 0.0, 1.0])
    xh = fibonacci_sphere(n_dirs)
    sol = lippmann.solve_ls(grid, kappa, "plane", d)
    ref = mie_far_field(MieSeries(kappa, 1.0, Medium(n)), d, xh)
    err = relative_l2(lippmann.ls_far_field(sol, xh), ref)
    return CheckResult(
        "mie_medium", err < tol,
        f"relative L2 error {err:.4f} < {tol}, h=1/{round(1 / h)}, kappa={kappa:.4f}, {len(grid)} cells",
    )


@_timed
def check_point_plane(panels_per_edge: int = 8, radii=(25.0, 50.0, 100.0)) -> CheckResult:
    """Point-source vs plane-wave reconstruction decay, unit cube, kappa 2 pi."""
    model = SoftModel(UNIT_CUBE, KAPPA_HIGH, panels_per_edge)
    rep = verify_point_plane(model, KAPPA_HIGH, [(r, 0.0, 0.0) for r in radii])
    dec = bool(np.all(np.diff(rep.errors) < 0))
    ok = dec and -1.5 <= rep.exponent <= -0.6
    errs = ", ".join(f"{e:.4f}" for e in rep.errors)
    return CheckResult("point_plane", ok, f"E = [{errs}], exponent {rep.exponent:.3f} in [-1.5, -0.6]")


@_timed
def check_low_frequency_soft(panels_per_edge: int = 2) -> CheckResult:
    est = low_frequency_constant(SoftModel(UNIT_CUBE, KAPPA_LOW, panels_per_edge).far_field)
    rs = est.relative_spread
    return CheckResult("low_frequency_soft", rs < 0.05,
                       f"spread/|mean| {rs:.4f} < 0.05, mean {est.mean:.4f}")


@_timed
def check_low_frequency_medium(h: float = 1 / 8) -> CheckResult:
    shape = build_dictionary()[0].shape
    a = low_frequency_constant(MediumModel(shape, 4.0, KAPPA_LOW, h).far_field)
    b = low_frequency_constant(MediumModel(shape, 4.0, KAPPA_LOW / 2, h).far_field)
    alpha = 4 * np.pi * a.mean / KAPPA_LOW**2
    ratio = abs(a.mean) / abs(b.mean)
    rel = abs(alpha - 12.0) / 12.0
    ok = rel < 0.10 and abs(ratio - 4.0) <= 0.6
    return CheckResult("low_frequency_medium", ok,
                       f"4 pi w/k^2 = {alpha.real:.4f}{alpha.imag:+.4f}i (|rel err| {rel:.4f} < 0.10), "
                       f"ratio {ratio:.4f} in 4 +- 0.6")


@_timed
def check_indicator_invariants(seed: int = 0) -> CheckResult:
    grid = MeasurementGrid()
    rng = np.random.default_rng(seed)
    z = np.array([50.0, 3.0, -2.0])
    u = test_function_u_ring(KAPPA_LOW, z, grid.flat_points)
    noise = rng.normal(size=u.shape) + 1j * rng.normal(size=u.shape)
    data = FieldSamples(grid, u * (1 + 0.3 * noise))
    failures = []
    vals = [indicator_location(data, KAPPA_LOW, p) for p in rng.uniform([1, -80, -80], [99, 80, 80], (20, 3))]
    if max(vals) > 1 + 1e-9 or min(vals) < 0:
        failures.append("bound")
    c = 5 * np.exp(1j * np.pi / 3)
    for pl in (False, True):
        d0 = data.magnitude() if pl else data
        d1 = data.scaled(c).magnitude() if pl else data.scaled(c)
        if abs(indicator_location(d0, KAPPA_LOW, z) - indicator_location(d1, KAPPA_LOW, z)) > 1e-12:
            failures.append(f"scale(phaseless={pl})")
    rot = FieldSamples(grid, data.values * np.exp(2j * np.pi * rng.uniform(size=(grid.n, grid.n))))
    if abs(indicator_location(rot, KAPPA_LOW, z, phaseless=True)
           - indicator_location(data, KAPPA_LOW, z, phaseless=True)) > 1e-12:
        failures.append("phase rotation")
    exact = FieldSamples(grid, u)
    for pl in (False, True):
        if abs(indicator_location(exact, KAPPA_LOW, z, phaseless=pl) - 1) > 1e-12:
            failures.append(f"self-match(phaseless={pl})")
    ones = FieldSamples(grid, np.ones((grid.n, grid.n)))
    area = trapezoid_inner(ones, ones)
    if abs(area - 400) > 1e-9:
        failures.append("trapezoid")
    return CheckResult("indicator_invariants", not failures,
                       "all hold" if not failures else "failed: " + ", ".join(failures))


def run_all(quick: bool = True) -> list[CheckResult]:
    checks = [
        lambda: check_mie_soft(12 if quick else 16),
        (lambda: check_mie_medium(1 / 16, np.pi)) if quick else (lambda: check_mie_medium()),
        lambda: check_point_plane(4 if quick else 8),
        check_low_frequency_soft,
        lambda: check_low_frequency_medium(1 / 4 if quick else 1 / 8),
        check_indicator_invariants,
    ]
    out = []
    for c in checks:
        try:
            out.append(c())
        except Exception as exc:  # report, keep going
            out.append(CheckResult(getattr(c, "__name__", "check"), False, f"error: {exc}"))
    return out
