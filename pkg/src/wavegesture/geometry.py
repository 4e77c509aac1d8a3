"""Scatterer geometry, measurement surface and the free-space Green's function.

Shapes are unions of axis-aligned unit cubes ("polycubes").  A shape is stored
as integer lattice offsets and is shifted so that the mean of its cube centres
sits at the origin; all solvers work in that centred frame and a scatterer
``Omega = D + z`` carries its translation separately.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

DICTIONARY_FORMAT = "wavegesture-dictionary"
DICTIONARY_VERSION = 1

_FACE_NEIGHBOURS = np.array(
    [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]]
)


@dataclass(frozen=True)
class WaveNumber:
    kappa: float

    def __post_init__(self):
        if not np.isfinite(self.kappa) or self.kappa <= 0:
            raise ValueError(f"wavenumber must be positive, got {self.kappa}")

    @property
    def wavelength(self) -> float:
        return 2 * np.pi / self.kappa

    @classmethod
    def from_wavelength(cls, wavelength: float) -> "WaveNumber":
        return cls(2 * np.pi / wavelength)


def _kappa(kappa) -> float:
    k = float(kappa.kappa if isinstance(kappa, WaveNumber) else kappa)
    if not np.isfinite(k) or k <= 0:
        raise ValueError(f"wavenumber must be positive, got {k}")
    return k


def fundamental_solution(kappa, x, y):
    """Outgoing Helmholtz Green's function ``exp(i k r) / (4 pi r)``.

    ``x`` and ``y`` broadcast against each other along leading axes; the last
    axis holds coordinates.
    """
    k = _kappa(kappa)
    r = np.linalg.norm(np.asarray(x, float) - np.asarray(y, float), axis=-1)
    if np.any(r == 0):
        raise ValueError("fundamental solution is singular at coincident points")
    return np.exp(1j * k * r) / (4 * np.pi * r)


def plane_wave(kappa, d, x):
    """``exp(i k d.x)`` for a unit propagation direction ``d``."""
    k = _kappa(kappa)
    d = np.asarray(d, float)
    if abs(np.linalg.norm(d) - 1.0) > 1e-12:
        raise ValueError("plane-wave direction must be a unit vector")
    return np.exp(1j * k * (np.asarray(x, float) @ d))


def _face_connected(cubes: np.ndarray) -> bool:
    lookup = {tuple(c) for c in cubes}
    seen = {tuple(cubes[0])}
    queue = deque([tuple(cubes[0])])
    while queue:
        c = np.array(queue.popleft())
        for step in _FACE_NEIGHBOURS:
            nb = tuple(c + step)
            if nb in lookup and nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return len(seen) == len(lookup)


@dataclass(frozen=True)
class PolycubeShape:
    """Face-connected union of unit cubes, identified by ``id``.

    Cube ``c`` occupies ``c + [0, 1]^3 - offset`` where ``offset`` puts the
    mean cube centre at the origin.
    """

    cubes: tuple
    id: int = 0
    name: str = ""

    def __post_init__(self):
        cubes = tuple(tuple(int(v) for v in c) for c in self.cubes)
        if not cubes:
            raise ValueError("a shape needs at least one cube")
        if any(len(c) != 3 for c in cubes):
            raise ValueError("cube offsets must be integer 3-vectors")
        if len(set(cubes)) != len(cubes):
            raise ValueError("cube offsets must be pairwise distinct")
        if not _face_connected(np.array(cubes)):
            raise ValueError("cube union must be face-connected")
        object.__setattr__(self, "cubes", cubes)

    @property
    def lattice(self) -> np.ndarray:
        return np.array(self.cubes, dtype=int)

    @property
    def offset(self) -> np.ndarray:
        return self.lattice.mean(axis=0) + 0.5

    @property
    def lower_corners(self) -> np.ndarray:
        """Lower corner of every cube in the centred frame, shape (K, 3)."""
        return self.lattice - self.offset

    @property
    def volume(self) -> float:
        return float(len(self.cubes))

    @property
    def radius(self) -> float:
        """``max |x|`` over the shape (attained at a cube corner)."""
        corners = self.lower_corners[:, None, :] + np.array(
            [[i, j, k] for i in (0, 1) for j in (0, 1) for k in (0, 1)]
        )
        return float(np.linalg.norm(corners, axis=-1).max())

    def exterior_face_count(self) -> int:
        lookup = set(self.cubes)
        count = 0
        for c in self.lattice:
            for step in _FACE_NEIGHBOURS:
                if tuple(c + step) not in lookup:
                    count += 1
        return count

    def contains(self, points, tol: float = 1e-12) -> np.ndarray:
        """True for points inside or on the closed cube union."""
        p = np.atleast_2d(np.asarray(points, float))
        lo = self.lower_corners
        inside = np.zeros(p.shape[0], dtype=bool)
        for c in lo:
            inside |= np.all((p >= c - tol) & (p <= c + 1 + tol), axis=1)
        return inside

    def exterior_surface(self, panels_per_edge: int):
        from .mesh import polycube_mesh

        return polycube_mesh(self, panels_per_edge)


@dataclass(frozen=True)
class SoundSoft:
    kind = "soft"


@dataclass(frozen=True)
class Medium:
    n: float = 4.0
    kind = "medium"

    def __post_init__(self):
        if not np.isfinite(self.n) or self.n <= 0 or self.n == 1.0:
            raise ValueError("refractive index must be positive and different from 1")

    @property
    def contrast(self) -> float:
        return self.n - 1.0


@dataclass(frozen=True)
class Scatterer:
    shape: PolycubeShape
    physics: SoundSoft | Medium = field(default_factory=SoundSoft)
    translation: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        z = tuple(float(v) for v in self.translation)
        if len(z) != 3:
            raise ValueError("translation must be a 3-vector")
        object.__setattr__(self, "translation", z)

    @property
    def z(self) -> np.ndarray:
        return np.array(self.translation)

    def translated(self, z) -> "Scatterer":
        return Scatterer(self.shape, self.physics, tuple(np.asarray(z, float)))

    def contains(self, points, tol: float = 1e-12) -> np.ndarray:
        return self.shape.contains(np.asarray(points, float) - self.z, tol)


@dataclass(frozen=True)
class Dictionary:
    entries: tuple

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise ValueError("dictionary must hold at least one shape")
        cube_sets = [frozenset(e.shape.cubes) for e in entries]
        if len(set(cube_sets)) != len(cube_sets):
            raise ValueError("dictionary shapes must be pairwise distinct")
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i) -> Scatterer:
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    @property
    def shapes(self) -> list[PolycubeShape]:
        return [e.shape for e in self.entries]

    def with_physics(self, physics: Sequence) -> "Dictionary":
        if len(physics) != len(self):
            raise ValueError("need one physics entry per shape")
        return Dictionary(tuple(Scatterer(e.shape, p) for e, p in zip(self, physics)))


# Six tetracubes.  D1-D5 lie in the x2x3-plane facing the aperture, D6 is the
# 3-D corner piece that also extends in depth.
BUILTIN_SHAPES = (
    ("I", ((0, 0, 0), (0, 1, 0), (0, 2, 0), (0, 3, 0))),
    ("L", ((0, 0, 0), (0, 1, 0), (0, 2, 0), (0, 0, 1))),
    ("T", ((0, 0, 0), (0, 1, 0), (0, 2, 0), (0, 1, 1))),
    ("S", ((0, 0, 0), (0, 1, 0), (0, 1, 1), (0, 2, 1))),
    ("O", ((0, 0, 0), (0, 1, 0), (0, 0, 1), (0, 1, 1))),
    ("corner", ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1))),
)


def build_dictionary(physics=None) -> Dictionary:
    """The six built-in four-cube shapes, ids 1..6, sound-soft by default."""
    physics = physics or [SoundSoft()] * len(BUILTIN_SHAPES)
    shapes = [
        PolycubeShape(cubes, id=i + 1, name=name)
        for i, (name, cubes) in enumerate(BUILTIN_SHAPES)
    ]
    return Dictionary(tuple(Scatterer(s, p) for s, p in zip(shapes, physics)))


def save_dictionary(dictionary: Dictionary, path) -> None:
    doc = {
        "format": DICTIONARY_FORMAT,
        "version": DICTIONARY_VERSION,
        "shapes": [
            {"id": s.id, "name": s.name, "cubes": [list(c) for c in s.cubes]}
            for s in dictionary.shapes
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_dictionary(path, physics=None) -> Dictionary:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dictionary file not found: {path}")
    doc = json.loads(path.read_text())
    if doc.get("format") != DICTIONARY_FORMAT:
        raise ValueError(f"{path}: not a {DICTIONARY_FORMAT} file")
    if doc.get("version") != DICTIONARY_VERSION:
        raise ValueError(f"{path}: unsupported dictionary version {doc.get('version')}")
    shapes = [
        PolycubeShape(tuple(map(tuple, s["cubes"])), id=int(s["id"]), name=s.get("name", ""))
        for s in doc["shapes"]
    ]
    physics = physics or [SoundSoft()] * len(shapes)
    if len(physics) != len(shapes):
        raise ValueError("need one physics entry per shape")
    return Dictionary(tuple(Scatterer(s, p) for s, p in zip(shapes, physics)))


@dataclass(frozen=True)
class MeasurementGrid:
    """Square aperture in the plane ``x1 = 0``, centred at the origin.

    Nodes are endpoint-inclusive; ``points[i, j] = (0, y_i, y_j)``.
    """

    side: float = 20.0
    n: int = 32

    def __post_init__(self):
        if self.side <= 0 or self.n < 2:
            raise ValueError("grid needs positive side and at least 2 nodes per side")

    @property
    def spacing(self) -> float:
        return self.side / (self.n - 1)

    @property
    def axis(self) -> np.ndarray:
        return -self.side / 2 + self.spacing * np.arange(self.n)

    @property
    def points(self) -> np.ndarray:
        y2, y3 = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.stack([np.zeros_like(y2), y2, y3], axis=-1)

    @property
    def flat_points(self) -> np.ndarray:
        return self.points.reshape(-1, 3)

    @property
    def weights(self) -> np.ndarray:
        """Composite trapezoid weights (n, n) including ``h^2``."""
        w = np.ones(self.n)
        w[0] = w[-1] = 0.5
        return np.outer(w, w) * self.spacing**2


@dataclass(frozen=True, eq=False)
class FieldSamples:
    grid: MeasurementGrid
    values: np.ndarray
    phaseless: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape == (self.grid.n * self.grid.n,):
            v = v.reshape(self.grid.n, self.grid.n)
        if v.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"values shape {v.shape} does not match grid n={self.grid.n}")
        if self.phaseless and (np.any(v.imag != 0) or np.any(v.real < 0)):
            raise ValueError("phaseless samples must be nonnegative reals")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def magnitude(self) -> "FieldSamples":
        return FieldSamples(self.grid, np.abs(self.values), phaseless=True)

    def scaled(self, c) -> "FieldSamples":
        return FieldSamples(self.grid, self.values * c, self.phaseless)


@dataclass(frozen=True)
class SamplingRegion:
    lo: tuple = (0.0, -100.0, -100.0)
    hi: tuple = (100.0, 100.0, 100.0)

    def __post_init__(self):
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        if lo.shape != (3,) or hi.shape != (3,) or np.any(hi <= lo):
            raise ValueError("sampling region needs lo < hi componentwise")
        if lo[0] < 0:
            raise ValueError("sampling region must lie in the half-space x1 >= 0")
        object.__setattr__(self, "lo", tuple(lo))
        object.__setattr__(self, "hi", tuple(hi))

    def contains(self, p) -> bool:
        p = np.asarray(p, float)
        return bool(np.all(p >= self.lo) and np.all(p <= self.hi))

    def project(self, p) -> np.ndarray:
        return np.clip(np.asarray(p, float), self.lo, self.hi)
