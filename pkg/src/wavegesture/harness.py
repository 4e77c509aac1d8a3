"""Experiment orchestration: configuration, synthetic data, noise, tables.

Output tables are written as CSV and Markdown with fixed number formatting,
so identical configs give byte-identical files.  Timing and optimiser
metadata go to a separate JSON file next to them.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import recognition
from .forward import make_model
from .geometry import (
    FieldSamples, MeasurementGrid, Medium, SamplingRegion, SoundSoft, build_dictionary,
    load_dictionary,
)
from .tables import AngleMesh, build_table, load_table, save_table

log = logging.getLogger(__name__)

CONFIG_FORMAT = "wavegesture-experiment"
CONFIG_VERSION = 1


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def parse_physics(spec: str):
    """``"soft"`` or ``"medium:<n>"``."""
    s = str(spec).strip().lower()
    if s == "soft":
        return SoundSoft()
    if s.startswith("medium"):
        _, _, n = s.partition(":")
        try:
            return Medium(float(n) if n else 4.0)
        except ValueError as exc:
            raise ConfigError(f"bad medium spec {spec!r}: {exc}") from None
    raise ConfigError(f"unknown physics {spec!r} (use 'soft' or 'medium:<n>')")


def physics_label(p) -> str:
    return "soft" if isinstance(p, SoundSoft) else f"medium:{p.n:g}"


PHYSICS_PRESETS = {
    "soft": ("soft",) * 6,
    "medium": ("medium:4",) * 6,
    "mixed": ("soft",) * 3 + ("medium:4",) * 3,
}

# field name -> (unit, comment) for the generated reference config
_DOC = {
    "dictionary": ("path", "shape file; null selects the six built-in shapes"),
    "physics": ("-", "one entry per shape: soft | medium:<n>"),
    "kappa1": ("1/length", "location wavenumber, 2*pi/100 (wavelength 100)"),
    "kappa2": ("1/length", "shape wavenumber, 2*pi (wavelength 1)"),
    "z0": ("length", "true scatterer location"),
    "grid_side": ("length", "side of the square aperture in the x2x3-plane"),
    "grid_n": ("count", "samples per side, endpoint inclusive"),
    "region_lo": ("length", "sampling region lower corner"),
    "region_hi": ("length", "sampling region upper corner"),
    "initial": ("length", "optimiser starting point"),
    "cap_half_angle": ("degree", "half-width of the incident/observation caps"),
    "cap_count": ("count", "table nodes per angle inside a cap"),
    "full_range_tables": ("bool", "use full hemispherical meshes instead of caps"),
    "full_count": ("count", "nodes per angle for full-range meshes"),
    "phaseless": ("bool", "use magnitude-only data"),
    "phaseless_location": ("bool", "override for the location stage; null follows phaseless"),
    "noise_level": ("fraction", "relative uniform noise amplitude"),
    "noise_phased": ("bool", "allow noise on phased data"),
    "seed": ("int", "RNG seed; required when noise_level > 0"),
    "panels_low": ("count", "sound-soft panels per unit edge at kappa1"),
    "panels_high": ("count", "sound-soft panels per unit edge at kappa2"),
    "cell_low": ("length", "medium voxel size at kappa1"),
    "cell_high": ("length", "medium voxel size at kappa2"),
    "simplex_scale": ("length", "Nelder-Mead initial simplex edge"),
    "xatol": ("length", "Nelder-Mead simplex-size stopping tolerance"),
    "max_evaluations": ("count", "Nelder-Mead evaluation budget"),
    "output_dir": ("path", "where tables are written"),
    "cache_dir": ("path", "far-field table cache; null disables caching"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    dictionary: str | None = None
    physics: tuple = PHYSICS_PRESETS["soft"]
    kappa1: float = 2 * np.pi / 100
    kappa2: float = 2 * np.pi
    z0: tuple = (50.0, 0.0, 0.0)
    grid_side: float = 20.0
    grid_n: int = 32
    region_lo: tuple = (0.0, -100.0, -100.0)
    region_hi: tuple = (100.0, 100.0, 100.0)
    initial: tuple = recognition.DEFAULT_INITIAL
    cap_half_angle: float = 25.0
    cap_count: int = 31
    full_range_tables: bool = False
    full_count: int = 180
    phaseless: bool = False
    phaseless_location: bool | None = None
    noise_level: float = 0.0
    noise_phased: bool = False
    seed: int | None = 0
    panels_low: int = 2
    panels_high: int = 8
    cell_low: float = 1 / 4
    cell_high: float = 1 / 8
    simplex_scale: float = recognition.SIMPLEX_SCALE
    xatol: float = recognition.XATOL
    max_evaluations: int = recognition.MAX_EVALUATIONS
    output_dir: str = "results"
    cache_dir: str | None = "results/cache"

    def __post_init__(self):
        for name in ("z0", "region_lo", "region_hi", "initial"):
            v = tuple(float(x) for x in getattr(self, name))
            if len(v) != 3:
                raise ConfigError(f"{name} must have 3 components")
            object.__setattr__(self, name, v)
        phys = self.physics
        if isinstance(phys, str):
            if phys not in PHYSICS_PRESETS:
                raise ConfigError(f"unknown physics preset {phys!r}")
            phys = PHYSICS_PRESETS[phys]
        phys = tuple(physics_label(parse_physics(p)) for p in phys)
        object.__setattr__(self, "physics", phys)
        if self.kappa1 <= 0 or self.kappa2 <= 0:
            raise ConfigError("wavenumbers must be positive")
        if self.noise_level < 0:
            raise ConfigError("noise_level must be nonnegative")
        if self.noise_level > 0 and self.seed is None:
            raise ConfigError("seed is mandatory when noise_level > 0")
        if self.grid_n < 2 or self.grid_side <= 0:
            raise ConfigError("grid needs side > 0 and at least 2 samples per side")
        if not 0 < self.cap_half_angle < 90 or self.cap_count < 2 or self.full_count < 2:
            raise ConfigError("bad angular mesh settings")
        try:
            region = self.region
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not region.contains(self.initial):
            raise ConfigError("initial guess lies outside the sampling region")

    # derived objects
    @property
    def grid(self) -> MeasurementGrid:
        return MeasurementGrid(self.grid_side, self.grid_n)

    @property
    def region(self) -> SamplingRegion:
        return SamplingRegion(self.region_lo, self.region_hi)

    @property
    def location_phaseless(self) -> bool:
        return self.phaseless if self.phaseless_location is None else self.phaseless_location

    def meshes(self) -> tuple[AngleMesh, AngleMesh]:
        if self.full_range_tables:
            return AngleMesh.full_incident(self.full_count), AngleMesh.full_observation(self.full_count)
        return (AngleMesh.cap("+x", self.cap_half_angle, self.cap_count),
                AngleMesh.cap("-x", self.cap_half_angle, self.cap_count))

    def load_dictionary(self):
        phys = [parse_physics(p) for p in self.physics]
        if self.dictionary is None:
            if len(phys) != 6:
                raise ConfigError("built-in dictionary needs 6 physics entries")
            return build_dictionary(phys)
        try:
            return load_dictionary(self.dictionary, phys)
        except FileNotFoundError as exc:
            raise ConfigError(str(exc)) from None
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"{self.dictionary}: {exc}") from None

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    # serialisation
    def to_dict(self) -> dict:
        d = {"format": CONFIG_FORMAT, "version": CONFIG_VERSION}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            d[f.name] = list(v) if isinstance(v, tuple) else v
        return d

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a mapping")
        doc = dict(doc)
        if doc.pop("format", CONFIG_FORMAT) != CONFIG_FORMAT:
            raise ConfigError("not a wavegesture experiment config")
        if doc.pop("version", CONFIG_VERSION) != CONFIG_VERSION:
            raise ConfigError("unsupported config version")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for k, v in doc.items():
            if isinstance(v, list):
                doc[k] = tuple(v)
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_yaml(self, comments: bool = True) -> str:
        d = self.to_dict()
        out = io.StringIO()
        out.write("# wavegesture experiment configuration\n")
        for key, value in d.items():
            if comments and key in _DOC:
                unit, text = _DOC[key]
                out.write(f"# {text} [{unit}]\n")
            text = yaml.safe_dump([value], default_flow_style=True, width=10**6).strip()
            out.write(f"{key}: {text[1:-1]}\n")
        return out.getvalue()

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config is not valid YAML: {exc}") from None
        return cls.from_dict(doc or {})

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        return cls.from_yaml(p.read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_yaml())


def reference_config() -> str:
    """Every knob with its default, unit and meaning."""
    return ExperimentConfig().to_yaml(comments=True)


@dataclass(frozen=True)
class NoiseModel:
    level: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("noise level must be nonnegative")

    def rng(self, *stream):
        """Independent generator per (row, stage, ...) stream."""
        return np.random.default_rng([int(self.seed), *map(int, stream)])

    def draw(self, shape, *stream) -> np.ndarray:
        return self.rng(*stream).uniform(-1.0, 1.0, size=shape)


def add_noise(samples: FieldSamples, model: NoiseModel, stream=(), allow_phased: bool = False
              ) -> FieldSamples:
    """``v -> v (1 + level rho)``, ``rho ~ U[-1, 1]``; magnitudes clamped at 0."""
    if model.level == 0:
        return samples
    if not samples.phaseless and not allow_phased:
        raise ValueError("noise is applied to phaseless data; set allow_phased for phased data")
    rho = model.draw(samples.values.shape, *stream)
    v = samples.values * (1.0 + model.level * rho)
    if samples.phaseless:
        v = np.maximum(v.real, 0.0)
    return FieldSamples(samples.grid, v, samples.phaseless)


STAGE_LOCATION, STAGE_SHAPE = 0, 1


class Experiment:
    """Holds the dictionary plus cached forward models and far-field tables."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.dictionary = config.load_dictionary()
        self._models = {}
        self._tables = {}

    def model(self, index: int, stage: int):
        key = (index, stage)
        if key not in self._models:
            cfg, entry = self.config, self.dictionary[index]
            if stage == STAGE_LOCATION:
                kappa, panels, cell = cfg.kappa1, cfg.panels_low, cfg.cell_low
            else:
                kappa, panels, cell = cfg.kappa2, cfg.panels_high, cfg.cell_high
            self._models[key] = make_model(entry.shape, entry.physics, kappa, panels, cell)
        return self._models[key]

    def _table_key(self, index: int) -> str:
        cfg, entry = self.config, self.dictionary[index]
        inc, obs = cfg.meshes()
        ident = json.dumps([
            sorted(entry.shape.cubes), physics_label(entry.physics), repr(cfg.kappa2),
            cfg.panels_high, repr(cfg.cell_high), repr(inc), repr(obs),
        ])
        return hashlib.sha256(ident.encode()).hexdigest()[:16]

    def table(self, index: int):
        if index in self._tables:
            return self._tables[index]
        cfg = self.config
        path = None
        if cfg.cache_dir is not None:
            path = Path(cfg.cache_dir) / f"shape{index + 1}_{self._table_key(index)}.wgff"
            if path.is_file():
                try:
                    self._tables[index] = load_table(path)
                    return self._tables[index]
                except ValueError as exc:
                    log.warning("ignoring unreadable cache %s: %s", path, exc)
        inc, obs = cfg.meshes()
        entry = self.dictionary[index]
        tab = build_table(self.model(index, STAGE_SHAPE), inc, obs, entry.shape.id, entry.physics)
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            save_table(tab, path)
        self._tables[index] = tab
        return tab

    def tables(self) -> list:
        return [self.table(i) for i in range(len(self.dictionary))]

    def measurement(self, index: int, stage: int, noisy: bool = True) -> FieldSamples:
        cfg = self.config
        grid = cfg.grid
        u = self.model(index, stage).point_field(np.asarray(cfg.z0), grid.flat_points)
        s = FieldSamples(grid, u)
        pl = cfg.location_phaseless if stage == STAGE_LOCATION else cfg.phaseless
        if pl:
            s = s.magnitude()
        if noisy and cfg.noise_level > 0:
            s = add_noise(s, NoiseModel(cfg.noise_level, cfg.seed), (index, stage),
                          allow_phased=cfg.noise_phased)
        return s

    def locate(self, index: int) -> recognition.LocationResult:
        cfg = self.config
        return recognition.locate(
            self.measurement(index, STAGE_LOCATION), cfg.kappa1, cfg.region, cfg.initial,
            simplex_scale=cfg.simplex_scale, xatol=cfg.xatol,
            max_evaluations=cfg.max_evaluations,
        )

    def classify(self, index: int, z_ring) -> recognition.ShapeScores:
        return recognition.classify(
            self.measurement(index, STAGE_SHAPE), self.tables(), self.config.kappa2, z_ring
        )


def simulate_measurement(config: ExperimentConfig, true_shape_index: int, stage: str = "shape",
                         experiment: Experiment | None = None) -> FieldSamples:
    """Noise-free data on the aperture (phaseless reduction applied if configured)."""
    exp = experiment or Experiment(config)
    st = {"location": STAGE_LOCATION, "shape": STAGE_SHAPE}[stage]
    return exp.measurement(true_shape_index, st, noisy=False)


@dataclass
class LocationRow:
    index: int
    name: str
    physics: str
    result: recognition.LocationResult | None = None
    error: float = float("nan")
    failure: str = ""


@dataclass
class LocationTable:
    config: ExperimentConfig
    rows: list
    wall_time: float = 0.0

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.error for r in self.rows])

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["shape", "name", "physics", "z1", "z2", "z3", "distance", "indicator",
                    "evaluations", "converged", "status"])
        for r in self.rows:
            if r.result is None:
                w.writerow([f"D{r.index + 1}", r.name, r.physics, "", "", "", "", "", "", "",
                            r.failure])
                continue
            z = r.result.z
            w.writerow([f"D{r.index + 1}", r.name, r.physics, *(f"{v:.4f}" for v in z),
                        f"{r.error:.4f}", f"{r.result.value:.6f}", r.result.evaluations,
                        str(r.result.converged).lower(), "ok"])
        return out.getvalue()

    def to_markdown(self) -> str:
        lines = ["| shape | z1 | z2 | z3 | distance |", "|---|---|---|---|---|"]
        for r in self.rows:
            if r.result is None:
                lines.append(f"| D{r.index + 1} | failed: {r.failure} | | | |")
            else:
                z = r.result.z
                lines.append(f"| D{r.index + 1} | {z[0]:.4f} | {z[1]:.4f} | {z[2]:.4f} "
                             f"| {r.error:.4f} |")
        return "\n".join(lines) + "\n"


def run_location_table(config: ExperimentConfig, experiment: Experiment | None = None
                       ) -> LocationTable:
    exp = experiment or Experiment(config)
    t0 = time.perf_counter()
    rows = []
    for i, entry in enumerate(exp.dictionary):
        row = LocationRow(i, entry.shape.name, physics_label(entry.physics))
        try:
            row.result = exp.locate(i)
            row.error = row.result.error(config.z0)
        except Exception as exc:  # recorded per row, run continues
            log.exception("location row %d failed", i + 1)
            row.failure = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return LocationTable(config, rows, time.perf_counter() - t0)


@dataclass
class ConfusionMatrix:
    config: ExperimentConfig
    names: list
    values: np.ndarray  # row: true shape, column: trial shape
    locations: list
    failures: dict = field(default_factory=dict)
    wall_time: float = 0.0
    recognition_times: list = field(default_factory=list)

    @property
    def argmax(self) -> np.ndarray:
        v = np.where(np.isnan(self.values), -np.inf, self.values)
        return np.argmax(v, axis=1)

    def diagonal_maximal(self) -> np.ndarray:
        """Row-wise strict maximality of the diagonal."""
        ok = []
        for i, row in enumerate(self.values):
            others = np.delete(row, i)
            ok.append(bool(np.all(np.isfinite(row)) and np.all(row[i] > others)))
        return np.array(ok)

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        n = len(self.names)
        w.writerow(["true\\trial", *(f"D{j + 1}" for j in range(n)), "argmax", "correct"])
        ok = self.diagonal_maximal()
        for i, row in enumerate(self.values):
            w.writerow([f"D{i + 1}", *(f"{v:.6f}" for v in row), f"D{self.argmax[i] + 1}",
                        str(bool(ok[i])).lower()])
        return out.getvalue()

    def to_markdown(self) -> str:
        n = len(self.names)
        head = "| true \\ trial | " + " | ".join(f"D{j + 1}" for j in range(n)) + " |"
        lines = [head, "|" + "---|" * (n + 1)]
        ok = self.diagonal_maximal()
        for i, row in enumerate(self.values):
            best = self.argmax[i]
            cells = [f"**{v:.4f}**" if j == best else f"{v:.4f}" for j, v in enumerate(row)]
            flag = "" if ok[i] else " (diagonal not maximal)"
            lines.append(f"| D{i + 1}{flag} | " + " | ".join(cells) + " |")
        lines.append("")
        lines.append(f"correct rows: {int(ok.sum())}/{n}")
        return "\n".join(lines) + "\n"


def run_confusion_matrix(config: ExperimentConfig, experiment: Experiment | None = None
                         ) -> ConfusionMatrix:
    exp = experiment or Experiment(config)
    t0 = time.perf_counter()
    n = len(exp.dictionary)
    exp.tables()  # precomputation, excluded from recognition times
    values = np.full((n, n), np.nan)
    locations, failures, times = [], {}, []
    for i in range(n):
        try:
            m1 = exp.measurement(i, STAGE_LOCATION)
            m2 = exp.measurement(i, STAGE_SHAPE)
            t1 = time.perf_counter()
            loc = recognition.locate(
                m1, config.kappa1, config.region, config.initial,
                simplex_scale=config.simplex_scale, xatol=config.xatol,
                max_evaluations=config.max_evaluations,
            )
            scores = recognition.classify(m2, exp.tables(), config.kappa2, loc.z)
            times.append(time.perf_counter() - t1)
            values[i] = scores.values
            locations.append(loc)
        except Exception as exc:
            log.exception("confusion row %d failed", i + 1)
            failures[i] = f"{type(exc).__name__}: {exc}"
            locations.append(None)
    names = [e.shape.name for e in exp.dictionary]
    return ConfusionMatrix(config, names, values, locations, failures,
                           time.perf_counter() - t0, times)


# table number -> (kind, physics preset, phaseless, noise level)
TABLE_PRESETS = {
    1: ("location", "soft", False, 0.0),
    2: ("confusion", "soft", False, 0.0),
    3: ("location", "soft", True, 0.0),
    4: ("confusion", "soft", True, 0.0),
    5: ("confusion", "soft", True, 0.05),
    6: ("confusion", "medium", True, 0.05),
    7: ("confusion", "mixed", True, 0.05),
}


def table_config(number: int, base: ExperimentConfig | None = None) -> ExperimentConfig:
    if number not in TABLE_PRESETS:
        raise ConfigError(f"table must be one of {sorted(TABLE_PRESETS)}")
    _, preset, phaseless, noise = TABLE_PRESETS[number]
    base = base or ExperimentConfig()
    return base.replace(physics=PHYSICS_PRESETS[preset], phaseless=phaseless, noise_level=noise)


def reproduce_table(number: int, base: ExperimentConfig | None = None,
                    out_dir=None) -> tuple[object, dict]:
    """Run results table ``number``; writes ``table<N>.csv``, ``.md`` and ``.meta.json``."""
    cfg = table_config(number, base)
    kind = TABLE_PRESETS[number][0]
    result = run_location_table(cfg) if kind == "location" else run_confusion_matrix(cfg)
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = out / f"table{number}"
    Path(f"{stem}.csv").write_text(result.to_csv())
    Path(f"{stem}.md").write_text(result.to_markdown())
    inc, obs = cfg.meshes()
    meta = {
        "table": number,
        "kind": kind,
        "config": cfg.to_dict(),
        "wall_time_s": result.wall_time,
        "optimizer": {"method": "Nelder-Mead (scipy), bounded", "simplex_scale": cfg.simplex_scale,
                      "xatol": cfg.xatol, "max_evaluations": cfg.max_evaluations},
        "angle_meshes": {"incident": dataclasses.asdict(inc), "observation": dataclasses.asdict(obs),
                         "note": "caps instead of full 180x180 meshes" if not cfg.full_range_tables
                         else "full range"},
    }
    if kind == "confusion":
        meta["recognition_time_s"] = result.recognition_times
        meta["diagonal_maximal"] = result.diagonal_maximal().tolist()
        meta["failures"] = {str(k + 1): v for k, v in result.failures.items()}
    else:
        meta["failures"] = {f"D{r.index + 1}": r.failure for r in result.rows if r.failure}
    Path(f"{stem}.meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return result, meta
