"""Precomputed far-field tables and their bilinear interpolation.

A table holds ``w_inf(D, zhat_jk; xhat_mn)`` on a uniform (theta, phi) mesh
of incident directions times a uniform mesh of observation directions, with
``zhat = (sin t cos p, sin t sin p, cos t)``.

Binary layout (little-endian): a 128-byte header

    magic "WGFF" | u32 version | i32 shape id | u32 physics (0 soft, 1 medium)
    f64 kappa | f64 refractive index (0 for soft)
    8 x f64 angle ranges (incident t_lo t_hi p_lo p_hi, observation ...)
    4 x u32 counts (incident n_t n_p, observation n_t n_p) | 16 reserved bytes

followed by the complex tensor as interleaved f64 (re, im), C order
(theta_in, phi_in, theta_obs, phi_obs).
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import Medium, SoundSoft, _kappa

MAGIC = b"WGFF"
VERSION = 1
_HEADER = struct.Struct("<4sIiIdd8d4I16x")
HEADER_SIZE = _HEADER.size
_ANGLE_TOL = 1e-9


@dataclass(frozen=True)
class AngleMesh:
    theta_lo: float
    theta_hi: float
    phi_lo: float
    phi_hi: float
    n_theta: int
    n_phi: int

    def __post_init__(self):
        if not (0 <= self.theta_lo < self.theta_hi <= np.pi + 1e-12):
            raise ValueError("need 0 <= theta_lo < theta_hi <= pi")
        if not (self.phi_lo < self.phi_hi and self.phi_hi - self.phi_lo <= 2 * np.pi + 1e-12):
            raise ValueError("need phi_lo < phi_hi within a 2*pi window")
        if self.n_theta < 2 or self.n_phi < 2:
            raise ValueError("angle mesh needs at least 2 nodes per axis")

    @classmethod
    def cap(cls, axis: str, half_angle_deg: float = 25.0, count: int = 31) -> "AngleMesh":
        """(theta, phi) box of half-width ``half_angle`` about +x or -x."""
        a = np.deg2rad(half_angle_deg)
        centre_phi = {"+x": 0.0, "-x": np.pi}[axis]
        return cls(np.pi / 2 - a, np.pi / 2 + a, centre_phi - a, centre_phi + a, count, count)

    @classmethod
    def full_incident(cls, count: int = 180) -> "AngleMesh":
        return cls(0.0, np.pi, -np.pi / 2, np.pi / 2, count, count)

    @classmethod
    def full_observation(cls, count: int = 180) -> "AngleMesh":
        return cls(0.0, np.pi, np.pi / 2, 3 * np.pi / 2, count, count)

    @property
    def thetas(self) -> np.ndarray:
        return np.linspace(self.theta_lo, self.theta_hi, self.n_theta)

    @property
    def phis(self) -> np.ndarray:
        return np.linspace(self.phi_lo, self.phi_hi, self.n_phi)

    @property
    def shape(self) -> tuple:
        return (self.n_theta, self.n_phi)

    def directions(self) -> np.ndarray:
        t, p = np.meshgrid(self.thetas, self.phis, indexing="ij")
        return spherical_to_unit(t, p)

    def angles(self, v) -> tuple[np.ndarray, np.ndarray]:
        """(theta, phi) of unit vectors, phi unwrapped into this mesh's window."""
        v = np.atleast_2d(np.asarray(v, float))
        theta = np.arccos(np.clip(v[:, 2], -1.0, 1.0))
        phi = np.arctan2(v[:, 1], v[:, 0])
        phi = self.phi_lo + np.mod(phi - self.phi_lo + _ANGLE_TOL, 2 * np.pi) - _ANGLE_TOL
        return theta, phi

    def bilinear(self, v):
        """Corner indices and weights of the bilinear stencil for each vector."""
        theta, phi = self.angles(v)
        bad = (
            (theta < self.theta_lo - _ANGLE_TOL) | (theta > self.theta_hi + _ANGLE_TOL)
            | (phi < self.phi_lo - _ANGLE_TOL) | (phi > self.phi_hi + _ANGLE_TOL)
        )
        if np.any(bad):
            k = int(np.argmax(bad))
            raise ValueError(
                f"direction at (theta={theta[k]:.6f}, phi={phi[k]:.6f}) outside the table mesh"
            )
        u = (theta - self.theta_lo) / (self.theta_hi - self.theta_lo) * (self.n_theta - 1)
        w = (phi - self.phi_lo) / (self.phi_hi - self.phi_lo) * (self.n_phi - 1)
        i = np.clip(np.floor(u).astype(int), 0, self.n_theta - 2)
        j = np.clip(np.floor(w).astype(int), 0, self.n_phi - 2)
        fu = np.clip(u - i, 0.0, 1.0)
        fw = np.clip(w - j, 0.0, 1.0)
        return i, j, fu, fw

    def descriptor(self) -> tuple:
        return (self.theta_lo, self.theta_hi, self.phi_lo, self.phi_hi), (self.n_theta, self.n_phi)


def spherical_to_unit(theta, phi) -> np.ndarray:
    theta, phi = np.asarray(theta, float), np.asarray(phi, float)
    return np.stack(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1
    )


@dataclass(frozen=True, eq=False)
class FarFieldTable:
    shape_id: int
    kappa: float
    incident: AngleMesh
    observation: AngleMesh
    values: np.ndarray
    physics: SoundSoft | Medium = SoundSoft()

    def __post_init__(self):
        expected = self.incident.shape + self.observation.shape
        if self.values.shape != expected:
            raise ValueError(f"table values {self.values.shape} do not match meshes {expected}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("table contains non-finite entries")


def build_table(model, incident: AngleMesh, observation: AngleMesh, shape_id: int | None = None,
                physics=None) -> FarFieldTable:
    """One solve per incident node, far field at every observation node.

    ``model`` is a forward model (``forward.SoftModel`` / ``MediumModel``).
    """
    d = incident.directions().reshape(-1, 3)
    xh = observation.directions().reshape(-1, 3)
    dens = model.plane_densities(d)
    finite = np.all(np.isfinite(dens), axis=0)
    if not np.all(finite):
        k = int(np.argmin(finite))
        j, l = np.unravel_index(k, incident.shape)
        raise RuntimeError(f"forward solve failed at incident node ({j}, {l})")
    vals = (model.far_field_matrix(xh) @ dens).T
    vals = vals.reshape(incident.shape + observation.shape)
    if physics is None:
        physics = Medium(model.n) if hasattr(model, "n") else SoundSoft()
    sid = model.shape.id if shape_id is None else shape_id
    return FarFieldTable(int(sid), model.kappa, incident, observation, vals, physics)


def _bilinear_combine(values, i, j, fu, fw):
    """Bilinear combination over the first two axes of ``values``."""
    return (
        ((1 - fu) * (1 - fw))[:, None] * values[i, j]
        + (fu * (1 - fw))[:, None] * values[i + 1, j]
        + ((1 - fu) * fw)[:, None] * values[i, j + 1]
        + (fu * fw)[:, None] * values[i + 1, j + 1]
    )


def interp_incident(table: FarFieldTable, zhat) -> np.ndarray:
    """Observation-mesh values interpolated at incident direction ``zhat``."""
    i, j, fu, fw = table.incident.bilinear(zhat)
    flat = table.values.reshape(table.incident.shape + (-1,))
    out = _bilinear_combine(flat, i, j, fu, fw)[0]
    return out.reshape(table.observation.shape)


def interp_observation(values, mesh: AngleMesh, xhat) -> np.ndarray:
    """Bilinear interpolation of observation-mesh ``values`` at directions ``xhat``."""
    values = np.asarray(values)
    if values.shape != mesh.shape:
        raise ValueError("values do not match the observation mesh")
    i, j, fu, fw = mesh.bilinear(xhat)
    out = _bilinear_combine(values[..., None], i, j, fu, fw)[:, 0]
    return out[0] if np.ndim(xhat) == 1 else out


def test_function_u_hat(table: FarFieldTable, kappa, z_ring, x) -> np.ndarray:
    """Point-source test field built from the table of one dictionary shape.

    ``Phi(z, 0) * exp(i k |x - z|) / |x - z| * w_inf(zhat; (x - z)^)`` with
    both far-field arguments interpolated from the table.
    """
    k = _kappa(kappa)
    z = np.asarray(z_ring, float)
    pts = np.atleast_2d(np.asarray(x, float))
    rz = np.linalg.norm(z)
    diff = pts - z
    rd = np.linalg.norm(diff, axis=1)
    if rz == 0 or np.any(rd == 0):
        raise ValueError("test function is singular at z = 0 or x = z")
    w_obs = interp_incident(table, z / rz)
    w = interp_observation(w_obs, table.observation, diff / rd[:, None])
    out = np.exp(1j * k * rz) / (4 * np.pi * rz) * np.exp(1j * k * rd) / rd * w
    return out[0] if np.ndim(x) == 1 else out


test_function_u_hat.__test__ = False  # keep pytest from collecting the name


def save_table(table: FarFieldTable, path) -> None:
    inc_a, inc_n = table.incident.descriptor()
    obs_a, obs_n = table.observation.descriptor()
    code, n_med = (1, table.physics.n) if isinstance(table.physics, Medium) else (0, 0.0)
    header = _HEADER.pack(
        MAGIC, VERSION, table.shape_id, code, table.kappa, n_med, *inc_a, *obs_a, *inc_n, *obs_n
    )
    data = np.ascontiguousarray(table.values, dtype="<c16").tobytes()
    Path(path).write_bytes(header + data)


def load_table(path) -> FarFieldTable:
    raw = Path(path).read_bytes()
    if len(raw) < HEADER_SIZE:
        raise ValueError(f"{path}: truncated table header")
    fields = _HEADER.unpack(raw[:HEADER_SIZE])
    magic, version, shape_id, code, kappa, n_med = fields[:6]
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"{path}: incompatible table version {version} (expected {VERSION})")
    angles, counts = fields[6:14], fields[14:18]
    inc = AngleMesh(*angles[:4], *counts[:2])
    obs = AngleMesh(*angles[4:], *counts[2:])
    shape = inc.shape + obs.shape
    expected = int(np.prod(shape)) * 16
    if len(raw) - HEADER_SIZE != expected:
        raise ValueError(
            f"{path}: payload is {len(raw) - HEADER_SIZE} bytes, header implies {expected}"
        )
    values = np.frombuffer(raw, dtype="<c16", offset=HEADER_SIZE).reshape(shape).astype(complex)
    physics = Medium(n_med) if code == 1 else SoundSoft()
    return FarFieldTable(shape_id, kappa, inc, obs, values, physics)
