"""Analytic ground truth: incompressible potential flow around Joukowski airfoils.

The airfoil is the image of a circle under the conformal map z = zeta + a^2/zeta.
The circle has center c = mu*a (mu is the dimensionless offset, Re(mu) <= 0 for
thickness, Im(mu) >= 0 for camber) and radius R = |a - c|, so it passes through
zeta = a, whose image z = 2a is the sharp trailing edge. The cylinder-plane
potential is a uniform stream at the angle of attack plus a doublet plus a
vortex whose strength is fixed by the Kutta condition, which makes the mapped
trailing-edge velocity finite. Lift then follows the Kutta-Joukowski theorem
(L' = rho * u_inf * Gamma) and drag is exactly zero, which is what makes this
generator usable as a force oracle.

Sign convention: Gamma > 0 is clockwise circulation, the lift-positive sense,
so C_L = 2*Gamma / (u_inf * chord).

The turbulent-viscosity channel has no potential-flow counterpart; it is a
deterministic smooth surrogate nu_t = 0.41 * d * |u| * exp(-d / (0.5 * chord))
with d the distance to the surface, zero on the surface and decaying far away.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError, ParameterError, SingularityError
from .io import write_dataset
from .model import Dataset, FieldSet, Sample, SampleMeta, Split

NU_T_KAPPA = 0.41          # prefactor of the viscosity surrogate
NU_T_DECAY = 0.5           # decay length as a fraction of chord
DIST_POLY_N = 4096         # contour polygonization used for distances and chord
DIST_SNAP_FRACTION = 1e-6  # distances below this fraction of chord collapse to 0
SINGULARITY_TOL = 1e-12    # |dz/dzeta| below this is a mapped singularity
INSIDE_TOL = 1e-9          # relative slack when testing "outside the cylinder"

# Volume-node placement, all in units of the cylinder radius R.
_VOL_FLOOR = 1e-2          # minimum radial standoff from the cylinder
_VOL_SCALE = 0.75          # exponential decay length of the radial offsets
_VOL_RMAX = 12.0           # truncation of the radial offsets


@dataclass(frozen=True)
class JoukowskiParams:
    """Shape and flow parameters of one analytic case.

    mu is the cylinder-center offset in units of the map parameter `a`;
    the actual center is mu*a.
    """

    mu: complex
    a: float = 1.0
    alpha_rad: float = 0.0
    u_inf: float = 1.0
    rho: float = 1.2

    def validate(self) -> None:
        c = self.mu * self.a
        r = abs(self.a - c)
        if not (self.a > 0.0 and math.isfinite(self.a)):
            raise ParameterError(f"map parameter a must be positive, got {self.a}")
        if r <= 0.0:
            raise ParameterError("degenerate geometry: cylinder radius is zero")
        if self.mu.real > 0.0:
            raise ParameterError(f"Re(mu) must be <= 0, got {self.mu.real}")
        if abs(c.imag) > r:
            raise ParameterError("camber offset exceeds cylinder radius")
        if not (self.u_inf > 0.0 and math.isfinite(self.u_inf)):
            raise ParameterError(f"u_inf must be positive, got {self.u_inf}")
        if not abs(self.alpha_rad) < math.pi / 2:
            raise ParameterError(f"|alpha| must be < pi/2, got {self.alpha_rad}")
        if not (self.rho > 0.0 and math.isfinite(self.rho)):
            raise ParameterError(f"rho must be positive, got {self.rho}")

    @property
    def center(self) -> complex:
        return self.mu * self.a

    @property
    def radius(self) -> float:
        return abs(self.a - self.center)

    @property
    def beta_rad(self) -> float:
        """Trailing-edge offset angle; the TE preimage sits at angle -beta."""
        return math.asin(self.center.imag / self.radius)


def circulation_kutta(params: JoukowskiParams) -> float:
    """Circulation (m^2/s, clockwise positive) enforcing the Kutta condition."""
    params.validate()
    return 4.0 * math.pi * params.u_inf * params.radius * math.sin(
        params.alpha_rad + params.beta_rad
    )


def _w_prime(params: JoukowskiParams, zeta, gamma: float):
    """Cylinder-plane complex velocity dW/dzeta."""
    zc = zeta - params.center
    u, al, r = params.u_inf, params.alpha_rad, params.radius
    return (
        u * np.exp(-1j * al)
        - u * r * r * np.exp(1j * al) / (zc * zc)
        + 1j * gamma / (2.0 * np.pi * zc)
    )


def _map_z(zeta, a: float):
    return zeta + a * a / zeta


def _preimage(params: JoukowskiParams, z: np.ndarray) -> np.ndarray:
    """Invert z = zeta + a^2/zeta, picking the root outside the cylinder."""
    a = params.a
    s = np.sqrt(z * z - 4.0 * a * a)
    r1 = (z + s) / 2.0
    r2 = (z - s) / 2.0
    c = params.center
    outer = np.where(np.abs(r1 - c) >= np.abs(r2 - c), r1, r2)
    inside = np.abs(outer - c) < params.radius * (1.0 - INSIDE_TOL)
    if np.any(inside):
        bad = np.asarray(z).ravel()[np.flatnonzero(np.ravel(inside))[0]]
        raise DomainError(f"point ({bad.real}, {bad.imag}) lies inside the airfoil")
    return outer


@lru_cache(maxsize=8)
def _contour_cache(mu: complex, a: float) -> tuple[np.ndarray, float]:
    """Dense contour polygon (complex, CCW from the trailing edge) and chord."""
    c = mu * a
    r = abs(a - c)
    beta = math.asin(c.imag / r)
    th = -beta + 2.0 * np.pi * np.arange(DIST_POLY_N) / DIST_POLY_N
    zeta = c + r * np.exp(1j * th)
    z = _map_z(zeta, a)
    chord = float(z.real.max() - z.real.min())
    z.flags.writeable = False
    return z, chord


def chord_length(params: JoukowskiParams) -> float:
    """Chord, measured as the x-extent of the mapped contour."""
    return _contour_cache(params.mu, params.a)[1]


def _min_distance_to_contour(poly: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Minimum Euclidean distance from each point to the closed polygon."""
    ax, ay = poly.real, poly.imag
    abx, aby = np.roll(ax, -1) - ax, np.roll(ay, -1) - ay
    ab2 = np.maximum(abx * abx + aby * aby, 1e-300)
    out = np.empty(len(pts))
    for lo in range(0, len(pts), 512):
        q = pts[lo : lo + 512]
        aqx = q[:, 0:1] - ax[None, :]
        aqy = q[:, 1:2] - ay[None, :]
        s = aqx * abx
        s += aqy * aby
        t = np.clip(s / ab2, 0.0, 1.0)
        # |aq - t*ab|^2 = |aq|^2 - t*(2*(aq.ab) - t*|ab|^2)
        s *= 2.0
        s -= t * ab2
        s *= t
        aqx *= aqx
        aqx += aqy * aqy
        aqx -= s
        d2 = np.maximum(aqx, 0.0, out=aqx)
        out[lo : lo + 512] = np.sqrt(np.min(d2, axis=1))
    return out


def distance_to_surface(params: JoukowskiParams, points: np.ndarray) -> np.ndarray:
    """Distance from each point to the airfoil surface.

    Measured against a fixed dense polygonization of the contour; values
    below a small fraction of the chord collapse to exactly zero so that
    on-surface queries return 0.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    poly, chord = _contour_cache(params.mu, params.a)
    d = _min_distance_to_contour(poly, pts)
    d[d < DIST_SNAP_FRACTION * chord] = 0.0
    return d


def _velocity_complex(params: JoukowskiParams, z: np.ndarray) -> np.ndarray:
    gamma = circulation_kutta(params)
    zeta = _preimage(params, z)
    dzdzeta = 1.0 - (params.a * params.a) / (zeta * zeta)
    small = np.abs(dzdzeta) < SINGULARITY_TOL
    if np.any(small):
        bad = np.asarray(z).ravel()[np.flatnonzero(np.ravel(small))[0]]
        raise SingularityError(
            f"point ({bad.real}, {bad.imag}) is too close to a mapped singularity"
        )
    return np.conj(_w_prime(params, zeta, gamma) / dzdzeta)


def _as_points(point) -> tuple[np.ndarray, bool]:
    pts = np.asarray(point, dtype=np.float64)
    if pts.ndim == 1:
        return pts[None, :], True
    return pts, False


def velocity_at(params: JoukowskiParams, point) -> np.ndarray:
    """Velocity (m/s) at a point (or (M, 2) array of points) outside the airfoil.

    Raises DomainError for points inside the body and SingularityError at the
    exact trailing edge, where the conformal map degenerates.
    """
    params.validate()
    pts, single = _as_points(point)
    w = _velocity_complex(params, pts[:, 0] + 1j * pts[:, 1])
    uv = np.column_stack([w.real, w.imag])
    return uv[0] if single else uv


def pressure_at(params: JoukowskiParams, point) -> np.ndarray | float:
    """Static pressure over density (m^2/s^2), Bernoulli with far-field zero."""
    params.validate()
    pts, single = _as_points(point)
    w = _velocity_complex(params, pts[:, 0] + 1j * pts[:, 1])
    p = 0.5 * (params.u_inf**2 - np.abs(w) ** 2)
    return float(p[0]) if single else p


def nu_t_at(params: JoukowskiParams, point) -> np.ndarray | float:
    """Turbulent-viscosity surrogate, zero on the surface, decaying far away."""
    params.validate()
    pts, single = _as_points(point)
    w = _velocity_complex(params, pts[:, 0] + 1j * pts[:, 1])
    d = distance_to_surface(params, pts)
    chord = chord_length(params)
    nu = NU_T_KAPPA * d * np.abs(w) * np.exp(-d / (NU_T_DECAY * chord))
    return float(nu[0]) if single else nu


def _evaluate_truth(
    params: JoukowskiParams, pts: np.ndarray, distances: np.ndarray | None = None
) -> FieldSet:
    """All four channels at once (same formulas as the per-field operations)."""
    w = _velocity_complex(params, pts[:, 0] + 1j * pts[:, 1])
    speed = np.abs(w)
    p = 0.5 * (params.u_inf**2 - speed**2)
    d = distance_to_surface(params, pts) if distances is None else distances
    chord = chord_length(params)
    nu = NU_T_KAPPA * d * speed * np.exp(-d / (NU_T_DECAY * chord))
    return FieldSet(u_x=w.real, u_y=w.imag, p_s=p, nu_t=nu)


def surface_nodes(params: JoukowskiParams, n_surface: int) -> tuple[np.ndarray, np.ndarray]:
    """Surface node positions and exact outward normals, CCW from the TE.

    The parameter sweep is offset by half a step so the exact trailing-edge
    cusp is never emitted; the two samples adjacent to it take its place.
    """
    c, r, a = params.center, params.radius, params.a
    th = -params.beta_rad + 2.0 * np.pi * (np.arange(n_surface) + 0.5) / n_surface
    e = np.exp(1j * th)
    zeta = c + r * e
    z = _map_z(zeta, a)
    dz_dth = (1.0 - a * a / (zeta * zeta)) * (1j * r * e)
    tangent = dz_dth / np.abs(dz_dth)
    normal = -1j * tangent  # CCW traversal: outward normal is the tangent rotated -90deg
    return (
        np.column_stack([z.real, z.imag]),
        np.column_stack([normal.real, normal.imag]),
    )


def sample_point_cloud(
    params: JoukowskiParams,
    n_nodes: int,
    seed: int,
    *,
    sample_id: str = "sample",
    solver_time_s: float = 1500.0,
) -> Sample:
    """Generate one sample: surface sweep plus a decaying volume cloud.

    ceil(n_nodes/4) nodes trace the contour (uniform parameter sweep with
    exact conformal normals, emitted first and indexed by surface_order); the
    rest are drawn radially around the cylinder preimage with exponentially
    decaying density away from the surface, truncated at a far-field radius.
    Deterministic in (params, n_nodes, seed). By construction no node hits
    the trailing-edge cusp or the body interior, so filling the truth fields
    cannot raise domain or singularity errors.
    """
    params.validate()
    if n_nodes < 64:
        raise ParameterError(f"need at least 64 nodes, got {n_nodes}")
    n_surf = -(-n_nodes // 4)
    n_vol = n_nodes - n_surf

    pos_surf, normals_surf = surface_nodes(params, n_surf)

    rng = np.random.default_rng(seed)
    phi = rng.uniform(0.0, 2.0 * np.pi, n_vol)
    u = rng.random(n_vol)
    span = _VOL_RMAX - _VOL_FLOOR
    offsets = _VOL_FLOOR - _VOL_SCALE * np.log1p(-u * (1.0 - math.exp(-span / _VOL_SCALE)))
    zeta_vol = params.center + params.radius * (1.0 + offsets) * np.exp(1j * phi)
    z_vol = _map_z(zeta_vol, params.a)
    pos_vol = np.column_stack([z_vol.real, z_vol.imag])

    positions = np.vstack([pos_surf, pos_vol])
    normals = np.vstack([normals_surf, np.zeros_like(pos_vol)])
    is_surface = np.zeros(n_nodes, dtype=bool)
    is_surface[:n_surf] = True
    distance = np.zeros(n_nodes)
    distance[n_surf:] = distance_to_surface(params, pos_vol)

    fields = _evaluate_truth(params, positions, distances=distance)
    u_inf = params.u_inf
    inlet = np.array([u_inf * math.cos(params.alpha_rad), u_inf * math.sin(params.alpha_rad)])
    return Sample(
        id=sample_id,
        positions=positions,
        inlet_velocity=inlet,
        distance=distance,
        normals=normals,
        is_surface=is_surface,
        surface_order=np.arange(n_surf, dtype=np.int64),
        truth_fields=fields,
        meta=SampleMeta(
            alpha_rad=params.alpha_rad,
            u_inf=u_inf,
            chord=chord_length(params),
            rho=params.rho,
            solver_time_s=solver_time_s,
        ),
    )


_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(seed: int, index: int) -> int:
    """The index-th output of a splitmix64 stream seeded with `seed`.

    Used to derive independent per-sample seeds from the master seed, so
    generation is reproducible regardless of how samples are batched.
    """
    z = (seed + (index + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class GenerationConfig:
    """Benchmark generation settings.

    Train and test share the inflow-speed range; the OOD split draws from a
    disjoint range, so generalization is tested on out-of-range inflow. Shape
    ranges control camber (Im mu) and thickness (-Re mu). With
    `normalize_chord` the map parameter is rescaled so every airfoil has unit
    chord. `ood_camber_range`/`ood_thickness_range` optionally shift the OOD
    geometry distribution as well (off by default).
    """

    n_train: int = 103
    n_test: int = 200
    n_ood: int = 496
    nodes_per_sample: int = 1000
    u_inf_range: tuple[float, float] = (30.0, 50.0)
    u_inf_range_ood: tuple[float, float] = (55.0, 75.0)
    alpha_range_rad: tuple[float, float] = (-0.10, 0.18)
    camber_range: tuple[float, float] = (0.02, 0.12)
    thickness_range: tuple[float, float] = (0.06, 0.20)
    ood_camber_range: tuple[float, float] | None = None
    ood_thickness_range: tuple[float, float] | None = None
    seed: int = 0
    rho: float = 1.2
    normalize_chord: bool = True
    solver_time_s: float = 1500.0

    def validate(self) -> None:
        for name in ("n_train", "n_test", "n_ood"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.nodes_per_sample < 64:
            raise ConfigError("nodes_per_sample must be >= 64")
        for name in (
            "u_inf_range",
            "u_inf_range_ood",
            "alpha_range_rad",
            "camber_range",
            "thickness_range",
        ):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise ConfigError(f"{name} must be an ordered finite range, got {(lo, hi)}")
        lo, hi = self.u_inf_range
        olo, ohi = self.u_inf_range_ood
        if olo <= hi and lo <= ohi:
            raise ConfigError(
                f"OOD inflow range {self.u_inf_range_ood} overlaps the training range {self.u_inf_range}"
            )
        if self.u_inf_range[0] <= 0 or self.u_inf_range_ood[0] <= 0:
            raise ConfigError("inflow speeds must be positive")
        if self.thickness_range[0] <= 0:
            raise ConfigError("thickness must be positive")
        if self.camber_range[0] < 0:
            raise ConfigError("camber must be non-negative")
        if max(abs(self.alpha_range_rad[0]), abs(self.alpha_range_rad[1])) >= math.pi / 2:
            raise ConfigError("angle of attack must satisfy |alpha| < pi/2")
        if not (self.rho > 0 and self.solver_time_s > 0):
            raise ConfigError("rho and solver_time_s must be positive")

    def to_dict(self) -> dict:
        return {
            "n_train": self.n_train,
            "n_test": self.n_test,
            "n_ood": self.n_ood,
            "nodes_per_sample": self.nodes_per_sample,
            "u_inf_range": list(self.u_inf_range),
            "u_inf_range_ood": list(self.u_inf_range_ood),
            "alpha_range_rad": list(self.alpha_range_rad),
            "camber_range": list(self.camber_range),
            "thickness_range": list(self.thickness_range),
            "ood_camber_range": list(self.ood_camber_range) if self.ood_camber_range else None,
            "ood_thickness_range": (
                list(self.ood_thickness_range) if self.ood_thickness_range else None
            ),
            "seed": self.seed,
            "rho": self.rho,
            "normalize_chord": self.normalize_chord,
            "solver_time_s": self.solver_time_s,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GenerationConfig":
        kwargs = dict(data)
        for key in (
            "u_inf_range",
            "u_inf_range_ood",
            "alpha_range_rad",
            "camber_range",
            "thickness_range",
            "ood_camber_range",
            "ood_thickness_range",
        ):
            if kwargs.get(key) is not None:
                kwargs[key] = tuple(kwargs[key])
        unknown = set(kwargs) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown generation config keys: {sorted(unknown)}")
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path: str | Path) -> "GenerationConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}:{e.lineno}: {e.msg}") from None
        return cls.from_dict(data)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


_SPLIT_STREAM = {Split.TRAIN: 0, Split.TEST: 1, Split.OOD_TEST: 2}


def _draw_params(config: GenerationConfig, split: Split, rng: np.random.Generator) -> JoukowskiParams:
    if split is Split.OOD_TEST:
        u_range = config.u_inf_range_ood
        camber_range = config.ood_camber_range or config.camber_range
        thickness_range = config.ood_thickness_range or config.thickness_range
    else:
        u_range = config.u_inf_range
        camber_range = config.camber_range
        thickness_range = config.thickness_range
    u_inf = rng.uniform(*u_range)
    alpha = rng.uniform(*config.alpha_range_rad)
    camber = rng.uniform(*camber_range)
    thickness = rng.uniform(*thickness_range)
    mu = complex(-thickness, camber)
    a = 1.0
    if config.normalize_chord:
        a = 1.0 / chord_length(JoukowskiParams(mu=mu, a=1.0, u_inf=u_inf, rho=config.rho))
    return JoukowskiParams(mu=mu, a=a, alpha_rad=alpha, u_inf=u_inf, rho=config.rho)


def generate_split(config: GenerationConfig, split: Split) -> Dataset:
    """Generate one split deterministically from the master seed."""
    config.validate()
    stream = splitmix64(config.seed, _SPLIT_STREAM[split])
    count = {Split.TRAIN: config.n_train, Split.TEST: config.n_test, Split.OOD_TEST: config.n_ood}[
        split
    ]
    samples = []
    for i in range(count):
        sample_seed = splitmix64(stream, i)
        rng = np.random.default_rng(splitmix64(sample_seed, 0))
        params = _draw_params(config, split, rng)
        sample = sample_point_cloud(
            params,
            config.nodes_per_sample,
            splitmix64(sample_seed, 1),
            sample_id=f"{split.value}-{i:04d}",
            solver_time_s=config.solver_time_s,
        )
        samples.append(sample)
    return Dataset(split=split, samples=samples, generation_config_digest=config.digest())


def generate_benchmark(config: GenerationConfig, out_dir: str | Path) -> dict[str, Dataset]:
    """Generate and write the three splits under `out_dir`.

    Layout: ``out_dir/{train,test,ood}`` in the dataset directory format,
    plus a copy of the generation config. Returns the in-memory datasets
    keyed by split name.
    """
    config.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "generation_config.json").write_text(
        json.dumps(config.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    datasets = {}
    for split in (Split.TRAIN, Split.TEST, Split.OOD_TEST):
        ds = generate_split(config, split)
        write_dataset(ds, out_dir / split.value)
        datasets[split.value] = ds
    return datasets
