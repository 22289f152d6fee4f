"""Data model for airfoil flow samples, datasets, and predictions.

A sample is a point cloud over the 2-D flow domain. Per-node inputs are the
node position, distance to the airfoil surface, and surface normal (zero off
the surface); per-node outputs are the two velocity components, the static
pressure divided by density, and a turbulent-viscosity channel. Scalar
conditions (inflow, geometry, reference solver cost) live in the metadata.
All arrays are float64 and frozen after construction so instances can be
shared freely between workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Split(Enum):
    TRAIN = "train"
    TEST = "test"
    OOD_TEST = "ood"


# Tolerances used by the data invariants.
UNIT_NORMAL_TOL = 1e-9
SURFACE_DISTANCE_TOL = 1e-12


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.flags.writeable = False
    return arr


def _array_equal(a: np.ndarray, b: np.ndarray) -> bool:
    if a.shape != b.shape or a.dtype != b.dtype:
        return False
    if np.issubdtype(a.dtype, np.floating):
        return bool(np.array_equal(a, b, equal_nan=True))
    return bool(np.array_equal(a, b))


@dataclass(eq=False)
class FieldSet:
    """The four output channels of one sample, one value per node.

    u_x, u_y are velocity components (m/s), p_s is pressure divided by
    density (m^2/s^2), nu_t is turbulent kinematic viscosity (m^2/s).
    """

    u_x: np.ndarray
    u_y: np.ndarray
    p_s: np.ndarray
    nu_t: np.ndarray

    def __post_init__(self):
        self.u_x = _freeze(np.asarray(self.u_x, dtype=np.float64))
        self.u_y = _freeze(np.asarray(self.u_y, dtype=np.float64))
        self.p_s = _freeze(np.asarray(self.p_s, dtype=np.float64))
        self.nu_t = _freeze(np.asarray(self.nu_t, dtype=np.float64))

    CHANNELS = ("u_x", "u_y", "p_s", "nu_t")

    def channel(self, name: str) -> np.ndarray:
        if name not in self.CHANNELS:
            raise KeyError(f"unknown field channel {name!r}")
        return getattr(self, name)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FieldSet):
            return NotImplemented
        return all(_array_equal(self.channel(c), other.channel(c)) for c in self.CHANNELS)


@dataclass(eq=False)
class SampleMeta:
    """Per-sample scalar conditions and bookkeeping."""

    alpha_rad: float
    u_inf: float
    chord: float
    rho: float
    solver_time_s: float

    def __eq__(self, other) -> bool:
        if not isinstance(other, SampleMeta):
            return NotImplemented
        return (
            self.alpha_rad == other.alpha_rad
            and self.u_inf == other.u_inf
            and self.chord == other.chord
            and self.rho == other.rho
            and self.solver_time_s == other.solver_time_s
        )


@dataclass(eq=False)
class Sample:
    """One simulated airfoil case: node cloud, per-node inputs, truth outputs.

    `surface_order` lists the indices of the surface nodes in the order that
    traces the airfoil contour counter-clockwise; the contour closes from the
    last index back to the first.
    """

    id: str
    positions: np.ndarray      # (N, 2) node coordinates, meters
    inlet_velocity: np.ndarray  # (2,) freestream velocity, m/s
    distance: np.ndarray       # (N,) distance to the airfoil surface, meters
    normals: np.ndarray        # (N, 2) outward unit normals, zero off surface
    is_surface: np.ndarray     # (N,) bool
    surface_order: np.ndarray  # (S,) int indices tracing the contour CCW
    truth_fields: FieldSet
    meta: SampleMeta

    def __post_init__(self):
        self.positions = _freeze(np.asarray(self.positions, dtype=np.float64))
        self.inlet_velocity = _freeze(np.asarray(self.inlet_velocity, dtype=np.float64))
        self.distance = _freeze(np.asarray(self.distance, dtype=np.float64))
        self.normals = _freeze(np.asarray(self.normals, dtype=np.float64))
        self.is_surface = _freeze(np.asarray(self.is_surface, dtype=bool))
        self.surface_order = _freeze(np.asarray(self.surface_order, dtype=np.int64))

    @property
    def n_nodes(self) -> int:
        return int(self.positions.shape[0])

    def surface_polygon(self) -> np.ndarray:
        """Surface node coordinates in contour order, shape (S, 2)."""
        return self.positions[self.surface_order]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Sample):
            return NotImplemented
        return (
            self.id == other.id
            and _array_equal(self.positions, other.positions)
            and _array_equal(self.inlet_velocity, other.inlet_velocity)
            and _array_equal(self.distance, other.distance)
            and _array_equal(self.normals, other.normals)
            and _array_equal(self.is_surface, other.is_surface)
            and _array_equal(self.surface_order, other.surface_order)
            and self.truth_fields == other.truth_fields
            and self.meta == other.meta
        )


@dataclass(eq=False)
class Dataset:
    split: Split
    samples: list[Sample] = field(default_factory=list)
    generation_config_digest: str = ""

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.split == other.split
            and self.generation_config_digest == other.generation_config_digest
            and len(self.samples) == len(other.samples)
            and all(a == b for a, b in zip(self.samples, other.samples))
        )

    def sample_ids(self) -> list[str]:
        return [s.id for s in self.samples]


@dataclass(eq=False)
class Prediction:
    """Predicted output fields for one sample, in the sample's node order.

    Prediction fields are not held to the truth-field invariants: a predictor
    may emit non-finite or negative values and still gets scored (badly)
    rather than crashing the pipeline. Only shape and coverage are enforced.
    """

    sample_id: str
    fields: FieldSet
    inference_time_s: float = 0.0

    def __eq__(self, other) -> bool:
        if not isinstance(other, Prediction):
            return NotImplemented
        return (
            self.sample_id == other.sample_id
            and self.fields == other.fields
            and self.inference_time_s == other.inference_time_s
        )


def _cross(ox, oy, ax, ay, bx, by):
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def polygon_is_simple(points: np.ndarray) -> bool:
    """True iff the closed polygon through `points` has no self-intersection.

    Consecutive edges share one endpoint by construction; any other contact
    between two edges (crossing, touching, or collinear overlap) makes the
    polygon non-simple. O(S^2), vectorized per edge.
    """
    pts = np.asarray(points, dtype=np.float64)
    s = len(pts)
    if s < 3:
        return False
    nxt = np.roll(np.arange(s), -1)
    p1 = pts
    p2 = pts[nxt]
    for i in range(s - 2):
        # Candidate partner edges: j in [i+2, s-1], excluding the wrap pair (0, s-1).
        j0 = i + 2
        j1 = s - 1 if i == 0 else s
        if j0 >= j1:
            continue
        a1, a2 = p1[i], p2[i]
        b1 = p1[j0:j1]
        b2 = p2[j0:j1]
        d1 = _cross(b1[:, 0], b1[:, 1], b2[:, 0], b2[:, 1], a1[0], a1[1])
        d2 = _cross(b1[:, 0], b1[:, 1], b2[:, 0], b2[:, 1], a2[0], a2[1])
        d3 = _cross(a1[0], a1[1], a2[0], a2[1], b1[:, 0], b1[:, 1])
        d4 = _cross(a1[0], a1[1], a2[0], a2[1], b2[:, 0], b2[:, 1])
        if np.any((d1 * d2 < 0) & (d3 * d4 < 0)):
            return False
        # Collinear or endpoint contact: a zero cross product with the point
        # inside the other segment's bounding box counts as contact.
        if np.any(d1 == 0.0) or np.any(d2 == 0.0) or np.any(d3 == 0.0) or np.any(d4 == 0.0):
            lo_a, hi_a = np.minimum(a1, a2), np.maximum(a1, a2)
            lo_b, hi_b = np.minimum(b1, b2), np.maximum(b1, b2)
            if np.any((d3 == 0.0) & np.all((b1 >= lo_a) & (b1 <= hi_a), axis=1)):
                return False
            if np.any((d4 == 0.0) & np.all((b2 >= lo_a) & (b2 <= hi_a), axis=1)):
                return False
            if np.any((d1 == 0.0) & np.all((a1 >= lo_b) & (a1 <= hi_b), axis=1)):
                return False
            if np.any((d2 == 0.0) & np.all((a2 >= lo_b) & (a2 <= hi_b), axis=1)):
                return False
    return True


def _validate_fields(fields: FieldSet, n: int, *, require_finite: bool = True) -> list[str]:
    out = []
    for name in FieldSet.CHANNELS:
        arr = fields.channel(name)
        if arr.shape != (n,):
            out.append(f"{name}: length {arr.shape} does not match node count {n}")
            continue
        if require_finite:
            bad = np.flatnonzero(~np.isfinite(arr))
            if bad.size:
                out.append(f"{name}: non-finite value at index {bad[0]}")
    nu = fields.nu_t
    if nu.shape == (n,):
        neg = np.flatnonzero(np.isfinite(nu) & (nu < 0.0))
        if neg.size:
            out.append(f"nu_t: negative value at index {neg[0]}")
    return out


def validate_sample(sample: Sample) -> list[str]:
    """Check every sample invariant; return one message per violation.

    An empty list means the sample is well formed. Violations are data, not
    exceptions: each message names the offending field and the broken rule.
    """
    v: list[str] = []
    pos = sample.positions
    if pos.ndim != 2 or pos.shape[1] != 2:
        return [f"positions: expected shape (N, 2), got {pos.shape}"]
    n = pos.shape[0]
    if n < 3:
        v.append(f"positions: need at least 3 nodes, got {n}")
    if not np.all(np.isfinite(pos)):
        v.append("positions: non-finite value")
    if sample.inlet_velocity.shape != (2,):
        v.append(f"inlet_velocity: expected shape (2,), got {sample.inlet_velocity.shape}")
    elif not np.all(np.isfinite(sample.inlet_velocity)):
        v.append("inlet_velocity: non-finite value")

    for name, shape in (("distance", (n,)), ("normals", (n, 2)), ("is_surface", (n,))):
        arr = getattr(sample, name)
        if arr.shape != shape:
            v.append(f"{name}: expected shape {shape}, got {arr.shape}")
    if v:
        return v

    if not np.all(np.isfinite(sample.distance)):
        v.append("distance: non-finite value")
    if not np.all(np.isfinite(sample.normals)):
        v.append("normals: non-finite value")

    surf = sample.is_surface
    norms = np.hypot(sample.normals[:, 0], sample.normals[:, 1])
    bad_unit = np.flatnonzero(surf & (np.abs(norms - 1.0) > UNIT_NORMAL_TOL))
    for i in bad_unit[:5]:
        v.append(f"normals: not unit norm at index {i}")
    bad_zero = np.flatnonzero(~surf & (norms != 0.0))
    for i in bad_zero[:5]:
        v.append(f"normals: nonzero normal at non-surface index {i}")

    d = sample.distance
    bad_surf_d = np.flatnonzero(surf & (np.abs(d) > SURFACE_DISTANCE_TOL))
    for i in bad_surf_d[:5]:
        v.append(f"distance: nonzero at surface index {i}")
    bad_vol_d = np.flatnonzero(~surf & (np.abs(d) <= SURFACE_DISTANCE_TOL))
    for i in bad_vol_d[:5]:
        v.append(f"distance: zero at non-surface index {i}")
    if np.any(d < 0.0):
        v.append("distance: negative value")

    v.extend(_validate_fields(sample.truth_fields, n))

    order = sample.surface_order
    surf_idx = np.flatnonzero(surf)
    if order.ndim != 1:
        v.append(f"surface_order: expected 1-D index list, got shape {order.shape}")
    elif not np.array_equal(np.sort(order), surf_idx):
        v.append("surface_order: does not list each surface node exactly once")
    elif len(order) >= 3:
        if not polygon_is_simple(sample.positions[order]):
            v.append("surface_order: contour is not a simple closed polygon")
    elif len(order) > 0:
        v.append(f"surface_order: contour needs at least 3 nodes, got {len(order)}")

    if not (np.isfinite(sample.meta.solver_time_s) and sample.meta.solver_time_s > 0):
        v.append(f"meta.solver_time_s: must be positive, got {sample.meta.solver_time_s}")
    for key in ("alpha_rad", "u_inf", "chord", "rho"):
        if not np.isfinite(getattr(sample.meta, key)):
            v.append(f"meta.{key}: non-finite value")
    return v


def validate_prediction(pred: Prediction, sample: Sample) -> list[str]:
    """Shape and coverage checks for one prediction against its sample."""
    v = []
    if pred.sample_id != sample.id:
        v.append(f"prediction: sample id {pred.sample_id!r} does not match {sample.id!r}")
    v.extend(_validate_fields(pred.fields, sample.n_nodes, require_finite=False))
    if not (np.isfinite(pred.inference_time_s) and pred.inference_time_s >= 0.0):
        v.append(f"inference_time_s: must be >= 0, got {pred.inference_time_s}")
    return v


def validate_dataset(dataset: Dataset) -> list[str]:
    """Dataset-level invariants plus every per-sample violation."""
    v = []
    ids = dataset.sample_ids()
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        v.append(f"dataset: duplicate sample ids {dupes}")
    for s in dataset.samples:
        v.extend(f"sample {s.id!r}: {msg}" for msg in validate_sample(s))
    return v
