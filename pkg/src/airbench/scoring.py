"""Criterion classification, sub-scores, and the global benchmark score.

Each raw criterion value is classified against two calibrated thresholds as
Unacceptable (0 points), Acceptable (1 point), or Great (2 points). A
category's accuracy score is the points fraction (2*Ng + No) / (2*N); the
ML-related and OOD categories blend accuracy with a log-scale speed-up score,
while the physics category is accuracy only. The global score is the weighted
sum of the three category scores, zeroed outright when the training budget
was exceeded.

Score combinations are evaluated in exact rational arithmetic and rounded
once at the end, so reference configurations reproduce their expected
values bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from .errors import ConfigError, DomainError
from .metrics import DEFAULT_FIELD_CRITERIA, FieldCriterion, SplitMetrics

ML_CRITERIA = ("u_x", "u_y", "p", "nu_t", "p_s")
PHYSICS_CRITERIA = ("C_D", "C_L", "rho_D", "rho_L")
OOD_CRITERIA = ML_CRITERIA + PHYSICS_CRITERIA


class Classification(IntEnum):
    UNACCEPTABLE = 0
    ACCEPTABLE = 1
    GREAT = 2

    @property
    def marker(self) -> str:
        return {0: "U", 1: "A", 2: "G"}[int(self)]


class Direction(Enum):
    MIN = "min"  # smaller is better
    MAX = "max"  # larger is better


@dataclass(frozen=True)
class ThresholdSpec:
    """Two calibrated thresholds and the direction of improvement."""

    t1: float
    t2: float
    direction: Direction = Direction.MIN

    def validate(self) -> None:
        if not (math.isfinite(self.t1) and math.isfinite(self.t2) and self.t1 < self.t2):
            raise ConfigError(f"thresholds must satisfy t1 < t2, got {self.t1}, {self.t2}")


def classify(value: float, spec: ThresholdSpec) -> Classification:
    """Classify one raw criterion value against a threshold pair.

    Minimize-better: value < t1 is Great, t1 <= value < t2 is Acceptable,
    value >= t2 is Unacceptable. Maximize-better mirrors that: value > t2 is
    Great, t1 < value <= t2 is Acceptable, value <= t1 is Unacceptable.
    Non-finite values classify as Unacceptable instead of raising, so a NaN
    metric yields a (bad) score rather than a crash.
    """
    if not math.isfinite(value):
        return Classification.UNACCEPTABLE
    if spec.direction is Direction.MIN:
        if value < spec.t1:
            return Classification.GREAT
        if value < spec.t2:
            return Classification.ACCEPTABLE
        return Classification.UNACCEPTABLE
    if value > spec.t2:
        return Classification.GREAT
    if value > spec.t1:
        return Classification.ACCEPTABLE
    return Classification.UNACCEPTABLE


def accuracy_score(n_great: int, n_acceptable: int, n_unacceptable: int) -> float:
    """Points fraction (2*Ng + 1*No + 0*Nr) / (2*N)."""
    if min(n_great, n_acceptable, n_unacceptable) < 0:
        raise DomainError("criterion counts must be non-negative")
    n = n_great + n_acceptable + n_unacceptable
    if n == 0:
        raise ConfigError("empty criterion set")
    return (2 * n_great + n_acceptable) / (2 * n)


def compute_speedup(solver_time_s: float, inference_time_s: float) -> float:
    """Reference solver time over surrogate inference time."""
    if not (solver_time_s > 0 and math.isfinite(solver_time_s)):
        raise DomainError(f"solver time must be positive, got {solver_time_s}")
    if not (inference_time_s > 0 and math.isfinite(inference_time_s)):
        raise DomainError(f"inference time must be positive, got {inference_time_s}")
    return solver_time_s / inference_time_s


def speed_score(speedup: float, speedup_max: float) -> float:
    """log10(speedup) / log10(speedup_max), clamped to [0, 1].

    There is no reward beyond `speedup_max`, and a slowdown (speedup < 1)
    scores 0 rather than going negative.
    """
    if not (speedup > 0 and math.isfinite(speedup)):
        raise DomainError(f"speedup must be positive, got {speedup}")
    if not (speedup_max > 1 and math.isfinite(speedup_max)):
        raise ConfigError(f"speedup_max must be > 1, got {speedup_max}")
    if speedup < 1.0:
        return 0.0
    return min(math.log10(speedup) / math.log10(speedup_max), 1.0)


def category_score(accuracy: float, speed: float, alpha_a: float, alpha_s: float) -> float:
    """Weighted blend alpha_a * accuracy + alpha_s * speed, exactly rounded."""
    if abs(alpha_a + alpha_s - 1.0) > 1e-12:
        raise ConfigError(f"accuracy/speed weights must sum to 1, got {alpha_a} + {alpha_s}")
    return float(Fraction(alpha_a) * Fraction(accuracy) + Fraction(alpha_s) * Fraction(speed))


@dataclass
class CriterionResult:
    name: str
    value: float
    classification: Classification
    non_finite: bool = False


@dataclass
class CategoryResult:
    """Classified criteria and sub-scores for one category."""

    name: str
    criteria: list[CriterionResult] = field(default_factory=list)
    accuracy: float = 0.0
    speedup: float | None = None
    speed: float | None = None
    score: float = 0.0

    def counts(self) -> tuple[int, int, int]:
        ng = sum(1 for c in self.criteria if c.classification is Classification.GREAT)
        no = sum(1 for c in self.criteria if c.classification is Classification.ACCEPTABLE)
        nr = sum(1 for c in self.criteria if c.classification is Classification.UNACCEPTABLE)
        return ng, no, nr

    def markers(self) -> str:
        return " ".join(c.classification.marker for c in self.criteria)


@dataclass
class ScoreReport:
    """Machine form of a full benchmark scoring run."""

    ml: CategoryResult
    ood: CategoryResult
    physics: CategoryResult
    global_score: float
    rejected: bool = False
    rejection_reason: str | None = None

    def to_dict(self) -> dict:
        def cat(c: CategoryResult) -> dict:
            return {
                "name": c.name,
                "criteria": [
                    {
                        "name": r.name,
                        "value": r.value,
                        "classification": int(r.classification),
                        "non_finite": r.non_finite,
                    }
                    for r in c.criteria
                ],
                "accuracy": c.accuracy,
                "speedup": c.speedup,
                "speed": c.speed,
                "score": c.score,
            }

        return {
            "ml": cat(self.ml),
            "ood": cat(self.ood),
            "physics": cat(self.physics),
            "global_score": self.global_score,
            "rejected": self.rejected,
            "rejection_reason": self.rejection_reason,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScoreReport":
        def cat(d: dict) -> CategoryResult:
            return CategoryResult(
                name=d["name"],
                criteria=[
                    CriterionResult(
                        name=r["name"],
                        value=r["value"],
                        classification=Classification(r["classification"]),
                        non_finite=r.get("non_finite", False),
                    )
                    for r in d["criteria"]
                ],
                accuracy=d["accuracy"],
                speedup=d["speedup"],
                speed=d["speed"],
                score=d["score"],
            )

        return cls(
            ml=cat(data["ml"]),
            ood=cat(data["ood"]),
            physics=cat(data["physics"]),
            global_score=data["global_score"],
            rejected=data["rejected"],
            rejection_reason=data["rejection_reason"],
        )


@dataclass(frozen=True)
class ScoringConfig:
    """Weights, speed-up cap, training budget, and per-criterion thresholds."""

    alpha_ml: float = 0.4
    alpha_ood: float = 0.3
    alpha_ph: float = 0.3
    alpha_a: float = 0.75
    alpha_s: float = 0.25
    speedup_max: float = 10000.0
    training_budget_s: float = 259200.0  # 72 hours
    solver_time_source: str = "sample_meta"  # or "constant"
    solver_time_constant_s: float = 1500.0
    thresholds_ml: Mapping[str, ThresholdSpec] = field(default_factory=dict)
    thresholds_ood: Mapping[str, ThresholdSpec] = field(default_factory=dict)
    thresholds_physics: Mapping[str, ThresholdSpec] = field(default_factory=dict)
    field_criteria: tuple[FieldCriterion, ...] = DEFAULT_FIELD_CRITERIA

    def validate(self) -> None:
        if abs(self.alpha_ml + self.alpha_ood + self.alpha_ph - 1.0) > 1e-12:
            raise ConfigError("category weights must sum to 1")
        if abs(self.alpha_a + self.alpha_s - 1.0) > 1e-12:
            raise ConfigError("accuracy/speed weights must sum to 1")
        if not self.speedup_max > 1:
            raise ConfigError(f"speedup_max must be > 1, got {self.speedup_max}")
        if not self.training_budget_s > 0:
            raise ConfigError("training_budget_s must be positive")
        if self.solver_time_source not in ("sample_meta", "constant"):
            raise ConfigError(f"unknown solver_time_source {self.solver_time_source!r}")
        if self.solver_time_source == "constant" and not self.solver_time_constant_s > 0:
            raise ConfigError("solver_time_constant_s must be positive")
        for names, table, label in (
            (ML_CRITERIA, self.thresholds_ml, "ml"),
            (OOD_CRITERIA, self.thresholds_ood, "ood"),
            (PHYSICS_CRITERIA, self.thresholds_physics, "physics"),
        ):
            if set(table) != set(names):
                raise ConfigError(
                    f"{label} thresholds must cover exactly {sorted(names)}, got {sorted(table)}"
                )
            for spec in table.values():
                spec.validate()
        crit_names = [c.name for c in self.field_criteria]
        if sorted(crit_names) != sorted(ML_CRITERIA):
            raise ConfigError(f"field criteria must be exactly {sorted(ML_CRITERIA)}")
        for c in self.field_criteria:
            c.validate()

    def to_dict(self) -> dict:
        def table(t: Mapping[str, ThresholdSpec]) -> dict:
            return {
                name: {"t1": s.t1, "t2": s.t2, "direction": s.direction.value}
                for name, s in sorted(t.items())
            }

        return {
            "alpha_ml": self.alpha_ml,
            "alpha_ood": self.alpha_ood,
            "alpha_ph": self.alpha_ph,
            "alpha_a": self.alpha_a,
            "alpha_s": self.alpha_s,
            "speedup_max": self.speedup_max,
            "training_budget_s": self.training_budget_s,
            "solver_time_source": self.solver_time_source,
            "solver_time_constant_s": self.solver_time_constant_s,
            "thresholds": {
                "ml": table(self.thresholds_ml),
                "ood": table(self.thresholds_ood),
                "physics": table(self.thresholds_physics),
            },
            "field_criteria": [
                {
                    "name": c.name,
                    "channel": c.channel,
                    "kind": c.kind,
                    "subset": c.subset,
                    "normalization": c.normalization,
                }
                for c in self.field_criteria
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScoringConfig":
        def table(t: dict) -> dict[str, ThresholdSpec]:
            return {
                name: ThresholdSpec(
                    t1=float(s["t1"]), t2=float(s["t2"]), direction=Direction(s["direction"])
                )
                for name, s in t.items()
            }

        try:
            thresholds = data["thresholds"]
            config = cls(
                alpha_ml=float(data["alpha_ml"]),
                alpha_ood=float(data["alpha_ood"]),
                alpha_ph=float(data["alpha_ph"]),
                alpha_a=float(data["alpha_a"]),
                alpha_s=float(data["alpha_s"]),
                speedup_max=float(data["speedup_max"]),
                training_budget_s=float(data["training_budget_s"]),
                solver_time_source=data.get("solver_time_source", "sample_meta"),
                solver_time_constant_s=float(data.get("solver_time_constant_s", 1500.0)),
                thresholds_ml=table(thresholds["ml"]),
                thresholds_ood=table(thresholds["ood"]),
                thresholds_physics=table(thresholds["physics"]),
                field_criteria=tuple(
                    FieldCriterion(
                        name=c["name"],
                        channel=c["channel"],
                        kind=c.get("kind", "mae"),
                        subset=c.get("subset", "all"),
                        normalization=float(c.get("normalization", 1.0)),
                    )
                    for c in data["field_criteria"]
                ),
            )
        except (KeyError, ValueError, TypeError) as e:
            raise ConfigError(f"bad scoring config: {e}") from None
        config.validate()
        return config

    @classmethod
    def from_json(cls, path: str | Path) -> "ScoringConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}:{e.lineno}: {e.msg}") from None
        return cls.from_dict(data)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def default_scoring_config() -> ScoringConfig:
    """The shipped default configuration (weights, caps, threshold table)."""
    text = resources.files("airbench.data").joinpath("default_scoring.json").read_text("utf-8")
    return ScoringConfig.from_dict(json.loads(text))


def classify_criteria(
    values: Mapping[str, float],
    thresholds: Mapping[str, ThresholdSpec],
    order: Sequence[str],
) -> list[CriterionResult]:
    """Classify named raw values in a fixed criterion order."""
    out = []
    for name in order:
        if name not in values:
            raise ConfigError(f"missing criterion value {name!r}")
        v = float(values[name])
        out.append(
            CriterionResult(
                name=name,
                value=v,
                classification=classify(v, thresholds[name]),
                non_finite=not math.isfinite(v),
            )
        )
    return out


def build_category(
    name: str,
    criteria: list[CriterionResult],
    config: ScoringConfig,
    speedup: float | None = None,
) -> CategoryResult:
    """Assemble one category: accuracy from the points, optional speed blend.

    With a speed-up, the category score blends accuracy and speed by the
    configured weights; without one (the physics category) it is the
    accuracy fraction alone.
    """
    cat = CategoryResult(name=name, criteria=criteria)
    cat.accuracy = accuracy_score(*cat.counts())
    if speedup is None:
        cat.score = cat.accuracy
    else:
        cat.speedup = speedup
        cat.speed = speed_score(speedup, config.speedup_max)
        cat.score = category_score(cat.accuracy, cat.speed, config.alpha_a, config.alpha_s)
    return cat


def combine_global(score_ml: float, score_ood: float, score_physics: float, config: ScoringConfig) -> float:
    """Weighted sum of the three category scores, exactly rounded."""
    for s in (score_ml, score_ood, score_physics):
        if not (0.0 <= s <= 1.0):
            raise DomainError(f"category scores must lie in [0, 1], got {s}")
    return float(
        Fraction(config.alpha_ml) * Fraction(score_ml)
        + Fraction(config.alpha_ood) * Fraction(score_ood)
        + Fraction(config.alpha_ph) * Fraction(score_physics)
    )


def global_score(
    ml: CategoryResult,
    ood: CategoryResult,
    physics: CategoryResult,
    config: ScoringConfig,
    rejection_reason: str | None = None,
) -> ScoreReport:
    """Combine category results into the final report.

    A rejection (training budget exceeded) forces the global score to 0
    regardless of the category results.
    """
    if rejection_reason is not None:
        return ScoreReport(
            ml=ml, ood=ood, physics=physics, global_score=0.0,
            rejected=True, rejection_reason=rejection_reason,
        )
    return ScoreReport(
        ml=ml,
        ood=ood,
        physics=physics,
        global_score=combine_global(ml.score, ood.score, physics.score, config),
    )


def rejected_report(reason: str) -> ScoreReport:
    """A zero-score report for a run rejected before evaluation."""
    return ScoreReport(
        ml=CategoryResult(name="ml"),
        ood=CategoryResult(name="ood"),
        physics=CategoryResult(name="physics"),
        global_score=0.0,
        rejected=True,
        rejection_reason=reason,
    )


def score_from_values(
    ml_values: Mapping[str, float],
    ood_values: Mapping[str, float],
    physics_values: Mapping[str, float],
    speedup_ml: float,
    speedup_ood: float,
    config: ScoringConfig,
    rejection_reason: str | None = None,
) -> ScoreReport:
    """Full scoring pipeline from raw criterion values and speed-ups."""
    config.validate()
    ml = build_category(
        "ml", classify_criteria(ml_values, config.thresholds_ml, ML_CRITERIA), config, speedup_ml
    )
    ood = build_category(
        "ood",
        classify_criteria(ood_values, config.thresholds_ood, OOD_CRITERIA),
        config,
        speedup_ood,
    )
    physics = build_category(
        "physics", classify_criteria(physics_values, config.thresholds_physics, PHYSICS_CRITERIA), config
    )
    return global_score(ml, ood, physics, config, rejection_reason)


def criterion_values_from_metrics(metrics: SplitMetrics, names: Sequence[str]) -> dict[str, float]:
    """Pull named criterion values out of a split's raw metrics."""
    mapping = {
        "C_D": metrics.c_d_rel_err,
        "C_L": metrics.c_l_rel_err,
        "rho_D": metrics.spearman_d,
        "rho_L": metrics.spearman_l,
    }
    out = {}
    for name in names:
        if name in mapping:
            out[name] = mapping[name]
        elif name in metrics.field_errors:
            out[name] = metrics.field_errors[name]
        else:
            raise ConfigError(f"criterion {name!r} not present in metrics")
    return out
