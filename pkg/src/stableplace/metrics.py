"""Evaluation machinery: per-placement accuracy against settle outcomes,
per-object diversity over ground-truth placement types, and report
tables (objects as columns, average last).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clustering import TypeModel
from .mesh import TriMesh
from .placements import Placement, SettleDiverged, settle
from .rotations import geodesic_distance, z_quotient_distances

DEG = np.pi / 180.0


class DegenerateDiversity(ValueError):
    """Diversity is undefined with fewer than two ground-truth types."""


@dataclass(frozen=True)
class AccuracyThresholds:
    max_delta_d: float = 10.0  # degrees
    max_delta_h: float = 0.02  # meters

    def __post_init__(self):
        if self.max_delta_d <= 0 or self.max_delta_h <= 0:
            raise ValueError("thresholds must be positive")


def placement_accuracy(
    before: Placement, after: Placement, t: AccuracyThresholds = AccuracyThresholds()
) -> bool:
    """True iff the settled pose stayed within the orientation and height
    thresholds of the predicted pose (boundary values accepted)."""
    delta_d = geodesic_distance(before.rotation, after.rotation) / DEG
    delta_h = abs(float(before.translation[2]) - float(after.translation[2]))
    return delta_d <= t.max_delta_d and delta_h <= t.max_delta_h


def diversity_score(
    predicted: list[np.ndarray],
    gt_model: TypeModel,
    initial_type: int,
    match_threshold: float = 15.0 * DEG,
    use_quotient: bool = False,
) -> float:
    """m / (n - 1): matched non-initial ground-truth types over all
    non-initial types.

    A type is matched when some predicted rotation is within
    ``match_threshold`` raw geodesic distance of its mode
    (z-quotient distance instead with use_quotient=True).
    """
    n = len(gt_model.modes)
    if n < 2:
        raise DegenerateDiversity(f"need >= 2 ground-truth types, got {n}")
    if not predicted:
        return 0.0
    matched = 0
    for k, mode in enumerate(gt_model.modes):
        if k == initial_type:
            continue
        if use_quotient:
            hit = any(
                float(z_quotient_distances(r, mode[None, :, :])[0]) <= match_threshold
                for r in predicted
            )
        else:
            hit = any(geodesic_distance(r, mode) <= match_threshold for r in predicted)
        if hit:
            matched += 1
    return matched / (n - 1)


@dataclass
class ObjectEval:
    object_id: str
    accuracy: float
    diversity: float
    diversity_quotient: float  # quotient-matching extension column
    n_predictions: int
    n_stable: int

    def to_json_dict(self) -> dict:
        return {
            "object_id": self.object_id,
            "accuracy": float(self.accuracy),
            "diversity": float(self.diversity),
            "diversity_quotient": float(self.diversity_quotient),
            "n_predictions": self.n_predictions,
            "n_stable": self.n_stable,
        }


@dataclass
class EvalReport:
    rows: list[ObjectEval]

    @property
    def average_accuracy(self) -> float:
        return float(np.mean([r.accuracy for r in self.rows]))

    @property
    def average_diversity(self) -> float:
        return float(np.mean([r.diversity for r in self.rows]))

    def to_json_dict(self) -> dict:
        return {
            "objects": [r.to_json_dict() for r in self.rows],
            "average_accuracy": self.average_accuracy,
            "average_diversity": self.average_diversity,
        }


def evaluate_run(
    predictions: list[Placement],
    mesh: TriMesh,
    gt_model: TypeModel,
    t: AccuracyThresholds = AccuracyThresholds(),
    object_id: str = "object",
    initial_type: int | None = None,
) -> ObjectEval:
    """Settle every prediction and score accuracy / diversity.

    Diverged settles count as inaccurate.  ``initial_type`` defaults to
    the ground-truth type nearest the first prediction; its matches are
    excluded from diversity per the m / (n - 1) rule.
    """
    if not predictions:
        raise ValueError("predictions must be non-empty")
    stable_rotations: list[np.ndarray] = []
    hits = 0
    for p in predictions:
        try:
            after = settle(mesh, p.rotation)
        except SettleDiverged:
            continue
        if placement_accuracy(p, after, t):
            hits += 1
            stable_rotations.append(after.rotation)
    accuracy = hits / len(predictions)

    if initial_type is None:
        d = z_quotient_distances(predictions[0].rotation, np.stack(gt_model.modes))
        initial_type = int(np.argmin(d))
    diversity = diversity_score(stable_rotations, gt_model, initial_type)
    diversity_q = diversity_score(
        stable_rotations, gt_model, initial_type, use_quotient=True
    )
    return ObjectEval(
        object_id=object_id,
        accuracy=accuracy,
        diversity=diversity,
        diversity_quotient=diversity_q,
        n_predictions=len(predictions),
        n_stable=len(stable_rotations),
    )


def format_table(report: EvalReport) -> str:
    """Plain-text metric table: one column per object plus an average
    column, accuracy and diversity rows."""
    ids = [r.object_id for r in report.rows] + ["average"]
    acc = [r.accuracy for r in report.rows] + [report.average_accuracy]
    div = [r.diversity for r in report.rows] + [report.average_diversity]
    divq = [r.diversity_quotient for r in report.rows] + [
        float(np.mean([r.diversity_quotient for r in report.rows]))
    ]
    width = max(12, max(len(i) for i in ids) + 2)
    header = "metric".ljust(20) + "".join(i.rjust(width) for i in ids)
    lines = [header, "-" * len(header)]
    for name, vals in [
        ("accuracy", acc),
        ("diversity", div),
        ("diversity (z-quot)", divq),
    ]:
        lines.append(name.ljust(20) + "".join(f"{v:.3f}".rjust(width) for v in vals))
    return "\n".join(lines)
