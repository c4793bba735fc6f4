"""Qualitative spatial relations and learned preposition semantics.

Per axis, two entities are aligned (bounding-box intervals overlap),
greater-than, or less-than; distances are closest-surface gaps.  A learned
preposition is a composition: a conjunction across axes of per-axis relation
disjunctions, plus per-axis distance statistics.  The first example pins the
composition to exactly what was observed; later examples only widen the
direction sets while they sharpen the distance picture.  Compositions can be
evaluated against a pair of entities, or projected to a concrete placement
point near a reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np

from .world import DEFAULT_WORKSPACE, NamedLocation, Vec3, WorldObject

AXES = ("x", "y", "z")

# A distance window only constrains an axis once it has two examples and the
# observed span is small relative to the workspace; a wide span means
# distance is uninformative for that preposition on that axis.
WINDOW_MIN_COUNT = 2
WINDOW_SPAN_FRACTION = 0.5
WINDOW_SLACK_FRACTION = 0.2
WINDOW_MIN_SLACK = 0.02


class Relation(str, Enum):
    ALIGNED = "aligned"
    GREATER = "greater-than"
    LESS = "less-than"


class UntrainedComposition(ValueError):
    pass


Entity = Union[WorldObject, NamedLocation]


def _interval(entity: Entity, axis: int) -> tuple[float, float]:
    return entity.interval(axis)


def extract_primitives(
    primary: Entity, reference: Entity
) -> tuple[dict[str, Relation], dict[str, float]]:
    """Directional primitive and surface gap per axis for (primary, reference)."""
    relations: dict[str, Relation] = {}
    distances: dict[str, float] = {}
    for axis_idx, axis in enumerate(AXES):
        p_lo, p_hi = _interval(primary, axis_idx)
        r_lo, r_hi = _interval(reference, axis_idx)
        if p_lo > r_hi:
            relations[axis] = Relation.GREATER
            distances[axis] = p_lo - r_hi
        elif p_hi < r_lo:
            relations[axis] = Relation.LESS
            distances[axis] = r_lo - p_hi
        else:
            relations[axis] = Relation.ALIGNED
            distances[axis] = 0.0
    return relations, distances


@dataclass
class AxisDistance:
    count: int = 0
    min: float = 0.0
    max: float = 0.0
    mean: float = 0.0

    def update(self, value: float) -> None:
        if self.count == 0:
            self.min = self.max = self.mean = value
        else:
            self.min = min(self.min, value)
            self.max = max(self.max, value)
            self.mean += (value - self.mean) / (self.count + 1)
        self.count += 1

    @property
    def span(self) -> float:
        return self.max - self.min

    def to_json(self) -> dict:
        return {"n": self.count, "min": self.min, "max": self.max, "mean": self.mean}

    @classmethod
    def from_json(cls, doc: dict) -> "AxisDistance":
        return cls(count=doc["n"], min=doc["min"], max=doc["max"], mean=doc["mean"])


@dataclass
class SpatialComposition:
    """Learned meaning of one preposition."""

    allowed: dict[str, set[Relation]] = field(default_factory=lambda: {a: set() for a in AXES})
    dist: dict[str, AxisDistance] = field(default_factory=lambda: {a: AxisDistance() for a in AXES})
    example_count: int = 0
    ever_all_aligned: bool = False

    @property
    def trained(self) -> bool:
        return self.example_count > 0

    def to_json(self) -> dict:
        return {
            "allowed": {a: sorted(r.value for r in self.allowed[a]) for a in AXES},
            "dist": {a: self.dist[a].to_json() for a in AXES},
            "example_count": self.example_count,
            "ever_all_aligned": self.ever_all_aligned,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SpatialComposition":
        comp = cls(
            allowed={a: {Relation(r) for r in doc["allowed"][a]} for a in AXES},
            dist={a: AxisDistance.from_json(doc["dist"][a]) for a in AXES},
            example_count=doc["example_count"],
            ever_all_aligned=doc["ever_all_aligned"],
        )
        return comp


def learn_example(
    comp: Optional[SpatialComposition],
    relations: dict[str, Relation],
    distances: dict[str, float],
) -> SpatialComposition:
    """Fold one observed example into a composition (creating it if needed).

    The first example yields singleton relation sets; later ones union in the
    observed relation per axis and extend the distance statistics.
    """
    if comp is None:
        comp = SpatialComposition()
    for axis in AXES:
        comp.allowed[axis].add(relations[axis])
        comp.dist[axis].update(distances[axis])
    if all(relations[axis] is Relation.ALIGNED for axis in AXES):
        comp.ever_all_aligned = True
    comp.example_count += 1
    return comp


def _window(stats: AxisDistance, extent: float) -> Optional[tuple[float, float]]:
    if stats.count < WINDOW_MIN_COUNT:
        return None
    if stats.span >= WINDOW_SPAN_FRACTION * extent:
        return None
    slack = max(WINDOW_SLACK_FRACTION * stats.span, WINDOW_MIN_SLACK)
    return (stats.min - slack, stats.max + slack)


def evaluate(
    comp: SpatialComposition,
    primary: Entity,
    reference: Entity,
    workspace: Vec3 = DEFAULT_WORKSPACE,
) -> bool:
    """Does the learned composition hold between primary and reference?"""
    if not comp.trained:
        raise UntrainedComposition("composition has no examples")
    relations, distances = extract_primitives(primary, reference)
    for axis_idx, axis in enumerate(AXES):
        if relations[axis] not in comp.allowed[axis]:
            return False
        window = _window(comp.dist[axis], workspace[axis_idx])
        if window is not None and not (window[0] <= distances[axis] <= window[1]):
            return False
    return True


def contains(region: NamedLocation, obj: WorldObject) -> bool:
    """Containment query against a table region (x and y aligned with it)."""
    relations, _ = extract_primitives(obj, region)
    return relations["x"] is Relation.ALIGNED and relations["y"] is Relation.ALIGNED


def project(
    comp: SpatialComposition,
    reference: Entity,
    rng: np.random.Generator,
    workspace: Vec3 = DEFAULT_WORKSPACE,
    probe_bbox: Vec3 = (0.0, 0.0, 0.0),
) -> Vec3:
    """Pick a placement point realizing the composition next to ``reference``.

    One allowed relation is drawn per axis; aligned contributes no offset,
    strict relations offset by the mean observed gap plus both half-extents so
    the realized surface gap matches the examples.  The point is clamped to
    the workspace.
    """
    if not comp.trained:
        raise UntrainedComposition("composition has no examples")
    ref_center = reference.center if isinstance(reference, NamedLocation) else reference.pose
    point = []
    for axis_idx, axis in enumerate(AXES):
        choices = sorted(comp.allowed[axis], key=lambda r: r.value)
        relation = choices[int(rng.integers(len(choices)))] if len(choices) > 1 else choices[0]
        coord = ref_center[axis_idx]
        if relation is not Relation.ALIGNED:
            ref_lo, ref_hi = _interval(reference, axis_idx)
            ref_half = (ref_hi - ref_lo) / 2.0
            offset = comp.dist[axis].mean + ref_half + probe_bbox[axis_idx] / 2.0
            coord += offset if relation is Relation.GREATER else -offset
        point.append(min(max(coord, 0.0), workspace[axis_idx]))
    return (point[0], point[1], point[2])
