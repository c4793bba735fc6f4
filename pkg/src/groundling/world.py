"""Deterministic simulated tabletop: objects, named locations, an arm, and
the three primitive actions (point-to, pick-up, put-down).

The world is 3-D with a flat table at z=0.  Objects are axis-aligned boxes
that rest on the table (or on top of each other).  ``observe`` emits one
percept per object carrying the raw feature vectors the perceptual
classifiers consume; feature channels get zero-mean Gaussian noise while
poses and bounding boxes stay exact.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

Vec3 = tuple[float, float, float]

DEFAULT_WORKSPACE: Vec3 = (1.0, 1.0, 0.5)
GRIPPER_HEIGHT = 0.4
# Default per-channel observation noise; shape is deliberately the noisiest
# channel so shape words stay harder to learn than color or size words.
DEFAULT_NOISE = {"color": 0.02, "size": 0.02, "shape": 0.08}
# Footprint area divisor that brings typical object areas into [0, 1].
SIZE_AREA_NORM = 0.02

LOCATION_NAMES = ("stove", "dishwasher", "garbage", "pantry")


class WorldError(Exception):
    """Base class for world interaction failures."""


class ActionUnavailable(WorldError):
    """The action's preconditions do not hold in the current scene."""


class PlacementBlocked(WorldError):
    """Put-down target collides with an object it cannot stack on."""


class PlacementInfeasible(WorldError):
    """A scene spec cannot be realized inside the workspace."""


@dataclass(frozen=True)
class WorldObject:
    id: str
    pose: Vec3                    # center (x, y, z)
    bbox: Vec3                    # extents (width, depth, height)
    color: Vec3                   # rgb, each in [0, 1]
    size_class: float             # generator scale parameter
    shape_descriptor: Vec3        # (aspect_ratio, compactness, corner_count_norm)
    graspable: bool = True

    def interval(self, axis: int) -> tuple[float, float]:
        """Closed extent interval of the bounding box along axis 0/1/2."""
        half = self.bbox[axis] / 2.0
        return (self.pose[axis] - half, self.pose[axis] + half)

    @property
    def top(self) -> float:
        return self.pose[2] + self.bbox[2] / 2.0

    def footprint(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return (self.interval(0), self.interval(1))


@dataclass(frozen=True)
class NamedLocation:
    name: str
    region: tuple[float, float, float, float]   # (xmin, ymin, xmax, ymax)

    def interval(self, axis: int) -> tuple[float, float]:
        """Locations behave as z-thin boxes on the table surface."""
        if axis == 0:
            return (self.region[0], self.region[2])
        if axis == 1:
            return (self.region[1], self.region[3])
        return (0.0, 0.0)

    @property
    def center(self) -> Vec3:
        return (
            (self.region[0] + self.region[2]) / 2.0,
            (self.region[1] + self.region[3]) / 2.0,
            0.0,
        )

    def contains_xy(self, x: float, y: float) -> bool:
        return self.region[0] <= x <= self.region[2] and self.region[1] <= y <= self.region[3]


@dataclass(frozen=True)
class ArmState:
    holding: Optional[str] = None

    @property
    def empty(self) -> bool:
        return self.holding is None


@dataclass(frozen=True)
class PointTo:
    target: str


@dataclass(frozen=True)
class PickUp:
    target: str


@dataclass(frozen=True)
class PutDown:
    x: float
    y: float


PrimitiveAction = Union[PointTo, PickUp, PutDown]


@dataclass(frozen=True)
class Scene:
    objects: dict[str, WorldObject]
    locations: dict[str, NamedLocation]
    arm: ArmState = ArmState()
    tick: int = 0
    workspace: Vec3 = DEFAULT_WORKSPACE
    noise_seed: int = 0
    noise_sigma: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_NOISE))
    pointed_at: Optional[tuple[str, int]] = None    # (object id, expiry tick)
    # Generator labels, kept for the scripted instructor; never part of percepts.
    truth: dict[str, dict[str, str]] = field(default_factory=dict)

    def object(self, obj_id: str) -> WorldObject:
        try:
            return self.objects[obj_id]
        except KeyError:
            raise ActionUnavailable(f"no object {obj_id!r} in scene") from None

    def pointed_object(self) -> Optional[str]:
        if self.pointed_at is not None and self.tick < self.pointed_at[1]:
            return self.pointed_at[0]
        return None


@dataclass(frozen=True)
class ObjectPercept:
    id: str
    pose: Vec3
    bbox: Vec3
    color_features: tuple[float, ...]
    size_features: tuple[float, ...]
    shape_features: tuple[float, ...]

    def features(self, channel: str) -> tuple[float, ...]:
        return getattr(self, f"{channel}_features")


def _footprints_overlap(a_x, a_y, b_x, b_y) -> bool:
    """Strict interior overlap of two xy footprints (touching edges is fine)."""
    return a_x[0] < b_x[1] and b_x[0] < a_x[1] and a_y[0] < b_y[1] and b_y[0] < a_y[1]


def _within(inner: tuple[float, float], outer: tuple[float, float], eps: float = 1e-9) -> bool:
    return inner[0] >= outer[0] - eps and inner[1] <= outer[1] + eps


def resting_height(scene: Scene, obj: WorldObject, x: float, y: float) -> float:
    """Resting center-z for placing ``obj`` centered at (x, y).

    Rests on the table unless the footprint overlaps existing objects; then
    the object may stack cleanly on the topmost one, provided its footprint
    fits inside the support's.  Anything else is blocked.
    """
    half_w, half_d = obj.bbox[0] / 2.0, obj.bbox[1] / 2.0
    fx, fy = (x - half_w, x + half_w), (y - half_d, y + half_d)
    overlapped = [
        o for o in scene.objects.values()
        if o.id != obj.id and _footprints_overlap(fx, fy, o.interval(0), o.interval(1))
    ]
    if not overlapped:
        return obj.bbox[2] / 2.0
    support = max(overlapped, key=lambda o: o.top)
    if _within(fx, support.interval(0)) and _within(fy, support.interval(1)):
        return support.top + obj.bbox[2] / 2.0
    raise PlacementBlocked(
        f"({x:.3f}, {y:.3f}) collides with {sorted(o.id for o in overlapped)}"
    )


def apply_action(scene: Scene, action: PrimitiveAction) -> Scene:
    """Apply one primitive action, returning the successor scene.

    Raises ActionUnavailable / PlacementBlocked without advancing the tick
    when preconditions fail.
    """
    if isinstance(action, PickUp):
        obj = scene.object(action.target)
        if not scene.arm.empty:
            raise ActionUnavailable(f"arm already holding {scene.arm.holding}")
        if not obj.graspable:
            raise ActionUnavailable(f"{obj.id} is not graspable")
        for other in scene.objects.values():
            if other.id != obj.id and _rests_on(other, obj):
                raise ActionUnavailable(f"{other.id} is stacked on {obj.id}")
        lifted = replace(obj, pose=(obj.pose[0], obj.pose[1], GRIPPER_HEIGHT))
        objects = dict(scene.objects)
        objects[obj.id] = lifted
        return replace(scene, objects=objects, arm=ArmState(obj.id), tick=scene.tick + 1)

    if isinstance(action, PutDown):
        if scene.arm.empty:
            raise ActionUnavailable("arm is empty")
        w, d, _ = scene.workspace
        if not (0.0 <= action.x <= w and 0.0 <= action.y <= d):
            raise ActionUnavailable(f"({action.x}, {action.y}) outside workspace")
        obj = scene.object(scene.arm.holding)
        z = resting_height(scene, obj, action.x, action.y)
        placed = replace(obj, pose=(action.x, action.y, z))
        objects = dict(scene.objects)
        objects[obj.id] = placed
        return replace(scene, objects=objects, arm=ArmState(None), tick=scene.tick + 1)

    if isinstance(action, PointTo):
        scene.object(action.target)
        return replace(
            scene,
            pointed_at=(action.target, scene.tick + 2),   # visible for one tick
            tick=scene.tick + 1,
        )

    raise ActionUnavailable(f"unknown action {action!r}")


def _rests_on(upper: WorldObject, lower: WorldObject) -> bool:
    if abs((upper.pose[2] - upper.bbox[2] / 2.0) - lower.top) > 1e-6:
        return False
    return _footprints_overlap(
        upper.interval(0), upper.interval(1), lower.interval(0), lower.interval(1)
    )


def observe(scene: Scene) -> list[ObjectPercept]:
    """One percept per object with noisy feature channels.

    Deterministic for a given (scene, noise_seed, tick): re-observing an
    unchanged scene yields identical percepts.
    """
    percepts = []
    for idx, obj_id in enumerate(sorted(scene.objects)):
        obj = scene.objects[obj_id]
        rng = np.random.default_rng([scene.noise_seed, scene.tick, idx])
        sigma = scene.noise_sigma
        color = np.clip(np.asarray(obj.color) + rng.normal(0.0, sigma["color"], 3), 0.0, 1.0)
        area = obj.bbox[0] * obj.bbox[1] / SIZE_AREA_NORM
        size = np.clip(np.asarray([area]) + rng.normal(0.0, sigma["size"], 1), 0.0, 1.0)
        shape = np.clip(
            np.asarray(obj.shape_descriptor) + rng.normal(0.0, sigma["shape"], 3), 0.0, 1.0
        )
        percepts.append(
            ObjectPercept(
                id=obj.id,
                pose=obj.pose,
                bbox=obj.bbox,
                color_features=tuple(color),
                size_features=tuple(size),
                shape_features=tuple(shape),
            )
        )
    return percepts


# --- scene generation -------------------------------------------------------

# Shape classes are multimodal: one shape word covers several disjoint
# descriptor regions (outline variants), which is what makes shape words
# need several examples while a color needs one.
DEFAULT_PALETTE = {
    "colors": [
        {"name": "red", "rgb": [0.90, 0.10, 0.10]},
        {"name": "blue", "rgb": [0.10, 0.20, 0.90]},
        {"name": "green", "rgb": [0.10, 0.80, 0.20]},
        {"name": "orange", "rgb": [0.95, 0.55, 0.10]},
    ],
    "sizes": [
        {"name": "small", "scale": 0.06},
        {"name": "large", "scale": 0.11},
    ],
    "shapes": [
        {
            "name": "circle",
            "variants": [[0.75, 0.21, 0.32], [0.94, 0.97, 0.97], [0.03, 0.53, 0.96]],
            "aspect": 1.0,
        },
        {
            "name": "square",
            "variants": [[0.95, 0.94, 0.48], [0.55, 0.03, 0.03], [0.03, 0.97, 0.03]],
            "aspect": 1.0,
        },
        {
            "name": "triangle",
            "variants": [[0.97, 0.03, 0.61], [0.44, 0.97, 0.59], [0.03, 0.13, 0.97]],
            "aspect": 1.0,
        },
        {
            "name": "rectangle",
            "variants": [[0.83, 0.52, 0.97], [0.03, 0.61, 0.31], [0.97, 0.03, 0.03]],
            "aspect": 0.5,
        },
    ],
}

DEFAULT_LOCATIONS = {
    "stove": (0.03, 0.03, 0.25, 0.25),
    "dishwasher": (0.75, 0.03, 0.97, 0.25),
    "garbage": (0.03, 0.75, 0.25, 0.97),
    "pantry": (0.75, 0.75, 0.97, 0.97),
}

# Per-object perturbation around the chosen variant descriptor.
SHAPE_DESCRIPTOR_JITTER = 0.02

SCENE_SPEC_VERSION = 1


@dataclass
class SceneSpec:
    """Declarative scene description; see docs/formats.md for the JSON shape."""

    objects: list[dict]
    workspace: Vec3 = DEFAULT_WORKSPACE
    palette: dict = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_PALETTE)))
    locations: dict[str, tuple[float, float, float, float]] = field(
        default_factory=lambda: dict(DEFAULT_LOCATIONS)
    )
    seed: int = 0
    noise_sigma: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_NOISE))
    shape_jitter: float = SHAPE_DESCRIPTOR_JITTER
    avoid_regions: bool = False     # keep randomly placed objects out of the regions
    spawn_margin: float = 0.0       # keep randomly placed objects off the table edges

    @classmethod
    def from_json(cls, doc: dict) -> "SceneSpec":
        if doc.get("version") != SCENE_SPEC_VERSION:
            raise ValueError(f"unsupported scene spec version {doc.get('version')!r}")
        ws = doc.get("workspace", {})
        workspace = (
            ws.get("w", DEFAULT_WORKSPACE[0]),
            ws.get("d", DEFAULT_WORKSPACE[1]),
            ws.get("h", DEFAULT_WORKSPACE[2]),
        )
        spec = cls(
            objects=list(doc["objects"]),
            workspace=workspace,
            seed=doc.get("seed", 0),
        )
        if "palette" in doc:
            spec.palette = doc["palette"]
        if "locations" in doc:
            spec.locations = {k: tuple(v) for k, v in doc["locations"].items()}
        if "noise_sigma" in doc:
            spec.noise_sigma = dict(doc["noise_sigma"])
        if "shape_jitter" in doc:
            spec.shape_jitter = doc["shape_jitter"]
        if "avoid_regions" in doc:
            spec.avoid_regions = doc["avoid_regions"]
        if "spawn_margin" in doc:
            spec.spawn_margin = doc["spawn_margin"]
        return spec

    def to_json(self) -> dict:
        return {
            "version": SCENE_SPEC_VERSION,
            "workspace": {
                "w": self.workspace[0],
                "d": self.workspace[1],
                "h": self.workspace[2],
            },
            "palette": self.palette,
            "locations": {k: list(v) for k, v in self.locations.items()},
            "objects": self.objects,
            "seed": self.seed,
            "noise_sigma": self.noise_sigma,
            "shape_jitter": self.shape_jitter,
            "avoid_regions": self.avoid_regions,
            "spawn_margin": self.spawn_margin,
        }


def scene_to_json(scene: Scene) -> dict:
    return {
        "objects": [
            {
                "id": o.id,
                "pose": list(o.pose),
                "bbox": list(o.bbox),
                "color": list(o.color),
                "size_class": o.size_class,
                "shape_descriptor": list(o.shape_descriptor),
                "graspable": o.graspable,
            }
            for _, o in sorted(scene.objects.items())
        ],
        "locations": {name: list(loc.region) for name, loc in sorted(scene.locations.items())},
        "arm": scene.arm.holding,
        "tick": scene.tick,
        "workspace": list(scene.workspace),
        "noise_seed": scene.noise_seed,
        "noise_sigma": dict(scene.noise_sigma),
        "pointed_at": list(scene.pointed_at) if scene.pointed_at else None,
        "truth": scene.truth,
    }


def scene_from_json(doc: dict) -> Scene:
    objects = {
        o["id"]: WorldObject(
            id=o["id"],
            pose=tuple(o["pose"]),
            bbox=tuple(o["bbox"]),
            color=tuple(o["color"]),
            size_class=o["size_class"],
            shape_descriptor=tuple(o["shape_descriptor"]),
            graspable=o["graspable"],
        )
        for o in doc["objects"]
    }
    return Scene(
        objects=objects,
        locations={name: NamedLocation(name, tuple(region)) for name, region in doc["locations"].items()},
        arm=ArmState(doc["arm"]),
        tick=doc["tick"],
        workspace=tuple(doc["workspace"]),
        noise_seed=doc["noise_seed"],
        noise_sigma=dict(doc["noise_sigma"]),
        pointed_at=tuple(doc["pointed_at"]) if doc.get("pointed_at") else None,
        truth={k: dict(v) for k, v in doc.get("truth", {}).items()},
    )


def _palette_entry(palette: dict, kind: str, name: str) -> dict:
    for entry in palette[kind]:
        if entry["name"] == name:
            return entry
    raise ValueError(f"{name!r} not in palette {kind}")


def generate_scene(spec: SceneSpec, seed: Optional[int] = None) -> Scene:
    """Deterministically realize a scene spec.

    Objects without explicit poses are placed uniformly at random without
    footprint overlap; PlacementInfeasible when the spec cannot fit.
    """
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    w, d, h = spec.workspace

    total_area = 0.0
    prepared = []
    variant_counters: dict[str, int] = {}
    for entry in spec.objects:
        color_name = entry.get("color") or str(rng.choice([c["name"] for c in spec.palette["colors"]]))
        size_name = entry.get("size") or str(rng.choice([s["name"] for s in spec.palette["sizes"]]))
        shape_name = entry.get("shape") or str(rng.choice([s["name"] for s in spec.palette["shapes"]]))
        color = _palette_entry(spec.palette, "colors", color_name)
        size = _palette_entry(spec.palette, "sizes", size_name)
        shape = _palette_entry(spec.palette, "shapes", shape_name)
        scale = size["scale"]
        aspect = shape.get("aspect", 1.0)
        bbox = (scale, scale * aspect, scale * 0.5)
        if "variants" in shape:
            index = variant_counters.get(shape_name, 0)
            variant_counters[shape_name] = index + 1
            base = shape["variants"][index % len(shape["variants"])]
        else:
            base = shape["descriptor"]
        descriptor = np.clip(
            np.asarray(base, dtype=float) + rng.normal(0.0, spec.shape_jitter, 3),
            0.0,
            1.0,
        )
        prepared.append(
            {
                "labels": {"color": color_name, "size": size_name, "shape": shape_name},
                "rgb": tuple(color["rgb"]),
                "bbox": bbox,
                "scale": scale,
                "descriptor": tuple(descriptor),
                "pose": entry.get("pose"),
            }
        )
        total_area += bbox[0] * bbox[1]

    if total_area > 0.55 * w * d:
        raise PlacementInfeasible(
            f"object footprint area {total_area:.3f} exceeds workspace capacity"
        )

    objects: dict[str, WorldObject] = {}
    truth: dict[str, dict[str, str]] = {}
    footprints: list[tuple[tuple[float, float], tuple[float, float]]] = []
    for i, item in enumerate(prepared):
        obj_id = f"o{i + 1}"
        bw, bd, bh = item["bbox"]
        if item["pose"] is not None:
            x, y = item["pose"][0], item["pose"][1]
            fx, fy = (x - bw / 2, x + bw / 2), (y - bd / 2, y + bd / 2)
        else:
            for attempt in itertools.count():
                if attempt >= 400:
                    raise PlacementInfeasible(f"cannot place object {i + 1} of {len(prepared)}")
                x = rng.uniform(bw / 2 + spec.spawn_margin, w - bw / 2 - spec.spawn_margin)
                y = rng.uniform(bd / 2 + spec.spawn_margin, d - bd / 2 - spec.spawn_margin)
                fx, fy = (x - bw / 2, x + bw / 2), (y - bd / 2, y + bd / 2)
                if any(_footprints_overlap(fx, fy, ox, oy) for ox, oy in footprints):
                    continue
                if spec.avoid_regions and any(
                    _footprints_overlap(fx, fy, (r[0], r[2]), (r[1], r[3]))
                    for r in spec.locations.values()
                ):
                    continue
                break
        footprints.append((fx, fy))
        objects[obj_id] = WorldObject(
            id=obj_id,
            pose=(x, y, bh / 2.0),
            bbox=item["bbox"],
            color=item["rgb"],
            size_class=item["scale"],
            shape_descriptor=item["descriptor"],
        )
        truth[obj_id] = item["labels"]

    locations = {name: NamedLocation(name, region) for name, region in spec.locations.items()}
    return Scene(
        objects=objects,
        locations=locations,
        workspace=spec.workspace,
        noise_seed=spec.seed if seed is None else seed,
        noise_sigma=dict(spec.noise_sigma),
        truth=truth,
    )
