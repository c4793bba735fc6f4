"""Teach a spatial preposition from three examples and inspect the learned
composition: direction disjunctions accumulate per axis while the distance
statistics build up a range.
"""

import numpy as np

from groundling.spatial import evaluate, extract_primitives, learn_example, project
from groundling.world import WorldObject


def box(obj_id, x, y):
    return WorldObject(
        id=obj_id, pose=(x, y, 0.015), bbox=(0.06, 0.06, 0.03),
        color=(0.5, 0.5, 0.5), size_class=0.06, shape_descriptor=(1.0, 0.7, 0.5),
    )


circle = box("circle", 2.5, 2.0)
examples = [
    box("sq1", 0.8, 2.0),   # strictly left, aligned on y
    box("sq2", 1.0, 1.2),   # left and below
    box("sq3", 0.6, 2.9),   # left and above
]

comp = None
for square in examples:
    relations, distances = extract_primitives(square, circle)
    comp = learn_example(comp, relations, distances)
    print(f"after {square.id}: " + "  ".join(
        f"{axis}:{sorted(r.value for r in comp.allowed[axis])}" for axis in ("x", "y", "z")
    ))

print("\ndistance statistics:")
for axis in ("x", "y"):
    stats = comp.dist[axis]
    print(f"  {axis}: n={stats.count} min={stats.min:.2f} max={stats.max:.2f} "
          f"mean={stats.mean:.2f}")

probe_left = box("probe", 1.0, 2.1)    # inside the learned distance range
probe_right = box("probe", 3.4, 2.0)
print(f"\nprobe on the left evaluates: "
      f"{evaluate(comp, probe_left, circle, workspace=(4, 4, 1))}")
print(f"probe on the right evaluates: "
      f"{evaluate(comp, probe_right, circle, workspace=(4, 4, 1))}")

rng = np.random.default_rng(0)
target = project(comp, circle, rng, workspace=(4, 4, 1), probe_bbox=(0.06, 0.06, 0.03))
print(f"projected placement point: ({target[0]:.2f}, {target[1]:.2f}, {target[2]:.2f})")
