"""A quick tour of the simulated tabletop: generate a scene, look at the
percepts, and run the arm through a pick-and-place."""

from groundling.world import PickUp, PutDown, SceneSpec, apply_action, generate_scene, observe

spec = SceneSpec(
    objects=[
        {"color": "red", "size": "small", "shape": "triangle"},
        {"color": "blue", "size": "large", "shape": "square"},
        {"color": "green", "size": "small", "shape": "circle"},
    ],
    seed=11,
)
scene = generate_scene(spec)

print("objects on the table:")
for obj_id, obj in sorted(scene.objects.items()):
    labels = scene.truth[obj_id]
    print(f"  {obj_id}: {labels['size']} {labels['color']} {labels['shape']} at "
          f"({obj.pose[0]:.2f}, {obj.pose[1]:.2f})")

print("\npercepts (note the noisy feature channels, exact poses):")
for percept in observe(scene):
    rgb = ", ".join(f"{v:.2f}" for v in percept.color_features)
    print(f"  {percept.id}: color=({rgb}) size={percept.size_features[0]:.2f}")

print("\npick up o1 and put it inside the pantry region:")
scene = apply_action(scene, PickUp("o1"))
print(f"  arm: {scene.arm.holding}")
scene = apply_action(scene, PutDown(0.86, 0.86))
print(f"  o1 now rests at {scene.objects['o1'].pose}")
print(f"  inside pantry? "
      f"{scene.locations['pantry'].contains_xy(*scene.objects['o1'].pose[:2])}")
