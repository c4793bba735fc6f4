"""The canonical verb-teaching dialog, end to end.

One command pulls in a word map (orange), a preposition (in), a goal
pattern, an instructed action sequence, and finally compiled selection
rules -- then the same verb executes silently on a fresh arrangement.
"""

import json

from groundling.agent import Agent
from groundling.world import SceneSpec, generate_scene

spec = SceneSpec(
    objects=[
        {"color": "orange", "shape": "triangle", "size": "small", "pose": [0.5, 0.5]},
        {"color": "blue", "shape": "square", "size": "small", "pose": [0.86, 0.14]},
    ],
    seed=7,
)
agent = Agent(generate_scene(spec), seed=1)

script = [
    ("Store the orange object.", None),
    ("Color.", None),
    ("The orange object is in the pantry.", None),
    ("This is in the dishwasher.", "o2"),
    ("Pick up the orange object.", None),
    ("This one.", "o1"),
    ("Put the orange object in the pantry.", None),
]

for text, click in script:
    print(f"> {text}" + (f"   [click {click}]" if click else ""))
    for move in agent.submit_utterance(text, click=click):
        if move.kind == "utterance":
            print(f"  agent: {move.text}")
        elif move.kind == "external":
            print(f"  agent does: {move.action}")
    print(f"  (stack: {agent.stack.ids() or 'empty'})")

print("\ncompiled rules:")
for rule in agent.rules:
    conditions = " and ".join("-".join(c) for c in rule.conditions)
    print(f"  {rule.rule_id}: if {conditions} then {rule.action}")

# the knowledge transfers: fresh arrangement, silent execution
fresh = generate_scene(SceneSpec(
    objects=[
        {"color": "orange", "shape": "circle", "size": "small", "pose": [0.3, 0.4]},
        {"color": "blue", "shape": "square", "size": "small", "pose": [0.6, 0.6]},
    ],
    seed=23,
))
doc = json.loads(json.dumps(agent.save_state()))
clone = Agent.load_state(doc, fresh)
clone.submit_utterance("This is blue.", click="o2")
clone.submit_utterance("Color.")
print("\nfresh scene, same command:")
print("> Store the orange object.")
for move in clone.submit_utterance("Store the orange object."):
    if move.kind == "utterance":
        print(f"  agent: {move.text}")
    elif move.kind == "external":
        print(f"  agent does: {move.action}")
