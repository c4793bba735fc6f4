"""Teach color words interactively and watch the classifier grow.

The agent starts with no vocabulary at all. The first time it is asked
about a color it says so; one teaching example per color is enough for the
well-separated color space.
"""

from groundling.agent import Agent
from groundling.perception import PropertyKind
from groundling.world import SceneSpec, generate_scene

scene = generate_scene(SceneSpec(objects=[{} for _ in range(6)], seed=3))
agent = Agent(scene, seed=0)


def chat(text, click=None):
    print(f"> {text}" + (f"   [click {click}]" if click else ""))
    for move in agent.submit_utterance(text, click=click):
        if move.kind == "utterance":
            print(f"  agent: {move.text}")


first = sorted(scene.objects)[0]
truth = scene.truth[first]["color"]

chat("What color is this?", click=first)          # untrained: unknown
chat(f"This is {truth}.", click=first)            # raises the property question
chat("color")                                     # word map + training example
chat("What color is this?", click=first)          # now answered

print("\nclassifier state:")
clf = agent.classifiers[PropertyKind.COLOR]
print(f"  {len(clf.examples)} stored example(s)")
for entry in agent.smem.entries():
    print(f"  memory: {entry}")
