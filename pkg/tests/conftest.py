"""Shared scene and teaching helpers for behavioral tests."""

import pytest

from groundling.agent import Agent
from groundling.world import SceneSpec, apply_action, generate_scene


def build_scene(objects, seed=0, **kwargs):
    return generate_scene(SceneSpec(objects=objects, seed=seed, **kwargs))


def agent_moves(agent, text, click=None):
    """Submit an utterance and return (utterance texts, applied actions)."""
    moves = agent.submit_utterance(text, click=click)
    texts = [m.text for m in moves if m.kind == "utterance"]
    actions = [m.action for m in moves if m.kind == "external"]
    return texts, actions


def teach_vocabulary(agent, properties=("color", "size", "shape")):
    """Teach every palette word on every object, answering property questions
    from the scene's generator labels."""
    for obj_id in sorted(agent.scene.truth):
        labels = agent.scene.truth[obj_id]
        for prop in properties:
            word = labels[prop]
            moves = agent.submit_utterance(f"This is {word}.", click=obj_id)
            asked = any(
                m.kind == "utterance" and m.template == "ask_property" for m in moves
            )
            if asked:
                agent.submit_utterance(prop)


def teach_in(agent, obj_id, location):
    """One containment example teaches the 'in' relation."""
    moves = agent.submit_utterance(f"This is in the {location}.", click=obj_id)
    return moves


@pytest.fixture
def two_object_scene():
    return build_scene(
        [
            {"color": "orange", "shape": "triangle", "size": "small", "pose": [0.5, 0.5]},
            {"color": "blue", "shape": "square", "size": "small", "pose": [0.86, 0.14]},
        ],
        seed=7,
    )


@pytest.fixture
def store_agent(two_object_scene):
    return Agent(two_object_scene, seed=1)
