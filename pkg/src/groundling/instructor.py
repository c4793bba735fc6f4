"""Scripted instructor: answers the agent's questions from ground truth.

The instructor plays the human's side of the protocol.  It sees the scene's
generator labels and exact poses (perfect information), tracks which object
each of its own referring expressions meant so it can answer
which-questions with a click, demonstrates prepositions with true current
arrangements, and decomposes verbs into primitive instructions, optionally
slipping in superfluous point-to steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .agent import ASK_TEMPLATES, Agent
from .dialog import AgentMove
from .language import tokenize
from .spatial import Relation, extract_primitives
from .world import NamedLocation, Scene

GENERIC_WORDS = {"the", "a", "an", "object", "one", "thing", "block", "this", "that"}

# surface forms the instructor uses for each canonical preposition
PREP_SURFACE = {
    "in": "in",
    "left of": "to the left of",
    "right of": "to the right of",
    "in front of": "in front of",
    "behind": "behind",
    "near": "near",
    "far from": "far from",
}


@dataclass
class VerbTask:
    verb: str
    command: str
    primary: str                      # object id
    relation: str                     # canonical preposition of the goal
    reference: tuple[str, str]        # EntityRef
    do_text: str                      # the command's direct-object phrase
    ref_text: str                     # how the instructor names the reference


@dataclass
class InstructorLog:
    utterances: int = 0
    agent_asks: int = 0
    taught_words: dict = field(default_factory=dict)      # word -> examples
    taught_preps: dict = field(default_factory=dict)      # prep -> examples
    superfluous: int = 0


class ScriptedInstructor:
    def __init__(
        self,
        agent: Agent,
        word_property: dict[str, str],
        rng: np.random.Generator,
        superfluous_rate: float = 0.0,
    ):
        self.agent = agent
        self.word_property = word_property
        self.rng = rng
        self.superfluous_rate = superfluous_rate
        self.intents: dict[str, str] = {}
        self.task: Optional[VerbTask] = None
        self.log = InstructorLog()
        self._injected_this_task = False

    # ------------------------------------------------------------------

    def describe(self, obj_id: str) -> str:
        labels = self.agent.scene.truth[obj_id]
        return f"the {labels['size']} {labels['color']} {labels['shape']}"

    @staticmethod
    def _np_key(text: str) -> str:
        return " ".join(w for w in tokenize(text) if w not in GENERIC_WORDS)

    def intend(self, text: str, obj_id: str) -> None:
        self.intents[self._np_key(text)] = obj_id

    def say(self, text: str, click: Optional[str] = None) -> list[AgentMove]:
        """Send one utterance, then keep answering the agent until it stops
        asking.  Returns the last batch of agent moves."""
        self.log.utterances += 1
        moves = self.agent.submit_utterance(text, click=click)
        return self._autoreply(moves)

    def _autoreply(self, moves: list[AgentMove]) -> list[AgentMove]:
        last_exchange = None
        repeats = 0
        for _ in range(120):
            asks = [
                m for m in moves if m.kind == "utterance" and m.template in ASK_TEMPLATES
            ]
            self.log.agent_asks += len(asks)
            if not asks:
                return moves
            reply = self._reply(asks[-1])
            if reply is None:
                return moves
            exchange = (asks[-1].text, reply)
            if exchange == last_exchange:
                repeats += 1
                if repeats >= 3:
                    # the same instruction keeps failing; give up on this task
                    self.agent.submit_utterance("never mind")
                    return moves
            else:
                repeats = 0
            last_exchange = exchange
            text, click = reply
            self.log.utterances += 1
            moves = self.agent.submit_utterance(text, click=click)
        raise RuntimeError("instructor reply loop did not terminate")

    # ------------------------------------------------------------------
    # answering the agent's questions
    # ------------------------------------------------------------------

    def _reply(self, ask: AgentMove) -> Optional[tuple[str, Optional[str]]]:
        if ask.template == "ask_property":
            word = ask.bindings["word"]
            prop = self.word_property.get(word)
            return (prop, None) if prop else None
        if ask.template == "ask_which":
            obj_id = self._intended(ask.bindings["np"])
            if obj_id is None:
                return None
            return ("this one", obj_id)
        if ask.template == "ask_prep_example":
            return self._demonstrate(ask.bindings["prep"])
        if ask.template == "ask_goal":
            if self.task is None:
                return None
            surface = PREP_SURFACE.get(self.task.relation, self.task.relation)
            return (f"The {self.task.do_text} is {surface} {self.task.ref_text}.", None)
        if ask.template == "ask_next_action":
            return self._next_action()
        return None

    def _intended(self, np_text: str) -> Optional[str]:
        key = self._np_key(np_text)
        if key in self.intents:
            return self.intents[key]
        words = [w for w in tokenize(np_text) if w not in GENERIC_WORDS]
        if not words:
            return self.task.primary if self.task else None
        matches = [
            oid
            for oid, labels in self.agent.scene.truth.items()
            if all(w in labels.values() for w in words)
        ]
        if len(matches) == 1:
            return matches[0]
        if self.task is not None and self.task.primary in matches:
            return self.task.primary
        return matches[0] if matches else None

    def _demonstrate(self, prep: str) -> Optional[tuple[str, Optional[str]]]:
        scene = self.agent.scene
        excluded = {scene.arm.holding}
        if self.task is not None:
            # demonstrate with bystanders, not the object under discussion
            excluded.add(self.task.primary)
        if prep == "in":
            for oid, obj in sorted(scene.objects.items()):
                if oid in excluded:
                    continue
                for loc in scene.locations.values():
                    if loc.contains_xy(obj.pose[0], obj.pose[1]):
                        return (f"This is in the {loc.name}.", oid)
            return None
        axis, relation = {
            "left of": ("x", Relation.LESS),
            "right of": ("x", Relation.GREATER),
            "in front of": ("y", Relation.LESS),
            "behind": ("y", Relation.GREATER),
        }.get(prep, (None, None))
        if axis is None:
            return None
        ids = [i for i in sorted(scene.objects) if i not in excluded]
        for a in ids:
            for b in ids:
                if b == a:
                    continue
                relations, _ = extract_primitives(scene.objects[a], scene.objects[b])
                if relations[axis] is relation:
                    ref_text = self.describe(b)
                    self.intend(ref_text, b)
                    surface = PREP_SURFACE.get(prep, prep)
                    return (f"This is {surface} {ref_text}.", a)
        return None

    def _next_action(self) -> Optional[tuple[str, Optional[str]]]:
        task = self.task
        if task is None:
            return None
        scene = self.agent.scene
        if (
            self.superfluous_rate > 0.0
            and not self._injected_this_task
            and self.rng.uniform() < self.superfluous_rate
        ):
            self._injected_this_task = True
            self.log.superfluous += 1
            target = sorted(scene.objects)[int(self.rng.integers(len(scene.objects)))]
            return ("Point to this.", target)
        holding = scene.arm.holding
        if holding is not None and holding != task.primary:
            text = self.describe(holding)
            self.intend(text, holding)
            return (f"Put down {text}.", None)
        if holding is None:
            self.intend(task.do_text, task.primary)
            return (f"Pick up the {task.do_text}.", None)
        surface = PREP_SURFACE.get(task.relation, task.relation)
        self.intend(task.do_text, task.primary)
        return (f"Put the {task.do_text} {surface} {task.ref_text}.", None)

    # ------------------------------------------------------------------

    def begin_task(self, task: VerbTask) -> None:
        self.task = task
        self._injected_this_task = False
        self.intents = {}
        self.intend(task.do_text, task.primary)

    def end_task(self) -> None:
        self.task = None
