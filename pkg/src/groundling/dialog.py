"""Mixed-initiative interaction state: events, segments, and the stack.

A segment is a contiguous stretch of events serving one purpose; open
segments form a stack whose top is the current dialog focus.  Either
participant may push.  Segment ids encode the tree position (A1's second
child is G12, G12's first child is P121) so transcripts stay navigable.

``categorize`` applies context reinterpretation: the same surface sentence is
a teaching example inside a word-teaching segment, a goal description inside
goal acquisition, and a plain assertion otherwise.  ``next_move`` is the
total policy table mapping (top purpose, progress) to the agent's move.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Optional

from .language import Category, ParseResult


class Purpose(str, Enum):
    LEARN_VERB = "learn-verb"
    LEARN_WORD_PROPERTY = "learn-word-property"
    TEACH_WORD_EXAMPLES = "teach-word-examples"
    LEARN_PREP = "learn-prep"
    ACQUIRE_GOAL = "acquire-goal"
    ACQUIRE_ACTIONS = "acquire-actions"
    RESOLVE_REFERENCE = "resolve-reference"
    EXECUTE_COMMAND = "execute-command"
    ANSWER_QUERY = "answer-query"
    IDLE = "idle"


SEGMENT_LETTER = {
    Purpose.LEARN_VERB: "A",
    Purpose.ACQUIRE_ACTIONS: "A",
    Purpose.LEARN_WORD_PROPERTY: "O",
    Purpose.TEACH_WORD_EXAMPLES: "O",
    Purpose.LEARN_PREP: "P",
    Purpose.ACQUIRE_GOAL: "G",
    Purpose.RESOLVE_REFERENCE: "R",
    Purpose.EXECUTE_COMMAND: "E",
    Purpose.ANSWER_QUERY: "Q",
    Purpose.IDLE: "I",
}


class Status(str, Enum):
    OPEN = "open"
    ACHIEVED = "achieved"
    ABANDONED = "abandoned"


class Originator(str, Enum):
    AGENT = "agent"
    INSTRUCTOR = "instructor"


class PopUnachieved(RuntimeError):
    pass


LEARNING_KINDS = ("word-map", "percept-train", "prep-learn", "goal-learn", "rule-learn")

# Which purposes may host which learning-event kinds (purpose soundness).
LEARNING_PURPOSES = {
    "word-map": {Purpose.LEARN_WORD_PROPERTY},
    "percept-train": {
        Purpose.TEACH_WORD_EXAMPLES,
        Purpose.RESOLVE_REFERENCE,
        Purpose.LEARN_WORD_PROPERTY,
    },
    "prep-learn": {Purpose.LEARN_PREP},
    "goal-learn": {Purpose.ACQUIRE_GOAL},
    "rule-learn": {Purpose.ACQUIRE_ACTIONS, Purpose.LEARN_VERB},
}


@dataclass
class Event:
    kind: str                      # "action" | "dialog" | "learning"
    episode_index: int
    segment_id: Optional[str]
    payload: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "episode_index": self.episode_index,
            "segment_id": self.segment_id,
            "event_variant": self.kind,
            "payload": self.payload,
        }


@dataclass
class Segment:
    id: str
    purpose: Purpose
    originator: Originator
    context: dict = field(default_factory=dict)
    events: list[Event] = field(default_factory=list)
    status: Status = Status.OPEN
    parent: Optional[str] = None
    child_count: int = 0

    def achieved(self) -> bool:
        return self.status == Status.ACHIEVED


class InteractionStack:
    """LIFO of open segments plus a registry of every segment ever opened."""

    def __init__(self):
        self._open: list[Segment] = []
        self.segments: dict[str, Segment] = {}
        self._root_count = 0

    def top(self) -> Optional[Segment]:
        return self._open[-1] if self._open else None

    def open_segments(self) -> list[Segment]:
        return list(self._open)

    def push(
        self,
        purpose: Purpose,
        originator: Originator,
        context: Optional[dict] = None,
    ) -> Segment:
        parent = self.top()
        if parent is None:
            self._root_count += 1
            digits = str(self._root_count)
        else:
            parent.child_count += 1
            digits = parent.id[1:] + str(parent.child_count)
        segment = Segment(
            id=f"{SEGMENT_LETTER[purpose]}{digits}",
            purpose=purpose,
            originator=originator,
            context=context or {},
            parent=parent.id if parent else None,
        )
        self._open.append(segment)
        self.segments[segment.id] = segment
        return segment

    def pop_achieved(self) -> Segment:
        top = self.top()
        if top is None:
            raise PopUnachieved("stack is empty")
        if top.status != Status.ACHIEVED:
            raise PopUnachieved(f"{top.id} ({top.purpose.value}) is not achieved")
        return self._open.pop()

    def abandon_top(self) -> Optional[Segment]:
        top = self.top()
        if top is None:
            return None
        top.status = Status.ABANDONED
        return self._open.pop()

    def ids(self) -> list[str]:
        return [s.id for s in self._open]


def categorize(parse: ParseResult, stack: InteractionStack, speaker: str = "instructor") -> str:
    """Dialog-event class for an utterance, reinterpreted by segment context."""
    top = stack.top()
    purpose = top.purpose if top else None

    if parse.category == Category.VERB_COMMAND:
        if purpose == Purpose.ACQUIRE_ACTIONS:
            return "instructed-action"
        return "verb-command"
    if parse.category in (Category.DESCRIPTIVE, Category.GOAL_DESCRIPTION):
        if parse.category == Category.GOAL_DESCRIPTION or purpose == Purpose.ACQUIRE_GOAL:
            return "goal-description"
        if purpose == Purpose.LEARN_PREP:
            return "prep-example"
        if parse.predicate_word is not None:
            return "teaching-example"
        return "descriptive-sentence"
    if parse.category == Category.ATTRIBUTE_QUERY:
        return "attribute-query"
    if parse.category == Category.SPATIAL_QUERY:
        return "spatial-query"
    if parse.category == Category.WHICH_ANSWER:
        return "which-answer"
    if parse.category == Category.PROPERTY_ANSWER:
        return "property-answer"
    if parse.category == Category.YES_NO:
        return "yes-no"
    if parse.category == Category.GET_NEXT_TASK:
        return "get-next-task"
    if parse.category == Category.NP_FRAGMENT:
        if purpose == Purpose.RESOLVE_REFERENCE:
            return "which-answer"
        return "np-fragment"
    return "unparseable"


@dataclass
class AgentMove:
    kind: str                       # "utterance" | "internal" | "external" | "wait"
    template: Optional[str] = None
    bindings: Optional[dict] = None
    text: Optional[str] = None
    action: Any = None
    note: Optional[str] = None

    @classmethod
    def utterance(cls, template: str, bindings: Optional[dict] = None) -> "AgentMove":
        return cls(kind="utterance", template=template, bindings=bindings or {})

    @classmethod
    def internal(cls, note: str) -> "AgentMove":
        return cls(kind="internal", note=note)

    @classmethod
    def external(cls, action: Any) -> "AgentMove":
        return cls(kind="external", action=action)

    @classmethod
    def wait(cls) -> "AgentMove":
        return cls(kind="wait")


@dataclass
class AgentView:
    """The narrow slice of agent state the dialog policy consults."""

    goal_met: Callable[[Segment], bool]
    ready_action: Callable[[Segment], Any]


def next_move(stack: InteractionStack, view: AgentView) -> AgentMove:
    """Total policy: one defined move for every (purpose, progress) pair."""
    seg = stack.top()
    if seg is None or seg.purpose == Purpose.IDLE:
        return AgentMove.utterance("ask_next_task")

    ctx = seg.context
    if seg.purpose == Purpose.LEARN_WORD_PROPERTY:
        if not ctx.get("asked"):
            return AgentMove.utterance("ask_property", {"word": ctx["word"]})
        return AgentMove.wait()

    if seg.purpose == Purpose.TEACH_WORD_EXAMPLES:
        if ctx.get("pending_example"):
            return AgentMove.internal("train-example")
        return AgentMove.wait()

    if seg.purpose == Purpose.RESOLVE_REFERENCE:
        if ctx.get("answer_parse") is not None:
            return AgentMove.internal("resolve-answer")
        if not ctx.get("asked"):
            return AgentMove.utterance("ask_which", {"np": ctx["np_text"]})
        return AgentMove.wait()

    if seg.purpose == Purpose.LEARN_PREP:
        if ctx.get("example_parse") is not None:
            return AgentMove.internal("learn-prep-example")
        if not ctx.get("asked"):
            return AgentMove.utterance("ask_prep_example", {"prep": ctx["word"]})
        return AgentMove.wait()

    if seg.purpose == Purpose.ACQUIRE_GOAL:
        if ctx.get("goal_parse") is not None:
            return AgentMove.internal("store-goal")
        if not ctx.get("asked"):
            return AgentMove.utterance("ask_goal", {"verb": ctx["verb"]})
        return AgentMove.wait()

    if seg.purpose == Purpose.ACQUIRE_ACTIONS:
        if ctx.get("pending_action_parse") is not None:
            return AgentMove.internal("execute-instructed")
        if view.goal_met(seg):
            return AgentMove.internal("actions-complete")
        action = view.ready_action(seg)
        if action is not None:
            # an instructed action unblocked the agent's own knowledge
            return AgentMove.external(action)
        if not ctx.get("asked"):
            return AgentMove.utterance("ask_next_action")
        return AgentMove.wait()

    if seg.purpose == Purpose.EXECUTE_COMMAND:
        if view.goal_met(seg):
            return AgentMove.internal("command-complete")
        action = view.ready_action(seg)
        if action is not None:
            return AgentMove.external(action)
        return AgentMove.internal("no-execution-knowledge")

    if seg.purpose == Purpose.LEARN_VERB:
        return AgentMove.internal("advance-verb-acquisition")

    if seg.purpose == Purpose.ANSWER_QUERY:
        return AgentMove.internal("answer-query")

    return AgentMove.wait()
