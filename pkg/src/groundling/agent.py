"""The instructable agent: lexical processing, interaction management,
grounded comprehension, behavior, and impasse-driven acquisition.

Every instructor input runs the same cycle: parse, categorize against the
open dialog segments, ground words to percept symbols / compositions /
operators, then act.  Any retrieval or grounding failure becomes an impasse
value, which becomes an agent-initiated segment, which becomes a question.
Demonstrated verbs are replayed from episodic memory through the action
model and compiled, by goal regression, into general selection rules.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional, Union

import numpy as np

from .dialog import (
    LEARNING_PURPOSES,
    AgentMove,
    AgentView,
    Event,
    InteractionStack,
    Originator,
    Purpose,
    Status,
    categorize,
    next_move,
)
from .language import (
    Category,
    Lexicon,
    NounPhrase,
    ParseResult,
    WordClass,
    base_lexicon,
    generate,
)
from .language import parse as parse_text
from .memory import (
    ActionConceptNetwork,
    EpisodicMemory,
    PrepMap,
    SemanticMemory,
    WordMap,
)
from .perception import (
    PropertyClassifier,
    PropertyKind,
    SymbolFactory,
    classifier_bank,
)
from .spatial import SpatialComposition, UntrainedComposition, evaluate, learn_example
from .spatial import extract_primitives as extract_prims
from .spatial import project as project_point
from .world import (
    GRIPPER_HEIGHT,
    ActionUnavailable,
    NamedLocation,
    PickUp,
    PlacementBlocked,
    PointTo,
    PrimitiveAction,
    PutDown,
    Scene,
    WorldError,
    WorldObject,
    apply_action,
    observe,
    resting_height,
)

ASK_TEMPLATES = frozenset(
    {"ask_property", "ask_which", "ask_prep_example", "ask_goal", "ask_next_action"}
)

MAX_EXECUTION_STEPS = 12
MAX_PROJECTION_RETRIES = 8
SAVE_VERSION = 1

EntityRef = tuple[str, str]          # ("object", id) | ("location", name)


class ReplayDivergence(RuntimeError):
    pass


@dataclass(frozen=True)
class Impasse:
    kind: str                         # unknown-word | unresolved-reference |
    word: Optional[str] = None        # no-execution-knowledge | unknown-goal
    role: Optional[str] = None
    np: Optional[NounPhrase] = None
    candidates: tuple = ()
    operator_id: Optional[str] = None
    verb: Optional[str] = None


@dataclass(frozen=True)
class LearnedRule:
    """Generalized action-selection rule compiled from a demonstration."""

    rule_id: str
    for_operator: str
    conditions: tuple[tuple, ...]
    action: tuple

    def to_json(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "for_operator": self.for_operator,
            "conditions": [list(c) for c in self.conditions],
            "action": list(self.action),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "LearnedRule":
        return cls(
            rule_id=doc["rule_id"],
            for_operator=doc["for_operator"],
            conditions=tuple(tuple(c) for c in doc["conditions"]),
            action=tuple(doc["action"]),
        )


@dataclass
class GroundedCommand:
    operator_id: str
    network: ActionConceptNetwork
    bindings: dict[str, Any] = field(default_factory=dict)
    goal: Optional[dict] = None       # {relation, reference: EntityRef, primary: id}


@dataclass(frozen=True)
class _BoxEntity:
    """Minimal bbox entity for spatial queries over episode snapshots."""

    pose: tuple
    bbox: tuple

    def interval(self, axis: int) -> tuple[float, float]:
        half = self.bbox[axis] / 2.0
        return (self.pose[axis] - half, self.pose[axis] + half)

    @property
    def center(self):
        return self.pose


class ActionModel:
    """Simulates primitive action effects on a lightweight state.

    The state is (holding, {id: pose}); bounding boxes are static.  The
    world module is the referee: this model must agree with it everywhere,
    which the test suite checks on fuzzed states.
    """

    def __init__(self, bboxes: dict[str, tuple], graspable: dict[str, bool], workspace):
        self.bboxes = bboxes
        self.graspable = graspable
        self.workspace = workspace

    def _top(self, poses, obj_id) -> float:
        return poses[obj_id][2] + self.bboxes[obj_id][2] / 2.0

    def _xy_overlap(self, poses, a, b) -> bool:
        for axis in (0, 1):
            a_half = self.bboxes[a][axis] / 2.0
            b_half = self.bboxes[b][axis] / 2.0
            if poses[a][axis] + a_half <= poses[b][axis] - b_half:
                return False
            if poses[b][axis] + b_half <= poses[a][axis] - a_half:
                return False
        return True

    def _probe_overlap(self, poses, x, y, bbox, other) -> bool:
        for axis, coord in ((0, x), (1, y)):
            half = bbox[axis] / 2.0
            o_half = self.bboxes[other][axis] / 2.0
            if coord + half <= poses[other][axis] - o_half:
                return False
            if poses[other][axis] + o_half <= coord - half:
                return False
        return True

    def apply(self, state: tuple[Optional[str], dict], action: PrimitiveAction):
        holding, poses = state
        poses = dict(poses)
        if isinstance(action, PickUp):
            if action.target not in poses:
                raise ActionUnavailable(f"no object {action.target!r}")
            if holding is not None:
                raise ActionUnavailable("arm busy")
            if not self.graspable.get(action.target, True):
                raise ActionUnavailable("not graspable")
            for other in poses:
                if other == action.target:
                    continue
                bottom = poses[other][2] - self.bboxes[other][2] / 2.0
                if abs(bottom - self._top(poses, action.target)) <= 1e-6 and self._xy_overlap(
                    poses, other, action.target
                ):
                    raise ActionUnavailable("object is supporting another")
            poses[action.target] = (poses[action.target][0], poses[action.target][1], GRIPPER_HEIGHT)
            return action.target, poses
        if isinstance(action, PutDown):
            if holding is None:
                raise ActionUnavailable("arm empty")
            w, d, _ = self.workspace
            if not (0.0 <= action.x <= w and 0.0 <= action.y <= d):
                raise ActionUnavailable("target outside workspace")
            bbox = self.bboxes[holding]
            overlapped = [
                o
                for o in poses
                if o != holding and self._probe_overlap(poses, action.x, action.y, bbox, o)
            ]
            if not overlapped:
                z = bbox[2] / 2.0
            else:
                support = max(overlapped, key=lambda o: self._top(poses, o))
                s_pose, s_bbox = poses[support], self.bboxes[support]
                fits = True
                for axis, coord in ((0, action.x), (1, action.y)):
                    half = bbox[axis] / 2.0
                    s_half = s_bbox[axis] / 2.0
                    if coord - half < s_pose[axis] - s_half - 1e-9:
                        fits = False
                    if coord + half > s_pose[axis] + s_half + 1e-9:
                        fits = False
                if not fits:
                    raise PlacementBlocked("footprint collision")
                z = self._top(poses, support) + bbox[2] / 2.0
            poses[holding] = (action.x, action.y, z)
            return None, poses
        if isinstance(action, PointTo):
            if action.target not in poses:
                raise ActionUnavailable(f"no object {action.target!r}")
            return holding, poses
        raise ActionUnavailable(f"unknown action {action!r}")


def _action_to_json(action: PrimitiveAction) -> dict:
    if isinstance(action, PickUp):
        return {"type": "pick-up", "target": action.target}
    if isinstance(action, PutDown):
        return {"type": "put-down", "x": action.x, "y": action.y}
    return {"type": "point-to", "target": action.target}


def _action_from_json(doc: dict) -> PrimitiveAction:
    if doc["type"] == "pick-up":
        return PickUp(doc["target"])
    if doc["type"] == "put-down":
        return PutDown(doc["x"], doc["y"])
    return PointTo(doc["target"])


class Agent:
    """One situated learner bound to one scene."""

    def __init__(self, scene: Scene, seed: int = 0, record_episodes: bool = True):
        self.scene = scene
        self.lexicon: Lexicon = base_lexicon()
        self.smem = SemanticMemory()
        self.epmem = EpisodicMemory()
        self.classifiers = classifier_bank()
        self.symbols = SymbolFactory()
        self.stack = InteractionStack()
        self.rng = np.random.default_rng(seed)
        self.rules: list[LearnedRule] = []
        self.transcript: list[Event] = []
        self.pending_click: Optional[str] = None
        self.record_episodes = record_episodes
        self._rule_counter = 0
        self._op_counter = 0
        self._idle_announced = False
        self._percept_cache: Optional[tuple[int, dict]] = None
        self._moves: list[AgentMove] = []
        for network in self._builtin_networks():
            self.smem.store(network)

    # ------------------------------------------------------------------
    # built-in primitive verbs
    # ------------------------------------------------------------------

    @staticmethod
    def _builtin_networks() -> list[ActionConceptNetwork]:
        return [
            ActionConceptNetwork(
                verb="pick up", has_direct_object=True, preposition=None,
                operator_id="op_pick-up", builtin="pick-up",
            ),
            ActionConceptNetwork(
                verb="put down", has_direct_object=True, preposition=None,
                operator_id="op_put-down-free", builtin="put-down-free",
            ),
            ActionConceptNetwork(
                verb="put", has_direct_object=True, preposition="*",
                operator_id="op_put-down-at", builtin="put-down-at",
            ),
            ActionConceptNetwork(
                verb="point to", has_direct_object=True, preposition=None,
                operator_id="op_point-to", builtin="point-to",
            ),
        ]

    def action_model(self) -> ActionModel:
        return ActionModel(
            bboxes={o.id: o.bbox for o in self.scene.objects.values()},
            graspable={o.id: o.graspable for o in self.scene.objects.values()},
            workspace=self.scene.workspace,
        )

    # ------------------------------------------------------------------
    # perception helpers
    # ------------------------------------------------------------------

    def percepts(self) -> dict[str, Any]:
        if self._percept_cache is not None and self._percept_cache[0] == self.scene.tick:
            return self._percept_cache[1]
        table = {p.id: p for p in observe(self.scene)}
        self._percept_cache = (self.scene.tick, table)
        return table

    def classify_object(self, obj_id: str, prop: PropertyKind):
        percept = self.percepts()[obj_id]
        return self.classifiers[prop].classify(percept.features(prop.value))

    def classified_symbols(self, obj_id: str) -> dict[str, Optional[str]]:
        out = {}
        for prop in PropertyKind:
            result = self.classify_object(obj_id, prop)
            out[prop.value] = result[0].id if result else None
        return out

    def describe_object(self, obj_id: str) -> str:
        """Best-effort description from learned words, e.g. "the small red circle"."""
        words = []
        for prop in (PropertyKind.SIZE, PropertyKind.COLOR):
            word = self._word_for(obj_id, prop)
            if word:
                words.append(word)
        head = self._word_for(obj_id, PropertyKind.SHAPE) or "object"
        return "the " + " ".join(words + [head])

    def _word_for(self, obj_id: str, prop: PropertyKind) -> Optional[str]:
        result = self.classify_object(obj_id, prop)
        if result is None:
            return None
        entry = self.smem.retrieve({"kind": "word-map", "symbol": result[0].id})
        return entry.word if entry else None

    # ------------------------------------------------------------------
    # episodes, events, transcript
    # ------------------------------------------------------------------

    def _snapshot(self, **extra) -> dict:
        top = self.stack.top()
        percepts = {
            pid: {
                "pose": list(p.pose),
                "bbox": list(p.bbox),
                "symbols": self.classified_symbols(pid),
            }
            for pid, p in self.percepts().items()
        }
        snap = {
            "tick": self.scene.tick,
            "arm": self.scene.arm.holding,
            "top_segment": top.id if top else None,
            "top_purpose": top.purpose.value if top else None,
            "percepts": percepts,
            "selected_action": None,
            "instructor_utterance": None,
            "agent_utterance": None,
        }
        snap.update(extra)
        return snap

    def _record_episode(self, **extra) -> int:
        if not self.record_episodes:
            return len(self.epmem)
        return self.epmem.record(self._snapshot(**extra))

    def _log_event(self, kind: str, payload: dict) -> Event:
        top = self.stack.top()
        event = Event(
            kind=kind,
            episode_index=max(len(self.epmem) - 1, 0),
            segment_id=top.id if top else None,
            payload=payload,
        )
        self.transcript.append(event)
        if top is not None:
            top.events.append(event)
        return event

    def _emit_learning(self, learn_kind: str, payload: dict) -> None:
        top = self.stack.top()
        allowed = LEARNING_PURPOSES[learn_kind]
        if top is None or top.purpose not in allowed:
            raise RuntimeError(
                f"learning event {learn_kind} outside a {sorted(p.value for p in allowed)} segment"
            )
        self._log_event("learning", {"learning_kind": learn_kind, **payload})

    # ------------------------------------------------------------------
    # public entry points
    # ------------------------------------------------------------------

    def select_object(self, obj_id: str) -> None:
        if obj_id not in self.scene.objects:
            raise ActionUnavailable(f"no object {obj_id!r}")
        self.pending_click = obj_id

    def set_scene(self, scene: Scene) -> None:
        """Swap in a new arrangement between tasks; knowledge persists."""
        while self.stack.top() is not None:
            self.stack.abandon_top()
        self.scene = scene
        self.pending_click = None
        self._percept_cache = None

    def submit_utterance(self, text: str, click: Optional[str] = None) -> list[AgentMove]:
        """Process one instructor input to quiescence; returns the agent's moves."""
        if click is not None:
            self.select_object(click)
        self._moves = []
        if not text or not text.strip():
            return []
        parse = parse_text(text, self.lexicon)
        event_class = categorize(parse, self.stack)
        self._record_episode(instructor_utterance=text)
        self._log_event(
            "dialog",
            {"speaker": "instructor", "class": event_class, "text": text},
        )
        self._idle_announced = False
        self._dispatch(event_class, parse)
        self._run()
        return self._moves

    def tick(self) -> list[AgentMove]:
        """Advance the agent with no new input (e.g. after load)."""
        self._moves = []
        self._run()
        return self._moves

    # ------------------------------------------------------------------
    # dispatch: instructor event -> state changes
    # ------------------------------------------------------------------

    def _dispatch(self, event_class: str, parse: ParseResult) -> None:
        top = self.stack.top()
        handlers = {
            "verb-command": self._on_verb_command,
            "instructed-action": self._on_instructed_action,
            "goal-description": self._on_goal_description,
            "prep-example": self._on_prep_example,
            "teaching-example": self._on_teaching_example,
            "descriptive-sentence": self._on_descriptive,
            "attribute-query": self._on_query,
            "spatial-query": self._on_query,
            "property-answer": self._on_property_answer,
            "which-answer": self._on_which_answer,
            "yes-no": self._on_yes_no,
            "get-next-task": self._on_get_next_task,
            "np-fragment": self._on_fragment,
            "unparseable": self._on_unparseable,
        }
        handlers[event_class](parse)

    def _say(self, template: str, bindings: Optional[dict] = None) -> None:
        move = AgentMove.utterance(template, bindings)
        move.text = generate(template, bindings)
        self._moves.append(move)
        self._record_episode(agent_utterance=move.text)
        self._log_event(
            "dialog",
            {"speaker": "agent", "template": template, "text": move.text},
        )

    # -- commands -----------------------------------------------------------

    def _find_network(self, verb: str, prep: Optional[str]) -> Optional[ActionConceptNetwork]:
        exact = self.smem.retrieve(
            {"kind": "network", "verb": verb, "preposition": prep, "has_direct_object": True}
        )
        if exact is not None:
            return exact
        if prep is not None:
            return self.smem.retrieve(
                {"kind": "network", "verb": verb, "preposition": "*", "has_direct_object": True}
            )
        return None

    def _on_verb_command(self, parse: ParseResult) -> None:
        prep = parse.pps[0][0] if parse.pps else None
        network = self._find_network(parse.verb, prep)
        if network is None and prep is not None:
            base = self._find_network(parse.verb, None)
            if base is not None:
                # the phrase is a spatial reference restricting the direct
                # object, not an operator argument
                parse.direct_object.embedded_pp = parse.pps[0]
                parse.pps = []
                prep = None
                network = base
        if network is None:
            # stage 1: mint the operator and its argument-structure mapping
            self._op_counter += 1
            network = ActionConceptNetwork(
                verb=parse.verb,
                has_direct_object=parse.direct_object is not None,
                preposition=prep,
                operator_id=f"op_{self._op_counter}",
            )
            self.smem.store(network)
            if self.lexicon.word_class(parse.verb) is None:
                self.lexicon.register(parse.verb, WordClass.VERB)
        purpose = Purpose.LEARN_VERB if (
            network.builtin is None and network.goal_pattern is None
        ) else Purpose.EXECUTE_COMMAND
        seg = self.stack.push(
            purpose,
            Originator.AGENT if purpose == Purpose.LEARN_VERB else Originator.INSTRUCTOR,
            context={
                "parse": parse,
                "network": network,
                "verb": parse.verb,
                "grounded": None,
                "start_episode": max(len(self.epmem) - 1, 0),
                "asked": False,
            },
        )
        self._log_event("dialog", {"speaker": "agent", "note": f"opened {seg.id}"})

    def _on_instructed_action(self, parse: ParseResult) -> None:
        seg = self.stack.top()
        seg.context["pending_action_parse"] = parse
        seg.context["asked"] = False

    # -- goal descriptions ----------------------------------------------------

    def _on_goal_description(self, parse: ParseResult) -> None:
        top = self.stack.top()
        if top is None or top.purpose != Purpose.ACQUIRE_GOAL:
            self._on_descriptive(parse)
            return
        top.context["goal_parse"] = parse

    # -- preposition teaching --------------------------------------------------

    def _on_prep_example(self, parse: ParseResult) -> None:
        top = self.stack.top()
        top.context["example_parse"] = parse

    def _on_descriptive(self, parse: ParseResult) -> None:
        if parse.prep is not None:
            seg = self.stack.push(
                Purpose.LEARN_PREP,
                Originator.INSTRUCTOR,
                context={"word": parse.prep, "example_parse": parse, "asked": True},
            )
            return
        if parse.predicate_word is not None:
            self._on_teaching_example(parse)
            return
        self._say("ok")

    def _on_teaching_example(self, parse: ParseResult) -> None:
        word = parse.predicate_word
        self.stack.push(
            Purpose.TEACH_WORD_EXAMPLES,
            Originator.INSTRUCTOR,
            context={"word": word, "example_parse": parse, "pending_example": True},
        )

    # -- replies ----------------------------------------------------------------

    def _on_property_answer(self, parse: ParseResult) -> None:
        top = self.stack.top()
        if top is None or top.purpose != Purpose.LEARN_WORD_PROPERTY:
            self._say("ok")
            return
        if parse.property_kind is None:
            top.context["asked"] = False      # re-ask
            return
        word = top.context["word"]
        prop = parse.property_kind
        existing = self.smem.retrieve({"kind": "word-map", "word": word, "property": prop})
        if existing is None:
            symbol = self.symbols.new_symbol(prop)
            self.smem.store(WordMap(word=word, symbol=symbol, property=prop))
            if self.lexicon.word_class(word) is None:
                self.lexicon.register(word, WordClass.NOUN_ADJ)
            self._emit_learning("word-map", {"word": word, "symbol": symbol.id, "property": prop.value})
        top.status = Status.ACHIEVED

    def _on_which_answer(self, parse: ParseResult) -> None:
        top = self.stack.top()
        if top is None or top.purpose != Purpose.RESOLVE_REFERENCE:
            self._say("ok")
            return
        top.context["answer_parse"] = parse

    def _on_yes_no(self, parse: ParseResult) -> None:
        self._say("ok")

    def _on_get_next_task(self, parse: ParseResult) -> None:
        top = self.stack.top()
        if top is not None:
            abandoned = self.stack.abandon_top()
            self._log_event("dialog", {"speaker": "agent", "note": f"abandoned {abandoned.id}"})

    def _on_fragment(self, parse: ParseResult) -> None:
        self._say("not_understood")

    def _on_unparseable(self, parse: ParseResult) -> None:
        self._say("not_understood")

    # -- queries -----------------------------------------------------------------

    def _on_query(self, parse: ParseResult) -> None:
        self.stack.push(
            Purpose.ANSWER_QUERY,
            Originator.INSTRUCTOR,
            context={"parse": parse},
        )

    # ------------------------------------------------------------------
    # the run loop
    # ------------------------------------------------------------------

    def _view(self) -> AgentView:
        return AgentView(
            goal_met=self._segment_goal_met,
            ready_action=self._segment_ready_action_unblocked,
        )

    def _run(self) -> None:
        for _ in range(200):
            self._pop_achieved()
            seg = self.stack.top()
            if seg is None:
                task_finished = any(
                    m.kind == "utterance" and m.template == "done" for m in self._moves
                )
                if task_finished and not self._idle_announced:
                    self._say("ask_next_task")
                    self._idle_announced = True
                return
            move = next_move(self.stack, self._view())
            if move.kind == "wait":
                return
            if move.kind == "utterance":
                self._say(move.template, move.bindings)
                if move.template in ASK_TEMPLATES:
                    seg.context["asked"] = True
                    return
                continue
            if move.kind == "external":
                try:
                    self._apply_external(move.action)
                except WorldError:
                    seg.context["blocked"] = True
                    continue
                grounded = seg.context.get("grounded")
                if grounded is not None and grounded.network.builtin in (
                    "put-down-free", "point-to",
                ):
                    grounded.bindings["applied"] = True
                continue
            if move.kind == "internal":
                self._handle_internal(move.note, seg)
                continue
        raise RuntimeError("interaction cycle did not quiesce")

    def _pop_achieved(self) -> None:
        while self.stack.top() is not None and self.stack.top().achieved():
            seg = self.stack.pop_achieved()
            self._log_event("dialog", {"speaker": "agent", "note": f"closed {seg.id}"})

    def _handle_internal(self, note: str, seg) -> None:
        if note == "advance-verb-acquisition":
            self._advance_learn_verb(seg)
        elif note == "no-execution-knowledge":
            self._advance_execution(seg)
        elif note == "command-complete":
            self._complete_command(seg)
        elif note == "actions-complete":
            self._actions_complete(seg)
        elif note == "execute-instructed":
            self._acquire_actions_step(seg)
        elif note == "answer-query":
            self._answer_query(seg)
        elif note == "train-example":
            self._train_pending(seg)
        elif note == "resolve-answer":
            self._resolve_with_answer(seg)
        elif note == "store-goal":
            self._store_goal(seg)
        elif note == "learn-prep-example":
            self._learn_prep_example(seg)
        else:
            raise RuntimeError(f"unhandled internal move {note!r}")

    # ------------------------------------------------------------------
    # grounding
    # ------------------------------------------------------------------

    def _first_unknown_word(self, np: NounPhrase) -> Optional[str]:
        for word in np.content_words():
            if self.smem.retrieve({"kind": "word-map", "word": word}) is None:
                if word in self.scene.locations:
                    continue
                return word
        return None

    def _push_word_impasse(self, word: str) -> None:
        self.stack.push(
            Purpose.LEARN_WORD_PROPERTY,
            Originator.AGENT,
            context={"word": word, "asked": False},
        )

    def _push_reference_impasse(self, np: NounPhrase, candidates: list[str]) -> None:
        self.stack.push(
            Purpose.RESOLVE_REFERENCE,
            Originator.AGENT,
            context={
                "np": np,
                "np_text": np.text(),
                "candidates": candidates,
                "asked": False,
            },
        )

    def _root_segment(self):
        open_segments = self.stack.open_segments()
        return open_segments[0] if open_segments else None

    def _discourse_bind(self, np: NounPhrase, ref: EntityRef) -> None:
        """Within one task's segment tree, a pinned reference stays pinned."""
        np.resolved_ref = ref
        root = self._root_segment()
        if root is not None and np.content_words():
            root.context.setdefault("np_bindings", {})[np.text()] = ref

    def _discourse_lookup(self, np: NounPhrase) -> Optional[EntityRef]:
        if np.resolved_ref is not None:
            return np.resolved_ref
        root = self._root_segment()
        if root is not None:
            bound = root.context.get("np_bindings", {}).get(np.text())
            if bound is not None:
                return bound
        return None

    def _resolve_np(self, np: NounPhrase, quiet: bool = False) -> Union[EntityRef, Impasse, None]:
        """Resolve a noun phrase to an entity.

        Returns an EntityRef, or an Impasse value.  In quiet mode no segments
        are pushed and None means "cannot resolve right now".
        """
        bound = self._discourse_lookup(np)
        if bound is not None:
            return bound
        if np.gestural and not np.content_words():
            if self.pending_click is not None:
                obj = self.pending_click
                self.pending_click = None
                self._discourse_bind(np, ("object", obj))
                return ("object", obj)
            if quiet:
                return None
            return Impasse(kind="unresolved-reference", np=np)

        if np.head in self.scene.locations and not np.attributes:
            return ("location", np.head)

        unknown = self._first_unknown_word(np)
        if unknown is not None:
            if quiet:
                return None
            return Impasse(kind="unknown-word", word=unknown, role="attribute", np=np)

        candidates = list(self.scene.objects)
        for word in np.content_words():
            entry = self.smem.retrieve({"kind": "word-map", "word": word})
            kept = []
            for obj_id in candidates:
                result = self.classify_object(obj_id, entry.property)
                if result is not None and result[0].id == entry.symbol.id:
                    kept.append(obj_id)
            candidates = kept
        if np.embedded_pp is not None:
            prep, inner = np.embedded_pp
            prep_entry = self.smem.retrieve({"kind": "prep-map", "word": prep})
            if prep_entry is None:
                if quiet:
                    return None
                return Impasse(kind="unknown-word", word=prep, role="preposition", np=np)
            ref = self._resolve_np(inner, quiet=quiet)
            if not isinstance(ref, tuple):
                return ref
            ref_entity = self._entity(ref)
            candidates = [
                oid
                for oid in candidates
                if self._safe_evaluate(prep_entry.composition, self.scene.objects[oid], ref_entity)
            ]
        if np.gestural and self.pending_click is not None:
            # gesture outranks descriptive matching
            obj = self.pending_click
            self.pending_click = None
            self._discourse_bind(np, ("object", obj))
            return ("object", obj)
        if len(candidates) == 1:
            self._discourse_bind(np, ("object", candidates[0]))
            return ("object", candidates[0])
        if quiet:
            return None
        return Impasse(kind="unresolved-reference", np=np, candidates=tuple(candidates))

    def _handle_impasse(self, impasse: Impasse) -> None:
        if impasse.kind == "unknown-word":
            self._push_word_impasse(impasse.word)
        elif impasse.kind == "unresolved-reference":
            self._push_reference_impasse(impasse.np, list(impasse.candidates))
        else:
            raise RuntimeError(f"unexpected impasse {impasse.kind}")

    def _entity(self, ref: EntityRef):
        if ref[0] == "object":
            return self.scene.objects[ref[1]]
        return self.scene.locations[ref[1]]

    def _safe_evaluate(self, comp: SpatialComposition, primary, reference) -> bool:
        try:
            return evaluate(comp, primary, reference, self.scene.workspace)
        except UntrainedComposition:
            return False

    # ------------------------------------------------------------------
    # command execution
    # ------------------------------------------------------------------

    def _ground_command(self, seg) -> Optional[GroundedCommand]:
        """Resume grounding the segment's command; pushes impasse segments and
        returns None while grounding is incomplete."""
        if seg.context.get("grounded") is not None:
            return seg.context["grounded"]
        parse: ParseResult = seg.context["parse"]
        network: ActionConceptNetwork = seg.context["network"]
        bindings = seg.context.setdefault("bindings", {})
        if "direct_object" not in bindings:
            ref = self._resolve_np(parse.direct_object)
            if isinstance(ref, Impasse):
                self._handle_impasse(ref)
                return None
            if ref[0] != "object":
                self._say("not_understood")
                seg.status = Status.ACHIEVED
                return None
            bindings["direct_object"] = ref[1]
        if parse.pps and "pp_entity" not in bindings:
            prep, np = parse.pps[0]
            bindings["prep"] = prep
            ref = self._resolve_np(np)
            if isinstance(ref, Impasse):
                self._handle_impasse(ref)
                return None
            bindings["pp_entity"] = list(ref)
        grounded = GroundedCommand(
            operator_id=network.operator_id, network=network, bindings=bindings
        )
        grounded.goal = self._goal_instance(network, bindings)
        if grounded.goal is not None and not self._goal_relation_known(grounded.goal):
            self.stack.push(
                Purpose.LEARN_PREP,
                Originator.AGENT,
                context={"word": grounded.goal["relation"], "asked": False},
            )
            return None
        seg.context["grounded"] = grounded
        return grounded

    def _goal_instance(self, network: ActionConceptNetwork, bindings: dict) -> Optional[dict]:
        pattern = network.goal_pattern
        if network.builtin == "put-down-at":
            return {
                "relation": bindings.get("prep"),
                "reference": tuple(bindings["pp_entity"]),
                "primary": bindings["direct_object"],
            }
        if pattern is None:
            return None
        relation = pattern["relation"]
        reference = pattern["reference"]
        if relation == "from-command":
            relation = bindings.get("prep")
        if reference == "from-command":
            reference = tuple(bindings["pp_entity"])
        else:
            reference = tuple(reference)
        return {
            "relation": relation,
            "reference": reference,
            "primary": bindings["direct_object"],
        }

    def _goal_relation_known(self, goal: dict) -> bool:
        return self.smem.retrieve({"kind": "prep-map", "word": goal["relation"]}) is not None

    def _goal_holds(self, goal: Optional[dict]) -> bool:
        if goal is None:
            return False
        entry = self.smem.retrieve({"kind": "prep-map", "word": goal["relation"]})
        if entry is None:
            return False
        primary = self.scene.objects[goal["primary"]]
        reference = self._entity(tuple(goal["reference"]))
        return self._safe_evaluate(entry.composition, primary, reference)

    def _segment_goal_met(self, seg) -> bool:
        if seg.purpose == Purpose.ACQUIRE_ACTIONS:
            parent = self.stack.segments.get(seg.parent) if seg.parent else None
            if parent is None:
                return False
            if parent.purpose == Purpose.LEARN_VERB:
                self._refresh_verb_grounding(parent)
            grounded = parent.context.get("grounded")
            if grounded is None:
                return False
            if grounded.network.builtin is not None:
                return self._builtin_goal_met(grounded)
            return self._goal_holds(grounded.goal)
        grounded = seg.context.get("grounded")
        if grounded is None:
            return False
        if grounded.network.builtin is not None:
            return self._builtin_goal_met(grounded)
        return self._goal_holds(grounded.goal)

    def _refresh_verb_grounding(self, seg) -> Optional[GroundedCommand]:
        """Quietly (re)bind the verb segment's slots; instructed actions may
        have trained the words that make the direct object resolvable."""
        if seg.context.get("grounded") is not None:
            return seg.context["grounded"]
        network: ActionConceptNetwork = seg.context["network"]
        parse: ParseResult = seg.context["parse"]
        if network.goal_pattern is None:
            return None
        bindings = seg.context.setdefault("bindings", {})
        if parse.pps:
            prep, pp_np = parse.pps[0]
            bindings["prep"] = prep
            if "pp_entity" not in bindings:
                ref = self._resolve_np(pp_np, quiet=True)
                if ref is None:
                    return None
                bindings["pp_entity"] = list(ref)
        if "direct_object" not in bindings:
            ref = self._resolve_np(parse.direct_object, quiet=True)
            if ref is None or ref[0] != "object":
                return None
            bindings["direct_object"] = ref[1]
        grounded = GroundedCommand(
            operator_id=network.operator_id, network=network, bindings=bindings
        )
        grounded.goal = self._goal_instance(network, bindings)
        seg.context["grounded"] = grounded
        return grounded

    def _builtin_goal_met(self, grounded: GroundedCommand) -> bool:
        builtin = grounded.network.builtin
        do = grounded.bindings.get("direct_object")
        if builtin == "pick-up":
            return self.scene.arm.holding == do
        if builtin == "put-down-free":
            return self.scene.arm.holding is None and grounded.bindings.get("applied", False)
        if builtin == "put-down-at":
            return self._goal_holds(grounded.goal)
        if builtin == "point-to":
            return grounded.bindings.get("applied", False)
        return False

    def _segment_ready_action(self, seg) -> Optional[PrimitiveAction]:
        if seg.purpose == Purpose.ACQUIRE_ACTIONS:
            parent = self.stack.segments.get(seg.parent) if seg.parent else None
            if parent is None:
                return None
            grounded = parent.context.get("grounded")
        else:
            grounded = seg.context.get("grounded")
        if grounded is None:
            return None
        return self._applicable_action(grounded)

    def _applicable_action(self, grounded: GroundedCommand) -> Optional[PrimitiveAction]:
        builtin = grounded.network.builtin
        do = grounded.bindings.get("direct_object")
        holding = self.scene.arm.holding
        if builtin == "pick-up":
            return PickUp(do) if holding is None else None
        if builtin == "point-to":
            return PointTo(do)
        if builtin == "put-down-free":
            if holding != do:
                return None
            spot = self._free_spot(self.scene.objects[do].bbox)
            return PutDown(*spot) if spot else None
        if builtin == "put-down-at":
            if holding != do:
                return None
            return self._projected_put_down(grounded.goal)
        # learned rules: most specific applicable rule wins
        applicable = [
            rule
            for rule in self.rules
            if rule.for_operator == grounded.operator_id
            and self._rule_applies(rule, grounded)
        ]
        if not applicable:
            return None
        applicable.sort(key=lambda r: -len(r.conditions))
        return self._instantiate_rule(applicable[0], grounded)

    def _rule_applies(self, rule: LearnedRule, grounded: GroundedCommand) -> bool:
        do = grounded.bindings["direct_object"]
        holding = self.scene.arm.holding
        for cond in rule.conditions:
            if cond[0] == "goal-unmet":
                if self._goal_holds(grounded.goal):
                    return False
            elif cond[0] == "arm-empty":
                if holding is not None:
                    return False
            elif cond[0] == "arm-holding":
                if holding != do:
                    return False
            elif cond[0] == "arm-holding-other":
                if holding is None or holding == do:
                    return False
            else:
                return False
        return True

    def _instantiate_rule(self, rule: LearnedRule, grounded: GroundedCommand) -> Optional[PrimitiveAction]:
        do = grounded.bindings["direct_object"]
        if rule.action[0] == "pick-up":
            return PickUp(do)
        if rule.action[0] == "put-down":
            if rule.action[1] == "goal-projection":
                return self._projected_put_down(grounded.goal)
            held = self.scene.arm.holding
            if held is None:
                return None
            spot = self._free_spot(self.scene.objects[held].bbox)
            return PutDown(*spot) if spot else None
        if rule.action[0] == "point-to":
            return PointTo(do)
        return None

    def _projected_put_down(self, goal: Optional[dict]) -> Optional[PutDown]:
        """Project the goal relation to a point, then search nearby placements
        that keep the relation true when the exact point is occupied or the
        mean displacement does not fit the workspace."""
        if goal is None:
            return None
        entry = self.smem.retrieve({"kind": "prep-map", "word": goal["relation"]})
        if entry is None:
            return None
        comp = entry.composition
        reference = self._entity(tuple(goal["reference"]))
        obj = self.scene.objects[goal["primary"]]
        w, d, _ = self.scene.workspace
        ref_center = (
            reference.center if isinstance(reference, NamedLocation) else reference.pose
        )
        spiral = [(0.0, 0.0)] + [
            (dx, dy)
            for radius in (0.03, 0.06, 0.09, 0.12)
            for dx, dy in (
                (radius, 0.0), (-radius, 0.0), (0.0, radius), (0.0, -radius),
                (radius, radius), (-radius, radius), (radius, -radius), (-radius, -radius),
            )
        ]

        def candidates():
            yield project_point(comp, reference, self.rng, self.scene.workspace, obj.bbox)
            # contracted displacements for when the mean gap overshoots
            from .spatial import AXES, Relation

            for _ in range(MAX_PROJECTION_RETRIES):
                point = []
                for axis_idx, axis in enumerate(AXES):
                    choices = sorted(comp.allowed[axis], key=lambda r: r.value)
                    rel = (
                        choices[int(self.rng.integers(len(choices)))]
                        if len(choices) > 1
                        else choices[0]
                    )
                    coord = ref_center[axis_idx]
                    if rel is not Relation.ALIGNED:
                        lo, hi = reference.interval(axis_idx)
                        half = (hi - lo) / 2.0
                        gap = comp.dist[axis].mean * float(self.rng.uniform(0.15, 1.0))
                        gap = max(gap, 0.02)
                        offset = gap + half + obj.bbox[axis_idx] / 2.0
                        coord += offset if rel is Relation.GREATER else -offset
                    point.append(min(max(coord, 0.0), self.scene.workspace[axis_idx]))
                yield tuple(point)

        for base in candidates():
            for dx, dy in spiral:
                x = min(max(base[0] + dx, 0.0), w)
                y = min(max(base[1] + dy, 0.0), d)
                try:
                    z = resting_height(self.scene, obj, x, y)
                except PlacementBlocked:
                    continue
                placed = _BoxEntity(pose=(x, y, z), bbox=obj.bbox)
                if self._safe_evaluate(comp, placed, reference):
                    return PutDown(x, y)
        return None

    def _free_spot(self, bbox) -> Optional[tuple[float, float]]:
        w, d, _ = self.scene.workspace
        held = self.scene.arm.holding
        obj = self.scene.objects[held] if held else None

        def clear(x, y, avoid_regions):
            if avoid_regions and any(
                loc.contains_xy(x, y) for loc in self.scene.locations.values()
            ):
                return False
            try:
                z = resting_height(self.scene, obj, x, y)
            except PlacementBlocked:
                return False
            return abs(z - bbox[2] / 2.0) < 1e-9

        for avoid in (True, False):
            for x in np.arange(0.08, w - 0.08, 0.06):
                for y in np.arange(0.08, d - 0.08, 0.06):
                    if clear(float(x), float(y), avoid):
                        return (float(x), float(y))
        return None

    def _apply_external(self, action: PrimitiveAction) -> None:
        self.scene = apply_action(self.scene, action)
        self._percept_cache = None
        self._record_episode(selected_action=_action_to_json(action))
        self._log_event("action", _action_to_json(action))
        move = AgentMove.external(action)
        move.text = None
        self._moves.append(move)

    # ------------------------------------------------------------------
    # verb acquisition
    # ------------------------------------------------------------------

    def _advance_learn_verb(self, seg) -> None:
        network: ActionConceptNetwork = seg.context["network"]
        parse: ParseResult = seg.context["parse"]
        # stage 1 is done at dispatch (the network exists); next, word maps for
        # the command's own words, raised one at a time, left to right
        unknown = self._first_unknown_word(parse.direct_object)
        if unknown is None and parse.pps:
            unknown = self._first_unknown_word(parse.pps[0][1])
        if unknown is not None:
            self._push_word_impasse(unknown)
            return
        if network.goal_pattern is None:
            self.stack.push(
                Purpose.ACQUIRE_GOAL,
                Originator.AGENT,
                context={"verb": parse.verb, "command_parse": parse, "network": network,
                         "asked": False},
            )
            return
        # stages 3/4: pursue the goal; ask for actions when stuck
        grounded = self._refresh_verb_grounding(seg)
        if grounded is not None and self._goal_holds(grounded.goal):
            self._finish_verb(seg)
            return
        if grounded is not None:
            action = self._applicable_action(grounded)
            if action is not None:
                try:
                    self._apply_external(action)
                except WorldError:
                    pass
                else:
                    if self._goal_holds(grounded.goal):
                        self._finish_verb(seg)
                    return
        self.stack.push(
            Purpose.ACQUIRE_ACTIONS,
            Originator.AGENT,
            context={"verb": parse.verb, "asked": False},
        )

    def _finish_verb(self, seg) -> None:
        if not seg.context.get("compiled"):
            new_rules = self._compile_rules(seg)
            seg.context["compiled"] = True
            if new_rules:
                self._emit_learning(
                    "rule-learn",
                    {
                        "operator": seg.context["network"].operator_id,
                        "rules": [r.to_json() for r in new_rules],
                    },
                )
        seg.status = Status.ACHIEVED
        self._say("done")

    def _actions_complete(self, seg) -> None:
        """The goal of the segment being taught is now satisfied in the world:
        compile rules from the demonstration, then close out the parent."""
        parent = self.stack.segments.get(seg.parent) if seg.parent else None
        if parent is not None:
            new_rules = self._compile_rules(parent)
            if new_rules:
                # emitted while the acquisition segment is still the focus
                self._emit_learning(
                    "rule-learn",
                    {
                        "operator": parent.context["network"].operator_id,
                        "rules": [r.to_json() for r in new_rules],
                    },
                )
            parent.context["compiled"] = True
            parent.status = Status.ACHIEVED
        seg.status = Status.ACHIEVED
        self._say("done")

    def _complete_command(self, seg) -> None:
        seg.status = Status.ACHIEVED
        self._say("done")

    def _segment_ready_action_unblocked(self, seg) -> Optional[PrimitiveAction]:
        if seg.context.get("blocked"):
            return None
        return self._segment_ready_action(seg)

    def _advance_execution(self, seg) -> None:
        grounded = self._ground_command(seg)
        if grounded is None:
            return
        if self._segment_goal_met(seg):
            return
        if not seg.context.get("blocked") and self._applicable_action(grounded) is not None:
            return   # the policy acts on the next pass
        # no applicable knowledge: acquire an action sequence for this operator
        for open_seg in self.stack.open_segments():
            if open_seg.purpose == Purpose.ACQUIRE_ACTIONS and open_seg.parent == seg.id:
                return
        self.stack.push(
            Purpose.ACQUIRE_ACTIONS,
            Originator.AGENT,
            context={"verb": seg.context.get("verb", ""), "asked": False},
        )

    # ------------------------------------------------------------------
    # instructed actions inside AcquireActions
    # ------------------------------------------------------------------

    def _acquire_actions_step(self, seg) -> None:
        parse: ParseResult = seg.context.pop("pending_action_parse")
        prep = parse.pps[0][0] if parse.pps else None
        network = self._find_network(parse.verb, prep)
        if network is None or network.builtin is None:
            # instructed step must be an executable verb; re-ask otherwise
            self._say("not_understood")
            seg.context["asked"] = False
            return
        bindings: dict[str, Any] = {}
        ref = self._resolve_np(parse.direct_object)
        if isinstance(ref, Impasse):
            seg.context["pending_action_parse"] = parse   # retry after impasse pops
            self._handle_impasse(ref)
            return
        if ref[0] != "object":
            self._say("not_understood")
            seg.context["asked"] = False
            return
        bindings["direct_object"] = ref[1]
        if parse.pps:
            bindings["prep"] = prep
            pp_ref = self._resolve_np(parse.pps[0][1])
            if isinstance(pp_ref, Impasse):
                seg.context["pending_action_parse"] = parse
                self._handle_impasse(pp_ref)
                return
            bindings["pp_entity"] = list(pp_ref)
        grounded = GroundedCommand(
            operator_id=network.operator_id, network=network, bindings=bindings
        )
        if network.builtin == "put-down-at":
            grounded.goal = self._goal_instance(network, bindings)
            if not self._goal_relation_known(grounded.goal):
                seg.context["pending_action_parse"] = parse
                self.stack.push(
                    Purpose.LEARN_PREP,
                    Originator.AGENT,
                    context={"word": grounded.goal["relation"], "asked": False},
                )
                return
        action = self._applicable_action(grounded)
        if action is None:
            self._say("not_understood")
            seg.context["asked"] = False
            return
        try:
            self._apply_external(action)
        except WorldError:
            self._say("not_understood")
        seg.context["asked"] = False

    # ------------------------------------------------------------------
    # word learning
    # ------------------------------------------------------------------

    def _maybe_train_np(self, np: NounPhrase, obj_id: str) -> bool:
        """After a reference is pinned, train any mismatching word in the NP."""
        trained = False
        for word in np.content_words():
            entry = self.smem.retrieve({"kind": "word-map", "word": word})
            if entry is None:
                continue
            current = self.classify_object(obj_id, entry.property)
            if current is not None and current[0].id == entry.symbol.id:
                continue
            self._train_word(entry, obj_id)
            trained = True
        return trained

    def _train_word(self, entry: WordMap, obj_id: str) -> None:
        percept = self.percepts()[obj_id]
        features = percept.features(entry.property.value)
        self.classifiers[entry.property].train(entry.symbol, features)
        self._emit_learning(
            "percept-train",
            {"word": entry.word, "symbol": entry.symbol.id, "object": obj_id,
             "property": entry.property.value},
        )

    def _train_pending(self, seg) -> None:
        parse: ParseResult = seg.context["example_parse"]
        word = seg.context["word"]
        seg.context["pending_example"] = False
        entry = self.smem.retrieve({"kind": "word-map", "word": word})
        if entry is None:
            self._push_word_impasse(word)
            seg.context["pending_example"] = True   # train once the map exists
            return
        ref = self._resolve_np(parse.subject)
        if isinstance(ref, Impasse):
            self._handle_impasse(ref)
            seg.context["pending_example"] = True
            return
        if ref[0] != "object":
            self._say("not_understood")
            seg.status = Status.ACHIEVED
            return
        self._train_word(entry, ref[1])
        seg.status = Status.ACHIEVED
        self._say("ok")

    # ------------------------------------------------------------------
    # reference resolution segments
    # ------------------------------------------------------------------

    def _resolve_with_answer(self, seg) -> None:
        parse: ParseResult = seg.context["answer_parse"]
        seg.context["answer_parse"] = None
        np: NounPhrase = seg.context["np"]
        answer_np = parse.subject
        if answer_np is not None and answer_np.gestural and self.pending_click is not None:
            obj = self.pending_click
            self.pending_click = None
            self._finish_resolution(seg, obj)
            return
        if answer_np is None:
            seg.context["asked"] = False
            return
        # descriptive narrowing: intersect the original description with the
        # answer's constraints ("the one in the pantry", "the red one")
        base = seg.context.get("candidates") or []
        merged = NounPhrase(
            determiner=np.determiner,
            attributes=list(np.attributes) + list(answer_np.attributes),
            head=np.head if np.head not in (None, "one") else answer_np.head,
            embedded_pp=answer_np.embedded_pp or np.embedded_pp,
        )
        ref = self._resolve_np(merged, quiet=True)
        if isinstance(ref, tuple) and ref[0] == "object":
            if not base or ref[1] in base:
                self._finish_resolution(seg, ref[1])
                return
        seg.context["asked"] = False    # still ambiguous: ask again

    def _finish_resolution(self, seg, obj_id: str) -> None:
        np: NounPhrase = seg.context["np"]
        seg.context["resolved"] = obj_id
        self._discourse_bind(np, ("object", obj_id))
        self._maybe_train_np(np, obj_id)
        seg.status = Status.ACHIEVED

    # ------------------------------------------------------------------
    # goal acquisition
    # ------------------------------------------------------------------

    def _store_goal(self, seg) -> None:
        parse: ParseResult = seg.context.pop("goal_parse")
        network: ActionConceptNetwork = seg.context["network"]
        command: ParseResult = seg.context["command_parse"]
        if parse.prep is None or parse.subject is None or parse.object_np is None:
            self._say("not_understood")
            seg.context["asked"] = False
            return
        if self.smem.retrieve({"kind": "prep-map", "word": parse.prep}) is None:
            seg.context["goal_parse"] = parse
            self.stack.push(
                Purpose.LEARN_PREP,
                Originator.AGENT,
                context={"word": parse.prep, "asked": False},
            )
            return
        ref = self._resolve_np(parse.object_np)
        if isinstance(ref, Impasse):
            seg.context["goal_parse"] = parse
            self._handle_impasse(ref)
            return
        command_prep = command.pps[0][0] if command.pps else None
        command_ref = None
        if command.pps:
            command_ref_np = command.pps[0][1]
            command_ref = command_ref_np.text()
        parametric = (
            command_prep is not None
            and parse.prep == command_prep
            and command_ref is not None
            and parse.object_np.text() == command_ref
        )
        if parametric:
            network.goal_pattern = {
                "relation": "from-command",
                "reference": "from-command",
                "primary": "slot:direct_object",
            }
        else:
            network.goal_pattern = {
                "relation": parse.prep,
                "reference": list(ref),
                "primary": "slot:direct_object",
            }
        self._emit_learning(
            "goal-learn",
            {"verb": network.verb, "goal": network.goal_pattern, "operator": network.operator_id},
        )
        seg.status = Status.ACHIEVED

    # ------------------------------------------------------------------
    # preposition learning
    # ------------------------------------------------------------------

    def _learn_prep_example(self, seg) -> None:
        parse: ParseResult = seg.context["example_parse"]
        seg.context["example_parse"] = None
        asked_word = seg.context["word"]
        word = parse.prep
        subj = self._resolve_np(parse.subject)
        if isinstance(subj, Impasse):
            seg.context["example_parse"] = parse
            self._handle_impasse(subj)
            return
        obj = self._resolve_np(parse.object_np)
        if isinstance(obj, Impasse):
            seg.context["example_parse"] = parse
            self._handle_impasse(obj)
            return
        if subj[0] != "object":
            self._say("not_understood")
            seg.status = Status.ACHIEVED
            return
        primary = self.scene.objects[subj[1]]
        reference = self._entity(obj)
        relations, distances = extract_prims(primary, reference)
        entry = self.smem.retrieve({"kind": "prep-map", "word": word})
        if entry is None:
            comp = learn_example(None, relations, distances)
            self.smem.store(PrepMap(word=word, composition=comp))
            if self.lexicon.word_class(word) is None:
                self.lexicon.register(word, WordClass.PREPOSITION)
        else:
            learn_example(entry.composition, relations, distances)
        self._emit_learning(
            "prep-learn",
            {
                "word": word,
                "relations": {a: r.value for a, r in relations.items()},
                "distances": distances,
            },
        )
        if word == asked_word or seg.originator == Originator.INSTRUCTOR:
            seg.status = Status.ACHIEVED
        else:
            seg.context["asked"] = False    # demonstrated a different relation
        self._say("ok")

    # ------------------------------------------------------------------
    # query answering
    # ------------------------------------------------------------------

    def _answer_query(self, seg) -> None:
        parse: ParseResult = seg.context["parse"]
        if parse.category == Category.ATTRIBUTE_QUERY:
            self._answer_attribute(seg, parse)
        elif parse.prep is not None and parse.subject is not None and parse.object_np is not None:
            self._answer_spatial_yesno(seg, parse)
        else:
            self._answer_spatial_listing(seg, parse)

    def _answer_attribute(self, seg, parse: ParseResult) -> None:
        ref = self._resolve_np(parse.subject)
        if isinstance(ref, Impasse):
            self._handle_impasse(ref)
            return
        if ref[0] != "object":
            seg.status = Status.ACHIEVED
            self._say("answer_unknown")
            return
        result = self.classify_object(ref[1], parse.property_kind)
        seg.status = Status.ACHIEVED
        if result is None:
            self._say("answer_unknown")
            return
        entry = self.smem.retrieve({"kind": "word-map", "symbol": result[0].id})
        if entry is None:
            self._say("answer_unknown")
            return
        self._say("answer_attribute", {"word": entry.word})

    def _answer_spatial_yesno(self, seg, parse: ParseResult) -> None:
        prep_entry = self.smem.retrieve({"kind": "prep-map", "word": parse.prep})
        if prep_entry is None:
            seg.status = Status.ACHIEVED
            self._say("answer_unknown")
            return
        subj = self._resolve_np(parse.subject)
        if isinstance(subj, Impasse):
            self._handle_impasse(subj)
            return
        obj = self._resolve_np(parse.object_np)
        if isinstance(obj, Impasse):
            self._handle_impasse(obj)
            return
        seg.status = Status.ACHIEVED
        if subj[0] != "object":
            self._say("answer_unknown")
            return
        holds = self._safe_evaluate(
            prep_entry.composition, self.scene.objects[subj[1]], self._entity(obj)
        )
        self._say("answer_yes" if holds else "answer_no")

    def _answer_spatial_listing(self, seg, parse: ParseResult) -> None:
        prep_entry = self.smem.retrieve({"kind": "prep-map", "word": parse.prep})
        if prep_entry is None:
            seg.status = Status.ACHIEVED
            self._say("answer_unknown")
            return
        ref = self._resolve_np(parse.object_np)
        if isinstance(ref, Impasse):
            self._handle_impasse(ref)
            return
        reference = self._entity(ref)
        matches = [
            oid
            for oid in sorted(self.scene.objects)
            if (ref[0] != "object" or oid != ref[1])
            and self._safe_evaluate(prep_entry.composition, self.scene.objects[oid], reference)
        ]
        seg.status = Status.ACHIEVED
        if not matches:
            self._say("answer_nothing")
            return
        listing = " and ".join(self.describe_object(oid) for oid in matches)
        self._say("answer_objects", {"listing": listing})

    # ------------------------------------------------------------------
    # rule compilation (retrospective replay + goal regression)
    # ------------------------------------------------------------------

    def _compile_rules(self, seg) -> list[LearnedRule]:
        grounded: Optional[GroundedCommand] = seg.context.get("grounded")
        if grounded is None or grounded.goal is None:
            return []
        start = seg.context.get("start_episode", 0)
        end = len(self.epmem) - 1
        span = self.epmem.span(start, end)
        new_rules = compile_rules_from_span(
            span=span,
            goal=grounded.goal,
            operator_id=grounded.operator_id,
            prep_composition=self.smem.retrieve(
                {"kind": "prep-map", "word": grounded.goal["relation"]}
            ).composition,
            locations=self.scene.locations,
            workspace=self.scene.workspace,
            graspable={o.id: o.graspable for o in self.scene.objects.values()},
            rule_id_start=self._rule_counter,
        )
        added = []
        existing = {(r.for_operator, r.conditions, r.action) for r in self.rules}
        for rule in new_rules:
            key = (rule.for_operator, rule.conditions, rule.action)
            if key not in existing:
                self.rules.append(rule)
                existing.add(key)
                added.append(rule)
                self._rule_counter += 1
        return added

    # ------------------------------------------------------------------
    # persistence
    # ------------------------------------------------------------------

    def save_state(self, include_episodes: bool = False) -> dict:
        smem_doc = self.smem.to_json()
        doc = {
            "version": SAVE_VERSION,
            "lexicon": self.lexicon.to_json(),
            "word_maps": [s for s in smem_doc["slots"] if s["kind"] == "word-map"],
            "prep_maps": [s for s in smem_doc["slots"] if s["kind"] == "prep-map"],
            "networks": [s for s in smem_doc["slots"] if s["kind"] == "network"],
            "smem_clock": smem_doc["clock"],
            "learned_rules": [r.to_json() for r in self.rules],
            "classifiers": {
                prop.value: clf.to_json() for prop, clf in self.classifiers.items()
            },
            "symbol_counters": self.symbols.counters(),
            "op_counter": self._op_counter,
            "rule_counter": self._rule_counter,
            "rng_state": self.rng.bit_generator.state,
        }
        if include_episodes:
            doc["episode_log"] = self.epmem.to_json()
        return doc

    @classmethod
    def load_state(cls, doc: dict, scene: Scene) -> "Agent":
        if doc.get("version") != SAVE_VERSION:
            raise ValueError(f"unsupported save version {doc.get('version')!r}")
        agent = cls(scene)
        agent.lexicon = Lexicon.from_json(doc["lexicon"])
        agent.smem = SemanticMemory.from_json(
            {"clock": doc["smem_clock"],
             "slots": doc["word_maps"] + doc["prep_maps"] + doc["networks"]}
        )
        agent.classifiers = {
            PropertyKind(name): PropertyClassifier.from_json(sub)
            for name, sub in doc["classifiers"].items()
        }
        agent.symbols = SymbolFactory(doc["symbol_counters"])
        agent.rules = [LearnedRule.from_json(r) for r in doc["learned_rules"]]
        agent._op_counter = doc["op_counter"]
        agent._rule_counter = doc["rule_counter"]
        agent.rng = np.random.default_rng()
        agent.rng.bit_generator.state = doc["rng_state"]
        if "episode_log" in doc:
            agent.epmem = EpisodicMemory.from_json(doc["episode_log"])
        return agent


# ----------------------------------------------------------------------
# retrospective rule compilation, standalone so tests can drive it directly
# ----------------------------------------------------------------------

def compile_rules_from_span(
    span,
    goal: dict,
    operator_id: str,
    prep_composition: SpatialComposition,
    locations: dict[str, NamedLocation],
    workspace,
    graspable: dict[str, bool],
    rule_id_start: int = 0,
) -> list[LearnedRule]:
    """Replay a demonstration and compile one rule per causally necessary action.

    Reconstructs the initial state from the first episode, simulates the
    instructed actions through the action model, checks the simulation against
    the recorded episodes, then regresses from the goal backwards collecting
    each action's minimal conditions.  Actions off the regression path
    (superfluous demonstrations) yield no rule.
    """
    first = span[0].snapshot
    bboxes = {pid: tuple(p["bbox"]) for pid, p in first["percepts"].items()}
    poses = {pid: tuple(p["pose"]) for pid, p in first["percepts"].items()}
    holding = first["arm"]
    model = ActionModel(bboxes=bboxes, graspable=graspable, workspace=workspace)

    actions: list[tuple[PrimitiveAction, dict]] = []
    for episode in span[1:]:
        selected = episode.snapshot.get("selected_action")
        if selected is not None:
            actions.append((_action_from_json(selected), episode.snapshot))

    primary = goal["primary"]
    reference_ref = tuple(goal["reference"])

    def entity_at(state_poses, ref: EntityRef):
        if ref[0] == "location":
            return locations[ref[1]]
        return _BoxEntity(pose=tuple(state_poses[ref[1]]), bbox=bboxes[ref[1]])

    def goal_met(state) -> bool:
        _, state_poses = state
        primary_entity = _BoxEntity(pose=tuple(state_poses[primary]), bbox=bboxes[primary])
        try:
            return evaluate(
                prep_composition, primary_entity, entity_at(state_poses, reference_ref), workspace
            )
        except UntrainedComposition:
            return False

    # forward replay with divergence checking against the recorded episodes
    states = [(holding, dict(poses))]
    for action, recorded in actions:
        try:
            state = model.apply(states[-1], action)
        except WorldError as exc:
            raise ReplayDivergence(f"model rejected recorded action {action!r}: {exc}") from exc
        rec_poses = {pid: tuple(p["pose"]) for pid, p in recorded["percepts"].items()}
        for pid, pose in state[1].items():
            if max(abs(a - b) for a, b in zip(pose, rec_poses[pid])) > 1e-6:
                raise ReplayDivergence(f"simulated pose of {pid} diverges from episode")
        if state[0] != recorded["arm"]:
            raise ReplayDivergence("simulated arm state diverges from episode")
        states.append(state)
    if not goal_met(states[-1]):
        raise ReplayDivergence("replayed demonstration does not reach the goal")

    # backward pass: regress the goal through the demonstrated actions
    def effects(i: int) -> set:
        action = actions[i][0]
        out: set = set()
        if isinstance(action, PickUp):
            out.add(("holding", action.target))
        elif isinstance(action, PutDown):
            out.add(("empty",))
            if goal_met(states[i + 1]) and not goal_met(states[i]):
                out.add(("goal",))
        return out

    def preconditions(i: int) -> set:
        action = actions[i][0]
        if isinstance(action, PickUp):
            return {("empty",)}
        if isinstance(action, PutDown):
            return {("holding", states[i][0])}
        return set()

    needed: set = {("goal",)}
    causal: list[tuple[int, set]] = []
    for i in range(len(actions) - 1, -1, -1):
        eff = effects(i)
        if eff & needed:
            conds = preconditions(i)
            causal.append((i, conds))
            needed = (needed - eff) | conds
    causal.reverse()

    rules: list[LearnedRule] = []
    counter = rule_id_start
    for i, conds in causal:
        action = actions[i][0]
        conditions: list[tuple] = [("goal-unmet",)]
        for cond in sorted(conds):
            if cond == ("empty",):
                conditions.append(("arm-empty",))
            elif cond[0] == "holding":
                if cond[1] == primary:
                    conditions.append(("arm-holding", "slot:direct_object"))
                else:
                    conditions.append(("arm-holding-other",))
        if isinstance(action, PickUp):
            if action.target != primary:
                continue   # cannot generalize a pickup of a non-slot object
            template = ("pick-up", "slot:direct_object")
        elif isinstance(action, PutDown):
            established_goal = ("goal",) in effects(i)
            template = ("put-down", "goal-projection" if established_goal else "free-spot")
        else:
            continue
        counter += 1
        rules.append(
            LearnedRule(
                rule_id=f"r{counter}",
                for_operator=operator_id,
                conditions=tuple(conditions),
                action=template,
            )
        )
    return rules
