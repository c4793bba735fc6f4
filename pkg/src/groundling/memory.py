"""Semantic memory (word maps, preposition maps, action-concept networks) and
episodic memory (chronological working-state snapshots).

Semantic entries are retrieved by partial field cues; among matches the best
is the most frequently used entry, with recency breaking ties.  Episodes are
immutable, contiguous snapshots supporting exact-index lookup, span retrieval
and "most recent with purpose P" -- the retrievals verb learning needs.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any, Optional

from .perception import PerceptSymbol, PropertyKind
from .spatial import SpatialComposition


class DuplicateKey(ValueError):
    pass


class IndexOutOfRange(IndexError):
    pass


@dataclass
class WordMap:
    word: str
    symbol: PerceptSymbol
    property: PropertyKind

    def matches(self, cue: dict) -> bool:
        for key, value in cue.items():
            if key == "kind":
                if value != "word-map":
                    return False
            elif key == "word":
                if self.word != value:
                    return False
            elif key == "symbol":
                if self.symbol.id != value:
                    return False
            elif key == "property":
                if self.property != value:
                    return False
            else:
                return False
        return True

    def to_json(self) -> dict:
        return {
            "word": self.word,
            "symbol": self.symbol.id,
            "property": self.property.value,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "WordMap":
        prop = PropertyKind(doc["property"])
        return cls(word=doc["word"], symbol=PerceptSymbol(doc["symbol"], prop), property=prop)


@dataclass
class PrepMap:
    word: str
    composition: SpatialComposition

    def matches(self, cue: dict) -> bool:
        for key, value in cue.items():
            if key == "kind":
                if value != "prep-map":
                    return False
            elif key == "word":
                if self.word != value:
                    return False
            else:
                return False
        return True

    def to_json(self) -> dict:
        return {"word": self.word, "composition": self.composition.to_json()}

    @classmethod
    def from_json(cls, doc: dict) -> "PrepMap":
        return cls(word=doc["word"], composition=SpatialComposition.from_json(doc["composition"]))


@dataclass
class ActionConceptNetwork:
    """Verb semantics: argument signature, operator, and goal pattern.

    The goal pattern references argument slots and either a fixed relation +
    reference (implicit verbs like "store") or the relation/reference carried
    by the command's own prepositional phrase (explicit verbs like
    "move X right of Y"), which is what lets one demonstration cover every
    instantiation of the template.
    """

    verb: str
    has_direct_object: bool
    preposition: Optional[str]
    operator_id: str
    builtin: Optional[str] = None        # primitive executor name, if pre-encoded
    goal_pattern: Optional[dict] = None  # {relation, reference, primary, parametric}

    def matches(self, cue: dict) -> bool:
        for key, value in cue.items():
            if key == "kind":
                if value != "network":
                    return False
            elif key == "verb":
                if self.verb != value:
                    return False
            elif key == "preposition":
                if self.preposition != value:
                    return False
            elif key == "has_direct_object":
                if self.has_direct_object != value:
                    return False
            elif key == "operator_id":
                if self.operator_id != value:
                    return False
            else:
                return False
        return True

    def nodes(self) -> dict[str, str]:
        """Node labels for inspection: map, lexical, argument, operator, goal."""
        labels = {
            "M": self.operator_id.replace("op_", "m_"),
            "L": self.verb,
            "A1": "direct-object" if self.has_direct_object else "-",
            "P": self.operator_id,
        }
        if self.preposition:
            labels["A2"] = f"pp({self.preposition})"
        if self.goal_pattern:
            labels["G"] = str(self.goal_pattern.get("relation"))
            labels["P2"] = str(self.goal_pattern.get("reference"))
        return labels

    def to_json(self) -> dict:
        return {
            "verb": self.verb,
            "has_direct_object": self.has_direct_object,
            "preposition": self.preposition,
            "operator_id": self.operator_id,
            "builtin": self.builtin,
            "goal_pattern": self.goal_pattern,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ActionConceptNetwork":
        return cls(**doc)


@dataclass
class _Slot:
    entry: Any
    recency: int
    frequency: int


class SemanticMemory:
    """Cue-addressable store over word maps, prep maps and networks."""

    def __init__(self):
        self._slots: list[_Slot] = []
        self._clock = 0

    def _tick(self) -> int:
        self._clock += 1
        return self._clock

    def store(self, entry: Any) -> None:
        if isinstance(entry, WordMap):
            if entry.symbol.property != entry.property:
                raise ValueError("word map symbol/property mismatch")
            for slot in self._slots:
                e = slot.entry
                if isinstance(e, WordMap) and e.word == entry.word and e.property == entry.property:
                    raise DuplicateKey(f"word map ({entry.word}, {entry.property.value}) exists")
        if isinstance(entry, PrepMap):
            for slot in self._slots:
                if isinstance(slot.entry, PrepMap) and slot.entry.word == entry.word:
                    raise DuplicateKey(f"prep map {entry.word!r} exists")
        if isinstance(entry, ActionConceptNetwork):
            for slot in self._slots:
                e = slot.entry
                if (
                    isinstance(e, ActionConceptNetwork)
                    and e.verb == entry.verb
                    and e.preposition == entry.preposition
                    and e.has_direct_object == entry.has_direct_object
                ):
                    raise DuplicateKey(f"network for {entry.verb!r} signature exists")
        self._slots.append(_Slot(entry=entry, recency=self._tick(), frequency=1))

    def retrieve(self, cue: dict) -> Optional[Any]:
        """Best (frequency, recency) entry matching every cue field."""
        if not cue:
            raise ValueError("cue must be nonempty")
        best: Optional[_Slot] = None
        for slot in self._slots:
            if slot.entry.matches(cue):
                if best is None or (slot.frequency, slot.recency) > (best.frequency, best.recency):
                    best = slot
        if best is None:
            return None
        best.frequency += 1
        best.recency = self._tick()
        return best.entry

    def entries(self, kind: Optional[type] = None) -> list[Any]:
        if kind is None:
            return [s.entry for s in self._slots]
        return [s.entry for s in self._slots if isinstance(s.entry, kind)]

    def to_json(self) -> dict:
        slots = []
        for slot in self._slots:
            if isinstance(slot.entry, WordMap):
                kind = "word-map"
            elif isinstance(slot.entry, PrepMap):
                kind = "prep-map"
            else:
                kind = "network"
            slots.append(
                {
                    "kind": kind,
                    "entry": slot.entry.to_json(),
                    "recency": slot.recency,
                    "frequency": slot.frequency,
                }
            )
        return {"clock": self._clock, "slots": slots}

    @classmethod
    def from_json(cls, doc: dict) -> "SemanticMemory":
        smem = cls()
        smem._clock = doc["clock"]
        loaders = {
            "word-map": WordMap.from_json,
            "prep-map": PrepMap.from_json,
            "network": ActionConceptNetwork.from_json,
        }
        for slot in doc["slots"]:
            smem._slots.append(
                _Slot(
                    entry=loaders[slot["kind"]](slot["entry"]),
                    recency=slot["recency"],
                    frequency=slot["frequency"],
                )
            )
        return smem


@dataclass(frozen=True)
class Episode:
    index: int
    snapshot: dict


class EpisodicMemory:
    """Chronological, immutable snapshots of the agent's working state."""

    def __init__(self):
        self._episodes: list[Episode] = []

    def record(self, snapshot: dict) -> int:
        index = len(self._episodes)
        self._episodes.append(Episode(index=index, snapshot=copy.deepcopy(snapshot)))
        return index

    def get(self, index: int) -> Episode:
        if not 0 <= index < len(self._episodes):
            raise IndexOutOfRange(f"episode {index} not in [0, {len(self._episodes)})")
        return self._episodes[index]

    def span(self, start: int, end: int) -> list[Episode]:
        if start > end:
            raise IndexOutOfRange(f"span start {start} > end {end}")
        self.get(start)
        self.get(end)
        return self._episodes[start : end + 1]

    def last_with_purpose(self, purpose: str) -> Optional[Episode]:
        for episode in reversed(self._episodes):
            if episode.snapshot.get("top_purpose") == purpose:
                return episode
        return None

    def __len__(self) -> int:
        return len(self._episodes)

    def to_json(self) -> dict:
        return {"episodes": [{"index": e.index, "snapshot": e.snapshot} for e in self._episodes]}

    @classmethod
    def from_json(cls, doc: dict) -> "EpisodicMemory":
        epmem = cls()
        for entry in doc["episodes"]:
            epmem._episodes.append(
                Episode(index=entry["index"], snapshot=copy.deepcopy(entry["snapshot"]))
            )
        return epmem
