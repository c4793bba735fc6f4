"""Per-property feature spaces and incremental KNN classification.

Each perceptual property (color, size, shape) owns its own feature space and
classifier.  Classifiers start empty and grow one example at a time, only
through instruction; a symbol may claim several disjoint regions of its
feature space.  Classification is a Gaussian-weighted vote over the nearest
stored examples, and falls back to "unknown" when the vote is not confident
enough -- that refusal is what triggers a teaching interaction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np


class PropertyKind(str, Enum):
    COLOR = "color"
    SIZE = "size"
    SHAPE = "shape"


FEATURE_DIMS = {PropertyKind.COLOR: 3, PropertyKind.SIZE: 1, PropertyKind.SHAPE: 3}
# Diameter of the unit hypercube each feature space lives in.
FEATURE_DIAMETER = {
    PropertyKind.COLOR: math.sqrt(3.0),
    PropertyKind.SIZE: 1.0,
    PropertyKind.SHAPE: math.sqrt(3.0),
}
SYMBOL_PREFIX = {PropertyKind.COLOR: "c", PropertyKind.SIZE: "s", PropertyKind.SHAPE: "h"}

DEFAULT_K = 3
KERNEL_WIDTH_FRACTION = 0.1
DEFAULT_CONFIDENCE_THRESHOLD = 0.5


class DimensionMismatch(ValueError):
    pass


class PropertyMismatch(ValueError):
    pass


@dataclass(frozen=True)
class PerceptSymbol:
    """Internal token naming a learned region of one property's feature space."""

    id: str
    property: PropertyKind


class SymbolFactory:
    """Mints property-prefixed symbols (c1, s1, h1, ...); counters never reset."""

    def __init__(self, counters: Optional[dict[str, int]] = None):
        self._counters = {kind: 0 for kind in PropertyKind}
        if counters:
            for key, value in counters.items():
                self._counters[PropertyKind(key)] = value

    def new_symbol(self, prop: PropertyKind) -> PerceptSymbol:
        self._counters[prop] += 1
        return PerceptSymbol(f"{SYMBOL_PREFIX[prop]}{self._counters[prop]}", prop)

    def counters(self) -> dict[str, int]:
        return {kind.value: count for kind, count in self._counters.items()}


def new_symbol(prop: PropertyKind, factory: SymbolFactory) -> PerceptSymbol:
    return factory.new_symbol(prop)


@dataclass
class PropertyClassifier:
    """Append-only KNN store for one property.

    k, the kernel width and the confidence threshold are fixed at
    construction; examples only ever grow.
    """

    property: PropertyKind
    k: int = DEFAULT_K
    sigma: float = 0.0
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
    examples: list[tuple[np.ndarray, PerceptSymbol]] = field(default_factory=list)

    def __post_init__(self):
        if self.sigma <= 0.0:
            self.sigma = KERNEL_WIDTH_FRACTION * FEATURE_DIAMETER[self.property]

    def _check(self, f: Sequence[float]) -> np.ndarray:
        vec = np.asarray(f, dtype=float)
        if vec.shape != (FEATURE_DIMS[self.property],):
            raise DimensionMismatch(
                f"{self.property.value} features must be "
                f"{FEATURE_DIMS[self.property]}-dimensional, got shape {vec.shape}"
            )
        return vec

    def train(self, symbol: PerceptSymbol, f: Sequence[float]) -> None:
        if symbol.property != self.property:
            raise PropertyMismatch(
                f"cannot train {symbol.property.value} symbol in {self.property.value} space"
            )
        self.examples.append((self._check(f), symbol))

    def classify(self, f: Sequence[float]) -> Optional[tuple[PerceptSymbol, float]]:
        """Weighted vote over the nearest stored examples.

        Returns (symbol, confidence) or None when the store is empty or no
        symbol reaches the confidence threshold.  Ties go to the symbol
        trained earliest.
        """
        vec = self._check(f)
        if not self.examples:
            return None
        dists = np.array([np.linalg.norm(vec - ex) for ex, _ in self.examples])
        order = np.argsort(dists, kind="stable")[: min(self.k, len(self.examples))]
        weights: dict[str, float] = {}
        symbols: dict[str, PerceptSymbol] = {}
        first_seen: dict[str, int] = {}
        for idx in order:
            sym = self.examples[idx][1]
            w = math.exp(-(dists[idx] ** 2) / (2.0 * self.sigma**2))
            weights[sym.id] = weights.get(sym.id, 0.0) + w
            symbols[sym.id] = sym
            first_seen.setdefault(sym.id, self._first_trained(sym.id))
        total = sum(weights.values())
        if total <= 0.0:
            # All neighbors are beyond kernel reach; treat as no evidence.
            return None
        best_id = min(weights, key=lambda sid: (-weights[sid], first_seen[sid]))
        confidence = weights[best_id] / total
        if confidence < self.confidence_threshold:
            return None
        return symbols[best_id], confidence

    def _first_trained(self, symbol_id: str) -> int:
        for i, (_, sym) in enumerate(self.examples):
            if sym.id == symbol_id:
                return i
        return len(self.examples)

    # -- persistence ---------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "property": self.property.value,
            "k": self.k,
            "sigma": self.sigma,
            "confidence_threshold": self.confidence_threshold,
            "examples": [
                {"features": list(map(float, ex)), "symbol": sym.id}
                for ex, sym in self.examples
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "PropertyClassifier":
        prop = PropertyKind(doc["property"])
        clf = cls(
            property=prop,
            k=doc["k"],
            sigma=doc["sigma"],
            confidence_threshold=doc["confidence_threshold"],
        )
        for ex in doc["examples"]:
            clf.examples.append(
                (np.asarray(ex["features"], dtype=float), PerceptSymbol(ex["symbol"], prop))
            )
        return clf


def classifier_bank() -> dict[PropertyKind, PropertyClassifier]:
    return {kind: PropertyClassifier(property=kind) for kind in PropertyKind}
