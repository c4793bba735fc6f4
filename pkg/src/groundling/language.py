"""Restricted-grammar parser and template-based utterance generator.

The grammar is a fixed set of sentence patterns over a small closed-class
vocabulary plus an open-class lexicon that grows at runtime.  Words the
lexicon has never seen are kept in the parse, attached to the syntactic slot
they occupied, so the comprehension layer can raise a learning interaction
about them instead of dropping them.  docs/grammar.md lists every pattern and
every agent template; that document is the protocol contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .perception import PropertyKind


class WordClass(str, Enum):
    NOUN_ADJ = "noun-adj"
    PREPOSITION = "preposition"
    VERB = "verb"


class Category(str, Enum):
    VERB_COMMAND = "verb-command"
    GOAL_DESCRIPTION = "goal-description"
    DESCRIPTIVE = "descriptive-sentence"
    ATTRIBUTE_QUERY = "attribute-query"
    SPATIAL_QUERY = "spatial-query"
    WHICH_ANSWER = "which-answer"
    PROPERTY_ANSWER = "property-answer"
    NP_FRAGMENT = "np-fragment"
    YES_NO = "yes-no"
    GET_NEXT_TASK = "get-next-task"
    UNPARSEABLE = "unparseable"


CLOSED_CLASS = frozenset(
    "the a an is are to of this that it what which where yes no not and or goal".split()
)
DETERMINERS = frozenset({"the", "a", "an"})
DEMONSTRATIVES = frozenset({"this", "that"})
# Semantically empty head nouns: they match any object during resolution.
GENERIC_HEADS = frozenset({"object", "one", "thing", "block"})
PROPERTY_NAMES = {
    "color": PropertyKind.COLOR,
    "size": PropertyKind.SIZE,
    "shape": PropertyKind.SHAPE,
}
GET_NEXT_PHRASES = {
    ("next",),
    ("next", "task"),
    ("what", "next"),
    ("go", "on"),
    ("continue",),
    ("done",),
    ("never", "mind"),
    ("nothing",),
}
MAX_PREP_TOKENS = 4


class ClosedClassCollision(ValueError):
    pass


class MissingBinding(KeyError):
    pass


@dataclass
class Lexicon:
    open_class: dict[str, WordClass] = field(default_factory=dict)

    def word_class(self, word: str) -> Optional[WordClass]:
        return self.open_class.get(word)

    def register(self, word: str, pos: WordClass) -> None:
        word = word.strip().lower()
        if word in CLOSED_CLASS:
            raise ClosedClassCollision(f"{word!r} is a closed-class word")
        existing = self.open_class.get(word)
        if existing is not None and existing != pos:
            raise ClosedClassCollision(
                f"{word!r} already registered as {existing.value}"
            )
        self.open_class[word] = pos

    def multiword(self, pos: WordClass) -> list[tuple[str, ...]]:
        phrases = [
            tuple(w.split()) for w, p in self.open_class.items() if p == pos and " " in w
        ]
        return sorted(phrases, key=len, reverse=True)

    def to_json(self) -> dict:
        return {"open_class": {w: p.value for w, p in sorted(self.open_class.items())}}

    @classmethod
    def from_json(cls, doc: dict) -> "Lexicon":
        return cls(open_class={w: WordClass(p) for w, p in doc["open_class"].items()})


def base_lexicon() -> Lexicon:
    """Lexicon the agent starts with: primitive verbs and the location names."""
    lex = Lexicon()
    for verb in ("pick up", "put down", "put", "point to"):
        lex.register(verb, WordClass.VERB)
    for name in ("stove", "dishwasher", "garbage", "pantry"):
        lex.register(name, WordClass.NOUN_ADJ)
    return lex


def register_word(lex: Lexicon, word: str, pos: WordClass) -> Lexicon:
    lex.register(word, pos)
    return lex


@dataclass
class NounPhrase:
    determiner: Optional[str] = None
    attributes: list[str] = field(default_factory=list)
    head: Optional[str] = None
    embedded_pp: Optional[tuple[str, "NounPhrase"]] = None
    gestural: bool = False
    demonstrative: Optional[str] = None
    # entity pinned by the comprehension layer, if any (not part of equality
    # for parse comparisons)
    resolved_ref: Optional[tuple] = field(default=None, compare=False)

    def content_words(self) -> list[str]:
        """Attribute and head words that need grounding (generic heads excluded)."""
        words = list(self.attributes)
        if self.head is not None and self.head not in GENERIC_HEADS:
            words.append(self.head)
        return words

    def text(self) -> str:
        parts = []
        if self.demonstrative:
            parts.append(self.demonstrative)
        if self.determiner:
            parts.append(self.determiner)
        parts.extend(self.attributes)
        if self.head:
            parts.append(self.head)
        if self.embedded_pp:
            parts.append(self.embedded_pp[0])
            parts.append(self.embedded_pp[1].text())
        return " ".join(parts)

    def tokens(self) -> list[str]:
        out = []
        if self.demonstrative:
            out.append(self.demonstrative)
        if self.determiner:
            out.append(self.determiner)
        out.extend(self.attributes)
        if self.head:
            out.append(self.head)
        if self.embedded_pp:
            out.extend(self.embedded_pp[0].split())
            out.extend(self.embedded_pp[1].tokens())
        return out


@dataclass
class ParseResult:
    category: Category
    tokens: list[str]
    verb: Optional[str] = None
    direct_object: Optional[NounPhrase] = None
    pps: list[tuple[str, NounPhrase]] = field(default_factory=list)
    subject: Optional[NounPhrase] = None
    object_np: Optional[NounPhrase] = None
    prep: Optional[str] = None
    predicate_word: Optional[str] = None
    property_word: Optional[str] = None
    property_kind: Optional[PropertyKind] = None
    yes: Optional[bool] = None
    gestural: bool = False
    unknown_words: list[tuple[str, str]] = field(default_factory=list)
    structure_words: list[str] = field(default_factory=list)

    def accounted_tokens(self) -> list[str]:
        """Every input token, reconstructed from the slots that consumed it."""
        out = list(self.structure_words)
        for np in (self.direct_object, self.subject, self.object_np):
            if np is not None:
                out.extend(np.tokens())
        for prep, np in self.pps:
            out.extend(prep.split())
            out.extend(np.tokens())
        if self.verb:
            out.extend(self.verb.split())
        if self.prep:
            out.extend(self.prep.split())
        for word in (self.predicate_word, self.property_word):
            if word:
                out.append(word)
        return out


def tokenize(text: str) -> list[str]:
    cleaned = text.lower().replace(",", " ").replace("?", " ").replace("!", " ")
    cleaned = cleaned.replace(".", " ")
    return cleaned.split()


class _Parser:
    def __init__(self, tokens: list[str], lex: Lexicon):
        self.tokens = tokens
        self.lex = lex

    # -- token classification --------------------------------------------

    def is_content(self, word: str) -> bool:
        if word in CLOSED_CLASS:
            return False
        cls = self.lex.word_class(word)
        return cls is None or cls == WordClass.NOUN_ADJ or word in GENERIC_HEADS

    def match_verb(self, i: int) -> Optional[tuple[str, int]]:
        for phrase in self.lex.multiword(WordClass.VERB):
            if tuple(self.tokens[i : i + len(phrase)]) == phrase:
                return " ".join(phrase), i + len(phrase)
        word = self.tokens[i] if i < len(self.tokens) else None
        if word is None or word in CLOSED_CLASS:
            return None
        cls = self.lex.word_class(word)
        if cls in (None, WordClass.VERB):
            return word, i + 1
        return None

    def _starts_known_prep(self, i: int) -> bool:
        for phrase in self.lex.multiword(WordClass.PREPOSITION):
            if tuple(self.tokens[i : i + len(phrase)]) == phrase:
                return True
        return self.lex.word_class(self.tokens[i]) == WordClass.PREPOSITION

    # -- noun phrases ------------------------------------------------------

    def parse_np(
        self,
        i: int,
        require_det: bool = True,
        allow_pp: bool = False,
        max_words: Optional[int] = None,
    ) -> Optional[tuple[NounPhrase, int]]:
        np = NounPhrase()
        start = i
        if i < len(self.tokens) and self.tokens[i] in DEMONSTRATIVES:
            np.demonstrative = self.tokens[i]
            np.gestural = True
            i += 1
        elif i < len(self.tokens) and self.tokens[i] in DETERMINERS:
            np.determiner = self.tokens[i]
            i += 1
        elif require_det:
            return None
        words = []
        while i < len(self.tokens) and self.is_content(self.tokens[i]):
            if self._starts_known_prep(i):
                break
            if max_words is not None and len(words) >= max_words:
                break
            words.append(self.tokens[i])
            i += 1
        if words:
            np.head = words[-1]
            np.attributes = words[:-1]
        if not words and not np.gestural:
            return None
        if allow_pp and i < len(self.tokens):
            pp = self.parse_prep(i)
            if pp is not None:
                prep, j = pp
                inner = self.parse_np(j, require_det=True, allow_pp=False)
                if inner is not None:
                    np.embedded_pp = (prep, inner[0])
                    i = inner[1]
        if i == start:
            return None
        return np, i

    # -- prepositions --------------------------------------------------------

    def parse_prep(self, i: int) -> Optional[tuple[str, int]]:
        """Longest token run at i that leaves a determiner-led NP behind it.

        Runs may contain closed-class scaffolding ("to the right of") but may
        not end with a determiner and must contain a content word.
        """
        limit = min(MAX_PREP_TOKENS, len(self.tokens) - i - 1)
        for length in range(limit, 0, -1):
            cand = self.tokens[i : i + length]
            if cand[-1] in DETERMINERS:
                continue
            if not any(w not in CLOSED_CLASS for w in cand):
                continue
            if any(self.lex.word_class(w) == WordClass.VERB for w in cand):
                continue
            follow = i + length
            if follow >= len(self.tokens):
                continue
            if self.tokens[follow] not in DETERMINERS | DEMONSTRATIVES:
                continue
            return self.canonical_prep(cand), follow
        return None

    @staticmethod
    def canonical_prep(cand: list[str]) -> str:
        if len(cand) >= 3 and cand[0] == "to" and cand[1] == "the":
            cand = cand[2:]
        elif len(cand) >= 2 and cand[0] == "to":
            cand = cand[1:]
        return " ".join(cand)

    @staticmethod
    def prep_scaffold(surface: list[str], canonical: str) -> list[str]:
        """Tokens stripped during canonicalization."""
        return surface[: len(surface) - len(canonical.split())]


def _note_np_unknowns(result: ParseResult, np: NounPhrase, lex: Lexicon) -> None:
    for word in np.attributes:
        if lex.word_class(word) is None and word not in GENERIC_HEADS:
            result.unknown_words.append((word, "attribute"))
    if np.head and np.head not in GENERIC_HEADS and lex.word_class(np.head) is None:
        result.unknown_words.append((np.head, "head"))
    if np.embedded_pp:
        prep, inner = np.embedded_pp
        if lex.word_class(prep) is None:
            result.unknown_words.append((prep, "preposition"))
        _note_np_unknowns(result, inner, lex)


def parse(text: str, lex: Lexicon) -> ParseResult:
    """Deterministically map an utterance to a categorized parse."""
    tokens = tokenize(text)
    p = _Parser(tokens, lex)

    if tuple(tokens) in {("yes",), ("no",)}:
        res = ParseResult(Category.YES_NO, tokens, yes=tokens[0] == "yes")
        res.structure_words = list(tokens)
        return res

    if tuple(tokens) in GET_NEXT_PHRASES:
        res = ParseResult(Category.GET_NEXT_TASK, tokens)
        res.structure_words = list(tokens)
        return res

    result = (
        _try_property_answer(p)
        or _try_attribute_query(p)
        or _try_spatial_query(p)
        or _try_goal_description(p)
        or _try_descriptive(p)
        or _try_verb_command(p)
        or _try_fragment(p)
    )
    if result is not None:
        return result

    res = ParseResult(Category.UNPARSEABLE, tokens)
    for tok in tokens:
        if tok in CLOSED_CLASS or tok in GENERIC_HEADS:
            res.structure_words.append(tok)
        elif lex.word_class(tok) is not None:
            res.structure_words.append(tok)
        else:
            res.unknown_words.append((tok, "unknown"))
            res.structure_words.append(tok)
    return res


def _try_property_answer(p: _Parser) -> Optional[ParseResult]:
    t = p.tokens
    # "color" | "a color" | "it is a color" | "orange is a color"
    if len(t) == 1 and t[0] in PROPERTY_NAMES:
        res = ParseResult(Category.PROPERTY_ANSWER, t, property_kind=PROPERTY_NAMES[t[0]])
        res.structure_words = list(t)
        return res
    if len(t) == 2 and t[0] == "a" and t[1] in PROPERTY_NAMES:
        res = ParseResult(Category.PROPERTY_ANSWER, t, property_kind=PROPERTY_NAMES[t[1]])
        res.structure_words = list(t)
        return res
    if len(t) == 4 and t[0] == "it" and t[1] == "is" and t[2] == "a" and t[3] in PROPERTY_NAMES:
        res = ParseResult(Category.PROPERTY_ANSWER, t, property_kind=PROPERTY_NAMES[t[3]])
        res.structure_words = list(t)
        return res
    if (
        len(t) == 4
        and t[1] == "is"
        and t[2] == "a"
        and t[3] in PROPERTY_NAMES
        and t[0] not in CLOSED_CLASS
    ):
        res = ParseResult(
            Category.PROPERTY_ANSWER,
            t,
            property_word=t[0],
            property_kind=PROPERTY_NAMES[t[3]],
        )
        res.structure_words = ["is", "a", t[3]]
        if p.lex.word_class(t[0]) is None:
            res.unknown_words.append((t[0], "predicate"))
        return res
    return None


def _try_attribute_query(p: _Parser) -> Optional[ParseResult]:
    t = p.tokens
    if len(t) < 4 or t[0] not in ("what", "which") or t[1] not in PROPERTY_NAMES:
        return None
    if t[2] != "is":
        return None
    np = p.parse_np(3, require_det=False, allow_pp=True)
    if np is None or np[1] != len(t):
        return None
    res = ParseResult(
        Category.ATTRIBUTE_QUERY,
        t,
        property_kind=PROPERTY_NAMES[t[1]],
        subject=np[0],
        gestural=np[0].gestural,
    )
    res.structure_words = [t[0], t[1], "is"]
    _note_np_unknowns(res, np[0], p.lex)
    return res


def _try_spatial_query(p: _Parser) -> Optional[ParseResult]:
    t = p.tokens
    # "what is <prep> <np>" -- enumeration query
    if len(t) >= 4 and t[0] == "what" and t[1] == "is":
        pp = p.parse_prep(2)
        if pp is not None:
            prep, j = pp
            np = p.parse_np(j, require_det=True)
            if np is not None and np[1] == len(t):
                res = ParseResult(
                    Category.SPATIAL_QUERY, t, prep=prep, object_np=np[0]
                )
                res.structure_words = ["what", "is"] + p.prep_scaffold(
                    t[2:j], prep
                )
                if p.lex.word_class(prep) is None:
                    res.unknown_words.append((prep, "preposition"))
                _note_np_unknowns(res, np[0], p.lex)
                return res
    # "is <np> <prep> <np>" -- yes/no query; the subject length is found by
    # backtracking because an unknown preposition looks like a content word
    if len(t) >= 5 and t[0] == "is":
        for max_words in range(len(t) - 3, 0, -1):
            subj = p.parse_np(1, require_det=False, max_words=max_words)
            if subj is None:
                return None
            pp = p.parse_prep(subj[1])
            if pp is None:
                continue
            prep, j = pp
            obj = p.parse_np(j, require_det=False)
            if obj is None or obj[1] != len(t):
                continue
            res = ParseResult(
                Category.SPATIAL_QUERY,
                t,
                prep=prep,
                subject=subj[0],
                object_np=obj[0],
            )
            res.structure_words = ["is"] + p.prep_scaffold(t[subj[1] : j], prep)
            if p.lex.word_class(prep) is None:
                res.unknown_words.append((prep, "preposition"))
            _note_np_unknowns(res, subj[0], p.lex)
            _note_np_unknowns(res, obj[0], p.lex)
            return res
    return None


def _try_goal_description(p: _Parser) -> Optional[ParseResult]:
    t = p.tokens
    if len(t) < 6 or t[0] != "the" or t[1] != "goal" or t[2] != "is":
        return None
    for max_words in range(len(t) - 4, 0, -1):
        subj = p.parse_np(3, require_det=True, max_words=max_words)
        if subj is None:
            return None
        pp = p.parse_prep(subj[1])
        if pp is None:
            continue
        prep, j = pp
        obj = p.parse_np(j, require_det=True)
        if obj is None or obj[1] != len(t):
            continue
        res = ParseResult(
            Category.GOAL_DESCRIPTION, t, prep=prep, subject=subj[0], object_np=obj[0]
        )
        res.structure_words = ["the", "goal", "is"] + p.prep_scaffold(t[subj[1] : j], prep)
        if p.lex.word_class(prep) is None:
            res.unknown_words.append((prep, "preposition"))
        _note_np_unknowns(res, subj[0], p.lex)
        _note_np_unknowns(res, obj[0], p.lex)
        return res
    return None


def _try_descriptive(p: _Parser) -> Optional[ParseResult]:
    t = p.tokens
    subj = p.parse_np(0, require_det=True)
    if subj is None:
        return None
    i = subj[1]
    if i >= len(t) or t[i] != "is":
        return None
    i += 1
    pp = p.parse_prep(i)
    if pp is not None:
        prep, j = pp
        obj = p.parse_np(j, require_det=False)
        if obj is not None and obj[1] == len(t):
            res = ParseResult(
                Category.DESCRIPTIVE,
                t,
                prep=prep,
                subject=subj[0],
                object_np=obj[0],
                gestural=subj[0].gestural,
            )
            res.structure_words = ["is"] + p.prep_scaffold(t[i:j], prep)
            if p.lex.word_class(prep) is None:
                res.unknown_words.append((prep, "preposition"))
            _note_np_unknowns(res, subj[0], p.lex)
            _note_np_unknowns(res, obj[0], p.lex)
            return res
    # "<np> is <word>" -- predicate adjective/noun teaching form
    if i == len(t) - 1 and p.is_content(t[i]) and t[i] not in GENERIC_HEADS:
        res = ParseResult(
            Category.DESCRIPTIVE,
            t,
            subject=subj[0],
            predicate_word=t[i],
            gestural=subj[0].gestural,
        )
        res.structure_words = ["is"]
        if p.lex.word_class(t[i]) is None:
            res.unknown_words.append((t[i], "predicate"))
        _note_np_unknowns(res, subj[0], p.lex)
        return res
    return None


def _try_verb_command(p: _Parser) -> Optional[ParseResult]:
    t = p.tokens
    verb = p.match_verb(0)
    if verb is None:
        return None
    verb_word, start = verb
    for max_words in range(len(t) - start, 0, -1):
        np = p.parse_np(start, require_det=False, max_words=max_words)
        if np is None:
            return None
        res = ParseResult(Category.VERB_COMMAND, t, verb=verb_word, direct_object=np[0])
        res.gestural = np[0].gestural
        i = np[1]
        ok = True
        while i < len(t):
            pp = p.parse_prep(i)
            if pp is None:
                ok = False
                break
            prep, j = pp
            inner = p.parse_np(j, require_det=False)
            if inner is None:
                ok = False
                break
            res.structure_words.extend(p.prep_scaffold(t[i:j], prep))
            res.pps.append((prep, inner[0]))
            if p.lex.word_class(prep) is None:
                res.unknown_words.append((prep, "preposition"))
            _note_np_unknowns(res, inner[0], p.lex)
            i = inner[1]
        if not ok:
            continue
        if p.lex.word_class(verb_word) is None:
            res.unknown_words.append((verb_word, "verb"))
        _note_np_unknowns(res, np[0], p.lex)
        return res
    return None


def _try_fragment(p: _Parser) -> Optional[ParseResult]:
    t = p.tokens
    np = p.parse_np(0, require_det=False, allow_pp=True)
    if np is None or np[1] != len(t):
        return None
    category = (
        Category.WHICH_ANSWER
        if np[0].gestural or np[0].head == "one"
        else Category.NP_FRAGMENT
    )
    res = ParseResult(category, t, subject=np[0], gestural=np[0].gestural)
    _note_np_unknowns(res, np[0], p.lex)
    return res


# --- generation --------------------------------------------------------------

TEMPLATES = {
    "ask_property": "Is {word} a color, size, or shape?",
    "ask_goal": "What is the goal of {verb}?",
    "ask_next_action": "What action should I take next?",
    "ask_which": "Which one is {np}?",
    "ask_prep_example": "I do not know what {prep} means. Please show me an example.",
    "ask_next_task": "Waiting for next task.",
    "answer_attribute": "It is {word}.",
    "answer_yes": "Yes.",
    "answer_no": "No.",
    "answer_unknown": "I do not know.",
    "answer_objects": "{listing}.",
    "answer_nothing": "Nothing.",
    "done": "Done.",
    "ok": "Okay.",
    "not_understood": "I do not understand.",
}


def generate(template: str, bindings: Optional[dict] = None) -> str:
    if template not in TEMPLATES:
        raise MissingBinding(f"unknown template {template!r}")
    try:
        return TEMPLATES[template].format(**(bindings or {}))
    except (KeyError, IndexError) as exc:
        raise MissingBinding(f"template {template!r} missing binding: {exc}") from exc
