"""Interactive grounded word learning in a simulated tabletop world.

An instructable agent learns nouns/adjectives (per-property incremental KNN
over percept features), spatial prepositions (per-axis relation compositions
with distance statistics), and action verbs (demonstration replay compiled
into selection rules) through mixed-initiative dialog with an instructor.
"""

from .agent import Agent, GroundedCommand, Impasse, LearnedRule
from .dialog import AgentMove, InteractionStack, Purpose, Segment
from .language import Lexicon, ParseResult, generate, parse
from .memory import ActionConceptNetwork, EpisodicMemory, PrepMap, SemanticMemory, WordMap
from .perception import PerceptSymbol, PropertyClassifier, PropertyKind, SymbolFactory
from .spatial import Relation, SpatialComposition, evaluate, extract_primitives, learn_example, project
from .world import (
    ArmState,
    NamedLocation,
    PickUp,
    PointTo,
    PutDown,
    Scene,
    SceneSpec,
    WorldObject,
    apply_action,
    generate_scene,
    observe,
)

__version__ = "0.1.0"
