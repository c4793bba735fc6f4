"""Evaluation protocols: interleaved train/test trials per concept category,
convergence detection, the combined learning curve, and scripted scenarios.

A trial presents every example of a category in random order, testing first
and teaching only on unknown or incorrect responses.  Trials repeat until
two successive trials score 100%, and all results average over independent
runs.  Reports are plain JSON-ready dicts; ``check_criteria`` applies the
pinned thresholds so the CLI can exit nonzero on regressions.
"""

from __future__ import annotations

import json
import time
from dataclasses import replace
from typing import Optional

import numpy as np

from .agent import Agent
from .instructor import PREP_SURFACE, ScriptedInstructor, VerbTask
from .spatial import Relation, extract_primitives
from .world import DEFAULT_PALETTE, Scene, SceneSpec, apply_action, generate_scene, PickUp

REPORT_VERSION = 1
CONVERGENCE_STREAK = 2

PREPOSITIONS = ("left of", "right of", "in front of", "behind", "near", "far from")
PREP_WORKSPACE = (2.0, 2.0, 0.5)

COMBINED_SHAPES = ("circle", "square", "rectangle")


def _word_property_table(palette=DEFAULT_PALETTE) -> dict[str, str]:
    table = {}
    for kind, prop in (("colors", "color"), ("sizes", "size"), ("shapes", "shape")):
        for entry in palette[kind]:
            table[entry["name"]] = prop
    return table


def _advance(agent: Agent) -> None:
    """Fresh observation noise without any world change."""
    agent.set_scene(replace(agent.scene, tick=agent.scene.tick + 1))


def _reply_kind(moves) -> tuple[str, Optional[str]]:
    for move in moves:
        if move.kind != "utterance":
            continue
        if move.template == "answer_attribute":
            return ("word", move.bindings["word"])
        if move.template == "answer_yes":
            return ("yes", None)
        if move.template == "answer_no":
            return ("no", None)
        if move.template == "answer_unknown":
            return ("unknown", None)
    return ("none", None)


class Stopwatch:
    def __init__(self):
        self.samples: list[float] = []

    def time(self, fn, *args, **kwargs):
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        self.samples.append(time.perf_counter() - start)
        return result

    def stats(self) -> dict:
        if not self.samples:
            return {"max_s": 0.0, "mean_s": 0.0, "count": 0}
        return {
            "max_s": max(self.samples),
            "mean_s": sum(self.samples) / len(self.samples),
            "count": len(self.samples),
        }


# ----------------------------------------------------------------------
# nouns / adjectives
# ----------------------------------------------------------------------

def _noun_scene(seed: int) -> Scene:
    """12 objects covering the full palette, assignments shuffled."""
    rng = np.random.default_rng(seed)
    colors = [c["name"] for c in DEFAULT_PALETTE["colors"]]
    sizes = [s["name"] for s in DEFAULT_PALETTE["sizes"]]
    shapes = [s["name"] for s in DEFAULT_PALETTE["shapes"]]
    assignment = [
        {
            "color": colors[i % len(colors)],
            "size": sizes[i % len(sizes)],
            "shape": shapes[i % len(shapes)],
        }
        for i in range(12)
    ]
    for key in ("color", "size", "shape"):
        values = [a[key] for a in assignment]
        rng.shuffle(values)
        for a, v in zip(assignment, values):
            a[key] = v
    return generate_scene(SceneSpec(objects=assignment, seed=seed))


def run_noun_property(prop: str, seed: int, max_trials: int = 40) -> dict:
    scene = _noun_scene(seed)
    agent = Agent(scene, seed=seed)
    instructor = ScriptedInstructor(agent, _word_property_table(), np.random.default_rng(seed))
    watch = Stopwatch()
    rng = np.random.default_rng(seed + 1)
    examples: dict[str, int] = {}
    trials = 0
    streak = 0
    while trials < max_trials and streak < CONVERGENCE_STREAK:
        trials += 1
        order = list(sorted(agent.scene.objects))
        rng.shuffle(order)
        correct = 0
        for obj_id in order:
            _advance(agent)
            truth = agent.scene.truth[obj_id][prop]
            moves = watch.time(instructor.say, f"What {prop} is this?", click=obj_id)
            kind, word = _reply_kind(moves)
            if kind == "word" and word == truth:
                correct += 1
            else:
                watch.time(instructor.say, f"This is {truth}.", click=obj_id)
                examples[truth] = examples.get(truth, 0) + 1
        streak = streak + 1 if correct == len(order) else 0
    # final accuracy: three sweeps with fresh noise, no teaching
    final_correct = 0
    final_total = 0
    for _ in range(3):
        for obj_id in sorted(agent.scene.objects):
            _advance(agent)
            truth = agent.scene.truth[obj_id][prop]
            moves = watch.time(instructor.say, f"What {prop} is this?", click=obj_id)
            kind, word = _reply_kind(moves)
            final_correct += kind == "word" and word == truth
            final_total += 1
    words = sorted({labels[prop] for labels in agent.scene.truth.values()})
    total_examples = sum(examples.get(w, 0) for w in words)
    return {
        "property": prop,
        "seed": seed,
        "trials": trials,
        "converged": streak >= CONVERGENCE_STREAK,
        "examples_per_word": examples,
        "avg_examples": total_examples / len(words),
        "final_accuracy": final_correct / final_total,
        "latency": watch.stats(),
    }


def run_nouns(seed: int, runs: int = 3) -> dict:
    start = time.perf_counter()
    by_property = {}
    for prop in ("color", "size", "shape"):
        prop_runs = [run_noun_property(prop, seed + 101 * r) for r in range(runs)]
        by_property[prop] = {
            "runs": prop_runs,
            "avg_examples": sum(r["avg_examples"] for r in prop_runs) / runs,
            "final_accuracy": sum(r["final_accuracy"] for r in prop_runs) / runs,
            "all_converged": all(r["converged"] for r in prop_runs),
        }
    return {
        "version": REPORT_VERSION,
        "category": "nouns",
        "seed": seed,
        "runs": runs,
        "by_property": by_property,
        "elapsed_s": time.perf_counter() - start,
        "latency_max_s": max(
            r["latency"]["max_s"] for p in by_property.values() for r in p["runs"]
        ),
    }


# ----------------------------------------------------------------------
# prepositions
# ----------------------------------------------------------------------

def _prep_oracle(prep: str, primary, reference) -> bool:
    relations, gaps = extract_primitives(primary, reference)
    if prep == "left of":
        return relations["x"] is Relation.LESS
    if prep == "right of":
        return relations["x"] is Relation.GREATER
    if prep == "in front of":
        return relations["y"] is Relation.LESS
    if prep == "behind":
        return relations["y"] is Relation.GREATER and relations["x"] is Relation.ALIGNED
    if prep == "near":
        return (
            max(gaps["x"], gaps["y"]) <= 0.12
            and not (relations["x"] is Relation.ALIGNED and relations["y"] is Relation.ALIGNED)
        )
    if prep == "far from":
        return gaps["x"] >= 0.30 and gaps["y"] >= 0.30
    raise ValueError(prep)


def _prep_arrangements(prep: str, rng: np.random.Generator) -> list[dict]:
    """24 arrangements: 12 representative positives, 12 boundary negatives.

    Blue (o2) is the primary, red (o1) the reference.  Direction prepositions
    spread their gaps so wide the distance window stays uninformative;
    near/far keep their distances tight so the window is the discriminator.
    """
    half = 0.06          # two small objects: sum of half-extents
    out = []

    def pose_for(ref, dx=0.0, dy=0.0):
        return (ref[0] + dx, ref[1] + dy)

    def clamped(p):
        return (min(max(p[0], 0.05), 1.95), min(max(p[1], 0.05), 1.95))

    side_offsets = [0.0, 0.28, -0.28, 0.14, -0.45, 0.45]

    for i in range(12):
        if prep in ("left of", "right of"):
            ref = (1.55, 1.0) if prep == "left of" else (0.45, 1.0)
            gap = 0.06 + (1.35 - 0.06) * (i / 11.0)
            sign = -1 if prep == "left of" else 1
            dy = side_offsets[i % len(side_offsets)]
            pose = pose_for(ref, sign * (half + gap), dy)
        elif prep == "in front of":
            ref = (1.0, 1.55)
            gap = 0.06 + (1.35 - 0.06) * (i / 11.0)
            pose = pose_for(ref, side_offsets[i % len(side_offsets)], -(half + gap))
        elif prep == "behind":
            ref = (1.0, 0.3)
            gap = 0.06 + (1.45 - 0.06) * (i / 11.0)
            pose = pose_for(ref, float(rng.uniform(-0.02, 0.02)), half + gap)
        elif prep == "near":
            ref = (1.0, 1.0)
            gap = float(rng.uniform(0.02, 0.09))
            side = ("+x", "-x", "+y", "-y", "diag")[i % 5]
            if side == "+x":
                pose = pose_for(ref, half + gap, float(rng.uniform(-0.05, 0.05)))
            elif side == "-x":
                pose = pose_for(ref, -(half + gap), float(rng.uniform(-0.05, 0.05)))
            elif side == "+y":
                pose = pose_for(ref, float(rng.uniform(-0.05, 0.05)), half + gap)
            elif side == "-y":
                pose = pose_for(ref, float(rng.uniform(-0.05, 0.05)), -(half + gap))
            else:
                g2 = float(rng.uniform(0.02, 0.08))
                pose = pose_for(ref, half + gap, half + g2)
        else:   # far from
            ref = (1.0, 1.0)
            gx = float(rng.uniform(0.32, 0.62))
            gy = float(rng.uniform(0.32, 0.62))
            sx = (1, -1, 1, -1)[i % 4]
            sy = (1, 1, -1, -1)[i % 4]
            pose = pose_for(ref, sx * (half + gx), sy * (half + gy))
        out.append({"prep": prep, "ref": ref, "pose": clamped(pose), "truth": True})

    for i in range(12):
        if prep in ("left of", "right of"):
            ref = (1.0, 1.0)
            if i % 2 == 0:
                pose = pose_for(ref, float(rng.uniform(-0.04, 0.04)),
                                (half + float(rng.uniform(0.1, 0.6))) * (1 if i % 4 else -1))
            else:
                sign = 1 if prep == "left of" else -1
                pose = pose_for(ref, sign * (half + float(rng.uniform(0.1, 0.9))),
                                float(rng.uniform(-0.3, 0.3)))
        elif prep == "in front of":
            ref = (1.0, 1.0)
            if i % 2 == 0:
                pose = pose_for(ref, (half + float(rng.uniform(0.1, 0.6))) * (1 if i % 4 else -1),
                                float(rng.uniform(-0.04, 0.04)))
            else:
                pose = pose_for(ref, float(rng.uniform(-0.3, 0.3)),
                                half + float(rng.uniform(0.1, 0.9)))
        elif prep == "behind":
            ref = (1.0, 0.5)
            if i % 2 == 0:
                # diagonally behind: y-greater but not directly aligned
                pose = pose_for(ref, (half + float(rng.uniform(0.08, 0.4))) * (1 if i % 4 else -1),
                                half + float(rng.uniform(0.1, 0.8)))
            else:
                pose = pose_for(ref, float(rng.uniform(-0.02, 0.02)),
                                -(half + float(rng.uniform(0.1, 0.4))))
        elif prep == "near":
            ref = (1.0, 1.0)
            gap = float(rng.uniform(0.30, 0.55))
            if i % 2 == 0:
                pose = pose_for(ref, half + gap, float(rng.uniform(-0.04, 0.04)))
            else:
                pose = pose_for(ref, float(rng.uniform(-0.04, 0.04)), -(half + gap))
        else:   # far from: too close on at least one axis
            ref = (1.0, 1.0)
            gx = float(rng.uniform(0.02, 0.12))
            gy = float(rng.uniform(0.02, 0.12))
            if i % 3 == 0:
                pose = pose_for(ref, half + gx, half + gy)
            elif i % 3 == 1:
                pose = pose_for(ref, half + gx, half + float(rng.uniform(0.35, 0.6)))
            else:
                pose = pose_for(ref, float(rng.uniform(-0.04, 0.04)), half + gy)
        out.append({"prep": prep, "ref": ref, "pose": clamped(pose), "truth": False})
    return out


def _arrangement_scene(arrangement: dict, seed: int) -> Scene:
    spec = SceneSpec(
        objects=[
            {"color": "red", "size": "small", "shape": "square",
             "pose": list(arrangement["ref"])},
            {"color": "blue", "size": "small", "shape": "square",
             "pose": list(arrangement["pose"])},
        ],
        workspace=PREP_WORKSPACE,
        locations={},
        seed=seed,
    )
    return generate_scene(spec)


def run_prepositions(seed: int, runs: int = 3, max_trials: int = 12) -> dict:
    start = time.perf_counter()
    run_reports = []
    for r in range(runs):
        run_seed = seed + 211 * r
        rng = np.random.default_rng(run_seed)
        arrangements = []
        for prep in PREPOSITIONS:
            arrangements.extend(_prep_arrangements(prep, rng))
        agent = Agent(_arrangement_scene(arrangements[0], run_seed), seed=run_seed)
        instructor = ScriptedInstructor(
            agent, _word_property_table(), np.random.default_rng(run_seed)
        )
        watch = Stopwatch()
        for obj_id, word in (("o1", "red"), ("o2", "blue")):
            watch.time(instructor.say, f"This is {word}.", click=obj_id)
        examples = {prep: 0 for prep in PREPOSITIONS}
        tick = 0
        trials = 0
        streak = 0

        def present(arrangement, teach: bool) -> bool:
            nonlocal tick
            tick += 1
            agent.set_scene(_arrangement_scene(arrangement, run_seed + tick))
            prep = arrangement["prep"]
            surface = PREP_SURFACE[prep]
            moves = watch.time(
                instructor.say, f"Is the blue object {surface} the red object?"
            )
            kind, _ = _reply_kind(moves)
            answer = {"yes": True, "no": False}.get(kind)
            correct = answer == arrangement["truth"]
            if not correct and teach:
                if arrangement["truth"]:
                    watch.time(
                        instructor.say, f"The blue object is {surface} the red object."
                    )
                    examples[prep] += 1
                else:
                    watch.time(instructor.say, "No.")
            return correct

        while trials < max_trials and streak < CONVERGENCE_STREAK:
            trials += 1
            order = list(range(len(arrangements)))
            rng.shuffle(order)
            correct = sum(present(arrangements[i], teach=True) for i in order)
            streak = streak + 1 if correct == len(arrangements) else 0
        final_correct = sum(present(a, teach=False) for a in arrangements)
        run_reports.append(
            {
                "seed": run_seed,
                "trials": trials,
                "converged": streak >= CONVERGENCE_STREAK,
                "examples_per_prep": examples,
                "avg_examples": sum(examples.values()) / len(PREPOSITIONS),
                "final_accuracy": final_correct / len(arrangements),
                "latency": watch.stats(),
            }
        )
    return {
        "version": REPORT_VERSION,
        "category": "prepositions",
        "seed": seed,
        "runs": runs,
        "run_reports": run_reports,
        "avg_examples": sum(r["avg_examples"] for r in run_reports) / runs,
        "final_accuracy": sum(r["final_accuracy"] for r in run_reports) / runs,
        "all_converged": all(r["converged"] for r in run_reports),
        "avg_examples_near": sum(r["examples_per_prep"]["near"] for r in run_reports) / runs,
        "avg_examples_behind": sum(r["examples_per_prep"]["behind"] for r in run_reports) / runs,
        "elapsed_s": time.perf_counter() - start,
        "latency_max_s": max(r["latency"]["max_s"] for r in run_reports),
    }


# ----------------------------------------------------------------------
# verbs
# ----------------------------------------------------------------------

VERB_TEMPLATES = (
    {"name": "move-in", "verb": "move", "prep": "in", "refs": "locations"},
    {"name": "move-left", "verb": "move", "prep": "left of", "refs": "any"},
    {"name": "move-right", "verb": "move", "prep": "right of", "refs": "any"},
    {"name": "store", "verb": "store", "prep": None, "goal": ("in", "pantry")},
    {"name": "discard", "verb": "discard", "prep": None, "goal": ("in", "garbage")},
)

VERB_COLORS = ("red", "blue", "green", "orange")

# verb scenes use a roomier table with interior regions so any directional
# goal relative to any location stays physically realizable
VERB_WORKSPACE = (2.0, 2.0, 0.5)
VERB_LOCATIONS = {
    "stove": (0.45, 0.45, 0.75, 0.75),
    "dishwasher": (1.25, 0.45, 1.55, 0.75),
    "garbage": (0.45, 1.25, 0.75, 1.55),
    "pantry": (1.25, 1.25, 1.55, 1.55),
}


def _verb_scene(seed: int) -> Scene:
    objects = [
        {"color": c, "size": "small", "shape": "square"} for c in VERB_COLORS
    ] + [
        {"color": c, "size": "large", "shape": "square"} for c in VERB_COLORS
    ]
    # park one small object in the stove so containment can be demonstrated;
    # everything else spawns outside the regions so goals start unsatisfied
    objects[0] = dict(objects[0], pose=[0.52, 0.52])
    return generate_scene(
        SceneSpec(
            objects=objects, seed=seed,
            workspace=VERB_WORKSPACE, locations=dict(VERB_LOCATIONS),
            avoid_regions=True, spawn_margin=0.4,
        )
    )


def _teach_verb_vocabulary(agent: Agent, instructor: ScriptedInstructor, watch: Stopwatch):
    for obj_id in sorted(agent.scene.objects):
        labels = agent.scene.truth[obj_id]
        for prop in ("color", "size"):
            watch.time(instructor.say, f"This is {labels[prop]}.", click=obj_id)


def _instantiate(template: dict, rng: np.random.Generator, scene: Scene) -> VerbTask:
    for _ in range(24):
        task = _instantiate_once(template, rng, scene)
        if not _goal_satisfied(scene, task):
            return task
    return task


def _instantiate_once(template: dict, rng: np.random.Generator, scene: Scene) -> VerbTask:
    smalls = [oid for oid, t in sorted(scene.truth.items()) if t["size"] == "small"]
    larges = [oid for oid, t in sorted(scene.truth.items()) if t["size"] == "large"]
    primary = smalls[int(rng.integers(len(smalls)))]
    do_text = f"small {scene.truth[primary]['color']} object"
    if template["prep"] is None:
        relation, loc = template["goal"]
        command = f"{template['verb'].capitalize()} the {do_text}."
        return VerbTask(
            verb=template["verb"], command=command, primary=primary,
            relation=relation, reference=("location", loc),
            do_text=do_text, ref_text=f"the {loc}",
        )
    prep = template["prep"]
    locations = sorted(scene.locations)
    if template["refs"] == "locations" or rng.uniform() < 0.5:
        loc = locations[int(rng.integers(len(locations)))]
        reference = ("location", loc)
        ref_text = f"the {loc}"
    else:
        ref = larges[int(rng.integers(len(larges)))]
        reference = ("object", ref)
        ref_text = f"the large {scene.truth[ref]['color']} object"
    surface = PREP_SURFACE[prep]
    command = f"{template['verb'].capitalize()} the {do_text} {surface} {ref_text}."
    return VerbTask(
        verb=template["verb"], command=command, primary=primary,
        relation=prep, reference=reference, do_text=do_text, ref_text=ref_text,
    )


def _goal_satisfied(scene: Scene, task: VerbTask) -> bool:
    primary = scene.objects[task.primary]
    if scene.arm.holding == task.primary:
        return False
    reference = (
        scene.locations[task.reference[1]]
        if task.reference[0] == "location"
        else scene.objects[task.reference[1]]
    )
    relations, _ = extract_primitives(primary, reference)
    if task.relation == "in":
        # containment means overlapping the region on both table axes
        return relations["x"] is Relation.ALIGNED and relations["y"] is Relation.ALIGNED
    if task.relation == "left of":
        return relations["x"] is Relation.LESS
    if task.relation == "right of":
        return relations["x"] is Relation.GREATER
    raise ValueError(task.relation)


def _run_task(agent, instructor, watch, task: VerbTask, arm: Optional[str], scene_seed: int):
    """Issue one command in a fresh arrangement; returns (correct, utterances)."""
    scene = _verb_scene(scene_seed)
    if arm is not None:
        scene = apply_action(scene, PickUp(arm))
    agent.set_scene(scene)
    instructor.begin_task(task)
    before = instructor.log.utterances
    asks_before = instructor.log.agent_asks
    watch.time(instructor.say, task.command)
    instructor.end_task()
    utterances = instructor.log.utterances - before
    asks = instructor.log.agent_asks - asks_before
    return _goal_satisfied(agent.scene, task), utterances, asks


def run_verbs(seed: int, runs: int = 3, max_trials: int = 15, superfluous_rate: float = 0.3) -> dict:
    start = time.perf_counter()
    run_reports = []
    for r in range(runs):
        run_seed = seed + 307 * r
        rng = np.random.default_rng(run_seed)
        agent = Agent(_verb_scene(run_seed), seed=run_seed)
        instructor = ScriptedInstructor(
            agent, _word_property_table(), np.random.default_rng(run_seed),
            superfluous_rate=superfluous_rate,
        )
        watch = Stopwatch()
        _teach_verb_vocabulary(agent, instructor, watch)
        examples = {t["name"]: 0 for t in VERB_TEMPLATES}
        trials = 0
        streak = 0
        scene_tick = 0
        while trials < max_trials and streak < CONVERGENCE_STREAK:
            trials += 1
            order = list(VERB_TEMPLATES)
            rng.shuffle(order)
            all_ok = True
            for index, template in enumerate(order):
                scene_tick += 1
                scene = _verb_scene(run_seed + scene_tick)
                task = _instantiate(template, rng, scene)
                # alternate the arm initialization so both states get exercised
                arm = task.primary if (trials + index) % 2 else None
                ok, utterances, _ = _run_task(
                    agent, instructor, watch, task, arm, run_seed + scene_tick
                )
                if utterances > 1 or not ok:
                    examples[template["name"]] += 1
                    all_ok = False
            streak = streak + 1 if all_ok else 0
        # five random instantiations of every template must run silently
        test_ok = 0
        test_total = 0
        for template in VERB_TEMPLATES:
            for k in range(5):
                scene_tick += 1
                scene = _verb_scene(run_seed + scene_tick)
                task = _instantiate(template, rng, scene)
                arm = task.primary if k % 2 else None
                ok, utterances, _ = _run_task(
                    agent, instructor, watch, task, arm, run_seed + scene_tick
                )
                test_total += 1
                test_ok += ok and utterances == 1
        point_to_rules = sum(r.action[0] == "point-to" for r in agent.rules)
        run_reports.append(
            {
                "seed": run_seed,
                "trials": trials,
                "converged": streak >= CONVERGENCE_STREAK,
                "examples_per_template": examples,
                "avg_examples": sum(examples.values()) / len(VERB_TEMPLATES),
                "instantiation_tests_passed": test_ok,
                "instantiation_tests_total": test_total,
                "superfluous_injected": instructor.log.superfluous,
                "point_to_rules": point_to_rules,
                "latency": watch.stats(),
            }
        )
    return {
        "version": REPORT_VERSION,
        "category": "verbs",
        "seed": seed,
        "runs": runs,
        "run_reports": run_reports,
        "avg_examples": sum(r["avg_examples"] for r in run_reports) / runs,
        "all_converged": all(r["converged"] for r in run_reports),
        "all_instantiations_correct": all(
            r["instantiation_tests_passed"] == r["instantiation_tests_total"]
            for r in run_reports
        ),
        "superfluous_injected_total": sum(r["superfluous_injected"] for r in run_reports),
        "point_to_rules_total": sum(r["point_to_rules"] for r in run_reports),
        "elapsed_s": time.perf_counter() - start,
        "latency_max_s": max(r["latency"]["max_s"] for r in run_reports),
    }


def run_move_right_exhaustive(seed: int) -> dict:
    """Teach move-right-of from few examples, then execute every instantiation:
    4 primaries x 8 references x 2 arm states."""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    agent = Agent(_verb_scene(seed), seed=seed)
    instructor = ScriptedInstructor(agent, _word_property_table(), np.random.default_rng(seed))
    watch = Stopwatch()
    _teach_verb_vocabulary(agent, instructor, watch)
    template = VERB_TEMPLATES[2]
    teaching_examples = 0
    scene_tick = 0
    # teach until a probe instantiation runs silently
    for _ in range(6):
        scene_tick += 1
        scene = _verb_scene(seed + scene_tick)
        task = _instantiate(template, rng, scene)
        ok, utterances, _ = _run_task(agent, instructor, watch, task, None, seed + scene_tick)
        if utterances > 1 or not ok:
            teaching_examples += 1
        else:
            break
    passed = 0
    cases = []
    smalls = [oid for oid, t in sorted(agent.scene.truth.items()) if t["size"] == "small"]
    larges = [oid for oid, t in sorted(agent.scene.truth.items()) if t["size"] == "large"]
    for primary in smalls:
        refs = [("location", name) for name in sorted(_verb_scene(seed).locations)] + [
            ("object", ref) for ref in larges
        ]
        for reference in refs:
            for arm in (None, primary):
                scene_tick += 1
                scene = _verb_scene(seed + scene_tick)
                do_text = f"small {scene.truth[primary]['color']} object"
                ref_text = (
                    f"the {reference[1]}"
                    if reference[0] == "location"
                    else f"the large {scene.truth[reference[1]]['color']} object"
                )
                task = VerbTask(
                    verb="move",
                    command=f"Move the {do_text} to the right of {ref_text}.",
                    primary=primary, relation="right of", reference=reference,
                    do_text=do_text, ref_text=ref_text,
                )
                ok, utterances, _ = _run_task(
                    agent, instructor, watch, task, arm, seed + scene_tick
                )
                cases.append(ok and utterances == 1)
                passed += cases[-1]
    return {
        "version": REPORT_VERSION,
        "category": "move-right-exhaustive",
        "seed": seed,
        "teaching_examples": teaching_examples,
        "cases_total": len(cases),
        "cases_passed": passed,
        "elapsed_s": time.perf_counter() - start,
        "latency_max_s": watch.stats()["max_s"],
    }


# ----------------------------------------------------------------------
# combined learning curve
# ----------------------------------------------------------------------

def _combined_palette() -> dict:
    # single, well-separated descriptor per shape: the combined protocol
    # measures interaction dynamics, not perceptual difficulty
    palette = json.loads(json.dumps(DEFAULT_PALETTE))
    combined_variants = {
        "circle": [0.94, 0.97, 0.97],
        "square": [0.03, 0.97, 0.03],
        "rectangle": [0.97, 0.03, 0.03],
    }
    palette["shapes"] = [
        {"name": name, "variants": [desc],
         "aspect": 0.5 if name == "rectangle" else 1.0}
        for name, desc in combined_variants.items()
    ]
    return palette


def _combined_scene(seed: int, layout_seed: Optional[int] = None) -> Scene:
    # the label layout is fixed per run (word coverage follows the command
    # plan); only the placements vary from command to command
    layout_rng = np.random.default_rng(seed if layout_seed is None else layout_seed)
    palette = _combined_palette()
    combos = [
        {"color": c["name"], "size": s["name"], "shape": h["name"]}
        for c in palette["colors"]
        for s in palette["sizes"]
        for h in palette["shapes"]
    ]
    idx = layout_rng.permutation(len(combos))[:12]
    objects = [dict(combos[i]) for i in idx]
    objects[0]["pose"] = [0.52, 0.52]   # containment demo material in the stove
    return generate_scene(
        SceneSpec(
            objects=objects, palette=palette, seed=seed,
            workspace=VERB_WORKSPACE, locations=dict(VERB_LOCATIONS),
            avoid_regions=True, spawn_margin=0.4,
        )
    )


def _combined_commands(scene: Scene, rng: np.random.Generator, count: int) -> list[dict]:
    """Command plan: reference every object before the tail of the sequence,
    cover all verb signatures, lead with a rich move command."""
    obj_ids = sorted(scene.objects)
    order = list(obj_ids)
    rng.shuffle(order)
    verbs = ["move-left", "store", "move-in", "discard", "move-right"]
    plan = []
    for i in range(count):
        obj = order[i % len(order)]
        verb = verbs[i % len(verbs)] if i > 0 else "move-left"
        plan.append({"object": obj, "template": verb})
    return plan


def run_combined(seed: int, runs: int = 3, commands: int = 20) -> dict:
    start = time.perf_counter()
    run_reports = []
    for r in range(runs):
        run_seed = seed + 401 * r
        rng = np.random.default_rng(run_seed)
        scene = _combined_scene(run_seed)
        agent = Agent(scene, seed=run_seed)
        word_property = _word_property_table(_combined_palette())
        instructor = ScriptedInstructor(
            agent, word_property, np.random.default_rng(run_seed)
        )
        watch = Stopwatch()
        plan = _combined_commands(scene, rng, commands)
        curve = []
        for i, step in enumerate(plan):
            scene = _combined_scene(run_seed + 37 * (i + 1), layout_seed=run_seed)
            labels = {oid: scene.truth[oid] for oid in scene.objects}
            obj = step["object"]
            t = labels[obj]
            do_text = f"{t['size']} {t['color']} {t['shape']}"
            locations = sorted(scene.locations)
            loc = locations[int(rng.integers(len(locations)))]
            template = step["template"]
            if template == "store":
                task = VerbTask(
                    verb="store", command=f"Store the {do_text}.", primary=obj,
                    relation="in", reference=("location", "pantry"),
                    do_text=do_text, ref_text="the pantry",
                )
            elif template == "discard":
                task = VerbTask(
                    verb="discard", command=f"Discard the {do_text}.", primary=obj,
                    relation="in", reference=("location", "garbage"),
                    do_text=do_text, ref_text="the garbage",
                )
            else:
                prep = {"move-in": "in", "move-left": "left of", "move-right": "right of"}[template]
                surface = PREP_SURFACE[prep]
                task = VerbTask(
                    verb="move",
                    command=f"Move the {do_text} {surface} the {loc}.",
                    primary=obj, relation=prep, reference=("location", loc),
                    do_text=do_text, ref_text=f"the {loc}",
                )
            agent.set_scene(scene)
            instructor.begin_task(task)
            before = instructor.log.utterances
            asks_before = instructor.log.agent_asks
            watch.time(instructor.say, task.command)
            instructor.end_task()
            curve.append(
                {
                    "command": task.command,
                    "instructor_utterances": instructor.log.utterances - before,
                    "agent_asks": instructor.log.agent_asks - asks_before,
                    "goal_satisfied": _goal_satisfied(agent.scene, task),
                }
            )
        run_reports.append(
            {
                "seed": run_seed,
                "curve": curve,
                "first_command_asks": curve[0]["agent_asks"],
                "final_utterances": [c["instructor_utterances"] for c in curve[-3:]],
                "latency": watch.stats(),
            }
        )
    return {
        "version": REPORT_VERSION,
        "category": "combined",
        "seed": seed,
        "runs": runs,
        "run_reports": run_reports,
        "min_first_command_asks": min(r["first_command_asks"] for r in run_reports),
        "all_final_single_utterance": all(
            u == 1 for r in run_reports for u in r["final_utterances"]
        ),
        "elapsed_s": time.perf_counter() - start,
        "latency_max_s": max(r["latency"]["max_s"] for r in run_reports),
    }


# ----------------------------------------------------------------------
# scripted scenarios
# ----------------------------------------------------------------------

class AssertionFailure(AssertionError):
    pass


def run_scenario(script: dict) -> dict:
    """Replay a fixed utterance/click sequence, checking expectations as we go."""
    scene = generate_scene(SceneSpec.from_json(script["scene"]))
    agent = Agent(scene, seed=script.get("agent_seed", 0))
    transcript = []
    for i, step in enumerate(script.get("steps", [])):
        moves = agent.submit_utterance(step.get("say", ""), click=step.get("click"))
        said = [m.text for m in moves if m.kind == "utterance"]
        acted = [m.action.__class__.__name__ for m in moves if m.kind == "external"]
        transcript.append({"step": i, "say": step.get("say"), "agent": said, "actions": acted})
        if "expect_agent" in step and said != step["expect_agent"]:
            raise AssertionFailure(
                f"step {i}: expected {step['expect_agent']}, agent said {said}"
            )
        if "expect_stack" in step and agent.stack.ids() != step["expect_stack"]:
            raise AssertionFailure(
                f"step {i}: expected stack {step['expect_stack']}, got {agent.stack.ids()}"
            )
        if "expect_actions" in step and acted != step["expect_actions"]:
            raise AssertionFailure(
                f"step {i}: expected actions {step['expect_actions']}, got {acted}"
            )
    if "expect_learning" in script:
        kinds = [
            e.payload["learning_kind"] for e in agent.transcript if e.kind == "learning"
        ]
        if kinds != script["expect_learning"]:
            raise AssertionFailure(
                f"learning events {kinds} != expected {script['expect_learning']}"
            )
    for final in script.get("expect_final", []):
        obj = agent.scene.objects[final["object"]]
        loc = agent.scene.locations[final["in"]]
        if not loc.contains_xy(obj.pose[0], obj.pose[1]):
            raise AssertionFailure(f"{final['object']} is not inside {final['in']}")
    return {
        "ok": True,
        "transcript": transcript,
        "events": [e.to_json() for e in agent.transcript],
        "segments": {s.id: s.purpose.value for s in agent.stack.segments.values()},
    }


# ----------------------------------------------------------------------
# acceptance thresholds
# ----------------------------------------------------------------------

def check_criteria(reports: dict) -> list[dict]:
    """Apply the pinned acceptance thresholds to category reports."""
    checks = []

    def add(name, passed, detail):
        checks.append({"criterion": name, "passed": bool(passed), "detail": detail})

    if "nouns" in reports:
        nouns = reports["nouns"]
        color = nouns["by_property"]["color"]
        size = nouns["by_property"]["size"]
        shape = nouns["by_property"]["shape"]
        add(
            "color: converges with <= 1.5 examples/color in < 10 s",
            color["all_converged"] and color["avg_examples"] <= 1.5
            and nouns["elapsed_s"] < 10.0,
            f"avg={color['avg_examples']:.2f}, elapsed={nouns['elapsed_s']:.1f}s",
        )
        add(
            "size: <= 2.5 examples/size",
            size["all_converged"] and size["avg_examples"] <= 2.5,
            f"avg={size['avg_examples']:.2f}",
        )
        add(
            "shape: converges, > 3x color examples, accuracy >= 95%",
            shape["all_converged"]
            and shape["avg_examples"] > 3.0 * color["avg_examples"]
            and shape["final_accuracy"] >= 0.95,
            f"shape avg={shape['avg_examples']:.2f} vs color avg={color['avg_examples']:.2f}, "
            f"accuracy={shape['final_accuracy']:.3f}",
        )
        add(
            "difficulty ordering shape > size >= color",
            shape["avg_examples"] > size["avg_examples"] >= color["avg_examples"],
            f"{shape['avg_examples']:.2f} > {size['avg_examples']:.2f} "
            f">= {color['avg_examples']:.2f}",
        )
    if "prepositions" in reports:
        preps = reports["prepositions"]
        add(
            "prepositions: >= 93% of 144 with <= 5 examples/prep",
            preps["final_accuracy"] >= 0.93 and preps["avg_examples"] <= 5.0
            and preps["all_converged"],
            f"accuracy={preps['final_accuracy']:.3f}, avg={preps['avg_examples']:.2f}",
        )
        add(
            "near needs more examples than behind; behind needs one",
            preps["avg_examples_near"] > preps["avg_examples_behind"]
            and preps["avg_examples_behind"] == 1.0,
            f"near={preps['avg_examples_near']:.2f}, behind={preps['avg_examples_behind']:.2f}",
        )
    if "verbs" in reports:
        verbs = reports["verbs"]
        add(
            "verbs: <= 2 examples/template, all instantiations correct",
            verbs["avg_examples"] <= 2.0 and verbs["all_converged"]
            and verbs["all_instantiations_correct"],
            f"avg={verbs['avg_examples']:.2f}",
        )
        add(
            "superfluous actions never compiled into rules",
            verbs["superfluous_injected_total"] > 0 and verbs["point_to_rules_total"] == 0,
            f"injected={verbs['superfluous_injected_total']}, "
            f"point-to rules={verbs['point_to_rules_total']}",
        )
    if "move_right" in reports:
        move = reports["move_right"]
        add(
            "move-right-of: <= 2 teaching examples cover all 64 instantiations",
            move["teaching_examples"] <= 2 and move["cases_passed"] == move["cases_total"] == 64,
            f"examples={move['teaching_examples']}, "
            f"passed={move['cases_passed']}/{move['cases_total']}",
        )
    if "combined" in reports:
        combined = reports["combined"]
        add(
            "combined: first command triggers >= 10 agent asks",
            combined["min_first_command_asks"] >= 10,
            f"min first-command asks={combined['min_first_command_asks']}",
        )
        add(
            "combined: last three commands need exactly one utterance",
            combined["all_final_single_utterance"],
            str([r["final_utterances"] for r in combined["run_reports"]]),
        )
    latencies = [rep.get("latency_max_s", 0.0) for rep in reports.values()]
    if latencies:
        add(
            "reactivity: every internal response under 1.1 s",
            max(latencies) < 1.1,
            f"worst={max(latencies):.3f}s",
        )
    return checks


def run_category(category: str, seed: int, runs: int = 3) -> dict:
    if category == "nouns":
        return run_nouns(seed, runs)
    if category == "prepositions":
        return run_prepositions(seed, runs)
    if category == "verbs":
        report = run_verbs(seed, runs)
        report["move_right"] = run_move_right_exhaustive(seed + 991)
        return report
    if category == "combined":
        return run_combined(seed, runs)
    raise ValueError(f"unknown category {category!r}")
